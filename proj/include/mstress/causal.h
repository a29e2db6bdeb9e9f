// Copyright 2026 The mstress Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Propensity-score stratification study.
//
// Pre-boundary covariates feed a logistic propensity model. Scores are
// binned into equal-width strata over [0, 1]; users outside mean +- 2 sd of
// the pooled scores are trimmed and strata with fewer than 50 users in
// either group are dropped. For an outcome S (a lexicon category's token
// share in a window) each retained stratum k contributes
//
//   TE_k = mean_{i in minority_k}(S_i^during - S_i^before)
//        - mean_{j in control_k}(S_j^during - S_j^before)
//
// and the study effect is the unweighted mean of TE_k over retained strata.

#ifndef MSTRESS_CAUSAL_H_
#define MSTRESS_CAUSAL_H_

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mstress/corpus.h"
#include "mstress/featurize.h"
#include "mstress/models.h"

namespace mstress::causal {

inline constexpr int kMinority = 1;
inline constexpr int kControl = 0;

struct Readability {
  double flesch_reading_ease = 0.0;
  double flesch_kincaid_grade = 0.0;
  double mean_word_length = 0.0;     // code points per word
  double mean_sentence_length = 0.0;  // words per sentence

  std::array<double, 4> values() const {
    return {flesch_reading_ease, flesch_kincaid_grade, mean_word_length,
            mean_sentence_length};
  }
};

// Vowel groups (a e i o u y), a trailing silent 'e' dropped (but not in a
// consonant + "le" ending), minimum 1.
size_t count_syllables(std::string_view word);

// Words are tokens containing at least one letter. Sentences end at '.',
// '!', '?' or a newline. Empty text yields all zeros.
Readability readability(std::string_view text);

inline constexpr size_t kSocialCovariates = 6;
inline constexpr size_t kReadabilityCovariates = 4;

struct CovariateVector {
  // n_tweets, n_likes, n_followers, n_followees, account_age_days,
  // posting_freq_per_day
  std::array<double, kSocialCovariates> social{};
  std::vector<double> unigram_dist;
  std::vector<double> lexicon_dist;
  std::array<double, kReadabilityCovariates> readability{};

  std::vector<double> flatten() const;
};

std::vector<std::string> covariate_names(std::span<const std::string> unigrams,
                                         const featurize::CategoryLexicon& lexicon);

// Study-wide top-k unigrams over the given pre-period timelines.
std::vector<std::string> top_unigrams(std::span<const corpus::Timeline> timelines,
                                      size_t k = 500);

// `pre` must hold only posts before `boundary` (DataError otherwise).
// posting_freq = |pre| / max(1, days between first and last pre post);
// account_age_days is measured at the boundary.
CovariateVector build_covariates(const corpus::UserRecord& user,
                                 const corpus::Timeline& pre,
                                 std::span<const std::string> unigrams,
                                 const featurize::CategoryLexicon& lexicon,
                                 text::UnixSeconds boundary);

// Logistic propensity of membership in the minority group (1).
std::vector<double> fit_propensity(const models::Matrix& covariates,
                                   std::span<const int> groups,
                                   const models::TrainConfig& config);

struct StratifyConfig {
  size_t n_strata = 100;
  double trim_sd = 2.0;
  size_t min_per_group = 50;

  void validate() const;
};

enum class UserStatus { kRetained, kTrimmed, kDroppedStratum };

const char* to_string(UserStatus status);

struct StratifiedUser {
  double score = 0.0;
  size_t stratum = 0;
  int group = kControl;
  UserStatus status = UserStatus::kRetained;
};

struct Stratification {
  StratifyConfig config;
  std::vector<StratifiedUser> users;
  double score_mean = 0.0;
  double score_sd = 0.0;  // sample sd of the pooled scores
  double trim_low = 0.0;
  double trim_high = 0.0;
  std::vector<size_t> retained_strata;  // ascending
  size_t retained_minority = 0;
  size_t retained_control = 0;

  // Users of `group` in stratum `k` that are retained, in index order.
  std::vector<size_t> members(size_t stratum, int group) const;
};

// floor(score * n_strata) clamped to n_strata - 1, with the floor corrected
// so a score on a bin edge (0.29) lands in the upper bin (29).
size_t stratum_of(double score, size_t n_strata);

// Throws DegenerateError("no overlap") when no stratum survives.
Stratification stratify(std::span<const double> scores,
                        std::span<const int> groups,
                        const StratifyConfig& config = {});

inline constexpr double kBalanceThreshold = 0.2;

// (mean_a - mean_b) / sqrt((var_a + var_b) / 2) with n-1 variances. 0 when
// the pooled sd is zero and the means agree; nullopt (degenerate) when it is
// zero and they differ. Throws DataError when a list has < 2 values.
std::optional<double> smd(std::span<const double> a, std::span<const double> b);

struct CovariateBalance {
  std::string name;
  std::optional<double> before;  // all users, unmatched
  std::optional<double> within;  // stratum-weighted over retained strata
};

struct BalanceReport {
  std::vector<CovariateBalance> rows;
  double max_abs_before = 0.0;
  double mean_abs_before = 0.0;
  double max_abs_within = 0.0;
  double mean_abs_within = 0.0;
  size_t degenerate_before = 0;
  size_t degenerate_within = 0;

  bool balanced() const { return max_abs_within < kBalanceThreshold; }
};

// The within-strata SMD of a covariate is
//   sum_k w_k (mean_minority_k - mean_control_k) / s_pool
// with w_k the stratum's share of retained users and s_pool the pooled sd
// of the retained users.
BalanceReport balance_report(const models::Matrix& covariates,
                             std::span<const std::string> names,
                             const Stratification& strat);

struct OutcomeMeasurement {
  std::string user_id;
  std::string outcome;
  double before = 0.0;
  double during = 0.0;

  double delta() const { return during - before; }
};

// Differences are accumulated in ascending user-id order within each group.
// Throws DataError when a group is empty.
double stratum_te(std::span<const OutcomeMeasurement> minority,
                  std::span<const OutcomeMeasurement> control);

// Unweighted mean of the per-stratum effects, or weighted by `weights`
// (stratum sizes) when given.
double mean_te(std::span<const double> stratum_effects,
               std::span<const double> weights = {});

// (mean_a - mean_b) / s_p, s_p the df-weighted pooled sd. nullopt when
// s_p is zero. Throws DataError when a list has < 2 values.
std::optional<double> cohens_d(std::span<const double> a,
                               std::span<const double> b);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
};

// Throws DegenerateError when both variances are zero, DataError when a
// list has < 2 values.
WelchResult welch_t(std::span<const double> a, std::span<const double> b);

// min(1, p * m); m defaults to the number of p values.
std::vector<double> bonferroni(std::span<const double> p_values,
                               std::optional<size_t> m = std::nullopt);

// "***" p < 0.001, "**" p < 0.01, "*" p < 0.05, "" otherwise.
std::string significance_stars(double adjusted_p);

struct StratumEffect {
  size_t stratum = 0;
  double te = 0.0;
  size_t n_minority = 0;
  size_t n_control = 0;
  std::optional<double> cohens_d;
};

struct EffectEstimate {
  std::string outcome;
  std::vector<StratumEffect> strata;
  double mean_te = 0.0;
  std::optional<double> cohens_d;        // pooled over retained users
  std::optional<double> mean_stratum_d;  // mean of per-stratum d
  WelchResult welch;
  bool welch_degenerate = false;  // zero variance in both groups
  double p_raw = 1.0;
  double p_bonferroni = 1.0;
  std::string stars;
};

// Per-user outcome shares; row order matches the stratification.
struct OutcomeTable {
  std::vector<std::string> user_ids;
  std::vector<std::string> outcomes;
  models::Matrix before;  // users x outcomes
  models::Matrix during;
};

// One estimate per outcome. Welch tests and Cohen's d compare the deltas of
// all retained minority users against all retained control users.
std::vector<EffectEstimate> effect_report(const Stratification& strat,
                                          const OutcomeTable& outcomes,
                                          bool weight_by_stratum_size = false);

struct StudyConfig {
  corpus::StudyWindows windows = corpus::StudyWindows::defaults();
  size_t top_unigrams = 500;
  std::vector<std::string> outcomes;  // lexicon categories; empty: all
  StratifyConfig stratify;
  models::TrainConfig propensity;
  bool weight_by_stratum_size = false;
};

struct StudyUser {
  std::string user_id;
  int group = kControl;
  text::UnixSeconds first_pre = 0;  // 0 when the user has no pre posts
  text::UnixSeconds last_pre = 0;
  size_t pre_posts = 0;
  size_t during_posts = 0;
};

struct StudyResult {
  std::vector<StudyUser> users;  // ascending user id
  std::vector<std::string> covariate_names;
  models::Matrix covariates;
  std::vector<double> scores;
  Stratification stratification;
  BalanceReport balance;
  OutcomeTable outcomes;
  std::vector<EffectEstimate> effects;
  size_t missing_records = 0;  // cohort ids absent from the user dump
};

// Covariates -> propensity -> stratification -> balance -> effects. Users in
// both cohorts raise DataError.
StudyResult run_study(std::span<const corpus::UserRecord> users,
                      const std::map<std::string, corpus::Timeline>& timelines,
                      const std::set<std::string>& minority,
                      const std::set<std::string>& control,
                      const featurize::CategoryLexicon& lexicon,
                      const StudyConfig& config);

// Report files.
void write_balance_csv(std::ostream& out, const BalanceReport& report);
nlohmann::json balance_json(const BalanceReport& report);
void write_effects_csv(std::ostream& out, std::span<const EffectEstimate> effects);
nlohmann::json effects_json(std::span<const EffectEstimate> effects);
void write_audit_csv(std::ostream& out, const StudyResult& study);

// Per-group histogram of scores over the strata, for no-overlap diagnostics.
std::string score_histogram(std::span<const double> scores,
                            std::span<const int> groups, size_t bins = 20);

}  // namespace mstress::causal

#endif  // MSTRESS_CAUSAL_H_
