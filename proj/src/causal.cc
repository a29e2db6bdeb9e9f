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

#include "mstress/causal.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "mstress/error.h"
#include "mstress/stats.h"
#include "mstress/text.h"

namespace mstress::causal {

using featurize::TokenList;
using nlohmann::json;

namespace {

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

bool is_letter_code_point(char32_t cp) {
  if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  return !text::is_emoji_base(cp) && !text::is_emoji_modifier(cp) &&
         !text::is_regional_indicator(cp) && cp != text::kReplacementChar;
}

bool has_letter(std::string_view word) {
  size_t pos = 0;
  while (pos < word.size()) {
    if (is_letter_code_point(text::decode_utf8(word, pos))) return true;
  }
  return false;
}

// Tokens, pooled over a window, plus the joined raw text.
struct WindowText {
  TokenList tokens;
  std::string joined;
};

WindowText window_text(const corpus::Timeline& t) {
  WindowText w;
  for (const corpus::Post& p : t.posts) {
    TokenList tk = featurize::tokenize(p.text);
    w.tokens.insert(w.tokens.end(), std::make_move_iterator(tk.begin()),
                    std::make_move_iterator(tk.end()));
    if (!w.joined.empty()) w.joined.push_back('\n');
    w.joined += p.text;
  }
  return w;
}

CovariateVector covariates_from(const corpus::UserRecord& user,
                                const corpus::Timeline& pre,
                                const WindowText& text_pre,
                                std::span<const std::string> unigrams,
                                const featurize::CategoryLexicon& lexicon,
                                text::UnixSeconds boundary) {
  CovariateVector cv;
  double freq = 0.0;
  if (!pre.posts.empty()) {
    const double span_days =
        static_cast<double>(pre.posts.back().timestamp - pre.posts.front().timestamp) /
        static_cast<double>(text::kSecondsPerDay);
    freq = static_cast<double>(pre.posts.size()) / std::max(1.0, span_days);
  }
  cv.social = {static_cast<double>(user.n_tweets),
               static_cast<double>(user.n_likes),
               static_cast<double>(user.n_followers),
               static_cast<double>(user.n_followees),
               static_cast<double>(boundary - user.created_at) /
                   static_cast<double>(text::kSecondsPerDay),
               freq};
  std::unordered_map<std::string, size_t> counts;
  for (const std::string& t : text_pre.tokens) ++counts[t];
  const double denom =
      static_cast<double>(std::max<size_t>(1, text_pre.tokens.size()));
  cv.unigram_dist.resize(unigrams.size());
  for (size_t i = 0; i < unigrams.size(); ++i) {
    const auto it = counts.find(unigrams[i]);
    cv.unigram_dist[i] =
        it == counts.end() ? 0.0 : static_cast<double>(it->second) / denom;
  }
  cv.lexicon_dist = lexicon.proportions(text_pre.tokens);
  cv.readability = readability(text_pre.joined).values();
  return cv;
}

void check_pre(const corpus::Timeline& pre, text::UnixSeconds boundary) {
  for (const corpus::Post& p : pre.posts) {
    if (p.timestamp >= boundary) {
      throw DataError("post " + p.post_id + " of user " + pre.user_id +
                      " is not before the boundary");
    }
  }
}

double sum_in_id_order(std::span<const OutcomeMeasurement> group) {
  std::vector<const OutcomeMeasurement*> sorted;
  sorted.reserve(group.size());
  for (const OutcomeMeasurement& m : group) sorted.push_back(&m);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->user_id < b->user_id; });
  double s = 0.0;
  for (const OutcomeMeasurement* m : sorted) s += m->during - m->before;
  return s;
}

json opt_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string opt_csv(const std::optional<double>& v) {
  return v ? text::format_double(*v) : "";
}

}  // namespace

size_t count_syllables(std::string_view word) {
  std::string w;
  for (char c : word) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c >= 'a' && c <= 'z') w.push_back(c);
  }
  size_t groups = 0;
  bool in_vowel = false;
  for (char c : w) {
    const bool v = is_vowel(c);
    if (v && !in_vowel) ++groups;
    in_vowel = v;
  }
  // A final 'e' after a consonant is silent, except in a consonant + "le"
  // ending ("table").
  const size_t n = w.size();
  const bool consonant_le =
      n >= 3 && w[n - 2] == 'l' && !is_vowel(w[n - 3]);
  if (groups > 1 && n >= 2 && w.back() == 'e' && !is_vowel(w[n - 2]) &&
      !consonant_le) {
    --groups;
  }
  return std::max<size_t>(1, groups);
}

Readability readability(std::string_view raw) {
  size_t words = 0;
  size_t sentences = 0;
  size_t syllables = 0;
  size_t chars = 0;
  size_t start = 0;
  while (start <= raw.size()) {
    size_t end = raw.find_first_of(".!?\n", start);
    if (end == std::string_view::npos) end = raw.size();
    size_t in_sentence = 0;
    for (const std::string& tok : featurize::tokenize(raw.substr(start, end - start))) {
      std::string_view w = tok;
      while (!w.empty() && (w.front() == '#' || w.front() == '@')) w.remove_prefix(1);
      if (!has_letter(w)) continue;
      ++in_sentence;
      chars += text::code_point_count(w);
      syllables += count_syllables(w);
    }
    if (in_sentence > 0) {
      words += in_sentence;
      ++sentences;
    }
    start = end + 1;
  }
  Readability r;
  if (words == 0) return r;
  const double wps = static_cast<double>(words) / static_cast<double>(sentences);
  const double spw = static_cast<double>(syllables) / static_cast<double>(words);
  r.flesch_reading_ease = 206.835 - 1.015 * wps - 84.6 * spw;
  r.flesch_kincaid_grade = 0.39 * wps + 11.8 * spw - 15.59;
  r.mean_word_length = static_cast<double>(chars) / static_cast<double>(words);
  r.mean_sentence_length = wps;
  return r;
}

std::vector<double> CovariateVector::flatten() const {
  std::vector<double> out(social.begin(), social.end());
  out.insert(out.end(), unigram_dist.begin(), unigram_dist.end());
  out.insert(out.end(), lexicon_dist.begin(), lexicon_dist.end());
  out.insert(out.end(), readability.begin(), readability.end());
  return out;
}

std::vector<std::string> covariate_names(std::span<const std::string> unigrams,
                                         const featurize::CategoryLexicon& lexicon) {
  std::vector<std::string> names = {"n_tweets",    "n_likes",
                                    "n_followers", "n_followees",
                                    "account_age_days", "posting_freq_per_day"};
  for (const std::string& u : unigrams) names.push_back("unigram:" + u);
  for (const auto& c : lexicon.categories()) names.push_back("lex:" + c.name);
  for (const char* r : {"flesch_reading_ease", "flesch_kincaid_grade",
                        "mean_word_length", "mean_sentence_length"}) {
    names.push_back(std::string("read:") + r);
  }
  return names;
}

namespace {

std::vector<std::string> rank_unigrams(
    const std::unordered_map<std::string, size_t>& counts, size_t k) {
  std::vector<std::pair<std::string, size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (size_t i = 0; i < ranked.size() && i < k; ++i) out.push_back(ranked[i].first);
  return out;
}

}  // namespace

std::vector<std::string> top_unigrams(std::span<const corpus::Timeline> timelines,
                                      size_t k) {
  std::unordered_map<std::string, size_t> counts;
  for (const corpus::Timeline& t : timelines) {
    for (const corpus::Post& p : t.posts) {
      for (const std::string& tok : featurize::tokenize(p.text)) ++counts[tok];
    }
  }
  return rank_unigrams(counts, k);
}

CovariateVector build_covariates(const corpus::UserRecord& user,
                                 const corpus::Timeline& pre,
                                 std::span<const std::string> unigrams,
                                 const featurize::CategoryLexicon& lexicon,
                                 text::UnixSeconds boundary) {
  check_pre(pre, boundary);
  return covariates_from(user, pre, window_text(pre), unigrams, lexicon, boundary);
}

std::vector<double> fit_propensity(const models::Matrix& covariates,
                                   std::span<const int> groups,
                                   const models::TrainConfig& config) {
  models::Dataset data;
  data.x = covariates;
  data.y.assign(groups.begin(), groups.end());
  for (Eigen::Index j = 0; j < covariates.cols(); ++j) {
    data.schema.push_back("c" + std::to_string(j));
  }
  const models::LogisticModel model = models::train_logistic(data, config);
  std::vector<double> scores(static_cast<size_t>(covariates.rows()));
  std::vector<double> row(static_cast<size_t>(covariates.cols()));
  for (Eigen::Index i = 0; i < covariates.rows(); ++i) {
    for (Eigen::Index j = 0; j < covariates.cols(); ++j) {
      row[static_cast<size_t>(j)] = covariates(i, j);
    }
    scores[static_cast<size_t>(i)] = model.predict_proba(row);
  }
  return scores;
}

void StratifyConfig::validate() const {
  if (n_strata < 1) throw ConfigError("n_strata must be >= 1");
  if (!(trim_sd > 0.0)) throw ConfigError("trim_sd must be > 0");
}

const char* to_string(UserStatus status) {
  switch (status) {
    case UserStatus::kRetained:
      return "retained";
    case UserStatus::kTrimmed:
      return "trimmed";
    case UserStatus::kDroppedStratum:
      return "dropped-stratum";
  }
  return "?";
}

std::vector<size_t> Stratification::members(size_t stratum, int group) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < users.size(); ++i) {
    const StratifiedUser& u = users[i];
    if (u.status == UserStatus::kRetained && u.stratum == stratum &&
        u.group == group) {
      out.push_back(i);
    }
  }
  return out;
}

size_t stratum_of(double score, size_t n_strata) {
  const double n = static_cast<double>(n_strata);
  double k = std::floor(score * n);
  if (k < 0) k = 0;
  // Bin edges are (k+1)/n; correct products that rounded just below one.
  if ((k + 1.0) / n <= score) k += 1.0;
  const size_t idx = static_cast<size_t>(k);
  return std::min(idx, n_strata - 1);
}

Stratification stratify(std::span<const double> scores,
                        std::span<const int> groups,
                        const StratifyConfig& config) {
  config.validate();
  if (scores.size() != groups.size()) {
    throw DataError("scores and group labels differ in length");
  }
  if (scores.size() < 2) throw DataError("stratification needs at least two users");
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw DataError("propensity scores must lie in [0,1]");
  }
  for (int g : groups) {
    if (g != kMinority && g != kControl) throw DataError("group labels must be 0 or 1");
  }
  Stratification st;
  st.config = config;
  st.score_mean = stats::mean(scores);
  st.score_sd = std::sqrt(stats::sample_variance(scores));
  st.trim_low = st.score_mean - config.trim_sd * st.score_sd;
  st.trim_high = st.score_mean + config.trim_sd * st.score_sd;

  std::vector<std::array<size_t, 2>> counts(config.n_strata, {0, 0});
  st.users.resize(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    StratifiedUser& u = st.users[i];
    u.score = scores[i];
    u.group = groups[i];
    u.stratum = stratum_of(scores[i], config.n_strata);
    if (scores[i] < st.trim_low || scores[i] > st.trim_high) {
      u.status = UserStatus::kTrimmed;
    } else {
      ++counts[u.stratum][static_cast<size_t>(u.group)];
    }
  }
  std::vector<bool> keep(config.n_strata, false);
  for (size_t k = 0; k < config.n_strata; ++k) {
    keep[k] = counts[k][kMinority] >= config.min_per_group &&
              counts[k][kControl] >= config.min_per_group &&
              counts[k][kMinority] > 0 && counts[k][kControl] > 0;
    if (keep[k]) st.retained_strata.push_back(k);
  }
  for (StratifiedUser& u : st.users) {
    if (u.status == UserStatus::kTrimmed) continue;
    if (!keep[u.stratum]) {
      u.status = UserStatus::kDroppedStratum;
    } else if (u.group == kMinority) {
      ++st.retained_minority;
    } else {
      ++st.retained_control;
    }
  }
  if (st.retained_strata.empty()) {
    throw DegenerateError("no overlap: no stratum has at least " +
                          std::to_string(config.min_per_group) +
                          " users in each group");
  }
  return st;
}

std::optional<double> smd(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw DataError("smd needs at least two values per group");
  }
  const double diff = stats::mean(a) - stats::mean(b);
  const double pooled =
      std::sqrt((stats::sample_variance(a) + stats::sample_variance(b)) / 2.0);
  if (pooled == 0.0) {
    if (diff == 0.0) return 0.0;
    return std::nullopt;
  }
  return diff / pooled;
}

BalanceReport balance_report(const models::Matrix& covariates,
                             std::span<const std::string> names,
                             const Stratification& strat) {
  const size_t n = static_cast<size_t>(covariates.rows());
  if (n != strat.users.size() || names.size() != static_cast<size_t>(covariates.cols())) {
    throw DataError("balance inputs have inconsistent shapes");
  }
  std::vector<size_t> all[2];
  std::vector<size_t> retained[2];
  for (size_t i = 0; i < n; ++i) {
    const StratifiedUser& u = strat.users[i];
    all[u.group].push_back(i);
    if (u.status == UserStatus::kRetained) retained[u.group].push_back(i);
  }
  std::vector<std::array<std::vector<size_t>, 2>> by_stratum;
  double total_retained = 0.0;
  for (size_t k : strat.retained_strata) {
    by_stratum.push_back({strat.members(k, kControl), strat.members(k, kMinority)});
    total_retained += static_cast<double>(by_stratum.back()[0].size() +
                                          by_stratum.back()[1].size());
  }

  BalanceReport report;
  double sum_before = 0.0;
  double sum_within = 0.0;
  size_t n_before = 0;
  size_t n_within = 0;
  std::vector<double> va;
  std::vector<double> vb;
  for (Eigen::Index j = 0; j < covariates.cols(); ++j) {
    const auto column = [&](const std::vector<size_t>& rows, std::vector<double>& out) {
      out.clear();
      for (size_t r : rows) out.push_back(covariates(static_cast<Eigen::Index>(r), j));
    };
    CovariateBalance row;
    row.name = names[static_cast<size_t>(j)];
    if (all[kMinority].size() >= 2 && all[kControl].size() >= 2) {
      column(all[kMinority], va);
      column(all[kControl], vb);
      row.before = smd(va, vb);
    }
    if (retained[kMinority].size() >= 2 && retained[kControl].size() >= 2) {
      column(retained[kMinority], va);
      column(retained[kControl], vb);
      const double pooled =
          std::sqrt((stats::sample_variance(va) + stats::sample_variance(vb)) / 2.0);
      double weighted_diff = 0.0;
      for (const auto& members : by_stratum) {
        column(members[kMinority], va);
        const double m1 = stats::mean(va);
        column(members[kControl], vb);
        const double m0 = stats::mean(vb);
        const double w =
            static_cast<double>(members[0].size() + members[1].size()) / total_retained;
        weighted_diff += w * (m1 - m0);
      }
      if (pooled > 0.0) {
        row.within = weighted_diff / pooled;
      } else if (weighted_diff == 0.0) {
        row.within = 0.0;
      }
    }
    if (row.before) {
      report.max_abs_before = std::max(report.max_abs_before, std::abs(*row.before));
      sum_before += std::abs(*row.before);
      ++n_before;
    } else {
      ++report.degenerate_before;
    }
    if (row.within) {
      report.max_abs_within = std::max(report.max_abs_within, std::abs(*row.within));
      sum_within += std::abs(*row.within);
      ++n_within;
    } else {
      ++report.degenerate_within;
    }
    report.rows.push_back(std::move(row));
  }
  if (n_before > 0) report.mean_abs_before = sum_before / static_cast<double>(n_before);
  if (n_within > 0) report.mean_abs_within = sum_within / static_cast<double>(n_within);
  return report;
}

double stratum_te(std::span<const OutcomeMeasurement> minority,
                  std::span<const OutcomeMeasurement> control) {
  if (minority.empty() || control.empty()) {
    throw DataError("treatment effect needs users in both groups");
  }
  return sum_in_id_order(minority) / static_cast<double>(minority.size()) -
         sum_in_id_order(control) / static_cast<double>(control.size());
}

double mean_te(std::span<const double> stratum_effects,
               std::span<const double> weights) {
  if (stratum_effects.empty()) throw DataError("mean TE needs at least one stratum");
  if (weights.empty()) return stats::mean(stratum_effects);
  if (weights.size() != stratum_effects.size()) {
    throw DataError("stratum weights do not match the effects");
  }
  double num = 0.0;
  double den = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    num += weights[i] * stratum_effects[i];
    den += weights[i];
  }
  if (!(den > 0.0)) throw DataError("stratum weights must sum to a positive value");
  return num / den;
}

std::optional<double> cohens_d(std::span<const double> a,
                               std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw DataError("Cohen's d needs at least two values per group");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double pooled = std::sqrt(((na - 1.0) * stats::sample_variance(a) +
                                   (nb - 1.0) * stats::sample_variance(b)) /
                                  (na + nb - 2.0));
  if (pooled == 0.0) return std::nullopt;
  return (stats::mean(a) - stats::mean(b)) / pooled;
}

WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw DataError("Welch's t-test needs at least two values per group");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = stats::sample_variance(a) / na;
  const double vb = stats::sample_variance(b) / nb;
  if (va == 0.0 && vb == 0.0) {
    throw DegenerateError("Welch's t-test: both samples have zero variance");
  }
  WelchResult r;
  r.t = (stats::mean(a) - stats::mean(b)) / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) /
         (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p = stats::student_t_two_sided_p(r.t, r.df);
  return r;
}

std::vector<double> bonferroni(std::span<const double> p_values,
                               std::optional<size_t> m) {
  const double tests = static_cast<double>(m.value_or(p_values.size()));
  std::vector<double> out;
  out.reserve(p_values.size());
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("p values must lie in [0,1]");
    out.push_back(std::min(1.0, p * std::max(1.0, tests)));
  }
  return out;
}

std::string significance_stars(double adjusted_p) {
  if (adjusted_p < 0.001) return "***";
  if (adjusted_p < 0.01) return "**";
  if (adjusted_p < 0.05) return "*";
  return "";
}

std::vector<EffectEstimate> effect_report(const Stratification& strat,
                                          const OutcomeTable& outcomes,
                                          bool weight_by_stratum_size) {
  const size_t n = strat.users.size();
  if (outcomes.user_ids.size() != n ||
      static_cast<size_t>(outcomes.before.rows()) != n ||
      static_cast<size_t>(outcomes.during.rows()) != n ||
      static_cast<size_t>(outcomes.before.cols()) != outcomes.outcomes.size() ||
      static_cast<size_t>(outcomes.during.cols()) != outcomes.outcomes.size()) {
    throw DataError("outcome table does not match the stratification");
  }
  std::vector<std::array<std::vector<size_t>, 2>> members;
  for (size_t k : strat.retained_strata) {
    members.push_back({strat.members(k, kControl), strat.members(k, kMinority)});
  }
  // Retained users of each group in ascending id order.
  std::array<std::vector<size_t>, 2> pooled;
  for (size_t i = 0; i < n; ++i) {
    if (strat.users[i].status == UserStatus::kRetained) {
      pooled[static_cast<size_t>(strat.users[i].group)].push_back(i);
    }
  }
  for (auto& g : pooled) {
    std::sort(g.begin(), g.end(), [&](size_t a, size_t b) {
      return outcomes.user_ids[a] < outcomes.user_ids[b];
    });
  }

  std::vector<EffectEstimate> report;
  for (size_t o = 0; o < outcomes.outcomes.size(); ++o) {
    const Eigen::Index col = static_cast<Eigen::Index>(o);
    const auto measure = [&](size_t i) {
      return OutcomeMeasurement{outcomes.user_ids[i], outcomes.outcomes[o],
                                outcomes.before(static_cast<Eigen::Index>(i), col),
                                outcomes.during(static_cast<Eigen::Index>(i), col)};
    };
    const auto deltas = [&](const std::vector<size_t>& rows) {
      std::vector<double> d;
      d.reserve(rows.size());
      for (size_t i : rows) d.push_back(measure(i).delta());
      return d;
    };
    EffectEstimate est;
    est.outcome = outcomes.outcomes[o];
    std::vector<double> tes;
    std::vector<double> weights;
    double d_sum = 0.0;
    size_t d_n = 0;
    for (size_t s = 0; s < members.size(); ++s) {
      std::vector<OutcomeMeasurement> m1;
      std::vector<OutcomeMeasurement> m0;
      for (size_t i : members[s][kMinority]) m1.push_back(measure(i));
      for (size_t i : members[s][kControl]) m0.push_back(measure(i));
      StratumEffect se;
      se.stratum = strat.retained_strata[s];
      se.te = stratum_te(m1, m0);
      se.n_minority = m1.size();
      se.n_control = m0.size();
      if (m1.size() >= 2 && m0.size() >= 2) {
        se.cohens_d = cohens_d(deltas(members[s][kMinority]),
                               deltas(members[s][kControl]));
        if (se.cohens_d) {
          d_sum += *se.cohens_d;
          ++d_n;
        }
      }
      tes.push_back(se.te);
      weights.push_back(static_cast<double>(m1.size() + m0.size()));
      est.strata.push_back(se);
    }
    est.mean_te = weight_by_stratum_size ? mean_te(tes, weights) : mean_te(tes);
    if (d_n > 0) est.mean_stratum_d = d_sum / static_cast<double>(d_n);
    const std::vector<double> d1 = deltas(pooled[kMinority]);
    const std::vector<double> d0 = deltas(pooled[kControl]);
    if (d1.size() >= 2 && d0.size() >= 2) {
      est.cohens_d = cohens_d(d1, d0);
      try {
        est.welch = welch_t(d1, d0);
        est.p_raw = est.welch.p;
      } catch (const DegenerateError&) {
        est.welch_degenerate = true;
        const double diff = stats::mean(d1) - stats::mean(d0);
        est.welch = {0.0, 0.0, diff == 0.0 ? 1.0 : 0.0};
        est.p_raw = est.welch.p;
      }
    }
    report.push_back(std::move(est));
  }
  std::vector<double> raw;
  for (const EffectEstimate& e : report) raw.push_back(e.p_raw);
  const std::vector<double> adj = bonferroni(raw);
  for (size_t i = 0; i < report.size(); ++i) {
    report[i].p_bonferroni = adj[i];
    report[i].stars = significance_stars(adj[i]);
  }
  return report;
}

StudyResult run_study(std::span<const corpus::UserRecord> users,
                      const std::map<std::string, corpus::Timeline>& timelines,
                      const std::set<std::string>& minority,
                      const std::set<std::string>& control,
                      const featurize::CategoryLexicon& lexicon,
                      const StudyConfig& config) {
  config.windows.validate();
  for (const std::string& id : minority) {
    if (control.count(id) > 0) {
      throw DataError("user '" + id + "' is in both cohorts");
    }
  }
  std::vector<size_t> outcome_idx;
  std::vector<std::string> outcome_names;
  if (config.outcomes.empty()) {
    for (size_t c = 0; c < lexicon.size(); ++c) {
      outcome_idx.push_back(c);
      outcome_names.push_back(lexicon.categories()[c].name);
    }
  } else {
    for (const std::string& name : config.outcomes) {
      const auto idx = lexicon.index_of(name);
      if (!idx) throw ConfigError("outcome '" + name + "' is not a lexicon category");
      outcome_idx.push_back(*idx);
      outcome_names.push_back(name);
    }
  }

  std::unordered_map<std::string, const corpus::UserRecord*> records;
  for (const corpus::UserRecord& u : users) records.emplace(u.user_id, &u);

  StudyResult result;
  std::set<std::string> ids(minority.begin(), minority.end());
  ids.insert(control.begin(), control.end());
  std::vector<const corpus::UserRecord*> study_records;
  std::vector<corpus::Timeline> pre_timelines;
  std::vector<WindowText> pre_text;
  std::vector<TokenList> during_tokens;
  const corpus::Timeline empty;
  for (const std::string& id : ids) {
    const auto rec = records.find(id);
    if (rec == records.end()) {
      ++result.missing_records;
      continue;
    }
    const auto tl = timelines.find(id);
    corpus::Timeline timeline = tl == timelines.end() ? empty : tl->second;
    timeline.user_id = id;
    corpus::WindowSplit split = corpus::split_window(timeline, config.windows);
    StudyUser su;
    su.user_id = id;
    su.group = minority.count(id) > 0 ? kMinority : kControl;
    su.pre_posts = split.pre.posts.size();
    su.during_posts = split.during.posts.size();
    if (!split.pre.posts.empty()) {
      su.first_pre = split.pre.posts.front().timestamp;
      su.last_pre = split.pre.posts.back().timestamp;
    }
    result.users.push_back(su);
    study_records.push_back(rec->second);
    pre_text.push_back(window_text(split.pre));
    during_tokens.push_back(window_text(split.during).tokens);
    pre_timelines.push_back(std::move(split.pre));
  }
  const size_t n = result.users.size();
  if (n < 2) throw DataError("study needs at least two users with records");

  std::unordered_map<std::string, size_t> unigram_counts;
  for (const WindowText& w : pre_text) {
    for (const std::string& t : w.tokens) ++unigram_counts[t];
  }
  const std::vector<std::string> unigrams =
      rank_unigrams(unigram_counts, config.top_unigrams);
  result.covariate_names = covariate_names(unigrams, lexicon);
  const size_t q = result.covariate_names.size();
  result.covariates.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
  result.outcomes.outcomes = outcome_names;
  result.outcomes.before.resize(static_cast<Eigen::Index>(n),
                                static_cast<Eigen::Index>(outcome_idx.size()));
  result.outcomes.during.resize(static_cast<Eigen::Index>(n),
                                static_cast<Eigen::Index>(outcome_idx.size()));
  std::vector<int> groups(n);
  for (size_t i = 0; i < n; ++i) {
    check_pre(pre_timelines[i], config.windows.boundary);
    const CovariateVector cv =
        covariates_from(*study_records[i], pre_timelines[i], pre_text[i], unigrams,
                        lexicon, config.windows.boundary);
    const std::vector<double> flat = cv.flatten();
    for (size_t j = 0; j < q; ++j) {
      result.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          flat[j];
    }
    const std::vector<double> during = lexicon.proportions(during_tokens[i]);
    for (size_t o = 0; o < outcome_idx.size(); ++o) {
      result.outcomes.before(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(o)) =
          cv.lexicon_dist[outcome_idx[o]];
      result.outcomes.during(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(o)) =
          during[outcome_idx[o]];
    }
    result.outcomes.user_ids.push_back(result.users[i].user_id);
    groups[i] = result.users[i].group;
  }

  const bool both = std::count(groups.begin(), groups.end(), kMinority) > 0 &&
                    std::count(groups.begin(), groups.end(), kControl) > 0;
  if (!both) throw DegenerateError("study needs users in both cohorts");
  result.scores = fit_propensity(result.covariates, groups, config.propensity);
  try {
    result.stratification = stratify(result.scores, groups, config.stratify);
  } catch (const DegenerateError& e) {
    throw DegenerateError(std::string(e.what()) + "\n" +
                          score_histogram(result.scores, groups));
  }
  result.balance =
      balance_report(result.covariates, result.covariate_names, result.stratification);
  result.effects = effect_report(result.stratification, result.outcomes,
                                 config.weight_by_stratum_size);
  return result;
}

void write_balance_csv(std::ostream& out, const BalanceReport& report) {
  out << "covariate,smd_before,smd_within,balanced_within\n";
  for (const CovariateBalance& r : report.rows) {
    out << r.name << ',' << opt_csv(r.before) << ',' << opt_csv(r.within) << ','
        << (r.within && std::abs(*r.within) < kBalanceThreshold ? "yes" : "no")
        << '\n';
  }
}

json balance_json(const BalanceReport& report) {
  json rows = json::array();
  for (const CovariateBalance& r : report.rows) {
    rows.push_back({{"covariate", r.name},
                    {"smd_before", opt_json(r.before)},
                    {"smd_within", opt_json(r.within)}});
  }
  return {{"threshold", kBalanceThreshold},
          {"max_abs_before", report.max_abs_before},
          {"mean_abs_before", report.mean_abs_before},
          {"max_abs_within", report.max_abs_within},
          {"mean_abs_within", report.mean_abs_within},
          {"degenerate_before", report.degenerate_before},
          {"degenerate_within", report.degenerate_within},
          {"balanced", report.balanced()},
          {"covariates", std::move(rows)}};
}

void write_effects_csv(std::ostream& out, std::span<const EffectEstimate> effects) {
  out << "outcome,mean_te,cohens_d,mean_stratum_d,welch_t,welch_df,p_raw,"
         "p_bonferroni,stars,strata\n";
  for (const EffectEstimate& e : effects) {
    out << e.outcome << ',' << text::format_double(e.mean_te) << ','
        << opt_csv(e.cohens_d) << ',' << opt_csv(e.mean_stratum_d) << ','
        << text::format_double(e.welch.t) << ',' << text::format_double(e.welch.df)
        << ',' << text::format_double(e.p_raw) << ','
        << text::format_double(e.p_bonferroni) << ',' << e.stars << ','
        << e.strata.size() << '\n';
  }
}

json effects_json(std::span<const EffectEstimate> effects) {
  json out = json::array();
  for (const EffectEstimate& e : effects) {
    json strata = json::array();
    json te = json::array();
    for (const StratumEffect& s : e.strata) {
      strata.push_back({{"stratum", s.stratum},
                        {"te", s.te},
                        {"n_minority", s.n_minority},
                        {"n_control", s.n_control},
                        {"cohens_d", opt_json(s.cohens_d)}});
      te.push_back(s.te);
    }
    out.push_back({{"outcome", e.outcome},
                   {"mean_te", e.mean_te},
                   {"cohens_d", opt_json(e.cohens_d)},
                   {"mean_stratum_d", opt_json(e.mean_stratum_d)},
                   {"welch_t", e.welch.t},
                   {"welch_df", e.welch.df},
                   {"welch_degenerate", e.welch_degenerate},
                   {"p_raw", e.p_raw},
                   {"p_bonferroni", e.p_bonferroni},
                   {"stars", e.stars},
                   {"stratum_te", std::move(te)},
                   {"strata", std::move(strata)}});
  }
  return out;
}

void write_audit_csv(std::ostream& out, const StudyResult& study) {
  out << "user_id,group,score,stratum,status,pre_posts,during_posts,first_pre,"
         "last_pre\n";
  for (size_t i = 0; i < study.users.size(); ++i) {
    const StudyUser& u = study.users[i];
    const StratifiedUser& s = study.stratification.users[i];
    out << u.user_id << ',' << (u.group == kMinority ? "MINORITY" : "CONTROL") << ','
        << text::format_double(s.score) << ',' << s.stratum << ','
        << to_string(s.status) << ',' << u.pre_posts << ',' << u.during_posts << ','
        << (u.pre_posts > 0 ? text::format_timestamp(u.first_pre) : "") << ','
        << (u.pre_posts > 0 ? text::format_timestamp(u.last_pre) : "") << '\n';
  }
}

std::string score_histogram(std::span<const double> scores,
                            std::span<const int> groups, size_t bins) {
  std::vector<std::array<size_t, 2>> counts(bins, {0, 0});
  for (size_t i = 0; i < scores.size(); ++i) {
    const size_t b = stratum_of(std::clamp(scores[i], 0.0, 1.0), bins);
    ++counts[b][groups[i] == kMinority ? 1 : 0];
  }
  std::ostringstream os;
  os << "score bin        minority   control\n";
  for (size_t b = 0; b < bins; ++b) {
    char line[96];
    std::snprintf(line, sizeof(line), "[%.2f, %.2f)  %9zu %9zu\n",
                  static_cast<double>(b) / static_cast<double>(bins),
                  static_cast<double>(b + 1) / static_cast<double>(bins),
                  counts[b][1], counts[b][0]);
    os << line;
  }
  return os.str();
}

}  // namespace mstress::causal
