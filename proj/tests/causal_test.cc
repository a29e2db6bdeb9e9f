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
#include <sstream>

#include "doctest.h"
#include "mstress/error.h"
#include "mstress/rng.h"
#include "oracles.h"

using namespace mstress;
using namespace mstress::causal;

namespace {

std::vector<OutcomeMeasurement> deltas(const std::string& prefix, std::vector<double> d) {
  std::vector<OutcomeMeasurement> out;
  for (size_t i = 0; i < d.size(); ++i) {
    out.push_back({prefix + std::to_string(i), "o", 0.0, d[i]});
  }
  return out;
}

featurize::CategoryLexicon lexicon_from(const std::string& tsv) {
  std::istringstream in(tsv);
  return featurize::CategoryLexicon::from_tsv(in);
}

corpus::Post post_at(text::UnixSeconds t, const std::string& body) {
  corpus::Post p;
  p.post_id = "p" + std::to_string(t);
  p.author_id = "u";
  p.timestamp = t;
  p.text = body;
  return p;
}

}  // namespace

TEST_CASE("count_syllables") {
  CHECK(count_syllables("cat") == 1);
  CHECK(count_syllables("the") == 1);
  CHECK(count_syllables("home") == 1);
  CHECK(count_syllables("education") == 4);
  CHECK(count_syllables("beautiful") == 3);
  CHECK(count_syllables("rhythm") == 1);
  CHECK(count_syllables("Apple") == 2);
  CHECK(count_syllables("table") == 2);
  CHECK(count_syllables("make") == 1);
  CHECK(count_syllables("") == 1);
}

TEST_CASE("readability examples") {
  Readability r = readability("");
  CHECK(r.values() == std::array<double, 4>{0, 0, 0, 0});
  r = readability("cat");
  CHECK(r.mean_word_length == 3.0);
  CHECK(r.mean_sentence_length == 1.0);

  // 6 words, 1 sentence, 6 syllables.
  r = readability("The cat sat on the mat.");
  CHECK(r.flesch_reading_ease == doctest::Approx(206.835 - 1.015 * 6 - 84.6 * 1));
  CHECK(r.flesch_kincaid_grade == doctest::Approx(0.39 * 6 + 11.8 * 1 - 15.59));
  CHECK(r.mean_word_length == doctest::Approx(17.0 / 6.0));
  CHECK(r.mean_sentence_length == 6.0);

  // 5 words, 2 sentences, 4 + 1 + 3 + 1 + 1 = 10 syllables.
  r = readability("Education is beautiful. Go home!");
  CHECK(r.flesch_reading_ease == doctest::Approx(206.835 - 1.015 * 2.5 - 84.6 * 2.0));
  CHECK(r.flesch_kincaid_grade == doctest::Approx(0.39 * 2.5 + 11.8 * 2.0 - 15.59));
  CHECK(r.mean_sentence_length == 2.5);

  // Tokens without letters are not words; empty segments are not sentences.
  CHECK(readability("... 123 !!").values() == std::array<double, 4>{0, 0, 0, 0});
}

TEST_CASE("build_covariates examples") {
  const auto lex = lexicon_from("anger\thate\n");
  corpus::UserRecord u;
  u.user_id = "u";
  u.n_tweets = 300;
  u.n_likes = 10;
  u.n_followers = 20;
  u.n_followees = 30;
  const text::UnixSeconds boundary = 100 * text::kSecondsPerDay;
  u.created_at = boundary - 40 * text::kSecondsPerDay;
  const std::vector<std::string> unigrams = {"hate", "day", "absent"};

  corpus::Timeline empty{"u", {}};
  CovariateVector cv = build_covariates(u, empty, unigrams, lex, boundary);
  CHECK(cv.social == std::array<double, 6>{300, 10, 20, 30, 40, 0});
  CHECK(cv.unigram_dist == std::vector<double>{0, 0, 0});
  CHECK(cv.lexicon_dist == std::vector<double>{0});

  corpus::Timeline ten{"u", {}};
  const std::vector<std::string> bodies = {"Hate the day", "day day", "a b c hate"};
  for (int i = 0; i < 10; ++i) {
    ten.posts.push_back(post_at(10 * text::kSecondsPerDay + i * 5 * text::kSecondsPerDay / 9,
                                bodies[static_cast<size_t>(i) % bodies.size()]));
  }
  cv = build_covariates(u, ten, unigrams, lex, boundary);
  CHECK(cv.social[5] == doctest::Approx(2.0));

  // Brute-force counts over the same tokens.
  size_t total = 0;
  std::vector<size_t> hits(unigrams.size(), 0);
  for (const auto& p : ten.posts) {
    for (const auto& t : featurize::tokenize(p.text)) {
      ++total;
      for (size_t k = 0; k < unigrams.size(); ++k) hits[k] += t == unigrams[k] ? 1 : 0;
    }
  }
  for (size_t k = 0; k < unigrams.size(); ++k) {
    CHECK(cv.unigram_dist[k] == doctest::Approx(static_cast<double>(hits[k]) /
                                                static_cast<double>(total)));
  }
  CHECK(cv.lexicon_dist[0] == cv.unigram_dist[0]);
  CHECK(cv.flatten().size() == 6 + 3 + 1 + 4);
  CHECK(covariate_names(unigrams, lex).size() == cv.flatten().size());

  ten.posts.push_back(post_at(boundary, "late"));
  CHECK_THROWS_AS(build_covariates(u, ten, unigrams, lex, boundary), DataError);
}

TEST_CASE("fit_propensity examples") {
  Rng rng(51);
  const size_t n = 1000;
  models::Matrix same(static_cast<Eigen::Index>(n), 3);
  models::Matrix split(static_cast<Eigen::Index>(n), 1);
  std::vector<int> g(n);
  for (size_t i = 0; i < n; ++i) {
    g[i] = i < 300 ? kMinority : kControl;
    for (Eigen::Index j = 0; j < 3; ++j) same(static_cast<Eigen::Index>(i), j) = rng.normal();
    split(static_cast<Eigen::Index>(i), 0) = g[i] == kMinority ? 5.0 + rng.uniform() : rng.uniform();
  }
  models::TrainConfig cfg;
  std::vector<double> s = fit_propensity(same, g, cfg);
  CHECK(std::abs(oracle::mean(s) - 0.3) <= 0.05);

  s = fit_propensity(split, g, cfg);
  for (size_t i = 0; i < n; ++i) {
    if (g[i] == kMinority) CHECK(s[i] > 0.9);
    else CHECK(s[i] < 0.1);
  }

  s = fit_propensity(models::Matrix::Zero(static_cast<Eigen::Index>(n), 2), g, cfg);
  CHECK(std::all_of(s.begin(), s.end(), [&](double v) { return v == s[0]; }));
}

TEST_CASE("stratum_of examples") {
  CHECK(stratum_of(0.555, 100) == 55);
  CHECK(stratum_of(1.0, 100) == 99);
  CHECK(stratum_of(0.0, 100) == 0);
  CHECK(stratum_of(0.29, 100) == 29);
  CHECK(stratum_of(0.57, 100) == 57);
  for (int k = 0; k < 100; ++k) CHECK(stratum_of(k / 100.0, 100) == static_cast<size_t>(k));
}

TEST_CASE("property: stratify matches the brute-force reimplementation") {
  Rng rng(52);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = static_cast<size_t>(rng.range(20, 600));
    std::vector<double> scores(n);
    std::vector<int> groups(n);
    for (size_t i = 0; i < n; ++i) {
      groups[i] = rng.bernoulli(0.4) ? kMinority : kControl;
      const double centre = groups[i] == kMinority ? 0.6 : 0.4;
      scores[i] = std::clamp(centre + 0.2 * rng.normal(), 0.0, 1.0);
    }
    StratifyConfig cfg;
    cfg.n_strata = static_cast<size_t>(rng.range(2, 40));
    cfg.min_per_group = static_cast<size_t>(rng.range(1, 8));
    cfg.trim_sd = rng.uniform(0.5, 3.0);
    const std::vector<size_t> expected =
        oracle::retained_strata(scores, groups, cfg.n_strata, cfg.trim_sd, cfg.min_per_group);
    if (expected.empty()) {
      CHECK_THROWS_AS(stratify(scores, groups, cfg), DegenerateError);
      continue;
    }
    const Stratification s = stratify(scores, groups, cfg);
    CHECK(s.retained_strata == expected);
    size_t minority = 0;
    size_t control = 0;
    for (size_t k : s.retained_strata) {
      minority += s.members(k, kMinority).size();
      control += s.members(k, kControl).size();
      CHECK(s.members(k, kMinority).size() >= cfg.min_per_group);
    }
    CHECK(minority == s.retained_minority);
    CHECK(control == s.retained_control);
  }
}

TEST_CASE("stratify errors") {
  const std::vector<double> scores = {0.1, 0.1, 0.9, 0.9};
  const std::vector<int> groups = {kMinority, kMinority, kControl, kControl};
  StratifyConfig cfg;
  cfg.n_strata = 10;
  cfg.min_per_group = 1;
  try {
    stratify(scores, groups, cfg);
    FAIL("expected no overlap");
  } catch (const DegenerateError& e) {
    CHECK(std::string(e.what()).find("no overlap") != std::string::npos);
  }
  const std::vector<double> bad = {0.1, 1.5, 0.2, 0.3};
  CHECK_THROWS_AS(stratify(bad, groups, cfg), DataError);
}

TEST_CASE("smd examples and properties") {
  const std::vector<double> a = {0, 2};
  const std::vector<double> b = {1, 3};
  CHECK(*smd(a, b) == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(*smd(a, a) == 0.0);
  CHECK(*smd(std::vector<double>{1, 1}, std::vector<double>{1, 1}) == 0.0);
  CHECK_FALSE(smd(std::vector<double>{1, 1}, std::vector<double>{2, 2}).has_value());
  CHECK_THROWS_AS(smd(std::vector<double>{1}, b), DataError);
  CHECK(std::abs(*smd(std::vector<double>{0.0, 0.2}, std::vector<double>{0.01, 0.19})) <
        kBalanceThreshold);
  CHECK_FALSE(std::abs(*smd(a, b)) < kBalanceThreshold);

  Rng rng(53);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> x(static_cast<size_t>(rng.range(2, 30)));
    std::vector<double> y(static_cast<size_t>(rng.range(2, 30)));
    for (double& v : x) v = rng.normal(1.0, 2.0);
    for (double& v : y) v = rng.normal();
    const double s = *smd(x, y);
    CHECK(s == doctest::Approx(oracle::smd(x, y)).epsilon(1e-12));
    CHECK(*smd(y, x) == -s);
    const double c = (rng.bernoulli(0.5) ? -1.0 : 1.0) * rng.uniform(0.1, 10.0);
    std::vector<double> cx = x;
    std::vector<double> cy = y;
    for (double& v : cx) v *= c;
    for (double& v : cy) v *= c;
    CHECK(*smd(cx, cy) == doctest::Approx((c > 0 ? 1.0 : -1.0) * s).epsilon(1e-10));
  }
}

TEST_CASE("balance holds when both groups share one covariate distribution") {
  int balanced = 0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    Rng rng(1000 + static_cast<uint64_t>(seed));
    const size_t n = 4000;
    models::Matrix x(static_cast<Eigen::Index>(n), 5);
    std::vector<int> g(n);
    for (size_t i = 0; i < n; ++i) {
      g[i] = i % 2 == 0 ? kMinority : kControl;
      for (Eigen::Index j = 0; j < 5; ++j) x(static_cast<Eigen::Index>(i), j) = rng.normal();
    }
    const std::vector<double> scores = fit_propensity(x, g, models::TrainConfig{});
    const Stratification s = stratify(scores, g);
    const std::vector<std::string> names = {"a", "b", "c", "d", "e"};
    const BalanceReport r = balance_report(x, names, s);
    balanced += r.balanced() ? 1 : 0;
  }
  CHECK(balanced >= 19);
}

TEST_CASE("stratum_te examples") {
  CHECK(stratum_te(deltas("m", {0.3, 0.3}), deltas("c", {0.3})) == 0.0);
  CHECK(stratum_te(deltas("m", {0.2, 0.4}), deltas("c", {0.1})) == doctest::Approx(0.2));
  CHECK_THROWS_AS(stratum_te(deltas("m", {0.2}), {}), DataError);
}

TEST_CASE("property: stratum_te equals the ordered recomputation bitwise") {
  Rng rng(54);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<OutcomeMeasurement> m;
    std::vector<OutcomeMeasurement> c;
    const size_t nm = static_cast<size_t>(rng.range(1, 60));
    const size_t nc = static_cast<size_t>(rng.range(1, 60));
    for (size_t i = 0; i < nm + nc; ++i) {
      OutcomeMeasurement o{"u" + std::to_string(rng.below(1000000)), "o",
                           rng.uniform() * std::pow(10.0, rng.range(-6, 2)),
                           rng.uniform() * std::pow(10.0, rng.range(-6, 2))};
      (i < nm ? m : c).push_back(o);
    }
    CHECK(stratum_te(m, c) == oracle::stratum_te(m, c));
    rng.shuffle(std::span<OutcomeMeasurement>(m));
    CHECK(stratum_te(m, c) == oracle::stratum_te(m, c));
  }
}

TEST_CASE("mean_te examples") {
  CHECK(mean_te(std::vector<double>{0.1, -0.1}) == 0.0);
  CHECK(mean_te(std::vector<double>{0.37}) == 0.37);
  CHECK(mean_te(std::vector<double>{1.0, 0.0}, std::vector<double>{3.0, 1.0}) == 0.75);
}

TEST_CASE("cohens_d examples") {
  const std::vector<double> a = {1, 2, 3};
  CHECK(*cohens_d(a, a) == 0.0);
  // sds both 1, means 2 and 1.
  CHECK(std::abs(*cohens_d(a, std::vector<double>{0, 1, 2}) - 1.0) <= 1e-12);
  // Pooled variance (2 * 1 + 3 * 2.5) / 5 = 1.9.
  const std::vector<double> b = {1, 2, 3, 4, 5};
  CHECK(*cohens_d(std::vector<double>{2, 3, 4}, b) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(*cohens_d(std::vector<double>{5, 6, 7}, std::vector<double>{1, 2, 3, 4}) ==
        doctest::Approx((6.0 - 2.5) / std::sqrt((2.0 * 1.0 + 3.0 * (5.0 / 3.0)) / 5.0)));
  CHECK_FALSE(cohens_d(std::vector<double>{1, 1}, std::vector<double>{2, 2}).has_value());
}

TEST_CASE("welch_t frozen reference values") {
  // scipy.stats.ttest_ind(..., equal_var=False)
  WelchResult w = welch_t(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3, 4, 5});
  CHECK(w.t == doctest::Approx(-1.0954451150103324).epsilon(1e-12));
  CHECK(w.df == doctest::Approx(5.882352941176469).epsilon(1e-12));
  CHECK(std::abs(w.p - 0.3161334219263932) <= 1e-6);
  w = welch_t(std::vector<double>{2.1, 3.4, 1.9, 5.6, 4.4, 3.3},
              std::vector<double>{0.5, 1.1, 0.9, 2.2});
  CHECK(w.t == doctest::Approx(3.3611616909466853).epsilon(1e-12));
  CHECK(w.df == doctest::Approx(7.753988946179734).epsilon(1e-12));
  CHECK(std::abs(w.p - 0.010376203509253074) <= 1e-6);

  w = welch_t(std::vector<double>{1, 2, 4}, std::vector<double>{1, 2, 4});
  CHECK(w.t == 0.0);
  CHECK(w.p == doctest::Approx(1.0));
  CHECK_THROWS_AS(welch_t(std::vector<double>{1, 1}, std::vector<double>{2, 2}),
                  DegenerateError);
  CHECK_THROWS_AS(welch_t(std::vector<double>{1}, std::vector<double>{2, 2}), DataError);
}

TEST_CASE("welch p shrinks as the difference grows") {
  const std::vector<double> base = {0.0, 1.0, 2.0, 3.0};
  double last = 1.1;
  for (int shift = 0; shift < 10; ++shift) {
    std::vector<double> moved = base;
    for (double& v : moved) v += shift * 0.5;
    const double p = welch_t(moved, base).p;
    CHECK(p < last);
    last = p;
  }
}

TEST_CASE("bonferroni and stars") {
  CHECK(bonferroni(std::vector<double>{0.01}, 10)[0] == doctest::Approx(0.1));
  CHECK(bonferroni(std::vector<double>{0.5}, 10)[0] == 1.0);
  CHECK(bonferroni(std::vector<double>{0.03, 0.2}, 1) == std::vector<double>{0.03, 0.2});
  CHECK(bonferroni(std::vector<double>{0.01, 0.02}) == std::vector<double>{0.02, 0.04});
  CHECK_THROWS_AS(bonferroni(std::vector<double>{1.5}), DataError);
  Rng rng(55);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> p = {rng.uniform(), rng.uniform()};
    std::sort(p.begin(), p.end());
    const auto adj = bonferroni(p, 5);
    CHECK(adj[0] >= p[0]);
    CHECK(adj[1] >= p[1]);
    CHECK(adj[0] <= adj[1]);
  }
  CHECK(significance_stars(0.0005) == "***");
  CHECK(significance_stars(0.005) == "**");
  CHECK(significance_stars(0.04) == "*");
  CHECK(significance_stars(0.05) == "");
}

TEST_CASE("effect_report on a hand-built stratification") {
  // Strata 1 and 6, two users per group in each.
  const std::vector<double> scores = {0.15, 0.15, 0.15, 0.15, 0.65, 0.65, 0.65, 0.65};
  const std::vector<int> groups = {1, 1, 0, 0, 1, 1, 0, 0};
  StratifyConfig cfg;
  cfg.n_strata = 10;
  cfg.min_per_group = 2;
  cfg.trim_sd = 10.0;
  const Stratification s = stratify(scores, groups, cfg);
  REQUIRE(s.retained_strata == std::vector<size_t>{1, 6});

  OutcomeTable t;
  for (int i = 0; i < 8; ++i) t.user_ids.push_back("u" + std::to_string(i));
  t.outcomes = {"a", "b"};
  t.before = models::Matrix::Zero(8, 2);
  t.during = models::Matrix(8, 2);
  const double da[] = {0.5, 0.7, 0.1, 0.3, 0.4, 0.6, 0.0, 0.2};
  const double db[] = {0.1, 0.2, 0.1, 0.25, 0.3, 0.1, 0.2, 0.15};
  for (Eigen::Index i = 0; i < 8; ++i) {
    t.during(i, 0) = da[i];
    t.during(i, 1) = db[i];
  }
  const auto effects = effect_report(s, t);
  REQUIRE(effects.size() == 2);
  const EffectEstimate& a = effects[0];
  CHECK(a.outcome == "a");
  REQUIRE(a.strata.size() == 2);
  CHECK(a.strata[0].te == doctest::Approx(0.4));
  CHECK(a.strata[1].te == doctest::Approx(0.4));
  CHECK(a.mean_te == doctest::Approx(0.4));
  const WelchResult w = welch_t(std::vector<double>{0.5, 0.7, 0.4, 0.6},
                                std::vector<double>{0.1, 0.3, 0.0, 0.2});
  CHECK(a.welch.t == doctest::Approx(w.t));
  CHECK(a.p_raw == doctest::Approx(w.p));
  CHECK(a.p_bonferroni == doctest::Approx(std::min(1.0, 2.0 * w.p)));
  CHECK(a.stars == significance_stars(a.p_bonferroni));
  for (const auto& e : effects) {
    CHECK(e.p_bonferroni >= e.p_raw);
    CHECK(e.p_bonferroni <= 1.0);
  }

  t.outcomes.clear();
  t.before.resize(8, 0);
  t.during.resize(8, 0);
  CHECK(effect_report(s, t).empty());
}
