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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>

#include "mstress/causal.h"
#include "mstress/commands.h"
#include "mstress/eval.h"
#include "mstress/models.h"
#include "mstress/rng.h"
#include "mstress/synth.h"
#include "oracles.h"

using namespace mstress;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs < budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s [%d] %s: %s (%.2f s, budget %.0f s%s)\n", pass ? "PASS" : "FAIL", id, name,
              o.detail.c_str(), secs, budget_s, in_time ? "" : ", over budget");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome baseline_row() {
  // Class-1 prevalence 0.461; the majority predictor says class 0.
  models::Dataset d;
  d.x = models::Matrix::Zero(1000, 1);
  d.y.assign(1000, 0);
  std::fill(d.y.begin(), d.y.begin() + 461, 1);
  d.schema = {"x"};
  const models::TrainedModel dummy = models::train_dummy(d);
  const std::vector<double> scores = models::predict_proba(dummy, d.x);
  const eval::Metrics m = eval::evaluate(scores, d.y).metrics;
  const double want[] = {0.269, 0.500, 0.350, 0.539, 0.500};
  const double got[] = {m.precision, m.recall, m.f1, m.accuracy, m.auc.value_or(-1.0)};
  bool ok = true;
  std::string detail;
  for (int i = 0; i < 5; ++i) {
    ok = ok && std::abs(got[i] - want[i]) <= 0.001;
    detail += fmt(i == 0 ? "%.4f" : " / %.4f", got[i]);
  }
  return {ok, "P/R/F1/Acc/AUC = " + detail};
}

Outcome auc_oracle() {
  Rng rng(101);
  double worst = 0.0;
  const int instances = 500;
  for (int t = 0; t < instances; ++t) {
    const size_t n = static_cast<size_t>(rng.range(2, 50));
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (size_t i = 0; i < n; ++i) {
      // Every other instance draws from 6 levels, forcing ties.
      s[i] = t % 2 == 0 ? static_cast<double>(rng.below(6)) : rng.uniform();
      y[i] = static_cast<int>(rng.below(2));
    }
    y[0] = 1;
    y[n - 1] = 0;
    worst = std::max(worst, std::abs(eval::auc(s, y) - oracle::pair_auc(s, y)));
  }
  return {worst <= 1e-9, std::to_string(instances) + " instances, max |diff| = " +
                             fmt("%.2e", worst)};
}

Outcome gradient_check() {
  Rng rng(102);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto n = static_cast<Eigen::Index>(rng.range(2, 20));
    const auto p = static_cast<Eigen::Index>(rng.range(1, 5));
    models::Matrix z(n, p);
    std::vector<int> y(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      y[static_cast<size_t>(i)] = static_cast<int>(rng.below(2));
      for (Eigen::Index j = 0; j < p; ++j) z(i, j) = rng.normal();
    }
    models::Vector w(p);
    for (Eigen::Index j = 0; j < p; ++j) w(j) = rng.normal();
    const double b = rng.normal();
    const double lambda = rng.uniform();
    models::Vector ga;
    models::Vector gn;
    double gba = 0.0;
    double gbn = 0.0;
    models::logistic_gradient(z, y, w, b, lambda, ga, gba);
    oracle::numeric_gradient(z, y, w, b, lambda, 1e-5, gn, gbn);
    const auto rel = [](double a, double e) {
      return std::abs(a - e) / std::max({std::abs(a), std::abs(e), 1e-3});
    };
    for (Eigen::Index j = 0; j < p; ++j) worst = std::max(worst, rel(ga(j), gn(j)));
    worst = std::max(worst, rel(gba, gbn));
  }
  return {worst <= 1e-5, "50 instances, max relative error = " + fmt("%.2e", worst)};
}

featurize::Resources resources_of(const synth::SyntheticStudy& s) {
  featurize::Resources r;
  r.lexicon = std::make_shared<const featurize::CategoryLexicon>(s.lexicon);
  r.embeddings = std::make_shared<const featurize::EmbeddingTable>(s.embeddings);
  r.sentiment = std::make_shared<const featurize::SentimentLexicon>(
      std::unordered_set<std::string>(s.positive_words.begin(), s.positive_words.end()),
      std::unordered_set<std::string>(s.negative_words.begin(), s.negative_words.end()));
  return r;
}

Outcome classifier_signal() {
  synth::SyntheticSpec spec;
  spec.n_minority = 0;
  spec.n_control = 0;
  spec.n_labeled = 2000;
  spec.seed = 7;
  const synth::SyntheticStudy study = synth::generate(spec);
  std::vector<featurize::TokenList> docs;
  std::vector<int> labels;
  for (const auto& p : study.labeled) {
    docs.push_back(featurize::tokenize(p.text));
    labels.push_back(p.label);
  }
  const eval::FoldPlan plan = eval::kfold_split(docs.size(), 10, spec.seed, labels);
  const eval::FoldBuilder build = eval::text_fold_builder(docs, labels, resources_of(study), 500);
  eval::CvConfig cfg;
  cfg.train.seed = spec.seed;
  const models::ModelKind kinds[] = {models::ModelKind::kDummy, models::ModelKind::kLogistic};
  const eval::CvTable table = eval::cross_validate(kinds, build, labels, plan, cfg);
  const featurize::FeatureGroup groups[] = {featurize::FeatureGroup::kNgram};
  const eval::CvTable abl = eval::ablation(build, labels, plan, groups, cfg);
  const double lr = *table.find("logistic")->mean.auc;
  const double dummy = *table.find("dummy")->mean.auc;
  const double full = *abl.find("full")->mean.auc;
  const double minus = *abl.find("-ngrams")->mean.auc;
  const bool ok = lr >= 0.95 && lr - dummy >= 0.40 && full - minus >= 0.2;
  return {ok, "logistic AUC " + fmt("%.4f", lr) + ", dummy " + fmt("%.4f", dummy) +
                  ", minus-ngrams " + fmt("%.4f", minus) + " (drop " +
                  fmt("%.4f", full - minus) + ")"};
}

Outcome te_oracle() {
  Rng rng(105);
  int exact = 0;
  for (int f = 0; f < 100; ++f) {
    const size_t strata = static_cast<size_t>(rng.range(1, 30));
    std::vector<double> te;
    std::vector<double> naive;
    for (size_t k = 0; k < strata; ++k) {
      std::vector<causal::OutcomeMeasurement> m;
      std::vector<causal::OutcomeMeasurement> c;
      const size_t n = static_cast<size_t>(rng.range(2, 120));
      for (size_t i = 0; i < n; ++i) {
        causal::OutcomeMeasurement o{"u" + std::to_string(rng.below(10000000)), "o",
                                     rng.uniform() * 0.1, rng.uniform() * 0.1};
        (rng.bernoulli(0.5) || m.empty() ? m : c).push_back(o);
      }
      if (c.empty()) c.push_back({"zz", "o", 0.01, 0.02});
      rng.shuffle(std::span<causal::OutcomeMeasurement>(m));
      te.push_back(causal::stratum_te(m, c));
      naive.push_back(oracle::stratum_te(m, c));
    }
    double sum = 0.0;
    for (double v : naive) sum += v;
    const double naive_mean = sum / static_cast<double>(naive.size());
    exact += te == naive && causal::mean_te(te) == naive_mean ? 1 : 0;
  }
  return {exact == 100, std::to_string(exact) + "/100 fixtures bitwise equal"};
}

struct StudyRun {
  double max_abs_within = 0.0;
  double planted_te = 0.0;
  std::vector<std::string> significant;
};

StudyRun run_synthetic(uint64_t seed, const std::string& planted) {
  synth::SyntheticSpec spec;
  spec.n_minority = 5000;
  spec.n_control = 5000;
  spec.n_labeled = 0;
  spec.planted_outcome = planted;
  spec.delta = 0.5;
  spec.seed = seed;
  const synth::SyntheticStudy s = synth::generate(spec);
  causal::StudyConfig cfg;
  cfg.propensity.seed = seed;
  const auto result = causal::run_study(s.users, corpus::build_timelines(s.posts), s.minority,
                                        s.control, s.lexicon, cfg);
  StudyRun r;
  r.max_abs_within = result.balance.max_abs_within;
  for (const auto& e : result.effects) {
    if (e.outcome == spec.planted_outcome) r.planted_te = e.mean_te;
    if (e.p_bonferroni < 0.05) r.significant.push_back(e.outcome);
  }
  return r;
}

std::vector<StudyRun> planted_runs;

Outcome balance_property() {
  int balanced = 0;
  double worst = 0.0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    planted_runs.push_back(run_synthetic(seed, "cat0"));
    balanced += planted_runs.back().max_abs_within < 0.2 ? 1 : 0;
    worst = std::max(worst, planted_runs.back().max_abs_within);
  }
  return {balanced >= 19, std::to_string(balanced) + "/20 seeds balanced, worst max |SMD| " +
                              fmt("%.3f", worst)};
}

Outcome effect_recovery() {
  // The planted studies are those stratified for the balance criterion.
  int recovered = 0;
  double worst = 0.0;
  for (const StudyRun& r : planted_runs) {
    worst = std::max(worst, std::abs(r.planted_te - 0.5));
    const bool only = r.significant.size() == 1 && r.significant[0] == "cat0";
    recovered += std::abs(r.planted_te - 0.5) <= 0.1 && only ? 1 : 0;
  }
  int quiet = 0;
  for (uint64_t seed = 101; seed <= 120; ++seed) {
    quiet += run_synthetic(seed, "").significant.empty() ? 1 : 0;
  }
  const bool ok = planted_runs.size() == 20 && recovered >= 18 && quiet >= 18;
  return {ok, "planted recovered in " + std::to_string(recovered) + "/20 (worst |TE - 0.5| " +
                  fmt("%.4f", worst) + "), null quiet in " + std::to_string(quiet) + "/20"};
}

Outcome statistics_oracles() {
  // Frozen from scipy.stats.ttest_ind(equal_var=False) and
  // sklearn.metrics.cohen_kappa_score.
  struct Case {
    std::vector<double> a, b;
    double t, df, p;
  };
  const Case cases[] = {
      {{1, 2, 3}, {1, 2, 3, 4, 5}, -1.0954451150103324, 5.882352941176469, 0.3161334219263932},
      {{2.1, 3.4, 1.9, 5.6, 4.4, 3.3},
       {0.5, 1.1, 0.9, 2.2},
       3.3611616909466853,
       7.753988946179734,
       0.010376203509253074},
  };
  double worst = 0.0;
  for (const Case& c : cases) {
    const causal::WelchResult w = causal::welch_t(c.a, c.b);
    worst = std::max({worst, std::abs(w.t - c.t), std::abs(w.df - c.df), std::abs(w.p - c.p)});
  }
  const double k2 = eval::cohen_kappa(std::vector<int>{1, 1, 0, 0, 1, 0, 1, 1, 0, 1},
                                      std::vector<int>{1, 0, 0, 0, 1, 0, 1, 1, 1, 1});
  const double k3 =
      eval::cohen_kappa(std::vector<int>{0, 1, 2, 2, 1, 0, 0, 2, 1, 1, 2, 0},
                        std::vector<int>{0, 1, 2, 1, 1, 0, 2, 2, 1, 0, 2, 0});
  worst = std::max({worst, std::abs(k2 - 0.5833333333333333), std::abs(k3 - 0.625)});
  const double d =
      causal::cohens_d(std::vector<double>{1, 2, 3}, std::vector<double>{0, 1, 2}).value_or(0);
  const bool ok = worst <= 1e-6 && std::abs(d - 1.0) <= 1e-12;
  return {ok, "max |diff| " + fmt("%.2e", worst) + ", unit d = " + fmt("%.15f", d)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "mstress_acceptance";
  fs::remove_all(root);
  std::ostringstream log;
  cli::GlobalOptions gen;
  gen.seed = 11;
  gen.out = root / "synth";
  gen.overrides = {"synth.n_minority=400", "synth.n_control=400", "synth.n_labeled=600"};
  const fs::path study = cli::cmd_synth(gen, log);

  size_t compared = 0;
  std::string mismatch;
  const auto twice = [&](const std::string& name, std::vector<std::string> overrides,
                         const std::function<fs::path(const cli::GlobalOptions&)>& cmd) {
    fs::path dirs[2];
    for (int i = 0; i < 2; ++i) {
      cli::GlobalOptions o;
      o.config = study / "study.ini";
      o.out = root / (name + std::to_string(i));
      o.jobs = i == 0 ? 1 : 2;
      o.overrides = overrides;
      dirs[i] = cmd(o);
    }
    for (const auto& e : fs::directory_iterator(dirs[0])) {
      const fs::path other = dirs[1] / e.path().filename();
      ++compared;
      if (!fs::exists(other) || slurp(e.path()) != slurp(other)) {
        mismatch += " " + name + "/" + e.path().filename().string();
      }
    }
  };
  twice("train-eval", {}, [&](const cli::GlobalOptions& o) { return cli::cmd_train_eval(o, log); });
  twice("causal", {"causal.n_strata=20", "causal.min_per_group=10"},
        [&](const cli::GlobalOptions& o) { return cli::cmd_causal(o, log); });
  fs::remove_all(root);
  return {mismatch.empty() && compared > 0,
          std::to_string(compared) + " files compared" +
              (mismatch.empty() ? ", all identical" : ", differing:" + mismatch)};
}

}  // namespace

int main() {
  criterion(1, "baseline row", 1, baseline_row);
  criterion(2, "AUC oracle", 5, auc_oracle);
  criterion(3, "gradient check", 5, gradient_check);
  criterion(4, "classifier signal", 60, classifier_signal);
  criterion(5, "treatment-effect oracle", 5, te_oracle);
  criterion(6, "balance property", 120, balance_property);
  criterion(7, "effect recovery", 120, effect_recovery);
  criterion(8, "statistics oracles", 5, statistics_oracles);
  criterion(9, "determinism", 600, determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
