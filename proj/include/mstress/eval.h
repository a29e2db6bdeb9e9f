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

// Cross-validation harness and classification metrics: stratified k-fold
// plans, macro-averaged precision/recall/F1, rank-based AUC, ROC sweeps,
// feature-group ablation, coefficient rank deltas and Cohen's kappa.

#ifndef MSTRESS_EVAL_H_
#define MSTRESS_EVAL_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mstress/featurize.h"
#include "mstress/models.h"

namespace mstress::eval {

struct FoldPlan {
  size_t k = 0;
  std::vector<size_t> assignments;  // fold index of each sample

  std::vector<size_t> test_indices(size_t fold) const;
  std::vector<size_t> train_indices(size_t fold) const;
  std::vector<size_t> fold_sizes() const;
};

// Shuffled round-robin assignment; sizes differ by at most one. With
// labels, each class is dealt separately (continuing the round-robin
// offset), so per-fold class counts are within one of the global share.
// Throws ConfigError unless 2 <= k <= n.
FoldPlan kfold_split(size_t n, size_t k, uint64_t seed,
                     std::span<const int> labels = {});

struct ConfusionMatrix {
  size_t tp = 0;
  size_t fp = 0;
  size_t tn = 0;
  size_t fn = 0;

  size_t total() const { return tp + fp + tn + fn; }
};

struct Metrics {
  double precision = 0.0;  // macro over both classes
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::optional<double> auc;  // absent when only one class is present
};

struct Evaluation {
  Metrics metrics;
  ConfusionMatrix confusion;
};

inline constexpr double kDefaultThreshold = 0.5;

// Predicted class is 1 when score >= threshold. A class with no predicted
// members has precision 0.
Evaluation evaluate(std::span<const double> scores, std::span<const int> labels,
                    double threshold = kDefaultThreshold);

// Mann-Whitney AUC with midranks: (R1 - n1(n1+1)/2) / (n1 n0).
// Throws DegenerateError when a class is missing.
double auc(std::span<const double> scores, std::span<const int> labels);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // +inf for the (0,0) origin
};

using RocCurve = std::vector<RocPoint>;

// One point per distinct score, swept from the highest score down.
RocCurve roc_points(std::span<const double> scores, std::span<const int> labels);

double trapezoid_area(const RocCurve& curve);

// Featurized data for one fold: rows of `train` and `test` refer to the
// caller's indices through the fold plan.
struct FoldData {
  models::Dataset train;
  models::Dataset test;
  std::vector<featurize::FeatureGroup> groups;  // per column
};

using FoldBuilder = std::function<FoldData(std::span<const size_t> train_rows,
                                           std::span<const size_t> test_rows)>;

// Fits features on the train rows only (vocabulary and, inside the
// logistic model, standardization).
FoldBuilder text_fold_builder(std::vector<featurize::TokenList> documents,
                              std::vector<int> labels,
                              featurize::Resources resources,
                              size_t vocabulary_size);

// Slices a fixed, already featurized dataset.
FoldBuilder dataset_fold_builder(models::Dataset data,
                                 std::vector<featurize::FeatureGroup> groups);

struct CvConfig {
  models::TrainConfig train;
  double threshold = kDefaultThreshold;
  size_t jobs = 1;
};

struct CvRow {
  std::string name;  // model kind, or ablation configuration
  Metrics mean;      // fold means; auc averaged over folds where defined
  std::vector<Metrics> folds;
  std::vector<double> oof_scores;  // out-of-fold score per sample
  std::vector<int> labels;
};

struct CvTable {
  std::vector<CvRow> rows;

  const CvRow* find(const std::string& name) const;
};

// Per-fold fit on the train partition and evaluation on the test
// partition. Training errors are rethrown with the fold index prepended.
CvTable cross_validate(std::span<const models::ModelKind> kinds,
                       const FoldBuilder& build, std::span<const int> labels,
                       const FoldPlan& plan, const CvConfig& config);

// Logistic regression on the full feature set and on the full set minus
// each listed group; rows are named "full" and "-<group>".
CvTable ablation(const FoldBuilder& build, std::span<const int> labels,
                 const FoldPlan& plan,
                 std::span<const featurize::FeatureGroup> groups,
                 const CvConfig& config);

struct RankDeltaRow {
  std::string feature;
  size_t rank_a = 0;
  size_t rank_b = 0;
  long delta = 0;  // rank_b - rank_a
  std::string direction;  // "↓" rank number grew, "↑" shrank, "-" unchanged

  std::string label_a(size_t max_rank) const;
  std::string label_b(size_t max_rank) const;
};

struct RankDeltaReport {
  size_t max_rank = 0;
  std::vector<RankDeltaRow> rows;  // in model A's order
};

// Ranks in the bottom half of an ordering print relative to the maximum
// rank: "MR" for the last feature, "MR-3" for three above it.
std::string rank_label(size_t rank, size_t max_rank);

// Inputs are importance orderings as returned by models::coefficients().
// Throws DataError unless both cover the same feature set.
RankDeltaReport rank_delta(
    std::span<const std::pair<std::string, double>> importance_a,
    std::span<const std::pair<std::string, double>> importance_b);

// (p_o - p_e) / (1 - p_e); 1 when p_e == 1 and the labelings agree.
double cohen_kappa(std::span<const int> labels_a, std::span<const int> labels_b);

// CSV/JSON shapes for the report files.
void write_metrics_csv(std::ostream& out, const CvTable& table);
nlohmann::json metrics_json(const CvTable& table);
void write_roc_csv(std::ostream& out, const RocCurve& curve);
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm);
void write_rank_delta_csv(std::ostream& out, const RankDeltaReport& report);

}  // namespace mstress::eval

#endif  // MSTRESS_EVAL_H_
