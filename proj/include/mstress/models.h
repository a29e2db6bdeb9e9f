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

// Binary classifiers with a common probabilistic prediction contract:
// majority baseline, Gaussian naive Bayes, L2 logistic regression trained
// by full-batch gradient descent, and a Gini decision tree.
//
// Every trainer first puts the training rows into a canonical order, so a
// fitted model is bitwise independent of the order rows were supplied in.

#ifndef MSTRESS_MODELS_H_
#define MSTRESS_MODELS_H_

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace mstress::models {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Dataset {
  Matrix x;                          // n x p
  std::vector<int> y;                // 0/1, length n
  std::vector<std::string> schema;   // p feature names

  size_t rows() const { return static_cast<size_t>(x.rows()); }
  size_t cols() const { return static_cast<size_t>(x.cols()); }

  // Throws DataError on shape mismatch, non-finite entries, labels outside
  // {0,1} or fewer than two rows; DegenerateError("degenerate labels") when
  // `require_both_classes` and only one class is present.
  void validate(bool require_both_classes) const;

  Dataset select_rows(std::span<const size_t> rows) const;
  Dataset select_cols(std::span<const size_t> cols) const;
};

struct TrainConfig {
  uint64_t seed = 0;
  // Multiplier on the safe step 1/L, L the Lipschitz constant of the
  // objective's gradient (estimated by power iteration).
  double learning_rate = 1.0;
  int max_iters = 500;
  double tolerance = 1e-4;  // on the gradient infinity norm
  double lambda = 1e-2;
  std::vector<double> lambda_grid;  // empty: use `lambda`
  size_t inner_folds = 3;
  int tree_max_depth = 8;  // < 0: unlimited
  size_t tree_min_leaf = 5;

  void validate() const;
};

struct LogisticModel {
  std::vector<std::string> schema;
  Vector weights;  // on standardized features
  double bias = 0.0;
  Vector mean;
  Vector sd;
  std::vector<bool> constant;  // zero-variance features; weight held at 0
  double lambda = 0.0;
  int iterations = 0;
  bool converged = false;

  double predict_proba(std::span<const double> x) const;
};

struct NaiveBayesModel {
  static constexpr double kVarianceFloor = 1e-9;

  std::vector<std::string> schema;
  Vector mean[2];
  Vector variance[2];
  double prior[2] = {0.5, 0.5};

  double predict_proba(std::span<const double> x) const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  double probability = 0.0;  // class-1 fraction of training rows reaching it
  size_t samples = 0;
};

struct DecisionTreeModel {
  std::vector<std::string> schema;
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int max_depth = 0;
  size_t min_leaf = 1;

  double predict_proba(std::span<const double> x) const;
  int depth() const;
  size_t leaf_count() const;
};

struct DummyModel {
  std::vector<std::string> schema;
  double probability = 0.0;  // training prevalence of class 1
  int majority = 0;

  double predict_proba(std::span<const double> x) const;
};

using TrainedModel =
    std::variant<DummyModel, NaiveBayesModel, LogisticModel, DecisionTreeModel>;

enum class ModelKind { kDummy, kNaiveBayes, kLogistic, kDecisionTree };

inline constexpr ModelKind kAllModelKinds[] = {
    ModelKind::kDummy, ModelKind::kDecisionTree, ModelKind::kNaiveBayes,
    ModelKind::kLogistic};

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);
ModelKind kind_of(const TrainedModel& model);

// Regularized objective on already standardized features z:
//   mean_i log(1 + exp(z_i.w + b)) - y_i (z_i.w + b)  +  lambda/2 |w|^2
double logistic_objective(const Matrix& z, std::span<const int> y,
                          const Vector& w, double b, double lambda);

// Analytic gradient of logistic_objective.
void logistic_gradient(const Matrix& z, std::span<const int> y,
                       const Vector& w, double b, double lambda,
                       Vector& grad_w, double& grad_b);

// Fits with `config.lambda`, or selects lambda from `config.lambda_grid` by
// inner-fold validation log loss and refits. When `objective_trace` is set
// it receives the objective before every step.
LogisticModel train_logistic(const Dataset& data, const TrainConfig& config,
                             std::vector<double>* objective_trace = nullptr);

NaiveBayesModel train_naive_bayes(const Dataset& data);

DecisionTreeModel train_tree(const Dataset& data, int max_depth,
                             size_t min_leaf, uint64_t seed = 0);

DummyModel train_dummy(const Dataset& data);

TrainedModel train(ModelKind kind, const Dataset& data,
                   const TrainConfig& config);

// Throws DataError when |x| differs from the model's feature count.
double predict_proba(const TrainedModel& model, std::span<const double> x);
std::vector<double> predict_proba(const TrainedModel& model, const Matrix& x);

// Features sorted by standardized weight descending (ties by name), so
// rank 1 is the strongest positive-class indicator.
std::vector<std::pair<std::string, double>> coefficients(
    const LogisticModel& model);

// Versioned JSON document: {"format": "mstress-model", "version": 1,
// "kind": ..., "schema": [...], ...parameters}.
nlohmann::json to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& doc);

}  // namespace mstress::models

#endif  // MSTRESS_MODELS_H_
