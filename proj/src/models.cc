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

#include "mstress/models.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mstress/error.h"
#include "mstress/rng.h"

namespace mstress::models {

using nlohmann::json;

namespace {

constexpr double kConstantSd = 1e-12;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  if (z > 0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

void check_width(size_t expected, size_t got) {
  if (expected != got) {
    throw DataError("feature vector has " + std::to_string(got) +
                    " entries, model expects " + std::to_string(expected));
  }
}

// Row permutation that sorts rows lexicographically by (x, y).
std::vector<size_t> canonical_order(const Dataset& data) {
  std::vector<size_t> order(data.rows());
  std::iota(order.begin(), order.end(), 0);
  const Matrix& x = data.x;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double va = x(static_cast<Eigen::Index>(a), j);
      const double vb = x(static_cast<Eigen::Index>(b), j);
      if (va != vb) return va < vb;
    }
    return data.y[a] < data.y[b];
  });
  return order;
}

Dataset canonical(const Dataset& data) {
  const std::vector<size_t> order = canonical_order(data);
  return data.select_rows(order);
}

struct Standardized {
  Matrix z;
  Vector mean;
  Vector sd;
  std::vector<bool> constant;
};

Standardized standardize(const Matrix& x) {
  Standardized s;
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  s.mean = x.colwise().mean().transpose();
  s.sd.resize(p);
  s.constant.assign(static_cast<size_t>(p), false);
  s.z.resize(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double m = s.mean(j);
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = x(i, j) - m;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (sd < kConstantSd) {
      s.constant[static_cast<size_t>(j)] = true;
      s.sd(j) = 1.0;
      s.z.col(j).setZero();
    } else {
      s.sd(j) = sd;
      s.z.col(j) = (x.col(j).array() - m) / sd;
    }
  }
  return s;
}

// Largest eigenvalue of z'z/n by power iteration from a fixed start.
double top_eigenvalue(const Matrix& z) {
  const Eigen::Index p = z.cols();
  if (p == 0 || z.rows() == 0) return 0.0;
  Vector v = Vector::Ones(p) / std::sqrt(static_cast<double>(p));
  double lambda = 0.0;
  for (int it = 0; it < 100; ++it) {
    Vector u = z.transpose() * (z * v);
    u /= static_cast<double>(z.rows());
    const double norm = u.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(u);
    v = u / norm;
    if (std::abs(next - lambda) <= 1e-6 * std::max(1.0, next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda;
}

struct GdResult {
  Vector w;
  double b = 0.0;
  int iterations = 0;
  bool converged = false;
};

GdResult gradient_descent(const Matrix& z, std::span<const int> y,
                          double lambda, const TrainConfig& config,
                          std::vector<double>* trace) {
  const Eigen::Index p = z.cols();
  // Feature columns are centered, so the Hessian of the augmented problem
  // [z 1] is block diagonal and its top eigenvalue is max(top(z'z/n), 1)/4.
  const double lipschitz = 0.25 * std::max(top_eigenvalue(z), 1.0) + lambda;
  const double step = config.learning_rate / lipschitz;

  // Starting the bias at the logit of the prevalence makes w = 0 the exact
  // optimum in the lambda -> infinity limit.
  GdResult r;
  r.w = Vector::Zero(p);
  double ones = 0.0;
  for (int v : y) ones += v;
  const double prevalence = ones / static_cast<double>(y.size());
  r.b = std::log(prevalence / (1.0 - prevalence));
  Vector gw(p);
  double gb = 0.0;
  for (int it = 0; it < config.max_iters; ++it) {
    if (trace != nullptr) {
      trace->push_back(logistic_objective(z, y, r.w, r.b, lambda));
    }
    logistic_gradient(z, y, r.w, r.b, lambda, gw, gb);
    const double gnorm = std::max(p > 0 ? gw.lpNorm<Eigen::Infinity>() : 0.0,
                                  std::abs(gb));
    if (gnorm < config.tolerance) {
      r.converged = true;
      r.iterations = it;
      return r;
    }
    r.w -= step * gw;
    r.b -= step * gb;
    r.iterations = it + 1;
  }
  logistic_gradient(z, y, r.w, r.b, lambda, gw, gb);
  r.converged = std::max(p > 0 ? gw.lpNorm<Eigen::Infinity>() : 0.0,
                         std::abs(gb)) < config.tolerance;
  return r;
}

LogisticModel fit_logistic_fixed(const Dataset& data, double lambda,
                                 const TrainConfig& config,
                                 std::vector<double>* trace) {
  Standardized s = standardize(data.x);
  GdResult gd = gradient_descent(s.z, data.y, lambda, config, trace);
  LogisticModel m;
  m.schema = data.schema;
  m.weights = std::move(gd.w);
  for (size_t j = 0; j < s.constant.size(); ++j) {
    if (s.constant[j]) m.weights(static_cast<Eigen::Index>(j)) = 0.0;
  }
  m.bias = gd.b;
  m.mean = std::move(s.mean);
  m.sd = std::move(s.sd);
  m.constant = std::move(s.constant);
  m.lambda = lambda;
  m.iterations = gd.iterations;
  m.converged = gd.converged;
  return m;
}

bool has_both_classes(std::span<const int> y) {
  bool zero = false;
  bool one = false;
  for (int v : y) (v == 1 ? one : zero) = true;
  return zero && one;
}

double mean_log_loss(const TrainedModel& model, const Dataset& data) {
  const std::vector<double> p = predict_proba(model, data.x);
  double loss = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], 1e-15, 1.0 - 1e-15);
    loss -= data.y[i] == 1 ? std::log(q) : std::log(1.0 - q);
  }
  return loss / static_cast<double>(p.size());
}

double select_lambda(const Dataset& data, const TrainConfig& config) {
  const size_t n = data.rows();
  const size_t folds = std::min(config.inner_folds, n);
  if (folds < 2) return config.lambda_grid.front();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  rng.shuffle(std::span<size_t>(order));
  double best_loss = std::numeric_limits<double>::infinity();
  double best = config.lambda_grid.front();
  for (double lambda : config.lambda_grid) {
    double total = 0.0;
    size_t used = 0;
    for (size_t f = 0; f < folds; ++f) {
      std::vector<size_t> train_rows;
      std::vector<size_t> valid_rows;
      for (size_t i = 0; i < n; ++i) {
        (i % folds == f ? valid_rows : train_rows).push_back(order[i]);
      }
      const Dataset train = data.select_rows(train_rows);
      if (!has_both_classes(train.y) || valid_rows.empty()) continue;
      const Dataset valid = data.select_rows(valid_rows);
      const LogisticModel m = fit_logistic_fixed(train, lambda, config, nullptr);
      total += mean_log_loss(m, valid);
      ++used;
    }
    if (used == 0) continue;
    const double loss = total / static_cast<double>(used);
    if (loss < best_loss) {
      best_loss = loss;
      best = lambda;
    }
  }
  return best;
}

double gini_sum(size_t n, size_t ones) {
  // n * gini(node) = n - (ones^2 + zeros^2) / n
  if (n == 0) return 0.0;
  const double a = static_cast<double>(ones);
  const double b = static_cast<double>(n - ones);
  return static_cast<double>(n) - (a * a + b * b) / static_cast<double>(n);
}

}  // namespace

void Dataset::validate(bool require_both_classes) const {
  if (static_cast<size_t>(x.rows()) != y.size()) {
    throw DataError("dataset has " + std::to_string(x.rows()) + " rows but " +
                    std::to_string(y.size()) + " labels");
  }
  if (static_cast<size_t>(x.cols()) != schema.size()) {
    throw DataError("dataset schema does not match its column count");
  }
  if (rows() < 2) throw DataError("dataset needs at least two rows");
  if (!x.allFinite()) throw DataError("dataset contains non-finite values");
  for (int v : y) {
    if (v != 0 && v != 1) throw DataError("labels must be 0 or 1");
  }
  if (require_both_classes && !has_both_classes(y)) {
    throw DegenerateError("degenerate labels");
  }
}

Dataset Dataset::select_rows(std::span<const size_t> rows) const {
  Dataset out;
  out.schema = schema;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  out.y.resize(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
    out.y[i] = y[rows[i]];
  }
  return out;
}

Dataset Dataset::select_cols(std::span<const size_t> cols) const {
  Dataset out;
  out.y = y;
  out.x.resize(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) {
    out.x.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(cols[j]));
    out.schema.push_back(schema.at(cols[j]));
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(tolerance >= 0.0)) throw ConfigError("tolerance must be >= 0");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  for (double l : lambda_grid) {
    if (!(l >= 0.0)) throw ConfigError("lambda grid values must be >= 0");
  }
  if (tree_min_leaf < 1) throw ConfigError("tree_min_leaf must be >= 1");
}

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kDummy:
      return "dummy";
    case ModelKind::kNaiveBayes:
      return "naive_bayes";
    case ModelKind::kLogistic:
      return "logistic";
    case ModelKind::kDecisionTree:
      return "decision_tree";
  }
  return "?";
}

ModelKind model_kind_from_string(std::string_view name) {
  for (ModelKind k : kAllModelKinds) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

ModelKind kind_of(const TrainedModel& model) {
  return std::visit(
      [](const auto& m) -> ModelKind {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DummyModel>) return ModelKind::kDummy;
        if constexpr (std::is_same_v<T, NaiveBayesModel>) return ModelKind::kNaiveBayes;
        if constexpr (std::is_same_v<T, LogisticModel>) return ModelKind::kLogistic;
        return ModelKind::kDecisionTree;
      },
      model);
}

double logistic_objective(const Matrix& z, std::span<const int> y,
                          const Vector& w, double b, double lambda) {
  const Vector margin = (z * w).array() + b;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < margin.size(); ++i) {
    loss += softplus(margin(i)) - y[static_cast<size_t>(i)] * margin(i);
  }
  return loss / static_cast<double>(margin.size()) + 0.5 * lambda * w.squaredNorm();
}

void logistic_gradient(const Matrix& z, std::span<const int> y,
                       const Vector& w, double b, double lambda,
                       Vector& grad_w, double& grad_b) {
  const Eigen::Index n = z.rows();
  Vector residual = (z * w).array() + b;
  for (Eigen::Index i = 0; i < n; ++i) {
    residual(i) = sigmoid(residual(i)) - y[static_cast<size_t>(i)];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  grad_w = (z.transpose() * residual) * inv_n + lambda * w;
  grad_b = residual.sum() * inv_n;
}

LogisticModel train_logistic(const Dataset& raw, const TrainConfig& config,
                             std::vector<double>* objective_trace) {
  config.validate();
  raw.validate(true);
  const Dataset data = canonical(raw);
  double lambda = config.lambda;
  if (!config.lambda_grid.empty()) lambda = select_lambda(data, config);
  return fit_logistic_fixed(data, lambda, config, objective_trace);
}

double LogisticModel::predict_proba(std::span<const double> x) const {
  check_width(static_cast<size_t>(weights.size()), x.size());
  double margin = bias;
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    if (constant[static_cast<size_t>(j)]) continue;
    margin += weights(j) * ((x[static_cast<size_t>(j)] - mean(j)) / sd(j));
  }
  return sigmoid(margin);
}

NaiveBayesModel train_naive_bayes(const Dataset& raw) {
  raw.validate(true);
  const Dataset data = canonical(raw);
  NaiveBayesModel m;
  m.schema = data.schema;
  const Eigen::Index p = data.x.cols();
  size_t count[2] = {0, 0};
  for (int c = 0; c < 2; ++c) {
    m.mean[c] = Vector::Zero(p);
    m.variance[c] = Vector::Zero(p);
  }
  for (size_t i = 0; i < data.rows(); ++i) {
    const int c = data.y[i];
    m.mean[c] += data.x.row(static_cast<Eigen::Index>(i)).transpose();
    ++count[c];
  }
  for (int c = 0; c < 2; ++c) m.mean[c] /= static_cast<double>(count[c]);
  for (size_t i = 0; i < data.rows(); ++i) {
    const int c = data.y[i];
    const Vector d = data.x.row(static_cast<Eigen::Index>(i)).transpose() - m.mean[c];
    m.variance[c] += d.cwiseProduct(d);
  }
  for (int c = 0; c < 2; ++c) {
    m.variance[c] /= static_cast<double>(count[c]);
    m.variance[c] = m.variance[c].cwiseMax(NaiveBayesModel::kVarianceFloor);
    m.prior[c] = static_cast<double>(count[c]) / static_cast<double>(data.rows());
  }
  return m;
}

double NaiveBayesModel::predict_proba(std::span<const double> x) const {
  check_width(static_cast<size_t>(mean[0].size()), x.size());
  double log_joint[2];
  for (int c = 0; c < 2; ++c) {
    double l = std::log(prior[c]);
    for (Eigen::Index j = 0; j < mean[c].size(); ++j) {
      const double d = x[static_cast<size_t>(j)] - mean[c](j);
      l -= 0.5 * std::log(2.0 * M_PI * variance[c](j)) +
           d * d / (2.0 * variance[c](j));
    }
    log_joint[c] = l;
  }
  return sigmoid(log_joint[1] - log_joint[0]);
}

DecisionTreeModel train_tree(const Dataset& raw, int max_depth, size_t min_leaf,
                             uint64_t /*seed*/) {
  raw.validate(true);
  if (min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
  const Dataset data = canonical(raw);
  DecisionTreeModel tree;
  tree.schema = data.schema;
  tree.max_depth = max_depth;
  tree.min_leaf = min_leaf;

  struct Pending {
    int node;
    int depth;
    std::vector<size_t> rows;
  };
  std::vector<Pending> stack;
  std::vector<size_t> all(data.rows());
  std::iota(all.begin(), all.end(), 0);
  tree.nodes.emplace_back();
  stack.push_back({0, 0, std::move(all)});

  std::vector<std::pair<double, int>> column;
  while (!stack.empty()) {
    Pending work = std::move(stack.back());
    stack.pop_back();
    const size_t n = work.rows.size();
    size_t ones = 0;
    for (size_t r : work.rows) ones += static_cast<size_t>(data.y[r]);
    TreeNode& node = tree.nodes[static_cast<size_t>(work.node)];
    node.samples = n;
    node.probability = static_cast<double>(ones) / static_cast<double>(n);
    const bool pure = ones == 0 || ones == n;
    const bool depth_left = max_depth < 0 || work.depth < max_depth;
    if (pure || !depth_left || n < 2 * min_leaf) continue;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_impurity = std::numeric_limits<double>::infinity();
    for (Eigen::Index f = 0; f < data.x.cols(); ++f) {
      column.clear();
      for (size_t r : work.rows) {
        column.emplace_back(data.x(static_cast<Eigen::Index>(r), f), data.y[r]);
      }
      std::sort(column.begin(), column.end());
      size_t left_ones = 0;
      for (size_t i = 0; i + 1 < n; ++i) {
        left_ones += static_cast<size_t>(column[i].second);
        if (column[i].first == column[i + 1].first) continue;
        const size_t left_n = i + 1;
        const size_t right_n = n - left_n;
        if (left_n < min_leaf || right_n < min_leaf) continue;
        const double impurity =
            gini_sum(left_n, left_ones) + gini_sum(right_n, ones - left_ones);
        // Strict improvement keeps the lowest (feature, threshold) on ties.
        if (impurity < best_impurity - 1e-12) {
          const double lo = column[i].first;
          const double hi = column[i + 1].first;
          double mid = lo + (hi - lo) / 2.0;
          if (!(mid < hi)) mid = lo;
          best_impurity = impurity;
          best_feature = static_cast<int>(f);
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) continue;

    std::vector<size_t> left_rows;
    std::vector<size_t> right_rows;
    for (size_t r : work.rows) {
      (data.x(static_cast<Eigen::Index>(r), best_feature) <= best_threshold
           ? left_rows
           : right_rows)
          .push_back(r);
    }
    const int left = static_cast<int>(tree.nodes.size());
    const int right = left + 1;
    {
      TreeNode& parent = tree.nodes[static_cast<size_t>(work.node)];
      parent.feature = best_feature;
      parent.threshold = best_threshold;
      parent.left = left;
      parent.right = right;
    }
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    stack.push_back({right, work.depth + 1, std::move(right_rows)});
    stack.push_back({left, work.depth + 1, std::move(left_rows)});
  }
  return tree;
}

double DecisionTreeModel::predict_proba(std::span<const double> x) const {
  check_width(schema.size(), x.size());
  size_t at = 0;
  while (nodes[at].feature >= 0) {
    const TreeNode& n = nodes[at];
    at = static_cast<size_t>(x[static_cast<size_t>(n.feature)] <= n.threshold
                                 ? n.left
                                 : n.right);
  }
  return nodes[at].probability;
}

int DecisionTreeModel::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].feature < 0) continue;
    d[static_cast<size_t>(nodes[i].left)] = d[i] + 1;
    d[static_cast<size_t>(nodes[i].right)] = d[i] + 1;
    deepest = std::max(deepest, d[i] + 1);
  }
  return deepest;
}

size_t DecisionTreeModel::leaf_count() const {
  return static_cast<size_t>(std::count_if(
      nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

DummyModel train_dummy(const Dataset& data) {
  data.validate(true);
  DummyModel m;
  m.schema = data.schema;
  size_t ones = 0;
  for (int v : data.y) ones += static_cast<size_t>(v);
  m.probability = static_cast<double>(ones) / static_cast<double>(data.rows());
  m.majority = m.probability >= 0.5 ? 1 : 0;
  return m;
}

double DummyModel::predict_proba(std::span<const double> x) const {
  check_width(schema.size(), x.size());
  return probability;
}

TrainedModel train(ModelKind kind, const Dataset& data,
                   const TrainConfig& config) {
  switch (kind) {
    case ModelKind::kDummy:
      return train_dummy(data);
    case ModelKind::kNaiveBayes:
      return train_naive_bayes(data);
    case ModelKind::kLogistic:
      return train_logistic(data, config);
    case ModelKind::kDecisionTree:
      return train_tree(data, config.tree_max_depth, config.tree_min_leaf,
                        config.seed);
  }
  throw ConfigError("unknown model kind");
}

double predict_proba(const TrainedModel& model, std::span<const double> x) {
  return std::visit([&](const auto& m) { return m.predict_proba(x); }, model);
}

std::vector<double> predict_proba(const TrainedModel& model, const Matrix& x) {
  std::vector<double> out(static_cast<size_t>(x.rows()));
  std::vector<double> row(static_cast<size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) row[static_cast<size_t>(j)] = x(i, j);
    out[static_cast<size_t>(i)] = predict_proba(model, row);
  }
  return out;
}

std::vector<std::pair<std::string, double>> coefficients(
    const LogisticModel& model) {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(model.schema.size());
  for (size_t j = 0; j < model.schema.size(); ++j) {
    out.emplace_back(model.schema[j], model.weights(static_cast<Eigen::Index>(j)));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

namespace {

json vec_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector json_vec(const json& a, size_t expected, const char* what) {
  if (!a.is_array() || a.size() != expected) {
    throw DataError(std::string("model field '") + what + "' has wrong length");
  }
  Vector v(static_cast<Eigen::Index>(expected));
  for (size_t i = 0; i < expected; ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

}  // namespace

json to_json(const TrainedModel& model) {
  json doc;
  doc["format"] = "mstress-model";
  doc["version"] = 1;
  doc["kind"] = to_string(kind_of(model));
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        doc["schema"] = m.schema;
        if constexpr (std::is_same_v<T, DummyModel>) {
          doc["probability"] = m.probability;
          doc["majority"] = m.majority;
        } else if constexpr (std::is_same_v<T, NaiveBayesModel>) {
          doc["prior"] = {m.prior[0], m.prior[1]};
          doc["mean"] = {vec_json(m.mean[0]), vec_json(m.mean[1])};
          doc["variance"] = {vec_json(m.variance[0]), vec_json(m.variance[1])};
        } else if constexpr (std::is_same_v<T, LogisticModel>) {
          doc["weights"] = vec_json(m.weights);
          doc["bias"] = m.bias;
          doc["standardization"] = {{"mean", vec_json(m.mean)},
                                    {"sd", vec_json(m.sd)},
                                    {"constant", m.constant}};
          doc["lambda"] = m.lambda;
          doc["iterations"] = m.iterations;
          doc["converged"] = m.converged;
        } else {
          doc["max_depth"] = m.max_depth;
          doc["min_leaf"] = m.min_leaf;
          json nodes = json::array();
          for (const TreeNode& n : m.nodes) {
            nodes.push_back({{"feature", n.feature},
                             {"threshold", n.threshold},
                             {"left", n.left},
                             {"right", n.right},
                             {"probability", n.probability},
                             {"samples", n.samples}});
          }
          doc["nodes"] = std::move(nodes);
        }
      },
      model);
  return doc;
}

TrainedModel model_from_json(const json& doc) {
  try {
    if (doc.value("format", "") != "mstress-model") {
      throw DataError("not an mstress model document");
    }
    if (doc.at("version").get<int>() != 1) {
      throw DataError("unsupported model version");
    }
    const ModelKind kind = model_kind_from_string(doc.at("kind").get<std::string>());
    const auto schema = doc.at("schema").get<std::vector<std::string>>();
    const size_t p = schema.size();
    switch (kind) {
      case ModelKind::kDummy: {
        DummyModel m;
        m.schema = schema;
        m.probability = doc.at("probability").get<double>();
        m.majority = doc.at("majority").get<int>();
        return m;
      }
      case ModelKind::kNaiveBayes: {
        NaiveBayesModel m;
        m.schema = schema;
        for (int c = 0; c < 2; ++c) {
          m.prior[c] = doc.at("prior").at(static_cast<size_t>(c)).get<double>();
          m.mean[c] = json_vec(doc.at("mean").at(static_cast<size_t>(c)), p, "mean");
          m.variance[c] =
              json_vec(doc.at("variance").at(static_cast<size_t>(c)), p, "variance");
        }
        return m;
      }
      case ModelKind::kLogistic: {
        LogisticModel m;
        m.schema = schema;
        m.weights = json_vec(doc.at("weights"), p, "weights");
        m.bias = doc.at("bias").get<double>();
        const json& st = doc.at("standardization");
        m.mean = json_vec(st.at("mean"), p, "mean");
        m.sd = json_vec(st.at("sd"), p, "sd");
        m.constant = st.at("constant").get<std::vector<bool>>();
        if (m.constant.size() != p) throw DataError("constant flags have wrong length");
        m.lambda = doc.at("lambda").get<double>();
        m.iterations = doc.value("iterations", 0);
        m.converged = doc.value("converged", false);
        return m;
      }
      case ModelKind::kDecisionTree: {
        DecisionTreeModel m;
        m.schema = schema;
        m.max_depth = doc.at("max_depth").get<int>();
        m.min_leaf = doc.at("min_leaf").get<size_t>();
        for (const json& n : doc.at("nodes")) {
          TreeNode t;
          t.feature = n.at("feature").get<int>();
          t.threshold = n.at("threshold").get<double>();
          t.left = n.at("left").get<int>();
          t.right = n.at("right").get<int>();
          t.probability = n.at("probability").get<double>();
          t.samples = n.at("samples").get<size_t>();
          m.nodes.push_back(t);
        }
        if (m.nodes.empty()) throw DataError("tree has no nodes");
        for (const TreeNode& t : m.nodes) {
          if (t.feature >= static_cast<int>(p) ||
              (t.feature >= 0 &&
               (t.left <= 0 || t.right <= 0 ||
                t.left >= static_cast<int>(m.nodes.size()) ||
                t.right >= static_cast<int>(m.nodes.size())))) {
            throw DataError("tree node structure is invalid");
          }
        }
        return m;
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  }
  throw DataError("unknown model kind");
}

}  // namespace mstress::models
