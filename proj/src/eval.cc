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

#include "mstress/eval.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <thread>
#include <unordered_map>

#include "mstress/error.h"
#include "mstress/rng.h"
#include "mstress/text.h"

namespace mstress::eval {

using nlohmann::json;

std::vector<size_t> FoldPlan::test_indices(size_t fold) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<size_t> FoldPlan::train_indices(size_t fold) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(i);
  }
  return out;
}

std::vector<size_t> FoldPlan::fold_sizes() const {
  std::vector<size_t> sizes(k, 0);
  for (size_t a : assignments) ++sizes[a];
  return sizes;
}

FoldPlan kfold_split(size_t n, size_t k, uint64_t seed,
                     std::span<const int> labels) {
  if (k < 2) throw ConfigError("k-fold needs k >= 2");
  if (k > n) {
    throw ConfigError("k-fold needs k <= n (k=" + std::to_string(k) +
                      ", n=" + std::to_string(n) + ")");
  }
  if (!labels.empty() && labels.size() != n) {
    throw DataError("fold labels do not match the sample count");
  }
  FoldPlan plan;
  plan.k = k;
  plan.assignments.assign(n, 0);
  Rng rng(seed);
  std::vector<std::vector<size_t>> strata;
  if (labels.empty()) {
    strata.emplace_back(n);
    std::iota(strata[0].begin(), strata[0].end(), 0);
  } else {
    std::map<int, std::vector<size_t>> by_label;
    for (size_t i = 0; i < n; ++i) by_label[labels[i]].push_back(i);
    for (auto& [label, idx] : by_label) strata.push_back(std::move(idx));
  }
  size_t next = 0;
  for (std::vector<size_t>& members : strata) {
    rng.shuffle(std::span<size_t>(members));
    for (size_t i : members) {
      plan.assignments[i] = next;
      next = (next + 1) % k;
    }
  }
  return plan;
}

Evaluation evaluate(std::span<const double> scores, std::span<const int> labels,
                    double threshold) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw DataError("evaluate needs equally sized, nonempty scores and labels");
  }
  Evaluation ev;
  ConfusionMatrix& cm = ev.confusion;
  for (size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      (predicted ? cm.tp : cm.fn)++;
    } else {
      (predicted ? cm.fp : cm.tn)++;
    }
  }
  const auto ratio = [](size_t num, size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  const auto f1 = [](double p, double r) {
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  };
  const double p1 = ratio(cm.tp, cm.tp + cm.fp);
  const double r1 = ratio(cm.tp, cm.tp + cm.fn);
  const double p0 = ratio(cm.tn, cm.tn + cm.fn);
  const double r0 = ratio(cm.tn, cm.tn + cm.fp);
  Metrics& m = ev.metrics;
  m.precision = (p0 + p1) / 2.0;
  m.recall = (r0 + r1) / 2.0;
  m.f1 = (f1(p0, r0) + f1(p1, r1)) / 2.0;
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  if (cm.tp + cm.fn > 0 && cm.tn + cm.fp > 0) m.auc = auc(scores, labels);
  return ev;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw DataError("auc needs equally sized scores and labels");
  }
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  size_t n1 = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j+1 share the midrank.
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t t = i; t <= j; ++t) {
      if (labels[order[t]] == 1) {
        rank_sum += midrank;
        ++n1;
      }
    }
    i = j + 1;
  }
  const size_t n0 = n - n1;
  if (n1 == 0 || n0 == 0) throw DegenerateError("auc needs both classes");
  const double d1 = static_cast<double>(n1);
  return (rank_sum - d1 * (d1 + 1.0) / 2.0) / (d1 * static_cast<double>(n0));
}

RocCurve roc_points(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw DataError("roc needs equally sized scores and labels");
  }
  size_t pos = 0;
  for (int y : labels) pos += y == 1 ? 1 : 0;
  const size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw DegenerateError("roc needs both classes");
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  RocCurve curve;
  curve.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  size_t tp = 0;
  size_t fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] == 1 ? tp : fp)++;
      ++i;
    }
    curve.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                     static_cast<double>(tp) / static_cast<double>(pos), s});
  }
  return curve;
}

double trapezoid_area(const RocCurve& curve) {
  double area = 0.0;
  for (size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].fpr - curve[i - 1].fpr) *
            (curve[i].tpr + curve[i - 1].tpr) / 2.0;
  }
  return area;
}

FoldBuilder text_fold_builder(std::vector<featurize::TokenList> documents,
                              std::vector<int> labels,
                              featurize::Resources resources,
                              size_t vocabulary_size) {
  if (documents.size() != labels.size()) {
    throw DataError("documents and labels differ in length");
  }
  auto docs = std::make_shared<const std::vector<featurize::TokenList>>(
      std::move(documents));
  auto ys = std::make_shared<const std::vector<int>>(std::move(labels));
  return [docs, ys, resources, vocabulary_size](
             std::span<const size_t> train_rows,
             std::span<const size_t> test_rows) {
    std::vector<featurize::TokenList> train_docs;
    train_docs.reserve(train_rows.size());
    for (size_t r : train_rows) train_docs.push_back((*docs)[r]);
    const featurize::Featurizer fz =
        featurize::Featurizer::fit(resources, train_docs, vocabulary_size);
    const featurize::FeatureSchema& schema = fz.schema();
    const auto fill = [&](std::span<const size_t> rows) {
      models::Dataset d;
      d.schema = schema.names;
      d.x.resize(static_cast<Eigen::Index>(rows.size()),
                 static_cast<Eigen::Index>(schema.size()));
      d.y.resize(rows.size());
      std::vector<double> buf(schema.size());
      for (size_t i = 0; i < rows.size(); ++i) {
        fz.featurize_into((*docs)[rows[i]], buf);
        for (size_t j = 0; j < buf.size(); ++j) {
          d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = buf[j];
        }
        d.y[i] = (*ys)[rows[i]];
      }
      return d;
    };
    FoldData fd;
    fd.train = fill(train_rows);
    fd.test = fill(test_rows);
    fd.groups = schema.groups;
    return fd;
  };
}

FoldBuilder dataset_fold_builder(models::Dataset data,
                                 std::vector<featurize::FeatureGroup> groups) {
  if (groups.empty()) {
    groups.assign(data.cols(), featurize::FeatureGroup::kNgram);
  }
  if (groups.size() != data.cols()) {
    throw DataError("feature groups do not match the dataset width");
  }
  auto shared = std::make_shared<const models::Dataset>(std::move(data));
  return [shared, groups](std::span<const size_t> train_rows,
                          std::span<const size_t> test_rows) {
    FoldData fd;
    fd.train = shared->select_rows(train_rows);
    fd.test = shared->select_rows(test_rows);
    fd.groups = groups;
    return fd;
  };
}

const CvRow* CvTable::find(const std::string& name) const {
  for (const CvRow& r : rows) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

namespace {

// A unit of work evaluated on one fold: a model kind on a column subset.
struct Variant {
  std::string name;
  models::ModelKind kind;
  // Groups to drop; empty keeps every column.
  std::vector<featurize::FeatureGroup> drop;
};

[[noreturn]] void rethrow_with_fold(size_t fold, std::exception_ptr error) {
  const std::string prefix = "fold " + std::to_string(fold) + ": ";
  try {
    std::rethrow_exception(error);
  } catch (const DegenerateError& e) {
    throw DegenerateError(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const std::exception& e) {
    throw Error(prefix + e.what());
  }
}

CvRow finish_row(std::string name, std::vector<Metrics> folds,
                 std::vector<double> oof, std::span<const int> labels) {
  CvRow row;
  row.name = std::move(name);
  double auc_sum = 0.0;
  size_t auc_n = 0;
  for (const Metrics& m : folds) {
    row.mean.precision += m.precision;
    row.mean.recall += m.recall;
    row.mean.f1 += m.f1;
    row.mean.accuracy += m.accuracy;
    if (m.auc) {
      auc_sum += *m.auc;
      ++auc_n;
    }
  }
  const double k = static_cast<double>(folds.size());
  row.mean.precision /= k;
  row.mean.recall /= k;
  row.mean.f1 /= k;
  row.mean.accuracy /= k;
  if (auc_n > 0) row.mean.auc = auc_sum / static_cast<double>(auc_n);
  row.folds = std::move(folds);
  row.oof_scores = std::move(oof);
  row.labels.assign(labels.begin(), labels.end());
  return row;
}

CvTable run_variants(const std::vector<Variant>& variants,
                     const FoldBuilder& build, std::span<const int> labels,
                     const FoldPlan& plan, const CvConfig& config) {
  if (plan.assignments.size() != labels.size()) {
    throw DataError("fold plan does not match the sample count");
  }
  for (size_t a : plan.assignments) {
    if (a >= plan.k) throw DataError("fold plan assignment out of range");
  }
  const size_t k = plan.k;
  // results[fold][variant]
  std::vector<std::vector<Metrics>> results(k, std::vector<Metrics>(variants.size()));
  std::vector<std::vector<double>> oof(variants.size(),
                                       std::vector<double>(labels.size(), 0.0));
  std::vector<std::exception_ptr> errors(k);

  const auto run_fold = [&](size_t fold) {
    try {
      const std::vector<size_t> train_rows = plan.train_indices(fold);
      const std::vector<size_t> test_rows = plan.test_indices(fold);
      const FoldData fd = build(train_rows, test_rows);
      for (size_t v = 0; v < variants.size(); ++v) {
        const Variant& var = variants[v];
        std::vector<size_t> cols;
        for (size_t j = 0; j < fd.groups.size(); ++j) {
          if (std::find(var.drop.begin(), var.drop.end(), fd.groups[j]) ==
              var.drop.end()) {
            cols.push_back(j);
          }
        }
        const bool all = cols.size() == fd.groups.size();
        const models::Dataset train = all ? fd.train : fd.train.select_cols(cols);
        const models::Dataset test = all ? fd.test : fd.test.select_cols(cols);
        const models::TrainedModel model =
            models::train(var.kind, train, config.train);
        const std::vector<double> scores = models::predict_proba(model, test.x);
        results[fold][v] = evaluate(scores, test.y, config.threshold).metrics;
        for (size_t i = 0; i < test_rows.size(); ++i) {
          oof[v][test_rows[i]] = scores[i];
        }
      }
    } catch (...) {
      errors[fold] = std::current_exception();
    }
  };

  const size_t jobs = std::max<size_t>(1, std::min(config.jobs, k));
  if (jobs == 1) {
    for (size_t f = 0; f < k; ++f) run_fold(f);
  } else {
    std::vector<std::thread> workers;
    for (size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        for (size_t f = w; f < k; f += jobs) run_fold(f);
      });
    }
    for (std::thread& t : workers) t.join();
  }
  for (size_t f = 0; f < k; ++f) {
    if (errors[f]) rethrow_with_fold(f, errors[f]);
  }

  CvTable table;
  for (size_t v = 0; v < variants.size(); ++v) {
    std::vector<Metrics> per_fold(k);
    for (size_t f = 0; f < k; ++f) per_fold[f] = results[f][v];
    table.rows.push_back(
        finish_row(variants[v].name, std::move(per_fold), std::move(oof[v]), labels));
  }
  return table;
}

}  // namespace

CvTable cross_validate(std::span<const models::ModelKind> kinds,
                       const FoldBuilder& build, std::span<const int> labels,
                       const FoldPlan& plan, const CvConfig& config) {
  std::vector<Variant> variants;
  for (models::ModelKind kind : kinds) {
    variants.push_back({models::to_string(kind), kind, {}});
  }
  return run_variants(variants, build, labels, plan, config);
}

CvTable ablation(const FoldBuilder& build, std::span<const int> labels,
                 const FoldPlan& plan,
                 std::span<const featurize::FeatureGroup> groups,
                 const CvConfig& config) {
  std::vector<Variant> variants;
  variants.push_back({"full", models::ModelKind::kLogistic, {}});
  for (featurize::FeatureGroup g : groups) {
    variants.push_back({std::string("-") + featurize::to_string(g),
                        models::ModelKind::kLogistic,
                        {g}});
  }
  return run_variants(variants, build, labels, plan, config);
}

std::string rank_label(size_t rank, size_t max_rank) {
  if (2 * rank > max_rank) {
    if (rank == max_rank) return "MR";
    return "MR-" + std::to_string(max_rank - rank);
  }
  return std::to_string(rank);
}

std::string RankDeltaRow::label_a(size_t max_rank) const {
  return rank_label(rank_a, max_rank);
}

std::string RankDeltaRow::label_b(size_t max_rank) const {
  return rank_label(rank_b, max_rank);
}

RankDeltaReport rank_delta(
    std::span<const std::pair<std::string, double>> importance_a,
    std::span<const std::pair<std::string, double>> importance_b) {
  if (importance_a.size() != importance_b.size()) {
    throw DataError("importance lists cover different feature counts");
  }
  std::unordered_map<std::string, size_t> rank_b;
  for (size_t i = 0; i < importance_b.size(); ++i) {
    if (!rank_b.emplace(importance_b[i].first, i + 1).second) {
      throw DataError("duplicate feature '" + importance_b[i].first + "'");
    }
  }
  RankDeltaReport report;
  report.max_rank = importance_a.size();
  std::unordered_map<std::string, bool> seen;
  for (size_t i = 0; i < importance_a.size(); ++i) {
    const std::string& name = importance_a[i].first;
    if (!seen.emplace(name, true).second) {
      throw DataError("duplicate feature '" + name + "'");
    }
    const auto it = rank_b.find(name);
    if (it == rank_b.end()) {
      throw DataError("feature '" + name + "' missing from the second model");
    }
    RankDeltaRow row;
    row.feature = name;
    row.rank_a = i + 1;
    row.rank_b = it->second;
    row.delta = static_cast<long>(row.rank_b) - static_cast<long>(row.rank_a);
    row.direction = row.delta > 0 ? "↓" : (row.delta < 0 ? "↑" : "-");
    report.rows.push_back(std::move(row));
  }
  return report;
}

double cohen_kappa(std::span<const int> labels_a, std::span<const int> labels_b) {
  if (labels_a.size() != labels_b.size()) {
    throw DataError("kappa needs equally long labelings");
  }
  if (labels_a.empty()) throw DataError("kappa needs at least one item");
  std::map<int, size_t> count_a;
  std::map<int, size_t> count_b;
  size_t agree = 0;
  for (size_t i = 0; i < labels_a.size(); ++i) {
    ++count_a[labels_a[i]];
    ++count_b[labels_b[i]];
    if (labels_a[i] == labels_b[i]) ++agree;
  }
  const double n = static_cast<double>(labels_a.size());
  const double po = static_cast<double>(agree) / n;
  double pe = 0.0;
  for (const auto& [label, ca] : count_a) {
    const auto it = count_b.find(label);
    if (it != count_b.end()) {
      pe += (static_cast<double>(ca) / n) * (static_cast<double>(it->second) / n);
    }
  }
  if (pe >= 1.0) return po >= 1.0 ? 1.0 : 0.0;
  return (po - pe) / (1.0 - pe);
}

namespace {

std::string opt(const std::optional<double>& v) {
  return v ? text::format_double(*v) : "";
}

json opt_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

json metrics_to_json(const Metrics& m) {
  return {{"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"accuracy", m.accuracy},
          {"auc", opt_json(m.auc)}};
}

}  // namespace

void write_metrics_csv(std::ostream& out, const CvTable& table) {
  out << "name,precision,recall,f1,accuracy,auc\n";
  for (const CvRow& r : table.rows) {
    out << r.name << ',' << text::format_double(r.mean.precision) << ','
        << text::format_double(r.mean.recall) << ','
        << text::format_double(r.mean.f1) << ','
        << text::format_double(r.mean.accuracy) << ',' << opt(r.mean.auc)
        << '\n';
  }
}

json metrics_json(const CvTable& table) {
  json rows = json::array();
  for (const CvRow& r : table.rows) {
    json folds = json::array();
    for (const Metrics& m : r.folds) folds.push_back(metrics_to_json(m));
    rows.push_back({{"name", r.name},
                    {"mean", metrics_to_json(r.mean)},
                    {"folds", std::move(folds)}});
  }
  return {{"rows", std::move(rows)}};
}

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "fpr,tpr,threshold\n";
  for (const RocPoint& p : curve) {
    out << text::format_double(p.fpr) << ',' << text::format_double(p.tpr) << ','
        << text::format_double(p.threshold) << '\n';
  }
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
  out << "actual,predicted_0,predicted_1\n";
  out << "0," << cm.tn << ',' << cm.fp << '\n';
  out << "1," << cm.fn << ',' << cm.tp << '\n';
}

void write_rank_delta_csv(std::ostream& out, const RankDeltaReport& report) {
  out << "feature,rank_a,label_a,rank_b,label_b,delta,abs_delta,direction\n";
  for (const RankDeltaRow& r : report.rows) {
    std::string feature = r.feature;
    if (feature.find_first_of(",\"") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : feature) {
        if (c == '"') quoted.push_back('"');
        quoted.push_back(c);
      }
      feature = quoted + "\"";
    }
    out << feature << ',' << r.rank_a << ',' << r.label_a(report.max_rank) << ','
        << r.rank_b << ',' << r.label_b(report.max_rank) << ',' << r.delta << ','
        << std::labs(r.delta) << ',' << r.direction << '\n';
  }
}

}  // namespace mstress::eval
