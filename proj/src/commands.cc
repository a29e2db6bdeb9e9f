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

#include "mstress/commands.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mstress/causal.h"
#include "mstress/corpus.h"
#include "mstress/error.h"
#include "mstress/eval.h"
#include "mstress/featurize.h"
#include "mstress/models.h"
#include "mstress/text.h"

namespace mstress::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr size_t kHashPrefix = 12;

const std::vector<std::string> kDefaultBioPatterns = {
    "gay",   "lesbian",     "bisexual",  "bi",         "queer",
    "trans", "transgender", "lgbtq?",    "nonbinary", "non-binary"};
const char* const kRainbowFlag = "U+1F3F3 U+FE0F U+200D U+1F308";

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q.push_back('"');
    q.push_back(c);
  }
  q.push_back('"');
  return q;
}

// Collects the artifacts of one run and writes its manifest.
class RunDir {
 public:
  RunDir(std::string command, const config::Config& cfg, const fs::path& out_root,
         std::string hash)
      : command_(std::move(command)), cfg_(cfg), hash_(std::move(hash)) {
    dir_ = out_root / (command_ + "-" + hash_.substr(0, kHashPrefix));
    fs::create_directories(dir_);
  }

  const fs::path& dir() const { return dir_; }

  void input(const std::string& key, const fs::path& path) {
    inputs_.push_back({{"key", key},
                       {"path", cfg_.get(key).value_or(path.string())},
                       {"sha256", config::file_sha256(path)}});
  }

  std::ofstream open(const std::string& name) {
    artifacts_.push_back(name);
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw DataError("cannot write " + (dir_ / name).string());
    return out;
  }

  void write_json(const std::string& name, const json& doc) {
    auto out = open(name);
    out << doc.dump(2) << '\n';
  }

  void adopt(const std::vector<std::string>& names) {
    artifacts_.insert(artifacts_.end(), names.begin(), names.end());
  }

  void finish(std::ostream& log) {
    json artifacts = json::array();
    std::vector<std::string> names = artifacts_;
    std::sort(names.begin(), names.end());
    for (const std::string& name : names) {
      artifacts.push_back({{"name", name},
                           {"sha256", config::file_sha256(dir_ / name)},
                           {"bytes", fs::file_size(dir_ / name)}});
    }
    json config_values = json::object();
    for (const auto& [k, v] : cfg_.values()) config_values[k] = v;
    const json manifest = {{"command", command_},
                           {"config_hash", hash_},
                           {"seed", cfg_.has("seed") ? json(cfg_.get_int("seed", 0))
                                                     : json(nullptr)},
                           {"config", std::move(config_values)},
                           {"inputs", inputs_},
                           {"artifacts", std::move(artifacts)}};
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
    log << "wrote " << names.size() << " artifacts to " << dir_.string() << '\n';
  }

 private:
  std::string command_;
  const config::Config& cfg_;
  std::string hash_;
  fs::path dir_;
  json inputs_ = json::array();
  std::vector<std::string> artifacts_;
};

corpus::MalformedPolicy malformed_policy(const config::Config& cfg) {
  const std::string p = cfg.get_string("input.malformed", "skip");
  if (p == "skip") return corpus::MalformedPolicy::kSkipMalformed;
  if (p == "fail") return corpus::MalformedPolicy::kFailFast;
  throw ConfigError("input.malformed must be 'skip' or 'fail'");
}

text::UnixSeconds timestamp_key(const config::Config& cfg, const std::string& key,
                                text::UnixSeconds fallback) {
  const auto v = cfg.get(key);
  if (!v) return fallback;
  const auto t = text::parse_timestamp(*v);
  if (!t) throw ConfigError("config key " + key + " is not a timestamp: '" + *v + "'");
  return *t;
}

corpus::StudyWindows study_windows(const config::Config& cfg) {
  const corpus::StudyWindows d = corpus::StudyWindows::defaults();
  corpus::StudyWindows w{timestamp_key(cfg, "windows.study_start", d.study_start),
                         timestamp_key(cfg, "windows.boundary", d.boundary),
                         timestamp_key(cfg, "windows.study_end", d.study_end)};
  w.validate();
  return w;
}

template <typename Record>
std::vector<Record> ingest_file(
    const fs::path& path, corpus::MalformedPolicy policy,
    corpus::IngestResult<Record> (*ingest)(std::istream&, corpus::MalformedPolicy),
    std::ostream& log) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  corpus::IngestResult<Record> r = ingest(in, policy);
  log << path.filename().string() << ": " << r.records.size() << " records";
  if (r.skipped > 0) log << ", " << r.skipped << " malformed lines skipped";
  log << '\n';
  return std::move(r.records);
}

std::set<std::string> read_ids(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  return corpus::read_id_list(in);
}

models::TrainConfig train_config(const config::Config& cfg, const std::string& section,
                                 uint64_t seed) {
  models::TrainConfig tc;
  tc.seed = seed;
  tc.learning_rate = cfg.get_double(section + ".learning_rate", tc.learning_rate);
  tc.max_iters = static_cast<int>(cfg.get_int(section + ".max_iters", tc.max_iters));
  tc.tolerance = cfg.get_double(section + ".tolerance", tc.tolerance);
  tc.lambda = cfg.get_double(section + ".lambda", tc.lambda);
  tc.lambda_grid = cfg.get_double_list(section + ".lambda_grid");
  tc.inner_folds = cfg.get_size(section + ".inner_folds", tc.inner_folds);
  tc.tree_max_depth =
      static_cast<int>(cfg.get_int(section + ".tree_max_depth", tc.tree_max_depth));
  tc.tree_min_leaf = cfg.get_size(section + ".tree_min_leaf", tc.tree_min_leaf);
  tc.validate();
  return tc;
}

struct LoadedResources {
  featurize::Resources resources;
  std::vector<std::pair<std::string, fs::path>> files;
};

LoadedResources load_resources(const config::Config& cfg) {
  LoadedResources r;
  const fs::path lex = cfg.require_path("paths.lexicon");
  const fs::path emb = cfg.require_path("paths.embeddings");
  const fs::path pos = cfg.require_path("paths.positive_words");
  const fs::path neg = cfg.require_path("paths.negative_words");
  r.files = {{"paths.lexicon", lex},
             {"paths.embeddings", emb},
             {"paths.positive_words", pos},
             {"paths.negative_words", neg}};
  r.resources.lexicon = std::make_shared<const featurize::CategoryLexicon>(
      featurize::CategoryLexicon::load(lex.string()));
  std::optional<size_t> dim;
  if (cfg.has("train.embedding_dim")) dim = cfg.get_size("train.embedding_dim", 50);
  r.resources.embeddings = std::make_shared<const featurize::EmbeddingTable>(
      featurize::EmbeddingTable::load(emb.string(), dim));
  r.resources.sentiment = std::make_shared<const featurize::SentimentLexicon>(
      featurize::SentimentLexicon::load(pos.string(), neg.string()));
  return r;
}

void print_table(std::ostream& log, const eval::CvTable& table) {
  char line[160];
  std::snprintf(line, sizeof(line), "  %-16s %9s %9s %9s %9s %9s\n", "", "precision",
                "recall", "f1", "accuracy", "auc");
  log << line;
  for (const eval::CvRow& r : table.rows) {
    std::snprintf(line, sizeof(line), "  %-16s %9.3f %9.3f %9.3f %9.3f %9s\n",
                  r.name.c_str(), r.mean.precision, r.mean.recall, r.mean.f1,
                  r.mean.accuracy, r.mean.auc ? fmt(*r.mean.auc).c_str() : "n/a");
    log << line;
  }
}

}  // namespace

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "seed",
      "paths.posts",
      "paths.users",
      "paths.labeled",
      "paths.lexicon",
      "paths.embeddings",
      "paths.positive_words",
      "paths.negative_words",
      "paths.minority",
      "paths.control",
      "input.malformed",
      "windows.study_start",
      "windows.boundary",
      "windows.study_end",
      "cohort.seed_hashtags",
      "cohort.top_hashtags",
      "cohort.bio_patterns",
      "cohort.bio_emojis",
      "cohort.max_follow",
      "cohort.min_tweets",
      "cohort.max_tweets",
      "cohort.require_hashtag_author",
      "train.folds",
      "train.vocabulary",
      "train.models",
      "train.ablation",
      "train.threshold",
      "train.embedding_dim",
      "train.learning_rate",
      "train.max_iters",
      "train.tolerance",
      "train.lambda",
      "train.lambda_grid",
      "train.inner_folds",
      "train.tree_max_depth",
      "train.tree_min_leaf",
      "causal.n_strata",
      "causal.trim_sd",
      "causal.min_per_group",
      "causal.top_unigrams",
      "causal.outcomes",
      "causal.weight_by_stratum_size",
      "causal.learning_rate",
      "causal.max_iters",
      "causal.tolerance",
      "causal.lambda",
      "causal.lambda_grid",
      "causal.inner_folds",
      "synth.n_minority",
      "synth.n_control",
      "synth.min_posts",
      "synth.max_posts",
      "synth.tokens_per_post",
      "synth.n_categories",
      "synth.words_per_category",
      "synth.filler_words",
      "synth.topic_words",
      "synth.category_rate",
      "synth.trend",
      "synth.planted_outcome",
      "synth.delta",
      "synth.confounder",
      "synth.n_labeled",
      "synth.prevalence",
      "synth.planted_tokens",
      "synth.planted_rate_positive",
      "synth.planted_rate_negative",
      "synth.embedding_dim",
  };
  return keys;
}

config::Config resolve_config(const GlobalOptions& options) {
  config::Config cfg;
  if (options.config) cfg = config::Config::load(*options.config);
  for (const std::string& o : options.overrides) cfg.apply_override(o);
  if (options.seed) cfg.set("seed", std::to_string(*options.seed));
  cfg.check_known(known_keys());
  if (options.jobs < 1) throw ConfigError("--jobs must be >= 1");
  return cfg;
}

synth::SyntheticSpec synthetic_spec(const config::Config& cfg) {
  synth::SyntheticSpec s;
  s.seed = cfg.require_seed();
  s.n_minority = cfg.get_size("synth.n_minority", s.n_minority);
  s.n_control = cfg.get_size("synth.n_control", s.n_control);
  s.min_posts = cfg.get_size("synth.min_posts", s.min_posts);
  s.max_posts = cfg.get_size("synth.max_posts", s.max_posts);
  s.tokens_per_post = cfg.get_size("synth.tokens_per_post", s.tokens_per_post);
  s.n_categories = cfg.get_size("synth.n_categories", s.n_categories);
  s.words_per_category = cfg.get_size("synth.words_per_category", s.words_per_category);
  s.filler_words = cfg.get_size("synth.filler_words", s.filler_words);
  s.topic_words = cfg.get_size("synth.topic_words", s.topic_words);
  s.category_rate = cfg.get_double("synth.category_rate", s.category_rate);
  s.trend = cfg.get_double("synth.trend", s.trend);
  s.planted_outcome = cfg.get_string("synth.planted_outcome", s.planted_outcome);
  s.delta = cfg.get_double("synth.delta", s.delta);
  s.confounder = cfg.get_double("synth.confounder", s.confounder);
  s.n_labeled = cfg.get_size("synth.n_labeled", s.n_labeled);
  s.prevalence = cfg.get_double("synth.prevalence", s.prevalence);
  s.planted_tokens = cfg.get_size("synth.planted_tokens", s.planted_tokens);
  s.planted_rate_positive =
      cfg.get_double("synth.planted_rate_positive", s.planted_rate_positive);
  s.planted_rate_negative =
      cfg.get_double("synth.planted_rate_negative", s.planted_rate_negative);
  s.embedding_dim = cfg.get_size("synth.embedding_dim", s.embedding_dim);
  s.validate();
  return s;
}

fs::path cmd_cohort(const GlobalOptions& options, std::ostream& log) {
  const config::Config cfg = resolve_config(options);
  cfg.require_seed();
  const corpus::MalformedPolicy policy = malformed_policy(cfg);
  const fs::path posts_path = cfg.require_path("paths.posts");
  const fs::path users_path = cfg.require_path("paths.users");
  const std::vector<corpus::Post> posts =
      ingest_file<corpus::Post>(posts_path, policy, corpus::ingest_posts, log);
  const std::vector<corpus::UserRecord> users =
      ingest_file<corpus::UserRecord>(users_path, policy, corpus::ingest_users, log);

  std::set<std::string> seeds;
  for (const std::string& s : cfg.get_list("cohort.seed_hashtags", {"gay", "lgbt"})) {
    std::string tag = text::ascii_lower(s);
    tag.erase(0, tag.find_first_not_of('#'));
    if (!tag.empty()) seeds.insert(tag);
  }
  if (seeds.empty()) throw ConfigError("cohort.seed_hashtags must not be empty");
  const auto ranked = corpus::top_cooccurring_hashtags(
      posts, seeds, cfg.get_size("cohort.top_hashtags", 100));
  std::set<std::string> related = seeds;
  for (const auto& [tag, count] : ranked) related.insert(tag);
  std::set<std::string> hashtag_authors;
  for (const corpus::Post& p : posts) {
    for (const std::string& h : p.hashtags) {
      if (related.count(h) > 0) {
        hashtag_authors.insert(p.author_id);
        break;
      }
    }
  }

  std::vector<std::string> emojis;
  for (const std::string& e : cfg.get_list("cohort.bio_emojis", {kRainbowFlag})) {
    emojis.push_back(text::parse_code_point_notation(e));
  }
  const corpus::BioMatcher matcher(
      cfg.get_list("cohort.bio_patterns", kDefaultBioPatterns), emojis);
  corpus::FilterThresholds thresholds;
  thresholds.max_follow = cfg.get_int("cohort.max_follow", thresholds.max_follow);
  thresholds.min_tweets = cfg.get_int("cohort.min_tweets", thresholds.min_tweets);
  thresholds.max_tweets = cfg.get_int("cohort.max_tweets", thresholds.max_tweets);
  const bool require_hashtag = cfg.get_bool("cohort.require_hashtag_author", false);

  struct AuditRow {
    const corpus::UserRecord* user;
    bool bio_match;
    bool hashtag_author;
    std::string status;
  };
  std::vector<AuditRow> audit;
  std::set<std::string> minority;
  std::set<std::string> control;
  size_t filtered = 0;
  for (const corpus::UserRecord& u : users) {
    AuditRow row{&u, matcher.matches(u.bio), hashtag_authors.count(u.user_id) > 0, ""};
    if (const auto reason = corpus::filter_reason(u, thresholds)) {
      row.status = "filtered:" + *reason;
      ++filtered;
    } else if (row.bio_match && (!require_hashtag || row.hashtag_author)) {
      row.status = "MINORITY";
      minority.insert(u.user_id);
    } else if (row.bio_match) {
      row.status = "excluded:no-related-hashtag";
    } else {
      row.status = "CONTROL";
      control.insert(u.user_id);
    }
    audit.push_back(std::move(row));
  }
  if (minority.empty()) throw DataError("the MINORITY cohort is empty");
  if (control.empty()) throw DataError("the CONTROL cohort is empty");

  RunDir run("cohort", cfg, options.out, cfg.hash());
  run.input("paths.posts", posts_path);
  run.input("paths.users", users_path);
  {
    auto out = run.open("minority.txt");
    corpus::write_id_list(out, minority);
  }
  {
    auto out = run.open("control.txt");
    corpus::write_id_list(out, control);
  }
  {
    auto out = run.open("hashtags.csv");
    out << "rank,hashtag,cooccurring_posts\n";
    for (size_t i = 0; i < ranked.size(); ++i) {
      out << i + 1 << ',' << csv_field(ranked[i].first) << ',' << ranked[i].second
          << '\n';
    }
  }
  {
    auto out = run.open("cohort_audit.csv");
    out << "user_id,bio_match,hashtag_author,status\n";
    for (const AuditRow& r : audit) {
      out << csv_field(r.user->user_id) << ',' << (r.bio_match ? 1 : 0) << ','
          << (r.hashtag_author ? 1 : 0) << ',' << r.status << '\n';
    }
  }
  run.write_json("summary.json", {{"users", users.size()},
                                  {"posts", posts.size()},
                                  {"related_hashtags", related.size()},
                                  {"filtered", filtered},
                                  {"minority", minority.size()},
                                  {"control", control.size()}});
  log << "cohorts: " << minority.size() << " MINORITY, " << control.size()
      << " CONTROL, " << filtered << " filtered out of " << users.size() << " users\n";
  run.finish(log);
  return run.dir();
}

fs::path cmd_train_eval(const GlobalOptions& options, std::ostream& log) {
  const config::Config cfg = resolve_config(options);
  const uint64_t seed = cfg.require_seed();
  const fs::path labeled_path = cfg.require_path("paths.labeled");
  const std::vector<corpus::LabeledPost> labeled = ingest_file<corpus::LabeledPost>(
      labeled_path, malformed_policy(cfg), corpus::ingest_labeled, log);
  const LoadedResources res = load_resources(cfg);

  std::vector<featurize::TokenList> docs;
  std::vector<int> labels;
  for (const corpus::LabeledPost& p : labeled) {
    docs.push_back(featurize::tokenize(p.text));
    labels.push_back(p.label);
  }
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0 || positives == static_cast<long>(labels.size())) {
    throw DegenerateError("degenerate labels: the labeled data has a single class");
  }

  const size_t vocab = cfg.get_size("train.vocabulary", 500);
  const size_t folds = cfg.get_size("train.folds", 10);
  eval::CvConfig cv_config;
  cv_config.train = train_config(cfg, "train", seed);
  cv_config.threshold = cfg.get_double("train.threshold", eval::kDefaultThreshold);
  cv_config.jobs = options.jobs;
  std::vector<models::ModelKind> kinds;
  for (const std::string& m : cfg.get_list("train.models")) {
    kinds.push_back(models::model_kind_from_string(m));
  }
  if (kinds.empty()) kinds.assign(std::begin(models::kAllModelKinds),
                                  std::end(models::kAllModelKinds));
  std::vector<featurize::FeatureGroup> groups;
  if (cfg.has("train.ablation")) {
    for (const std::string& g : cfg.get_list("train.ablation")) {
      groups.push_back(featurize::feature_group_from_string(g));
    }
  } else {
    groups.assign(std::begin(featurize::kAllFeatureGroups),
                  std::end(featurize::kAllFeatureGroups));
  }

  const eval::FoldPlan plan = eval::kfold_split(docs.size(), folds, seed, labels);
  const eval::FoldBuilder build =
      eval::text_fold_builder(docs, labels, res.resources, vocab);
  log << "cross-validating " << kinds.size() << " models over " << folds
      << " folds (" << docs.size() << " posts, " << positives << " positive)\n";
  const eval::CvTable table = eval::cross_validate(kinds, build, labels, plan, cv_config);
  print_table(log, table);
  log << "ablation over " << groups.size() << " feature groups\n";
  const eval::CvTable abl = eval::ablation(build, labels, plan, groups, cv_config);
  print_table(log, abl);

  const featurize::Featurizer fz =
      featurize::Featurizer::fit(res.resources, docs, vocab);
  models::Dataset full;
  full.schema = fz.schema().names;
  full.x.resize(static_cast<Eigen::Index>(docs.size()),
                static_cast<Eigen::Index>(fz.schema().size()));
  full.y = labels;
  std::vector<double> buf(fz.schema().size());
  for (size_t i = 0; i < docs.size(); ++i) {
    fz.featurize_into(docs[i], buf);
    for (size_t j = 0; j < buf.size(); ++j) {
      full.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = buf[j];
    }
  }
  const models::LogisticModel model = models::train_logistic(full, cv_config.train);
  const auto importance = models::coefficients(model);

  RunDir run("train-eval", cfg, options.out, cfg.hash());
  run.input("paths.labeled", labeled_path);
  for (const auto& [key, path] : res.files) run.input(key, path);
  {
    auto out = run.open("metrics.csv");
    eval::write_metrics_csv(out, table);
  }
  run.write_json("metrics.json", eval::metrics_json(table));
  {
    auto out = run.open("ablation.csv");
    eval::write_metrics_csv(out, abl);
  }
  run.write_json("ablation.json", eval::metrics_json(abl));
  for (const eval::CvRow& row : table.rows) {
    {
      auto out = run.open("roc_" + row.name + ".csv");
      eval::write_roc_csv(out, eval::roc_points(row.oof_scores, row.labels));
    }
    auto out = run.open("confusion_" + row.name + ".csv");
    eval::write_confusion_csv(
        out, eval::evaluate(row.oof_scores, row.labels, cv_config.threshold).confusion);
  }
  {
    auto out = run.open("folds.csv");
    out << "id,label,fold\n";
    for (size_t i = 0; i < labeled.size(); ++i) {
      out << csv_field(labeled[i].post_id) << ',' << labels[i] << ','
          << plan.assignments[i] << '\n';
    }
  }
  {
    auto out = run.open("vocabulary.tsv");
    fz.vocabulary().write(out);
  }
  run.write_json("model_logistic.json", models::to_json(models::TrainedModel{model}));
  {
    auto out = run.open("importance.csv");
    out << "rank,rank_label,feature,weight\n";
    for (size_t i = 0; i < importance.size(); ++i) {
      out << i + 1 << ',' << eval::rank_label(i + 1, importance.size()) << ','
          << csv_field(importance[i].first) << ','
          << text::format_double(importance[i].second) << '\n';
    }
  }
  run.finish(log);
  return run.dir();
}

fs::path cmd_importance_delta(const GlobalOptions& options, const fs::path& model_a,
                              const fs::path& model_b, std::ostream& log) {
  const config::Config cfg = resolve_config(options);
  const auto load = [](const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file " + path.string());
    const json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw DataError(path.string() + " is not JSON");
    const models::TrainedModel m = models::model_from_json(doc);
    const auto* lr = std::get_if<models::LogisticModel>(&m);
    if (lr == nullptr) {
      throw DataError(path.string() + " does not hold a logistic model");
    }
    return models::coefficients(*lr);
  };
  const auto a = load(model_a);
  const auto b = load(model_b);
  const eval::RankDeltaReport report = eval::rank_delta(a, b);

  const std::string hash = config::sha256_hex(
      cfg.canonical() + "model_a=" + config::file_sha256(model_a) +
      "\nmodel_b=" + config::file_sha256(model_b) + "\n");
  RunDir run("importance-delta", cfg, options.out, hash);
  run.input("model_a", model_a);
  run.input("model_b", model_b);
  {
    auto out = run.open("rank_delta.csv");
    eval::write_rank_delta_csv(out, report);
  }
  size_t moved = 0;
  for (const auto& r : report.rows) moved += r.delta != 0 ? 1 : 0;
  log << report.rows.size() << " features, " << moved << " changed rank (MR = "
      << report.max_rank << ")\n";
  run.finish(log);
  return run.dir();
}

fs::path cmd_causal(const GlobalOptions& options, std::ostream& log) {
  const config::Config cfg = resolve_config(options);
  const uint64_t seed = cfg.require_seed();
  const corpus::MalformedPolicy policy = malformed_policy(cfg);
  const fs::path posts_path = cfg.require_path("paths.posts");
  const fs::path users_path = cfg.require_path("paths.users");
  const fs::path minority_path = cfg.require_path("paths.minority");
  const fs::path control_path = cfg.require_path("paths.control");
  const fs::path lexicon_path = cfg.require_path("paths.lexicon");

  causal::StudyConfig sc;
  sc.windows = study_windows(cfg);
  sc.top_unigrams = cfg.get_size("causal.top_unigrams", sc.top_unigrams);
  sc.outcomes = cfg.get_list("causal.outcomes");
  sc.stratify.n_strata = cfg.get_size("causal.n_strata", sc.stratify.n_strata);
  sc.stratify.trim_sd = cfg.get_double("causal.trim_sd", sc.stratify.trim_sd);
  sc.stratify.min_per_group =
      cfg.get_size("causal.min_per_group", sc.stratify.min_per_group);
  sc.stratify.validate();
  sc.propensity = train_config(cfg, "causal", seed);
  sc.weight_by_stratum_size = cfg.get_bool("causal.weight_by_stratum_size", false);

  std::vector<corpus::Post> posts =
      ingest_file<corpus::Post>(posts_path, policy, corpus::ingest_posts, log);
  const std::vector<corpus::UserRecord> users =
      ingest_file<corpus::UserRecord>(users_path, policy, corpus::ingest_users, log);
  const std::set<std::string> minority = read_ids(minority_path);
  const std::set<std::string> control = read_ids(control_path);
  const featurize::CategoryLexicon lexicon =
      featurize::CategoryLexicon::load(lexicon_path.string());
  const auto timelines = corpus::build_timelines(std::move(posts));

  const causal::StudyResult study =
      causal::run_study(users, timelines, minority, control, lexicon, sc);
  const causal::Stratification& st = study.stratification;

  RunDir run("causal", cfg, options.out, cfg.hash());
  run.input("paths.posts", posts_path);
  run.input("paths.users", users_path);
  run.input("paths.minority", minority_path);
  run.input("paths.control", control_path);
  run.input("paths.lexicon", lexicon_path);
  {
    auto out = run.open("balance.csv");
    causal::write_balance_csv(out, study.balance);
  }
  run.write_json("balance.json", causal::balance_json(study.balance));
  {
    auto out = run.open("audit.csv");
    causal::write_audit_csv(out, study);
  }
  {
    auto out = run.open("effects.csv");
    causal::write_effects_csv(out, study.effects);
  }
  run.write_json("effects.json", causal::effects_json(study.effects));
  {
    auto out = run.open("strata.csv");
    out << "stratum,lower,upper,n_minority,n_control\n";
    const double n = static_cast<double>(st.config.n_strata);
    for (size_t k : st.retained_strata) {
      out << k << ',' << text::format_double(static_cast<double>(k) / n) << ','
          << text::format_double(static_cast<double>(k + 1) / n) << ','
          << st.members(k, causal::kMinority).size() << ','
          << st.members(k, causal::kControl).size() << '\n';
    }
  }
  size_t trimmed = 0;
  size_t dropped = 0;
  for (const causal::StratifiedUser& u : st.users) {
    trimmed += u.status == causal::UserStatus::kTrimmed ? 1 : 0;
    dropped += u.status == causal::UserStatus::kDroppedStratum ? 1 : 0;
  }
  run.write_json("summary.json",
                 {{"users", study.users.size()},
                  {"missing_records", study.missing_records},
                  {"covariates", study.covariate_names.size()},
                  {"score_mean", st.score_mean},
                  {"score_sd", st.score_sd},
                  {"trim_low", st.trim_low},
                  {"trim_high", st.trim_high},
                  {"trimmed", trimmed},
                  {"dropped_in_small_strata", dropped},
                  {"retained_strata", st.retained_strata.size()},
                  {"retained_minority", st.retained_minority},
                  {"retained_control", st.retained_control},
                  {"balanced", study.balance.balanced()}});

  log << "retained " << st.retained_strata.size() << " strata, containing "
      << st.retained_minority << " MINORITY and " << st.retained_control
      << " CONTROL users (" << trimmed << " trimmed, " << dropped
      << " in strata below " << st.config.min_per_group << " per group)\n";
  log << "balance: max |SMD| " << fmt(study.balance.max_abs_before) << " -> "
      << fmt(study.balance.max_abs_within) << ", mean |SMD| "
      << fmt(study.balance.mean_abs_before) << " -> "
      << fmt(study.balance.mean_abs_within)
      << (study.balance.balanced() ? " (balanced)" : " (NOT balanced)") << '\n';
  char line[200];
  std::snprintf(line, sizeof(line), "  %-20s %10s %8s %9s %11s\n", "outcome", "mean TE",
                "d", "t", "p (bonf.)");
  log << line;
  for (const causal::EffectEstimate& e : study.effects) {
    std::snprintf(line, sizeof(line), "  %-20s %10.4f %8s %9.3f %11.3g %s\n",
                  e.outcome.c_str(), e.mean_te,
                  e.cohens_d ? fmt(*e.cohens_d).c_str() : "n/a", e.welch.t,
                  e.p_bonferroni, e.stars.c_str());
    log << line;
  }
  run.finish(log);
  return run.dir();
}

fs::path cmd_synth(const GlobalOptions& options, std::ostream& log) {
  const config::Config cfg = resolve_config(options);
  const synth::SyntheticSpec spec = synthetic_spec(cfg);
  const synth::SyntheticStudy study = synth::generate(spec);
  RunDir run("synth", cfg, options.out, cfg.hash());
  run.adopt(synth::write_study(study, run.dir()));
  log << "synthetic study: " << study.minority.size() << " MINORITY and "
      << study.control.size() << " CONTROL users, " << study.posts.size()
      << " posts, " << study.labeled.size() << " labeled posts\n";
  log << "config for the other commands: " << (run.dir() / "study.ini").string() << '\n';
  run.finish(log);
  return run.dir();
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return 1;
  if (dynamic_cast<const DegenerateError*>(&e) != nullptr) return 3;
  return 2;
}

int run_main(int argc, char** argv) {
  CLI::App app{"mstress: minority-stress text classification and causal study toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions options;
  std::string config_path;
  uint64_t seed = 0;
  app.add_option("--config", config_path, "study config file (INI/TOML-style)");
  CLI::Option* seed_opt = app.add_option("--seed", seed, "random seed");
  app.add_option("--out", options.out, "output root directory")->capture_default_str();
  app.add_option("--jobs", options.jobs, "worker threads for cross-validation")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--set", options.overrides, "override a config key: section.key=value");

  CLI::App* cohort = app.add_subcommand("cohort", "build MINORITY and CONTROL cohorts");
  CLI::App* train = app.add_subcommand("train-eval", "cross-validate classifiers");
  CLI::App* delta = app.add_subcommand("importance-delta",
                                       "compare coefficient ranks of two models");
  std::string model_a;
  std::string model_b;
  delta->add_option("model_a", model_a, "first model JSON")->required();
  delta->add_option("model_b", model_b, "second model JSON")->required();
  CLI::App* causal_cmd = app.add_subcommand("causal", "propensity-stratified effects");
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic study");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (!config_path.empty()) options.config = config_path;
  if (seed_opt->count() > 0) options.seed = seed;

  try {
    std::ostream& log = std::cout;
    if (cohort->parsed()) cmd_cohort(options, log);
    if (train->parsed()) cmd_train_eval(options, log);
    if (delta->parsed()) cmd_importance_delta(options, model_a, model_b, log);
    if (causal_cmd->parsed()) cmd_causal(options, log);
    if (synth_cmd->parsed()) cmd_synth(options, log);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}

}  // namespace mstress::cli
