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

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "doctest.h"
#include "mstress/corpus.h"
#include "mstress/error.h"

using namespace mstress;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "mstress");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mstress_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// The single run directory below `root`.
fs::path only_run(const fs::path& root) {
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) dirs.push_back(e.path());
  REQUIRE(dirs.size() == 1);
  return dirs[0];
}

void expect_same_tree(const fs::path& a, const fs::path& b) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename().string());
  CHECK(names.size() > 2);
  for (const auto& n : names) {
    CAPTURE(n);
    REQUIRE(fs::exists(b / n));
    CHECK(slurp(a / n) == slurp(b / n));
  }
}

corpus::UserRecord user(const std::string& id, const std::string& bio) {
  corpus::UserRecord u;
  u.user_id = id;
  u.bio = bio;
  u.n_tweets = 1000;
  u.n_followers = 100;
  u.n_followees = 100;
  u.created_at = 1400000000;
  return u;
}

// Four users, two with matching bios; `matching` false rewrites those bios.
fs::path cohort_fixture(const std::string& name, bool matching) {
  const fs::path dir = scratch(name);
  std::vector<corpus::UserRecord> users = {
      user("u1", matching ? "proud queer coder" : "coder"),
      user("u2", "coffee and hiking"),
      user("u3", matching ? "Gay, he/him" : "he/him"),
      user("u4", "legal analyst"),
  };
  std::vector<corpus::Post> posts;
  for (int i = 0; i < 4; ++i) {
    corpus::Post p;
    p.post_id = "p" + std::to_string(i);
    p.author_id = users[static_cast<size_t>(i)].user_id;
    p.timestamp = 1550000000 + i;
    p.text = i % 2 == 0 ? "#gay #pride day" : "#news today";
    p.hashtags = corpus::extract_hashtags(p.text);
    posts.push_back(p);
  }
  {
    std::ofstream out(dir / "users.jsonl");
    corpus::write_users_jsonl(out, users);
  }
  {
    std::ofstream out(dir / "posts.jsonl");
    corpus::write_posts_jsonl(out, posts);
  }
  {
    std::ofstream out(dir / "study.ini");
    out << "seed = 1\n[paths]\nposts = posts.jsonl\nusers = users.jsonl\n";
  }
  return dir;
}

// Generates a small synthetic study and returns its study.ini.
fs::path synthetic(const std::string& name, const std::vector<std::string>& sets) {
  const fs::path root = scratch(name);
  std::vector<std::string> args = {"--seed", "3", "--out", root.string()};
  for (const auto& s : sets) {
    args.push_back("--set");
    args.push_back(s);
  }
  args.push_back("synth");
  REQUIRE(run(args) == 0);
  return only_run(root) / "study.ini";
}

}  // namespace

TEST_CASE("exit codes map the error classes") {
  CHECK(cli::exit_code_for(ConfigError("x")) == 1);
  CHECK(cli::exit_code_for(DataError("x")) == 2);
  CHECK(cli::exit_code_for(DegenerateError("x")) == 3);
  CHECK(run({}) == 1);
  CHECK(run({"frobnicate"}) == 1);
  CHECK(run({"--jobs", "0", "synth"}) == 1);
}

TEST_CASE("config problems exit 1") {
  const fs::path dir = cohort_fixture("config_errors", true);
  const std::string out = (dir / "runs").string();
  CHECK(run({"--out", out, "cohort"}) == 1);  // no config, so no paths
  CHECK(run({"--config", (dir / "study.ini").string(), "--set", "cohort.bogus=1", "--out",
             out, "cohort"}) == 1);
  CHECK(run({"--config", (dir / "missing.ini").string(), "--out", out, "cohort"}) == 1);
  CHECK(run({"--out", out, "synth"}) == 1);  // no seed
}

TEST_CASE("cohort: fixture with two matching bios") {
  const fs::path dir = cohort_fixture("cohort", true);
  const std::string cfg = (dir / "study.ini").string();
  REQUIRE(run({"--config", cfg, "--out", (dir / "a").string(), "cohort"}) == 0);
  const fs::path a = only_run(dir / "a");
  std::ifstream in(a / "minority.txt");
  const std::set<std::string> minority = corpus::read_id_list(in);
  CHECK(minority == std::set<std::string>{"u1", "u3"});
  CHECK(fs::exists(a / "manifest.json"));
  CHECK(a.filename().string().rfind("cohort-", 0) == 0);

  REQUIRE(run({"--config", cfg, "--out", (dir / "b").string(), "cohort"}) == 0);
  expect_same_tree(a, only_run(dir / "b"));
}

TEST_CASE("cohort: no matching bios is an error") {
  const fs::path dir = cohort_fixture("cohort_none", false);
  CHECK(run({"--config", (dir / "study.ini").string(), "--out", (dir / "runs").string(),
             "cohort"}) == 2);
}

TEST_CASE("synth writes dumps, ground truth and a manifest") {
  const fs::path ini = synthetic("synth", {"synth.n_minority=0", "synth.n_control=0",
                                           "synth.n_labeled=0", "synth.delta=0.25"});
  const fs::path dir = ini.parent_path();
  CHECK(fs::file_size(dir / "users.jsonl") == 0);
  const auto gt = nlohmann::json::parse(slurp(dir / "ground_truth.json"));
  CHECK(gt.at("delta").get<double>() == 0.25);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.at("command") == "synth");
  CHECK(manifest.at("seed") == 3);
  CHECK(manifest.at("artifacts").size() == 11);
}

TEST_CASE("train-eval and importance-delta end to end") {
  const fs::path ini = synthetic("train", {"synth.n_minority=0", "synth.n_control=0",
                                           "synth.n_labeled=300"});
  const fs::path root = ini.parent_path().parent_path();
  const std::vector<std::string> common = {"--config", ini.string(), "--set", "train.folds=3",
                                           "--set", "train.vocabulary=60"};
  auto args = common;
  args.insert(args.end(), {"--out", (root / "a").string(), "train-eval"});
  REQUIRE(run(args) == 0);
  args = common;
  args.insert(args.end(), {"--out", (root / "b").string(), "--jobs", "2", "train-eval"});
  REQUIRE(run(args) == 0);
  const fs::path a = only_run(root / "a");
  expect_same_tree(a, only_run(root / "b"));
  for (const char* f : {"metrics.csv", "ablation.csv", "roc_logistic.csv",
                        "confusion_logistic.csv", "importance.csv", "model_logistic.json"}) {
    CHECK(fs::exists(a / f));
  }

  const std::string model = (a / "model_logistic.json").string();
  const fs::path out = root / "delta";
  REQUIRE(run({"--out", out.string(), "importance-delta", model, model}) == 0);
  std::istringstream csv(slurp(only_run(out) / "rank_delta.csv"));
  std::string line;
  std::getline(csv, line);
  size_t rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    CHECK(line.find(",0,0,-") != std::string::npos);
  }
  CHECK(rows > 0);
  CHECK(run({"--out", out.string(), "importance-delta", model,
             (root / "missing.json").string()}) == 1);
}

TEST_CASE("train-eval with one class exits 3") {
  const fs::path ini = synthetic("train_one", {"synth.n_minority=0", "synth.n_control=0",
                                               "synth.n_labeled=50", "synth.prevalence=1"});
  CHECK(run({"--config", ini.string(), "--out",
             (ini.parent_path().parent_path() / "runs").string(), "train-eval"}) == 3);
}

TEST_CASE("causal end to end and deterministic") {
  const fs::path ini = synthetic("causal", {"synth.n_minority=300", "synth.n_control=300",
                                            "synth.n_labeled=0"});
  const fs::path root = ini.parent_path().parent_path();
  const std::vector<std::string> common = {"--config", ini.string(),
                                           "--set", "causal.n_strata=10",
                                           "--set", "causal.min_per_group=5",
                                           "--set", "causal.top_unigrams=50"};
  auto args = common;
  args.insert(args.end(), {"--out", (root / "a").string(), "causal"});
  REQUIRE(run(args) == 0);
  args = common;
  args.insert(args.end(), {"--out", (root / "b").string(), "causal"});
  REQUIRE(run(args) == 0);
  const fs::path a = only_run(root / "a");
  expect_same_tree(a, only_run(root / "b"));
  for (const char* f : {"balance.csv", "effects.csv", "audit.csv", "strata.csv"}) {
    CHECK(fs::exists(a / f));
  }

  // Covariates use only pre-boundary posts.
  std::istringstream audit(slurp(a / "audit.csv"));
  std::string line;
  std::getline(audit, line);
  CHECK(line.find("last_pre") != std::string::npos);
  const long long boundary = corpus::StudyWindows::defaults().boundary;
  while (std::getline(audit, line)) {
    const long long last_pre = std::stoll(line.substr(line.rfind(',') + 1));
    CHECK(last_pre < boundary);
  }

  args = common;
  args.insert(args.end(), {"--set", "causal.min_per_group=100000", "--out",
                           (root / "c").string(), "causal"});
  CHECK(run(args) == 3);
}
