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

// Synthetic studies with known ground truth.
//
// Every user draws a latent z ~ N(+c/2, 1) (minority) or N(-c/2, 1)
// (control). z shifts the social counts, account age and the share of
// "topic" filler words, so the groups differ before the boundary only
// through z. Each emitted token is a word of outcome category k with
// probability r_k, otherwise filler. During the study window r_k rises by a
// common trend for everyone and, for minority users, the planted category
// rises by a further delta. The mass comes out of the filler share, so the
// expected treatment effect on the planted outcome is delta in proportion
// units and zero on every other category.
//
// The labeled classification corpus is separate: positive posts emit each
// planted token with probability planted_rate_positive, negatives with
// planted_rate_negative; slots left empty are filled with decoy tokens so
// that every post has the same expected length. Planted and decoy tokens
// appear in no lexicon, embedding or sentiment list, so only n-gram
// features can carry the signal.

#ifndef MSTRESS_SYNTH_H_
#define MSTRESS_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "mstress/corpus.h"
#include "mstress/featurize.h"

namespace mstress::synth {

struct SyntheticSpec {
  size_t n_minority = 200;
  size_t n_control = 200;
  size_t min_posts = 4;  // per user and window
  size_t max_posts = 8;
  size_t tokens_per_post = 12;

  size_t n_categories = 10;
  size_t words_per_category = 8;
  size_t filler_words = 300;
  size_t topic_words = 30;  // the first filler words, driven by z
  double category_rate = 0.03;
  double trend = 0.005;
  std::string planted_outcome = "cat0";  // empty: no planted effect
  double delta = 0.5;
  double confounder = 1.0;

  size_t n_labeled = 2000;
  double prevalence = 0.46;
  size_t planted_tokens = 20;
  double planted_rate_positive = 0.25;
  double planted_rate_negative = 0.02;

  size_t embedding_dim = 50;
  uint64_t seed = 0;

  // Throws ConfigError on inconsistent settings (a group of exactly one
  // user, rates outside [0, 1], emission mass above 1, unknown category).
  void validate() const;
  nlohmann::json to_json() const;
};

struct SyntheticStudy {
  SyntheticSpec spec;
  std::vector<corpus::UserRecord> users;  // ascending id
  std::vector<corpus::Post> posts;        // grouped by author, ascending time
  std::set<std::string> minority;
  std::set<std::string> control;
  featurize::CategoryLexicon lexicon;
  featurize::EmbeddingTable embeddings;
  std::vector<std::string> positive_words;
  std::vector<std::string> negative_words;
  std::vector<std::string> planted_vocabulary;
  std::vector<corpus::LabeledPost> labeled;
  std::vector<std::string> bio_patterns;
  std::vector<std::string> bio_emojis;
  std::vector<std::string> seed_hashtags;

  nlohmann::json ground_truth() const;
};

// Deterministic per spec (including the seed).
SyntheticStudy generate(const SyntheticSpec& spec);

// Writes users.jsonl, posts.jsonl, labeled.jsonl, lexicon.tsv,
// embeddings.txt, positive.txt, negative.txt, minority.txt, control.txt,
// ground_truth.json and study.ini (a config naming those files). Returns
// the file names in write order.
std::vector<std::string> write_study(const SyntheticStudy& study,
                                     const std::filesystem::path& dir);

}  // namespace mstress::synth

#endif  // MSTRESS_SYNTH_H_
