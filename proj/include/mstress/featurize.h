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

// Post featurization. A feature vector is the concatenation
//
//   embedding[0..d) ++ lexicon categories ++ (pos, neg, neutral) ++ n-grams
//
// where the embedding block is the mean pretrained vector of the known
// tokens, the lexicon block holds category token proportions, the sentiment
// block comes from a two-list lexicon scorer, and the n-gram block holds
// binary presence indicators for a fitted top-K uni/bigram vocabulary.

#ifndef MSTRESS_FEATURIZE_H_
#define MSTRESS_FEATURIZE_H_

#include <cstddef>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mstress/corpus.h"

namespace mstress::featurize {

using TokenList = std::vector<std::string>;

// Lowercases and splits on whitespace and punctuation. '#', '@' and '\''
// stay inside tokens (U+2019 is folded to '\''); leading and trailing
// apostrophes are trimmed. Emoji, including ZWJ sequences, modifier
// sequences and flag pairs, become single tokens.
TokenList tokenize(std::string_view text);

// Unigrams followed by adjacent-token bigrams ("a b"), in text order.
std::vector<std::string> ngrams_of(const TokenList& tokens);

struct NGramEntry {
  std::string ngram;
  size_t count = 0;

  bool operator==(const NGramEntry&) const = default;
};

class NGramVocabulary {
 public:
  NGramVocabulary() = default;
  // Entries must already be in rank order.
  NGramVocabulary(std::vector<NGramEntry> entries, size_t capacity);

  const std::vector<NGramEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  size_t capacity() const { return capacity_; }
  std::optional<size_t> index_of(const std::string& ngram) const;

  // "ngram<TAB>count" lines in rank order.
  void write(std::ostream& out) const;
  static NGramVocabulary read(std::istream& in);

 private:
  std::vector<NGramEntry> entries_;
  std::unordered_map<std::string, size_t> index_;
  size_t capacity_ = 0;
};

// The k most frequent unigrams and bigrams pooled together; ties broken
// lexicographically ascending.
NGramVocabulary build_ngram_vocab(std::span<const TokenList> corpus,
                                  size_t k = 500);

// Category word lists. A pattern is an exact word or a stem followed by
// '*', which matches any token with that prefix.
class CategoryLexicon {
 public:
  struct Category {
    std::string name;
    std::vector<std::string> patterns;
  };

  CategoryLexicon() = default;
  explicit CategoryLexicon(std::vector<Category> categories);

  // "category<TAB>pattern" per line; categories keep first-seen order.
  // Blank lines and lines starting with "//" are skipped.
  static CategoryLexicon from_tsv(std::istream& in);
  static CategoryLexicon load(const std::string& path);

  const std::vector<Category>& categories() const { return categories_; }
  size_t size() const { return categories_.size(); }
  std::optional<size_t> index_of(std::string_view name) const;

  bool matches(size_t category, std::string_view token) const;

  // Tokens matching each category.
  std::vector<size_t> counts(const TokenList& tokens) const;

  // counts / max(1, |tokens|).
  std::vector<double> proportions(const TokenList& tokens) const;

 private:
  struct Compiled {
    std::unordered_set<std::string> exact;
    std::vector<std::string> prefixes;
  };
  std::vector<Category> categories_;
  std::vector<Compiled> compiled_;
};

std::map<std::string, double> count_lexicon(const TokenList& tokens,
                                            const CategoryLexicon& lexicon);

class EmbeddingTable {
 public:
  explicit EmbeddingTable(size_t dimension = 50);

  // "word v1 ... vd" per line. The dimension is taken from `dimension` when
  // given, otherwise from the first line.
  static EmbeddingTable from_text(std::istream& in,
                                  std::optional<size_t> dimension = std::nullopt);
  static EmbeddingTable load(const std::string& path,
                             std::optional<size_t> dimension = std::nullopt);

  void add(const std::string& word, std::vector<double> vector);
  const std::vector<double>* find(const std::string& word) const;

  size_t dimension() const { return dimension_; }
  size_t size() const { return vectors_.size(); }

 private:
  size_t dimension_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

// Mean vector over in-vocabulary tokens; zero vector when none are known.
std::vector<double> embed_mean(const TokenList& tokens,
                               const EmbeddingTable& table);

struct SentimentScores {
  double positive = 0.0;
  double negative = 0.0;
  double neutral = 1.0;
};

SentimentScores score_sentiment(const TokenList& tokens,
                                const std::unordered_set<std::string>& positive,
                                const std::unordered_set<std::string>& negative);

class SentimentLexicon {
 public:
  SentimentLexicon() = default;
  // Throws ConfigError when the lists share a word.
  SentimentLexicon(std::unordered_set<std::string> positive,
                   std::unordered_set<std::string> negative);

  // One word per line in each stream.
  static SentimentLexicon from_lists(std::istream& positive,
                                     std::istream& negative);
  static SentimentLexicon load(const std::string& positive_path,
                               const std::string& negative_path);

  SentimentScores score(const TokenList& tokens) const {
    return score_sentiment(tokens, positive_, negative_);
  }

  const std::unordered_set<std::string>& positive() const { return positive_; }
  const std::unordered_set<std::string>& negative() const { return negative_; }

 private:
  std::unordered_set<std::string> positive_;
  std::unordered_set<std::string> negative_;
};

enum class FeatureGroup { kEmbedding, kLexicon, kSentiment, kNgram };

inline constexpr FeatureGroup kAllFeatureGroups[] = {
    FeatureGroup::kEmbedding, FeatureGroup::kSentiment, FeatureGroup::kLexicon,
    FeatureGroup::kNgram};

const char* to_string(FeatureGroup group);
FeatureGroup feature_group_from_string(std::string_view name);

struct FeatureSchema {
  std::vector<std::string> names;
  std::vector<FeatureGroup> groups;

  size_t size() const { return names.size(); }
  bool operator==(const FeatureSchema&) const = default;
};

struct FeatureVector {
  std::vector<double> values;
  std::shared_ptr<const FeatureSchema> schema;
};

// Artifacts shared by every fold. Immutable once loaded.
struct Resources {
  std::shared_ptr<const CategoryLexicon> lexicon;
  std::shared_ptr<const EmbeddingTable> embeddings;
  std::shared_ptr<const SentimentLexicon> sentiment;
};

class Featurizer {
 public:
  Featurizer(Resources resources, NGramVocabulary vocabulary);

  // Builds the n-gram vocabulary from `train` only.
  static Featurizer fit(Resources resources, std::span<const TokenList> train,
                        size_t vocabulary_size = 500);

  const FeatureSchema& schema() const { return *schema_; }
  std::shared_ptr<const FeatureSchema> shared_schema() const { return schema_; }
  const NGramVocabulary& vocabulary() const { return vocabulary_; }
  const Resources& resources() const { return resources_; }

  FeatureVector featurize(const TokenList& tokens) const;
  FeatureVector featurize(const corpus::Post& post) const;

  // Writes schema().size() values into `out`.
  void featurize_into(const TokenList& tokens, std::span<double> out) const;

 private:
  Resources resources_;
  NGramVocabulary vocabulary_;
  std::shared_ptr<const FeatureSchema> schema_;
};

FeatureVector featurize(const corpus::Post& post, const NGramVocabulary& vocab,
                        const CategoryLexicon& lexicon,
                        const EmbeddingTable& table,
                        const SentimentLexicon& sentiment);

}  // namespace mstress::featurize

#endif  // MSTRESS_FEATURIZE_H_
