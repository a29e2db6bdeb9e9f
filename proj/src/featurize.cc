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

#include "mstress/featurize.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "mstress/error.h"
#include "mstress/text.h"

namespace mstress::featurize {

namespace {

enum class CharClass { kWord, kSeparator, kEmoji };

CharClass classify(char32_t cp) {
  if (cp < 0x80) {
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') ||
        (cp >= '0' && cp <= '9') || cp == '_' || cp == '#' || cp == '@' ||
        cp == '\'') {
      return CharClass::kWord;
    }
    return CharClass::kSeparator;
  }
  if (text::is_emoji_base(cp) || text::is_regional_indicator(cp)) {
    return CharClass::kEmoji;
  }
  if (cp == 0x2019) return CharClass::kWord;
  if (text::is_space(cp) || cp == text::kReplacementChar ||
      (cp >= 0x80 && cp <= 0xBF) || (cp >= 0x2000 && cp <= 0x206F) ||
      (cp >= 0x3000 && cp <= 0x303F) || cp == 0xD7 || cp == 0xF7 ||
      cp == 0xFE0F || cp == 0xFE0E || cp == 0x20E3) {
    return CharClass::kSeparator;
  }
  return CharClass::kWord;
}

bool has_content(const std::string& token) {
  for (char c : token) {
    if (c != '#' && c != '@' && c != '\'') return true;
  }
  return false;
}

void flush_word(std::string& word, TokenList& out) {
  size_t b = 0;
  size_t e = word.size();
  while (b < e && word[b] == '\'') ++b;
  while (e > b && word[e - 1] == '\'') --e;
  std::string token = word.substr(b, e - b);
  word.clear();
  if (has_content(token)) out.push_back(std::move(token));
}

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return in;
}

}  // namespace

TokenList tokenize(std::string_view raw) {
  TokenList tokens;
  const std::vector<char32_t> cps = text::to_code_points(raw);
  std::string word;
  size_t i = 0;
  while (i < cps.size()) {
    char32_t cp = cps[i];
    const CharClass cls = classify(cp);
    if (cls == CharClass::kWord) {
      if (cp == 0x2019) cp = '\'';
      if (cp >= 'A' && cp <= 'Z') cp = cp - 'A' + 'a';
      text::append_utf8(word, cp);
      ++i;
      continue;
    }
    flush_word(word, tokens);
    if (cls == CharClass::kSeparator) {
      ++i;
      continue;
    }
    // Emoji cluster.
    std::string emoji;
    text::append_utf8(emoji, cp);
    ++i;
    if (text::is_regional_indicator(cp)) {
      if (i < cps.size() && text::is_regional_indicator(cps[i])) {
        text::append_utf8(emoji, cps[i]);
        ++i;
      }
    } else {
      while (i < cps.size()) {
        if (text::is_emoji_modifier(cps[i])) {
          text::append_utf8(emoji, cps[i]);
          ++i;
        } else if (cps[i] == 0x200D && i + 1 < cps.size() &&
                   text::is_emoji_base(cps[i + 1])) {
          text::append_utf8(emoji, cps[i]);
          text::append_utf8(emoji, cps[i + 1]);
          i += 2;
        } else {
          break;
        }
      }
    }
    tokens.push_back(std::move(emoji));
  }
  flush_word(word, tokens);
  return tokens;
}

std::vector<std::string> ngrams_of(const TokenList& tokens) {
  std::vector<std::string> grams(tokens.begin(), tokens.end());
  for (size_t i = 0; i + 1 < tokens.size(); ++i) {
    grams.push_back(tokens[i] + " " + tokens[i + 1]);
  }
  return grams;
}

NGramVocabulary::NGramVocabulary(std::vector<NGramEntry> entries,
                                 size_t capacity)
    : entries_(std::move(entries)), capacity_(capacity) {
  if (entries_.size() > capacity_) {
    throw DataError("vocabulary larger than its capacity");
  }
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (!index_.emplace(entries_[i].ngram, i).second) {
      throw DataError("duplicate n-gram '" + entries_[i].ngram + "'");
    }
  }
}

std::optional<size_t> NGramVocabulary::index_of(const std::string& ngram) const {
  const auto it = index_.find(ngram);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void NGramVocabulary::write(std::ostream& out) const {
  for (const NGramEntry& e : entries_) out << e.ngram << '\t' << e.count << '\n';
}

NGramVocabulary NGramVocabulary::read(std::istream& in) {
  std::vector<NGramEntry> entries;
  for (const std::string& line : read_lines(in)) {
    if (line.empty()) continue;
    const size_t tab = line.rfind('\t');
    if (tab == std::string::npos) throw DataError("vocabulary line without tab");
    NGramEntry e;
    e.ngram = line.substr(0, tab);
    const std::string_view count = std::string_view(line).substr(tab + 1);
    const auto [ptr, ec] =
        std::from_chars(count.data(), count.data() + count.size(), e.count);
    if (ec != std::errc() || ptr != count.data() + count.size()) {
      throw DataError("bad vocabulary count in '" + line + "'");
    }
    entries.push_back(std::move(e));
  }
  const size_t n = entries.size();
  return NGramVocabulary(std::move(entries), n);
}

NGramVocabulary build_ngram_vocab(std::span<const TokenList> corpus, size_t k) {
  std::unordered_map<std::string, size_t> counts;
  for (const TokenList& doc : corpus) {
    for (const std::string& g : ngrams_of(doc)) ++counts[g];
  }
  std::vector<NGramEntry> ranked;
  ranked.reserve(counts.size());
  for (auto& [g, c] : counts) ranked.push_back({g, c});
  const size_t keep = std::min(k, ranked.size());
  const auto by_rank = [](const NGramEntry& a, const NGramEntry& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.ngram < b.ngram;
  };
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<long>(keep),
                    ranked.end(), by_rank);
  ranked.resize(keep);
  return NGramVocabulary(std::move(ranked), k);
}

CategoryLexicon::CategoryLexicon(std::vector<Category> categories)
    : categories_(std::move(categories)) {
  std::unordered_set<std::string> names;
  for (Category& c : categories_) {
    if (c.name.empty()) throw ConfigError("empty lexicon category name");
    if (!names.insert(c.name).second) {
      throw ConfigError("duplicate lexicon category '" + c.name + "'");
    }
    if (c.patterns.empty()) {
      throw ConfigError("lexicon category '" + c.name + "' has no patterns");
    }
    Compiled compiled;
    for (std::string& p : c.patterns) {
      p = text::ascii_lower(p);
      if (p.empty() || p == "*") {
        throw ConfigError("empty pattern in category '" + c.name + "'");
      }
      if (p.back() == '*') {
        compiled.prefixes.push_back(p.substr(0, p.size() - 1));
      } else {
        compiled.exact.insert(p);
      }
    }
    compiled_.push_back(std::move(compiled));
  }
}

CategoryLexicon CategoryLexicon::from_tsv(std::istream& in) {
  std::vector<Category> categories;
  std::unordered_map<std::string, size_t> index;
  size_t line_no = 0;
  for (const std::string& line : read_lines(in)) {
    ++line_no;
    const std::string t = text::trim(line);
    if (t.empty() || t.rfind("//", 0) == 0) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("lexicon line " + std::to_string(line_no) +
                      ": expected category<TAB>pattern");
    }
    const std::string name = text::trim(line.substr(0, tab));
    const std::string pattern = text::trim(line.substr(tab + 1));
    if (name.empty() || pattern.empty()) {
      throw DataError("lexicon line " + std::to_string(line_no) +
                      ": empty category or pattern");
    }
    auto [it, inserted] = index.emplace(name, categories.size());
    if (inserted) categories.push_back({name, {}});
    categories[it->second].patterns.push_back(pattern);
  }
  return CategoryLexicon(std::move(categories));
}

CategoryLexicon CategoryLexicon::load(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  return from_tsv(in);
}

std::optional<size_t> CategoryLexicon::index_of(std::string_view name) const {
  for (size_t i = 0; i < categories_.size(); ++i) {
    if (categories_[i].name == name) return i;
  }
  return std::nullopt;
}

bool CategoryLexicon::matches(size_t category, std::string_view token) const {
  const Compiled& c = compiled_.at(category);
  if (c.exact.count(std::string(token)) > 0) return true;
  for (const std::string& prefix : c.prefixes) {
    if (token.substr(0, prefix.size()) == prefix) return true;
  }
  return false;
}

std::vector<size_t> CategoryLexicon::counts(const TokenList& tokens) const {
  std::vector<size_t> counts(categories_.size(), 0);
  for (const std::string& token : tokens) {
    for (size_t c = 0; c < categories_.size(); ++c) {
      if (matches(c, token)) ++counts[c];
    }
  }
  return counts;
}

std::vector<double> CategoryLexicon::proportions(const TokenList& tokens) const {
  const std::vector<size_t> c = counts(tokens);
  const double denom = static_cast<double>(std::max<size_t>(1, tokens.size()));
  std::vector<double> out(c.size());
  for (size_t i = 0; i < c.size(); ++i) out[i] = static_cast<double>(c[i]) / denom;
  return out;
}

std::map<std::string, double> count_lexicon(const TokenList& tokens,
                                            const CategoryLexicon& lexicon) {
  const std::vector<double> p = lexicon.proportions(tokens);
  std::map<std::string, double> out;
  for (size_t i = 0; i < p.size(); ++i) out[lexicon.categories()[i].name] = p[i];
  return out;
}

EmbeddingTable::EmbeddingTable(size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw ConfigError("embedding dimension must be positive");
}

EmbeddingTable EmbeddingTable::from_text(std::istream& in,
                                         std::optional<size_t> dimension) {
  std::optional<EmbeddingTable> table;
  if (dimension) table.emplace(*dimension);
  size_t line_no = 0;
  for (const std::string& line : read_lines(in)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    std::vector<std::string> fields;
    for (std::string& f : text::split(text::trim(line), ' ')) {
      if (!f.empty()) fields.push_back(std::move(f));
    }
    if (fields.size() < 2) {
      throw DataError("embedding line " + std::to_string(line_no) +
                      ": no vector components");
    }
    std::vector<double> v;
    v.reserve(fields.size() - 1);
    for (size_t i = 1; i < fields.size(); ++i) {
      double x;
      const auto [ptr, ec] = std::from_chars(
          fields[i].data(), fields[i].data() + fields[i].size(), x);
      if (ec != std::errc() || ptr != fields[i].data() + fields[i].size() ||
          !std::isfinite(x)) {
        throw DataError("embedding line " + std::to_string(line_no) +
                        ": bad component '" + fields[i] + "'");
      }
      v.push_back(x);
    }
    if (!table) table.emplace(v.size());
    if (v.size() != table->dimension()) {
      throw DataError("embedding line " + std::to_string(line_no) +
                      ": expected " + std::to_string(table->dimension()) +
                      " components, got " + std::to_string(v.size()));
    }
    table->add(fields[0], std::move(v));
  }
  if (!table) table.emplace(50);
  return std::move(*table);
}

EmbeddingTable EmbeddingTable::load(const std::string& path,
                                    std::optional<size_t> dimension) {
  std::ifstream in = open_or_throw(path);
  return from_text(in, dimension);
}

void EmbeddingTable::add(const std::string& word, std::vector<double> vector) {
  if (vector.size() != dimension_) {
    throw DataError("embedding for '" + word + "' has wrong dimension");
  }
  for (double x : vector) {
    if (!std::isfinite(x)) throw DataError("non-finite embedding for '" + word + "'");
  }
  vectors_.emplace(word, std::move(vector));
}

const std::vector<double>* EmbeddingTable::find(const std::string& word) const {
  const auto it = vectors_.find(word);
  return it == vectors_.end() ? nullptr : &it->second;
}

std::vector<double> embed_mean(const TokenList& tokens,
                               const EmbeddingTable& table) {
  std::vector<double> mean(table.dimension(), 0.0);
  size_t known = 0;
  for (const std::string& t : tokens) {
    const std::vector<double>* v = table.find(t);
    if (v == nullptr) continue;
    for (size_t i = 0; i < mean.size(); ++i) mean[i] += (*v)[i];
    ++known;
  }
  if (known > 1) {
    for (double& x : mean) x /= static_cast<double>(known);
  }
  return mean;
}

SentimentScores score_sentiment(const TokenList& tokens,
                                const std::unordered_set<std::string>& positive,
                                const std::unordered_set<std::string>& negative) {
  size_t pos = 0;
  size_t neg = 0;
  for (const std::string& t : tokens) {
    if (positive.count(t) > 0) {
      ++pos;
    } else if (negative.count(t) > 0) {
      ++neg;
    }
  }
  const double denom = static_cast<double>(std::max<size_t>(1, tokens.size()));
  SentimentScores s;
  s.positive = static_cast<double>(pos) / denom;
  s.negative = static_cast<double>(neg) / denom;
  if (s.positive + s.negative > 1.0) s.negative = 1.0 - s.positive;
  s.neutral = std::max(0.0, 1.0 - s.positive - s.negative);
  return s;
}

SentimentLexicon::SentimentLexicon(std::unordered_set<std::string> positive,
                                   std::unordered_set<std::string> negative)
    : positive_(std::move(positive)), negative_(std::move(negative)) {
  for (const std::string& w : positive_) {
    if (negative_.count(w) > 0) {
      throw ConfigError("sentiment word '" + w + "' is both positive and negative");
    }
  }
}

SentimentLexicon SentimentLexicon::from_lists(std::istream& positive,
                                              std::istream& negative) {
  const auto read_set = [](std::istream& in) {
    std::unordered_set<std::string> words;
    for (const std::string& line : read_lines(in)) {
      const std::string w = text::ascii_lower(text::trim(line));
      if (!w.empty()) words.insert(w);
    }
    return words;
  };
  return SentimentLexicon(read_set(positive), read_set(negative));
}

SentimentLexicon SentimentLexicon::load(const std::string& positive_path,
                                        const std::string& negative_path) {
  std::ifstream pos = open_or_throw(positive_path);
  std::ifstream neg = open_or_throw(negative_path);
  return from_lists(pos, neg);
}

const char* to_string(FeatureGroup group) {
  switch (group) {
    case FeatureGroup::kEmbedding:
      return "embedding";
    case FeatureGroup::kLexicon:
      return "lexicon";
    case FeatureGroup::kSentiment:
      return "sentiment";
    case FeatureGroup::kNgram:
      return "ngrams";
  }
  return "?";
}

FeatureGroup feature_group_from_string(std::string_view name) {
  for (FeatureGroup g : kAllFeatureGroups) {
    if (name == to_string(g)) return g;
  }
  throw ConfigError("unknown feature group '" + std::string(name) + "'");
}

Featurizer::Featurizer(Resources resources, NGramVocabulary vocabulary)
    : resources_(std::move(resources)), vocabulary_(std::move(vocabulary)) {
  if (!resources_.lexicon || !resources_.embeddings || !resources_.sentiment) {
    throw ConfigError("featurizer resources are incomplete");
  }
  auto schema = std::make_shared<FeatureSchema>();
  const auto add = [&](std::string name, FeatureGroup g) {
    schema->names.push_back(std::move(name));
    schema->groups.push_back(g);
  };
  for (size_t i = 0; i < resources_.embeddings->dimension(); ++i) {
    add("emb:" + std::to_string(i), FeatureGroup::kEmbedding);
  }
  for (const auto& c : resources_.lexicon->categories()) {
    add("lex:" + c.name, FeatureGroup::kLexicon);
  }
  add("sent:positive", FeatureGroup::kSentiment);
  add("sent:negative", FeatureGroup::kSentiment);
  add("sent:neutral", FeatureGroup::kSentiment);
  for (const NGramEntry& e : vocabulary_.entries()) {
    add("ngram:" + e.ngram, FeatureGroup::kNgram);
  }
  schema_ = std::move(schema);
}

Featurizer Featurizer::fit(Resources resources, std::span<const TokenList> train,
                           size_t vocabulary_size) {
  return Featurizer(std::move(resources),
                    build_ngram_vocab(train, vocabulary_size));
}

void Featurizer::featurize_into(const TokenList& tokens,
                                std::span<double> out) const {
  if (out.size() != schema_->size()) {
    throw DataError("feature buffer has wrong length");
  }
  size_t at = 0;
  for (double v : embed_mean(tokens, *resources_.embeddings)) out[at++] = v;
  for (double v : resources_.lexicon->proportions(tokens)) out[at++] = v;
  const SentimentScores s = resources_.sentiment->score(tokens);
  out[at++] = s.positive;
  out[at++] = s.negative;
  out[at++] = s.neutral;
  const size_t ngram_base = at;
  std::fill(out.begin() + static_cast<long>(ngram_base), out.end(), 0.0);
  for (const std::string& g : ngrams_of(tokens)) {
    if (const auto idx = vocabulary_.index_of(g)) out[ngram_base + *idx] = 1.0;
  }
}

FeatureVector Featurizer::featurize(const TokenList& tokens) const {
  FeatureVector fv;
  fv.values.resize(schema_->size());
  featurize_into(tokens, fv.values);
  fv.schema = schema_;
  return fv;
}

FeatureVector Featurizer::featurize(const corpus::Post& post) const {
  return featurize(tokenize(post.text));
}

FeatureVector featurize(const corpus::Post& post, const NGramVocabulary& vocab,
                        const CategoryLexicon& lexicon,
                        const EmbeddingTable& table,
                        const SentimentLexicon& sentiment) {
  // Non-owning handles; the caller keeps the artifacts alive for the call.
  Resources r{std::shared_ptr<const CategoryLexicon>(std::shared_ptr<void>(), &lexicon),
              std::shared_ptr<const EmbeddingTable>(std::shared_ptr<void>(), &table),
              std::shared_ptr<const SentimentLexicon>(std::shared_ptr<void>(), &sentiment)};
  return Featurizer(r, vocab).featurize(post);
}

}  // namespace mstress::featurize
