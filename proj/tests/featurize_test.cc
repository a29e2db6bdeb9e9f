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
#include <cstring>
#include <map>
#include <sstream>

#include "doctest.h"
#include "mstress/error.h"
#include "mstress/rng.h"

using namespace mstress;
using namespace mstress::featurize;

namespace {

CategoryLexicon lexicon_from(const std::string& tsv) {
  std::istringstream in(tsv);
  return CategoryLexicon::from_tsv(in);
}

EmbeddingTable table_from(const std::string& text) {
  std::istringstream in(text);
  return EmbeddingTable::from_text(in);
}

Resources make_resources() {
  Resources r;
  r.lexicon = std::make_shared<const CategoryLexicon>(
      lexicon_from("anger\thate\nanger\tkill*\njoy\thappy\n"));
  r.embeddings =
      std::make_shared<const EmbeddingTable>(table_from("hate 1 0\nhappy 0 2\nday 2 2\n"));
  r.sentiment = std::make_shared<const SentimentLexicon>(
      std::unordered_set<std::string>{"happy", "good"},
      std::unordered_set<std::string>{"hate", "bad"});
  return r;
}

}  // namespace

TEST_CASE("tokenize examples") {
  CHECK(tokenize("").empty());
  CHECK(tokenize("I'm #proud!") == TokenList{"i'm", "#proud"});
  CHECK(tokenize("You\xE2\x80\x99re 'kind'") == TokenList{"you're", "kind"});
  CHECK(tokenize("hello\xE2\x80\x94world") == TokenList{"hello", "world"});
  CHECK(tokenize("### @@@ '''").empty());
  CHECK(tokenize("Caf\xC3\xA9") == TokenList{"caf\xC3\xA9"});
}

TEST_CASE("tokenize keeps emoji sequences whole") {
  const std::string flag = "\xF0\x9F\x8F\xB3\xEF\xB8\x8F\xE2\x80\x8D\xF0\x9F\x8C\x88";
  const std::string thumbs = "\xF0\x9F\x91\x8D\xF0\x9F\x8F\xBD";
  const std::string us = "\xF0\x9F\x87\xBA\xF0\x9F\x87\xB8";
  const std::string ca = "\xF0\x9F\x87\xA8\xF0\x9F\x87\xA6";
  CHECK(tokenize("pride" + flag + "month") == TokenList{"pride", flag, "month"});
  CHECK(tokenize("ok " + thumbs + thumbs) == TokenList{"ok", thumbs, thumbs});
  CHECK(tokenize(us + ca) == TokenList{us, ca});
}

TEST_CASE("tokenize: 20-sentence fixture matches the hand count") {
  // Per-sentence counts are written after each sentence.
  const char* sentences[] = {
      "The cat sat.",                                          // 3
      "I'm #proud!",                                           // 2
      "Don't stop, @friend.",                                  // 3
      "Wait... what?!",                                        // 2
      "Rain, rain, go away.",                                  // 4
      "It's 5 o'clock",                                        // 3
      "Tired \xF0\x9F\x98\xB4 today",                          // 3
      "Pride \xF0\x9F\x8F\xB3\xEF\xB8\x8F\xE2\x80\x8D\xF0\x9F\x8C\x88 month",  // 3
      "Hello\xE2\x80\x94world",                                // 2
      "'quoted' words",                                        // 2
      "a-b c_d",                                               // 3
      "#Love #LOVE",                                           // 2
      "Numbers 1,000 and 2.5",                                 // 6
      "Okay.",                                                 // 1
      "Thumbs \xF0\x9F\x91\x8D\xF0\x9F\x8F\xBD up",            // 3
      "Flags \xF0\x9F\x87\xBA\xF0\x9F\x87\xB8\xF0\x9F\x87\xA8\xF0\x9F\x87\xA6",  // 3
      "Caf\xC3\xA9 au lait",                                   // 3
      "You\xE2\x80\x99re kind",                                // 2
      "### @@@ '''",                                           // 0
      "End of fixture.",                                       // 3
  };
  std::string text;
  for (const char* s : sentences) text += std::string(s) + " ";
  const TokenList tokens = tokenize(text);
  CHECK(tokens.size() == 53);
  CHECK(std::count(tokens.begin(), tokens.end(), "#love") == 2);
  CHECK(std::count(tokens.begin(), tokens.end(), "o'clock") == 1);
  for (const auto& t : tokens) {
    CHECK_FALSE(t.empty());
    CHECK(t == text::ascii_lower(t));
  }
}

TEST_CASE("ngrams_of lists unigrams then bigrams") {
  CHECK(ngrams_of({"a", "b", "a"}) == std::vector<std::string>{"a", "b", "a", "a b", "b a"});
  CHECK(ngrams_of({"x"}) == std::vector<std::string>{"x"});
}

TEST_CASE("build_ngram_vocab examples") {
  const std::vector<TokenList> corpus = {{"a", "b", "a"}};
  const auto v = build_ngram_vocab(corpus, 2);
  REQUIRE(v.size() == 2);
  CHECK(v.entries()[0] == NGramEntry{"a", 2});
  CHECK(v.entries()[1] == NGramEntry{"a b", 1});
  CHECK(build_ngram_vocab(corpus, 0).size() == 0);
  const std::vector<TokenList> single = {{"x"}};
  const auto s = build_ngram_vocab(single, 10);
  REQUIRE(s.size() == 1);
  CHECK(s.entries()[0].ngram == "x");
  CHECK(build_ngram_vocab(corpus, 100).size() == 4);
}

TEST_CASE("property: vocabulary counts equal a dictionary count") {
  Rng rng(41);
  const std::vector<std::string> words = {"a", "b", "c", "d", "e", "f", "g"};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TokenList> corpus;
    size_t total = 0;
    while (total < 8000) {
      TokenList doc;
      const size_t n = static_cast<size_t>(rng.range(1, 15));
      for (size_t i = 0; i < n; ++i) doc.push_back(words[rng.below(words.size())]);
      total += n;
      corpus.push_back(doc);
    }
    std::map<std::string, size_t> counts;
    for (const auto& doc : corpus) {
      for (size_t i = 0; i < doc.size(); ++i) {
        ++counts[doc[i]];
        if (i + 1 < doc.size()) ++counts[doc[i] + " " + doc[i + 1]];
      }
    }
    std::vector<std::pair<std::string, size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& x, const auto& y) { return x.second > y.second; });
    const size_t k = 30;
    const auto v = build_ngram_vocab(corpus, k);
    REQUIRE(v.size() == k);
    for (size_t i = 0; i < k; ++i) {
      CHECK(v.entries()[i].ngram == ranked[i].first);
      CHECK(v.entries()[i].count == ranked[i].second);
    }
  }
}

TEST_CASE("vocabulary serialization round-trips") {
  const std::vector<TokenList> corpus = {{"x", "y", "x", "z"}, {"y", "x"}};
  const auto v = build_ngram_vocab(corpus, 4);
  std::stringstream s;
  v.write(s);
  const auto back = NGramVocabulary::read(s);
  CHECK(back.entries() == v.entries());
  CHECK(back.index_of("x") == std::optional<size_t>(0));
}

TEST_CASE("count_lexicon examples") {
  const CategoryLexicon lex = lexicon_from("// comment\nanger\thate\n\nanger\tkill*\n");
  CHECK(count_lexicon({}, lex).at("anger") == 0.0);
  CHECK(count_lexicon({"hate", "it"}, lex).at("anger") == 0.5);
  CHECK(count_lexicon({"killing"}, lex).at("anger") == 1.0);
  CHECK(count_lexicon({"kil"}, lex).at("anger") == 0.0);
}

TEST_CASE("lexicon validation") {
  CHECK(count_lexicon({"hate"}, lexicon_from("anger\tHATE\n")).at("anger") == 1.0);
  CHECK_THROWS_AS(lexicon_from("anger\n"), Error);
  CHECK_THROWS_AS(CategoryLexicon(std::vector<CategoryLexicon::Category>{{"a", {}}}), Error);
  CHECK_THROWS_AS(CategoryLexicon(std::vector<CategoryLexicon::Category>{{"a", {"x"}}, {"a", {"y"}}}), Error);
}

TEST_CASE("embed_mean examples") {
  const EmbeddingTable t = table_from("a 1 2\nb 3 4\n");
  CHECK(t.dimension() == 2);
  CHECK(embed_mean({"zzz"}, t) == std::vector<double>{0.0, 0.0});
  CHECK(embed_mean({"b"}, t) == std::vector<double>{3.0, 4.0});
  CHECK(embed_mean({"a", "zzz", "b"}, t) == std::vector<double>{2.0, 3.0});
  CHECK_THROWS_AS(table_from("a 1 2\nb 3\n"), DataError);
  CHECK_THROWS_AS(table_from("a 1 nan\n"), DataError);
}

TEST_CASE("score_sentiment examples") {
  const std::unordered_set<std::string> pos = {"good"};
  const std::unordered_set<std::string> neg = {"bad"};
  auto s = score_sentiment({}, pos, neg);
  CHECK(s.positive == 0.0);
  CHECK(s.negative == 0.0);
  CHECK(s.neutral == 1.0);
  s = score_sentiment({"good"}, pos, neg);
  CHECK(s.positive == 1.0);
  CHECK(s.neutral == 0.0);
  s = score_sentiment({"good", "bad", "bad", "x"}, pos, neg);
  CHECK(s.positive == 0.25);
  CHECK(s.negative == 0.5);
  CHECK(s.neutral == 0.25);
  CHECK_THROWS_AS(SentimentLexicon({"a"}, {"a"}), ConfigError);
}

TEST_CASE("property: proportions lie in [0,1] and sentiment sums to 1") {
  Rng rng(43);
  const Resources r = make_resources();
  const std::vector<std::string> words = {"hate", "killer", "happy", "good", "bad", "x"};
  for (int trial = 0; trial < 500; ++trial) {
    TokenList tokens;
    const size_t n = static_cast<size_t>(rng.range(0, 20));
    for (size_t i = 0; i < n; ++i) tokens.push_back(words[rng.below(words.size())]);
    for (double p : r.lexicon->proportions(tokens)) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
    const auto s = r.sentiment->score(tokens);
    CHECK(std::abs(s.positive + s.negative + s.neutral - 1.0) <= 1e-9);
    CHECK(s.neutral >= -1e-12);
  }
}

TEST_CASE("featurize layout and components") {
  const Resources r = make_resources();
  const std::vector<TokenList> train = {{"happy", "day"}, {"hate", "day", "day"}};
  const Featurizer fz = Featurizer::fit(r, train, 3);
  const FeatureSchema& schema = fz.schema();
  REQUIRE(schema.size() == 2 + 2 + 3 + 3);
  CHECK(schema.names[0] == "emb:0");
  CHECK(schema.names[2] == "lex:anger");
  CHECK(schema.names[4] == "sent:positive");
  CHECK(schema.names[7] == "ngram:day");
  CHECK(schema.groups[7] == FeatureGroup::kNgram);

  const FeatureVector empty = fz.featurize(TokenList{});
  CHECK(empty.values == std::vector<double>{0, 0, 0, 0, 0, 0, 1, 0, 0, 0});

  // hate day day killer: embedding mean of hate, day, day; anger 2/4.
  const TokenList post = {"hate", "day", "day", "killer"};
  const FeatureVector v = fz.featurize(post);
  const auto emb = embed_mean(post, *r.embeddings);
  CHECK(v.values[0] == emb[0]);
  CHECK(v.values[1] == emb[1]);
  CHECK(v.values[2] == 0.5);
  CHECK(v.values[3] == 0.0);
  CHECK(v.values[4] == 0.0);
  CHECK(v.values[5] == 0.25);
  CHECK(v.values[6] == 0.75);
  for (size_t j = 7; j < schema.size(); ++j) {
    const std::string g = schema.names[j].substr(std::strlen("ngram:"));
    const auto grams = ngrams_of(post);
    const bool present = std::find(grams.begin(), grams.end(), g) != grams.end();
    CHECK(v.values[j] == (present ? 1.0 : 0.0));
  }
  const FeatureVector again = fz.featurize(post);
  CHECK(std::memcmp(v.values.data(), again.values.data(),
                    v.values.size() * sizeof(double)) == 0);
  CHECK(v.schema == again.schema);

  corpus::Post p;
  p.text = "Hate day, day KILLER";
  const FeatureVector free_fn =
      featurize::featurize(p, fz.vocabulary(), *r.lexicon, *r.embeddings, *r.sentiment);
  CHECK(free_fn.values == v.values);
}

TEST_CASE("feature group names round-trip") {
  for (FeatureGroup g : kAllFeatureGroups) {
    CHECK(feature_group_from_string(to_string(g)) == g);
  }
  CHECK_THROWS_AS(feature_group_from_string("liwc"), ConfigError);
}
