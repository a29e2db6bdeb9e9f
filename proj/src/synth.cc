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

#include "mstress/synth.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mstress/error.h"
#include "mstress/rng.h"
#include "mstress/text.h"

namespace mstress::synth {

using nlohmann::json;

namespace {

// Independent streams so that, e.g., the labeled corpus does not change
// when the number of study users does.
constexpr uint64_t kUserStream = 0x5851F42D4C957F2DULL;
constexpr uint64_t kLabeledStream = 0x14057B7EF767814FULL;
constexpr uint64_t kEmbeddingStream = 0x2545F4914F6CDD1DULL;

// Category k boosts its rate by up to this fraction as tanh(z) grows,
// alternating sign with k.
constexpr double kCategoryConfounding = 0.3;
constexpr double kMaxTopicShare = 0.3;
constexpr double kHashtagRate = 0.1;

constexpr std::string_view kConsonants = "bdfgklmnprstv";
constexpr std::string_view kVowels = "aeiou";

std::string syllable(size_t i) {
  const size_t n = kVowels.size();
  return {kConsonants[(i / n) % kConsonants.size()], kVowels[i % n]};
}

constexpr size_t kSyllables = 13 * 5;

// Filler words never start with 'q' or 'x'; those prefixes are reserved
// for category words and planted tokens.
std::string filler_word(size_t i) {
  return syllable(i % kSyllables) + syllable((i / kSyllables) % kSyllables) +
         (i >= kSyllables * kSyllables ? syllable(i / (kSyllables * kSyllables)) : "");
}

char category_letter(size_t k) { return static_cast<char>('a' + k % 26); }

std::string category_stem(size_t k) {
  std::string s = "q";
  s.push_back(category_letter(k));
  if (k >= 26) s += std::to_string(k / 26);
  return s;
}

// Words of the second half carry a 'z' after the stem and are covered by
// one wildcard pattern; the first half are exact patterns.
std::vector<std::string> category_words(size_t k, size_t n) {
  std::vector<std::string> words;
  for (size_t j = 0; j < n; ++j) {
    words.push_back(category_stem(k) + (j < (n + 1) / 2 ? "" : "z") + syllable(j) +
                    "n");
  }
  return words;
}

std::vector<std::string> category_patterns(size_t k, size_t n) {
  std::vector<std::string> patterns;
  const std::vector<std::string> words = category_words(k, n);
  for (size_t j = 0; j < (n + 1) / 2; ++j) patterns.push_back(words[j]);
  if (n > (n + 1) / 2) patterns.push_back(category_stem(k) + "z*");
  return patterns;
}

std::string planted_word(size_t i) {
  return "x" + syllable(i % kSyllables) + syllable(i / kSyllables % kSyllables) + "r";
}

std::string decoy_word(size_t i) {
  return "x" + syllable(i % kSyllables) + syllable(i / kSyllables % kSyllables) + "d";
}

std::string padded(char prefix, size_t i, int width) {
  std::string digits = std::to_string(i);
  if (static_cast<int>(digits.size()) < width) {
    digits.insert(0, static_cast<size_t>(width) - digits.size(), '0');
  }
  return prefix + digits;
}

int64_t clamp_round(double v, int64_t lo, int64_t hi) {
  return std::clamp(static_cast<int64_t>(std::llround(v)), lo, hi);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

const std::vector<std::string>& minority_bios() {
  static const std::vector<std::string> bios = {
      "proud gay man, coffee first", "lesbian | she/her | runner",
      "queer artist \xF0\x9F\x8F\xB3\xEF\xB8\x8F\xE2\x80\x8D\xF0\x9F\x8C\x88",
      "bi and tired", "trans rights are human rights", "LGBTQ teacher and reader"};
  return bios;
}

const std::vector<std::string>& control_bios() {
  static const std::vector<std::string> bios = {
      "legal analyst", "dad, runner, coffee", "music and more music",
      "engineer. opinions my own", "gaming, cats, bad puns", "biology student"};
  return bios;
}

const std::vector<std::string>& hashtag_pool() {
  static const std::vector<std::string> tags = {"gay",  "lgbt",  "pride", "love",
                                                "music", "news", "queer", "mood"};
  return tags;
}

struct Emitter {
  const SyntheticSpec& spec;
  const std::vector<std::vector<std::string>>& categories;
  const std::vector<std::string>& filler;

  // `rates` holds the per-category emission probabilities.
  std::string token(Rng& rng, std::span<const double> rates, double topic_share) const {
    double u = rng.uniform();
    for (size_t k = 0; k < rates.size(); ++k) {
      if (u < rates[k]) {
        const auto& words = categories[k];
        return words[rng.below(words.size())];
      }
      u -= rates[k];
    }
    const size_t topics = spec.topic_words;
    if (topics > 0 && rng.bernoulli(topic_share)) return filler[rng.below(topics)];
    return filler[topics + rng.below(filler.size() - topics)];
  }
};

}  // namespace

void SyntheticSpec::validate() const {
  if (n_minority == 1 || n_control == 1) {
    throw ConfigError("synthetic groups need 0 or at least 2 users");
  }
  if (min_posts < 1 || max_posts < min_posts) {
    throw ConfigError("posts per user must satisfy 1 <= min <= max");
  }
  if (tokens_per_post < 1) throw ConfigError("tokens_per_post must be >= 1");
  if (n_categories < 1 || words_per_category < 1) {
    throw ConfigError("need at least one category with one word");
  }
  if (topic_words >= filler_words) {
    throw ConfigError("topic_words must be below filler_words");
  }
  for (double r : {category_rate, trend, prevalence, planted_rate_positive,
                   planted_rate_negative}) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("synthetic rates must lie in [0,1]");
  }
  if (!std::isfinite(delta) || !std::isfinite(confounder)) {
    throw ConfigError("delta and confounder must be finite");
  }
  if (!planted_outcome.empty()) {
    bool found = false;
    for (size_t k = 0; k < n_categories; ++k) {
      found = found || planted_outcome == "cat" + std::to_string(k);
    }
    if (!found) throw ConfigError("planted outcome '" + planted_outcome + "' is unknown");
  }
  const double peak = static_cast<double>(n_categories) *
                          (category_rate * (1.0 + kCategoryConfounding) + trend) +
                      std::max(0.0, delta);
  if (peak > 1.0) throw ConfigError("category emission mass exceeds 1");
  if (category_rate * (1.0 - kCategoryConfounding) + trend + std::min(0.0, delta) < 0.0) {
    throw ConfigError("planted delta drives a category rate below 0");
  }
  if (embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
}

json SyntheticSpec::to_json() const {
  return {{"n_minority", n_minority},
          {"n_control", n_control},
          {"min_posts", min_posts},
          {"max_posts", max_posts},
          {"tokens_per_post", tokens_per_post},
          {"n_categories", n_categories},
          {"words_per_category", words_per_category},
          {"filler_words", filler_words},
          {"topic_words", topic_words},
          {"category_rate", category_rate},
          {"trend", trend},
          {"planted_outcome", planted_outcome},
          {"delta", delta},
          {"confounder", confounder},
          {"n_labeled", n_labeled},
          {"prevalence", prevalence},
          {"planted_tokens", planted_tokens},
          {"planted_rate_positive", planted_rate_positive},
          {"planted_rate_negative", planted_rate_negative},
          {"embedding_dim", embedding_dim},
          {"seed", seed}};
}

json SyntheticStudy::ground_truth() const {
  json effects = json::object();
  for (const auto& c : lexicon.categories()) {
    effects[c.name] = c.name == spec.planted_outcome ? spec.delta : 0.0;
  }
  return {{"spec", spec.to_json()},
          {"delta", spec.delta},
          {"planted_outcome", spec.planted_outcome},
          {"common_trend", spec.trend},
          {"expected_te", std::move(effects)},
          {"planted_vocabulary", planted_vocabulary},
          {"n_minority", minority.size()},
          {"n_control", control.size()},
          {"n_posts", posts.size()},
          {"n_labeled", labeled.size()}};
}

SyntheticStudy generate(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticStudy study;
  study.spec = spec;
  study.bio_patterns = {"gay", "lesbian", "queer", "bi", "trans", "lgbtq?"};
  study.bio_emojis = {"\xF0\x9F\x8F\xB3\xEF\xB8\x8F\xE2\x80\x8D\xF0\x9F\x8C\x88"};
  study.seed_hashtags = {"gay", "lgbt"};

  std::vector<std::string> filler;
  for (size_t i = 0; i < spec.filler_words; ++i) filler.push_back(filler_word(i));
  std::vector<std::vector<std::string>> categories;
  std::vector<featurize::CategoryLexicon::Category> lexicon;
  for (size_t k = 0; k < spec.n_categories; ++k) {
    categories.push_back(category_words(k, spec.words_per_category));
    lexicon.push_back({"cat" + std::to_string(k),
                       category_patterns(k, spec.words_per_category)});
  }
  study.lexicon = featurize::CategoryLexicon(std::move(lexicon));
  for (size_t i = 0; i < spec.planted_tokens; ++i) {
    study.planted_vocabulary.push_back(planted_word(i));
  }
  const size_t n_sent = std::min<size_t>(20, (spec.filler_words - spec.topic_words) / 2);
  for (size_t i = 0; i < n_sent; ++i) {
    study.positive_words.push_back(filler[spec.topic_words + i]);
    study.negative_words.push_back(filler[spec.topic_words + n_sent + i]);
  }

  Rng emb_rng(spec.seed ^ kEmbeddingStream);
  study.embeddings = featurize::EmbeddingTable(spec.embedding_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.embedding_dim));
  const auto add_vector = [&](const std::string& w) {
    std::vector<double> v(spec.embedding_dim);
    for (double& x : v) x = scale * emb_rng.normal();
    study.embeddings.add(w, std::move(v));
  };
  for (const std::string& w : filler) add_vector(w);
  for (const auto& words : categories) {
    for (const std::string& w : words) add_vector(w);
  }

  const Emitter emit{spec, categories, filler};
  const std::optional<size_t> planted = study.lexicon.index_of(spec.planted_outcome);
  const corpus::StudyWindows windows = corpus::StudyWindows::defaults();

  // Study users.
  Rng rng(spec.seed ^ kUserStream);
  const size_t n_users = spec.n_minority + spec.n_control;
  std::vector<int> groups(n_users, 0);
  std::fill(groups.begin(), groups.begin() + static_cast<long>(spec.n_minority), 1);
  rng.shuffle(std::span<int>(groups));
  const double day = static_cast<double>(text::kSecondsPerDay);
  std::vector<double> rates(spec.n_categories);
  for (size_t u = 0; u < n_users; ++u) {
    const bool minority = groups[u] == 1;
    const double z = rng.normal((minority ? 0.5 : -0.5) * spec.confounder, 1.0);
    corpus::UserRecord user;
    user.user_id = padded('u', u, 6);
    const auto& bios = minority ? minority_bios() : control_bios();
    user.bio = bios[rng.below(bios.size())];
    user.n_followers = clamp_round(1000 + 400 * z + 300 * rng.normal(), 0, 5000);
    user.n_followees = clamp_round(800 + 300 * z + 300 * rng.normal(), 0, 5000);
    user.n_tweets = clamp_round(5000 + 2000 * z + 1500 * rng.normal(), 200, 30000);
    user.n_likes = clamp_round(8000 + 3000 * z + 3000 * rng.normal(), 0, 1000000);
    const double age_days = std::clamp(1500 + 400 * z + 300 * rng.normal(), 30.0, 4000.0);
    user.created_at = windows.boundary - static_cast<int64_t>(age_days * day);
    const double topic_share = kMaxTopicShare * logistic(z);
    const double tilt = kCategoryConfounding * std::tanh(z);

    for (int window = 0; window < 2; ++window) {
      const bool during = window == 1;
      for (size_t k = 0; k < spec.n_categories; ++k) {
        rates[k] = spec.category_rate * (1.0 + (k % 2 == 0 ? tilt : -tilt)) +
                   (during ? spec.trend : 0.0);
      }
      if (during && minority && planted) rates[*planted] += spec.delta;
      const text::UnixSeconds lo = during ? windows.boundary : windows.study_start;
      const text::UnixSeconds hi = during ? windows.study_end : windows.boundary;
      const size_t n_posts = static_cast<size_t>(rng.range(
          static_cast<int64_t>(spec.min_posts), static_cast<int64_t>(spec.max_posts)));
      std::vector<corpus::Post> posts;
      for (size_t p = 0; p < n_posts; ++p) {
        corpus::Post post;
        post.author_id = user.user_id;
        post.timestamp = lo + static_cast<int64_t>(rng.below(static_cast<uint64_t>(hi - lo)));
        for (size_t t = 0; t < spec.tokens_per_post; ++t) {
          if (t > 0) post.text.push_back(' ');
          post.text += emit.token(rng, rates, topic_share);
        }
        if (rng.bernoulli(kHashtagRate)) {
          const std::string& tag = hashtag_pool()[rng.below(hashtag_pool().size())];
          post.text += " #" + tag;
          post.hashtags.push_back(tag);
        }
        posts.push_back(std::move(post));
      }
      std::sort(posts.begin(), posts.end(), [](const auto& a, const auto& b) {
        return a.timestamp < b.timestamp;
      });
      for (corpus::Post& post : posts) {
        const size_t seq = study.posts.size();
        post.post_id = padded('s', seq, 8);
        study.posts.push_back(std::move(post));
      }
    }
    (minority ? study.minority : study.control).insert(user.user_id);
    study.users.push_back(std::move(user));
  }
  // Stable ids follow user order, so posts are grouped by author and sorted
  // by time within each author.

  // Labeled classification corpus.
  Rng lrng(spec.seed ^ kLabeledStream);
  const size_t n_pos = static_cast<size_t>(
      std::llround(spec.prevalence * static_cast<double>(spec.n_labeled)));
  std::vector<int> labels(spec.n_labeled, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<long>(n_pos), 1);
  lrng.shuffle(std::span<int>(labels));
  std::vector<double> base(spec.n_categories, spec.category_rate);
  // Each planted slot holds a planted or a decoy token with the same
  // probability in both classes, so post length and lexicon shares carry no
  // label signal.
  const double extra_rate =
      std::max(spec.planted_rate_positive, spec.planted_rate_negative);
  std::vector<std::string> decoys;
  for (size_t j = 0; j < spec.planted_tokens; ++j) decoys.push_back(decoy_word(j));
  for (size_t i = 0; i < spec.n_labeled; ++i) {
    std::vector<std::string> tokens;
    for (size_t t = 0; t < spec.tokens_per_post; ++t) {
      tokens.push_back(emit.token(lrng, base, kMaxTopicShare / 2));
    }
    const double rate =
        labels[i] == 1 ? spec.planted_rate_positive : spec.planted_rate_negative;
    const double decoy_rate = rate < 1.0 ? (extra_rate - rate) / (1.0 - rate) : 0.0;
    for (size_t j = 0; j < study.planted_vocabulary.size(); ++j) {
      const std::string* w = nullptr;
      if (lrng.bernoulli(rate)) {
        w = &study.planted_vocabulary[j];
      } else if (lrng.bernoulli(decoy_rate)) {
        w = &decoys[lrng.below(decoys.size())];
      }
      if (w != nullptr) {
        const size_t at = static_cast<size_t>(lrng.below(tokens.size() + 1));
        tokens.insert(tokens.begin() + static_cast<long>(at), *w);
      }
    }
    corpus::LabeledPost post;
    post.post_id = padded('p', i, 6);
    post.label = labels[i];
    for (size_t t = 0; t < tokens.size(); ++t) {
      if (t > 0) post.text.push_back(' ');
      post.text += tokens[t];
    }
    study.labeled.push_back(std::move(post));
  }
  return study;
}

namespace {

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out.push_back(sep);
    out += items[i];
  }
  return out;
}

std::string code_point_notation(std::string_view utf8) {
  std::string out;
  for (char32_t cp : text::to_code_points(utf8)) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%sU+%04X", out.empty() ? "" : " ",
                  static_cast<unsigned>(cp));
    out += buf;
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<std::string> write_study(const SyntheticStudy& study,
                                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  const auto file = [&](const std::string& name) {
    written.push_back(name);
    return open_out(dir / name);
  };
  {
    auto out = file("users.jsonl");
    corpus::write_users_jsonl(out, study.users);
  }
  {
    auto out = file("posts.jsonl");
    corpus::write_posts_jsonl(out, study.posts);
  }
  {
    auto out = file("labeled.jsonl");
    corpus::write_labeled_jsonl(out, study.labeled);
  }
  {
    auto out = file("lexicon.tsv");
    for (const auto& c : study.lexicon.categories()) {
      for (const std::string& p : c.patterns) out << c.name << '\t' << p << '\n';
    }
  }
  {
    auto out = file("embeddings.txt");
    std::vector<std::string> words;
    for (size_t i = 0; i < study.spec.filler_words; ++i) words.push_back(filler_word(i));
    for (size_t k = 0; k < study.spec.n_categories; ++k) {
      for (const std::string& w : category_words(k, study.spec.words_per_category)) {
        words.push_back(w);
      }
    }
    for (const std::string& w : words) {
      out << w;
      for (double x : *study.embeddings.find(w)) out << ' ' << text::format_double(x);
      out << '\n';
    }
  }
  {
    auto out = file("positive.txt");
    for (const std::string& w : study.positive_words) out << w << '\n';
  }
  {
    auto out = file("negative.txt");
    for (const std::string& w : study.negative_words) out << w << '\n';
  }
  {
    auto out = file("minority.txt");
    corpus::write_id_list(out, study.minority);
  }
  {
    auto out = file("control.txt");
    corpus::write_id_list(out, study.control);
  }
  {
    auto out = file("ground_truth.json");
    out << study.ground_truth().dump(2) << '\n';
  }
  {
    auto out = file("study.ini");
    std::vector<std::string> emojis;
    for (const std::string& e : study.bio_emojis) emojis.push_back(code_point_notation(e));
    std::vector<std::string> outcomes;
    for (const auto& c : study.lexicon.categories()) outcomes.push_back(c.name);
    out << "; Synthetic study written by mstress synth.\n"
        << "seed = " << study.spec.seed << "\n\n"
        << "[paths]\n"
        << "posts = posts.jsonl\nusers = users.jsonl\nlabeled = labeled.jsonl\n"
        << "lexicon = lexicon.tsv\nembeddings = embeddings.txt\n"
        << "positive_words = positive.txt\nnegative_words = negative.txt\n"
        << "minority = minority.txt\ncontrol = control.txt\n\n"
        << "[cohort]\n"
        << "seed_hashtags = " << join(study.seed_hashtags, ',') << '\n'
        << "bio_patterns = " << join(study.bio_patterns, ',') << '\n'
        << "bio_emojis = " << join(emojis, ',') << "\n\n"
        << "[causal]\n"
        << "outcomes = " << join(outcomes, ',') << '\n';
  }
  return written;
}

}  // namespace mstress::synth
