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

#include "mstress/corpus.h"

#include <algorithm>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "mstress/error.h"

namespace mstress::corpus {

using nlohmann::json;

const char* to_string(CohortLabel label) {
  return label == CohortLabel::kMinority ? "MINORITY" : "CONTROL";
}

StudyWindows StudyWindows::defaults() {
  return {*text::parse_timestamp("2018-06-01T00:00:00Z"),
          *text::parse_timestamp("2019-12-01T00:00:00Z"),
          *text::parse_timestamp("2021-06-01T00:00:00Z")};
}

void StudyWindows::validate() const {
  if (!(study_start < boundary && boundary < study_end)) {
    throw ConfigError("study windows must satisfy start < boundary < end");
  }
}

namespace {

bool is_ws(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool starts_with_ci(std::string_view s, size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (size_t i = 0; i < prefix.size(); ++i) {
    char c = s[pos + i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != prefix[i]) return false;
  }
  return true;
}

// Length of a URL starting at `pos`, or 0.
size_t url_length_at(std::string_view s, size_t pos, bool at_token_start) {
  size_t body = 0;
  if (starts_with_ci(s, pos, "https://")) {
    body = pos + 8;
  } else if (starts_with_ci(s, pos, "http://")) {
    body = pos + 7;
  } else if (at_token_start && starts_with_ci(s, pos, "t.co/")) {
    body = pos + 5;
  } else {
    return 0;
  }
  // \S+ requires at least one non-space character after the prefix.
  if (body >= s.size() || is_ws(s[body])) return 0;
  size_t end = body;
  while (end < s.size() && !is_ws(s[end])) ++end;
  return end - pos;
}

bool is_hashtag_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') ||
           (cp >= '0' && cp <= '9') || cp == '_';
  }
  return !text::is_space(cp) && !text::is_emoji_base(cp) &&
         !text::is_emoji_modifier(cp) && !text::is_regional_indicator(cp) &&
         cp != 0x200D && !(cp >= 0x2000 && cp <= 0x206F);
}

std::string json_string_field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    throw DataError(std::string("missing field '") + key + "'");
  }
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<int64_t>());
  throw DataError(std::string("field '") + key + "' must be a string");
}

UnixSeconds json_time_field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    throw DataError(std::string("missing field '") + key + "'");
  }
  if (it->is_number_integer()) return it->get<int64_t>();
  if (it->is_string()) {
    const auto t = text::parse_timestamp(it->get<std::string>());
    if (t) return *t;
  }
  throw DataError(std::string("unparseable timestamp in '") + key + "'");
}

int64_t json_count_field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    throw DataError(std::string("missing field '") + key + "'");
  }
  int64_t v;
  if (it->is_number_integer()) {
    v = it->get<int64_t>();
  } else if (it->is_number_float() && it->get<double>() == static_cast<double>(
                                          static_cast<int64_t>(it->get<double>()))) {
    v = static_cast<int64_t>(it->get<double>());
  } else {
    throw DataError(std::string("field '") + key + "' must be an integer");
  }
  if (v < 0) throw DataError(std::string("field '") + key + "' is negative");
  return v;
}

json parse_object(std::string_view line) {
  json obj = json::parse(line.begin(), line.end(), nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    throw DataError("not a JSON object");
  }
  return obj;
}

template <typename Record, typename Parse, typename Accept>
IngestResult<Record> ingest_lines(std::istream& in, MalformedPolicy policy,
                                  Parse parse, Accept accept) {
  IngestResult<Record> result;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      Record record = parse(line);
      accept(record);
      result.records.push_back(std::move(record));
    } catch (const DataError& e) {
      if (policy == MalformedPolicy::kFailFast) {
        throw DataError("line " + std::to_string(line_no) + ": " + e.what());
      }
      ++result.skipped;
      result.skipped_lines.push_back(line_no);
    }
  }
  return result;
}

}  // namespace

std::string strip_urls(std::string_view text) {
  std::string kept;
  kept.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    const bool token_start = i == 0 || is_ws(text[i - 1]);
    const size_t url = url_length_at(text, i, token_start);
    if (url > 0) {
      i += url;
      continue;
    }
    kept.push_back(text[i]);
    ++i;
  }
  std::string out;
  out.reserve(kept.size());
  bool pending_space = false;
  for (char c : kept) {
    if (is_ws(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> extract_hashtags(std::string_view text) {
  std::vector<std::string> tags;
  std::unordered_set<std::string> seen;
  size_t i = 0;
  while (i < text.size()) {
    if (is_ws(text[i])) {
      ++i;
      continue;
    }
    size_t end = i;
    while (end < text.size() && !is_ws(text[end])) ++end;
    std::string_view token = text.substr(i, end - i);
    i = end;
    if (token.empty() || token[0] != '#') continue;
    size_t p = 0;
    while (p < token.size() && token[p] == '#') ++p;
    std::string tag;
    while (p < token.size()) {
      size_t next = p;
      const char32_t cp = text::decode_utf8(token, next);
      if (!is_hashtag_char(cp)) break;
      tag.append(token.substr(p, next - p));
      p = next;
    }
    tag = text::ascii_lower(tag);
    if (!tag.empty() && seen.insert(tag).second) tags.push_back(tag);
  }
  return tags;
}

Post parse_post(std::string_view json_line) {
  const json obj = parse_object(json_line);
  Post post;
  post.post_id = json_string_field(obj, "id");
  post.author_id = json_string_field(obj, "author_id");
  post.timestamp = json_time_field(obj, "created_at");
  const std::string raw = json_string_field(obj, "text");
  post.text = strip_urls(raw);
  if (const auto it = obj.find("hashtags"); it != obj.end() && it->is_array()) {
    std::unordered_set<std::string> seen;
    for (const auto& h : *it) {
      if (!h.is_string()) throw DataError("hashtags must be strings");
      std::string tag = h.get<std::string>();
      tag.erase(0, tag.find_first_not_of('#'));
      tag = text::ascii_lower(tag);
      if (!tag.empty() && seen.insert(tag).second) post.hashtags.push_back(tag);
    }
  } else {
    post.hashtags = extract_hashtags(post.text);
  }
  if (post.post_id.empty() || post.author_id.empty()) {
    throw DataError("empty id");
  }
  const auto rt = obj.find("is_repost");
  post.is_repost = (rt != obj.end() && rt->is_boolean() && rt->get<bool>()) ||
                   raw.rfind("RT @", 0) == 0;
  return post;
}

UserRecord parse_user(std::string_view json_line) {
  const json obj = parse_object(json_line);
  UserRecord user;
  user.user_id = json_string_field(obj, "id");
  if (user.user_id.empty()) throw DataError("empty id");
  if (const auto it = obj.find("bio"); it != obj.end() && it->is_string()) {
    user.bio = it->get<std::string>();
  } else if (it != obj.end() && !it->is_null()) {
    throw DataError("field 'bio' must be a string");
  }
  user.n_tweets = json_count_field(obj, "tweets");
  user.n_likes = json_count_field(obj, "likes");
  user.n_followers = json_count_field(obj, "followers");
  user.n_followees = json_count_field(obj, "followees");
  user.created_at = json_time_field(obj, "created_at");
  return user;
}

IngestResult<Post> ingest_posts(std::istream& in, MalformedPolicy policy) {
  return ingest_lines<Post>(
      in, policy, [](std::string_view line) { return parse_post(line); },
      [](const Post&) {});
}

IngestResult<UserRecord> ingest_users(std::istream& in, MalformedPolicy policy) {
  std::unordered_set<std::string> ids;
  return ingest_lines<UserRecord>(
      in, policy, [](std::string_view line) { return parse_user(line); },
      [&ids](const UserRecord& u) {
        if (!ids.insert(u.user_id).second) {
          throw DataError("duplicate user id '" + u.user_id + "'");
        }
      });
}

LabeledPost parse_labeled(std::string_view json_line) {
  const json obj = parse_object(json_line);
  LabeledPost post;
  post.post_id = json_string_field(obj, "id");
  if (post.post_id.empty()) throw DataError("empty id");
  post.text = strip_urls(json_string_field(obj, "text"));
  const auto it = obj.find("label");
  if (it == obj.end()) throw DataError("missing field 'label'");
  if (it->is_boolean()) {
    post.label = it->get<bool>() ? 1 : 0;
  } else if (it->is_number_integer() &&
             (it->get<int64_t>() == 0 || it->get<int64_t>() == 1)) {
    post.label = static_cast<int>(it->get<int64_t>());
  } else {
    throw DataError("field 'label' must be 0 or 1");
  }
  return post;
}

IngestResult<LabeledPost> ingest_labeled(std::istream& in, MalformedPolicy policy) {
  std::unordered_set<std::string> ids;
  return ingest_lines<LabeledPost>(
      in, policy, [](std::string_view line) { return parse_labeled(line); },
      [&ids](const LabeledPost& p) {
        if (!ids.insert(p.post_id).second) {
          throw DataError("duplicate post id '" + p.post_id + "'");
        }
      });
}

void write_labeled_jsonl(std::ostream& out, std::span<const LabeledPost> posts) {
  for (const LabeledPost& p : posts) {
    out << json{{"id", p.post_id}, {"text", p.text}, {"label", p.label}}.dump()
        << '\n';
  }
}

void write_users_jsonl(std::ostream& out, std::span<const UserRecord> users) {
  for (const UserRecord& u : users) {
    out << json{{"id", u.user_id},
                {"bio", u.bio},
                {"tweets", u.n_tweets},
                {"likes", u.n_likes},
                {"followers", u.n_followers},
                {"followees", u.n_followees},
                {"created_at", text::format_timestamp(u.created_at)}}
               .dump()
        << '\n';
  }
}

void write_posts_jsonl(std::ostream& out, std::span<const Post> posts) {
  for (const Post& p : posts) {
    json obj = {{"id", p.post_id},
                {"author_id", p.author_id},
                {"created_at", text::format_timestamp(p.timestamp)},
                {"text", p.text},
                {"hashtags", p.hashtags}};
    if (p.is_repost) obj["is_repost"] = true;
    out << obj.dump() << '\n';
  }
}

std::vector<std::pair<std::string, size_t>> top_cooccurring_hashtags(
    std::span<const Post> posts, const std::set<std::string>& seeds, size_t k) {
  if (k == 0) return {};
  std::unordered_map<std::string, size_t> counts;
  for (const Post& post : posts) {
    const bool has_seed =
        std::any_of(post.hashtags.begin(), post.hashtags.end(),
                    [&](const std::string& h) { return seeds.count(h) > 0; });
    if (!has_seed) continue;
    // Post hashtags are deduplicated, so each post counts once per tag.
    for (const std::string& h : post.hashtags) {
      if (seeds.count(h) == 0) ++counts[h];
    }
  }
  std::vector<std::pair<std::string, size_t>> ranked(counts.begin(),
                                                     counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

BioMatcher::BioMatcher(const std::vector<std::string>& keyword_patterns,
                       const std::vector<std::string>& emoji_sequences) {
  for (const std::string& p : keyword_patterns) {
    try {
      patterns_.emplace_back("\\b(?:" + p + ")\\b",
                             std::regex::ECMAScript | std::regex::icase |
                                 std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw ConfigError("invalid bio pattern '" + p + "': " + e.what());
    }
  }
  for (const std::string& e : emoji_sequences) {
    std::string seq = text::parse_code_point_notation(e);
    if (!seq.empty()) emoji_.push_back(std::move(seq));
  }
}

bool BioMatcher::matches(std::string_view bio) const {
  if (bio.empty()) return false;
  for (const std::string& e : emoji_) {
    if (bio.find(e) != std::string_view::npos) return true;
  }
  for (const std::regex& re : patterns_) {
    if (std::regex_search(bio.begin(), bio.end(), re)) return true;
  }
  return false;
}

std::optional<std::string> filter_reason(const UserRecord& user,
                                         const FilterThresholds& t) {
  if (user.n_followers > t.max_follow) return "followers>" + std::to_string(t.max_follow);
  if (user.n_followees > t.max_follow) return "followees>" + std::to_string(t.max_follow);
  if (user.n_tweets < t.min_tweets) return "tweets<" + std::to_string(t.min_tweets);
  if (user.n_tweets > t.max_tweets) return "tweets>" + std::to_string(t.max_tweets);
  return std::nullopt;
}

std::vector<UserRecord> filter_users(std::span<const UserRecord> users,
                                     const FilterThresholds& thresholds) {
  if (thresholds.max_follow <= 0 || thresholds.min_tweets <= 0 ||
      thresholds.max_tweets <= 0) {
    throw ConfigError("filter thresholds must be positive");
  }
  std::vector<UserRecord> kept;
  for (const UserRecord& u : users) {
    if (!filter_reason(u, thresholds)) kept.push_back(u);
  }
  return kept;
}

std::map<std::string, Timeline> build_timelines(std::vector<Post> posts) {
  std::map<std::string, Timeline> timelines;
  for (Post& p : posts) {
    Timeline& t = timelines[p.author_id];
    t.user_id = p.author_id;
    t.posts.push_back(std::move(p));
  }
  for (auto& [id, t] : timelines) {
    std::sort(t.posts.begin(), t.posts.end(), [](const Post& a, const Post& b) {
      if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
      return a.post_id < b.post_id;
    });
  }
  return timelines;
}

WindowSplit split_window(const Timeline& timeline, const StudyWindows& windows) {
  WindowSplit split;
  split.pre.user_id = timeline.user_id;
  split.during.user_id = timeline.user_id;
  for (const Post& p : timeline.posts) {
    if (p.timestamp >= windows.study_start && p.timestamp < windows.boundary) {
      split.pre.posts.push_back(p);
    } else if (p.timestamp >= windows.boundary &&
               p.timestamp < windows.study_end) {
      split.during.posts.push_back(p);
    } else {
      ++split.dropped;
    }
  }
  return split;
}

void write_id_list(std::ostream& out, const std::set<std::string>& ids) {
  for (const std::string& id : ids) out << id << '\n';
}

std::set<std::string> read_id_list(std::istream& in) {
  std::set<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    std::string id = text::trim(line);
    if (!id.empty()) ids.insert(std::move(id));
  }
  return ids;
}

}  // namespace mstress::corpus
