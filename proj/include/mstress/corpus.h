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

// Offline dump ingestion and cohort construction: posts and user records
// from line-delimited JSON, hashtag co-occurrence ranking, bio matching,
// activity filtering, and pre/during window splits of user timelines.

#ifndef MSTRESS_CORPUS_H_
#define MSTRESS_CORPUS_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mstress/text.h"

namespace mstress::corpus {

using text::UnixSeconds;

struct Post {
  std::string post_id;
  std::string author_id;
  UnixSeconds timestamp = 0;
  std::string text;  // URLs already stripped
  std::vector<std::string> hashtags;  // lowercase, '#' removed, deduplicated
  // Reposts are kept; the flag lets callers filter them later.
  bool is_repost = false;
};

struct UserRecord {
  std::string user_id;
  std::string bio;
  int64_t n_tweets = 0;
  int64_t n_likes = 0;
  int64_t n_followers = 0;
  int64_t n_followees = 0;
  UnixSeconds created_at = 0;
};

// One annotated post for the classification study; label 1 is the
// positive class.
struct LabeledPost {
  std::string post_id;
  std::string text;  // URLs already stripped
  int label = 0;
};

enum class CohortLabel { kMinority, kControl };

const char* to_string(CohortLabel label);

struct Cohort {
  CohortLabel label = CohortLabel::kMinority;
  std::set<std::string> user_ids;
};

// Half-open windows: pre = [study_start, boundary), during =
// [boundary, study_end).
struct StudyWindows {
  UnixSeconds study_start = 0;
  UnixSeconds boundary = 0;
  UnixSeconds study_end = 0;

  // 2018-06-01 / 2019-12-01 / 2021-06-01, all 00:00:00Z.
  static StudyWindows defaults();

  // Throws ConfigError unless study_start < boundary < study_end.
  void validate() const;
};

struct Timeline {
  std::string user_id;
  std::vector<Post> posts;  // ascending by (timestamp, post_id)
};

enum class MalformedPolicy { kSkipMalformed, kFailFast };

template <typename Record>
struct IngestResult {
  std::vector<Record> records;
  size_t skipped = 0;
  std::vector<size_t> skipped_lines;  // 1-based
};

// Removes `https?://\S+` anywhere and bare `t.co/\S+` at token starts, then
// collapses the remaining whitespace to single spaces. Idempotent.
std::string strip_urls(std::string_view text);

// Tokens beginning with '#', lowercased with the leading '#'s removed,
// deduplicated in first-appearance order.
std::vector<std::string> extract_hashtags(std::string_view text);

// Parses one post object. Throws DataError describing the defect.
Post parse_post(std::string_view json_line);
UserRecord parse_user(std::string_view json_line);

// Blank lines are ignored. Under kFailFast the first malformed line throws
// DataError("line N: ..."); under kSkipMalformed it is counted and skipped.
IngestResult<Post> ingest_posts(std::istream& in, MalformedPolicy policy);

// Duplicate user ids are treated as malformed lines.
IngestResult<UserRecord> ingest_users(std::istream& in, MalformedPolicy policy);

void write_posts_jsonl(std::ostream& out, std::span<const Post> posts);
void write_users_jsonl(std::ostream& out, std::span<const UserRecord> users);

// Fields id, text and label (0/1, or a boolean). Duplicate ids are malformed.
LabeledPost parse_labeled(std::string_view json_line);
IngestResult<LabeledPost> ingest_labeled(std::istream& in, MalformedPolicy policy);
void write_labeled_jsonl(std::ostream& out, std::span<const LabeledPost> posts);

// Hashtags (excluding seeds) ranked by the number of posts that contain the
// hashtag and at least one seed. Ties are broken lexicographically.
std::vector<std::pair<std::string, size_t>> top_cooccurring_hashtags(
    std::span<const Post> posts, const std::set<std::string>& seeds, size_t k);

// Case-insensitive word-boundary keyword patterns plus exact emoji
// code point sequences.
class BioMatcher {
 public:
  BioMatcher(const std::vector<std::string>& keyword_patterns,
             const std::vector<std::string>& emoji_sequences);

  bool matches(std::string_view bio) const;

  size_t pattern_count() const { return patterns_.size(); }

 private:
  std::vector<std::regex> patterns_;
  std::vector<std::string> emoji_;
};

struct FilterThresholds {
  int64_t max_follow = 5000;
  int64_t min_tweets = 200;
  int64_t max_tweets = 30000;
};

// The first violated rule for `user`, or nullopt when it is kept.
std::optional<std::string> filter_reason(const UserRecord& user,
                                         const FilterThresholds& thresholds);

// Removes users with followers or followees above max_follow, or a tweet
// count outside [min_tweets, max_tweets]. Order preserved.
std::vector<UserRecord> filter_users(std::span<const UserRecord> users,
                                     const FilterThresholds& thresholds = {});

// Groups posts by author and sorts each timeline by (timestamp, post_id).
std::map<std::string, Timeline> build_timelines(std::vector<Post> posts);

struct WindowSplit {
  Timeline pre;
  Timeline during;
  size_t dropped = 0;  // posts outside [study_start, study_end)
};

WindowSplit split_window(const Timeline& timeline, const StudyWindows& windows);

// Cohort id files: one user id per line, sorted.
void write_id_list(std::ostream& out, const std::set<std::string>& ids);
std::set<std::string> read_id_list(std::istream& in);

}  // namespace mstress::corpus

#endif  // MSTRESS_CORPUS_H_
