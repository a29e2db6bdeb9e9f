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

// Low-level text and time helpers shared by the corpus and featurization
// layers. Only ASCII case folding is performed; other scripts pass through.

#ifndef MSTRESS_TEXT_H_
#define MSTRESS_TEXT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mstress::text {

inline constexpr char32_t kReplacementChar = 0xFFFD;

// Decodes one code point starting at `pos` and advances `pos`. Invalid or
// truncated sequences consume one byte and yield U+FFFD.
char32_t decode_utf8(std::string_view s, size_t& pos);

void append_utf8(std::string& out, char32_t cp);

std::vector<char32_t> to_code_points(std::string_view s);

size_t code_point_count(std::string_view s);

std::string ascii_lower(std::string_view s);

// Parses "U+1F3F3 U+FE0F" style code point lists into UTF-8; returns the
// input verbatim when it does not use that notation.
std::string parse_code_point_notation(std::string_view s);

// Code point classes used by the tokenizer.
bool is_emoji_base(char32_t cp);
bool is_emoji_modifier(char32_t cp);  // variation selectors, skin tones, tags
bool is_regional_indicator(char32_t cp);
bool is_space(char32_t cp);

// Seconds since the Unix epoch, UTC.
using UnixSeconds = int64_t;

inline constexpr int64_t kSecondsPerDay = 86400;

// Accepts RFC 3339 ("2019-01-01T00:00:00Z", fractional seconds, numeric
// offsets, a space instead of 'T', bare dates) and the legacy platform
// format "Wed Oct 10 20:19:24 +0000 2018". Returns nullopt when unparseable.
std::optional<UnixSeconds> parse_timestamp(std::string_view s);

// "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(UnixSeconds t);

std::string trim(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

// Shortest round-trip decimal representation; used for every number
// written to CSV/JSON so artifacts are byte-stable.
std::string format_double(double v);

}  // namespace mstress::text

#endif  // MSTRESS_TEXT_H_
