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

#include "mstress/text.h"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>

namespace mstress::text {

char32_t decode_utf8(std::string_view s, size_t& pos) {
  const auto byte = [&](size_t i) { return static_cast<unsigned char>(s[i]); };
  const unsigned char c0 = byte(pos);
  if (c0 < 0x80) {
    ++pos;
    return c0;
  }
  int extra;
  char32_t cp;
  char32_t min_cp;
  if ((c0 & 0xE0) == 0xC0) {
    extra = 1;
    cp = c0 & 0x1F;
    min_cp = 0x80;
  } else if ((c0 & 0xF0) == 0xE0) {
    extra = 2;
    cp = c0 & 0x0F;
    min_cp = 0x800;
  } else if ((c0 & 0xF8) == 0xF0) {
    extra = 3;
    cp = c0 & 0x07;
    min_cp = 0x10000;
  } else {
    ++pos;
    return kReplacementChar;
  }
  if (pos + extra >= s.size()) {
    ++pos;
    return kReplacementChar;
  }
  for (int i = 1; i <= extra; ++i) {
    const unsigned char c = byte(pos + i);
    if ((c & 0xC0) != 0x80) {
      ++pos;
      return kReplacementChar;
    }
    cp = (cp << 6) | (c & 0x3F);
  }
  if (cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++pos;
    return kReplacementChar;
  }
  pos += extra + 1;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::vector<char32_t> to_code_points(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  size_t pos = 0;
  while (pos < s.size()) out.push_back(decode_utf8(s, pos));
  return out;
}

size_t code_point_count(std::string_view s) {
  size_t n = 0;
  size_t pos = 0;
  while (pos < s.size()) {
    decode_utf8(s, pos);
    ++n;
  }
  return n;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string parse_code_point_notation(std::string_view s) {
  const std::string t = trim(s);
  if (t.size() < 3 || !(t[0] == 'U' || t[0] == 'u') || t[1] != '+') {
    return std::string(s);
  }
  std::string out;
  size_t i = 0;
  while (i < t.size()) {
    while (i < t.size() && (t[i] == ' ' || t[i] == '\t')) ++i;
    if (i >= t.size()) break;
    if (i + 2 > t.size() || !(t[i] == 'U' || t[i] == 'u') || t[i + 1] != '+') {
      return std::string(s);
    }
    i += 2;
    uint32_t cp = 0;
    const auto [ptr, ec] =
        std::from_chars(t.data() + i, t.data() + t.size(), cp, 16);
    if (ec != std::errc() || cp > 0x10FFFF) return std::string(s);
    i = static_cast<size_t>(ptr - t.data());
    append_utf8(out, cp);
  }
  return out;
}

bool is_emoji_base(char32_t cp) {
  return (cp >= 0x1F000 && cp <= 0x1FAFF && !(cp >= 0x1F3FB && cp <= 0x1F3FF)) ||
         (cp >= 0x2600 && cp <= 0x27BF) || (cp >= 0x2B00 && cp <= 0x2BFF) ||
         (cp >= 0x2300 && cp <= 0x23FF) || cp == 0x00A9 || cp == 0x00AE ||
         cp == 0x203C || cp == 0x2049 || cp == 0x2122 || cp == 0x2139 ||
         (cp >= 0x2194 && cp <= 0x21AA) || cp == 0x3030 || cp == 0x303D;
}

bool is_emoji_modifier(char32_t cp) {
  return cp == 0xFE0F || cp == 0xFE0E || cp == 0x20E3 ||
         (cp >= 0x1F3FB && cp <= 0x1F3FF) || (cp >= 0xE0020 && cp <= 0xE007F);
}

bool is_regional_indicator(char32_t cp) { return cp >= 0x1F1E6 && cp <= 0x1F1FF; }

bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\v' ||
         cp == '\f' || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
         (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 ||
         cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::optional<UnixSeconds> civil_to_unix(int y, int mo, int d, int h, int mi,
                                         int sec) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 ||
      sec > 60) {
    return std::nullopt;
  }
  const sys_days days{ymd};
  return static_cast<UnixSeconds>(days.time_since_epoch().count()) *
             kSecondsPerDay +
         h * 3600 + mi * 60 + sec;
}

std::optional<UnixSeconds> parse_rfc3339(std::string_view s) {
  int y, mo, d;
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), mo) ||
      !parse_int(s.substr(8, 2), d)) {
    return std::nullopt;
  }
  if (s.size() == 10) return civil_to_unix(y, mo, d, 0, 0, 0);
  const char sep = s[10];
  if (sep != 'T' && sep != 't' && sep != ' ') return std::nullopt;
  std::string_view rest = s.substr(11);
  int h, mi, sec;
  if (rest.size() < 8 || rest[2] != ':' || rest[5] != ':') return std::nullopt;
  if (!parse_int(rest.substr(0, 2), h) || !parse_int(rest.substr(3, 2), mi) ||
      !parse_int(rest.substr(6, 2), sec)) {
    return std::nullopt;
  }
  rest = rest.substr(8);
  if (!rest.empty() && rest[0] == '.') {
    size_t i = 1;
    while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') ++i;
    if (i == 1) return std::nullopt;
    rest = rest.substr(i);
  }
  int offset = 0;
  if (rest == "Z" || rest == "z") {
    offset = 0;
  } else if (rest.size() == 6 && (rest[0] == '+' || rest[0] == '-') &&
             rest[3] == ':') {
    int oh, om;
    if (!parse_int(rest.substr(1, 2), oh) || !parse_int(rest.substr(4, 2), om) ||
        oh > 23 || om > 59) {
      return std::nullopt;
    }
    offset = (oh * 3600 + om * 60) * (rest[0] == '+' ? 1 : -1);
  } else {
    return std::nullopt;
  }
  const auto local = civil_to_unix(y, mo, d, h, mi, sec);
  if (!local) return std::nullopt;
  return *local - offset;
}

// "Wed Oct 10 20:19:24 +0000 2018"
std::optional<UnixSeconds> parse_legacy(std::string_view s) {
  static constexpr std::array<const char*, 12> kMonths = {
      "Jan", "Feb", "Mar", "Apr", "May", "Jun",
      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  const std::vector<std::string> parts = split(s, ' ');
  if (parts.size() != 6) return std::nullopt;
  int mo = 0;
  for (size_t i = 0; i < kMonths.size(); ++i) {
    if (parts[1] == kMonths[i]) mo = static_cast<int>(i) + 1;
  }
  int d, y, h, mi, sec;
  const std::string& clock = parts[3];
  const std::string& zone = parts[4];
  if (mo == 0 || !parse_int(parts[2], d) || !parse_int(parts[5], y) ||
      clock.size() != 8 || clock[2] != ':' || clock[5] != ':' ||
      !parse_int(std::string_view(clock).substr(0, 2), h) ||
      !parse_int(std::string_view(clock).substr(3, 2), mi) ||
      !parse_int(std::string_view(clock).substr(6, 2), sec) ||
      zone.size() != 5 || (zone[0] != '+' && zone[0] != '-')) {
    return std::nullopt;
  }
  int oh, om;
  if (!parse_int(std::string_view(zone).substr(1, 2), oh) ||
      !parse_int(std::string_view(zone).substr(3, 2), om)) {
    return std::nullopt;
  }
  const auto local = civil_to_unix(y, mo, d, h, mi, sec);
  if (!local) return std::nullopt;
  return *local - (oh * 3600 + om * 60) * (zone[0] == '+' ? 1 : -1);
}

}  // namespace

std::optional<UnixSeconds> parse_timestamp(std::string_view s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  if (t[0] >= '0' && t[0] <= '9') return parse_rfc3339(t);
  return parse_legacy(t);
}

std::string format_timestamp(UnixSeconds t) {
  using namespace std::chrono;
  int64_t days = t / kSecondsPerDay;
  int64_t rem = t % kSecondsPerDay;
  if (rem < 0) {
    rem += kSecondsPerDay;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                static_cast<int>((rem / 60) % 60), static_cast<int>(rem % 60));
  return buf;
}

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::strchr(" \t\r\n\f\v", s[b]) != nullptr) ++b;
  while (e > b && std::strchr(" \t\r\n\f\v", s[e - 1]) != nullptr) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t end = s.find(sep, start);
    if (end == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace mstress::text
