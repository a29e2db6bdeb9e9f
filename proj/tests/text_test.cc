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

#include "doctest.h"
#include "mstress/rng.h"

using namespace mstress::text;

TEST_CASE("utf8 decoding replaces invalid bytes") {
  const std::string s = "a\xC3\xA9\xF0\x9F\x98\x80\xFF";
  const auto cps = to_code_points(s);
  REQUIRE(cps.size() == 4);
  CHECK(cps[0] == U'a');
  CHECK(cps[1] == 0xE9);
  CHECK(cps[2] == 0x1F600);
  CHECK(cps[3] == kReplacementChar);
  CHECK(code_point_count("\xF0\x9F") == 2);  // truncated: one byte each
}

TEST_CASE("utf8 encode and decode round-trip") {
  mstress::Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    std::vector<char32_t> want;
    for (int i = 0; i < 8; ++i) {
      char32_t cp = static_cast<char32_t>(rng.range(1, 0x10FFFF));
      if (cp >= 0xD800 && cp <= 0xDFFF) cp = 0x41;
      want.push_back(cp);
      append_utf8(s, cp);
    }
    CHECK(to_code_points(s) == want);
  }
}

TEST_CASE("code point notation") {
  CHECK(parse_code_point_notation("U+1F3F3 U+FE0F U+200D U+1F308") ==
        "\xF0\x9F\x8F\xB3\xEF\xB8\x8F\xE2\x80\x8D\xF0\x9F\x8C\x88");
  CHECK(parse_code_point_notation("plain") == "plain");
}

TEST_CASE("timestamps") {
  CHECK(parse_timestamp("2019-12-01T00:00:00Z") == 1575158400);
  CHECK(parse_timestamp("2019-12-01") == 1575158400);
  CHECK(parse_timestamp("2019-12-01 01:00:00+01:00") == 1575158400);
  CHECK(parse_timestamp("2019-12-01T00:00:00.750Z") == 1575158400);
  CHECK(parse_timestamp("Sun Dec 01 00:00:00 +0000 2019") == 1575158400);
  CHECK_FALSE(parse_timestamp("yesterday"));
  CHECK_FALSE(parse_timestamp("2019-13-01T00:00:00Z"));
  CHECK(format_timestamp(1575158400) == "2019-12-01T00:00:00Z");
  mstress::Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const UnixSeconds t = rng.range(0, 4102444800);
    CHECK(parse_timestamp(format_timestamp(t)) == t);
  }
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(-0.0) == "0");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-20) == "1e-20");
  mstress::Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.range(-10, 10));
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("trim and split") {
  CHECK(trim("  a b \t") == "a b");
  CHECK(split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
  CHECK(ascii_lower("ÄbC") == "Äbc");
}

TEST_CASE("rng draws are reproducible and in range") {
  mstress::Rng a(42);
  mstress::Rng b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(a.below(7) < 7);
    const auto r = a.range(-3, 3);
    CHECK(r >= -3);
    CHECK(r <= 3);
  }
}
