// Copyright 2026 The pedwatch Authors
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

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pedwatch/core.hpp"
#include "pedwatch/error.hpp"
#include "pedwatch/geometry.hpp"
#include "pedwatch/random.hpp"
#include "pedwatch/time.hpp"

using namespace pedwatch;

TEST_SUITE("core") {

TEST_CASE("rfc3339 parses against known epoch seconds") {
  // Reference values computed with Python's datetime.
  CHECK(parse_rfc3339("2024-06-02T08:00:00-04:00") == 1717329600.0);
  CHECK(parse_rfc3339("2024-06-02T12:00:00Z") == 1717329600.0);
  CHECK(parse_rfc3339("2000-02-29T23:59:59+05:30") == 951848999.0);
  CHECK(parse_rfc3339("1970-01-01T00:00:00Z") == 0.0);
  CHECK(parse_rfc3339("2100-03-01T00:00:00Z") == 4107542400.0);
  CHECK(parse_rfc3339("2024-06-02 12:00:00.250Z") == doctest::Approx(1717329600.25));
}

TEST_CASE("rfc3339 rejects malformed text") {
  for (const char* bad : {"", "2024-06-02", "2024-13-02T00:00:00Z", "2024-06-02T25:00:00Z",
                          "2024-06-02T12:00:00", "2024-02-30T00:00:00Z", "2023-02-29T00:00:00Z", "yesterday"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_rfc3339(bad), Error);
  }
}

TEST_CASE("rfc3339 round trip") {
  for (int offset : {0, -240, 330, -600}) {
    for (Timestamp t : {0.0, 1717329600.0, 1717329600.5, 951848999.0, 4107542400.0}) {
      CAPTURE(offset);
      CAPTURE(t);
      CHECK(std::abs(parse_rfc3339(format_rfc3339(t, offset)) - t) < 1e-3);
    }
  }
  CHECK(format_rfc3339(1717329600.0, -240) == "2024-06-02T08:00:00-04:00");
  CHECK(format_rfc3339(1717329600.0, 0) == "2024-06-02T12:00:00Z");
}

TEST_CASE("civil conversions and local clock helpers") {
  const auto c = to_civil(1717329600.0, -240);
  CHECK(c.year == 2024);
  CHECK(c.month == 6);
  CHECK(c.day == 2);
  CHECK(c.hour == 8);
  CHECK(from_civil(c, -240) == 1717329600.0);
  CHECK(parse_clock_minutes("20:15") == 1215);
  CHECK(format_clock_minutes(390) == "06:30");
  CHECK(parse_clock_minutes("24:00") == 1440);
  CHECK_THROWS_AS(parse_clock_minutes("24:01"), Error);
  CHECK_THROWS_AS(parse_clock_minutes("7:30"), Error);
  CHECK(parse_utc_offset("-04:00") == -240);
  CHECK(format_utc_offset(330) == "+05:30");
  CHECK(local_minute_of_day(1717329600.0 + 90.0, -240) == doctest::Approx(481.5));
  CHECK(floor_to_interval(1717329600.0 + 3599.0, 3600.0, -240) == 1717329600.0);
  // Half-hour offset: local hours do not align with UTC hours.
  const Timestamp ist = parse_rfc3339("2024-06-02T10:00:00+05:30");
  CHECK(floor_to_interval(ist + 1800.0, 3600.0, 330) == ist);
}

TEST_CASE("point in polygon on the unit square") {
  const Polygon sq = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(point_in_polygon({0.5, 0.5}, sq));
  CHECK(point_in_polygon({1.0, 0.5}, sq));
  CHECK(point_in_polygon({0.0, 0.0}, sq));
  CHECK(point_in_polygon({1.0, 1.0}, sq));
  CHECK_FALSE(point_in_polygon({1.0 + 1e-9, 0.5}, sq));
  CHECK_FALSE(point_in_polygon({-0.5, 0.5}, sq));
  CHECK_THROWS_AS(point_in_polygon({0, 0}, Polygon{{0, 0}, {1, 0}}), Error);
}

TEST_CASE("point in polygon matches rasterized membership of an L shape") {
  // L = [0,2]x[0,1] union [0,1]x[0,2], closed. Grid step 1/1024 (about 1e-3)
  // is exact in binary, so boundary cells are tested exactly.
  const Polygon L = {{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
  auto oracle = [](double x, double y) {
    const bool r1 = x >= 0 && x <= 2 && y >= 0 && y <= 1;
    const bool r2 = x >= 0 && x <= 1 && y >= 0 && y <= 2;
    return r1 || r2;
  };
  const double step = 1.0 / 1024.0;
  std::int64_t mismatches = 0, inside = 0;
  for (int i = -40; i <= 2 * 1024 + 40; ++i) {
    for (int j = -40; j <= 2 * 1024 + 40; j += 3) {
      const double x = i * step, y = j * step;
      const bool want = oracle(x, y);
      inside += want;
      if (point_in_polygon({x, y}, L) != want) ++mismatches;
    }
  }
  CHECK(inside > 0);
  CHECK(mismatches == 0);
}

TEST_CASE("point in polygon is invariant under vertex rotation and reversal") {
  Rng rng(5);
  Polygon poly = {{0, 0}, {4, 0}, {4, 3}, {2, 1}, {0, 3}};
  for (int k = 0; k < 2000; ++k) {
    const Point2 p{rng.uniform(-1, 5), rng.uniform(-1, 4)};
    const bool base = point_in_polygon(p, poly);
    Polygon rotated(poly.begin() + 2, poly.end());
    rotated.insert(rotated.end(), poly.begin(), poly.begin() + 2);
    Polygon reversed(poly.rbegin(), poly.rend());
    CHECK(point_in_polygon(p, rotated) == base);
    CHECK(point_in_polygon(p, reversed) == base);
  }
}

TEST_CASE("homography identity, scale and inverse round trip") {
  const Homography id = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  const Point2 p = apply_homography(id, {12.5, -3.0});
  CHECK(p.x == 12.5);
  CHECK(p.y == -3.0);

  const Homography scale = {0.05, 0, 0, 0, 0.05, 0, 0, 0, 1};
  const Point2 q = apply_homography(scale, {200, 100});
  CHECK(q.x == doctest::Approx(10.0));
  CHECK(q.y == doctest::Approx(5.0));

  Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    Homography h = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    for (auto& v : h) v += rng.uniform(-0.2, 0.2);
    h[6] *= 1e-3;
    h[7] *= 1e-3;
    const auto inv = invert_homography(h);
    const Point2 src{rng.uniform(0, 100), rng.uniform(0, 100)};
    const Point2 back = apply_homography(inv, apply_homography(h, src));
    CHECK(std::abs(back.x - src.x) < 1e-9);
    CHECK(std::abs(back.y - src.y) < 1e-9);
  }
  CHECK_THROWS_AS(invert_homography({1, 2, 3, 2, 4, 6, 0, 0, 1}), Error);
}

TEST_CASE("headings") {
  CHECK(normalize_heading(1, 0) == 0.0);
  CHECK(normalize_heading(0, 1) == doctest::Approx(std::numbers::pi / 2));
  CHECK(normalize_heading(-1, -1) == doctest::Approx(5 * std::numbers::pi / 4));
  CHECK_THROWS_AS(normalize_heading(0, 0), Error);
  Rng rng(2);
  for (int k = 0; k < 1000; ++k) {
    const double h = normalize_heading(rng.uniform(-1, 1), rng.uniform(-1, 1));
    CHECK(h >= 0.0);
    CHECK(h < 2 * std::numbers::pi);
    const double w = wrap_angle(rng.uniform(-20, 20));
    CHECK(w > -std::numbers::pi);
    CHECK(w <= std::numbers::pi);
  }
}

TEST_CASE("polygon validation") {
  CHECK(is_simple_polygon(Polygon{{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
  CHECK_FALSE(is_simple_polygon(Polygon{{0, 0}, {1, 1}, {1, 0}, {0, 1}}));  // bow tie
  const auto s = segment_intersection({0, 0}, {2, 0}, {1, -1}, {1, 1});
  REQUIRE(s);
  CHECK(*s == doctest::Approx(0.5));
  CHECK_FALSE(segment_intersection({0, 0}, {0.5, 0}, {1, -1}, {1, 1}));
}

TEST_CASE("severity bands") {
  CHECK(classify_severity(1.2) == Severity::Serious);
  CHECK(classify_severity(1.5) == Severity::Slight);
  CHECK(classify_severity(3.0) == Severity::Slight);
  CHECK(classify_severity(std::nextafter(3.0, 4.0)) == Severity::None);
  CHECK(classify_severity(std::nextafter(1.5, 0.0)) == Severity::Serious);
  CHECK(classify_severity(4.0) == Severity::None);
}

TEST_CASE("severity is monotone over (0, 10]") {
  int prev_rank = 0;
  for (int i = 1; i <= 10000; ++i) {
    const double t = i * 1e-3;
    const Severity s = classify_severity(t);
    const int rank = s == Severity::Serious ? 0 : s == Severity::Slight ? 1 : 2;
    CHECK(rank >= prev_rank);
    const Severity want = t < 1.5 ? Severity::Serious : (t <= 3.0 ? Severity::Slight : Severity::None);
    CHECK(s == want);
    prev_rank = rank;
  }
}

TEST_CASE("track append enforces strictly increasing time and frame") {
  Track t("p1", AgentClass::Pedestrian);
  t.append({0.0, {0, 0}, 0});
  t.append({0.05, {0, 0}, 1});
  CHECK_THROWS_AS(t.append({0.05, {0, 0}, 2}), Error);
  CHECK_THROWS_AS(t.append({0.10, {0, 0}, 1}), Error);
  CHECK(t.points().size() == 2);
}

TEST_CASE("rng draws are reproducible and in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next() == b.next());
  Rng r(1);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.005);
  std::int64_t total = 0;
  for (int i = 0; i < 20000; ++i) total += r.poisson(15.0);
  CHECK(std::abs(static_cast<double>(total) / 20000 - 15.0) < 0.15);
  std::int64_t runs = 0;
  for (int i = 0; i < 20000; ++i) runs += r.geometric_length(10.0);
  CHECK(std::abs(static_cast<double>(runs) / 20000 - 10.0) < 0.3);
  for (int i = 0; i < 1000; ++i) CHECK(r.below(7) < 7u);
}

}  // TEST_SUITE
