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

#include <algorithm>
#include <regex>

#include "fixtures.hpp"
#include "pedwatch/error.hpp"
#include "pedwatch/random.hpp"
#include "pedwatch/reporter.hpp"

using namespace pedwatch;

namespace {

IntersectionGeometry orlando() {
  IntersectionGeometry g;
  g.intersection_id = "cfb-alafaya";
  g.location_label = pwtest::kLocation;
  g.utc_offset_minutes = pwtest::kOrlandoOffset;
  g.sunrise_minutes = 390;
  g.sunset_minutes = 1215;
  g.crosswalks.push_back({"A", {{0, 0}, {4, 0}, {4, 10}, {0, 10}}, {{0, 0}, {0, 10}}, {{4, 0}, {4, 10}}});
  g.crosswalks.push_back({"B", {{10, 0}, {14, 0}, {14, 10}, {10, 10}}, {{10, 0}, {14, 0}}, {{10, 10}, {14, 10}}});
  return g;
}

CrossingEvent crossing(const std::string& id, const std::string& cw, Timestamp t, bool violation,
                       bool day = true) {
  return {id, cw, t, t + 8.0, Direction::AtoB, violation, day};
}

WeatherSample rain(Timestamp t, RainClass c) {
  WeatherSample s;
  s.t = t;
  s.rain_class = c;
  return s;
}

HourlyAggregate random_aggregate(Rng& rng) {
  pwtest::DayRow row{static_cast<int>(rng.below(24)),
                     static_cast<RainClass>(rng.below(4)),
                     rng.bernoulli(0.5) ? DryPhrase::ClearWeather : DryPhrase::NoRaining,
                     static_cast<std::int64_t>(rng.below(500)), 0, static_cast<std::int64_t>(rng.below(40))};
  row.violations = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(row.pedestrians) + 1));
  auto a = pwtest::day_aggregate(row);
  if (rng.bernoulli(0.1)) a.weather_class.reset();
  return a;
}

}  // namespace

TEST_SUITE("reporter") {

TEST_CASE("aggregate of fifteen safe crossings in clear weather") {
  const auto g = orlando();
  const Timestamp h = pwtest::local_hour(8);
  std::vector<CrossingEvent> cs;
  for (int i = 0; i < 15; ++i) cs.push_back(crossing("p" + std::to_string(i), i % 2 ? "A" : "B", h + 100 + i, false));
  const std::vector<WeatherSample> w = {rain(h, RainClass::None)};
  const auto a = aggregate_hour(cs, {}, w, h, g);
  CHECK(a.pedestrian_count == 15);
  CHECK(a.violation_count == 0);
  CHECK(a.conflict_count == 0);
  CHECK(a.weather_class == RainClass::None);
  CHECK(a.per_crosswalk.at("A").crossings + a.per_crosswalk.at("B").crossings == 15);
  CHECK(render_report(a) == pwtest::kDayText[0]);
}

TEST_CASE("an empty hour renders zeros and keeps both crosswalks") {
  const auto a = aggregate_hour({}, {}, {}, pwtest::local_hour(22), orlando());
  CHECK(a.pedestrian_count == 0);
  CHECK(a.per_crosswalk.size() == 2);
  CHECK_FALSE(a.weather_class);
  CHECK(render_report(a).find("0 pedestrians crossed with no crossing violations and no conflicts.") !=
        std::string::npos);
}

TEST_CASE("conflict count is serious plus slight only") {
  const Timestamp h = pwtest::local_hour(9);
  const std::vector<ConflictEvent> cf = {{"p1", "v1", h + 10, 1.2, Severity::Serious},
                                         {"p2", "v2", h + 20, 2.0, Severity::Slight},
                                         {"p3", "v3", h + 30, 3.5, Severity::None}};
  const auto a = aggregate_hour({}, cf, {}, h, orlando());
  CHECK(a.conflict_count == 2);
  CHECK(a.serious_count == 1);
  CHECK(a.slight_count == 1);
}

TEST_CASE("weather: equal light and moderate minutes go to moderate") {
  const Timestamp h = pwtest::local_hour(10);
  const std::vector<WeatherSample> w = {rain(h, RainClass::Light), rain(h + 1800, RainClass::Moderate)};
  CHECK(aggregate_hour({}, {}, w, h, orlando()).weather_class == RainClass::Moderate);
  const std::vector<WeatherSample> w2 = {rain(h, RainClass::Light), rain(h + 1900, RainClass::Moderate)};
  CHECK(aggregate_hour({}, {}, w2, h, orlando()).weather_class == RainClass::Light);
}

TEST_CASE("events outside the hour are rejected") {
  const Timestamp h = pwtest::local_hour(10);
  const std::vector<CrossingEvent> late = {crossing("p", "A", h + 3600, false)};
  CHECK_THROWS_AS(aggregate_hour(late, {}, {}, h, orlando()), Error);
  const std::vector<CrossingEvent> edge = {crossing("p", "A", h, false)};
  CHECK_NOTHROW(aggregate_hour(edge, {}, {}, h, orlando()));
}

TEST_CASE("aggregation is invariant under event order") {
  Rng rng(3);
  const auto g = orlando();
  const Timestamp h = pwtest::local_hour(18);
  std::vector<CrossingEvent> cs;
  std::vector<ConflictEvent> cf;
  for (int i = 0; i < 80; ++i) {
    cs.push_back(crossing("p" + std::to_string(i), rng.bernoulli(0.5) ? "A" : "B", h + rng.uniform(0, 3599),
                          rng.bernoulli(0.3), rng.bernoulli(0.5)));
  }
  for (int i = 0; i < 10; ++i) {
    const double ttc = rng.uniform(0.1, 4.0);
    cf.push_back({"p" + std::to_string(i), "v", h + rng.uniform(0, 3599), ttc, classify_severity(ttc)});
  }
  const auto base = aggregate_hour(cs, cf, {}, h, g);
  std::int64_t sum = 0, vsum = 0;
  for (const auto& [_, t] : base.per_crosswalk) {
    sum += t.crossings;
    vsum += t.violations;
    CHECK(t.a_to_b + t.b_to_a == t.crossings);
  }
  CHECK(sum == base.pedestrian_count);
  CHECK(vsum == base.violation_count);
  CHECK(base.day_night.day_crossings + base.day_night.night_crossings == base.pedestrian_count);
  for (int k = 0; k < 20; ++k) {
    for (std::size_t i = cs.size(); i > 1; --i) std::swap(cs[i - 1], cs[rng.below(i)]);
    for (std::size_t i = cf.size(); i > 1; --i) std::swap(cf[i - 1], cf[rng.below(i)]);
    CHECK(aggregate_hour(cs, cf, {}, h, g) == base);
  }
}

TEST_CASE("every report of the fifteen-hour day renders byte-exactly") {
  for (std::size_t i = 0; i < pwtest::kDay.size(); ++i) {
    CAPTURE(i + 1);
    CHECK(render_report(pwtest::day_aggregate(pwtest::kDay[i])) == pwtest::kDayText[i]);
  }
}

TEST_CASE("weather phrases") {
  CHECK(weather_phrase(RainClass::None, DryPhrase::ClearWeather) == "clear weather");
  CHECK(weather_phrase(RainClass::None, DryPhrase::NoRaining) == "during no raining");
  CHECK(weather_phrase(RainClass::Heavy, DryPhrase::ClearWeather) == "during heavy raining");
}

TEST_CASE("missing weather omits the clause") {
  auto a = pwtest::day_aggregate(pwtest::kDay[0]);
  a.weather_class.reset();
  CHECK(render_report(a) ==
        "On June 2, 2024, between 08:00 am and 09:00 am, at Central Florida Blvd and N Alafaya Trail, "
        "Orlando, FL, 15 pedestrians crossed with no crossing violations and no conflicts.");
}

TEST_CASE("rendering is injective and the counts parse back") {
  Rng rng(31);
  std::map<std::string, HourlyAggregate> seen;
  for (int i = 0; i < 3000; ++i) {
    const auto a = random_aggregate(rng);
    const auto text = render_report(a);
    const auto counts = extract_counts(text);
    REQUIRE(counts);
    CHECK(counts->pedestrians == a.pedestrian_count);
    CHECK(counts->violations == a.violation_count);
    CHECK(counts->conflicts == a.conflict_count);
    // Distinct rendered fields must give distinct text.
    const auto ctx = make_template_context(a);
    const std::string key = ctx.date + "|" + ctx.start_clock + "|" + ctx.weather.value_or("-") + "|" +
                            std::to_string(ctx.pedestrians) + "|" + std::to_string(ctx.violations) + "|" +
                            std::to_string(ctx.conflicts);
    auto [it, fresh] = seen.emplace(text, a);
    if (!fresh) {
      const auto other = make_template_context(it->second);
      const std::string other_key = other.date + "|" + other.start_clock + "|" + other.weather.value_or("-") +
                                    "|" + std::to_string(other.pedestrians) + "|" +
                                    std::to_string(other.violations) + "|" + std::to_string(other.conflicts);
      CHECK(key == other_key);
    }
  }
}

TEST_CASE("count extraction rejects inconsistent prose") {
  CHECK_FALSE(extract_counts("12 pedestrians crossed with 3 crossing violations."));
  CHECK_FALSE(extract_counts("12 pedestrians, 3 violations, 1 conflict, then 14 pedestrians."));
  const auto c = extract_counts("Twelve? No: 12 pedestrians crossed, no violations, 1 conflict.");
  REQUIRE(c);
  CHECK(*c == ReportCounts{12, 0, 1});
}

TEST_CASE("polish keeps a faithful rewrite and falls back otherwise") {
  const auto tpl = make_template_report(pwtest::day_aggregate(pwtest::kDay[1]));

  pwtest::FakeModel echo([](const std::vector<ChatMessage>& m) { return m.back().content; });
  const auto same = polish_report(tpl, &echo);
  CHECK(same.source == ReportSource::ModelPolished);
  CHECK(same.text == tpl.text);

  pwtest::FakeModel altered([](const std::vector<ChatMessage>& m) {
    return std::regex_replace(m.back().content, std::regex("12 pedestrians"), "11 pedestrians");
  });
  const auto guarded = polish_report(tpl, &altered);
  CHECK(guarded.source == ReportSource::Template);
  CHECK(guarded.text == tpl.text);

  auto down = pwtest::down_model();
  CHECK(polish_report(tpl, down.get()).source == ReportSource::Template);
  CHECK(polish_report(tpl, nullptr).text == tpl.text);
}

TEST_CASE("polish never stores a count the aggregate does not have") {
  Rng rng(41);
  for (int i = 0; i < 300; ++i) {
    const auto tpl = make_template_report(random_aggregate(rng));
    const int mode = static_cast<int>(rng.below(4));
    pwtest::FakeModel m([&](const std::vector<ChatMessage>& msgs) {
      std::string t = msgs.back().content;
      switch (mode) {
        case 0: return t;
        case 1: return std::regex_replace(t, std::regex("(\\d+) pedestrians"), "1$1 pedestrians");
        case 2: return std::regex_replace(t, std::regex("no conflicts|\\d+ conflicts?"), "7 conflicts");
        default: return std::string("A calm hour.");
      }
    });
    const auto r = polish_report(tpl, &m);
    const auto counts = extract_counts(r.text);
    REQUIRE(counts);
    CHECK(*counts == ReportCounts{tpl.aggregate.pedestrian_count, tpl.aggregate.violation_count,
                                  tpl.aggregate.conflict_count});
  }
}

TEST_CASE("storage ratio") {
  CHECK(storage_ratio(8e6, 3600, 1e6) == 360000.0);
  CHECK(storage_ratio(8, 1, 1) == 100.0);
  CHECK_THROWS_AS(storage_ratio(8e6, 3600, 0), Error);
  CHECK_THROWS_AS(storage_ratio(-1, 3600, 10), Error);
}

TEST_CASE("report records round-trip") {
  Rng rng(43);
  for (int i = 0; i < 200; ++i) {
    auto r = make_template_report(random_aggregate(rng));
    r.aggregate.partial = rng.bernoulli(0.2);
    const auto back = report_from_json(nlohmann::json::parse(encode_report_record(r)));
    CHECK(back.aggregate == r.aggregate);
    CHECK(back.text == r.text);
    CHECK(back.source == r.source);
    CHECK(encode_report_record(back) == encode_report_record(r));
  }
  CHECK_THROWS_AS(report_from_json(nlohmann::json::parse(R"({"text": "x"})")), Error);
}

}  // TEST_SUITE
