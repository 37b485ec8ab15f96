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

#include <chrono>
#include <fstream>

#include "fixtures.hpp"
#include "pedwatch/error.hpp"
#include "pedwatch/geometry.hpp"
#include "pedwatch/ingest.hpp"
#include "pedwatch/monitor.hpp"
#include "pedwatch/simulator.hpp"

using namespace pedwatch;

namespace {

ScenarioConfig base_config() {
  ScenarioConfig c;
  c.start = pwtest::local_hour(9);
  c.utc_offset_minutes = pwtest::kOrlandoOffset;
  c.fps = 10;
  return c;
}

// Independent walk-window check straight from the phase list.
bool in_any_window(const std::vector<PhaseWindow>& phases, const std::string& cw, Timestamp t) {
  for (const auto& w : phases) {
    if (w.crosswalk == cw && t >= w.walk_start && t <= w.walk_end) return true;
  }
  return false;
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("zero violation probability at 15 per hour yields no violations") {
  auto c = base_config();
  c.pedestrian_rate = {{"A", 15}};
  c.seed = 7;
  const auto sc = generate_scenario(c);
  REQUIRE(sc.truth.hours.size() == 1);
  CHECK(sc.truth.hours[0].violations == 0);
  CHECK(sc.truth.hours[0].pedestrians == static_cast<std::int64_t>(sc.truth.crossings.size()));
  // The Poisson count for seed 7, read back from the truth and reproduced by the monitor.
  Monitor m(sc.geometry, PhaseSchedule(sc.phases));
  std::size_t detected = 0;
  for (const auto& f : sc.frames) detected += m.process(f).crossings.size();
  CHECK(detected == sc.truth.crossings.size());
  CHECK(detected > 5);
  CHECK(detected < 30);
}

TEST_CASE("a zero-length run is empty") {
  auto c = base_config();
  c.duration_hours = 0;
  c.pedestrian_rate = {{"A", 15}};
  const auto sc = generate_scenario(c);
  CHECK(sc.frames.empty());
  CHECK(sc.truth.crossings.empty());
  CHECK(sc.truth.hours.empty());
}

TEST_CASE("the same seed gives identical output and another seed does not") {
  auto c = base_config();
  c.pedestrian_rate = {{"A", 40}, {"B", 30}};
  c.violation_probability = 0.3;
  c.conflicts = {{0, 1.0}};
  const auto a = generate_scenario(c);
  const auto b = generate_scenario(c);
  CHECK(a.frames == b.frames);
  CHECK(truth_to_json_lines(a.truth, 0) == truth_to_json_lines(b.truth, 0));
  c.seed = 2;
  const auto d = generate_scenario(c);
  CHECK_FALSE(a.frames == d.frames);
}

TEST_CASE("ground-truth labels agree with the phase list and the clock") {
  auto c = base_config();
  c.start = pwtest::local_hour(19);
  c.duration_hours = 3;
  c.pedestrian_rate = {{"A", 50}, {"B", 50}};
  c.violation_probability = 0.4;
  const auto sc = generate_scenario(c);
  REQUIRE(sc.truth.crossings.size() > 100);
  int day = 0, night = 0;
  for (const auto& t : sc.truth.crossings) {
    CHECK(t.violation == !in_any_window(sc.phases, t.crosswalk, t.t_enter));
    const double minute = local_minute_of_day(t.t_enter, c.utc_offset_minutes);
    CHECK(t.daytime == (minute >= c.sunrise_minutes && minute < c.sunset_minutes));
    (t.daytime ? day : night)++;
  }
  CHECK(day > 0);
  CHECK(night > 0);
  std::int64_t sum = 0;
  for (const auto& h : sc.truth.hours) sum += h.pedestrians;
  CHECK(sum == static_cast<std::int64_t>(sc.truth.crossings.size()));
}

TEST_CASE("hourly truth weather follows the configured rain") {
  auto c = base_config();
  c.duration_hours = 4;
  c.rain_mm_h = {0, 1.2, 5, 9};
  const auto sc = generate_scenario(c);
  REQUIRE(sc.truth.hours.size() == 4);
  CHECK(sc.truth.hours[0].weather == RainClass::None);
  CHECK(sc.truth.hours[1].weather == RainClass::Light);
  CHECK(sc.truth.hours[2].weather == RainClass::Moderate);
  CHECK(sc.truth.hours[3].weather == RainClass::Heavy);
}

TEST_CASE("injected conflicts reproduce their target analytically") {
  auto c = base_config();
  c.duration_hours = 2;
  c.pedestrian_rate = {{"A", 20}, {"B", 20}};
  c.conflicts = {{0, 1.2}, {1, 2.5}, {1, 0.8}};
  const auto sc = generate_scenario(c);
  REQUIRE(sc.truth.conflicts.size() == 3);
  for (const auto& t : sc.truth.conflicts) {
    const auto ttc = compute_ttc(t.ped_at_min, t.veh_at_min);
    REQUIRE(ttc);
    CHECK(std::abs(*ttc - t.min_ttc) < 1e-9);
  }
  CHECK(sc.truth.hours[0].conflicts == 1);
  CHECK(sc.truth.hours[1].conflicts == 2);
}

TEST_CASE("an infeasible injection is a config error naming the entry") {
  auto c = base_config();
  c.conflicts = {{0, 1.0}, {0, 20.0}};
  try {
    generate_scenario(c);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
    CHECK(std::string(e.what()).find("conflict #1") != std::string::npos);
  }
}

TEST_CASE("config validation") {
  auto c = base_config();
  c.start += 60;
  CHECK_THROWS_AS(generate_scenario(c), Error);
  c = base_config();
  c.pedestrian_rate = {{"Q", 10}};
  CHECK_THROWS_AS(generate_scenario(c), Error);
  c = base_config();
  c.duration_hours = 1.5;
  CHECK_THROWS_AS(generate_scenario(c), Error);
  c = base_config();
  c.violation_probability = 1.5;
  CHECK_THROWS_AS(generate_scenario(c), Error);
}

TEST_CASE("scenario files parse") {
  const auto j = nlohmann::json::parse(R"({
    "start": "2024-06-02T09:00:00-04:00", "utc_offset": "-04:00", "duration_hours": 2,
    "pedestrian_rate": {"A": 12, "B": 4}, "conflicts": [{"hour": 1, "min_ttc": 1.1}],
    "rain_mm_h": [0, 3], "dry_weather_phrase": "during no raining", "seed": 5,
    "signal": {"cycle_s": 100, "walk_s": 25}})");
  const auto c = scenario_from_json(j);
  CHECK(c.start == pwtest::local_hour(9));
  CHECK(c.pedestrian_rate.at("B") == 4);
  CHECK(c.conflicts.at(0).min_ttc == 1.1);
  CHECK(c.dry_phrase == DryPhrase::NoRaining);
  CHECK(c.signal.cycle_s == 100);
  CHECK(c.seed == 5);
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(R"({"start": "soon"})")), Error);
}

TEST_CASE("occlusion drops the requested fraction") {
  auto c = base_config();
  c.pedestrian_rate = {{"A", 40}, {"B", 40}};
  const auto sc = generate_scenario(c);
  std::size_t total = 0;
  for (const auto& f : sc.frames) total += f.detections.size();
  REQUIRE(total >= 10000);

  CHECK(inject_occlusion(sc.frames, 0.0, 10, 3) == sc.frames);

  const auto noisy = inject_occlusion(sc.frames, 0.2, 10, 3);
  std::size_t kept = 0;
  for (const auto& f : noisy) kept += f.detections.size();
  const double dropped = 1.0 - static_cast<double>(kept) / static_cast<double>(total);
  CHECK(std::abs(dropped - 0.2) <= 0.02);
  CHECK(noisy.size() == sc.frames.size());
  CHECK(inject_occlusion(sc.frames, 0.2, 10, 3) == noisy);

  const auto blind = inject_occlusion(sc.frames, 0.999, 500, 3);
  std::size_t left = 0;
  for (const auto& f : blind) left += f.detections.size();
  CHECK(static_cast<double>(left) < 0.05 * static_cast<double>(total));
}

TEST_CASE("replay paces frames at fps times the speed factor") {
  std::vector<FrameDetections> frames;
  for (int k = 0; k < 100; ++k) frames.push_back({k, k / 20.0, {}});
  using clock = std::chrono::steady_clock;
  auto span_of = [&](std::optional<double> factor) {
    const auto t0 = clock::now();
    int n = 0;
    std::int64_t last = -1;
    bool ordered = true;
    replay(frames, 20.0, factor, [&](const FrameDetections& f) {
      ordered = ordered && f.frame > last;
      last = f.frame;
      ++n;
    });
    CHECK(n == 100);
    CHECK(ordered);
    return std::chrono::duration<double>(clock::now() - t0).count();
  };
  // 100 frames at 20 FPS: the last frame is due 4.95 s after the first.
  CHECK(std::abs(span_of(1.0) - 5.0) <= 0.05 * 5.0);
  CHECK(std::abs(span_of(10.0) - 0.5) <= 0.10 * 0.5);
  CHECK(span_of(std::nullopt) < 0.5);
}

TEST_CASE("written scenarios read back through the ingest formats") {
  auto c = base_config();
  c.pedestrian_rate = {{"A", 20}, {"B", 10}};
  c.homography = Homography{0.05, 0, -40, 0, -0.05, 30, 0, 0, 1};
  const auto sc = generate_scenario(c);
  const auto dir = pwtest::temp_dir("sim-write");
  write_scenario(sc, dir);
  for (const char* f : {"geometry.json", "tracks.jsonl", "phases.jsonl", "weather.jsonl", "truth.jsonl", "pipeline.json"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  const auto g = load_geometry(dir / "geometry.json");
  REQUIRE(g.homography);
  std::ifstream tracks(dir / "tracks.jsonl");
  const auto frames = parse_track_stream(tracks, sc.epoch, g.homography);
  REQUIRE(frames.size() == sc.frames.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    for (std::size_t k = 0; k < frames[i].detections.size(); ++k) {
      worst = std::max(worst, distance(frames[i].detections[k].pos, sc.frames[i].detections[k].pos));
    }
  }
  CHECK(worst < 1e-6);
  std::ifstream phases(dir / "phases.jsonl");
  CHECK(parse_phase_feed(phases, g).windows.size() == merge_phase_windows(sc.phases).size());
}

}  // TEST_SUITE
