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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pedwatch/core.hpp"
#include "pedwatch/ingest.hpp"
#include "pedwatch/monitor.hpp"

namespace pedwatch {

struct ConflictInjection {
  int hour = 0;
  double min_ttc = 1.2;
};

struct SignalCycle {
  double cycle_s = 90.0;
  double walk_s = 20.0;
};

/// Synthetic scenario over the canonical four-leg layout: crosswalk A spans
/// the south leg, crosswalk B the east leg, and right-turning vehicles go
/// northbound -> eastbound across B.
struct ScenarioConfig {
  std::string intersection_id = "sim-001";
  std::string location_label = "Central Florida Blvd and N Alafaya Trail, Orlando, FL";
  Timestamp start = 0.0;  // must sit on a local hour boundary
  int utc_offset_minutes = 0;
  int sunrise_minutes = 6 * 60 + 30;
  int sunset_minutes = 20 * 60 + 15;
  DryPhrase dry_phrase = DryPhrase::ClearWeather;
  std::optional<Homography> homography;  // set: the stream carries pixels

  double duration_hours = 1.0;
  double fps = 20.0;
  std::map<std::string, double> pedestrian_rate;  // per crosswalk per hour
  double violation_probability = 0.0;
  std::map<RainClass, double> rain_violation_multiplier = {
      {RainClass::None, 1.0}, {RainClass::Light, 1.5}, {RainClass::Moderate, 2.0}, {RainClass::Heavy, 3.0}};
  double right_turn_vehicles_per_hour = 20.0;
  double through_vehicles_per_hour = 30.0;
  std::vector<ConflictInjection> conflicts;
  std::vector<double> rain_mm_h;  // per hour; missing hours are dry
  double weather_interval_s = 300.0;
  SignalCycle signal;
  std::uint64_t seed = 1;

  /// Throws Error(Config) for out-of-range values.
  void validate() const;
};

ScenarioConfig scenario_from_json(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// The layout every scenario is generated over.
IntersectionGeometry canonical_geometry(const ScenarioConfig& config);

struct TruthCrossing {
  std::string ped_id;
  std::string crosswalk;
  Timestamp t_enter = 0.0;
  Timestamp t_exit = 0.0;
  Direction direction = Direction::AtoB;
  bool violation = false;
  bool daytime = true;
};

struct TruthConflict {
  std::string ped_id;
  std::string veh_id;
  Timestamp t_min_ttc = 0.0;
  double min_ttc = 0.0;
  AgentState ped_at_min;  // exact states at the minimum, for analytic re-checks
  AgentState veh_at_min;
};

struct TruthHour {
  Timestamp hour_start = 0.0;
  std::int64_t pedestrians = 0;
  std::int64_t violations = 0;
  std::int64_t conflicts = 0;
  RainClass weather = RainClass::None;
};

struct GroundTruth {
  std::vector<TruthCrossing> crossings;
  std::vector<TruthConflict> conflicts;
  std::vector<TruthHour> hours;
};

struct Scenario {
  IntersectionGeometry geometry;
  Timestamp epoch = 0.0;
  double fps = 20.0;
  std::vector<FrameDetections> frames;  // positions in meters
  std::vector<PhaseWindow> phases;
  std::vector<WeatherSample> weather;
  GroundTruth truth;
};

/// Deterministic given the seed. Throws Error(Config) naming an infeasible
/// conflict injection.
Scenario generate_scenario(const ScenarioConfig& config);

/// Removes per-agent detection runs in bursts of geometric length with mean
/// `burst_len`, dropping about `drop_prob` of detections.
std::vector<FrameDetections> inject_occlusion(std::span<const FrameDetections> frames, double drop_prob,
                                              double burst_len, std::uint64_t seed);

/// Delivers frames to `sink` at fps * speed_factor; unthrottled when
/// speed_factor is empty.
void replay(std::span<const FrameDetections> frames, double fps, std::optional<double> speed_factor,
            const std::function<void(const FrameDetections&)>& sink);

/// Writes geometry.json, tracks.jsonl, phases.jsonl, weather.jsonl,
/// truth.jsonl and pipeline.json into `dir`.
void write_scenario(const Scenario& scenario, const std::filesystem::path& dir);

nlohmann::json truth_to_json_lines(const GroundTruth& truth, int utc_offset_minutes);

}  // namespace pedwatch
