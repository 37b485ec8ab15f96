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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pedwatch/time.hpp"

namespace pedwatch {

/// Ground-plane position in meters; +x east, +y north.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

using Polygon = std::vector<Point2>;

struct Segment {
  Point2 a;
  Point2 b;
};

/// Row-major 3x3 projective map from image pixels to ground meters.
using Homography = std::array<double, 9>;

enum class AgentClass { Pedestrian, Vehicle };

std::string_view to_string(AgentClass c);
std::optional<AgentClass> agent_class_from_string(std::string_view text);

struct TrackPoint {
  Timestamp t = 0.0;
  Point2 pos;
  std::int64_t frame = 0;
};

/// Time-ordered positions of one agent. Points are strictly increasing in
/// both t and frame; `append` enforces it.
class Track {
 public:
  Track(std::string agent_id, AgentClass cls);
  Track(std::string agent_id, AgentClass cls, std::vector<TrackPoint> points);

  void append(const TrackPoint& p);

  const std::string& agent_id() const noexcept { return agent_id_; }
  AgentClass agent_class() const noexcept { return class_; }
  const std::vector<TrackPoint>& points() const noexcept { return points_; }
  bool empty() const noexcept { return points_.empty(); }

  /// True when this instance continues an external id whose previous track
  /// was retired.
  bool reacquired() const noexcept { return reacquired_; }
  void mark_reacquired() noexcept { reacquired_ = true; }

 private:
  std::string agent_id_;
  AgentClass class_;
  std::vector<TrackPoint> points_;
  bool reacquired_ = false;
};

struct Kinematics {
  double speed = 0.0;    // m/s
  double heading = 0.0;  // radians in [0, 2pi)
  bool valid = false;
};

struct Crosswalk {
  std::string label;
  Polygon polygon;
  Segment side_a;
  Segment side_b;
};

/// How a dry hour is phrased in the report sentence.
enum class DryPhrase { ClearWeather, NoRaining };

struct IntersectionGeometry {
  std::string intersection_id;
  std::string location_label;
  std::vector<Crosswalk> crosswalks;
  std::vector<Polygon> conflict_zones;
  std::vector<Polygon> turn_zones;
  std::optional<Homography> homography;
  int sunrise_minutes = 6 * 60 + 30;
  int sunset_minutes = 20 * 60;
  int utc_offset_minutes = 0;
  DryPhrase dry_phrase = DryPhrase::ClearWeather;

  const Crosswalk* find_crosswalk(std::string_view label) const;

  /// Throws Error(Config) when a polygon is degenerate or self-intersecting,
  /// crosswalk labels repeat, or entry sides are not disjoint boundary edges.
  void validate() const;
};

struct PhaseWindow {
  std::string crosswalk;
  Timestamp walk_start = 0.0;
  Timestamp walk_end = 0.0;
};

enum class RainClass { None = 0, Light = 1, Moderate = 2, Heavy = 3 };

std::string_view to_string(RainClass c);
std::optional<RainClass> rain_class_from_string(std::string_view text);

struct WeatherSample {
  Timestamp t = 0.0;
  double temperature_c = 0.0;
  double humidity_pct = 0.0;
  double rain_mm_h = 0.0;
  RainClass rain_class = RainClass::None;
  bool stale = false;
};

enum class Severity { Serious, Slight, None };

std::string_view to_string(Severity s);

/// Serious below 1.5 s, Slight on [1.5, 3], None above 3 s.
Severity classify_severity(double ttc_s);

inline constexpr double kSeriousTtc = 1.5;
inline constexpr double kSlightTtc = 3.0;

struct ConflictEvent {
  std::string ped_id;
  std::string veh_id;
  Timestamp t_min_ttc = 0.0;
  double min_ttc = 0.0;
  Severity severity = Severity::None;
};

enum class Direction { AtoB, BtoA };

std::string_view to_string(Direction d);

struct CrossingEvent {
  std::string ped_id;
  std::string crosswalk;
  Timestamp t_enter = 0.0;
  Timestamp t_exit = 0.0;
  Direction direction = Direction::AtoB;
  bool violation = false;
  bool daytime = true;
};

struct CrosswalkTally {
  std::int64_t crossings = 0;
  std::int64_t violations = 0;
  std::int64_t a_to_b = 0;
  std::int64_t b_to_a = 0;

  friend bool operator==(const CrosswalkTally&, const CrosswalkTally&) = default;
};

struct DayNightTally {
  std::int64_t day_crossings = 0;
  std::int64_t night_crossings = 0;
  std::int64_t day_violations = 0;
  std::int64_t night_violations = 0;

  friend bool operator==(const DayNightTally&, const DayNightTally&) = default;
};

struct HourlyAggregate {
  std::string intersection_id;
  std::string location_label;
  int utc_offset_minutes = 0;
  Timestamp hour_start = 0.0;
  Timestamp hour_end = 0.0;
  std::optional<RainClass> weather_class;  // empty when no sample covered the hour
  std::int64_t pedestrian_count = 0;
  std::int64_t violation_count = 0;
  std::int64_t conflict_count = 0;  // Serious + Slight
  std::int64_t serious_count = 0;
  std::int64_t slight_count = 0;
  std::map<std::string, CrosswalkTally> per_crosswalk;
  DayNightTally day_night;
  bool partial = false;
  DryPhrase dry_phrase = DryPhrase::ClearWeather;

  friend bool operator==(const HourlyAggregate&, const HourlyAggregate&) = default;
};

enum class ReportSource { Template, ModelPolished };

std::string_view to_string(ReportSource s);

struct HourlyReport {
  HourlyAggregate aggregate;
  std::string text;
  ReportSource source = ReportSource::Template;
};

}  // namespace pedwatch
