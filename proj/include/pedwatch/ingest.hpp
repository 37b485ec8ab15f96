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
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pedwatch/core.hpp"

namespace pedwatch {

struct Detection {
  std::string agent_id;
  AgentClass agent_class = AgentClass::Pedestrian;
  Point2 pos;  // meters after parsing

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// One tracker output frame. `t` is absolute (stream epoch already added).
struct FrameDetections {
  std::int64_t frame = 0;
  Timestamp t = 0.0;
  std::vector<Detection> detections;

  friend bool operator==(const FrameDetections&, const FrameDetections&) = default;
};

struct RecordError {
  std::size_t line = 0;
  std::string message;
};

/// Line-at-a-time track stream decoder. Malformed records are skipped and
/// logged; a frame index going backwards throws Error(StreamOrder).
class TrackStreamParser {
 public:
  TrackStreamParser(Timestamp stream_epoch, std::optional<Homography> homography);

  std::optional<FrameDetections> parse_line(std::string_view line);

  const std::vector<RecordError>& errors() const noexcept { return errors_; }
  std::size_t lines_read() const noexcept { return line_no_; }

 private:
  Timestamp epoch_;
  std::optional<Homography> homography_;
  std::vector<RecordError> errors_;
  std::size_t line_no_ = 0;
  std::optional<std::int64_t> last_frame_;
};

std::vector<FrameDetections> parse_track_stream(std::istream& in, Timestamp stream_epoch,
                                                const std::optional<Homography>& homography,
                                                std::vector<RecordError>* errors = nullptr);

/// Encodes a frame as one track-stream line, `t` relative to the epoch.
std::string encode_track_record(const FrameDetections& frame, Timestamp stream_epoch);

/// 0 -> None, (0, 2.5] -> Light, (2.5, 7.6] -> Moderate, above -> Heavy.
RainClass classify_rain(double rain_mm_h);

inline constexpr double kLightRainMax = 2.5;
inline constexpr double kModerateRainMax = 7.6;

struct PhaseFeed {
  std::vector<PhaseWindow> windows;  // grouped by crosswalk, sorted by walk_start, disjoint
  std::vector<RecordError> errors;
};

/// Labels not present in `geometry` are rejected per record.
PhaseFeed parse_phase_feed(std::istream& in, const IntersectionGeometry& geometry);

/// Sort and union overlapping (or touching) windows per crosswalk.
std::vector<PhaseWindow> merge_phase_windows(std::vector<PhaseWindow> windows);

std::string encode_phase_record(const PhaseWindow& w, int utc_offset_minutes);

/// Lookup of walk windows per crosswalk.
class PhaseSchedule {
 public:
  PhaseSchedule() = default;
  explicit PhaseSchedule(std::vector<PhaseWindow> windows);

  void add(const PhaseWindow& w);

  /// True when t lies within [walk_start, walk_end] of some window.
  bool in_walk(std::string_view crosswalk, Timestamp t) const;

  std::vector<PhaseWindow> windows() const;

 private:
  std::map<std::string, std::vector<PhaseWindow>, std::less<>> by_crosswalk_;
};

// ---- weather --------------------------------------------------------------

WeatherSample weather_from_json(const nlohmann::json& j);
nlohmann::json weather_to_json(const WeatherSample& s, int utc_offset_minutes);

class WeatherSource {
 public:
  virtual ~WeatherSource() = default;

  /// Current conditions as of t. Throws Error(Unavailable) on failure.
  virtual WeatherSample fetch(Timestamp t) = 0;
};

/// Line-delimited samples; returns the latest sample at or before t.
class FileWeatherSource final : public WeatherSource {
 public:
  explicit FileWeatherSource(const std::filesystem::path& path);
  explicit FileWeatherSource(std::vector<WeatherSample> samples);

  WeatherSample fetch(Timestamp t) override;

 private:
  std::vector<WeatherSample> samples_;
};

/// Current-conditions REST query. The key comes from WEATHER_API_KEY and is
/// sent as the `key_param` query parameter.
class HttpWeatherSource final : public WeatherSource {
 public:
  HttpWeatherSource(std::string url, std::string key_param = "appid", double timeout_s = 10.0);

  WeatherSample fetch(Timestamp t) override;

 private:
  std::string url_;
  std::string key_param_;
  double timeout_s_;
};

/// Falls back to the last good sample (flagged stale) when the source fails.
/// Samples older than `max_staleness_s` are treated as unavailable.
class WeatherClient {
 public:
  explicit WeatherClient(std::shared_ptr<WeatherSource> source, double max_staleness_s = 3600.0);

  WeatherSample fetch(Timestamp t);

  std::optional<WeatherSample> cached() const;

 private:
  std::shared_ptr<WeatherSource> source_;
  double max_staleness_s_;
  mutable std::mutex mu_;
  std::optional<WeatherSample> cache_;
};

// ---- geometry config ------------------------------------------------------

IntersectionGeometry geometry_from_json(const nlohmann::json& j);
nlohmann::json geometry_to_json(const IntersectionGeometry& g);
IntersectionGeometry load_geometry(const std::filesystem::path& path);

}  // namespace pedwatch
