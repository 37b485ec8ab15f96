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

#include "pedwatch/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <set>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "http_util.hpp"
#include "pedwatch/error.hpp"
#include "pedwatch/geometry.hpp"

namespace pedwatch {

using nlohmann::json;

namespace detail {

SplitUrl split_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorCode::Config, "URL lacks a scheme: '" + std::string(url) + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string_view::npos) {
    return {std::string(url), "/"};
  }
  return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

}  // namespace detail

TrackStreamParser::TrackStreamParser(Timestamp stream_epoch, std::optional<Homography> homography)
    : epoch_(stream_epoch), homography_(homography) {}

std::optional<FrameDetections> TrackStreamParser::parse_line(std::string_view line) {
  ++line_no_;
  if (line.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    return std::nullopt;
  }
  auto reject = [&](const std::string& why) -> std::optional<FrameDetections> {
    errors_.push_back({line_no_, why});
    spdlog::warn("track stream line {}: {}", line_no_, why);
    return std::nullopt;
  };

  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return reject("not a JSON object");
  }
  FrameDetections out;
  try {
    if (!j.at("frame").is_number_integer() || !j.at("t").is_number()) {
      return reject("frame must be an integer and t a number");
    }
    out.frame = j.at("frame").get<std::int64_t>();
    const double t_rel = j.at("t").get<double>();
    if (out.frame < 0 || !std::isfinite(t_rel) || t_rel < 0.0) {
      return reject("negative or non-finite frame/t");
    }
    out.t = epoch_ + t_rel;
    std::set<std::string> seen;
    for (const auto& d : j.at("detections")) {
      Detection det;
      det.agent_id = d.at("id").get<std::string>();
      const auto cls = agent_class_from_string(d.at("class").get<std::string>());
      if (!cls) {
        return reject("unknown class tag '" + d.at("class").get<std::string>() + "'");
      }
      det.agent_class = *cls;
      Point2 raw{d.at("x").get<double>(), d.at("y").get<double>()};
      if (!std::isfinite(raw.x) || !std::isfinite(raw.y)) {
        return reject("non-finite position");
      }
      det.pos = homography_ ? apply_homography(*homography_, raw) : raw;
      if (!seen.insert(det.agent_id).second) {
        return reject("duplicate agent id '" + det.agent_id + "' within frame");
      }
      out.detections.push_back(std::move(det));
    }
  } catch (const json::exception& e) {
    return reject(std::string("schema mismatch: ") + e.what());
  } catch (const Error& e) {
    return reject(e.what());
  }
  if (last_frame_ && out.frame < *last_frame_) {
    throw Error(ErrorCode::StreamOrder, "frame index regressed at line " + std::to_string(line_no_) +
                                            " (" + std::to_string(out.frame) + " after " +
                                            std::to_string(*last_frame_) + ")");
  }
  last_frame_ = out.frame;
  return out;
}

std::vector<FrameDetections> parse_track_stream(std::istream& in, Timestamp stream_epoch,
                                                const std::optional<Homography>& homography,
                                                std::vector<RecordError>* errors) {
  TrackStreamParser parser(stream_epoch, homography);
  std::vector<FrameDetections> frames;
  std::string line;
  while (std::getline(in, line)) {
    if (auto f = parser.parse_line(line)) {
      frames.push_back(std::move(*f));
    }
  }
  if (errors) {
    *errors = parser.errors();
  }
  return frames;
}

std::string encode_track_record(const FrameDetections& frame, Timestamp stream_epoch) {
  json dets = json::array();
  for (const auto& d : frame.detections) {
    dets.push_back({{"id", d.agent_id},
                    {"class", std::string(to_string(d.agent_class))},
                    {"x", d.pos.x},
                    {"y", d.pos.y}});
  }
  json j = {{"frame", frame.frame}, {"t", frame.t - stream_epoch}, {"detections", std::move(dets)}};
  return j.dump();
}

RainClass classify_rain(double rain_mm_h) {
  if (!(rain_mm_h >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "rain rate must be non-negative");
  }
  if (rain_mm_h == 0.0) return RainClass::None;
  if (rain_mm_h <= kLightRainMax) return RainClass::Light;
  if (rain_mm_h <= kModerateRainMax) return RainClass::Moderate;
  return RainClass::Heavy;
}

std::vector<PhaseWindow> merge_phase_windows(std::vector<PhaseWindow> windows) {
  std::sort(windows.begin(), windows.end(), [](const PhaseWindow& a, const PhaseWindow& b) {
    if (a.crosswalk != b.crosswalk) return a.crosswalk < b.crosswalk;
    return a.walk_start < b.walk_start;
  });
  std::vector<PhaseWindow> merged;
  for (auto& w : windows) {
    if (!merged.empty() && merged.back().crosswalk == w.crosswalk &&
        w.walk_start <= merged.back().walk_end) {
      merged.back().walk_end = std::max(merged.back().walk_end, w.walk_end);
    } else {
      merged.push_back(std::move(w));
    }
  }
  return merged;
}

PhaseFeed parse_phase_feed(std::istream& in, const IntersectionGeometry& geometry) {
  PhaseFeed feed;
  std::vector<PhaseWindow> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    auto reject = [&](const std::string& why) {
      feed.errors.push_back({line_no, why});
      spdlog::warn("phase feed line {}: {}", line_no, why);
    };
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      reject("not a JSON object");
      continue;
    }
    PhaseWindow w;
    try {
      w.crosswalk = j.at("crosswalk").get<std::string>();
      w.walk_start = parse_rfc3339(j.at("walk_start").get<std::string>());
      w.walk_end = parse_rfc3339(j.at("walk_end").get<std::string>());
    } catch (const json::exception& e) {
      reject(std::string("schema mismatch: ") + e.what());
      continue;
    } catch (const Error& e) {
      reject(e.what());
      continue;
    }
    if (!geometry.find_crosswalk(w.crosswalk)) {
      reject("unknown crosswalk label '" + w.crosswalk + "'");
      continue;
    }
    if (w.walk_end <= w.walk_start) {
      reject("walk_end must be after walk_start");
      continue;
    }
    raw.push_back(std::move(w));
  }
  feed.windows = merge_phase_windows(std::move(raw));
  return feed;
}

std::string encode_phase_record(const PhaseWindow& w, int utc_offset_minutes) {
  json j = {{"crosswalk", w.crosswalk},
            {"walk_start", format_rfc3339(w.walk_start, utc_offset_minutes)},
            {"walk_end", format_rfc3339(w.walk_end, utc_offset_minutes)}};
  return j.dump();
}

PhaseSchedule::PhaseSchedule(std::vector<PhaseWindow> windows) {
  for (auto& w : merge_phase_windows(std::move(windows))) {
    by_crosswalk_[w.crosswalk].push_back(std::move(w));
  }
}

void PhaseSchedule::add(const PhaseWindow& w) {
  auto& list = by_crosswalk_[w.crosswalk];
  list.push_back(w);
  if (list.size() > 1 && list[list.size() - 2].walk_start > w.walk_start) {
    list = merge_phase_windows(std::move(list));
  } else if (list.size() > 1 && list[list.size() - 2].walk_end >= w.walk_start) {
    list[list.size() - 2].walk_end = std::max(list[list.size() - 2].walk_end, w.walk_end);
    list.pop_back();
  }
}

bool PhaseSchedule::in_walk(std::string_view crosswalk, Timestamp t) const {
  const auto it = by_crosswalk_.find(crosswalk);
  if (it == by_crosswalk_.end()) return false;
  const auto& list = it->second;
  // First window starting after t; the candidate is the one before it.
  auto after = std::upper_bound(list.begin(), list.end(), t,
                                [](Timestamp v, const PhaseWindow& w) { return v < w.walk_start; });
  if (after == list.begin()) return false;
  const auto& w = *std::prev(after);
  return t >= w.walk_start && t <= w.walk_end;
}

std::vector<PhaseWindow> PhaseSchedule::windows() const {
  std::vector<PhaseWindow> out;
  for (const auto& [_, list] : by_crosswalk_) {
    out.insert(out.end(), list.begin(), list.end());
  }
  return out;
}

// ---- weather --------------------------------------------------------------

WeatherSample weather_from_json(const json& j) {
  WeatherSample s;
  s.t = parse_rfc3339(j.at("t").get<std::string>());
  s.temperature_c = j.at("temp_c").get<double>();
  s.humidity_pct = j.at("humidity_pct").get<double>();
  s.rain_mm_h = j.at("rain_mm_h").get<double>();
  if (s.humidity_pct < 0.0 || s.humidity_pct > 100.0) {
    throw Error(ErrorCode::Parse, "humidity_pct outside [0, 100]");
  }
  s.rain_class = classify_rain(s.rain_mm_h);
  return s;
}

json weather_to_json(const WeatherSample& s, int utc_offset_minutes) {
  return {{"t", format_rfc3339(s.t, utc_offset_minutes)},
          {"temp_c", s.temperature_c},
          {"humidity_pct", s.humidity_pct},
          {"rain_mm_h", s.rain_mm_h}};
}

FileWeatherSource::FileWeatherSource(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open weather file " + path.string());
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      samples_.push_back(weather_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      spdlog::warn("weather file line {}: {}", line_no, e.what());
    }
  }
  std::stable_sort(samples_.begin(), samples_.end(),
                   [](const WeatherSample& a, const WeatherSample& b) { return a.t < b.t; });
}

FileWeatherSource::FileWeatherSource(std::vector<WeatherSample> samples) : samples_(std::move(samples)) {
  std::stable_sort(samples_.begin(), samples_.end(),
                   [](const WeatherSample& a, const WeatherSample& b) { return a.t < b.t; });
}

WeatherSample FileWeatherSource::fetch(Timestamp t) {
  auto after = std::upper_bound(samples_.begin(), samples_.end(), t,
                                [](Timestamp v, const WeatherSample& s) { return v < s.t; });
  if (after == samples_.begin()) {
    throw Error(ErrorCode::Unavailable, "no weather sample at or before requested time");
  }
  return *std::prev(after);
}

HttpWeatherSource::HttpWeatherSource(std::string url, std::string key_param, double timeout_s)
    : url_(std::move(url)), key_param_(std::move(key_param)), timeout_s_(timeout_s) {}

WeatherSample HttpWeatherSource::fetch(Timestamp t) {
  const auto parts = detail::split_url(url_);
  std::string path = parts.path;
  if (const char* key = std::getenv("WEATHER_API_KEY"); key && *key) {
    path += (path.find('?') == std::string::npos ? '?' : '&');
    path += key_param_ + "=" + httplib::detail::encode_url(key);
  }
  try {
    httplib::Client cli(parts.origin);
    const auto timeout = std::chrono::duration<double>(timeout_s_);
    cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    auto res = cli.Get(path);
    if (!res) {
      throw Error(ErrorCode::Unavailable,
                  "weather endpoint unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw Error(ErrorCode::Unavailable, "weather endpoint returned HTTP " + std::to_string(res->status));
    }
    auto sample = weather_from_json(json::parse(res->body));
    (void)t;
    return sample;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Unavailable, std::string("weather response malformed: ") + e.what());
  }
}

WeatherClient::WeatherClient(std::shared_ptr<WeatherSource> source, double max_staleness_s)
    : source_(std::move(source)), max_staleness_s_(max_staleness_s) {}

WeatherSample WeatherClient::fetch(Timestamp t) {
  try {
    WeatherSample s = source_->fetch(t);
    s.stale = false;
    std::lock_guard lock(mu_);
    cache_ = s;
    return s;
  } catch (const Error& e) {
    std::lock_guard lock(mu_);
    if (cache_ && t - cache_->t <= max_staleness_s_) {
      spdlog::warn("weather source failed ({}); using cached sample", e.what());
      WeatherSample s = *cache_;
      s.stale = true;
      return s;
    }
    throw Error(ErrorCode::Unavailable, std::string("weather unavailable: ") + e.what());
  }
}

std::optional<WeatherSample> WeatherClient::cached() const {
  std::lock_guard lock(mu_);
  return cache_;
}

// ---- geometry config ------------------------------------------------------

namespace {

Point2 point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) {
    throw Error(ErrorCode::Config, "point must be [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Polygon polygon_from_json(const json& j) {
  Polygon p;
  for (const auto& v : j) p.push_back(point_from_json(v));
  return p;
}

json polygon_to_json(const Polygon& p) {
  json out = json::array();
  for (const auto& v : p) out.push_back({v.x, v.y});
  return out;
}

Segment segment_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) {
    throw Error(ErrorCode::Config, "segment must be [[x, y], [x, y]]");
  }
  return {point_from_json(j[0]), point_from_json(j[1])};
}

}  // namespace

IntersectionGeometry geometry_from_json(const json& j) {
  IntersectionGeometry g;
  try {
    g.intersection_id = j.at("intersection_id").get<std::string>();
    g.location_label = j.at("location").get<std::string>();
    g.utc_offset_minutes = parse_utc_offset(j.value("utc_offset", std::string("Z")));
    g.sunrise_minutes = parse_clock_minutes(j.value("sunrise", std::string("06:30")));
    g.sunset_minutes = parse_clock_minutes(j.value("sunset", std::string("20:00")));
    const auto phrase = j.value("dry_weather_phrase", std::string("clear weather"));
    if (phrase == "clear weather") {
      g.dry_phrase = DryPhrase::ClearWeather;
    } else if (phrase == "during no raining") {
      g.dry_phrase = DryPhrase::NoRaining;
    } else {
      throw Error(ErrorCode::Config, "unknown dry_weather_phrase '" + phrase + "'");
    }
    if (j.contains("homography") && !j.at("homography").is_null()) {
      const auto& h = j.at("homography");
      if (!h.is_array() || h.size() != 9) {
        throw Error(ErrorCode::Config, "homography must hold 9 numbers (row-major 3x3)");
      }
      Homography m{};
      for (std::size_t i = 0; i < 9; ++i) m[i] = h[i].get<double>();
      invert_homography(m);  // rejects singular matrices
      g.homography = m;
    }
    for (const auto& c : j.at("crosswalks")) {
      g.crosswalks.push_back({c.at("label").get<std::string>(), polygon_from_json(c.at("polygon")),
                              segment_from_json(c.at("side_a")), segment_from_json(c.at("side_b"))});
    }
    for (const auto& z : j.value("conflict_zones", json::array())) {
      g.conflict_zones.push_back(polygon_from_json(z));
    }
    for (const auto& z : j.value("turn_zones", json::array())) {
      g.turn_zones.push_back(polygon_from_json(z));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("geometry schema mismatch: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    throw Error(ErrorCode::Config, e.what());
  }
  g.validate();
  return g;
}

json geometry_to_json(const IntersectionGeometry& g) {
  json j;
  j["intersection_id"] = g.intersection_id;
  j["location"] = g.location_label;
  j["utc_offset"] = format_utc_offset(g.utc_offset_minutes);
  j["sunrise"] = format_clock_minutes(g.sunrise_minutes);
  j["sunset"] = format_clock_minutes(g.sunset_minutes);
  j["dry_weather_phrase"] =
      g.dry_phrase == DryPhrase::ClearWeather ? "clear weather" : "during no raining";
  if (g.homography) {
    j["homography"] = *g.homography;
  }
  json cws = json::array();
  for (const auto& c : g.crosswalks) {
    cws.push_back({{"label", c.label},
                   {"polygon", polygon_to_json(c.polygon)},
                   {"side_a", json::array({{c.side_a.a.x, c.side_a.a.y}, {c.side_a.b.x, c.side_a.b.y}})},
                   {"side_b", json::array({{c.side_b.a.x, c.side_b.a.y}, {c.side_b.b.x, c.side_b.b.y}})}});
  }
  j["crosswalks"] = std::move(cws);
  j["conflict_zones"] = json::array();
  for (const auto& z : g.conflict_zones) j["conflict_zones"].push_back(polygon_to_json(z));
  j["turn_zones"] = json::array();
  for (const auto& z : g.turn_zones) j["turn_zones"].push_back(polygon_to_json(z));
  return j;
}

IntersectionGeometry load_geometry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::Config, "cannot open geometry file " + path.string());
  }
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw Error(ErrorCode::Config, "geometry file is not valid JSON: " + path.string());
  }
  return geometry_from_json(j);
}

}  // namespace pedwatch
