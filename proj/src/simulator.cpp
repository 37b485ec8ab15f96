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

#include "pedwatch/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <thread>

#include <spdlog/spdlog.h>

#include "pedwatch/error.hpp"
#include "pedwatch/geometry.hpp"
#include "pedwatch/monitor.hpp"
#include "pedwatch/random.hpp"

namespace pedwatch {

using nlohmann::json;

namespace {

// Canonical layout, meters.
constexpr double kLaneY = -3.5;        // eastbound lane after the turn
constexpr double kLaneX = 3.5;         // northbound approach lane
constexpr double kApproachY = -60.0;   // right-turn spawn
constexpr double kArcStartY = -9.5;
constexpr double kArcRadius = 6.0;
constexpr double kArcCenterX = kLaneX + kArcRadius;
constexpr double kExitX = 70.0;
constexpr double kZoneMinX = 11.0;
constexpr double kZoneMaxX = 31.0;
constexpr double kZoneMinY = -9.0;

constexpr double kApproachLen = kArcStartY - kApproachY;
constexpr double kArcLen = kArcRadius * std::numbers::pi / 2.0;
constexpr double kStraightStart = kApproachLen + kArcLen;  // s at the arc exit, x = kArcCenterX
constexpr double kRightTurnLen = kStraightStart + (kExitX - kArcCenterX);

// Crosswalk B: x in [24, 28], entry edges at y = -8 (A) and y = 8 (B).
constexpr double kBSideA = -8.0;
constexpr double kResumeY = -1.0;  // yielding vehicle resumes once the pedestrian is here

constexpr double kPedApproach = 2.0;  // meters walked before the entry edge
constexpr double kPedPath = 20.0;     // total walk, entry edge to 2 m past the exit edge
constexpr double kEdgeMargin = 0.5;   // seconds kept clear of phase and daylight edges
constexpr double kZoneMargin = 5.0;   // seconds between unrelated zone occupants
constexpr double kMinSpeed = 3.0;
constexpr double kMaxSpeed = 8.0;
constexpr int kMaxAttempts = 20000;

Point2 right_turn_position(double s) {
  if (s <= kApproachLen) return {kLaneX, kApproachY + s};
  if (s <= kStraightStart) {
    const double theta = std::numbers::pi - (s - kApproachLen) / kArcRadius;
    return {kArcCenterX + kArcRadius * std::cos(theta), kArcStartY + kArcRadius * std::sin(theta)};
  }
  return {kArcCenterX + (s - kStraightStart), kLaneY};
}

struct Mover {
  std::string id;
  AgentClass cls = AgentClass::Pedestrian;
  Timestamp spawn = 0.0;
  Timestamp despawn = 0.0;
  std::function<Point2(Timestamp)> at;
};

// Arc-length schedule of a right-turning vehicle, with an optional stop.
struct TurnSchedule {
  Timestamp t0 = 0.0;  // at s = 0
  double v = 0.0;
  std::optional<Timestamp> t_stop;
  Timestamp t_resume = 0.0;

  double s_at(Timestamp t) const {
    if (!t_stop || t <= *t_stop) return v * (t - t0);
    const double s_stop = v * (*t_stop - t0);
    if (t <= t_resume) return s_stop;
    return s_stop + v * (t - t_resume);
  }

  Timestamp time_at(double s) const {
    const Timestamp plain = t0 + s / v;
    if (!t_stop || plain <= *t_stop) return plain;
    return plain + (t_resume - *t_stop);
  }

  Timestamp end() const { return time_at(kRightTurnLen); }

  // Occupancy of the straight stretch inside the conflict zone.
  std::pair<Timestamp, Timestamp> zone_interval() const {
    return {time_at(kStraightStart + (kZoneMinX - kArcCenterX)),
            time_at(kStraightStart + (kZoneMaxX - kArcCenterX))};
  }
};

struct Occupancy {
  Timestamp lo = 0.0;
  Timestamp hi = 0.0;
  int pair = -1;  // injection index, or -1
};

bool overlaps(const std::vector<Occupancy>& list, Timestamp lo, Timestamp hi, int pair) {
  for (const auto& o : list) {
    if (pair >= 0 && o.pair == pair) continue;
    if (lo < o.hi + kZoneMargin && o.lo < hi + kZoneMargin) return true;
  }
  return false;
}

std::string make_id(char prefix, std::int64_t n) {
  std::string digits = std::to_string(n);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return std::string(1, prefix) + digits;
}

struct PedPlan {
  std::string crosswalk;
  Direction direction = Direction::AtoB;
  double lateral = 0.0;  // fixed coordinate across the walk direction
  double u = 1.0;
  Timestamp t_enter = 0.0;
};

Mover pedestrian_mover(const std::string& id, const PedPlan& p) {
  Mover m;
  m.id = id;
  m.cls = AgentClass::Pedestrian;
  m.spawn = p.t_enter - kPedApproach / p.u;
  m.despawn = p.t_enter + (kPedPath - kPedApproach) / p.u;
  const double sign = p.direction == Direction::AtoB ? 1.0 : -1.0;
  const double start = -10.0 * sign;
  const bool east_west = p.crosswalk == "A";
  const double lateral = p.lateral;
  const double u = p.u;
  const Timestamp spawn = m.spawn;
  m.at = [=](Timestamp t) {
    const double along = start + sign * u * (t - spawn);
    return east_west ? Point2{along, lateral} : Point2{lateral, along};
  };
  return m;
}

double local_seconds_to_edge(Timestamp t, int offset, int edge_minutes) {
  return std::abs(local_minute_of_day(t, offset) - edge_minutes) * 60.0;
}

}  // namespace

// ---- config ---------------------------------------------------------------

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::Config, "scenario: " + what); };
  if (!(fps > 0.0)) fail("fps must be positive");
  if (!(duration_hours >= 0.0) || duration_hours != std::floor(duration_hours)) {
    fail("duration_hours must be a non-negative whole number");
  }
  if (!(violation_probability >= 0.0 && violation_probability <= 1.0)) {
    fail("violation_probability must lie in [0, 1]");
  }
  for (const auto& [cw, rate] : pedestrian_rate) {
    if (cw != "A" && cw != "B") fail("unknown crosswalk '" + cw + "' in pedestrian_rate");
    if (!(rate >= 0.0)) fail("pedestrian_rate must be non-negative");
  }
  for (const auto& [_, m] : rain_violation_multiplier) {
    if (!(m >= 0.0)) fail("rain multipliers must be non-negative");
  }
  if (!(right_turn_vehicles_per_hour >= 0.0) || !(through_vehicles_per_hour >= 0.0)) {
    fail("vehicle rates must be non-negative");
  }
  for (double r : rain_mm_h) {
    if (!(r >= 0.0)) fail("rain rates must be non-negative");
  }
  if (!(signal.cycle_s > 0.0) || !(signal.walk_s > 2 * kEdgeMargin) ||
      !(signal.walk_s < signal.cycle_s - 2 * kEdgeMargin)) {
    fail("signal walk must fit inside the cycle");
  }
  if (!(weather_interval_s > 0.0)) fail("weather_interval_s must be positive");
  if (floor_to_interval(start, 3600.0, utc_offset_minutes) != start) {
    fail("start must fall on a local hour boundary");
  }
  for (std::size_t i = 0; i < conflicts.size(); ++i) {
    const auto& c = conflicts[i];
    if (c.hour < 0 || c.hour >= duration_hours) {
      fail("conflict #" + std::to_string(i) + " hour " + std::to_string(c.hour) + " is outside the run");
    }
    if (!(c.min_ttc > 0.0)) fail("conflict #" + std::to_string(i) + " needs a positive min_ttc");
  }
  if (sunrise_minutes < 0 || sunset_minutes > 1440 || sunrise_minutes >= sunset_minutes) {
    fail("sunrise must precede sunset");
  }
}

ScenarioConfig scenario_from_json(const json& j) {
  ScenarioConfig c;
  try {
    c.intersection_id = j.value("intersection_id", c.intersection_id);
    c.location_label = j.value("location", c.location_label);
    c.utc_offset_minutes = parse_utc_offset(j.value("utc_offset", std::string("Z")));
    c.start = parse_rfc3339(j.at("start").get<std::string>());
    if (j.contains("sunrise")) c.sunrise_minutes = parse_clock_minutes(j["sunrise"].get<std::string>());
    if (j.contains("sunset")) c.sunset_minutes = parse_clock_minutes(j["sunset"].get<std::string>());
    const auto phrase = j.value("dry_weather_phrase", std::string("clear weather"));
    if (phrase == "clear weather") {
      c.dry_phrase = DryPhrase::ClearWeather;
    } else if (phrase == "during no raining") {
      c.dry_phrase = DryPhrase::NoRaining;
    } else {
      throw Error(ErrorCode::Config, "unknown dry_weather_phrase '" + phrase + "'");
    }
    if (j.contains("homography")) c.homography = j["homography"].get<Homography>();
    c.duration_hours = j.value("duration_hours", c.duration_hours);
    c.fps = j.value("fps", c.fps);
    if (j.contains("pedestrian_rate")) {
      const auto& r = j["pedestrian_rate"];
      if (r.is_number()) {
        c.pedestrian_rate = {{"A", r.get<double>()}, {"B", r.get<double>()}};
      } else {
        c.pedestrian_rate = r.get<std::map<std::string, double>>();
      }
    }
    c.violation_probability = j.value("violation_probability", c.violation_probability);
    if (j.contains("rain_violation_multiplier")) {
      for (const auto& [k, v] : j["rain_violation_multiplier"].items()) {
        const auto cls = rain_class_from_string(k);
        if (!cls) throw Error(ErrorCode::Config, "unknown rain class '" + k + "'");
        c.rain_violation_multiplier[*cls] = v.get<double>();
      }
    }
    c.right_turn_vehicles_per_hour = j.value("right_turn_vehicles_per_hour", c.right_turn_vehicles_per_hour);
    c.through_vehicles_per_hour = j.value("through_vehicles_per_hour", c.through_vehicles_per_hour);
    for (const auto& e : j.value("conflicts", json::array())) {
      c.conflicts.push_back({e.at("hour").get<int>(), e.at("min_ttc").get<double>()});
    }
    c.rain_mm_h = j.value("rain_mm_h", std::vector<double>{});
    c.weather_interval_s = j.value("weather_interval_s", c.weather_interval_s);
    if (j.contains("signal")) {
      c.signal.cycle_s = j["signal"].value("cycle_s", c.signal.cycle_s);
      c.signal.walk_s = j["signal"].value("walk_s", c.signal.walk_s);
    }
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("scenario: ") + e.what());
  }
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open scenario '" + path.string() + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Config, "scenario '" + path.string() + "' is not JSON");
  return scenario_from_json(j);
}

IntersectionGeometry canonical_geometry(const ScenarioConfig& config) {
  IntersectionGeometry g;
  g.intersection_id = config.intersection_id;
  g.location_label = config.location_label;
  g.utc_offset_minutes = config.utc_offset_minutes;
  g.sunrise_minutes = config.sunrise_minutes;
  g.sunset_minutes = config.sunset_minutes;
  g.dry_phrase = config.dry_phrase;
  g.homography = config.homography;
  g.crosswalks.push_back({"A",
                          {{-8, -15}, {8, -15}, {8, -11}, {-8, -11}},
                          {{-8, -11}, {-8, -15}},
                          {{8, -15}, {8, -11}}});
  g.crosswalks.push_back({"B",
                          {{24, -8}, {28, -8}, {28, 8}, {24, 8}},
                          {{24, -8}, {28, -8}},
                          {{28, 8}, {24, 8}}});
  g.turn_zones.push_back({{2, -10.5}, {11, -10.5}, {11, -2}, {2, -2}});
  g.conflict_zones.push_back({{kZoneMinX, kZoneMinY}, {kZoneMaxX, kZoneMinY}, {kZoneMaxX, 9}, {kZoneMinX, 9}});
  g.validate();
  return g;
}

// ---- generation -----------------------------------------------------------

Scenario generate_scenario(const ScenarioConfig& config) {
  config.validate();
  Scenario sc;
  sc.geometry = canonical_geometry(config);
  sc.epoch = config.start;
  sc.fps = config.fps;

  const int hours = static_cast<int>(config.duration_hours);
  const Timestamp end = config.start + hours * 3600.0;
  Rng rng(config.seed);

  // Signal: crosswalk B runs half a cycle after A.
  if (hours > 0) {
    for (std::size_t i = 0; i < sc.geometry.crosswalks.size(); ++i) {
      const double offset = i * config.signal.cycle_s / 2.0;
      for (Timestamp w = config.start - config.signal.cycle_s + offset; w < end;
           w += config.signal.cycle_s) {
        sc.phases.push_back({sc.geometry.crosswalks[i].label, w, w + config.signal.walk_s});
      }
    }
  }
  const PhaseSchedule schedule(sc.phases);

  auto hour_rain = [&](int h) {
    return h < static_cast<int>(config.rain_mm_h.size()) ? config.rain_mm_h[h] : 0.0;
  };
  for (Timestamp t = config.start; t < end; t += config.weather_interval_s) {
    const int h = static_cast<int>((t - config.start) / 3600.0);
    WeatherSample s;
    s.t = t;
    s.rain_mm_h = hour_rain(h);
    s.rain_class = classify_rain(s.rain_mm_h);
    s.temperature_c = 26.0;
    s.humidity_pct = s.rain_mm_h > 0.0 ? 90.0 : 60.0;
    sc.weather.push_back(s);
  }

  const int offset = config.utc_offset_minutes;
  auto clear_of_daylight_edges = [&](Timestamp t) {
    return local_seconds_to_edge(t, offset, config.sunrise_minutes) >= kEdgeMargin &&
           local_seconds_to_edge(t, offset, config.sunset_minutes) >= kEdgeMargin;
  };
  // In (or out of) walk for a margin on both sides of t.
  auto walk_clearance = [&](const std::string& cw, Timestamp t) {
    return schedule.in_walk(cw, t - kEdgeMargin) && schedule.in_walk(cw, t) &&
           schedule.in_walk(cw, t + kEdgeMargin);
  };
  auto dont_walk_clearance = [&](const std::string& cw, Timestamp t) {
    return !schedule.in_walk(cw, t - kEdgeMargin) && !schedule.in_walk(cw, t) &&
           !schedule.in_walk(cw, t + kEdgeMargin);
  };

  std::vector<Mover> movers;
  std::vector<Occupancy> b_peds;     // presence of crosswalk-B pedestrians
  std::vector<Occupancy> turn_occ;   // right-turners inside the conflict zone
  std::int64_t next_ped = 0;
  std::int64_t next_veh = 0;

  auto record_crossing = [&](const std::string& id, const PedPlan& p) {
    TruthCrossing c;
    c.ped_id = id;
    c.crosswalk = p.crosswalk;
    c.t_enter = p.t_enter;
    c.t_exit = p.t_enter + 16.0 / p.u;
    c.direction = p.direction;
    c.violation = !schedule.in_walk(p.crosswalk, p.t_enter);
    const double minute = local_minute_of_day(p.t_enter, offset);
    c.daytime = minute >= config.sunrise_minutes && minute < config.sunset_minutes;
    sc.truth.crossings.push_back(c);
  };

  // Injected conflicts: a safe pedestrian on B walking north and a right-turner
  // that yields, stopping at the instant its constant-velocity TTC equals the
  // target. With both on a collision course |dp + dv t| = |dv| |tau - t|, so
  // the TTC at the stop is tau - R / |dv|.
  const double radius = MonitorConfig{}.interaction_radius_m;
  for (std::size_t i = 0; i < config.conflicts.size(); ++i) {
    const auto& inj = config.conflicts[i];
    const int pair = static_cast<int>(i);
    const Timestamp h0 = config.start + inj.hour * 3600.0;
    auto infeasible = [&](const std::string& why) {
      return Error(ErrorCode::Config, "conflict #" + std::to_string(i) + " (hour " +
                                          std::to_string(inj.hour) + ", min_ttc " +
                                          std::to_string(inj.min_ttc) + ") is infeasible: " + why);
    };

    PedPlan ped;
    ped.crosswalk = "B";
    ped.direction = Direction::AtoB;
    ped.lateral = rng.uniform(24.5, 27.5);
    double u = rng.uniform(1.0, 1.6);
    double v = rng.uniform(kMinSpeed, kMaxSpeed);
    const double x_p = ped.lateral;
    auto tau_for = [&](double uu, double vv) { return inj.min_ttc + radius / std::hypot(vv, uu); };
    auto fits = [&](double uu, double vv) {
      const double tau = tau_for(uu, vv);
      // Straight-line run of at least 1 s before the stop, and the pedestrian
      // already inside the zone.
      return vv * (tau + 1.0) <= x_p - kArcCenterX && kLaneY - uu * tau >= kZoneMinY + 0.5;
    };
    if (!fits(u, v)) {
      u = 1.0;
      v = kMinSpeed;
      if (!fits(u, v)) throw infeasible("target unreachable within the conflict zone");
    }
    ped.u = u;
    const double tau = tau_for(u, v);
    const double walk_to_lane = (kLaneY - kBSideA) / u;

    bool placed = false;
    TurnSchedule veh;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      const Timestamp guess = rng.uniform(h0 + 60.0, h0 + 3540.0);
      const Timestamp t_stop = config.start + std::round((guess - config.start) * config.fps) / config.fps;
      if (t_stop < h0 + 60.0 || t_stop > h0 + 3540.0) continue;
      const Timestamp t_enter = t_stop + tau - walk_to_lane;
      if (!walk_clearance("B", t_enter) || !clear_of_daylight_edges(t_enter)) continue;
      if (t_enter < h0 + kPedApproach + kEdgeMargin || t_enter > h0 + 3600.0 - 20.0) continue;
      veh.v = v;
      veh.t_stop = t_stop;
      const double s_stop = kStraightStart + (x_p - v * tau - kArcCenterX);
      veh.t0 = t_stop - s_stop / v;
      veh.t_resume = t_enter + (kResumeY - kBSideA) / u;
      const Timestamp spawn = t_enter - kPedApproach / u;
      const Timestamp despawn = t_enter + (kPedPath - kPedApproach) / u;
      const auto [z0, z1] = veh.zone_interval();
      if (veh.t0 < config.start || veh.end() > end) continue;
      if (overlaps(turn_occ, spawn, despawn, pair) || overlaps(b_peds, z0, z1, pair)) continue;
      ped.t_enter = t_enter;
      placed = true;
    }
    if (!placed) throw infeasible("no free slot in the hour");

    const std::string ped_id = make_id('p', next_ped++);
    const std::string veh_id = make_id('v', next_veh++);
    movers.push_back(pedestrian_mover(ped_id, ped));
    b_peds.push_back({movers.back().spawn, movers.back().despawn, pair});
    record_crossing(ped_id, ped);

    Mover mv;
    mv.id = veh_id;
    mv.cls = AgentClass::Vehicle;
    mv.spawn = veh.t0;
    mv.despawn = veh.end();
    mv.at = [veh](Timestamp t) { return right_turn_position(veh.s_at(t)); };
    movers.push_back(std::move(mv));
    const auto [z0, z1] = veh.zone_interval();
    turn_occ.push_back({z0, z1, pair});

    TruthConflict tc;
    tc.ped_id = ped_id;
    tc.veh_id = veh_id;
    tc.t_min_ttc = *veh.t_stop;
    tc.min_ttc = inj.min_ttc;
    tc.ped_at_min = {ped_id, AgentClass::Pedestrian, {x_p, kLaneY - u * tau}, {0.0, u}, *veh.t_stop};
    tc.veh_at_min = {veh_id, AgentClass::Vehicle, {x_p - v * tau, kLaneY}, {v, 0.0}, *veh.t_stop};
    sc.truth.conflicts.push_back(tc);
  }

  // Background pedestrians.
  for (int h = 0; h < hours; ++h) {
    const Timestamp h0 = config.start + h * 3600.0;
    const RainClass rain = classify_rain(hour_rain(h));
    auto mult_it = config.rain_violation_multiplier.find(rain);
    const double mult = mult_it == config.rain_violation_multiplier.end() ? 1.0 : mult_it->second;
    const double p_violate = std::min(1.0, config.violation_probability * mult);
    for (const auto& cw : sc.geometry.crosswalks) {
      auto rate_it = config.pedestrian_rate.find(cw.label);
      const double rate = rate_it == config.pedestrian_rate.end() ? 0.0 : rate_it->second;
      const std::int64_t n = rng.poisson(rate);
      for (std::int64_t k = 0; k < n; ++k) {
        PedPlan ped;
        ped.crosswalk = cw.label;
        ped.direction = rng.bernoulli(0.5) ? Direction::AtoB : Direction::BtoA;
        ped.lateral = cw.label == "A" ? rng.uniform(-14.5, -11.5) : rng.uniform(24.5, 27.5);
        ped.u = rng.uniform(1.0, 1.6);
        const bool violate = rng.bernoulli(p_violate);
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
          const Timestamp t = rng.uniform(h0 + kPedApproach + kEdgeMargin, h0 + 3600.0 - 20.0);
          if (violate ? !dont_walk_clearance(cw.label, t) : !walk_clearance(cw.label, t)) continue;
          if (!clear_of_daylight_edges(t)) continue;
          if (cw.label == "B" &&
              overlaps(turn_occ, t - kPedApproach / ped.u, t + (kPedPath - kPedApproach) / ped.u, -1)) {
            continue;
          }
          ped.t_enter = t;
          placed = true;
        }
        if (!placed) {
          throw Error(ErrorCode::Config, "scenario: no room for pedestrian on crosswalk " + cw.label +
                                             " in hour " + std::to_string(h));
        }
        const std::string id = make_id('p', next_ped++);
        movers.push_back(pedestrian_mover(id, ped));
        if (cw.label == "B") b_peds.push_back({movers.back().spawn, movers.back().despawn, -1});
        record_crossing(id, ped);
      }
    }
  }

  // Background vehicles. Right-turners only take slots with no pedestrian on B.
  for (int h = 0; h < hours; ++h) {
    const Timestamp h0 = config.start + h * 3600.0;
    const std::int64_t n_turn = rng.poisson(config.right_turn_vehicles_per_hour);
    for (std::int64_t k = 0; k < n_turn; ++k) {
      TurnSchedule veh;
      veh.v = rng.uniform(kMinSpeed, kMaxSpeed);
      bool placed = false;
      for (int attempt = 0; attempt < 50 && !placed; ++attempt) {
        veh.t0 = rng.uniform(h0, h0 + 3600.0);
        const auto [z0, z1] = veh.zone_interval();
        if (veh.end() > end || overlaps(b_peds, z0, z1, -1)) continue;
        placed = true;
      }
      if (!placed) {
        spdlog::debug("simulator: skipped a right-turner in hour {}", h);
        continue;
      }
      Mover mv;
      mv.id = make_id('v', next_veh++);
      mv.cls = AgentClass::Vehicle;
      mv.spawn = veh.t0;
      mv.despawn = veh.end();
      mv.at = [veh](Timestamp t) { return right_turn_position(veh.s_at(t)); };
      movers.push_back(std::move(mv));
      const auto [z0, z1] = veh.zone_interval();
      turn_occ.push_back({z0, z1, -1});
    }
    const std::int64_t n_through = rng.poisson(config.through_vehicles_per_hour);
    for (std::int64_t k = 0; k < n_through; ++k) {
      const double v = rng.uniform(kMinSpeed, kMaxSpeed);
      const Timestamp t0 = rng.uniform(h0, h0 + 3600.0);
      const bool eastbound = rng.bernoulli(0.5);
      const double length = eastbound ? kExitX + 60.0 : 120.0;
      if (t0 + length / v > end) continue;
      Mover mv;
      mv.id = make_id('v', next_veh++);
      mv.cls = AgentClass::Vehicle;
      mv.spawn = t0;
      mv.despawn = t0 + length / v;
      mv.at = [=](Timestamp t) {
        const double s = v * (t - t0);
        return eastbound ? Point2{-60.0 + s, kLaneY} : Point2{kLaneX, kApproachY + s};
      };
      movers.push_back(std::move(mv));
    }
  }

  // Frames.
  std::sort(movers.begin(), movers.end(), [](const Mover& a, const Mover& b) {
    if (a.spawn != b.spawn) return a.spawn < b.spawn;
    return a.id < b.id;
  });
  const auto n_frames = static_cast<std::int64_t>(std::llround(hours * 3600.0 * config.fps));
  sc.frames.reserve(static_cast<std::size_t>(n_frames));
  std::size_t next_mover = 0;
  std::vector<const Mover*> active;
  for (std::int64_t k = 0; k < n_frames; ++k) {
    FrameDetections f;
    f.frame = k;
    f.t = config.start + static_cast<double>(k) / config.fps;
    while (next_mover < movers.size() && movers[next_mover].spawn <= f.t) {
      active.push_back(&movers[next_mover++]);
    }
    std::erase_if(active, [&](const Mover* m) { return m->despawn < f.t; });
    for (const Mover* m : active) {
      f.detections.push_back({m->id, m->cls, m->at(f.t)});
    }
    sc.frames.push_back(std::move(f));
  }

  std::sort(sc.truth.crossings.begin(), sc.truth.crossings.end(),
            [](const TruthCrossing& a, const TruthCrossing& b) {
              if (a.t_enter != b.t_enter) return a.t_enter < b.t_enter;
              return a.ped_id < b.ped_id;
            });
  std::sort(sc.truth.conflicts.begin(), sc.truth.conflicts.end(),
            [](const TruthConflict& a, const TruthConflict& b) { return a.t_min_ttc < b.t_min_ttc; });

  for (int h = 0; h < hours; ++h) {
    TruthHour th;
    th.hour_start = config.start + h * 3600.0;
    th.weather = classify_rain(hour_rain(h));
    const Timestamp h1 = th.hour_start + 3600.0;
    for (const auto& c : sc.truth.crossings) {
      if (c.t_enter >= th.hour_start && c.t_enter < h1) {
        ++th.pedestrians;
        if (c.violation) ++th.violations;
      }
    }
    for (const auto& c : sc.truth.conflicts) {
      if (c.t_min_ttc >= th.hour_start && c.t_min_ttc < h1 &&
          classify_severity(c.min_ttc) != Severity::None) {
        ++th.conflicts;
      }
    }
    sc.truth.hours.push_back(th);
  }
  return sc;
}

// ---- occlusion ------------------------------------------------------------

std::vector<FrameDetections> inject_occlusion(std::span<const FrameDetections> frames, double drop_prob,
                                              double burst_len, std::uint64_t seed) {
  if (!(drop_prob >= 0.0 && drop_prob < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "drop_prob must lie in [0, 1)");
  }
  if (!(burst_len >= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "burst_len must be at least 1");
  }
  std::vector<FrameDetections> out(frames.begin(), frames.end());
  if (drop_prob == 0.0) return out;

  // A burst starts with probability q at each kept detection; the long-run
  // dropped fraction qL / (qL + 1 - q) then equals drop_prob.
  const double q = drop_prob / (burst_len * (1.0 - drop_prob) + drop_prob);
  Rng rng(seed);
  std::map<std::string, std::int64_t> remaining;
  for (auto& f : out) {
    std::erase_if(f.detections, [&](const Detection& d) {
      auto& left = remaining[d.agent_id];
      if (left > 0) {
        --left;
        return true;
      }
      if (rng.bernoulli(q)) {
        left = rng.geometric_length(burst_len) - 1;
        return true;
      }
      return false;
    });
  }
  return out;
}

// ---- replay ---------------------------------------------------------------

void replay(std::span<const FrameDetections> frames, double fps, std::optional<double> speed_factor,
            const std::function<void(const FrameDetections&)>& sink) {
  if (!(fps > 0.0)) throw Error(ErrorCode::InvalidArgument, "fps must be positive");
  if (speed_factor && !(*speed_factor > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "speed factor must be positive");
  }
  using clock = std::chrono::steady_clock;
  const auto begin = clock::now();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (speed_factor) {
      const std::chrono::duration<double> offset(static_cast<double>(i) / (fps * *speed_factor));
      std::this_thread::sleep_until(begin + std::chrono::duration_cast<clock::duration>(offset));
    }
    sink(frames[i]);
  }
}

// ---- files ----------------------------------------------------------------

json truth_to_json_lines(const GroundTruth& truth, int utc_offset_minutes) {
  json lines = json::array();
  for (const auto& c : truth.crossings) {
    lines.push_back({{"kind", "crossing"},
                     {"ped_id", c.ped_id},
                     {"crosswalk", c.crosswalk},
                     {"t_enter", c.t_enter},
                     {"t_exit", c.t_exit},
                     {"direction", to_string(c.direction)},
                     {"violation", c.violation},
                     {"daytime", c.daytime}});
  }
  for (const auto& c : truth.conflicts) {
    lines.push_back({{"kind", "conflict"},
                     {"ped_id", c.ped_id},
                     {"veh_id", c.veh_id},
                     {"t_min_ttc", c.t_min_ttc},
                     {"min_ttc", c.min_ttc}});
  }
  for (const auto& h : truth.hours) {
    lines.push_back({{"kind", "hour"},
                     {"hour_start", format_rfc3339(h.hour_start, utc_offset_minutes)},
                     {"pedestrians", h.pedestrians},
                     {"violations", h.violations},
                     {"conflicts", h.conflicts},
                     {"weather_class", to_string(h.weather)}});
  }
  return lines;
}

void write_scenario(const Scenario& scenario, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create '" + dir.string() + "': " + ec.message());
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + (dir / name).string() + "'");
    return out;
  };
  const int offset = scenario.geometry.utc_offset_minutes;

  {
    auto out = open("geometry.json");
    out << geometry_to_json(scenario.geometry).dump(2) << '\n';
  }
  {
    auto out = open("tracks.jsonl");
    std::optional<Homography> to_pixels;
    if (scenario.geometry.homography) to_pixels = invert_homography(*scenario.geometry.homography);
    for (const auto& f : scenario.frames) {
      if (to_pixels) {
        FrameDetections px = f;
        for (auto& d : px.detections) d.pos = apply_homography(*to_pixels, d.pos);
        out << encode_track_record(px, scenario.epoch) << '\n';
      } else {
        out << encode_track_record(f, scenario.epoch) << '\n';
      }
    }
  }
  {
    auto out = open("phases.jsonl");
    for (const auto& w : scenario.phases) out << encode_phase_record(w, offset) << '\n';
  }
  {
    auto out = open("weather.jsonl");
    for (const auto& s : scenario.weather) out << weather_to_json(s, offset).dump() << '\n';
  }
  {
    auto out = open("truth.jsonl");
    for (const auto& line : truth_to_json_lines(scenario.truth, offset)) out << line.dump() << '\n';
  }
  {
    auto out = open("pipeline.json");
    const json cfg = {{"geometry", "geometry.json"},
                      {"tracks", "tracks.jsonl"},
                      {"phases", "phases.jsonl"},
                      {"weather", "weather.jsonl"},
                      {"store", "store"},
                      {"stream_epoch", format_rfc3339(scenario.epoch, offset)},
                      {"fps", scenario.fps}};
    out << cfg.dump(2) << '\n';
  }
}

}  // namespace pedwatch
