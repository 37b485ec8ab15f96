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

#include "pedwatch/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include <spdlog/spdlog.h>

#include "pedwatch/error.hpp"
#include "pedwatch/geometry.hpp"

namespace pedwatch {

// ---- trajectories ---------------------------------------------------------

TrajectoryAssembler::TrajectoryAssembler(int retire_gap_frames) : gap_(retire_gap_frames) {
  if (gap_ < 0) {
    throw Error(ErrorCode::InvalidArgument, "retire gap must be non-negative");
  }
}

std::vector<Track> TrajectoryAssembler::push(const FrameDetections& frame) {
  std::set<std::string_view> ids;
  for (const auto& d : frame.detections) {
    if (!ids.insert(d.agent_id).second) {
      throw Error(ErrorCode::InvalidArgument, "frame " + std::to_string(frame.frame) +
                                                  " repeats agent id '" + d.agent_id + "'");
    }
  }

  std::vector<Track> retired;
  for (auto it = live_.begin(); it != live_.end();) {
    if (frame.frame - it->second.last_frame - 1 > gap_) {
      retired.push_back(std::move(it->second.track));
      it = live_.erase(it);
    } else {
      ++it;
    }
  }

  for (const auto& d : frame.detections) {
    auto it = live_.find(d.agent_id);
    if (it == live_.end() || it->second.track.agent_class() != d.agent_class) {
      if (it != live_.end()) {
        retired.push_back(std::move(it->second.track));
        live_.erase(it);
      }
      Track track(d.agent_id, d.agent_class);
      if (ever_seen_.count(d.agent_id)) {
        track.mark_reacquired();
      }
      ever_seen_[d.agent_id] = true;
      it = live_.emplace(d.agent_id, LiveTrack{std::move(track), frame.frame}).first;
    }
    it->second.track.append({frame.t, d.pos, frame.frame});
    it->second.last_frame = frame.frame;
  }
  return retired;
}

std::vector<Track> TrajectoryAssembler::finish() {
  std::vector<Track> out;
  out.reserve(live_.size());
  for (auto& [_, lt] : live_) {
    out.push_back(std::move(lt.track));
  }
  live_.clear();
  return out;
}

const Track* TrajectoryAssembler::live(const std::string& agent_id) const {
  auto it = live_.find(agent_id);
  return it == live_.end() ? nullptr : &it->second.track;
}

std::vector<Track> assemble_trajectories(std::span<const FrameDetections> frames,
                                         int retire_gap_frames) {
  TrajectoryAssembler assembler(retire_gap_frames);
  std::vector<Track> out;
  for (const auto& f : frames) {
    try {
      auto retired = assembler.push(f);
      std::move(retired.begin(), retired.end(), std::back_inserter(out));
    } catch (const Error& e) {
      spdlog::warn("frame rejected: {}", e.what());
    }
  }
  auto rest = assembler.finish();
  std::move(rest.begin(), rest.end(), std::back_inserter(out));
  return out;
}

// ---- kinematics -----------------------------------------------------------

KinematicEstimate estimate_kinematics(std::span<const TrackPoint> points, const std::string& agent_id,
                                      AgentClass cls, Timestamp t, int window) {
  auto end = std::upper_bound(points.begin(), points.end(), t,
                              [](Timestamp v, const TrackPoint& p) { return v < p.t; });
  const auto available = static_cast<int>(end - points.begin());
  KinematicEstimate out;
  if (available < 2) {
    return out;
  }
  const int n = std::min(std::max(window, 2), available);
  const auto first = end - n;

  double tm = 0.0, xm = 0.0, ym = 0.0;
  for (auto it = first; it != end; ++it) {
    tm += it->t;
    xm += it->pos.x;
    ym += it->pos.y;
  }
  tm /= n;
  xm /= n;
  ym /= n;
  double stt = 0.0, stx = 0.0, sty = 0.0;
  for (auto it = first; it != end; ++it) {
    const double dt = it->t - tm;
    stt += dt * dt;
    stx += dt * (it->pos.x - xm);
    sty += dt * (it->pos.y - ym);
  }
  const double vx = stx / stt;
  const double vy = sty / stt;

  out.kinematics.valid = true;
  out.kinematics.speed = std::hypot(vx, vy);
  out.kinematics.heading = (vx == 0.0 && vy == 0.0) ? 0.0 : normalize_heading(vx, vy);
  const auto& last = *(end - 1);
  out.state = AgentState{agent_id, cls, last.pos, {vx, vy}, last.t};
  return out;
}

KinematicEstimate estimate_kinematics(const Track& track, Timestamp t, int window) {
  return estimate_kinematics(track.points(), track.agent_id(), track.agent_class(), t, window);
}

// ---- turning --------------------------------------------------------------

namespace {

bool in_any(const std::vector<Polygon>& zones, const Point2& p) {
  for (const auto& z : zones) {
    if (point_in_polygon(p, z)) return true;
  }
  return false;
}

// Steps shorter than this carry no usable heading.
constexpr double kMinStep = 1e-3;

}  // namespace

TurnTracker::TurnTracker(const IntersectionGeometry& geometry, int min_points, double right_turn_deg)
    : geometry_(&geometry),
      min_points_(min_points),
      threshold_rad_(-right_turn_deg * std::numbers::pi / 180.0) {}

void TurnTracker::add(const TrackPoint& p) {
  const bool inside = in_any(geometry_->turn_zones, p.pos);
  if (inside) ++points_inside_;
  if (prev_ && inside && prev_inside_) {
    const double dx = p.pos.x - prev_->pos.x;
    const double dy = p.pos.y - prev_->pos.y;
    if (std::hypot(dx, dy) >= kMinStep) {
      const double heading = normalize_heading(dx, dy);
      if (prev_heading_) {
        cumulative_ += wrap_angle(heading - *prev_heading_);
      }
      prev_heading_ = heading;
    }
  } else if (!inside) {
    prev_heading_.reset();
  }
  if (!prev_ || !inside || !prev_inside_ ||
      std::hypot(p.pos.x - prev_->pos.x, p.pos.y - prev_->pos.y) >= kMinStep) {
    prev_ = p;
  }
  prev_inside_ = inside;
}

TurnClass TurnTracker::classification() const {
  if (points_inside_ < min_points_) return TurnClass::Other;
  return cumulative_ <= threshold_rad_ ? TurnClass::RightTurn : TurnClass::Other;
}

TurnClass classify_turn(const Track& track, const IntersectionGeometry& geometry, int window,
                        double right_turn_deg) {
  if (track.agent_class() != AgentClass::Vehicle) {
    throw Error(ErrorCode::InvalidArgument, "turn classification applies to vehicle tracks only");
  }
  TurnTracker tracker(geometry, window, right_turn_deg);
  for (const auto& p : track.points()) {
    tracker.add(p);
  }
  return tracker.classification();
}

// ---- conflicts ------------------------------------------------------------

std::optional<double> compute_ttc(const AgentState& ped, const AgentState& veh, double radius) {
  const double px = veh.pos.x - ped.pos.x;
  const double py = veh.pos.y - ped.pos.y;
  const double vx = veh.vel.x - ped.vel.x;
  const double vy = veh.vel.y - ped.vel.y;
  const double c = px * px + py * py - radius * radius;
  if (c <= 0.0) {
    return std::numeric_limits<double>::denorm_min();
  }
  const double a = vx * vx + vy * vy;
  const double b = 2.0 * (px * vx + py * vy);
  if (a == 0.0 || b >= 0.0) {
    return std::nullopt;  // not closing
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) {
    return std::nullopt;  // closest approach stays outside the radius
  }
  // Both roots are positive here; c / q is the smaller one without cancellation.
  const double q = -0.5 * (b - std::sqrt(disc));
  return c / q;
}

ConflictDetector::ConflictDetector(const IntersectionGeometry& geometry, const MonitorConfig& config)
    : geometry_(&geometry), config_(config) {}

std::optional<std::size_t> ConflictDetector::zone_of(const Point2& p, std::size_t hint) const {
  const auto& zones = geometry_->conflict_zones;
  if (hint < zones.size() && point_in_polygon(p, zones[hint])) return hint;
  for (std::size_t i = 0; i < zones.size(); ++i) {
    if (point_in_polygon(p, zones[i])) return i;
  }
  return std::nullopt;
}

ConflictEvent ConflictDetector::close(const InteractionEpisode& e) {
  ConflictEvent ev{e.ped_id, e.veh_id, e.samples.front().first, e.samples.front().second,
                   Severity::None};
  for (const auto& [t, ttc] : e.samples) {
    if (ttc < ev.min_ttc) {
      ev.min_ttc = ttc;
      ev.t_min_ttc = t;
    }
  }
  ev.severity = classify_severity(ev.min_ttc);
  return ev;
}

std::vector<ConflictEvent> ConflictDetector::update(Timestamp t, std::span<const AgentState> peds,
                                                    std::span<const AgentState> vehicles) {
  // Zone membership per agent; pairs must share a zone.
  const auto& zones = geometry_->conflict_zones;
  std::vector<std::vector<bool>> ped_in(peds.size(), std::vector<bool>(zones.size()));
  std::vector<std::vector<bool>> veh_in(vehicles.size(), std::vector<bool>(zones.size()));
  std::vector<bool> ped_any(peds.size()), veh_any(vehicles.size());
  for (std::size_t i = 0; i < peds.size(); ++i) {
    for (std::size_t z = 0; z < zones.size(); ++z) {
      ped_in[i][z] = point_in_polygon(peds[i].pos, zones[z]);
      ped_any[i] = ped_any[i] || ped_in[i][z];
    }
  }
  for (std::size_t j = 0; j < vehicles.size(); ++j) {
    for (std::size_t z = 0; z < zones.size(); ++z) {
      veh_in[j][z] = point_in_polygon(vehicles[j].pos, zones[z]);
      veh_any[j] = veh_any[j] || veh_in[j][z];
    }
  }

  std::set<std::pair<std::string, std::string>> evaluated;
  for (std::size_t i = 0; i < peds.size(); ++i) {
    if (!ped_any[i]) continue;
    for (std::size_t j = 0; j < vehicles.size(); ++j) {
      if (!veh_any[j]) continue;
      bool shared = false;
      for (std::size_t z = 0; z < zones.size() && !shared; ++z) {
        shared = ped_in[i][z] && veh_in[j][z];
      }
      if (!shared) continue;

      auto key = std::make_pair(peds[i].agent_id, vehicles[j].agent_id);
      evaluated.insert(key);
      const auto ttc = compute_ttc(peds[i], vehicles[j], config_.interaction_radius_m);
      auto it = episodes_.find(key);
      if (it == episodes_.end()) {
        if (!ttc) continue;
        it = episodes_.emplace(key, InteractionEpisode{key.first, key.second, t, {}, 0, true}).first;
      }
      auto& ep = it->second;
      if (ttc) {
        ep.samples.emplace_back(t, *ttc);
      }
      if (ttc && *ttc <= kSlightTtc) {
        ep.frames_above = 0;
      } else {
        ++ep.frames_above;
      }
    }
  }

  // Present agents outside every shared zone have left; absent agents count
  // as frames without a low TTC.
  std::set<std::string_view> present_peds, present_vehs;
  for (const auto& p : peds) present_peds.insert(p.agent_id);
  for (const auto& v : vehicles) present_vehs.insert(v.agent_id);

  std::vector<ConflictEvent> out;
  for (auto it = episodes_.begin(); it != episodes_.end();) {
    auto& ep = it->second;
    bool done = false;
    if (!evaluated.count(it->first)) {
      const bool ped_here = present_peds.count(ep.ped_id) > 0;
      const bool veh_here = present_vehs.count(ep.veh_id) > 0;
      if (ped_here && veh_here) {
        done = true;  // both visible but no longer sharing a zone
      } else {
        ++ep.frames_above;
      }
    }
    if (ep.frames_above >= config_.episode_close_frames) {
      done = true;
    }
    if (done) {
      ep.open = false;
      if (!ep.samples.empty()) out.push_back(close(ep));
      it = episodes_.erase(it);
    } else {
      ++it;
    }
  }
  return out;
}

std::vector<ConflictEvent> ConflictDetector::finish() {
  std::vector<ConflictEvent> out;
  for (auto& [_, ep] : episodes_) {
    if (!ep.samples.empty()) out.push_back(close(ep));
  }
  episodes_.clear();
  return out;
}

std::vector<ConflictEvent> detect_conflicts(std::span<const FrameStates> frames,
                                            const IntersectionGeometry& geometry,
                                            const MonitorConfig& config) {
  ConflictDetector detector(geometry, config);
  std::vector<ConflictEvent> out;
  for (const auto& f : frames) {
    auto events = detector.update(f.t, f.peds, f.vehicles);
    std::move(events.begin(), events.end(), std::back_inserter(out));
  }
  auto rest = detector.finish();
  std::move(rest.begin(), rest.end(), std::back_inserter(out));
  return out;
}

// ---- crossings ------------------------------------------------------------

CrossingDetector::CrossingDetector(const IntersectionGeometry& geometry, const PhaseSchedule& phases)
    : geometry_(&geometry), phases_(&phases) {}

CrossingEvent CrossingDetector::make_event(const std::string& agent_id, const Crosswalk& cw,
                                           Side entry, Timestamp t_enter, Timestamp t_exit) const {
  CrossingEvent ev;
  ev.ped_id = agent_id;
  ev.crosswalk = cw.label;
  ev.t_enter = t_enter;
  ev.t_exit = t_exit;
  ev.direction = entry == Side::A ? Direction::AtoB : Direction::BtoA;
  ev.violation = !phases_->in_walk(cw.label, t_enter);
  const double minute = local_minute_of_day(t_enter, geometry_->utc_offset_minutes);
  ev.daytime = minute >= geometry_->sunrise_minutes && minute < geometry_->sunset_minutes;
  return ev;
}

std::vector<CrossingEvent> CrossingDetector::update(const std::string& agent_id, const TrackPoint& p) {
  const auto& cws = geometry_->crosswalks;
  auto [it, fresh] = agents_.try_emplace(agent_id);
  auto& agent = it->second;
  std::vector<CrossingEvent> out;

  if (fresh) {
    agent.per_crosswalk.resize(cws.size());
    for (std::size_t i = 0; i < cws.size(); ++i) {
      agent.per_crosswalk[i].inside = point_in_polygon(p.pos, cws[i].polygon);
    }
    agent.last = p;
    return out;
  }

  const TrackPoint prev = agent.last;
  if (p.t <= prev.t) {
    return out;
  }
  auto at = [&](double s) { return prev.t + s * (p.t - prev.t); };

  for (std::size_t i = 0; i < cws.size(); ++i) {
    const Crosswalk& cw = cws[i];
    auto& st = agent.per_crosswalk[i];
    const bool now_inside = point_in_polygon(p.pos, cw.polygon);
    const auto sa = segment_intersection(prev.pos, p.pos, cw.side_a.a, cw.side_a.b);
    const auto sb = segment_intersection(prev.pos, p.pos, cw.side_b.a, cw.side_b.b);

    if (!st.inside && now_inside) {
      st.entry = Side::None;
      if (sa && (!sb || *sa <= *sb)) {
        st.entry = Side::A;
        st.t_enter = at(*sa);
      } else if (sb) {
        st.entry = Side::B;
        st.t_enter = at(*sb);
      }
    } else if (st.inside && !now_inside) {
      // Exit through the side opposite the entry; the last crossing of that
      // side along the step is the exit point.
      if (st.entry == Side::A && sb) {
        out.push_back(make_event(agent_id, cw, Side::A, st.t_enter, at(*sb)));
      } else if (st.entry == Side::B && sa) {
        out.push_back(make_event(agent_id, cw, Side::B, st.t_enter, at(*sa)));
      }
      st.entry = Side::None;
    } else if (!st.inside && !now_inside && sa && sb) {
      // Traversed the whole crosswalk between two samples.
      const Side entry = *sa <= *sb ? Side::A : Side::B;
      const double s_in = std::min(*sa, *sb);
      const double s_out = std::max(*sa, *sb);
      if (s_out > s_in) {
        out.push_back(make_event(agent_id, cw, entry, at(s_in), at(s_out)));
      }
    }
    st.inside = now_inside;
  }
  agent.last = p;
  return out;
}

void CrossingDetector::forget_stale(Timestamp now, double max_age_s) {
  for (auto it = agents_.begin(); it != agents_.end();) {
    if (now - it->second.last.t > max_age_s) {
      it = agents_.erase(it);
    } else {
      ++it;
    }
  }
}

std::vector<CrossingEvent> detect_crossings(std::span<const Track> tracks,
                                            const IntersectionGeometry& geometry,
                                            const PhaseSchedule& phases) {
  // Re-acquired instances of one external id form a single time-ordered path.
  std::map<std::string, std::vector<const Track*>> by_agent;
  for (const auto& tr : tracks) {
    if (tr.agent_class() == AgentClass::Pedestrian && !tr.empty()) {
      by_agent[tr.agent_id()].push_back(&tr);
    }
  }
  CrossingDetector detector(geometry, phases);
  std::vector<CrossingEvent> out;
  for (auto& [id, list] : by_agent) {
    std::sort(list.begin(), list.end(), [](const Track* a, const Track* b) {
      return a->points().front().t < b->points().front().t;
    });
    for (const Track* tr : list) {
      for (const auto& p : tr->points()) {
        auto events = detector.update(id, p);
        std::move(events.begin(), events.end(), std::back_inserter(out));
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const CrossingEvent& a, const CrossingEvent& b) {
    if (a.t_enter != b.t_enter) return a.t_enter < b.t_enter;
    return a.ped_id < b.ped_id;
  });
  return out;
}

// ---- the monitor stage ----------------------------------------------------

Monitor::Monitor(IntersectionGeometry geometry, PhaseSchedule phases, MonitorConfig config)
    : geometry_(std::move(geometry)),
      phases_(std::move(phases)),
      config_(config),
      assembler_(config.retire_gap_frames),
      conflicts_(geometry_, config_),
      crossings_(geometry_, phases_) {}

MonitorOutput Monitor::process(const FrameDetections& frame) {
  MonitorOutput out;
  for (const auto& retired : assembler_.push(frame)) {
    if (retired.agent_class() == AgentClass::Vehicle) {
      turns_.erase(retired.agent_id());
    }
  }

  std::vector<AgentState> peds;
  std::vector<AgentState> vehicles;
  for (const auto& d : frame.detections) {
    const Track* track = assembler_.live(d.agent_id);
    const TrackPoint& p = track->points().back();
    if (d.agent_class == AgentClass::Pedestrian) {
      auto events = crossings_.update(d.agent_id, p);
      std::move(events.begin(), events.end(), std::back_inserter(out.crossings));
    } else {
      auto [it, fresh] =
          turns_.try_emplace(d.agent_id, geometry_, config_.kinematics_window, config_.right_turn_deg);
      if (!fresh && track->points().size() == 1) {
        it->second = TurnTracker(geometry_, config_.kinematics_window, config_.right_turn_deg);
      }
      it->second.add(p);
      if (it->second.classification() != TurnClass::RightTurn) continue;
    }
    auto est = estimate_kinematics(*track, frame.t, config_.kinematics_window);
    if (!est.state) continue;
    (d.agent_class == AgentClass::Pedestrian ? peds : vehicles).push_back(std::move(*est.state));
  }

  out.conflicts = conflicts_.update(frame.t, peds, vehicles);

  if (++frames_seen_ % 200 == 0) {
    crossings_.forget_stale(frame.t, config_.stale_crossing_s);
  }
  return out;
}

MonitorOutput Monitor::finish() {
  MonitorOutput out;
  out.conflicts = conflicts_.finish();
  assembler_.finish();
  turns_.clear();
  return out;
}

}  // namespace pedwatch
