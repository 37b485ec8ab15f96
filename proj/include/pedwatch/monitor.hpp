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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pedwatch/core.hpp"
#include "pedwatch/ingest.hpp"

namespace pedwatch {

struct MonitorConfig {
  int retire_gap_frames = 30;         // G: missing frames tolerated before a track retires
  int kinematics_window = 5;          // W: points in the least-squares velocity fit
  double interaction_radius_m = 1.3;  // R: pedestrian 0.3 m + vehicle 1.0 m
  int episode_close_frames = 20;      // K: frames above 3 s that close an episode
  double right_turn_deg = 60.0;       // cumulative clockwise heading change
  double stale_crossing_s = 300.0;    // open crossings with no update for this long are dropped
};

/// Constant-velocity projection state of one agent at one instant.
struct AgentState {
  std::string agent_id;
  AgentClass agent_class = AgentClass::Pedestrian;
  Point2 pos;
  Point2 vel;  // m/s
  Timestamp t = 0.0;
};

// ---- trajectories ---------------------------------------------------------

class TrajectoryAssembler {
 public:
  explicit TrajectoryAssembler(int retire_gap_frames = 30);

  /// Applies one frame and returns the tracks it retired. A frame with a
  /// repeated agent id throws Error(InvalidArgument) and is not applied.
  std::vector<Track> push(const FrameDetections& frame);

  /// Retires every live track.
  std::vector<Track> finish();

  const Track* live(const std::string& agent_id) const;
  std::size_t live_count() const noexcept { return live_.size(); }

 private:
  struct LiveTrack {
    Track track;
    std::int64_t last_frame;
  };

  int gap_;
  std::map<std::string, LiveTrack> live_;
  std::map<std::string, bool> ever_seen_;
};

/// Rejected frames are logged and skipped.
std::vector<Track> assemble_trajectories(std::span<const FrameDetections> frames,
                                         int retire_gap_frames = 30);

// ---- kinematics -----------------------------------------------------------

struct KinematicEstimate {
  Kinematics kinematics;
  std::optional<AgentState> state;  // present when kinematics.valid
};

/// Least-squares velocity over the last `window` points at or before t.
KinematicEstimate estimate_kinematics(const Track& track, Timestamp t, int window = 5);
KinematicEstimate estimate_kinematics(std::span<const TrackPoint> points, const std::string& agent_id,
                                      AgentClass cls, Timestamp t, int window = 5);

// ---- turning --------------------------------------------------------------

enum class TurnClass { RightTurn, Other };

/// Incremental cumulative signed heading change inside the turn zones.
class TurnTracker {
 public:
  explicit TurnTracker(const IntersectionGeometry& geometry, int min_points = 5,
                       double right_turn_deg = 60.0);

  void add(const TrackPoint& p);
  TurnClass classification() const;
  double cumulative_heading_change() const noexcept { return cumulative_; }

 private:
  const IntersectionGeometry* geometry_;
  int min_points_;
  double threshold_rad_;
  std::optional<TrackPoint> prev_;
  bool prev_inside_ = false;
  std::optional<double> prev_heading_;
  int points_inside_ = 0;
  double cumulative_ = 0.0;
};

/// Throws Error(InvalidArgument) for a pedestrian track.
TurnClass classify_turn(const Track& track, const IntersectionGeometry& geometry, int window = 5,
                        double right_turn_deg = 60.0);

// ---- conflicts ------------------------------------------------------------

/// Smallest t > 0 with |dp + dv t| = radius under constant velocity. Agents
/// already within `radius` give the smallest positive double (0+).
std::optional<double> compute_ttc(const AgentState& ped, const AgentState& veh, double radius = 1.3);

struct InteractionEpisode {
  std::string ped_id;
  std::string veh_id;
  Timestamp t_open = 0.0;
  std::vector<std::pair<Timestamp, double>> samples;
  int frames_above = 0;
  bool open = true;
};

class ConflictDetector {
 public:
  ConflictDetector(const IntersectionGeometry& geometry, const MonitorConfig& config = {});

  /// `vehicles` must already be restricted to right-turning vehicles.
  std::vector<ConflictEvent> update(Timestamp t, std::span<const AgentState> peds,
                                    std::span<const AgentState> vehicles);

  std::vector<ConflictEvent> finish();

  std::size_t open_episodes() const noexcept { return episodes_.size(); }

 private:
  std::optional<std::size_t> zone_of(const Point2& p, std::size_t hint) const;
  static ConflictEvent close(const InteractionEpisode& e);

  const IntersectionGeometry* geometry_;
  MonitorConfig config_;
  std::map<std::pair<std::string, std::string>, InteractionEpisode> episodes_;
};

struct FrameStates {
  Timestamp t = 0.0;
  std::vector<AgentState> peds;
  std::vector<AgentState> vehicles;
};

std::vector<ConflictEvent> detect_conflicts(std::span<const FrameStates> frames,
                                            const IntersectionGeometry& geometry,
                                            const MonitorConfig& config = {});

// ---- crossings ------------------------------------------------------------

/// Follows each pedestrian (by external id, across re-acquired tracks)
/// through crosswalk polygons and emits a crossing on exit through the side
/// opposite its entry.
class CrossingDetector {
 public:
  CrossingDetector(const IntersectionGeometry& geometry, const PhaseSchedule& phases);
  // Both are held by reference.
  CrossingDetector(IntersectionGeometry&&, const PhaseSchedule&) = delete;
  CrossingDetector(const IntersectionGeometry&, PhaseSchedule&&) = delete;

  std::vector<CrossingEvent> update(const std::string& agent_id, const TrackPoint& p);

  /// Drops state for agents not updated since `now - max_age_s`.
  void forget_stale(Timestamp now, double max_age_s);

  std::size_t tracked_agents() const noexcept { return agents_.size(); }

 private:
  enum class Side { None, A, B };

  struct CrosswalkState {
    bool inside = false;
    Side entry = Side::None;
    Timestamp t_enter = 0.0;
  };

  struct AgentCrossings {
    TrackPoint last;
    std::vector<CrosswalkState> per_crosswalk;
  };

  CrossingEvent make_event(const std::string& agent_id, const Crosswalk& cw, Side entry,
                           Timestamp t_enter, Timestamp t_exit) const;

  const IntersectionGeometry* geometry_;
  const PhaseSchedule* phases_;
  std::map<std::string, AgentCrossings> agents_;
};

std::vector<CrossingEvent> detect_crossings(std::span<const Track> tracks,
                                            const IntersectionGeometry& geometry,
                                            const PhaseSchedule& phases);

// ---- the monitor stage ----------------------------------------------------

struct MonitorOutput {
  std::vector<CrossingEvent> crossings;
  std::vector<ConflictEvent> conflicts;
};

class Monitor {
 public:
  Monitor(IntersectionGeometry geometry, PhaseSchedule phases, MonitorConfig config = {});

  Monitor(const Monitor&) = delete;
  Monitor& operator=(const Monitor&) = delete;

  /// Throws Error(InvalidArgument) for frames with repeated agent ids.
  MonitorOutput process(const FrameDetections& frame);

  /// Closes open episodes and retires all tracks.
  MonitorOutput finish();

  PhaseSchedule& phases() noexcept { return phases_; }
  const IntersectionGeometry& geometry() const noexcept { return geometry_; }
  std::size_t live_tracks() const noexcept { return assembler_.live_count(); }

 private:
  IntersectionGeometry geometry_;
  PhaseSchedule phases_;
  MonitorConfig config_;
  TrajectoryAssembler assembler_;
  ConflictDetector conflicts_;
  CrossingDetector crossings_;
  std::map<std::string, TurnTracker> turns_;
  std::int64_t frames_seen_ = 0;
};

}  // namespace pedwatch
