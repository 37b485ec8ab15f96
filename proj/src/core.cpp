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

#include "pedwatch/core.hpp"

#include <cmath>
#include <set>

#include "pedwatch/error.hpp"
#include "pedwatch/geometry.hpp"

namespace pedwatch {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::DuplicateKey: return "duplicate key";
    case ErrorCode::NotFound: return "not found";
    case ErrorCode::Config: return "configuration error";
    case ErrorCode::Unavailable: return "unavailable";
    case ErrorCode::StreamOrder: return "stream order violation";
    case ErrorCode::Internal: return "internal error";
  }
  return "unknown";
}

std::string_view to_string(AgentClass c) {
  return c == AgentClass::Pedestrian ? "pedestrian" : "vehicle";
}

std::optional<AgentClass> agent_class_from_string(std::string_view text) {
  if (text == "pedestrian") return AgentClass::Pedestrian;
  if (text == "vehicle") return AgentClass::Vehicle;
  return std::nullopt;
}

Track::Track(std::string agent_id, AgentClass cls) : agent_id_(std::move(agent_id)), class_(cls) {}

Track::Track(std::string agent_id, AgentClass cls, std::vector<TrackPoint> points)
    : agent_id_(std::move(agent_id)), class_(cls) {
  points_.reserve(points.size());
  for (const auto& p : points) {
    append(p);
  }
}

void Track::append(const TrackPoint& p) {
  if (p.t < 0.0 || p.frame < 0 || !std::isfinite(p.pos.x) || !std::isfinite(p.pos.y)) {
    throw Error(ErrorCode::InvalidArgument, "invalid track point for agent '" + agent_id_ + "'");
  }
  if (!points_.empty() && (p.t <= points_.back().t || p.frame <= points_.back().frame)) {
    throw Error(ErrorCode::StreamOrder,
                "track points for agent '" + agent_id_ + "' must be strictly increasing");
  }
  points_.push_back(p);
}

const Crosswalk* IntersectionGeometry::find_crosswalk(std::string_view label) const {
  for (const auto& c : crosswalks) {
    if (c.label == label) return &c;
  }
  return nullptr;
}

namespace {

bool same_point(const Point2& a, const Point2& b) {
  return std::abs(a.x - b.x) <= 1e-9 && std::abs(a.y - b.y) <= 1e-9;
}

bool is_boundary_edge(const Segment& s, const Polygon& poly) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % poly.size()];
    if ((same_point(p, s.a) && same_point(q, s.b)) || (same_point(p, s.b) && same_point(q, s.a))) {
      return true;
    }
  }
  return false;
}

void check_polygon(const Polygon& poly, const std::string& what) {
  if (poly.size() < 3) {
    throw Error(ErrorCode::Config, what + " needs at least 3 vertices");
  }
  if (!is_simple_polygon(poly)) {
    throw Error(ErrorCode::Config, what + " is self-intersecting");
  }
}

}  // namespace

void IntersectionGeometry::validate() const {
  std::set<std::string> labels;
  for (const auto& c : crosswalks) {
    if (!labels.insert(c.label).second) {
      throw Error(ErrorCode::Config, "duplicate crosswalk label '" + c.label + "'");
    }
    check_polygon(c.polygon, "crosswalk '" + c.label + "' polygon");
    if (!is_boundary_edge(c.side_a, c.polygon) || !is_boundary_edge(c.side_b, c.polygon)) {
      throw Error(ErrorCode::Config,
                  "crosswalk '" + c.label + "' entry sides must be edges of its polygon");
    }
    if (segment_intersection(c.side_a.a, c.side_a.b, c.side_b.a, c.side_b.b)) {
      throw Error(ErrorCode::Config, "crosswalk '" + c.label + "' entry sides touch");
    }
  }
  for (std::size_t i = 0; i < conflict_zones.size(); ++i) {
    check_polygon(conflict_zones[i], "conflict zone " + std::to_string(i));
  }
  for (std::size_t i = 0; i < turn_zones.size(); ++i) {
    check_polygon(turn_zones[i], "turn zone " + std::to_string(i));
  }
  if (sunrise_minutes < 0 || sunset_minutes > 24 * 60 || sunrise_minutes >= sunset_minutes) {
    throw Error(ErrorCode::Config, "sunrise must precede sunset");
  }
}

std::string_view to_string(RainClass c) {
  switch (c) {
    case RainClass::None: return "none";
    case RainClass::Light: return "light";
    case RainClass::Moderate: return "moderate";
    case RainClass::Heavy: return "heavy";
  }
  return "none";
}

std::optional<RainClass> rain_class_from_string(std::string_view text) {
  if (text == "none") return RainClass::None;
  if (text == "light") return RainClass::Light;
  if (text == "moderate") return RainClass::Moderate;
  if (text == "heavy") return RainClass::Heavy;
  return std::nullopt;
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Serious: return "serious";
    case Severity::Slight: return "slight";
    case Severity::None: return "none";
  }
  return "none";
}

Severity classify_severity(double ttc_s) {
  if (ttc_s < kSeriousTtc) return Severity::Serious;
  if (ttc_s <= kSlightTtc) return Severity::Slight;
  return Severity::None;
}

std::string_view to_string(Direction d) {
  return d == Direction::AtoB ? "a_to_b" : "b_to_a";
}

std::string_view to_string(ReportSource s) {
  return s == ReportSource::Template ? "template" : "model";
}

}  // namespace pedwatch
