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

#include "pedwatch/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pedwatch/error.hpp"

namespace pedwatch {
namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(const Point2& p, const Point2& a, const Point2& b) {
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  constexpr double tol = 1e-9;
  if (std::abs(cross(a, b, p)) > tol * std::max(1.0, len)) {
    return false;
  }
  return p.x >= std::min(a.x, b.x) - tol && p.x <= std::max(a.x, b.x) + tol &&
         p.y >= std::min(a.y, b.y) - tol && p.y <= std::max(a.y, b.y) + tol;
}

}  // namespace

bool point_in_polygon(const Point2& p, std::span<const Point2> poly) {
  if (poly.size() < 3) {
    throw Error(ErrorCode::InvalidArgument, "polygon needs at least 3 vertices");
  }
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point2& a = poly[i];
    const Point2& b = poly[j];
    if (on_segment(p, a, b)) {
      return true;
    }
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) {
        inside = !inside;
      }
    }
  }
  return inside;
}

Point2 apply_homography(const Homography& h, const Point2& q) {
  const double w = h[6] * q.x + h[7] * q.y + h[8];
  if (w == 0.0 || !std::isfinite(w)) {
    throw Error(ErrorCode::InvalidArgument, "point maps to infinity under homography");
  }
  return {(h[0] * q.x + h[1] * q.y + h[2]) / w, (h[3] * q.x + h[4] * q.y + h[5]) / w};
}

Homography invert_homography(const Homography& m) {
  const double c00 = m[4] * m[8] - m[5] * m[7];
  const double c01 = m[5] * m[6] - m[3] * m[8];
  const double c02 = m[3] * m[7] - m[4] * m[6];
  const double det = m[0] * c00 + m[1] * c01 + m[2] * c02;
  if (det == 0.0 || !std::isfinite(det)) {
    throw Error(ErrorCode::InvalidArgument, "homography is singular");
  }
  const double inv = 1.0 / det;
  return {c00 * inv,
          (m[2] * m[7] - m[1] * m[8]) * inv,
          (m[1] * m[5] - m[2] * m[4]) * inv,
          c01 * inv,
          (m[0] * m[8] - m[2] * m[6]) * inv,
          (m[2] * m[3] - m[0] * m[5]) * inv,
          c02 * inv,
          (m[1] * m[6] - m[0] * m[7]) * inv,
          (m[0] * m[4] - m[1] * m[3]) * inv};
}

double normalize_heading(double dx, double dy) {
  if (dx == 0.0 && dy == 0.0) {
    throw Error(ErrorCode::InvalidArgument, "heading of a zero vector is undefined");
  }
  double a = std::atan2(dy, dx);
  if (a < 0.0) {
    a += 2.0 * std::numbers::pi;
  }
  if (a >= 2.0 * std::numbers::pi) {
    a = 0.0;
  }
  return a;
}

double wrap_angle(double r) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  r = std::fmod(r, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  if (r > std::numbers::pi) r -= two_pi;
  return r;
}

std::optional<double> segment_intersection(const Point2& p, const Point2& q, const Point2& a,
                                           const Point2& b) {
  const double rx = q.x - p.x, ry = q.y - p.y;
  const double sx = b.x - a.x, sy = b.y - a.y;
  const double denom = rx * sy - ry * sx;
  const double qpx = a.x - p.x, qpy = a.y - p.y;
  if (denom == 0.0) {
    if (qpx * ry - qpy * rx != 0.0) {
      return std::nullopt;  // parallel, not collinear
    }
    const double rr = rx * rx + ry * ry;
    if (rr == 0.0) {
      return on_segment(p, a, b) ? std::optional<double>(0.0) : std::nullopt;
    }
    const double t0 = (qpx * rx + qpy * ry) / rr;
    const double t1 = t0 + (sx * rx + sy * ry) / rr;
    const double lo = std::max(0.0, std::min(t0, t1));
    const double hi = std::min(1.0, std::max(t0, t1));
    if (lo > hi) return std::nullopt;
    return lo;
  }
  const double t = (qpx * sy - qpy * sx) / denom;
  const double u = (qpx * ry - qpy * rx) / denom;
  if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) {
    return std::nullopt;
  }
  return t;
}

bool is_simple_polygon(std::span<const Point2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % n];
    if (a == b) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      const Point2& c = poly[j];
      const Point2& d = poly[(j + 1) % n];
      if (adjacent) {
        // Adjacent edges may only share their common vertex.
        const Point2& shared = (j == i + 1) ? b : a;
        const Point2& far_other = (j == i + 1) ? d : c;
        const Point2& far_self = (j == i + 1) ? a : b;
        if (std::abs(cross(shared, far_self, far_other)) == 0.0 &&
            ((far_other.x - shared.x) * (far_self.x - shared.x) +
             (far_other.y - shared.y) * (far_self.y - shared.y)) > 0.0) {
          return false;  // folds back onto itself
        }
        continue;
      }
      if (segment_intersection(a, b, c, d)) {
        return false;
      }
    }
  }
  return true;
}

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace pedwatch
