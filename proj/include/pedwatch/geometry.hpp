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

#include <optional>
#include <span>

#include "pedwatch/core.hpp"

namespace pedwatch {

/// Boundary points count as inside. Throws InvalidArgument for fewer than
/// three vertices.
bool point_in_polygon(const Point2& p, std::span<const Point2> poly);

/// (hx/w, hy/w) for h = H*(u,v,1). Throws InvalidArgument when w is zero.
Point2 apply_homography(const Homography& h, const Point2& image_point);

/// Throws InvalidArgument for a singular matrix.
Homography invert_homography(const Homography& h);

/// Counter-clockwise angle from +x in [0, 2pi). Throws InvalidArgument for
/// the zero vector.
double normalize_heading(double dx, double dy);

/// Wraps an angle difference into (-pi, pi].
double wrap_angle(double radians);

bool is_simple_polygon(std::span<const Point2> poly);

/// Parameter s in [0,1] along p->q where it meets segment a->b, if it does.
/// Collinear overlaps report the first shared point.
std::optional<double> segment_intersection(const Point2& p, const Point2& q, const Point2& a,
                                           const Point2& b);

double distance(const Point2& a, const Point2& b);

}  // namespace pedwatch
