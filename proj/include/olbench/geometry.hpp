// Copyright 2026 The olbench Authors
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

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "olbench/core.hpp"

namespace olbench
{

namespace detail
{

inline std::array<std::array<double, 2>, 2> box_axes(const OrientedBox & box)
{
  const double c = std::cos(box.heading);
  const double s = std::sin(box.heading);
  return {{{c, s}, {-s, c}}};
}

/// Signed gap between the projections of `a` and `b` on a unit axis; negative when they overlap.
inline double projected_gap(const OrientedBox & a, const OrientedBox & b, const std::array<double, 2> & axis)
{
  const auto radius = [&](const OrientedBox & box) {
    const auto ax = box_axes(box);
    return 0.5 * box.length * std::abs(ax[0][0] * axis[0] + ax[0][1] * axis[1]) +
           0.5 * box.width * std::abs(ax[1][0] * axis[0] + ax[1][1] * axis[1]);
  };
  const double center_dist = std::abs((b.cx - a.cx) * axis[0] + (b.cy - a.cy) * axis[1]);
  return center_dist - radius(a) - radius(b);
}

inline double point_segment_distance(
  const std::array<double, 2> & p, const std::array<double, 2> & s0, const std::array<double, 2> & s1)
{
  const double dx = s1[0] - s0[0];
  const double dy = s1[1] - s0[1];
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = std::clamp(((p[0] - s0[0]) * dx + (p[1] - s0[1]) * dy) / len2, 0.0, 1.0);
  }
  return std::hypot(p[0] - (s0[0] + t * dx), p[1] - (s0[1] + t * dy));
}

}  // namespace detail

/// Separating-axis test over the four edge normals. Touching boxes count as intersecting.
inline bool exact_intersects(const OrientedBox & a, const OrientedBox & b, double tol = 1e-12)
{
  for (const auto * box : {&a, &b}) {
    for (const auto & axis : detail::box_axes(*box)) {
      if (detail::projected_gap(a, b, axis) > tol) {
        return false;
      }
    }
  }
  return true;
}

/// Euclidean distance between two rectangles; 0 when they intersect.
inline double box_distance(const OrientedBox & a, const OrientedBox & b)
{
  if (exact_intersects(a, b, 0.0)) {
    return 0.0;
  }
  const auto ca = a.corners();
  const auto cb = b.corners();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      best = std::min(best, detail::point_segment_distance(ca[i], cb[j], cb[(j + 1) % 4]));
      best = std::min(best, detail::point_segment_distance(cb[i], ca[j], ca[(j + 1) % 4]));
    }
  }
  return best;
}

}  // namespace olbench
