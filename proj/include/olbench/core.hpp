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

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace olbench
{

/// Past frames fed to the planner (current frame included).
inline constexpr std::size_t kHistoryFrames = 4;
/// Future frames predicted and evaluated (3 s at 2 Hz).
inline constexpr std::size_t kFutureFrames = 6;
/// Seconds between key frames.
inline constexpr double kStepPeriod = 0.5;
/// Lateral displacement at the 3 s waypoint above which a turn command is issued.
inline constexpr double kTurnThreshold = 2.0;

/// Wraps an angle into (-pi, pi]. Values already in range are returned bit-identical.
inline double normalize_angle(double theta)
{
  constexpr double pi = std::numbers::pi;
  if (theta > -pi && theta <= pi) {
    return theta;
  }
  double wrapped = std::remainder(theta, 2.0 * pi);
  if (wrapped <= -pi) {
    wrapped += 2.0 * pi;
  }
  return wrapped;
}

/// Pose in the current-ego frame: x forward, y left, theta counter-clockwise.
struct Pose2
{
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  friend bool operator==(const Pose2 &, const Pose2 &) = default;
};

struct Kinematics
{
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;
  double ax = 0.0;
  double ay = 0.0;
  double beta = 0.0;

  friend bool operator==(const Kinematics &, const Kinematics &) = default;
};

enum class Command { TurnLeft, GoStraight, TurnRight };

/// One-hot in (left, straight, right) order.
inline std::array<double, 3> one_hot(Command cmd)
{
  switch (cmd) {
    case Command::TurnLeft:
      return {1.0, 0.0, 0.0};
    case Command::GoStraight:
      return {0.0, 1.0, 0.0};
    case Command::TurnRight:
      return {0.0, 0.0, 1.0};
  }
  return {0.0, 1.0, 0.0};
}

inline std::string_view to_string(Command cmd)
{
  switch (cmd) {
    case Command::TurnLeft:
      return "left";
    case Command::GoStraight:
      return "straight";
    case Command::TurnRight:
      return "right";
  }
  return "straight";
}

inline Command command_from_string(std::string_view name)
{
  if (name == "left") {
    return Command::TurnLeft;
  }
  if (name == "straight") {
    return Command::GoStraight;
  }
  if (name == "right") {
    return Command::TurnRight;
  }
  throw std::invalid_argument("unknown command '" + std::string(name) + "'");
}

inline Command mirror(Command cmd)
{
  switch (cmd) {
    case Command::TurnLeft:
      return Command::TurnRight;
    case Command::TurnRight:
      return Command::TurnLeft;
    default:
      return cmd;
  }
}

struct Trajectory
{
  std::vector<Pose2> waypoints;
  double period = kStepPeriod;

  std::size_t size() const { return waypoints.size(); }
  const Pose2 & operator[](std::size_t i) const { return waypoints[i]; }
  Pose2 & operator[](std::size_t i) { return waypoints[i]; }

  friend bool operator==(const Trajectory &, const Trajectory &) = default;
};

/// Rectangle in the BEV plane. `length` runs along `heading`.
struct OrientedBox
{
  double cx = 0.0;
  double cy = 0.0;
  double heading = 0.0;
  double length = 1.0;
  double width = 1.0;

  friend bool operator==(const OrientedBox &, const OrientedBox &) = default;

  /// Corners in counter-clockwise order starting at rear-right.
  std::array<std::array<double, 2>, 4> corners() const
  {
    const double c = std::cos(heading);
    const double s = std::sin(heading);
    const double hl = 0.5 * length;
    const double hw = 0.5 * width;
    const std::array<std::array<double, 2>, 4> local{{{-hl, -hw}, {hl, -hw}, {hl, hw}, {-hl, hw}}};
    std::array<std::array<double, 2>, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) {
      out[i] = {cx + c * local[i][0] - s * local[i][1], cy + s * local[i][0] + c * local[i][1]};
    }
    return out;
  }

  /// Containment with an absolute tolerance on the boundary.
  bool contains(double px, double py, double tol = 1e-12) const
  {
    const double dx = px - cx;
    const double dy = py - cy;
    const double c = std::cos(heading);
    const double s = std::sin(heading);
    const double along = c * dx + s * dy;
    const double across = -s * dx + c * dy;
    return std::abs(along) <= 0.5 * length + tol && std::abs(across) <= 0.5 * width + tol;
  }
};

struct EgoSample
{
  std::string sample_id;
  Trajectory history;
  Kinematics kinematics;
  Command command = Command::GoStraight;
  Trajectory gt_future;
  std::vector<std::vector<OrientedBox>> obstacles;

  friend bool operator==(const EgoSample &, const EgoSample &) = default;
};

/// Throws std::invalid_argument naming the offending field.
inline void validate(const EgoSample & sample)
{
  const auto fail = [&](const std::string & field, const std::string & what) {
    throw std::invalid_argument("sample '" + sample.sample_id + "': " + field + ": " + what);
  };
  const auto finite_pose = [](const Pose2 & p) {
    return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.theta);
  };
  if (sample.history.size() != kHistoryFrames) {
    fail("history", "expected " + std::to_string(kHistoryFrames) + " poses (T_p), got " +
                      std::to_string(sample.history.size()));
  }
  if (sample.history.waypoints.back() != Pose2{}) {
    fail("history", "current (last) pose must be exactly (0, 0, 0)");
  }
  if (sample.gt_future.size() != kFutureFrames) {
    fail("gt_future", "expected " + std::to_string(kFutureFrames) + " poses (T_f), got " +
                        std::to_string(sample.gt_future.size()));
  }
  if (sample.obstacles.size() != kFutureFrames) {
    fail("obstacles", "expected " + std::to_string(kFutureFrames) + " frames, got " +
                        std::to_string(sample.obstacles.size()));
  }
  for (const auto & p : sample.history.waypoints) {
    if (!finite_pose(p)) {
      fail("history", "non-finite value");
    }
  }
  for (const auto & p : sample.gt_future.waypoints) {
    if (!finite_pose(p)) {
      fail("gt_future", "non-finite value");
    }
  }
  const auto & k = sample.kinematics;
  for (double v : {k.vx, k.vy, k.omega, k.ax, k.ay, k.beta}) {
    if (!std::isfinite(v)) {
      fail("kinematics", "non-finite value");
    }
  }
  for (const auto & frame : sample.obstacles) {
    for (const auto & box : frame) {
      if (!(box.length > 0.0) || !(box.width > 0.0)) {
        fail("obstacles", "box length and width must be positive");
      }
      if (!std::isfinite(box.cx) || !std::isfinite(box.cy) || !std::isfinite(box.heading) ||
          !std::isfinite(box.length) || !std::isfinite(box.width)) {
        fail("obstacles", "non-finite value");
      }
    }
  }
}

/// Left/right when the final waypoint is displaced strictly more than 2 m laterally.
inline Command derive_command(const Trajectory & gt_future)
{
  if (gt_future.size() < kFutureFrames) {
    throw std::invalid_argument(
      "derive_command: need " + std::to_string(kFutureFrames) + " waypoints, got " +
      std::to_string(gt_future.size()));
  }
  const double lateral = gt_future.waypoints.back().y;
  if (lateral > kTurnThreshold) {
    return Command::TurnLeft;
  }
  if (lateral < -kTurnThreshold) {
    return Command::TurnRight;
  }
  return Command::GoStraight;
}

inline std::vector<double> heading_angles(const Trajectory & traj)
{
  std::vector<double> out;
  out.reserve(traj.size());
  for (const auto & p : traj.waypoints) {
    out.push_back(normalize_angle(p.theta));
  }
  return out;
}

/// Signed turn angle at each interior waypoint between the incoming and outgoing
/// segment directions. A zero-length segment yields 0 at the adjacent vertices.
inline std::vector<double> curvature_angles(const Trajectory & traj)
{
  if (traj.size() < 3) {
    throw std::invalid_argument("curvature_angles: need at least 3 waypoints");
  }
  std::vector<double> out;
  out.reserve(traj.size() - 2);
  for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
    const double ax = traj[i].x - traj[i - 1].x;
    const double ay = traj[i].y - traj[i - 1].y;
    const double bx = traj[i + 1].x - traj[i].x;
    const double by = traj[i + 1].y - traj[i].y;
    if ((ax == 0.0 && ay == 0.0) || (bx == 0.0 && by == 0.0)) {
      out.push_back(0.0);
      continue;
    }
    out.push_back(std::atan2(ax * by - ay * bx, ax * bx + ay * by));
  }
  return out;
}

}  // namespace olbench
