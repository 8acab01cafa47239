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
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "olbench/core.hpp"
#include "olbench/geometry.hpp"
#include "olbench/rng.hpp"

namespace olbench
{

/// Raised for unreadable, malformed, or invalid dataset files.
class DataError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct Dataset
{
  std::vector<EgoSample> samples;
  std::string split_tag = "synthetic";

  friend bool operator==(const Dataset &, const Dataset &) = default;
};

struct Range
{
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const Range &, const Range &) = default;
};

struct SyntheticConfig
{
  std::size_t n_samples = 1000;
  double straight_fraction = 0.88;
  Range speed_range{1.0, 15.0};
  Range turn_radius_range{15.0, 80.0};
  double obstacle_density = 4.0;
  Range clearance_range{0.5, 10.0};
  std::uint64_t rng_seed = 0;
  // Clearance is measured from the ego footprint at each GT waypoint.
  double ego_length = 4.08;
  double ego_width = 1.85;
};

// ---------------------------------------------------------------------------
// JSON mapping

namespace detail
{

using ojson = nlohmann::ordered_json;

inline ojson pose_to_json(const Pose2 & p) { return ojson::array({p.x, p.y, p.theta}); }

inline ojson trajectory_to_json(const Trajectory & t)
{
  ojson arr = ojson::array();
  for (const auto & p : t.waypoints) {
    arr.push_back(pose_to_json(p));
  }
  return arr;
}

inline ojson box_to_json(const OrientedBox & b)
{
  ojson j;
  j["cx"] = b.cx;
  j["cy"] = b.cy;
  j["heading"] = b.heading;
  j["length"] = b.length;
  j["width"] = b.width;
  return j;
}

template <typename Json>
double number_field(const Json & j, const char * key, const std::string & where)
{
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_number()) {
    throw DataError(where + "." + key + ": missing or not a number");
  }
  return j.at(key).template get<double>();
}

template <typename Json>
Trajectory trajectory_from_json(const Json & j, const std::string & where)
{
  if (!j.is_array()) {
    throw DataError(where + ": expected an array of [x, y, theta]");
  }
  Trajectory t;
  for (const auto & p : j) {
    if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() ||
        !p[2].is_number()) {
      throw DataError(where + ": each pose must be [x, y, theta]");
    }
    t.waypoints.push_back({p[0].template get<double>(), p[1].template get<double>(),
                           normalize_angle(p[2].template get<double>())});
  }
  return t;
}

}  // namespace detail

inline nlohmann::ordered_json sample_to_json(const EgoSample & s)
{
  detail::ojson j;
  j["sample_id"] = s.sample_id;
  j["history"] = detail::trajectory_to_json(s.history);
  detail::ojson k;
  k["vx"] = s.kinematics.vx;
  k["vy"] = s.kinematics.vy;
  k["omega"] = s.kinematics.omega;
  k["ax"] = s.kinematics.ax;
  k["ay"] = s.kinematics.ay;
  k["beta"] = s.kinematics.beta;
  j["kinematics"] = std::move(k);
  j["command"] = std::string(to_string(s.command));
  j["gt_future"] = detail::trajectory_to_json(s.gt_future);
  detail::ojson frames = detail::ojson::array();
  for (const auto & frame : s.obstacles) {
    detail::ojson boxes = detail::ojson::array();
    for (const auto & b : frame) {
      boxes.push_back(detail::box_to_json(b));
    }
    frames.push_back(std::move(boxes));
  }
  j["obstacles"] = std::move(frames);
  return j;
}

/// Parses and validates one sample. A missing "command" is derived from the GT future.
inline EgoSample sample_from_json(const nlohmann::json & j)
{
  if (!j.is_object()) {
    throw DataError("sample must be a JSON object");
  }
  EgoSample s;
  if (!j.contains("sample_id") || !j.at("sample_id").is_string()) {
    throw DataError("sample_id: missing or not a string");
  }
  s.sample_id = j.at("sample_id").get<std::string>();
  const std::string where = "sample '" + s.sample_id + "'";
  for (const char * key : {"history", "kinematics", "gt_future", "obstacles"}) {
    if (!j.contains(key)) {
      throw DataError(where + ": missing field '" + key + "'");
    }
  }
  s.history = detail::trajectory_from_json(j.at("history"), where + ": history");
  s.gt_future = detail::trajectory_from_json(j.at("gt_future"), where + ": gt_future");
  const auto & k = j.at("kinematics");
  const std::string kw = where + ": kinematics";
  s.kinematics = {detail::number_field(k, "vx", kw), detail::number_field(k, "vy", kw),
                  detail::number_field(k, "omega", kw), detail::number_field(k, "ax", kw),
                  detail::number_field(k, "ay", kw), detail::number_field(k, "beta", kw)};
  const auto & frames = j.at("obstacles");
  if (!frames.is_array()) {
    throw DataError(where + ": obstacles: expected an array of per-frame box lists");
  }
  for (const auto & frame : frames) {
    if (!frame.is_array()) {
      throw DataError(where + ": obstacles: each frame must be an array of boxes");
    }
    std::vector<OrientedBox> boxes;
    for (const auto & b : frame) {
      const std::string bw = where + ": obstacles";
      boxes.push_back({detail::number_field(b, "cx", bw), detail::number_field(b, "cy", bw),
                       normalize_angle(detail::number_field(b, "heading", bw)),
                       detail::number_field(b, "length", bw), detail::number_field(b, "width", bw)});
    }
    s.obstacles.push_back(std::move(boxes));
  }
  try {
    validate(s);
    if (j.contains("command") && !j.at("command").is_null()) {
      if (!j.at("command").is_string()) {
        throw std::invalid_argument("sample '" + s.sample_id + "': command: not a string");
      }
      s.command = command_from_string(j.at("command").get<std::string>());
    } else {
      s.command = derive_command(s.gt_future);
    }
  } catch (const std::invalid_argument & e) {
    throw DataError(e.what());
  }
  return s;
}

inline Dataset load_dataset(const std::string & path, std::string split_tag = "synthetic")
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open dataset '" + path + "'");
  }
  Dataset ds;
  ds.split_tag = std::move(split_tag);
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error & e) {
      throw DataError(where + "parse error: " + e.what());
    }
    try {
      ds.samples.push_back(sample_from_json(j));
    } catch (const DataError & e) {
      throw DataError(where + e.what());
    }
    if (!seen.insert(ds.samples.back().sample_id).second) {
      throw DataError(where + "duplicate sample_id '" + ds.samples.back().sample_id + "'");
    }
  }
  return ds;
}

inline void write_dataset(const Dataset & ds, const std::string & path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write dataset '" + path + "'");
  }
  for (const auto & s : ds.samples) {
    out << sample_to_json(s).dump() << '\n';
  }
  out.flush();
  if (!out) {
    throw DataError("write failed for '" + path + "'");
  }
}

// ---------------------------------------------------------------------------
// Synthetic scenarios

/// Pose after `t` seconds of constant-speed motion with signed curvature, starting at the origin.
inline Pose2 rollout_pose(double speed, double curvature, double t)
{
  if (curvature == 0.0) {
    return {speed * t, 0.0, 0.0};
  }
  const double phi = curvature * speed * t;
  return {std::sin(phi) / curvature, (1.0 - std::cos(phi)) / curvature, normalize_angle(phi)};
}

inline OrientedBox ego_box_at(const Pose2 & pose, double length, double width)
{
  return {pose.x, pose.y, pose.theta, length, width};
}

/// Smallest distance between the obstacle and the ego footprint over the GT future.
inline double path_clearance(const Trajectory & future, const OrientedBox & obstacle, double ego_length,
                             double ego_width)
{
  double best = std::numeric_limits<double>::infinity();
  for (const auto & p : future.waypoints) {
    best = std::min(best, box_distance(ego_box_at(p, ego_length, ego_width), obstacle));
  }
  return best;
}

namespace detail
{

// Obstacles must stay inside the nominal evaluation extent.
inline constexpr double kSceneXMin = -20.0;
inline constexpr double kSceneXMax = 60.0;
inline constexpr double kSceneYMin = -40.0;
inline constexpr double kSceneYMax = 40.0;
inline constexpr double kMaxClearance = 20.0;

inline void check_config(const SyntheticConfig & cfg)
{
  const auto bad = [](const std::string & field, const std::string & what) {
    throw std::invalid_argument("SyntheticConfig." + field + ": " + what);
  };
  if (!(cfg.straight_fraction >= 0.0 && cfg.straight_fraction <= 1.0)) {
    bad("straight_fraction", "must lie in [0, 1]");
  }
  if (!(cfg.speed_range.lo >= 0.0 && cfg.speed_range.lo <= cfg.speed_range.hi)) {
    bad("speed_range", "must satisfy 0 <= lo <= hi");
  }
  if (!(cfg.turn_radius_range.lo > 0.0 && cfg.turn_radius_range.lo <= cfg.turn_radius_range.hi)) {
    bad("turn_radius_range", "must satisfy 0 < lo <= hi");
  }
  if (!(cfg.obstacle_density >= 0.0)) {
    bad("obstacle_density", "must be >= 0");
  }
  if (!(cfg.clearance_range.lo >= 0.0 && cfg.clearance_range.lo <= cfg.clearance_range.hi)) {
    bad("clearance_range", "must satisfy 0 <= lo <= hi");
  }
  if (cfg.clearance_range.hi > kMaxClearance) {
    bad("clearance_range", "infeasible: clearance exceeds the scene extent (max " +
                             std::to_string(kMaxClearance) + " m)");
  }
  if (!(cfg.ego_length > 0.0 && cfg.ego_width > 0.0)) {
    bad("ego_length/ego_width", "must be positive");
  }
}

inline bool inside_scene(const OrientedBox & box)
{
  for (const auto & c : box.corners()) {
    if (c[0] < kSceneXMin || c[0] > kSceneXMax || c[1] < kSceneYMin || c[1] > kSceneYMax) {
      return false;
    }
  }
  return true;
}

/// Extent of a box projected on a unit direction, measured from its center.
inline double half_extent(const OrientedBox & box, double ux, double uy)
{
  const double c = std::cos(box.heading);
  const double s = std::sin(box.heading);
  return 0.5 * box.length * std::abs(c * ux + s * uy) + 0.5 * box.width * std::abs(-s * ux + c * uy);
}

/// Moves `box` along `dir` from `anchor` (plus a fixed `shift`) until its clearance to the
/// ego path equals `target`.
inline void settle(OrientedBox & box, const Pose2 & anchor, std::array<double, 2> dir, std::array<double, 2> shift,
                   double ego_half, double target, const Trajectory & future, double ego_length, double ego_width)
{
  double offset = ego_half + target + half_extent(box, dir[0], dir[1]);
  for (int iter = 0; iter < 40; ++iter) {
    box.cx = anchor.x + dir[0] * offset + shift[0];
    box.cy = anchor.y + dir[1] * offset + shift[1];
    const double gap = path_clearance(future, box, ego_length, ego_width);
    if (std::abs(gap - target) < 1e-9) {
      break;
    }
    // Overlap reports 0, so push out by at least the target.
    offset += gap > 0.0 ? target - gap : target + 0.1;
  }
}

/// Places one obstacle whose path clearance lies in the configured band, or returns false.
inline bool place_obstacle(Rng & rng, const SyntheticConfig & cfg, const Trajectory & future, OrientedBox & out)
{
  const bool vehicle = rng.bernoulli(0.7);
  const double target = rng.uniform(cfg.clearance_range.lo, cfg.clearance_range.hi);
  const bool ahead = rng.bernoulli(0.15);
  const auto anchor_idx = ahead ? future.size() - 1 : static_cast<std::size_t>(rng.below(future.size()));
  const Pose2 & anchor = future[anchor_idx];
  const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;

  OrientedBox box;
  if (vehicle) {
    box.length = rng.uniform(3.8, 5.0);
    box.width = rng.uniform(1.7, 2.1);
    box.heading = normalize_angle(anchor.theta + 0.05 * rng.normal());
  } else {
    box.length = rng.uniform(0.5, 0.9);
    box.width = rng.uniform(0.5, 0.9);
    box.heading = rng.uniform(-std::numbers::pi, std::numbers::pi);
  }
  const double tx = std::cos(anchor.theta);
  const double ty = std::sin(anchor.theta);
  // Offset direction (unit) and a small slide along the perpendicular.
  double dx = -ty * side;
  double dy = tx * side;
  double ego_half = 0.5 * cfg.ego_width;
  double slide = rng.uniform(-1.0, 1.0);
  double sx = tx;
  double sy = ty;
  if (ahead) {
    dx = tx;
    dy = ty;
    ego_half = 0.5 * cfg.ego_length;
    sx = -ty;
    sy = tx;
    slide = rng.uniform(-0.5, 0.5);
  }
  settle(box, anchor, {dx, dy}, {sx * slide, sy * slide}, ego_half, target, future, cfg.ego_length,
         cfg.ego_width);
  const double gap = path_clearance(future, box, cfg.ego_length, cfg.ego_width);
  if (gap < cfg.clearance_range.lo || gap > cfg.clearance_range.hi) {
    return false;
  }
  if (!inside_scene(box)) {
    return false;
  }
  out = box;
  return true;
}

inline EgoSample arc_sample(const char * prefix, std::size_t n, double speed, double curvature)
{
  EgoSample s;
  char id[32];
  std::snprintf(id, sizeof(id), "%s-%06zu", prefix, n);
  s.sample_id = id;
  for (std::size_t i = 0; i < kHistoryFrames; ++i) {
    const double t = -kStepPeriod * static_cast<double>(kHistoryFrames - 1 - i);
    s.history.waypoints.push_back(rollout_pose(speed, curvature, t));
  }
  s.history.waypoints.back() = Pose2{};
  for (std::size_t i = 1; i <= kFutureFrames; ++i) {
    s.gt_future.waypoints.push_back(rollout_pose(speed, curvature, kStepPeriod * static_cast<double>(i)));
  }
  s.kinematics = {speed, 0.0, curvature * speed, 0.0, curvature * speed * speed, 0.0};
  s.command = derive_command(s.gt_future);
  return s;
}

}  // namespace detail

/// Straight lines and constant-curvature arcs with static obstacles at controlled clearance.
inline Dataset generate_synthetic(const SyntheticConfig & cfg)
{
  detail::check_config(cfg);
  Rng rng(cfg.rng_seed);
  Dataset ds;
  ds.split_tag = "synthetic";
  ds.samples.reserve(cfg.n_samples);
  const double horizon = kStepPeriod * static_cast<double>(kFutureFrames);

  for (std::size_t n = 0; n < cfg.n_samples; ++n) {
    const bool straight = rng.bernoulli(cfg.straight_fraction);
    double speed = rng.uniform(cfg.speed_range.lo, cfg.speed_range.hi);
    double curvature = 0.0;
    if (!straight) {
      const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
      // A turning sample must read as a turn (|y(3 s)| > 2 m) and stay within a quarter turn.
      bool found = false;
      for (int attempt = 0; attempt < 1000 && !found; ++attempt) {
        const double radius = rng.uniform(cfg.turn_radius_range.lo, cfg.turn_radius_range.hi);
        const double end_y = std::abs(rollout_pose(speed, 1.0 / radius, horizon).y);
        if (end_y > kTurnThreshold && speed * horizon / radius <= 0.5 * std::numbers::pi) {
          curvature = sign / radius;
          found = true;
        } else {
          speed = rng.uniform(cfg.speed_range.lo, cfg.speed_range.hi);
        }
      }
      if (!found) {
        throw std::invalid_argument(
          "SyntheticConfig: infeasible turn: speed_range/turn_radius_range cannot produce a >2 m "
          "lateral displacement within a quarter turn");
      }
    }

    auto s = detail::arc_sample("syn", n, speed, curvature);

    std::vector<OrientedBox> boxes;
    const auto count = rng.poisson(cfg.obstacle_density);
    for (std::uint64_t k = 0; k < count; ++k) {
      for (int attempt = 0; attempt < 20; ++attempt) {
        OrientedBox box;
        if (detail::place_obstacle(rng, cfg, s.gt_future, box)) {
          boxes.push_back(box);
          break;
        }
      }
    }
    s.obstacles.assign(kFutureFrames, boxes);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

/// Scenes built to sit just outside collision: gently curved paths with one vehicle parked
/// to the right of a random waypoint, parallel to it, at a clearance drawn from the band.
struct NearMissConfig
{
  std::size_t n_samples = 500;
  Range clearance_range{0.2, 0.4};
  Range speed_range{2.0, 12.0};
  double max_curvature = 0.02;
  std::uint64_t rng_seed = 0;
  double ego_length = 4.08;
  double ego_width = 1.85;
};

inline Dataset generate_near_miss(const NearMissConfig & cfg)
{
  if (!(cfg.clearance_range.lo > 0.0 && cfg.clearance_range.lo <= cfg.clearance_range.hi)) {
    throw std::invalid_argument("NearMissConfig.clearance_range: must satisfy 0 < lo <= hi");
  }
  if (cfg.clearance_range.hi > detail::kMaxClearance) {
    throw std::invalid_argument("NearMissConfig.clearance_range: infeasible: clearance exceeds the scene extent");
  }
  if (!(cfg.speed_range.lo > 0.0 && cfg.speed_range.lo <= cfg.speed_range.hi)) {
    throw std::invalid_argument("NearMissConfig.speed_range: must satisfy 0 < lo <= hi");
  }
  if (!(cfg.max_curvature >= 0.0) || !(cfg.ego_length > 0.0 && cfg.ego_width > 0.0)) {
    throw std::invalid_argument("NearMissConfig: max_curvature must be >= 0 and ego dimensions positive");
  }
  Rng rng(cfg.rng_seed);
  Dataset ds;
  ds.split_tag = "near-miss";
  ds.samples.reserve(cfg.n_samples);
  for (std::size_t n = 0; n < cfg.n_samples; ++n) {
    for (int attempt = 0;; ++attempt) {
      if (attempt == 1000) {
        throw std::invalid_argument("NearMissConfig: could not place an obstacle inside the clearance band");
      }
      const double speed = rng.uniform(cfg.speed_range.lo, cfg.speed_range.hi);
      const double curvature = rng.uniform(-cfg.max_curvature, cfg.max_curvature);
      auto s = detail::arc_sample("nm", n, speed, curvature);
      const double target = rng.uniform(cfg.clearance_range.lo, cfg.clearance_range.hi);
      const Pose2 & anchor = s.gt_future[static_cast<std::size_t>(rng.below(kFutureFrames))];
      OrientedBox box;
      box.length = rng.uniform(3.8, 5.0);
      box.width = rng.uniform(1.7, 2.1);
      box.heading = anchor.theta;
      const double c = std::cos(anchor.theta);
      const double sn = std::sin(anchor.theta);
      detail::settle(box, anchor, {sn, -c}, {0.0, 0.0}, 0.5 * cfg.ego_width, target, s.gt_future,
                     cfg.ego_length, cfg.ego_width);
      const double gap = path_clearance(s.gt_future, box, cfg.ego_length, cfg.ego_width);
      if (gap < cfg.clearance_range.lo || gap > cfg.clearance_range.hi || !detail::inside_scene(box)) {
        continue;
      }
      s.obstacles.assign(kFutureFrames, {box});
      ds.samples.push_back(std::move(s));
      break;
    }
  }
  return ds;
}

}  // namespace olbench
