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
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "olbench/core.hpp"
#include "olbench/dataio.hpp"
#include "olbench/geometry.hpp"

namespace olbench
{

struct EgoSpec
{
  double length = 4.08;
  double width = 1.85;

  void validate() const
  {
    if (!(length > 0.0) || !(width > 0.0)) {
      throw std::invalid_argument("EgoSpec: length and width must be positive");
    }
  }
};

/// Number of 1 s horizons covered by `frames` future frames at 2 Hz.
inline std::size_t horizon_count(std::size_t frames)
{
  if (frames < 2 || frames > kFutureFrames || frames % 2 != 0) {
    throw std::invalid_argument("horizon frames must be an even number in [2, " + std::to_string(kFutureFrames) + "]");
  }
  return frames / 2;
}

// ---------------------------------------------------------------------------
// L2 error

enum class L2Variant {
  kMeanOverHorizon,  ///< mean displacement over waypoints 1..2h
  kEndpoint,         ///< displacement at waypoint 2h only
};

struct HorizonErrors
{
  std::vector<double> per_horizon;
  double avg = 0.0;
};

/// Euclidean (x, y) error per horizon; theta is ignored.
inline HorizonErrors l2_errors(
  const Trajectory & pred, const Trajectory & gt, std::size_t frames = kFutureFrames,
  L2Variant variant = L2Variant::kMeanOverHorizon)
{
  const std::size_t horizons = horizon_count(frames);
  if (pred.size() != gt.size() || pred.size() < frames) {
    throw std::invalid_argument(
      "l2_errors: need two trajectories of at least " + std::to_string(frames) + " waypoints and equal length");
  }
  HorizonErrors e;
  double running = 0.0;
  for (std::size_t i = 0; i < frames; ++i) {
    const double d = std::hypot(pred[i].x - gt[i].x, pred[i].y - gt[i].y);
    running += d;
    if ((i + 1) % 2 == 0) {
      e.per_horizon.push_back(variant == L2Variant::kEndpoint ? d : running / static_cast<double>(i + 1));
    }
  }
  for (double v : e.per_horizon) {
    e.avg += v;
  }
  e.avg /= static_cast<double>(horizons);
  return e;
}

// ---------------------------------------------------------------------------
// Occupancy grid

/// Nominal evaluation window around the current ego pose, in meters.
struct GridExtent
{
  double x_min = -20.0;
  double x_max = 60.0;
  double y_min = -40.0;
  double y_max = 40.0;
};

/// Index of the absolute bin [k*g, (k+1)*g) holding v. The slack absorbs representation
/// error for values that sit on a bin edge (0.3 / 0.1 = 2.9999999999999996).
inline std::int64_t grid_bin(double v, double g)
{
  return static_cast<std::int64_t>(std::floor(v / g + 1e-9));
}

struct Cell
{
  std::int64_t i = 0;
  std::int64_t j = 0;

  friend auto operator<=>(const Cell &, const Cell &) = default;
};

/// Binary BEV raster. Cell (i, j) covers [x_min + i*g, x_min + (i+1)*g) x [y_min + j*g, ...).
/// The nominal extent is grown outward to whole cells with 0 on a cell boundary.
class OccupancyGrid
{
public:
  explicit OccupancyGrid(double grid_size, const GridExtent & extent = {}) : g_(grid_size)
  {
    if (!(grid_size > 0.0)) {
      throw std::invalid_argument("OccupancyGrid: grid_size must be > 0");
    }
    if (!(extent.x_min < extent.x_max && extent.y_min < extent.y_max)) {
      throw std::invalid_argument("OccupancyGrid: empty extent");
    }
    i0_ = grid_bin(extent.x_min, g_);
    j0_ = grid_bin(extent.y_min, g_);
    nx_ = static_cast<std::size_t>(static_cast<std::int64_t>(std::ceil(extent.x_max / g_ - 1e-9)) - i0_);
    ny_ = static_cast<std::size_t>(static_cast<std::int64_t>(std::ceil(extent.y_max / g_ - 1e-9)) - j0_);
    cells_.assign(nx_ * ny_, 0);
  }

  double grid_size() const { return g_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  double x_min() const { return static_cast<double>(i0_) * g_; }
  double x_max() const { return static_cast<double>(i0_ + static_cast<std::int64_t>(nx_)) * g_; }
  double y_min() const { return static_cast<double>(j0_) * g_; }
  double y_max() const { return static_cast<double>(j0_ + static_cast<std::int64_t>(ny_)) * g_; }

  double center_x(std::int64_t i) const { return (static_cast<double>(i0_ + i) + 0.5) * g_; }
  double center_y(std::int64_t j) const { return (static_cast<double>(j0_ + j) + 0.5) * g_; }

  bool in_bounds(const Cell & c) const
  {
    return c.i >= 0 && c.j >= 0 && c.i < static_cast<std::int64_t>(nx_) && c.j < static_cast<std::int64_t>(ny_);
  }

  bool occupied(const Cell & c) const { return in_bounds(c) && cells_[index(c)] != 0; }

  void mark(const Cell & c)
  {
    if (in_bounds(c)) {
      cells_[index(c)] = 1;
    }
  }

  std::size_t count() const { return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1)); }

  /// Local index range of cells whose centers may fall in [lo, hi] along x (or y).
  std::pair<std::int64_t, std::int64_t> x_range(double lo, double hi) const { return range(lo, hi, i0_, nx_); }
  std::pair<std::int64_t, std::int64_t> y_range(double lo, double hi) const { return range(lo, hi, j0_, ny_); }

private:
  std::size_t index(const Cell & c) const { return static_cast<std::size_t>(c.i) * ny_ + static_cast<std::size_t>(c.j); }

  std::pair<std::int64_t, std::int64_t> range(double lo, double hi, std::int64_t origin, std::size_t n) const
  {
    // center(k) = (origin + k + 0.5) * g
    const auto first = static_cast<std::int64_t>(std::ceil(lo / g_ - 0.5)) - origin - 1;
    const auto last = static_cast<std::int64_t>(std::floor(hi / g_ - 0.5)) - origin + 1;
    return {std::max<std::int64_t>(first, 0), std::min<std::int64_t>(last, static_cast<std::int64_t>(n) - 1)};
  }

  double g_;
  std::int64_t i0_ = 0;
  std::int64_t j0_ = 0;
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<std::uint8_t> cells_;
};

inline constexpr double kCenterTolerance = 1e-9;

/// Cells whose centers lie inside or on the boundary of `box`; empty when it misses the grid.
inline std::vector<Cell> rasterize_box(const OrientedBox & box, const OccupancyGrid & grid)
{
  double lo_x = std::numeric_limits<double>::infinity();
  double hi_x = -lo_x;
  double lo_y = lo_x;
  double hi_y = -lo_x;
  for (const auto & c : box.corners()) {
    lo_x = std::min(lo_x, c[0]);
    hi_x = std::max(hi_x, c[0]);
    lo_y = std::min(lo_y, c[1]);
    hi_y = std::max(hi_y, c[1]);
  }
  std::vector<Cell> cells;
  const auto [i_lo, i_hi] = grid.x_range(lo_x, hi_x);
  const auto [j_lo, j_hi] = grid.y_range(lo_y, hi_y);
  for (std::int64_t i = i_lo; i <= i_hi; ++i) {
    for (std::int64_t j = j_lo; j <= j_hi; ++j) {
      if (box.contains(grid.center_x(i), grid.center_y(j), kCenterTolerance)) {
        cells.push_back({i, j});
      }
    }
  }
  return cells;
}

inline OccupancyGrid build_occupancy(
  const std::vector<OrientedBox> & obstacles, double grid_size, const GridExtent & extent = {})
{
  OccupancyGrid grid(grid_size, extent);
  for (const auto & box : obstacles) {
    for (const auto & c : rasterize_box(box, grid)) {
      grid.mark(c);
    }
  }
  return grid;
}

/// Ego box as the occupancy test places it: the waypoint is truncated to the lower
/// corner of its cell, as the reference evaluation shifts a precomputed footprint by
/// whole cells. The offset is below one cell diagonal.
inline OrientedBox ego_footprint(const Pose2 & pose, const EgoSpec & ego, double grid_size)
{
  const double qx = static_cast<double>(grid_bin(pose.x, grid_size)) * grid_size;
  const double qy = static_cast<double>(grid_bin(pose.y, grid_size)) * grid_size;
  return {qx, qy, pose.theta, ego.length, ego.width};
}

inline bool collision_at_waypoint(const Pose2 & pose, const EgoSpec & ego, const OccupancyGrid & grid)
{
  for (const auto & c : rasterize_box(ego_footprint(pose, ego, grid.grid_size()), grid)) {
    if (grid.occupied(c)) {
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Collision rate

enum class HeadingSource {
  kPredicted,  ///< use each waypoint's theta
  kSegment,    ///< direction of travel from the previous waypoint (origin for the first)
};

enum class ObstacleTiming {
  kPerFrame,    ///< waypoint k is tested against obstacles of future frame k
  kFirstFrame,  ///< every waypoint is tested against the first future frame
};

struct CollisionOptions
{
  double grid_size = 0.5;
  EgoSpec ego;
  HeadingSource heading = HeadingSource::kPredicted;
  ObstacleTiming timing = ObstacleTiming::kPerFrame;
  GridExtent extent;
  std::size_t frames = kFutureFrames;
};

/// Poses used for ego placement; headings replaced by travel direction when requested.
inline Trajectory placement_poses(const Trajectory & traj, HeadingSource source)
{
  Trajectory out = traj;
  if (source == HeadingSource::kSegment) {
    double px = 0.0;
    double py = 0.0;
    double heading = 0.0;
    for (auto & p : out.waypoints) {
      const double dx = p.x - px;
      const double dy = p.y - py;
      if (dx != 0.0 || dy != 0.0) {
        heading = std::atan2(dy, dx);
      }
      px = p.x;
      py = p.y;
      p.theta = heading;
    }
  }
  return out;
}

/// Per-waypoint rasterized collision flags for one sample's trajectory.
inline std::vector<bool> waypoint_collisions(
  const EgoSample & sample, const Trajectory & traj, const CollisionOptions & opts)
{
  if (traj.size() < opts.frames || sample.obstacles.size() < opts.frames) {
    throw std::invalid_argument("collision: sample '" + sample.sample_id + "' has too few waypoints or frames");
  }
  const auto poses = placement_poses(traj, opts.heading);
  std::vector<bool> flags(opts.frames, false);
  if (opts.timing == ObstacleTiming::kFirstFrame) {
    const auto grid = build_occupancy(sample.obstacles.front(), opts.grid_size, opts.extent);
    for (std::size_t k = 0; k < opts.frames; ++k) {
      flags[k] = collision_at_waypoint(poses[k], opts.ego, grid);
    }
    return flags;
  }
  for (std::size_t k = 0; k < opts.frames; ++k) {
    if (sample.obstacles[k].empty()) {
      continue;
    }
    const auto grid = build_occupancy(sample.obstacles[k], opts.grid_size, opts.extent);
    flags[k] = collision_at_waypoint(poses[k], opts.ego, grid);
  }
  return flags;
}

/// Exact-geometry counterpart of waypoint_collisions: ego box at the true pose.
inline std::vector<bool> exact_waypoint_collisions(
  const EgoSample & sample, const Trajectory & traj, const CollisionOptions & opts)
{
  const auto poses = placement_poses(traj, opts.heading);
  std::vector<bool> flags(opts.frames, false);
  for (std::size_t k = 0; k < opts.frames; ++k) {
    const auto & frame = opts.timing == ObstacleTiming::kFirstFrame ? sample.obstacles.front() : sample.obstacles[k];
    const OrientedBox ego{poses[k].x, poses[k].y, poses[k].theta, opts.ego.length, opts.ego.width};
    for (const auto & box : frame) {
      if (exact_intersects(ego, box)) {
        flags[k] = true;
        break;
      }
    }
  }
  return flags;
}

struct CollisionReport
{
  /// flags[sample][h] is true when any waypoint up to horizon h collides.
  std::vector<std::vector<bool>> flags;
  std::vector<std::size_t> counts;
  std::vector<double> rates;  ///< percent per horizon
  double avg = 0.0;
};

/// Folds per-waypoint flags into cumulative per-horizon flags.
inline std::vector<bool> horizon_flags(const std::vector<bool> & waypoint_flags, std::size_t frames)
{
  std::vector<bool> out;
  bool hit = false;
  for (std::size_t k = 0; k < frames; ++k) {
    hit = hit || waypoint_flags[k];
    if ((k + 1) % 2 == 0) {
      out.push_back(hit);
    }
  }
  return out;
}

inline CollisionReport collision_rate(
  const Dataset & ds, const std::vector<Trajectory> & trajs, const CollisionOptions & opts)
{
  opts.ego.validate();
  const std::size_t horizons = horizon_count(opts.frames);
  if (trajs.size() != ds.samples.size()) {
    throw std::invalid_argument("collision_rate: need one trajectory per sample");
  }
  CollisionReport r;
  r.counts.assign(horizons, 0);
  r.rates.assign(horizons, 0.0);
  for (std::size_t n = 0; n < ds.samples.size(); ++n) {
    auto hf = horizon_flags(waypoint_collisions(ds.samples[n], trajs[n], opts), opts.frames);
    for (std::size_t h = 0; h < horizons; ++h) {
      r.counts[h] += hf[h] ? 1 : 0;
    }
    r.flags.push_back(std::move(hf));
  }
  if (!ds.samples.empty()) {
    for (std::size_t h = 0; h < horizons; ++h) {
      r.rates[h] = 100.0 * static_cast<double>(r.counts[h]) / static_cast<double>(ds.samples.size());
    }
  }
  for (double v : r.rates) {
    r.avg += v;
  }
  r.avg /= static_cast<double>(horizons);
  return r;
}

// ---------------------------------------------------------------------------
// Ground-truth audit

struct AuditRow
{
  double grid_size = 0.0;
  std::size_t count = 0;
  double percent = 0.0;
};

struct AuditReport
{
  std::size_t total = 0;
  std::vector<AuditRow> rows;
  std::size_t exact_count = 0;
  double exact_percent = 0.0;
};

/// Counts samples whose logged GT trajectory registers a collision at each grid size, plus
/// the exact-geometry count. Anything the grid flags beyond the exact count is a false collision.
inline AuditReport audit_gt_collisions(
  const Dataset & ds, const EgoSpec & ego, const std::vector<double> & grid_sizes, CollisionOptions opts = {})
{
  opts.ego = ego;
  opts.ego.validate();
  AuditReport report;
  report.total = ds.samples.size();
  const auto pct = [&](std::size_t c) {
    return report.total == 0 ? 0.0 : 100.0 * static_cast<double>(c) / static_cast<double>(report.total);
  };
  for (double g : grid_sizes) {
    opts.grid_size = g;
    AuditRow row{g, 0, 0.0};
    for (const auto & s : ds.samples) {
      const auto flags = waypoint_collisions(s, s.gt_future, opts);
      row.count += std::find(flags.begin(), flags.end(), true) != flags.end() ? 1 : 0;
    }
    row.percent = pct(row.count);
    report.rows.push_back(row);
  }
  for (const auto & s : ds.samples) {
    const auto flags = exact_waypoint_collisions(s, s.gt_future, opts);
    report.exact_count += std::find(flags.begin(), flags.end(), true) != flags.end() ? 1 : 0;
  }
  report.exact_percent = pct(report.exact_count);
  return report;
}

// ---------------------------------------------------------------------------
// Evaluation report

struct EvalReport
{
  std::size_t samples = 0;
  std::size_t frames = kFutureFrames;
  double grid_size = 0.5;
  EgoSpec ego;
  L2Variant l2_variant = L2Variant::kMeanOverHorizon;
  HorizonErrors l2;
  CollisionReport collision;
};

inline EvalReport evaluate(
  const Dataset & ds, const std::vector<Trajectory> & preds, const CollisionOptions & opts,
  L2Variant variant = L2Variant::kMeanOverHorizon)
{
  if (preds.size() != ds.samples.size()) {
    throw std::invalid_argument("evaluate: need one prediction per sample");
  }
  if (ds.samples.empty()) {
    throw std::invalid_argument("evaluate: dataset is empty");
  }
  const std::size_t horizons = horizon_count(opts.frames);
  EvalReport r;
  r.samples = ds.samples.size();
  r.frames = opts.frames;
  r.grid_size = opts.grid_size;
  r.ego = opts.ego;
  r.l2_variant = variant;
  r.l2.per_horizon.assign(horizons, 0.0);
  for (std::size_t n = 0; n < ds.samples.size(); ++n) {
    const auto e = l2_errors(preds[n], ds.samples[n].gt_future, opts.frames, variant);
    for (std::size_t h = 0; h < horizons; ++h) {
      r.l2.per_horizon[h] += e.per_horizon[h];
    }
  }
  for (auto & v : r.l2.per_horizon) {
    v /= static_cast<double>(ds.samples.size());
    r.l2.avg += v;
  }
  r.l2.avg /= static_cast<double>(horizons);
  r.collision = collision_rate(ds, preds, opts);
  return r;
}

inline nlohmann::ordered_json to_json(const EvalReport & r)
{
  nlohmann::ordered_json j;
  j["samples"] = r.samples;
  j["frames"] = r.frames;
  j["grid_size"] = r.grid_size;
  j["ego"] = {{"length", r.ego.length}, {"width", r.ego.width}};
  j["l2_variant"] = r.l2_variant == L2Variant::kEndpoint ? "endpoint" : "mean";
  j["l2_m"] = {{"per_horizon", r.l2.per_horizon}, {"avg", r.l2.avg}};
  j["collision_pct"] = {{"per_horizon", r.collision.rates}, {"avg", r.collision.avg}, {"counts", r.collision.counts}};
  return j;
}

/// Two-block table: L2 (m) then Collision (%), one column per horizon plus Avg.
inline std::string format_table(const EvalReport & r, const std::string & label = "model")
{
  const std::size_t horizons = r.l2.per_horizon.size();
  std::string out;
  char buf[64];
  const auto cell = [&](const char * fmt, auto... v) {
    std::snprintf(buf, sizeof(buf), fmt, v...);
    out += buf;
  };
  cell("%-12s", "");
  cell("| %-*s", static_cast<int>(8 * (horizons + 1)), "L2 (m)");
  cell("| %-*s\n", static_cast<int>(8 * (horizons + 1)), "Collision (%)");
  cell("%-12s", "Method");
  for (int block = 0; block < 2; ++block) {
    out += "| ";
    for (std::size_t h = 0; h < horizons; ++h) {
      const std::string name = std::to_string(h + 1) + "s";
      cell("%-8s", name.c_str());
    }
    cell("%-8s", "Avg.");
  }
  out += "\n";
  cell("%-12s", label.c_str());
  out += "| ";
  for (double v : r.l2.per_horizon) {
    cell("%-8.2f", v);
  }
  cell("%-8.2f", r.l2.avg);
  out += "| ";
  for (double v : r.collision.rates) {
    cell("%-8.2f", v);
  }
  cell("%-8.2f", r.collision.avg);
  out += "\n";
  return out;
}

inline nlohmann::ordered_json to_json(const AuditReport & a)
{
  nlohmann::ordered_json j;
  j["samples"] = a.total;
  auto rows = nlohmann::ordered_json::array();
  for (const auto & row : a.rows) {
    rows.push_back({{"grid_size", row.grid_size}, {"count", row.count}, {"percent", row.percent}});
  }
  j["grid"] = std::move(rows);
  j["exact"] = {{"count", a.exact_count}, {"percent", a.exact_percent}};
  return j;
}

inline std::string format_table(const AuditReport & a)
{
  std::string out = "grid_size  gt_collisions  percent  false_vs_exact\n";
  char buf[128];
  for (const auto & row : a.rows) {
    const long long excess = static_cast<long long>(row.count) - static_cast<long long>(a.exact_count);
    std::snprintf(buf, sizeof(buf), "%-9.3g  %-13zu  %-7.2f  %lld\n", row.grid_size, row.count, row.percent, excess);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "exact      %-13zu  %-7.2f  0\n", a.exact_count, a.exact_percent);
  out += buf;
  std::snprintf(buf, sizeof(buf), "samples    %zu\n", a.total);
  out += buf;
  return out;
}

}  // namespace olbench
