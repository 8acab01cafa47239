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


// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
// Usage: acceptance <path-to-olbench-cli> <work-dir>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "olbench/olbench.hpp"
#include "support/oracles.hpp"

namespace
{

namespace fs = std::filesystem;
using namespace olbench;

// Pinned budgets and tolerances.
constexpr double kGradRelTol = 1e-4;
constexpr double kFdStep = 1e-5;
constexpr double kKinkMargin = 1e-6;
constexpr double kGradBudgetS = 10.0;
constexpr double kOverfitL1 = 0.05;
constexpr double kOracleL2 = 1e-6;
constexpr double kOverfitGap = 0.1;
constexpr double kOverfitBudgetS = 120.0;
constexpr double kCollisionGrid = 0.05;
constexpr double kNearMissBudgetS = 60.0;
constexpr double kMetricTol = 1e-12;
constexpr double kPipelineBudgetS = 300.0;

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string fmt(const char * f, auto... v)
{
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, v...);
  return buf;
}

std::string slurp(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string g_cli;
fs::path g_work;

int run_cli(const std::string & args, const std::string & log_name)
{
  const auto log = (g_work / (log_name + ".log")).string();
  const std::string cmd = g_cli + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---------------------------------------------------------------------------

Outcome gradient_check()
{
  Rng rng(2024);
  const std::array<InputMask, 4> masks{InputMask{true, false, false, false}, InputMask{true, false, true, false},
                                       InputMask{true, true, true, false}, InputMask{}};
  double worst = 0.0;
  std::size_t nets = 0;
  std::size_t params = 0;
  std::size_t skipped = 0;
  while (nets < 20) {
    const auto mask = masks[nets % 4];
    std::vector<std::size_t> sizes{mask.input_dim()};
    const auto depth = 1 + rng.below(2);
    for (std::uint64_t d = 0; d < depth; ++d) {
      sizes.push_back(4 + rng.below(13));
    }
    sizes.push_back(kOutputDim);
    const auto net = init_params(sizes, rng.next_u64(), mask);
    std::vector<double> x(mask.input_dim());
    for (auto & v : x) {
      v = rng.uniform(-3.0, 3.0);
    }
    Trajectory gt;
    for (std::size_t i = 0; i < kFutureFrames; ++i) {
      gt.waypoints.push_back({rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-1, 1)});
    }
    if (oracle::near_kink(net, x, gt, kKinkMargin)) {
      ++skipped;
      continue;
    }
    auto grads = net.make_gradients();
    const auto r = backward(net, x, gt, LossConfig{}, grads);
    const auto check = oracle::finite_difference_check(net, x, gt, r.weights, grads, kFdStep);
    worst = std::max(worst, check.max_rel_error);
    params += check.checked;
    ++nets;
  }
  return {worst < kGradRelTol,
          fmt("20 nets, %zu parameters, max rel err %.3g (tol %.0e), %zu near-kink draws skipped", params, worst,
              kGradRelTol, skipped)};
}

Outcome overfit_check()
{
  SyntheticConfig cfg;
  cfg.n_samples = 64;
  cfg.straight_fraction = 1.0;
  cfg.obstacle_density = 0.0;
  cfg.speed_range = {2.0, 8.0};
  cfg.rng_seed = 64;
  const auto ds = generate_synthetic(cfg);

  double oracle_l2 = 0.0;
  for (const auto & s : ds.samples) {
    oracle_l2 += l2_errors(oracle::constant_velocity(s), s.gt_future).avg;
  }
  oracle_l2 /= static_cast<double>(ds.samples.size());

  TrainConfig tc;
  tc.lr0 = 1e-3;
  tc.batch_size = 4;
  tc.epochs = 2000 / (64 / 4);
  tc.seed = 1;
  auto net = make_planner(InputMask{}, 1);
  train(ds, net, tc);

  double l1 = 0.0;
  double model_l2 = 0.0;
  for (const auto & s : ds.samples) {
    const auto pred = forward(net, encode_input(s, net.mask));
    for (std::size_t i = 0; i < kFutureFrames; ++i) {
      l1 += std::abs(pred[i].x - s.gt_future[i].x) + std::abs(pred[i].y - s.gt_future[i].y) +
            std::abs(pred[i].theta - s.gt_future[i].theta);
    }
    model_l2 += l2_errors(pred, s.gt_future).avg;
  }
  l1 /= static_cast<double>(ds.samples.size() * kFutureFrames);
  model_l2 /= static_cast<double>(ds.samples.size());
  const bool ok = l1 < kOverfitL1 && oracle_l2 < kOracleL2 && std::abs(model_l2 - oracle_l2) < kOverfitGap;
  return {ok, fmt("%zu steps: mean per-waypoint L1 %.4f m (< %.2f), CV oracle avg L2 %.2e (< %.0e), model avg L2 "
                  "%.4f (gap < %.1f)",
                  total_steps(64, tc), l1, kOverfitL1, oracle_l2, kOracleL2, model_l2, kOverfitGap)};
}

Outcome loss_reweighting()
{
  const LossConfig cfg;
  Trajectory gt;
  Trajectory pred;
  for (int k = 1; k <= 6; ++k) {
    gt.waypoints.push_back({10.0 * k, 0.0, 0.0});
    pred.waypoints.push_back({10.0 * k + 3.0, 0.0, 0.0});
  }
  std::size_t cases = 0;
  std::size_t bad = 0;
  const auto expect = [&](Pose2 p, Pose2 g, double w) {
    pred[0] = p;
    gt[0] = g;
    ++cases;
    bad += loss(pred, gt, cfg).weights[0] == w ? 0 : 1;
  };
  expect({1.6, 0.1, 0.0}, {1.9, 0.2, 0.0}, 0.5);   // both in [1.5, 2) x [0, 0.5)
  expect({1.5, 0.0, 0.0}, {1.999, 0.499, 0.3}, 0.5);
  expect({1.4, 0.1, 0.0}, {1.6, 0.1, 0.0}, 1.0);   // x straddles 1.5
  expect({1.6, 0.4, 0.0}, {1.9, 0.6, 0.0}, 1.0);   // y straddles 0.5
  expect({2.0, 0.1, 0.0}, {1.9, 0.1, 0.0}, 1.0);   // 2.0 opens the next bin
  expect({-0.1, -0.2, 0.0}, {-0.4, -0.01, 0.0}, 0.5);
  expect({-0.1, 0.1, 0.0}, {0.1, 0.1, 0.0}, 1.0);
  // Value: one waypoint at half weight, five with a 3 m x error at full weight.
  pred[0] = {1.6, 0.1, 0.0};
  gt[0] = {1.9, 0.2, 0.0};
  const double v = loss(pred, gt, cfg).value;
  const double want = (0.5 * (0.3 + 0.1) + 5 * 3.0) / 6.0;
  ++cases;
  bad += std::abs(v - want) < 1e-12 ? 0 : 1;
  return {bad == 0, fmt("%zu hand-built cases, %zu mismatches", cases, bad)};
}

Outcome collision_oracle()
{
  Rng rng(5150);
  const double thresh = kCollisionGrid * std::numbers::sqrt2;
  const GridExtent extent{-10.0, 10.0, -10.0, 10.0};
  std::size_t decided = 0;
  std::size_t violations = 0;
  std::size_t sat_mismatch = 0;
  for (int n = 0; n < 1000; ++n) {
    const OrientedBox a{rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5), rng.uniform(-3.14, 3.14),
                        rng.uniform(0.5, 5.0), rng.uniform(0.5, 2.5)};
    const OrientedBox b{rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5), rng.uniform(-3.14, 3.14),
                        rng.uniform(0.5, 5.0), rng.uniform(0.5, 2.5)};
    const auto pa = oracle::polygon_of(a);
    const auto pb = oracle::polygon_of(b);
    const auto inter = oracle::clip(pa, pb);
    const bool overlap = oracle::area(inter) > 0.0;
    const double depth = overlap ? oracle::inradius(inter) : 0.0;
    const double sep = overlap ? 0.0 : oracle::separation(pa, pb);
    const auto grid = build_occupancy({b}, kCollisionGrid, extent);
    const bool raster = collision_at_waypoint({a.cx, a.cy, a.heading}, EgoSpec{a.length, a.width}, grid);
    if (depth > thresh || sep > thresh) {
      ++decided;
      violations += raster == (depth > thresh) ? 0 : 1;
      sat_mismatch += exact_intersects(a, b) == (depth > thresh) ? 0 : 1;
    }
  }
  return {violations == 0 && sat_mismatch == 0 && decided > 900,
          fmt("g=%.2f: %zu of 1000 pairs beyond g*sqrt(2), %zu raster violations, %zu SAT mismatches",
              kCollisionGrid, decided, violations, sat_mismatch)};
}

EgoSample near_miss_scene()
{
  EgoSample s;
  s.sample_id = "near-miss";
  s.history.waypoints = {{-7.5, 0, 0}, {-5, 0, 0}, {-2.5, 0, 0}, {0, 0, 0}};
  for (int k = 1; k <= 6; ++k) {
    s.gt_future.waypoints.push_back({2.5 * k, 0.49, 0.0});
  }
  const double ob_w = 1.0;
  const OrientedBox ob{10.0, 0.49 - 0.5 * 1.85 - 0.3 - 0.5 * ob_w, 0.0, 4.0, ob_w};
  s.obstacles.assign(6, {ob});
  return s;
}

bool any(const std::vector<bool> & v) { return std::find(v.begin(), v.end(), true) != v.end(); }

Outcome near_miss_check()
{
  const auto scene = near_miss_scene();
  const EgoSpec ego;
  const double clearance = path_clearance(scene.gt_future, scene.obstacles[0][0], ego.length, ego.width);
  CollisionOptions opts;
  opts.grid_size = 0.1;
  const bool fine = any(waypoint_collisions(scene, scene.gt_future, opts));
  opts.grid_size = 0.5;
  const bool coarse = any(waypoint_collisions(scene, scene.gt_future, opts));
  const bool exact = any(exact_waypoint_collisions(scene, scene.gt_future, opts));

  // Brute-force confirmation of the coarse hit: a lattice cell center inside both the placed ego and the obstacle.
  bool brute = false;
  for (const auto & p : scene.gt_future.waypoints) {
    const auto placed = ego_footprint(p, ego, 0.5);
    const auto e = oracle::brute_force_cells(placed, 0.5, -20, 60, -40, 40);
    const auto o = oracle::brute_force_cells(scene.obstacles[0][0], 0.5, -20, 60, -40, 40);
    for (const auto & c : e) {
      brute = brute || std::find(o.begin(), o.end(), c) != o.end();
    }
  }

  NearMissConfig cfg;
  cfg.n_samples = 500;
  const auto ds = generate_near_miss(cfg);
  const auto audit = audit_gt_collisions(ds, ego, {0.1, 0.25, 0.5, 0.6});
  bool monotone = true;
  std::string counts;
  for (std::size_t i = 0; i < audit.rows.size(); ++i) {
    counts += fmt("%s%g:%zu", i ? " " : "", audit.rows[i].grid_size, audit.rows[i].count);
    if (i > 0 && audit.rows[i].count < audit.rows[i - 1].count) {
      monotone = false;
    }
  }
  const bool ok = std::abs(clearance - 0.3) < 1e-9 && !fine && coarse && brute && !exact && monotone &&
                  audit.exact_count == 0;
  return {ok, fmt("scene (clearance %.2f m): g=0.1 %s, g=0.5 %s, exact %s; 500-sample suite counts [%s], exact %zu",
                  clearance, fine ? "hit" : "clear", coarse ? "hit" : "clear", exact ? "hit" : "clear",
                  counts.c_str(), audit.exact_count)};
}

Outcome metric_suite()
{
  Trajectory gt;
  for (int k = 1; k <= 6; ++k) {
    gt.waypoints.push_back({4.0 * k, 0.0, 0.0});
  }
  std::size_t bad = 0;
  const auto near = [&](double a, double b) { bad += std::abs(a - b) <= kMetricTol ? 0 : 1; };
  const auto same = l2_errors(gt, gt);
  for (double v : same.per_horizon) {
    near(v, 0.0);
  }
  near(same.avg, 0.0);
  Trajectory off = gt;
  for (auto & p : off.waypoints) {
    p.x += 0.6;
    p.y -= 0.8;
  }
  const auto shifted = l2_errors(off, gt);
  for (double v : shifted.per_horizon) {
    near(v, 1.0);
  }
  near(shifted.avg, 1.0);
  Trajectory one = gt;
  one[5].y += 0.6;
  const auto late = l2_errors(one, gt);
  near(late.per_horizon[0], 0.0);
  near(late.per_horizon[1], 0.0);
  near(late.per_horizon[2], 0.1);
  near(late.avg, 0.1 / 3.0);

  Dataset ds;
  std::vector<Trajectory> free_preds;
  std::vector<Trajectory> inside;
  for (int n = 0; n < 10; ++n) {
    EgoSample s;
    s.sample_id = std::to_string(n);
    s.history.waypoints = {{-3, 0, 0}, {-2, 0, 0}, {-1, 0, 0}, {0, 0, 0}};
    s.gt_future = gt;
    s.obstacles.assign(6, {});
    ds.samples.push_back(s);
    free_preds.push_back(gt);
  }
  const auto clean = collision_rate(ds, free_preds, CollisionOptions{});
  for (auto & s : ds.samples) {
    for (std::size_t k = 0; k < 6; ++k) {
      s.obstacles[k] = {{gt[k].x, gt[k].y, 0.0, 4.5, 2.0}};
    }
    inside.push_back(gt);
  }
  const auto full = collision_rate(ds, inside, CollisionOptions{});
  for (std::size_t h = 0; h < 3; ++h) {
    bad += clean.rates[h] == 0.0 ? 0 : 1;
    bad += full.rates[h] == 100.0 ? 0 : 1;
  }
  bad += clean.avg == 0.0 && full.avg == 100.0 ? 0 : 1;
  return {bad == 0, fmt("l2 identity/offset/single-waypoint and 0%%/100%% collision cases, %zu mismatches (tol %.0e)",
                        bad, kMetricTol)};
}

Outcome determinism()
{
  const auto dir = g_work / "determinism";
  fs::remove_all(dir);
  bool ok = true;
  std::vector<std::string> files;
  for (const char * run : {"r1", "r2"}) {
    const auto d = (dir / run).string();
    ok = ok && run_cli("gen --seed 11 --samples 300 --out-dir " + d, std::string("det_gen_") + run) == 0;
    ok = ok && run_cli("train --seed 11 --data " + d + "/dataset.jsonl --epochs 2 --hidden 64 --out-dir " + d,
                       std::string("det_train_") + run) == 0;
    ok = ok && run_cli("eval --data " + d + "/dataset.jsonl --checkpoint " + d + "/checkpoint.json --out-dir " + d,
                       std::string("det_eval_") + run) == 0;
  }
  if (!ok) {
    return {false, "a CLI run failed; see logs under " + g_work.string()};
  }
  std::size_t same = 0;
  std::string diff;
  for (const char * f : {"dataset.jsonl", "checkpoint.json", "train_log.csv", "eval_report.json", "eval_report.txt"}) {
    const auto a = slurp(dir / "r1" / f);
    const auto b = slurp(dir / "r2" / f);
    if (!a.empty() && a == b) {
      ++same;
    } else {
      diff += std::string(" ") + f;
    }
  }
  return {same == 5, fmt("gen/train/eval twice with seed 11: %zu/5 artifacts byte-identical%s", same,
                         diff.empty() ? "" : (" (differs:" + diff + ")").c_str())};
}

Outcome full_pipeline()
{
  const auto d = (g_work / "pipeline").string();
  fs::remove_all(d);
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = run_cli("gen --seed 0 --samples 5000 --out-dir " + d, "pipe_gen") == 0;
  ok = ok && run_cli("train --data " + d + "/dataset.jsonl --epochs 6 --out-dir " + d, "pipe_train") == 0;
  ok = ok && run_cli("eval --data " + d + "/dataset.jsonl --checkpoint " + d + "/checkpoint.json --out-dir " + d,
                     "pipe_eval") == 0;
  ok = ok && run_cli("audit --data " + d + "/dataset.jsonl --out-dir " + d, "pipe_audit") == 0;
  ok = ok && run_cli("analyze --data " + d + "/dataset.jsonl --out-dir " + d, "pipe_analyze") == 0;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::string summary;
  if (ok) {
    const auto rep = nlohmann::json::parse(slurp(fs::path(d) / "eval_report.json"));
    summary = fmt(", avg L2 %.3f m, avg collision %.2f%%", rep["l2_m"]["avg"].get<double>(),
                  rep["collision_pct"]["avg"].get<double>());
  }
  return {ok && secs < kPipelineBudgetS,
          fmt("gen 5000 -> train 6 epochs -> eval -> audit -> analyze %s in %.1f s (budget %.0f s)%s",
              ok ? "completed" : "FAILED", secs, kPipelineBudgetS, summary.c_str())};
}

}  // namespace

int main(int argc, char ** argv)
{
  if (argc != 3) {
    std::cerr << "usage: acceptance <olbench-cli> <work-dir>\n";
    return 2;
  }
  g_cli = argv[1];
  g_work = argv[2];
  fs::create_directories(g_work);

  struct Criterion
  {
    const char * name;
    std::function<Outcome()> check;
    double budget_s;
  };
  const std::vector<Criterion> criteria{
    {"gradient-correctness", gradient_check, kGradBudgetS},
    {"overfit", overfit_check, kOverfitBudgetS},
    {"loss-reweighting", loss_reweighting, 0.0},
    {"collision-oracle-equivalence", collision_oracle, 0.0},
    {"grid-size-false-collisions", near_miss_check, kNearMissBudgetS},
    {"metric-unit-suite", metric_suite, 0.0},
    {"determinism", determinism, 0.0},
    {"full-pipeline", full_pipeline, 0.0},
  };
  int failed = 0;
  for (const auto & c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception & e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt("%.2f s", secs);
    if (c.budget_s > 0.0) {
      timing += fmt(" (budget %.0f s)", c.budget_s);
      if (secs >= c.budget_s) {
        o.pass = false;
      }
    }
    std::printf("%s %s: %s [%s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
