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


// olbench: generate data, train the ego-state planner, evaluate, audit, analyze.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "olbench/olbench.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace
{

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Input or configuration problem; maps to exit code 2.
struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct CommonOptions
{
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  double grid_size = 0.5;
  double ego_length = 4.08;
  double ego_width = 1.85;
  std::size_t horizon_frames = olbench::kFutureFrames;
};

void add_common(CLI::App * app, CommonOptions & c)
{
  app->add_option("--seed", c.seed, "Seed for every random choice")->capture_default_str();
  app->add_option("--out-dir", c.out_dir, "Directory for outputs and the run manifest")->capture_default_str();
  app->add_option("--grid-size", c.grid_size, "Occupancy / loss grid cell size (m)")->capture_default_str();
  app->add_option("--ego-length", c.ego_length, "Ego box length (m)")->capture_default_str();
  app->add_option("--ego-width", c.ego_width, "Ego box width (m)")->capture_default_str();
  app->add_option("--horizon-frames", c.horizon_frames, "Future frames scored (even, <= 6)")->capture_default_str();
}

ojson common_json(const CommonOptions & c)
{
  return {{"seed", c.seed},         {"out_dir", c.out_dir},       {"grid_size", c.grid_size},
          {"ego_length", c.ego_length}, {"ego_width", c.ego_width}, {"horizon_frames", c.horizon_frames}};
}

void require_file(const std::string & path, const char * what)
{
  if (path.empty() || !fs::is_regular_file(path)) {
    throw UsageError(std::string(what) + " not found: " + path);
  }
}

void ensure_dir(const std::string & dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
  }
}

void write_text(const fs::path & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  out << text;
}

/// Everything needed to re-run the command; no timestamps so reruns compare equal.
void write_manifest(const std::string & sub, const std::vector<std::string> & argv, const CommonOptions & c,
                    ojson config, ojson inputs, ojson outputs)
{
  ojson m;
  m["tool"] = "olbench";
  m["version"] = std::string(olbench::kVersion);
  m["subcommand"] = sub;
  m["command_line"] = argv;
  m["seed"] = c.seed;
  m["common"] = common_json(c);
  m["config"] = std::move(config);
  m["inputs"] = std::move(inputs);
  m["outputs"] = std::move(outputs);
  write_text(fs::path(c.out_dir) / (sub + "_manifest.json"), m.dump(2) + "\n");
}

olbench::InputMask mask_from_flags(bool no_velocity, bool no_acceleration, bool no_command)
{
  return {true, !no_velocity, !no_acceleration, !no_command};
}

olbench::CollisionOptions collision_options(const CommonOptions & c)
{
  olbench::CollisionOptions o;
  o.grid_size = c.grid_size;
  o.ego = {c.ego_length, c.ego_width};
  o.frames = c.horizon_frames;
  return o;
}

void validate_common(const CommonOptions & c)
{
  if (!(c.grid_size > 0.0)) {
    throw UsageError("--grid-size must be > 0");
  }
  if (!(c.ego_length > 0.0) || !(c.ego_width > 0.0)) {
    throw UsageError("--ego-length/--ego-width must be > 0");
  }
  try {
    olbench::horizon_count(c.horizon_frames);
  } catch (const std::invalid_argument & e) {
    throw UsageError(std::string("--horizon-frames: ") + e.what());
  }
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Open-loop planning benchmark: ego-state MLP planner, L2 / occupancy collision metrics, "
               "ground-truth collision audit, and trajectory distribution analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(olbench::kVersion));

  // gen
  CommonOptions gen_c;
  olbench::SyntheticConfig gen_cfg;
  std::string gen_out;
  auto * gen = app.add_subcommand("gen", "Generate a synthetic JSONL dataset");
  add_common(gen, gen_c);
  gen->add_option("--out", gen_out, "Dataset path (default <out-dir>/dataset.jsonl)");
  gen->add_option("--samples", gen_cfg.n_samples, "Number of samples")->capture_default_str();
  gen->add_option("--straight-fraction", gen_cfg.straight_fraction)->capture_default_str();
  gen->add_option("--speed-min", gen_cfg.speed_range.lo)->capture_default_str();
  gen->add_option("--speed-max", gen_cfg.speed_range.hi)->capture_default_str();
  gen->add_option("--radius-min", gen_cfg.turn_radius_range.lo)->capture_default_str();
  gen->add_option("--radius-max", gen_cfg.turn_radius_range.hi)->capture_default_str();
  gen->add_option("--obstacle-density", gen_cfg.obstacle_density, "Mean obstacles per sample")->capture_default_str();
  auto * gen_cmin = gen->add_option("--clearance-min", gen_cfg.clearance_range.lo)->capture_default_str();
  auto * gen_cmax = gen->add_option("--clearance-max", gen_cfg.clearance_range.hi)->capture_default_str();
  bool gen_near_miss = false;
  gen->add_flag("--near-miss", gen_near_miss,
                "Near-miss suite: one vehicle right of the path per sample, clearance 0.2-0.4 m unless "
                "--clearance-min/--clearance-max are given; other shape options are ignored");

  // train
  CommonOptions train_c;
  olbench::TrainConfig train_cfg;
  std::string train_data;
  std::string train_ckpt;
  std::size_t hidden = olbench::kDefaultHidden;
  bool no_velocity = false;
  bool no_acceleration = false;
  bool no_command = false;
  bool no_shuffle = false;
  auto * train = app.add_subcommand("train", "Train the planner with AdamW + cosine annealing");
  add_common(train, train_c);
  train->add_option("--data", train_data, "Training JSONL")->required();
  train->add_option("--checkpoint", train_ckpt, "Output checkpoint (default <out-dir>/checkpoint.json)");
  train->add_option("--epochs", train_cfg.epochs)->capture_default_str();
  train->add_option("--batch-size", train_cfg.batch_size)->capture_default_str();
  train->add_option("--lr", train_cfg.lr0, "Initial learning rate")->capture_default_str();
  train->add_option("--weight-decay", train_cfg.weight_decay)->capture_default_str();
  train->add_option("--coincident-weight", train_cfg.loss.coincident_weight)->capture_default_str();
  train->add_option("--hidden", hidden, "Hidden layer width")->capture_default_str();
  train->add_flag("--no-velocity", no_velocity, "Drop (vx, vy, omega) from the input");
  train->add_flag("--no-acceleration", no_acceleration, "Drop (ax, ay, beta) from the input");
  train->add_flag("--no-command", no_command, "Drop the one-hot command from the input");
  train->add_flag("--no-shuffle", no_shuffle, "Keep dataset order");

  // eval
  CommonOptions eval_c;
  std::string eval_data;
  std::string eval_ckpt;
  std::string l2_variant = "mean";
  std::string heading_source = "predicted";
  std::string obstacle_timing = "per-frame";
  auto * eval = app.add_subcommand("eval", "Score a checkpoint: L2 and collision rate per horizon");
  add_common(eval, eval_c);
  eval->add_option("--data", eval_data, "Evaluation JSONL")->required();
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint to evaluate")->required();
  eval->add_option("--l2-variant", l2_variant, "mean | endpoint")
    ->check(CLI::IsMember({"mean", "endpoint"}))
    ->capture_default_str();
  eval->add_option("--heading", heading_source, "predicted | segment")
    ->check(CLI::IsMember({"predicted", "segment"}))
    ->capture_default_str();
  eval->add_option("--obstacles", obstacle_timing, "per-frame | first-frame")
    ->check(CLI::IsMember({"per-frame", "first-frame"}))
    ->capture_default_str();

  // audit
  CommonOptions audit_c;
  std::string audit_data;
  std::vector<double> grid_sizes{0.1, 0.25, 0.5, 0.6};
  auto * audit = app.add_subcommand("audit", "Count ground-truth trajectories flagged as colliding per grid size");
  add_common(audit, audit_c);
  audit->add_option("--data", audit_data, "Dataset JSONL")->required();
  audit->add_option("--grid-sizes", grid_sizes, "Comma-separated grid sizes (m)")
    ->delimiter(',')
    ->capture_default_str();

  // analyze
  CommonOptions analyze_c;
  std::string analyze_data;
  std::size_t bins = olbench::kDefaultBins;
  auto * analyze = app.add_subcommand("analyze", "Trajectory, heading and curvature distributions");
  add_common(analyze, analyze_c);
  analyze->add_option("--data", analyze_data, "Dataset JSONL")->required();
  analyze->add_option("--bins", bins, "Histogram bins")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp & e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    app.exit(e);
    return kExitUsage;
  }

  const std::vector<std::string> args(argv, argv + argc);

  try {
    if (gen->parsed()) {
      validate_common(gen_c);
      gen_cfg.rng_seed = gen_c.seed;
      gen_cfg.ego_length = gen_c.ego_length;
      gen_cfg.ego_width = gen_c.ego_width;
      olbench::Dataset ds;
      olbench::NearMissConfig nm_cfg;
      nm_cfg.n_samples = gen_cfg.n_samples;
      nm_cfg.rng_seed = gen_c.seed;
      nm_cfg.ego_length = gen_c.ego_length;
      nm_cfg.ego_width = gen_c.ego_width;
      if (gen_cmin->count() > 0) {
        nm_cfg.clearance_range.lo = gen_cfg.clearance_range.lo;
      }
      if (gen_cmax->count() > 0) {
        nm_cfg.clearance_range.hi = gen_cfg.clearance_range.hi;
      }
      try {
        ds = gen_near_miss ? olbench::generate_near_miss(nm_cfg) : olbench::generate_synthetic(gen_cfg);
      } catch (const std::invalid_argument & e) {
        throw UsageError(e.what());
      }
      ensure_dir(gen_c.out_dir);
      const std::string out = gen_out.empty() ? (fs::path(gen_c.out_dir) / "dataset.jsonl").string() : gen_out;
      olbench::write_dataset(ds, out);
      ojson cfg;
      if (gen_near_miss) {
        cfg = {{"mode", "near-miss"},
               {"n_samples", nm_cfg.n_samples},
               {"clearance_range", {nm_cfg.clearance_range.lo, nm_cfg.clearance_range.hi}},
               {"speed_range", {nm_cfg.speed_range.lo, nm_cfg.speed_range.hi}},
               {"max_curvature", nm_cfg.max_curvature},
               {"rng_seed", nm_cfg.rng_seed},
               {"ego_length", nm_cfg.ego_length},
               {"ego_width", nm_cfg.ego_width}};
      } else {
        cfg = {{"mode", "synthetic"},
               {"n_samples", gen_cfg.n_samples},
               {"straight_fraction", gen_cfg.straight_fraction},
               {"speed_range", {gen_cfg.speed_range.lo, gen_cfg.speed_range.hi}},
               {"turn_radius_range", {gen_cfg.turn_radius_range.lo, gen_cfg.turn_radius_range.hi}},
               {"obstacle_density", gen_cfg.obstacle_density},
               {"clearance_range", {gen_cfg.clearance_range.lo, gen_cfg.clearance_range.hi}},
               {"rng_seed", gen_cfg.rng_seed},
               {"ego_length", gen_cfg.ego_length},
               {"ego_width", gen_cfg.ego_width}};
      }
      write_manifest("gen", args, gen_c, cfg, ojson::object(), {{"dataset", out}});
      std::cout << "wrote " << ds.samples.size() << " samples to " << out << "\n";
      return kExitOk;
    }

    if (train->parsed()) {
      validate_common(train_c);
      require_file(train_data, "dataset");
      train_cfg.seed = train_c.seed;
      train_cfg.shuffle = !no_shuffle;
      train_cfg.loss.grid_size = train_c.grid_size;
      const auto mask = mask_from_flags(no_velocity, no_acceleration, no_command);
      try {
        train_cfg.validate();
        mask.validate();
      } catch (const std::invalid_argument & e) {
        throw UsageError(e.what());
      }
      if (hidden == 0) {
        throw UsageError("--hidden must be > 0");
      }
      olbench::Dataset ds;
      try {
        ds = olbench::load_dataset(train_data, "train");
      } catch (const olbench::DataError & e) {
        throw UsageError(e.what());
      }
      if (ds.samples.empty()) {
        throw UsageError("dataset is empty: " + train_data);
      }
      auto net = olbench::make_planner(mask, train_c.seed, hidden);
      const auto log = olbench::train(ds, net, train_cfg);
      ensure_dir(train_c.out_dir);
      const std::string ckpt =
        train_ckpt.empty() ? (fs::path(train_c.out_dir) / "checkpoint.json").string() : train_ckpt;
      const std::string log_path = (fs::path(train_c.out_dir) / "train_log.csv").string();
      olbench::save_checkpoint(net, ckpt);
      olbench::write_train_log_csv(log, log_path);
      ojson cfg{{"lr0", train_cfg.lr0},
                {"weight_decay", train_cfg.weight_decay},
                {"epochs", train_cfg.epochs},
                {"batch_size", train_cfg.batch_size},
                {"betas", {train_cfg.beta1, train_cfg.beta2}},
                {"eps", train_cfg.eps},
                {"shuffle", train_cfg.shuffle},
                {"loss", {{"grid_size", train_cfg.loss.grid_size},
                          {"coincident_weight", train_cfg.loss.coincident_weight}}},
                {"sizes", net.sizes()},
                {"d_in", net.input_dim()},
                {"mask", {{"trajectory", mask.use_trajectory},
                          {"velocity", mask.use_velocity},
                          {"acceleration", mask.use_acceleration},
                          {"command", mask.use_command}}},
                {"steps", log.step_loss.size()}};
      write_manifest("train", args, train_c, cfg, {{"dataset", train_data}},
                     {{"checkpoint", ckpt}, {"train_log", log_path}});
      std::cout << "d_in " << net.input_dim() << ", " << log.step_loss.size() << " steps\n";
      for (const auto & e : log.epochs) {
        std::printf("epoch %zu  mean loss %.6f\n", e.epoch + 1, e.mean_loss);
      }
      std::cout << "checkpoint " << ckpt << "\n";
      return kExitOk;
    }

    if (eval->parsed()) {
      validate_common(eval_c);
      require_file(eval_ckpt, "checkpoint");
      require_file(eval_data, "dataset");
      olbench::Mlp net;
      try {
        net = olbench::load_checkpoint(eval_ckpt);
      } catch (const std::runtime_error & e) {
        throw UsageError(e.what());
      }
      olbench::Dataset ds;
      try {
        ds = olbench::load_dataset(eval_data, "val");
      } catch (const olbench::DataError & e) {
        throw UsageError(e.what());
      }
      if (ds.samples.empty()) {
        throw UsageError("dataset is empty: " + eval_data);
      }
      std::vector<olbench::Trajectory> preds;
      preds.reserve(ds.samples.size());
      for (const auto & s : ds.samples) {
        preds.push_back(olbench::forward(net, olbench::encode_input(s, net.mask)));
      }
      auto opts = collision_options(eval_c);
      opts.heading = heading_source == "segment" ? olbench::HeadingSource::kSegment
                                                 : olbench::HeadingSource::kPredicted;
      opts.timing = obstacle_timing == "first-frame" ? olbench::ObstacleTiming::kFirstFrame
                                                     : olbench::ObstacleTiming::kPerFrame;
      const auto variant =
        l2_variant == "endpoint" ? olbench::L2Variant::kEndpoint : olbench::L2Variant::kMeanOverHorizon;
      const auto report = olbench::evaluate(ds, preds, opts, variant);
      ensure_dir(eval_c.out_dir);
      const fs::path dir(eval_c.out_dir);
      const auto table = olbench::format_table(report, "ours");
      write_text(dir / "eval_report.json", olbench::to_json(report).dump(2) + "\n");
      write_text(dir / "eval_report.txt", table);
      write_manifest("eval", args, eval_c,
                     {{"l2_variant", l2_variant}, {"heading", heading_source}, {"obstacles", obstacle_timing}},
                     {{"dataset", eval_data}, {"checkpoint", eval_ckpt}},
                     {{"json", (dir / "eval_report.json").string()}, {"table", (dir / "eval_report.txt").string()}});
      std::cout << table;
      return kExitOk;
    }

    if (audit->parsed()) {
      validate_common(audit_c);
      require_file(audit_data, "dataset");
      for (double g : grid_sizes) {
        if (!(g > 0.0)) {
          throw UsageError("--grid-sizes entries must be > 0");
        }
      }
      olbench::Dataset ds;
      try {
        ds = olbench::load_dataset(audit_data, "val");
      } catch (const olbench::DataError & e) {
        throw UsageError(e.what());
      }
      const auto opts = collision_options(audit_c);
      const auto report = olbench::audit_gt_collisions(ds, opts.ego, grid_sizes, opts);
      ensure_dir(audit_c.out_dir);
      const fs::path dir(audit_c.out_dir);
      const auto table = olbench::format_table(report);
      write_text(dir / "audit.json", olbench::to_json(report).dump(2) + "\n");
      write_text(dir / "audit.txt", table);
      write_manifest("audit", args, audit_c, {{"grid_sizes", grid_sizes}}, {{"dataset", audit_data}},
                     {{"json", (dir / "audit.json").string()}, {"table", (dir / "audit.txt").string()}});
      std::cout << table;
      return kExitOk;
    }

    if (analyze->parsed()) {
      validate_common(analyze_c);
      require_file(analyze_data, "dataset");
      if (bins == 0) {
        throw UsageError("--bins must be > 0");
      }
      olbench::Dataset ds;
      try {
        ds = olbench::load_dataset(analyze_data, "train");
      } catch (const olbench::DataError & e) {
        throw UsageError(e.what());
      }
      if (ds.samples.empty()) {
        throw UsageError("dataset is empty: " + analyze_data);
      }
      const auto report = olbench::distribution_report(ds, bins);
      olbench::export_figures(report, analyze_c.out_dir);
      const fs::path dir(analyze_c.out_dir);
      const auto summary = olbench::to_json(report);
      write_text(dir / "distribution.json", summary.dump(2) + "\n");
      write_manifest("analyze", args, analyze_c, {{"bins", bins}}, {{"dataset", analyze_data}},
                     {{"summary", (dir / "distribution.json").string()}});
      std::printf("heading band fraction   %.4f (|theta_3s| <= %.2f rad)\n", report.heading_band_fraction,
                  olbench::kHeadingBand);
      std::printf("curvature band fraction %.4f (|kappa| <= %.2f rad)\n", report.curvature_band_fraction,
                  olbench::kCurvatureBand);
      return kExitOk;
    }
  } catch (const UsageError & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
