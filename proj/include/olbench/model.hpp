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
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "olbench/core.hpp"
#include "olbench/rng.hpp"

namespace olbench
{

/// Output width: (x, y, theta) for each future frame.
inline constexpr std::size_t kOutputDim = 3 * kFutureFrames;
inline constexpr std::size_t kDefaultHidden = 512;

/// Which input groups the planner sees. The four ablation rows are
/// trajectory, +acceleration, +velocity, +command.
struct InputMask
{
  bool use_trajectory = true;
  bool use_velocity = true;
  bool use_acceleration = true;
  bool use_command = true;

  friend bool operator==(const InputMask &, const InputMask &) = default;

  std::size_t input_dim() const
  {
    return (use_trajectory ? 3 * kHistoryFrames : 0) + (use_velocity ? 3 : 0) +
           (use_acceleration ? 3 : 0) + (use_command ? 3 : 0);
  }

  void validate() const
  {
    if (input_dim() == 0) {
      throw std::invalid_argument("InputMask: at least one input group must be enabled");
    }
  }
};

struct LossConfig
{
  double grid_size = 0.5;
  double coincident_weight = 0.5;

  void validate() const
  {
    if (!(grid_size > 0.0)) {
      throw std::invalid_argument("LossConfig.grid_size: must be > 0");
    }
    if (!(coincident_weight > 0.0 && coincident_weight <= 1.0)) {
      throw std::invalid_argument("LossConfig.coincident_weight: must lie in (0, 1]");
    }
  }
};

/// Fully connected layer; `weight` is out x in, row-major.
struct DenseLayer
{
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer &, const DenseLayer &) = default;
};

/// Gradient buffers shaped like an Mlp's layers.
struct Gradients
{
  std::vector<DenseLayer> layers;

  void zero()
  {
    for (auto & l : layers) {
      std::fill(l.weight.begin(), l.weight.end(), 0.0);
      std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
  }

  void scale(double factor)
  {
    for (auto & l : layers) {
      for (auto & w : l.weight) {
        w *= factor;
      }
      for (auto & b : l.bias) {
        b *= factor;
      }
    }
  }
};

/// Dense ReLU network: Linear -> ReLU -> ... -> Linear.
struct Mlp
{
  InputMask mask;
  std::uint64_t seed = 0;
  std::vector<DenseLayer> layers;

  friend bool operator==(const Mlp &, const Mlp &) = default;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }

  std::vector<std::size_t> sizes() const
  {
    std::vector<std::size_t> s;
    if (!layers.empty()) {
      s.push_back(layers.front().in);
    }
    for (const auto & l : layers) {
      s.push_back(l.out);
    }
    return s;
  }

  Gradients make_gradients() const
  {
    Gradients g;
    for (const auto & l : layers) {
      g.layers.push_back({l.in, l.out, std::vector<double>(l.weight.size(), 0.0),
                          std::vector<double>(l.bias.size(), 0.0)});
    }
    return g;
  }
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
inline Mlp init_params(const std::vector<std::size_t> & sizes, std::uint64_t seed, InputMask mask = {})
{
  mask.validate();
  if (sizes.size() < 2) {
    throw std::invalid_argument("init_params: need at least input and output sizes");
  }
  if (sizes.front() != mask.input_dim()) {
    throw std::invalid_argument(
      "init_params: input size " + std::to_string(sizes.front()) + " does not match mask dimension " +
      std::to_string(mask.input_dim()));
  }
  if (sizes.back() != kOutputDim) {
    throw std::invalid_argument("init_params: output size must be " + std::to_string(kOutputDim));
  }
  Mlp net;
  net.mask = mask;
  net.seed = seed;
  Rng rng(seed);
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    if (sizes[k] == 0 || sizes[k + 1] == 0) {
      throw std::invalid_argument("init_params: layer sizes must be positive");
    }
    DenseLayer layer{sizes[k], sizes[k + 1], std::vector<double>(sizes[k] * sizes[k + 1]),
                     std::vector<double>(sizes[k + 1], 0.0)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[k]));
    for (auto & w : layer.weight) {
      w = bound * (2.0 * rng.uniform01() - 1.0);
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

inline Mlp make_planner(InputMask mask, std::uint64_t seed, std::size_t hidden = kDefaultHidden)
{
  return init_params({mask.input_dim(), hidden, hidden, kOutputDim}, seed, mask);
}

/// Flattened history (oldest first), velocity, acceleration, then one-hot command.
inline std::vector<double> encode_input(const EgoSample & sample, const InputMask & mask)
{
  std::vector<double> x;
  x.reserve(mask.input_dim());
  if (mask.use_trajectory) {
    for (const auto & p : sample.history.waypoints) {
      x.insert(x.end(), {p.x, p.y, p.theta});
    }
  }
  const auto & k = sample.kinematics;
  if (mask.use_velocity) {
    x.insert(x.end(), {k.vx, k.vy, k.omega});
  }
  if (mask.use_acceleration) {
    x.insert(x.end(), {k.ax, k.ay, k.beta});
  }
  if (mask.use_command) {
    const auto hot = one_hot(sample.command);
    x.insert(x.end(), hot.begin(), hot.end());
  }
  return x;
}

/// Per-layer inputs and pre-activations kept for backpropagation.
struct ForwardCache
{
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> pre;
};

inline std::vector<double> forward_raw(const Mlp & net, std::span<const double> x, ForwardCache * cache = nullptr)
{
  if (x.size() != net.input_dim()) {
    throw std::invalid_argument(
      "forward: input has " + std::to_string(x.size()) + " values, network expects " +
      std::to_string(net.input_dim()));
  }
  std::vector<double> act(x.begin(), x.end());
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const auto & layer = net.layers[k];
    std::vector<double> z(layer.bias);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double * row = layer.weight.data() + o * layer.in;
      double acc = 0.0;
      for (std::size_t i = 0; i < layer.in; ++i) {
        acc += row[i] * act[i];
      }
      z[o] += acc;
    }
    if (cache) {
      cache->inputs.push_back(act);
      cache->pre.push_back(z);
    }
    if (k + 1 < net.layers.size()) {
      for (auto & v : z) {
        v = v > 0.0 ? v : 0.0;
      }
    }
    act = std::move(z);
  }
  return act;
}

/// Reshapes an 18-vector into six (x, y, theta) poses. Theta is left unwrapped.
inline Trajectory to_trajectory(std::span<const double> out)
{
  if (out.size() % 3 != 0) {
    throw std::invalid_argument("to_trajectory: output size must be a multiple of 3");
  }
  Trajectory t;
  for (std::size_t i = 0; i < out.size(); i += 3) {
    t.waypoints.push_back({out[i], out[i + 1], out[i + 2]});
  }
  return t;
}

inline Trajectory forward(const Mlp & net, std::span<const double> x)
{
  return to_trajectory(forward_raw(net, x));
}

struct LossResult
{
  double value = 0.0;
  std::vector<double> weights;
};

/// Per-waypoint weights: `coincident_weight` when prediction and GT share an absolute
/// grid cell on both x and y (cells aligned at 0), otherwise 1.
inline std::vector<double> coincidence_weights(const Trajectory & pred, const Trajectory & gt, const LossConfig & cfg)
{
  cfg.validate();
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("loss: trajectory lengths differ");
  }
  std::vector<double> w(pred.size(), 1.0);
  const double g = cfg.grid_size;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (std::floor(pred[i].x / g) == std::floor(gt[i].x / g) &&
        std::floor(pred[i].y / g) == std::floor(gt[i].y / g)) {
      w[i] = cfg.coincident_weight;
    }
  }
  return w;
}

/// (1/N) * sum_i w_i * |pred_i - gt_i|_1 over (x, y, theta).
inline double weighted_l1(const Trajectory & pred, const Trajectory & gt, std::span<const double> weights)
{
  if (pred.size() != gt.size() || weights.size() != pred.size() || pred.size() == 0) {
    throw std::invalid_argument("loss: trajectory or weight lengths differ");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double l1 = std::abs(pred[i].x - gt[i].x) + std::abs(pred[i].y - gt[i].y) +
                      std::abs(pred[i].theta - gt[i].theta);
    total += weights[i] * l1;
  }
  return total / static_cast<double>(pred.size());
}

inline LossResult loss(const Trajectory & pred, const Trajectory & gt, const LossConfig & cfg)
{
  if (pred.size() != kFutureFrames || gt.size() != kFutureFrames) {
    throw std::invalid_argument("loss: both trajectories need " + std::to_string(kFutureFrames) + " waypoints");
  }
  LossResult r;
  r.weights = coincidence_weights(pred, gt, cfg);
  r.value = weighted_l1(pred, gt, r.weights);
  return r;
}

namespace detail
{

inline double sign_or_zero(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

inline void flatten(const Trajectory & t, std::vector<double> & out)
{
  out.clear();
  for (const auto & p : t.waypoints) {
    out.insert(out.end(), {p.x, p.y, p.theta});
  }
}

// Forward pass, then backpropagation of the weighted L1 loss into `grads`.
// Weights come from `cfg` when given, else from `fixed_weights`.
inline LossResult accumulate_impl(
  const Mlp & net, std::span<const double> x, const Trajectory & gt, const LossConfig * cfg,
  std::span<const double> fixed_weights, Gradients & grads)
{
  ForwardCache cache;
  const auto out = forward_raw(net, x, &cache);
  if (out.size() != 3 * gt.size()) {
    throw std::invalid_argument("backward: output and target sizes disagree");
  }
  if (grads.layers.size() != net.layers.size()) {
    throw std::invalid_argument("backward: gradient buffers do not match the network");
  }
  const auto pred = to_trajectory(out);
  LossResult r;
  if (cfg) {
    r.weights = coincidence_weights(pred, gt, *cfg);
  } else {
    r.weights.assign(fixed_weights.begin(), fixed_weights.end());
  }
  r.value = weighted_l1(pred, gt, r.weights);

  std::vector<double> target;
  flatten(gt, target);
  const double inv_n = 1.0 / static_cast<double>(gt.size());
  std::vector<double> delta(out.size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    delta[c] = r.weights[c / 3] * inv_n * sign_or_zero(out[c] - target[c]);
  }

  for (std::size_t k = net.layers.size(); k-- > 0;) {
    const auto & layer = net.layers[k];
    auto & g = grads.layers[k];
    const auto & input = cache.inputs[k];
    std::vector<double> dinput(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) {
        continue;
      }
      g.bias[o] += d;
      double * grow = g.weight.data() + o * layer.in;
      const double * wrow = layer.weight.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) {
        grow[i] += d * input[i];
        dinput[i] += d * wrow[i];
      }
    }
    if (k == 0) {
      break;
    }
    const auto & pre = cache.pre[k - 1];
    for (std::size_t i = 0; i < layer.in; ++i) {
      dinput[i] = pre[i] > 0.0 ? dinput[i] : 0.0;
    }
    delta = std::move(dinput);
  }
  return r;
}

}  // namespace detail

/// Adds the gradient of the L1 loss with caller-fixed waypoint weights to `grads`.
/// The L1 subgradient at 0 is 0. Returns the loss value.
inline double accumulate_gradients(
  const Mlp & net, std::span<const double> x, const Trajectory & gt, std::span<const double> weights,
  Gradients & grads)
{
  if (weights.size() != gt.size()) {
    throw std::invalid_argument("backward: weight count differs from waypoint count");
  }
  return detail::accumulate_impl(net, x, gt, nullptr, weights, grads).value;
}

/// Adds the gradient of the re-weighted loss to `grads`; weights follow the prediction.
inline LossResult accumulate_gradients(
  const Mlp & net, std::span<const double> x, const Trajectory & gt, const LossConfig & cfg, Gradients & grads)
{
  return detail::accumulate_impl(net, x, gt, &cfg, {}, grads);
}

/// Overwrites `grads` with the gradient of the re-weighted L1 loss. The coincidence
/// weights are treated as constants (no gradient through the floor test).
inline LossResult backward(
  const Mlp & net, std::span<const double> x, const Trajectory & gt, const LossConfig & cfg, Gradients & grads)
{
  grads.zero();
  return accumulate_gradients(net, x, gt, cfg, grads);
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// JSON object:
//   {"format": "olbench-mlp", "version": 1, "sizes": [d_in, h, h, 18], "seed": n,
//    "mask": {"trajectory": b, "velocity": b, "acceleration": b, "command": b},
//    "layers": [{"weight": [out*in row-major], "bias": [out]}, ...]}
// Doubles are written in shortest round-trip form, so load(save(net)) is bit-exact.

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::ordered_json checkpoint_to_json(const Mlp & net)
{
  nlohmann::ordered_json j;
  j["format"] = "olbench-mlp";
  j["version"] = kCheckpointVersion;
  j["sizes"] = net.sizes();
  j["seed"] = net.seed;
  j["mask"] = {{"trajectory", net.mask.use_trajectory},
               {"velocity", net.mask.use_velocity},
               {"acceleration", net.mask.use_acceleration},
               {"command", net.mask.use_command}};
  auto layers = nlohmann::ordered_json::array();
  for (const auto & l : net.layers) {
    layers.push_back({{"weight", l.weight}, {"bias", l.bias}});
  }
  j["layers"] = std::move(layers);
  return j;
}

inline Mlp checkpoint_from_json(const nlohmann::json & j)
{
  try {
    if (j.at("format").get<std::string>() != "olbench-mlp") {
      throw std::runtime_error("checkpoint: unexpected format tag");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw std::runtime_error("checkpoint: unsupported version");
    }
    Mlp net;
    net.seed = j.at("seed").get<std::uint64_t>();
    const auto & m = j.at("mask");
    net.mask = {m.at("trajectory").get<bool>(), m.at("velocity").get<bool>(), m.at("acceleration").get<bool>(),
                m.at("command").get<bool>()};
    const auto sizes = j.at("sizes").get<std::vector<std::size_t>>();
    const auto & layers = j.at("layers");
    if (sizes.size() != layers.size() + 1 || sizes.front() != net.mask.input_dim()) {
      throw std::runtime_error("checkpoint: sizes do not match layers or mask");
    }
    for (std::size_t k = 0; k < layers.size(); ++k) {
      DenseLayer l{sizes[k], sizes[k + 1], layers[k].at("weight").get<std::vector<double>>(),
                   layers[k].at("bias").get<std::vector<double>>()};
      if (l.weight.size() != l.in * l.out || l.bias.size() != l.out) {
        throw std::runtime_error("checkpoint: layer " + std::to_string(k) + " has wrong parameter count");
      }
      net.layers.push_back(std::move(l));
    }
    return net;
  } catch (const nlohmann::json::exception & e) {
    throw std::runtime_error(std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const Mlp & net, const std::string & path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write checkpoint '" + path + "'");
  }
  out << checkpoint_to_json(net).dump() << '\n';
  if (!out) {
    throw std::runtime_error("write failed for checkpoint '" + path + "'");
  }
}

inline Mlp load_checkpoint(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open checkpoint '" + path + "'");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception & e) {
    throw std::runtime_error("checkpoint '" + path + "': " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace olbench
