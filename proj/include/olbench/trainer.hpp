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
#include <fstream>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "olbench/dataio.hpp"
#include "olbench/model.hpp"
#include "olbench/rng.hpp"

namespace olbench
{

struct TrainConfig
{
  double lr0 = 4e-6;
  double weight_decay = 1e-2;
  std::size_t epochs = 6;
  std::size_t batch_size = 4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  bool shuffle = true;
  LossConfig loss;

  void validate() const
  {
    if (!(lr0 > 0.0)) {
      throw std::invalid_argument("TrainConfig.lr0: must be > 0");
    }
    if (epochs < 1) {
      throw std::invalid_argument("TrainConfig.epochs: must be >= 1");
    }
    if (batch_size < 1) {
      throw std::invalid_argument("TrainConfig.batch_size: must be >= 1");
    }
    if (!(weight_decay >= 0.0)) {
      throw std::invalid_argument("TrainConfig.weight_decay: must be >= 0");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw std::invalid_argument("TrainConfig.betas: must lie in [0, 1)");
    }
    if (!(eps > 0.0)) {
      throw std::invalid_argument("TrainConfig.eps: must be > 0");
    }
    loss.validate();
  }
};

struct EpochSummary
{
  std::size_t epoch = 0;
  double mean_loss = 0.0;

  friend bool operator==(const EpochSummary &, const EpochSummary &) = default;
};

struct TrainLog
{
  std::vector<double> step_loss;
  std::vector<double> step_lr;
  std::vector<EpochSummary> epochs;

  friend bool operator==(const TrainLog &, const TrainLog &) = default;
};

/// Single cosine annealing from lr0 to 0 over `total_steps`.
inline double cosine_lr(std::size_t step, std::size_t total_steps, double lr0)
{
  if (step >= total_steps) {
    throw std::out_of_range(
      "cosine_lr: step " + std::to_string(step) + " outside [0, " + std::to_string(total_steps) + ")");
  }
  const double phase = std::numbers::pi * static_cast<double>(step) / static_cast<double>(total_steps);
  return 0.5 * lr0 * (1.0 + std::cos(phase));
}

/// One AdamW update on a flat tensor:
/// p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p).
/// `step` is the 1-based update count used for bias correction.
inline void adamw_update(
  std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
  std::uint64_t step, double lr, double weight_decay, double beta1, double beta2, double eps)
{
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    params[i] -= lr * (m_hat / (std::sqrt(v_hat) + eps) + weight_decay * params[i]);
  }
}

struct AdamWState
{
  Gradients m;
  Gradients v;
  std::uint64_t t = 0;

  static AdamWState for_network(const Mlp & net) { return {net.make_gradients(), net.make_gradients(), 0}; }
};

/// AdamW over every layer; biases are exempt from weight decay.
inline void adamw_step(Mlp & net, const Gradients & grads, AdamWState & state, double lr, const TrainConfig & cfg)
{
  if (grads.layers.size() != net.layers.size() || state.m.layers.size() != net.layers.size()) {
    throw std::invalid_argument("adamw_step: gradient or state shape mismatch");
  }
  for (std::size_t k = 0; k < grads.layers.size(); ++k) {
    const auto check = [&](const std::vector<double> & values, const char * what) {
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
          std::ostringstream msg;
          msg << "adamw_step: non-finite gradient " << values[i] << " in layer " << k << " " << what
              << " at index " << i << " (update " << state.t + 1 << ")";
          throw std::runtime_error(msg.str());
        }
      }
    };
    check(grads.layers[k].weight, "weight");
    check(grads.layers[k].bias, "bias");
  }
  ++state.t;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    auto & layer = net.layers[k];
    adamw_update(layer.weight, grads.layers[k].weight, state.m.layers[k].weight, state.v.layers[k].weight,
                 state.t, lr, cfg.weight_decay, cfg.beta1, cfg.beta2, cfg.eps);
    adamw_update(layer.bias, grads.layers[k].bias, state.m.layers[k].bias, state.v.layers[k].bias, state.t,
                 lr, 0.0, cfg.beta1, cfg.beta2, cfg.eps);
  }
}

inline std::size_t total_steps(std::size_t n_samples, const TrainConfig & cfg)
{
  return cfg.epochs * ((n_samples + cfg.batch_size - 1) / cfg.batch_size);
}

/// Minibatch AdamW with cosine-annealed learning rate. The last partial batch is kept
/// and its gradient averaged over its actual size.
inline TrainLog train(const Dataset & ds, Mlp & net, const TrainConfig & cfg)
{
  cfg.validate();
  if (ds.samples.empty()) {
    throw std::invalid_argument("train: dataset is empty");
  }
  std::vector<std::vector<double>> inputs;
  inputs.reserve(ds.samples.size());
  for (const auto & s : ds.samples) {
    inputs.push_back(encode_input(s, net.mask));
  }
  if (inputs.front().size() != net.input_dim()) {
    throw std::invalid_argument("train: network input size does not match its input mask");
  }

  const std::size_t n = ds.samples.size();
  const std::size_t steps = total_steps(n, cfg);
  TrainLog log;
  log.step_loss.reserve(steps);
  log.step_lr.reserve(steps);

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto grads = net.make_gradients();
  auto state = AdamWState::for_network(net);
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) {
      rng.shuffle(std::span<std::size_t>(order));
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      grads.zero();
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const auto idx = order[b];
        batch_loss += accumulate_gradients(net, inputs[idx], ds.samples[idx].gt_future, cfg.loss, grads).value;
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      grads.scale(inv);
      const double lr = cosine_lr(step, steps, cfg.lr0);
      adamw_step(net, grads, state, lr, cfg);
      log.step_loss.push_back(batch_loss * inv);
      log.step_lr.push_back(lr);
      epoch_loss += batch_loss;
      ++step;
    }
    log.epochs.push_back({epoch, epoch_loss / static_cast<double>(n)});
  }
  return log;
}

/// CSV with header `step,lr,loss`.
inline void write_train_log_csv(const TrainLog & log, const std::string & path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write train log '" + path + "'");
  }
  out << "step,lr,loss\n";
  char buf[96];
  for (std::size_t i = 0; i < log.step_loss.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", i, log.step_lr[i], log.step_loss[i]);
    out << buf;
  }
}

}  // namespace olbench
