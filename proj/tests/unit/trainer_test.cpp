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


#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "olbench/trainer.hpp"

namespace olbench
{
namespace
{

TEST(CosineLr, EndpointsAndShape)
{
  EXPECT_EQ(cosine_lr(0, 100, 1e-3), 1e-3);
  EXPECT_NEAR(cosine_lr(50, 100, 1e-3), 5e-4, 1e-18);
  EXPECT_NEAR(cosine_lr(99, 100, 1e-3), 0.5e-3 * (1.0 + std::cos(std::numbers::pi * 0.99)), 1e-18);
  EXPECT_THROW(cosine_lr(100, 100, 1e-3), std::out_of_range);
  double prev = cosine_lr(0, 733, 4e-6);
  for (std::size_t s = 1; s < 733; ++s) {
    const double lr = cosine_lr(s, 733, 4e-6);
    EXPECT_LE(lr, prev);
    EXPECT_GT(lr, 0.0);
    prev = lr;
  }
}

TEST(AdamW, ZeroGradientWithoutDecayLeavesParameters)
{
  std::vector<double> p{1.0, -2.0, 0.0};
  std::vector<double> g(3, 0.0);
  std::vector<double> m(3, 0.0);
  std::vector<double> v(3, 0.0);
  for (std::uint64_t t = 1; t <= 10; ++t) {
    adamw_update(p, g, m, v, t, 0.1, 0.0, 0.9, 0.999, 1e-8);
  }
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 0.0}));
}

TEST(AdamW, ZeroGradientDecayShrinksByOneMinusLrWd)
{
  std::vector<double> p{1.0, -3.0};
  std::vector<double> g(2, 0.0);
  std::vector<double> m(2, 0.0);
  std::vector<double> v(2, 0.0);
  adamw_update(p, g, m, v, 1, 1.0, 0.01, 0.9, 0.999, 1e-8);
  EXPECT_DOUBLE_EQ(p[0], 0.99);
  EXPECT_DOUBLE_EQ(p[1], -2.97);
}

TEST(AdamW, FirstStepMovesByLearningRate)
{
  std::vector<double> p{0.5};
  std::vector<double> g{3.0};
  std::vector<double> m{0.0};
  std::vector<double> v{0.0};
  adamw_update(p, g, m, v, 1, 0.01, 0.0, 0.9, 0.999, 1e-8);
  EXPECT_NEAR(p[0], 0.5 - 0.01 * 3.0 / (3.0 + 1e-8), 1e-15);
}

double reference_quadratic(double p, double lr, double wd, int steps)
{
  double m = 0.0;
  double v = 0.0;
  for (int t = 1; t <= steps; ++t) {
    const double g = 2.0 * p;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    p = p - lr * (mh / (std::sqrt(vh) + 1e-8) + wd * p);
  }
  return p;
}

TEST(AdamW, ScalarQuadraticConverges)
{
  for (double wd : {0.0, 1e-2}) {
    std::vector<double> p{1.0};
    std::vector<double> g{0.0};
    std::vector<double> m{0.0};
    std::vector<double> v{0.0};
    for (std::uint64_t t = 1; t <= 2000; ++t) {
      g[0] = 2.0 * p[0];
      adamw_update(p, g, m, v, t, 0.1, wd, 0.9, 0.999, 1e-8);
    }
    EXPECT_LT(std::abs(p[0]), 1e-3);
    EXPECT_NEAR(p[0], reference_quadratic(1.0, 0.1, wd, 2000), 1e-12);
  }
}

TEST(AdamW, BiasesAreNotDecayed)
{
  auto net = init_params({12, 4, 18}, 2, InputMask{true, false, false, false});
  for (auto & l : net.layers) {
    std::fill(l.bias.begin(), l.bias.end(), 1.0);
  }
  const auto before = net;
  auto grads = net.make_gradients();
  auto state = AdamWState::for_network(net);
  TrainConfig cfg;
  cfg.weight_decay = 0.5;
  adamw_step(net, grads, state, 0.1, cfg);
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    for (double b : net.layers[k].bias) {
      EXPECT_EQ(b, 1.0);
    }
    for (std::size_t i = 0; i < net.layers[k].weight.size(); ++i) {
      EXPECT_DOUBLE_EQ(net.layers[k].weight[i], before.layers[k].weight[i] * 0.95);
    }
  }
}

TEST(AdamW, NonFiniteGradientIsReported)
{
  auto net = init_params({12, 4, 18}, 2, InputMask{true, false, false, false});
  auto grads = net.make_gradients();
  grads.layers[1].weight[7] = std::numeric_limits<double>::quiet_NaN();
  auto state = AdamWState::for_network(net);
  try {
    adamw_step(net, grads, state, 0.1, TrainConfig{});
    FAIL() << "expected runtime_error";
  } catch (const std::runtime_error & e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("layer 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("index 7"), std::string::npos) << msg;
  }
}

Dataset straight_set(std::size_t n, std::uint64_t seed)
{
  SyntheticConfig cfg;
  cfg.n_samples = n;
  cfg.straight_fraction = 1.0;
  cfg.speed_range = {2.0, 6.0};
  cfg.obstacle_density = 0.0;
  cfg.rng_seed = seed;
  return generate_synthetic(cfg);
}

TEST(Train, StepCountLearningRateAndDeterminism)
{
  const auto ds = straight_set(10, 1);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.lr0 = 1e-3;
  auto a = make_planner(InputMask{}, 0, 16);
  auto b = make_planner(InputMask{}, 0, 16);
  const auto la = train(ds, a, cfg);
  const auto lb = train(ds, b, cfg);
  EXPECT_EQ(la.step_loss.size(), 6u);
  EXPECT_EQ(total_steps(10, cfg), 6u);
  EXPECT_EQ(la.step_lr.front(), 1e-3);
  EXPECT_EQ(la, lb);
  EXPECT_EQ(a, b);
  EXPECT_EQ(la.epochs.size(), 2u);
}

TEST(Train, RejectsBadConfiguration)
{
  auto net = make_planner(InputMask{}, 0, 8);
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(train(straight_set(4, 0), net, cfg), std::invalid_argument);
  EXPECT_THROW(train(Dataset{}, net, TrainConfig{}), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Train, FitsSmallStraightSet)
{
  const auto ds = straight_set(32, 5);
  TrainConfig cfg;
  cfg.lr0 = 1e-3;
  cfg.epochs = 60;
  cfg.weight_decay = 0.0;
  auto net = make_planner(InputMask{}, 3, 64);
  const auto log = train(ds, net, cfg);
  EXPECT_LT(log.epochs.back().mean_loss, 0.25 * log.epochs.front().mean_loss);
  // Adam on an L1 objective oscillates near the optimum, so the trend is checked on block means.
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < 4; ++b) {
    double mean = 0.0;
    for (std::size_t e = 15 * b; e < 15 * (b + 1); ++e) {
      mean += log.epochs[e].mean_loss / 15.0;
    }
    EXPECT_LT(mean, prev) << "block " << b;
    prev = mean;
  }
  double l2 = 0.0;
  for (const auto & s : ds.samples) {
    const auto pred = forward(net, encode_input(s, net.mask));
    for (std::size_t i = 0; i < 6; ++i) {
      l2 += std::hypot(pred[i].x - s.gt_future[i].x, pred[i].y - s.gt_future[i].y);
    }
  }
  EXPECT_LT(l2 / (32.0 * 6.0), 0.5);
}

}  // namespace
}  // namespace olbench
