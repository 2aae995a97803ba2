// Copyright 2026 The gpucb-cpd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gpucb/policy.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include "gpucb/environment.hpp"
#include "gpucb/gpr.hpp"
#include "gtest/gtest.h"

namespace gpucb {
namespace {

constexpr int kGrid = 100;

std::shared_ptr<const GridKernel> test_grid() {
  static const auto grid = [] {
    DomainBox box;
    box.points_per_axis = kGrid;
    return std::make_shared<const GridKernel>(KernelSpec{}, make_grid(box));
  }();
  return grid;
}

AgentConfig base_config(DetectorMode mode = DetectorMode::kCpd, int horizon = 240) {
  AgentConfig c;
  c.horizon = horizon;
  c.sigma2 = default_sigma2(0.05, horizon);
  c.detector = mode;
  c.cpd.sigma2 = c.sigma2;
  c.cpd.domain_measure = 5.0;
  if (mode == DetectorMode::kNone) c.xi = 0.0;
  if (mode == DetectorMode::kNever) c.cpd.theta_coeff = std::numeric_limits<double>::infinity();
  return c;
}

PiecewiseEnv test_env(int periods, int horizon, std::uint64_t seed, double noise = 0.05) {
  Rng rng(seed);
  return make_env(periods, horizon, KernelSpec{}, test_grid()->nodes, noise, rng);
}

TEST(ScheduleTest, BetaValues) {
  EXPECT_NEAR(beta(1.0, 2.5, 1, 128, std::exp(1.0)), 4.0, 1e-12);
  AgentConfig c = base_config();
  c.horizon = 1200;
  const double l4 = std::pow(std::log(1200.0), 4);
  EXPECT_NEAR(beta(c, 1), 0.02 * l4, 1e-12);
  EXPECT_NEAR(beta(c, 2) / beta(c, 1), std::pow(2.0, 2.0 / 7.0), 1e-12);
  EXPECT_THROW(beta(c, 0), std::invalid_argument);
}

TEST(ScheduleTest, RhoUcb) {
  AgentConfig c = base_config();
  c.sigma2 = 1.0;
  EXPECT_EQ(rho_ucb(c, 1), 1.0);
  c.sigma2 = 4.0;
  EXPECT_EQ(rho_ucb(c, 2), 2.0);
  EXPECT_THROW(rho_ucb(c, 0), std::invalid_argument);
  for (std::size_t n : {1u, 10u, 100u}) {
    EXPECT_NEAR(static_cast<double>(n) * rho_ucb(c, n), c.sigma2, 1e-12);
  }
}

TEST(ScheduleTest, DefaultSigma2) {
  EXPECT_NEAR(default_sigma2(0.05, 1200), 6 * 0.0025 * std::log(1200.0), 1e-15);
}

TEST(ShouldExploreTest, Examples) {
  AgentConfig c = base_config();
  AgentState s;
  EXPECT_TRUE(should_explore(s, c));
  s.history.resize(1);
  s.uniformly_sampled.resize(2);
  EXPECT_FALSE(should_explore(s, c));
  c.xi = 0.0;
  s.uniformly_sampled.resize(1);
  EXPECT_FALSE(should_explore(s, c));
  s = AgentState{};
  EXPECT_TRUE(should_explore(s, c));
}

TEST(ConfigTest, ModeConstraints) {
  AgentConfig c = base_config(DetectorMode::kNone);
  c.xi = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = base_config(DetectorMode::kNever);
  c.cpd.theta_coeff = 2.6;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_NO_THROW(base_config(DetectorMode::kOracle).validate());
}

TEST(AgentTest, FirstActionIsUniform) {
  GpUcbAgent agent(base_config(), test_grid());
  Rng rng(1);
  EXPECT_EQ(agent.select_action(rng).mode, ActionMode::kUniform);
}

TEST(AgentTest, TinyBetaPicksTrainingPoint) {
  AgentConfig c = base_config(DetectorMode::kNone);
  c.big_d = 1e-12;
  GpUcbAgent agent(c, test_grid());
  agent.observe(0, 10.0, ActionMode::kUniform);
  Rng rng(1);
  const Action a = agent.select_action(rng);
  EXPECT_EQ(a.mode, ActionMode::kUcb);
  EXPECT_EQ(a.index, 0u);
}

TEST(AgentTest, HugeBetaPicksFarthestPoint) {
  AgentConfig c = base_config();
  c.big_d = 1e9;
  c.xi = 0.0;
  c.detector = DetectorMode::kNone;
  GpUcbAgent agent(c, test_grid());
  // The first observation is the forced uniform step.
  agent.observe(0, 0.0, ActionMode::kUniform);
  for (std::size_t g : {3u, 5u, 8u}) agent.observe(g, 0.0, ActionMode::kUcb);
  // Oracle: the node farthest from every training node.
  std::size_t want = 0;
  double best = -1.0;
  for (std::size_t g = 0; g < kGrid; ++g) {
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t h : {0u, 3u, 5u, 8u}) {
      dmin = std::min(dmin, std::abs(test_grid()->nodes[g](0) - test_grid()->nodes[h](0)));
    }
    if (dmin > best) {
      best = dmin;
      want = g;
    }
  }
  Rng rng(1);
  const Action a = agent.select_action(rng);
  EXPECT_EQ(a.mode, ActionMode::kUcb);
  EXPECT_EQ(a.index, want);
}

TEST(AgentTest, UcbObservationDoesNotScan) {
  GpUcbAgent agent(base_config(), test_grid());
  const auto out = agent.observe(3, 1.0, ActionMode::kUcb);
  EXPECT_EQ(out.detect_calls, 0u);
  EXPECT_EQ(agent.state().history.size(), 1u);
  EXPECT_TRUE(agent.state().uniformly_sampled.empty());
}

TEST(AgentTest, SingleUniformSampleMakesNoDetectCall) {
  GpUcbAgent agent(base_config(), test_grid());
  EXPECT_EQ(agent.observe(3, 1.0, ActionMode::kUniform).detect_calls, 0u);
}

TEST(AgentTest, FirstTailDetectionStopsScanAndResets) {
  GpUcbAgent agent(base_config(), test_grid());
  EXPECT_FALSE(agent.observe(10, 0.0, ActionMode::kUniform).reset);
  EXPECT_FALSE(agent.observe(40, 0.0, ActionMode::kUniform).reset);
  EXPECT_FALSE(agent.observe(70, 0.0, ActionMode::kUniform).reset);
  const auto out = agent.observe(50, 100.0, ActionMode::kUniform);
  EXPECT_TRUE(out.reset);
  ASSERT_TRUE(out.fired_at.has_value());
  EXPECT_EQ(*out.fired_at, 1u);
  EXPECT_EQ(out.detect_calls, 1u);
  EXPECT_TRUE(agent.state().history.empty());
  EXPECT_TRUE(agent.state().uniformly_sampled.empty());
}

TEST(AgentTest, NeverModeSkipsDetector) {
  GpUcbAgent agent(base_config(DetectorMode::kNever), test_grid());
  agent.observe(10, 0.0, ActionMode::kUniform);
  const auto out = agent.observe(50, 100.0, ActionMode::kUniform);
  EXPECT_FALSE(out.reset);
  EXPECT_EQ(agent.state().history.size(), 2u);
}

TEST(AgentTest, OracleResetsAfterChangePoint) {
  const PiecewiseEnv env = test_env(2, 240, 5);
  AgentConfig c = base_config(DetectorMode::kOracle);
  c.oracle_change_points = env.change_points();
  GpUcbAgent agent(c, test_grid());
  Rng rng(3);
  for (int t = 1; t <= 120; ++t) EXPECT_FALSE(agent.step(env, t, rng).reset);
  EXPECT_EQ(agent.state().history.size(), 120u);
  const StepRecord rec = agent.step(env, 121, rng);
  EXPECT_TRUE(rec.reset);
  EXPECT_EQ(rec.mode, ActionMode::kUniform);
  EXPECT_EQ(agent.state().history.size(), 1u);
}

TEST(AgentTest, PlainGpUcbExploresOnce) {
  const PiecewiseEnv env = test_env(2, 240, 6);
  GpUcbAgent agent(base_config(DetectorMode::kNone), test_grid());
  Rng rng(4);
  int uniform = 0;
  for (int t = 1; t <= 240; ++t) {
    const StepRecord rec = agent.step(env, t, rng);
    if (rec.mode == ActionMode::kUniform) {
      ++uniform;
      EXPECT_EQ(t, 1);
    }
  }
  EXPECT_EQ(uniform, 1);
}

TEST(AgentTest, StepRejectsOutOfRange) {
  const PiecewiseEnv env = test_env(1, 240, 6);
  GpUcbAgent agent(base_config(), test_grid());
  Rng rng(4);
  EXPECT_THROW(agent.step(env, 0, rng), std::out_of_range);
  EXPECT_THROW(agent.step(env, 241, rng), std::out_of_range);
}

std::vector<StepRecord> play(const PiecewiseEnv& env, const AgentConfig& c, std::uint64_t seed) {
  GpUcbAgent agent(c, test_grid());
  Rng rng(seed);
  std::vector<StepRecord> out;
  for (int t = 1; t <= env.horizon(); ++t) out.push_back(agent.step(env, t, rng));
  return out;
}

bool same_records(const std::vector<StepRecord>& a, const std::vector<StepRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].t != b[i].t || a[i].index != b[i].index || a[i].y != b[i].y ||
        a[i].mode != b[i].mode || a[i].regret != b[i].regret || a[i].reset != b[i].reset) {
      return false;
    }
  }
  return true;
}

TEST(AgentTest, Deterministic) {
  const PiecewiseEnv env = test_env(3, 240, 8);
  const auto c = base_config();
  EXPECT_TRUE(same_records(play(env, c, 11), play(env, c, 11)));
  EXPECT_FALSE(same_records(play(env, c, 11), play(env, c, 12)));
}

// ---------------------------------------------------------------------------
// Properties

TEST(AgentPropertyTest, UniformScheduleBound) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const PiecewiseEnv env = test_env(3, 240, 100 + seed);
    GpUcbAgent agent(base_config(), test_grid());
    Rng rng(seed);
    for (int t = 1; t <= env.horizon(); ++t) {
      agent.step(env, t, rng);
      const auto& s = agent.state();
      EXPECT_LE(static_cast<double>(s.uniformly_sampled.size()),
                agent.config().xi * std::sqrt(static_cast<double>(s.history.size())) + 1.0);
    }
  }
}

TEST(AgentPropertyTest, ResetEmptiesBothLists) {
  AgentConfig c = base_config();
  c.cpd.c_rho = 0.25;  // frequent detections
  int resets = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const PiecewiseEnv env = test_env(4, 240, 200 + seed);
    GpUcbAgent agent(c, test_grid());
    Rng rng(seed);
    for (int t = 1; t <= env.horizon(); ++t) {
      const Action a = agent.select_action(rng);
      const double y = env.reward(t, a.index, rng);
      if (agent.observe(a.index, y, a.mode).reset) {
        ++resets;
        EXPECT_TRUE(agent.state().history.empty());
        EXPECT_TRUE(agent.state().uniformly_sampled.empty());
      }
    }
  }
  EXPECT_GT(resets, 0);
}

TEST(AgentPropertyTest, CachedPosteriorMatchesRefit) {
  const PiecewiseEnv env = test_env(2, 240, 31);
  const AgentConfig c = base_config();
  GpUcbAgent agent(c, test_grid());
  Rng rng(5);
  std::mt19937_64 pick_rng(6);
  std::bernoulli_distribution check(20.0 / 240.0);
  int checked = 0;
  for (int t = 1; t <= env.horizon(); ++t) {
    agent.step(env, t, rng);
    const auto& h = agent.state().history;
    if (h.empty() || !check(pick_rng)) continue;
    ++checked;
    Dataset d;
    for (const auto& o : h) d.push_back(Sample{test_grid()->nodes[o.index], o.y});
    const auto full = GprModel::fit(c.kernel, d, rho_ucb(c, h.size()), c.sigma2);
    const GridPosterior& post = agent.posterior();
    for (std::size_t g = 0; g < kGrid; ++g) {
      EXPECT_NEAR(post.mean(g), full.predict_mean(test_grid()->nodes[g]), 1e-6);
      EXPECT_NEAR(post.variance(g), full.predict_var(test_grid()->nodes[g]), 1e-6);
    }
  }
  EXPECT_GT(checked, 5);
}

TEST(AgentPropertyTest, BonusScalesWithRootBeta) {
  AgentConfig a = base_config();
  AgentConfig b = a;
  b.big_d = a.big_d * 9.0;
  GpUcbAgent x(a, test_grid()), y(b, test_grid());
  for (std::size_t g : {4u, 30u, 77u}) {
    x.observe(g, 0.3, ActionMode::kUcb);
    y.observe(g, 0.3, ActionMode::kUcb);
  }
  const Eigen::VectorXd bx = x.exploration_bonus();
  const Eigen::VectorXd by = y.exploration_bonus();
  for (Eigen::Index g = 0; g < bx.size(); ++g) EXPECT_NEAR(by(g), 3.0 * bx(g), 1e-9);

  // A constant shift of every score leaves the argmax alone.
  Eigen::VectorXd s = x.ucb_scores();
  Eigen::Index i0 = 0, i1 = 0;
  s.maxCoeff(&i0);
  s.array() += 17.0;
  s.maxCoeff(&i1);
  EXPECT_EQ(i0, i1);
}

TEST(AgentPropertyTest, SilentDetectorMatchesNever) {
  const PiecewiseEnv env = test_env(2, 240, 41);
  AgentConfig silent = base_config();
  silent.cpd.theta_coeff = 1e12;
  const auto a = play(env, silent, 9);
  for (const auto& r : a) ASSERT_FALSE(r.reset);
  EXPECT_TRUE(same_records(a, play(env, base_config(DetectorMode::kNever), 9)));
}

}  // namespace
}  // namespace gpucb
