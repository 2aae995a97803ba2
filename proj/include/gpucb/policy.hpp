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

#ifndef GPUCB_POLICY_HPP
#define GPUCB_POLICY_HPP

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gpucb/cpd.hpp"
#include "gpucb/environment.hpp"
#include "gpucb/gpr.hpp"
#include "gpucb/kernel.hpp"

namespace gpucb {

enum class DetectorMode {
  kCpd,     // two-window GPR detector on the uniform buffer
  kOracle,  // resets exactly after the true change-points
  kNever,   // detector with an infinite threshold
  kNone,    // plain GP-UCB, requires xi = 0
};

std::string to_string(DetectorMode mode);

enum class ActionMode { kUniform, kUcb };

struct AgentConfig {
  double xi = std::sqrt(3.0);
  double big_d = 0.02;  // beta coefficient
  int horizon = 1200;
  double sigma2 = 1.0;
  KernelSpec kernel;
  int dim = 1;
  CpdConfig cpd;
  DetectorMode detector = DetectorMode::kCpd;
  /// Interior change-points used by kOracle.
  std::vector<int> oracle_change_points;

  void validate() const;
};

/// sigma^2 = 6 g^2 ln T for noise standard deviation g.
double default_sigma2(double noise_sd, int horizon);

/// beta_t = D * t^{d(d+1) / (2 alpha + d(d+1))} * (ln T)^4. The horizon is
/// real-valued here; AgentConfig passes its integer horizon.
double beta(double big_d, double alpha, int dim, std::size_t t, double horizon);
double beta(const AgentConfig& cfg, std::size_t t);
/// rho_t = sigma^2 / t.
double rho_ucb(const AgentConfig& cfg, std::size_t t);

struct Observation {
  std::size_t index = 0;  // grid node
  double y = 0.0;
};

struct AgentState {
  std::vector<Observation> history;
  std::vector<Observation> uniformly_sampled;
};

/// |uniformly_sampled| <= xi * sqrt(|history|), evaluated literally.
bool should_explore(const AgentState& state, const AgentConfig& cfg);

struct Action {
  std::size_t index = 0;
  ActionMode mode = ActionMode::kUniform;
};

struct ScanOutcome {
  std::size_t detect_calls = 0;
  std::optional<std::size_t> fired_at;  // half-window size of the detection
  bool reset = false;
};

struct StepRecord {
  int t = 0;
  std::size_t index = 0;
  double y = 0.0;
  ActionMode mode = ActionMode::kUniform;
  double regret = 0.0;
  bool reset = false;
};

/// GP-UCB with scheduled uniform exploration and a change-point detector that
/// discards all data on detection. Actions are nodes of a fixed grid, which
/// also serves as the detector's quadrature grid.
///
/// Uniform steps draw a node uniformly from `rng`; the other steps play the
/// grid argmax of mu + sqrt(beta) * sigma with ties broken by the smallest
/// index. The posterior over the history is cached and extended one node at a
/// time; any reset drops it.
class GpUcbAgent {
 public:
  /// If cfg.cpd.quad_grid is empty it is filled with the grid nodes.
  GpUcbAgent(AgentConfig cfg, std::shared_ptr<const GridKernel> grid);

  const AgentConfig& config() const { return cfg_; }
  const AgentState& state() const { return state_; }
  std::size_t grid_size() const { return grid_->size(); }

  bool should_explore() const { return gpucb::should_explore(state_, cfg_); }
  Action select_action(Rng& rng);
  /// Appends the pair; on uniform steps runs the tail scan for kCpd.
  ScanOutcome observe(std::size_t index, double y, ActionMode mode);
  StepRecord step(const PiecewiseEnv& env, int t, Rng& rng);
  /// Clears both lists and the cached posterior.
  void reset();

  /// Posterior over the full history, brought up to date.
  const GridPosterior& posterior();
  /// Scores mu + sqrt(beta_{t'}) * sigma at every node with t' = |history|.
  Eigen::VectorXd ucb_scores();
  /// sqrt(beta_{t'}) * sigma at every node.
  Eigen::VectorXd exploration_bonus();

 private:
  ScanOutcome scan_tails();

  AgentConfig cfg_;
  std::shared_ptr<const GridKernel> grid_;
  AgentState state_;
  std::optional<GridPosterior> cache_;
};

}  // namespace gpucb

#endif  // GPUCB_POLICY_HPP
