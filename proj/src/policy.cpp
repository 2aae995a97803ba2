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

#include <algorithm>
#include <cassert>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>

namespace gpucb {

std::string to_string(DetectorMode mode) {
  switch (mode) {
    case DetectorMode::kCpd:
      return "GP-UCB-CPD";
    case DetectorMode::kOracle:
      return "GP-UCB-Oracle";
    case DetectorMode::kNever:
      return "GP-UCB-NO-Detector";
    case DetectorMode::kNone:
      return "GP-UCB";
  }
  return "unknown";
}

void AgentConfig::validate() const {
  kernel.validate();
  if (!(xi >= 0.0) || !std::isfinite(xi)) throw std::invalid_argument("xi must be >= 0");
  if (!(big_d > 0.0) || !std::isfinite(big_d)) throw std::invalid_argument("D must be > 0");
  if (horizon < 2) throw std::invalid_argument("horizon T must be >= 2");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw std::invalid_argument("sigma2 must be > 0");
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  if (detector == DetectorMode::kNone && xi != 0.0) {
    throw std::invalid_argument("detector mode None requires xi = 0");
  }
  if (detector == DetectorMode::kNever && !std::isinf(cpd.theta_coeff)) {
    throw std::invalid_argument("detector mode Never requires an infinite threshold");
  }
  if (detector == DetectorMode::kCpd || detector == DetectorMode::kNever) cpd.validate();
}

double default_sigma2(double noise_sd, int horizon) {
  return 6.0 * noise_sd * noise_sd * std::log(static_cast<double>(horizon));
}

double beta(double big_d, double alpha, int dim, std::size_t t, double horizon) {
  if (t == 0) throw std::invalid_argument("beta: t must be >= 1");
  const double dd = static_cast<double>(dim) * (dim + 1);
  const double log_t = std::log(horizon);
  return big_d * std::pow(static_cast<double>(t), dd / (2.0 * alpha + dd)) * std::pow(log_t, 4);
}

double beta(const AgentConfig& cfg, std::size_t t) {
  return beta(cfg.big_d, cfg.kernel.alpha(), cfg.dim, t, static_cast<double>(cfg.horizon));
}

double rho_ucb(const AgentConfig& cfg, std::size_t t) {
  if (t == 0) throw std::invalid_argument("rho_ucb: t must be >= 1");
  return cfg.sigma2 / static_cast<double>(t);
}

bool should_explore(const AgentState& state, const AgentConfig& cfg) {
  return static_cast<double>(state.uniformly_sampled.size()) <=
         cfg.xi * std::sqrt(static_cast<double>(state.history.size()));
}

// ---------------------------------------------------------------------------

GpUcbAgent::GpUcbAgent(AgentConfig cfg, std::shared_ptr<const GridKernel> grid)
    : cfg_(std::move(cfg)), grid_(std::move(grid)) {
  if (!grid_ || grid_->size() == 0) throw std::invalid_argument("GpUcbAgent: empty grid");
  if (cfg_.cpd.quad_grid.empty()) cfg_.cpd.quad_grid = grid_->nodes;
  cfg_.validate();
  if (cfg_.cpd.quad_grid.size() != grid_->size()) {
    throw std::invalid_argument("GpUcbAgent: detector quadrature grid must be the action grid");
  }
}

void GpUcbAgent::reset() {
  state_.history.clear();
  state_.uniformly_sampled.clear();
  cache_.reset();
}

const GridPosterior& GpUcbAgent::posterior() {
  if (!cache_) {
    // n * rho_ucb(n) = sigma^2 for every n, so one diagonal serves all sizes.
    cache_.emplace(grid_, cfg_.sigma2, cfg_.sigma2);
  }
  for (std::size_t i = cache_->size(); i < state_.history.size(); ++i) {
    cache_->append(state_.history[i].index, state_.history[i].y);
  }
  return *cache_;
}

Eigen::VectorXd GpUcbAgent::exploration_bonus() {
  const auto& post = posterior();
  const std::size_t t_prime = std::max<std::size_t>(state_.history.size(), 1);
  const double root_beta = std::sqrt(beta(cfg_, t_prime));
  Eigen::VectorXd bonus(static_cast<Eigen::Index>(grid_->size()));
  for (std::size_t g = 0; g < grid_->size(); ++g) {
    bonus(static_cast<Eigen::Index>(g)) = root_beta * std::sqrt(post.variance(g));
  }
  return bonus;
}

Eigen::VectorXd GpUcbAgent::ucb_scores() {
  Eigen::VectorXd scores = exploration_bonus();
  scores += posterior().means();
  return scores;
}

Action GpUcbAgent::select_action(Rng& rng) {
  if (should_explore()) {
    std::uniform_int_distribution<std::size_t> pick(0, grid_->size() - 1);
    return Action{pick(rng), ActionMode::kUniform};
  }
  // The first step always explores (0 <= 0), so the history is non-empty here.
  assert(!state_.history.empty());
  const Eigen::VectorXd scores = ucb_scores();
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Eigen::Index g = 0; g < scores.size(); ++g) {
    if (scores(g) > best_score) {
      best_score = scores(g);
      best = static_cast<std::size_t>(g);
    }
  }
  return Action{best, ActionMode::kUcb};
}

ScanOutcome GpUcbAgent::observe(std::size_t index, double y, ActionMode mode) {
  if (index >= grid_->size()) throw std::out_of_range("observe: grid index out of range");
  state_.history.push_back(Observation{index, y});
  if (mode != ActionMode::kUniform) return {};
  state_.uniformly_sampled.push_back(Observation{index, y});
  if (cfg_.detector != DetectorMode::kCpd && cfg_.detector != DetectorMode::kNever) return {};
  return scan_tails();
}

ScanOutcome GpUcbAgent::scan_tails() {
  ScanOutcome out;
  const auto& buffer = state_.uniformly_sampled;
  const std::size_t half_max = buffer.size() / 2;
  std::vector<std::size_t> nodes;
  std::vector<double> ys;
  for (std::size_t n = 1; n <= half_max; ++n) {
    // An infinite threshold can never be exceeded.
    if (std::isinf(theta(cfg_.cpd, n))) continue;
    nodes.clear();
    ys.clear();
    for (std::size_t i = buffer.size() - 2 * n; i < buffer.size(); ++i) {
      nodes.push_back(buffer[i].index);
      ys.push_back(buffer[i].y);
    }
    ++out.detect_calls;
    if (detect_on_nodes(cfg_.cpd, *grid_, nodes, ys).detected) {
      out.fired_at = n;
      out.reset = true;
      reset();
      break;
    }
  }
  return out;
}

StepRecord GpUcbAgent::step(const PiecewiseEnv& env, int t, Rng& rng) {
  if (t < 1 || t > cfg_.horizon) throw std::out_of_range("step: t outside 1..T");
  StepRecord rec;
  rec.t = t;
  if (cfg_.detector == DetectorMode::kOracle &&
      std::find(cfg_.oracle_change_points.begin(), cfg_.oracle_change_points.end(), t - 1) !=
          cfg_.oracle_change_points.end()) {
    reset();
    rec.reset = true;
  }
  const Action action = select_action(rng);
  rec.index = action.index;
  rec.mode = action.mode;
  rec.y = env.reward(t, action.index, rng);
  rec.regret = env.instant_regret(t, action.index);
  if (observe(action.index, rec.y, action.mode).reset) rec.reset = true;
  return rec;
}

}  // namespace gpucb
