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

#ifndef GPUCB_ENVIRONMENT_HPP
#define GPUCB_ENVIRONMENT_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "gpucb/kernel.hpp"
#include "json.hpp"

namespace gpucb {

using Rng = std::mt19937_64;

/// Axis-aligned box discretised into `points_per_axis` nodes per coordinate,
/// endpoints included.
struct DomainBox {
  Eigen::VectorXd low = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd high = Eigen::VectorXd::Constant(1, 5.0);
  int points_per_axis = 1000;

  int dim() const { return static_cast<int>(low.size()); }
  double measure() const;
  void validate() const;
};

/// Tensor-product grid over the box, first coordinate varying fastest.
std::vector<Point> make_grid(const DomainBox& box);

/// Draws GP(0, k) sample paths on a fixed grid. The Cholesky factor of the
/// grid Gram matrix (plus jitter) is computed once.
class GpSampler {
 public:
  /// Jitter starts at `jitter` and is multiplied by 10 at most three times.
  GpSampler(const KernelSpec& spec, std::vector<Point> grid, double jitter = 1e-8);

  Eigen::VectorXd draw(Rng& rng) const;
  double jitter() const { return jitter_; }
  const std::vector<Point>& grid() const { return grid_; }
  const KernelSpec& kernel() const { return spec_; }

 private:
  KernelSpec spec_;
  std::vector<Point> grid_;
  double jitter_;
  Eigen::MatrixXd factor_;
};

Eigen::VectorXd sample_gp_function(const KernelSpec& spec, const std::vector<Point>& grid,
                                   Rng& rng, double jitter = 1e-8);

/// Piecewise-stationary reward environment on a grid.
///
/// Period i (1-based) is active for steps tau[i-1] < t <= tau[i]; its mean
/// reward table is tables[i-1]. Immutable after construction.
class PiecewiseEnv {
 public:
  PiecewiseEnv(std::vector<Point> grid, std::vector<Eigen::VectorXd> tables,
               std::vector<int> tau, double noise_sd, std::optional<std::uint64_t> seed = {});

  int horizon() const { return tau_.back(); }
  int periods() const { return static_cast<int>(tables_.size()); }
  std::size_t grid_size() const { return grid_.size(); }
  const std::vector<Point>& grid() const { return grid_; }
  const std::vector<Eigen::VectorXd>& tables() const { return tables_; }
  const std::vector<int>& tau() const { return tau_; }
  /// Interior change-points tau_1 .. tau_{K-1}.
  std::vector<int> change_points() const;
  double noise_sd() const { return noise_sd_; }
  const std::vector<double>& f_max() const { return f_max_; }
  std::size_t argmax(int period) const;
  std::optional<std::uint64_t> seed() const { return seed_; }

  /// Period index in 1..K active at step t.
  int kappa(int t) const;
  double mean_reward(int t, std::size_t index) const;
  double reward(int t, std::size_t index, Rng& rng) const;
  double instant_regret(int t, std::size_t index) const;
  /// Largest possible single-step regret over all periods.
  double max_instant_regret() const;
  /// Squared L2 distance between periods i and i+1, mean over grid times measure.
  double true_delta_sq(int i, double domain_measure) const;

  nlohmann::json to_json() const;
  static PiecewiseEnv from_json(const nlohmann::json& j);

 private:
  void check_step(int t) const;
  void check_index(std::size_t index) const;

  std::vector<Point> grid_;
  std::vector<Eigen::VectorXd> tables_;
  std::vector<int> tau_;
  double noise_sd_;
  std::vector<double> f_max_;
  std::optional<std::uint64_t> seed_;
};

/// Evenly spaced change-points tau_i = round(i * T / K).
std::vector<int> even_change_points(int periods, int horizon);

PiecewiseEnv make_env(int periods, int horizon, const GpSampler& sampler, double noise_sd,
                      Rng& rng);
PiecewiseEnv make_env(int periods, int horizon, const KernelSpec& spec,
                      const std::vector<Point>& grid, double noise_sd, Rng& rng);
/// Seeds a fresh generator and records the seed in the snapshot.
PiecewiseEnv make_env_seeded(int periods, int horizon, const GpSampler& sampler,
                             double noise_sd, std::uint64_t seed);

}  // namespace gpucb

#endif  // GPUCB_ENVIRONMENT_HPP
