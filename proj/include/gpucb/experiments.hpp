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

#ifndef GPUCB_EXPERIMENTS_HPP
#define GPUCB_EXPERIMENTS_HPP

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gpucb/environment.hpp"
#include "gpucb/kernel.hpp"
#include "gpucb/policy.hpp"
#include "gpucb/seeding.hpp"

namespace gpucb {

struct RegretTrace {
  std::string label;
  std::vector<double> cumulative;  // cumulative[t-1] = R_t
  std::vector<int> detections;     // steps at which the agent reset its data

  double final_regret() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

/// Anything that plays one step against an environment.
template <class A>
concept EpisodeAgent = requires(A agent, const PiecewiseEnv& env, int t, Rng& rng) {
  { agent.step(env, t, rng) } -> std::same_as<StepRecord>;
};

template <EpisodeAgent A>
RegretTrace drive_episode(const PiecewiseEnv& env, A& agent, Rng& rng, std::string label) {
  RegretTrace trace;
  trace.label = std::move(label);
  trace.cumulative.reserve(static_cast<std::size_t>(env.horizon()));
  double total = 0.0;
  for (int t = 1; t <= env.horizon(); ++t) {
    const StepRecord rec = agent.step(env, t, rng);
    total += rec.regret;
    trace.cumulative.push_back(total);
    if (rec.reset) trace.detections.push_back(t);
  }
  return trace;
}

/// One episode of GpUcbAgent; kOracle agents receive env.change_points().
/// Throws std::invalid_argument when cfg.horizon differs from the env.
RegretTrace run_episode(const PiecewiseEnv& env, const AgentConfig& cfg,
                        std::shared_ptr<const GridKernel> grid, std::uint64_t seed);

/// Pointwise mean, summed in the given order.
RegretTrace average_traces(std::span<const RegretTrace> traces, std::string label);

struct ReplicatedResult {
  RegretTrace mean;
  std::vector<double> finals;  // per-replication R_T in replication order
};

using EnvGenerator = std::function<PiecewiseEnv(std::uint64_t seed)>;

/// Replication r draws its environment from derive_seed(base, r, 0) and its
/// agent from derive_seed(base, r, agent_stream). Replications may run on
/// `workers` threads; the reduction is in replication order, so the result
/// does not depend on the worker count.
ReplicatedResult run_replicated(const EnvGenerator& gen, const AgentConfig& cfg,
                                std::shared_ptr<const GridKernel> grid, int n_reps,
                                std::uint64_t base_seed, int workers = 1,
                                std::uint64_t agent_stream = 1);

struct PowerLawFit {
  double coeff = 0.0;
  double exponent = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n_points = 0;
};

/// OLS of ln y on ln x; the interval is slope +- t_{0.975, n-2} * se(slope).
PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points);

/// Every knob of the synthetic experiments; defaults are the published ones.
struct ExperimentSettings {
  KernelSpec kernel;
  DomainBox domain;
  double noise_sd = 0.05;
  double xi = std::sqrt(3.0);
  double big_d = 0.02;
  double theta_coeff = 2.6;
  double c_rho = kDefaultCRho;
  std::optional<double> sigma2;  // default 6 g^2 ln T per horizon
  int reps = 64;
  std::uint64_t base_seed = 0;
  int workers = 1;
};

/// Grid, kernel table and prior sampler shared by every replication.
class Workbench {
 public:
  explicit Workbench(const ExperimentSettings& settings);

  const ExperimentSettings& settings() const { return settings_; }
  std::shared_ptr<const GridKernel> grid() const { return grid_; }
  const GpSampler& sampler() const { return *sampler_; }

  AgentConfig agent_config(int horizon, DetectorMode mode) const;
  EnvGenerator generator(int periods, int horizon) const;
  ReplicatedResult run(int periods, int horizon, DetectorMode mode,
                       std::uint64_t agent_stream = kFirstAgentStream) const;

 private:
  ExperimentSettings settings_;
  std::shared_ptr<const GridKernel> grid_;
  std::shared_ptr<const GpSampler> sampler_;
};

struct SweepPoint {
  double x = 0.0;
  double mean_final = 0.0;
  double stderr_final = 0.0;
  std::vector<double> finals;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  PowerLawFit fit;
};

inline const std::vector<int> kSweepHorizons = {900, 1275, 1650, 2025, 2400};
inline const std::vector<int> kSweepPeriods = {3, 4, 5, 6, 7, 8, 9};

/// Regret against horizon with a fixed number of periods.
SweepResult sweep_T(const Workbench& bench, const std::vector<int>& horizons = kSweepHorizons,
                    int periods = 3);
/// Regret against the number of periods with a fixed horizon.
SweepResult sweep_K(const Workbench& bench, const std::vector<int>& periods = kSweepPeriods,
                    int horizon = 2700);

inline const std::vector<DetectorMode> kCompareModes = {
    DetectorMode::kCpd, DetectorMode::kOracle, DetectorMode::kNever, DetectorMode::kNone};

/// The four agents on shared per-replication environments, in kCompareModes order.
std::vector<ReplicatedResult> compare(const Workbench& bench, int horizon = 1200,
                                      int periods = 4);

}  // namespace gpucb

#endif  // GPUCB_EXPERIMENTS_HPP
