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

#include "gpucb/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "gpucb/seeding.hpp"

namespace gpucb {

RegretTrace run_episode(const PiecewiseEnv& env, const AgentConfig& cfg,
                        std::shared_ptr<const GridKernel> grid, std::uint64_t seed) {
  if (cfg.horizon != env.horizon()) {
    throw std::invalid_argument("run_episode: agent horizon " + std::to_string(cfg.horizon) +
                                " differs from environment horizon " +
                                std::to_string(env.horizon()));
  }
  AgentConfig episode_cfg = cfg;
  if (episode_cfg.detector == DetectorMode::kOracle) {
    episode_cfg.oracle_change_points = env.change_points();
  }
  GpUcbAgent agent(std::move(episode_cfg), std::move(grid));
  Rng rng(seed);
  return drive_episode(env, agent, rng, to_string(cfg.detector));
}

RegretTrace average_traces(std::span<const RegretTrace> traces, std::string label) {
  if (traces.empty()) throw std::invalid_argument("average_traces: no traces");
  const std::size_t len = traces.front().cumulative.size();
  RegretTrace mean;
  mean.label = std::move(label);
  mean.cumulative.assign(len, 0.0);
  for (const auto& tr : traces) {
    if (tr.cumulative.size() != len) throw std::invalid_argument("average_traces: length mismatch");
    for (std::size_t i = 0; i < len; ++i) mean.cumulative[i] += tr.cumulative[i];
  }
  const auto n = static_cast<double>(traces.size());
  for (double& v : mean.cumulative) v /= n;
  return mean;
}

ReplicatedResult run_replicated(const EnvGenerator& gen, const AgentConfig& cfg,
                                std::shared_ptr<const GridKernel> grid, int n_reps,
                                std::uint64_t base_seed, int workers,
                                std::uint64_t agent_stream) {
  if (n_reps < 1) throw std::invalid_argument("run_replicated: n_reps must be >= 1");
  std::vector<RegretTrace> traces(static_cast<std::size_t>(n_reps));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int r = next++; r < n_reps; r = next++) {
      try {
        const auto rep = static_cast<std::uint64_t>(r);
        const PiecewiseEnv env = gen(derive_seed(base_seed, rep, kEnvironmentStream));
        traces[static_cast<std::size_t>(r)] =
            run_episode(env, cfg, grid, derive_seed(base_seed, rep, agent_stream));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_reps;
      }
    }
  };

  const int threads = std::clamp(workers, 1, n_reps);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  ReplicatedResult result;
  result.mean = average_traces(traces, to_string(cfg.detector));
  result.finals.reserve(traces.size());
  for (const auto& tr : traces) {
    result.finals.push_back(tr.final_regret());
    result.mean.detections.insert(result.mean.detections.end(), tr.detections.begin(),
                                  tr.detections.end());
  }
  std::sort(result.mean.detections.begin(), result.mean.detections.end());
  return result;
}

PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw std::invalid_argument("fit_power_law: need at least 3 points");
  const auto n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) {
      throw std::invalid_argument("fit_power_law: coordinates must be strictly positive");
    }
    mx += std::log(x);
    my += std::log(y);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    const double dx = std::log(x) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y) - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_power_law: x values must not all coincide");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double sse = 0.0;
  for (const auto& [x, y] : points) {
    const double r = std::log(y) - (intercept + slope * std::log(x));
    sse += r * r;
  }
  const double se = std::sqrt(sse / (n - 2.0) / sxx);
  const boost::math::students_t dist(n - 2.0);
  const double tq = boost::math::quantile(dist, 0.975);

  PowerLawFit fit;
  fit.coeff = std::exp(intercept);
  fit.exponent = slope;
  fit.ci_low = slope - tq * se;
  fit.ci_high = slope + tq * se;
  fit.n_points = static_cast<int>(points.size());
  return fit;
}

// ---------------------------------------------------------------------------

Workbench::Workbench(const ExperimentSettings& settings) : settings_(settings) {
  settings_.kernel.validate();
  auto nodes = make_grid(settings_.domain);
  sampler_ = std::make_shared<const GpSampler>(settings_.kernel, nodes);
  grid_ = std::make_shared<const GridKernel>(settings_.kernel, std::move(nodes));
}

AgentConfig Workbench::agent_config(int horizon, DetectorMode mode) const {
  AgentConfig cfg;
  cfg.xi = mode == DetectorMode::kNone ? 0.0 : settings_.xi;
  cfg.big_d = settings_.big_d;
  cfg.horizon = horizon;
  cfg.sigma2 = settings_.sigma2 ? *settings_.sigma2 : default_sigma2(settings_.noise_sd, horizon);
  cfg.kernel = settings_.kernel;
  cfg.dim = settings_.domain.dim();
  cfg.detector = mode;
  cfg.cpd.kernel = settings_.kernel;
  cfg.cpd.c_rho = settings_.c_rho;
  cfg.cpd.theta_coeff = mode == DetectorMode::kNever ? std::numeric_limits<double>::infinity()
                                                      : settings_.theta_coeff;
  cfg.cpd.dim = cfg.dim;
  cfg.cpd.sigma2 = cfg.sigma2;
  cfg.cpd.quad_grid = grid_->nodes;
  cfg.cpd.domain_measure = settings_.domain.measure();
  return cfg;
}

EnvGenerator Workbench::generator(int periods, int horizon) const {
  even_change_points(periods, horizon);
  auto sampler = sampler_;
  const double noise = settings_.noise_sd;
  return [sampler, noise, periods, horizon](std::uint64_t seed) {
    return make_env_seeded(periods, horizon, *sampler, noise, seed);
  };
}

ReplicatedResult Workbench::run(int periods, int horizon, DetectorMode mode,
                                std::uint64_t agent_stream) const {
  return run_replicated(generator(periods, horizon), agent_config(horizon, mode), grid_,
                        settings_.reps, settings_.base_seed, settings_.workers, agent_stream);
}

namespace {

SweepPoint summarize(double x, const ReplicatedResult& res) {
  SweepPoint p;
  p.x = x;
  p.finals = res.finals;
  const auto n = static_cast<double>(res.finals.size());
  double mean = 0.0;
  for (double v : res.finals) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : res.finals) ss += (v - mean) * (v - mean);
  p.mean_final = mean;
  p.stderr_final = res.finals.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return p;
}

PowerLawFit fit_points(const std::vector<SweepPoint>& pts) {
  std::vector<std::pair<double, double>> xy;
  xy.reserve(pts.size());
  for (const auto& p : pts) xy.emplace_back(p.x, p.mean_final);
  return fit_power_law(xy);
}

}  // namespace

SweepResult sweep_T(const Workbench& bench, const std::vector<int>& horizons, int periods) {
  SweepResult out;
  for (int horizon : horizons) {
    out.points.push_back(
        summarize(horizon, bench.run(periods, horizon, DetectorMode::kCpd)));
  }
  out.fit = fit_points(out.points);
  return out;
}

SweepResult sweep_K(const Workbench& bench, const std::vector<int>& periods, int horizon) {
  SweepResult out;
  for (int k : periods) {
    out.points.push_back(summarize(k, bench.run(k, horizon, DetectorMode::kCpd)));
  }
  out.fit = fit_points(out.points);
  return out;
}

std::vector<ReplicatedResult> compare(const Workbench& bench, int horizon, int periods) {
  std::vector<ReplicatedResult> out;
  std::uint64_t stream = kFirstAgentStream;
  for (DetectorMode mode : kCompareModes) out.push_back(bench.run(periods, horizon, mode, stream++));
  return out;
}

}  // namespace gpucb
