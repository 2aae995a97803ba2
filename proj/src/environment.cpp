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

#include "gpucb/environment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Cholesky>

#include "gpucb/gpr.hpp"

namespace gpucb {

// ---------------------------------------------------------------------------
// Grid

double DomainBox::measure() const { return (high - low).prod(); }

void DomainBox::validate() const {
  if (low.size() != high.size() || low.size() == 0) {
    throw std::invalid_argument("domain bounds must have equal, positive dimension");
  }
  if (low.size() > 3) throw std::invalid_argument("domain dimension above 3 is not supported");
  if (!((high - low).array() > 0.0).all()) {
    throw std::invalid_argument("domain upper bounds must exceed lower bounds");
  }
  if (points_per_axis < 2) throw std::invalid_argument("grid_size must be >= 2");
}

std::vector<Point> make_grid(const DomainBox& box) {
  box.validate();
  const int d = box.dim();
  const int m = box.points_per_axis;
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(m);

  std::vector<Point> grid;
  grid.reserve(total);
  std::vector<int> counter(static_cast<std::size_t>(d), 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Point p(d);
    for (int k = 0; k < d; ++k) {
      const double frac = static_cast<double>(counter[static_cast<std::size_t>(k)]) / (m - 1);
      p(k) = box.low(k) + frac * (box.high(k) - box.low(k));
    }
    grid.push_back(std::move(p));
    for (int k = 0; k < d; ++k) {
      if (++counter[static_cast<std::size_t>(k)] < m) break;
      counter[static_cast<std::size_t>(k)] = 0;
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Prior sampling

GpSampler::GpSampler(const KernelSpec& spec, std::vector<Point> grid, double jitter)
    : spec_(spec), grid_(std::move(grid)), jitter_(jitter) {
  if (grid_.empty()) throw std::invalid_argument("GpSampler: empty grid");
  spec_.validate();
  const Eigen::MatrixXd k = gram(spec_, grid_, 0.0);
  for (int attempt = 0;; ++attempt) {
    Eigen::MatrixXd jittered = k;
    jittered.diagonal().array() += jitter_;
    Eigen::LLT<Eigen::MatrixXd> llt(jittered);
    if (llt.info() == Eigen::Success) {
      factor_ = llt.matrixL();
      return;
    }
    if (attempt == 3) {
      throw NumericalError("GP prior factorization failed with jitter " + std::to_string(jitter_),
                           jitter_);
    }
    jitter_ *= 10.0;
  }
}

Eigen::VectorXd GpSampler::draw(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(factor_.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  return factor_.triangularView<Eigen::Lower>() * z;
}

Eigen::VectorXd sample_gp_function(const KernelSpec& spec, const std::vector<Point>& grid,
                                   Rng& rng, double jitter) {
  return GpSampler(spec, grid, jitter).draw(rng);
}

// ---------------------------------------------------------------------------
// PiecewiseEnv

PiecewiseEnv::PiecewiseEnv(std::vector<Point> grid, std::vector<Eigen::VectorXd> tables,
                           std::vector<int> tau, double noise_sd,
                           std::optional<std::uint64_t> seed)
    : grid_(std::move(grid)),
      tables_(std::move(tables)),
      tau_(std::move(tau)),
      noise_sd_(noise_sd),
      seed_(seed) {
  if (grid_.empty()) throw std::invalid_argument("PiecewiseEnv: empty grid");
  if (tables_.empty()) throw std::invalid_argument("PiecewiseEnv: no reward tables");
  if (tau_.size() != tables_.size() + 1) {
    throw std::invalid_argument("PiecewiseEnv: need K+1 change-points for K tables");
  }
  if (tau_.front() != 0) throw std::invalid_argument("PiecewiseEnv: tau_0 must be 0");
  for (std::size_t i = 1; i < tau_.size(); ++i) {
    if (tau_[i] <= tau_[i - 1]) {
      throw std::invalid_argument("PiecewiseEnv: change-points must be strictly increasing");
    }
  }
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    throw std::invalid_argument("PiecewiseEnv: noise_sd must be >= 0");
  }
  f_max_.reserve(tables_.size());
  for (const auto& table : tables_) {
    if (static_cast<std::size_t>(table.size()) != grid_.size()) {
      throw std::invalid_argument("PiecewiseEnv: table length differs from grid size");
    }
    f_max_.push_back(table.maxCoeff());
  }
}

std::vector<int> PiecewiseEnv::change_points() const {
  return std::vector<int>(tau_.begin() + 1, tau_.end() - 1);
}

std::size_t PiecewiseEnv::argmax(int period) const {
  if (period < 1 || period > periods()) throw std::out_of_range("argmax: period out of range");
  Eigen::Index best = 0;
  tables_[static_cast<std::size_t>(period - 1)].maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

void PiecewiseEnv::check_step(int t) const {
  if (t < 1 || t > horizon()) {
    throw std::out_of_range("step " + std::to_string(t) + " outside 1.." +
                            std::to_string(horizon()));
  }
}

void PiecewiseEnv::check_index(std::size_t index) const {
  if (index >= grid_.size()) throw std::out_of_range("grid index out of range");
}

int PiecewiseEnv::kappa(int t) const {
  check_step(t);
  // first i with tau_i >= t
  const auto it = std::lower_bound(tau_.begin() + 1, tau_.end(), t);
  return static_cast<int>(it - tau_.begin());
}

double PiecewiseEnv::mean_reward(int t, std::size_t index) const {
  check_index(index);
  return tables_[static_cast<std::size_t>(kappa(t) - 1)](static_cast<Eigen::Index>(index));
}

double PiecewiseEnv::reward(int t, std::size_t index, Rng& rng) const {
  const double mean = mean_reward(t, index);
  std::normal_distribution<double> normal(0.0, 1.0);
  return mean + noise_sd_ * normal(rng);
}

double PiecewiseEnv::instant_regret(int t, std::size_t index) const {
  check_index(index);
  const auto period = static_cast<std::size_t>(kappa(t) - 1);
  return f_max_[period] - tables_[period](static_cast<Eigen::Index>(index));
}

double PiecewiseEnv::max_instant_regret() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    worst = std::max(worst, f_max_[i] - tables_[i].minCoeff());
  }
  return worst;
}

double PiecewiseEnv::true_delta_sq(int i, double domain_measure) const {
  if (i < 1 || i >= periods()) throw std::out_of_range("true_delta_sq: period out of range");
  const auto& a = tables_[static_cast<std::size_t>(i - 1)];
  const auto& b = tables_[static_cast<std::size_t>(i)];
  return (a - b).squaredNorm() / static_cast<double>(a.size()) * domain_measure;
}

nlohmann::json PiecewiseEnv::to_json() const {
  nlohmann::json j;
  j["format"] = "gpucb-env/1";
  auto& grid = j["grid"] = nlohmann::json::array();
  for (const auto& p : grid_) grid.push_back(std::vector<double>(p.data(), p.data() + p.size()));
  auto& tables = j["tables"] = nlohmann::json::array();
  for (const auto& t : tables_) tables.push_back(std::vector<double>(t.data(), t.data() + t.size()));
  j["tau"] = tau_;
  j["noise_sd"] = noise_sd_;
  j["seed"] = seed_ ? nlohmann::json(*seed_) : nlohmann::json(nullptr);
  return j;
}

PiecewiseEnv PiecewiseEnv::from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "gpucb-env/1") {
    throw std::invalid_argument("environment snapshot: unknown format");
  }
  std::vector<Point> grid;
  for (const auto& p : j.at("grid")) {
    const auto coords = p.get<std::vector<double>>();
    grid.emplace_back(Eigen::Map<const Eigen::VectorXd>(coords.data(),
                                                        static_cast<Eigen::Index>(coords.size())));
  }
  std::vector<Eigen::VectorXd> tables;
  for (const auto& t : j.at("tables")) {
    const auto v = t.get<std::vector<double>>();
    tables.emplace_back(
        Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  std::optional<std::uint64_t> seed;
  if (j.contains("seed") && !j.at("seed").is_null()) seed = j.at("seed").get<std::uint64_t>();
  return PiecewiseEnv(std::move(grid), std::move(tables), j.at("tau").get<std::vector<int>>(),
                      j.at("noise_sd").get<double>(), seed);
}

std::vector<int> even_change_points(int periods, int horizon) {
  if (periods < 1) throw std::invalid_argument("number of periods must be >= 1");
  if (horizon < periods) throw std::invalid_argument("horizon T must satisfy T >= K");
  std::vector<int> tau(static_cast<std::size_t>(periods) + 1);
  for (int i = 0; i <= periods; ++i) {
    const long long num = 2LL * i * horizon + periods;
    tau[static_cast<std::size_t>(i)] = static_cast<int>(num / (2LL * periods));
  }
  return tau;
}

namespace {
std::vector<Eigen::VectorXd> draw_tables(int periods, const GpSampler& sampler, Rng& rng) {
  std::vector<Eigen::VectorXd> tables;
  tables.reserve(static_cast<std::size_t>(periods));
  for (int i = 0; i < periods; ++i) tables.push_back(sampler.draw(rng));
  return tables;
}
}  // namespace

PiecewiseEnv make_env(int periods, int horizon, const GpSampler& sampler, double noise_sd,
                      Rng& rng) {
  auto tau = even_change_points(periods, horizon);
  return PiecewiseEnv(sampler.grid(), draw_tables(periods, sampler, rng), std::move(tau),
                      noise_sd);
}

PiecewiseEnv make_env(int periods, int horizon, const KernelSpec& spec,
                      const std::vector<Point>& grid, double noise_sd, Rng& rng) {
  even_change_points(periods, horizon);  // validate before the factorization
  return make_env(periods, horizon, GpSampler(spec, grid), noise_sd, rng);
}

PiecewiseEnv make_env_seeded(int periods, int horizon, const GpSampler& sampler,
                             double noise_sd, std::uint64_t seed) {
  auto tau = even_change_points(periods, horizon);
  Rng rng(seed);
  return PiecewiseEnv(sampler.grid(), draw_tables(periods, sampler, rng), std::move(tau),
                      noise_sd, seed);
}

}  // namespace gpucb
