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

#include "gpucb/cpd.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace gpucb {

namespace {

std::size_t half_size(std::size_t total) {
  if (total == 0 || total % 2 != 0) {
    throw std::invalid_argument("detect: sample size must be even and positive, got " +
                                std::to_string(total));
  }
  return total / 2;
}

double schedule(double coeff, double exponent, std::size_t n, const char* name) {
  if (n == 0) throw std::invalid_argument(std::string(name) + ": n must be >= 1");
  if (std::isinf(coeff)) return coeff;
  return coeff * std::pow(static_cast<double>(n), -exponent);
}

DetectionResult compare(const CpdConfig& cfg, std::size_t n, const Eigen::VectorXd& mu1,
                        const Eigen::VectorXd& mu2) {
  DetectionResult r;
  r.delta_hat_sq = delta_hat_sq(mu1, mu2, cfg);
  r.threshold = theta(cfg, n);
  r.detected = r.delta_hat_sq > r.threshold;
  return r;
}

}  // namespace

double CpdConfig::exponent() const {
  const double a = 2.0 * kernel.alpha() + static_cast<double>(dim);
  return a / (a + 1.0);
}

void CpdConfig::validate() const {
  kernel.validate();
  if (!(c_rho > 0.0) || !std::isfinite(c_rho)) throw std::invalid_argument("c_rho must be > 0");
  if (!(theta_coeff > 0.0)) throw std::invalid_argument("theta_coeff must be > 0");
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("detector sigma2 must be > 0");
  if (quad_grid.empty()) throw std::invalid_argument("quadrature grid is empty");
  if (!(domain_measure > 0.0)) throw std::invalid_argument("domain measure must be > 0");
}

double rho_cpd(const CpdConfig& cfg, std::size_t n) {
  return schedule(cfg.c_rho, cfg.exponent(), n, "rho_cpd");
}

double theta(const CpdConfig& cfg, std::size_t n) {
  return schedule(cfg.theta_coeff, cfg.exponent(), n, "theta");
}

double delta_hat_sq(std::span<const double> mu1, std::span<const double> mu2,
                    const CpdConfig& cfg) {
  if (mu1.size() != mu2.size() || mu1.size() != cfg.quad_grid.size()) {
    throw std::invalid_argument("delta_hat_sq: length mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < mu1.size(); ++i) {
    const double d = mu1[i] - mu2[i];
    acc += d * d;
  }
  return acc / static_cast<double>(mu1.size()) * cfg.domain_measure;
}

double delta_hat_sq(const Eigen::VectorXd& mu1, const Eigen::VectorXd& mu2,
                    const CpdConfig& cfg) {
  return delta_hat_sq(std::span<const double>(mu1.data(), static_cast<std::size_t>(mu1.size())),
                      std::span<const double>(mu2.data(), static_cast<std::size_t>(mu2.size())),
                      cfg);
}

DetectionResult detect(const CpdConfig& cfg, std::span<const Sample> sample) {
  const std::size_t n = half_size(sample.size());
  const double rho = rho_cpd(cfg, n);
  const auto first = GprModel::fit(cfg.kernel, sample.subspan(0, n), rho, cfg.sigma2);
  const auto second = GprModel::fit(cfg.kernel, sample.subspan(n, n), rho, cfg.sigma2);

  const auto q = static_cast<Eigen::Index>(cfg.quad_grid.size());
  Eigen::VectorXd mu1(q), mu2(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    const Point& x = cfg.quad_grid[static_cast<std::size_t>(j)];
    mu1(j) = first.predict_mean(x);
    mu2(j) = second.predict_mean(x);
  }
  return compare(cfg, n, mu1, mu2);
}

DetectionResult detect_on_nodes(const CpdConfig& cfg, const GridKernel& quad,
                                std::span<const std::size_t> nodes, std::span<const double> ys) {
  if (nodes.size() != ys.size()) throw std::invalid_argument("detect_on_nodes: size mismatch");
  if (quad.size() != cfg.quad_grid.size()) {
    throw std::invalid_argument("detect_on_nodes: node table does not match the quadrature grid");
  }
  const std::size_t n = half_size(nodes.size());
  const double diag = static_cast<double>(n) * rho_cpd(cfg, n);

  auto half_mean = [&](std::size_t offset) {
    const auto m = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd k(m, m);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto ni = static_cast<Eigen::Index>(nodes[offset + static_cast<std::size_t>(i)]);
      y(i) = ys[offset + static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < m; ++j) {
        k(i, j) = quad.table(ni, static_cast<Eigen::Index>(nodes[offset + static_cast<std::size_t>(j)]));
      }
    }
    const Eigen::VectorXd w = regularized_weights(k, diag, y);
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(quad.size()));
    for (Eigen::Index i = 0; i < m; ++i) {
      mu.noalias() +=
          w(i) * quad.table.col(static_cast<Eigen::Index>(nodes[offset + static_cast<std::size_t>(i)]));
    }
    return mu;
  };
  return compare(cfg, n, half_mean(0), half_mean(n));
}

double min_sample_size(double c, double f, double g, double x_conf, double delta_sq, double alpha,
                       int dim) {
  if (!(delta_sq > 0.0)) throw std::invalid_argument("min_sample_size: delta_sq must be > 0");
  if (!(x_conf > 1.3)) throw std::invalid_argument("min_sample_size: x_conf must exceed 1.3");
  if (!(c > 0.0)) throw std::invalid_argument("min_sample_size: C must be > 0");
  const double ratio = c * (f * f + x_conf * x_conf * g * g) / delta_sq;
  return 2.0 * std::pow(ratio, 1.0 + 1.0 / (2.0 * alpha + static_cast<double>(dim)));
}

}  // namespace gpucb
