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

#ifndef GPUCB_CPD_HPP
#define GPUCB_CPD_HPP

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gpucb/gpr.hpp"
#include "gpucb/kernel.hpp"

namespace gpucb {

/// Default coefficient of rho_n, calibrated on the synthetic benchmark.
inline constexpr double kDefaultCRho = 16.0;

/// Two-window GPR change-point detector.
///
/// A sample of 2n pairs is split into halves, GPR is fitted on each with
/// rho_n = c_rho * n^{-e}, and the squared L2 distance between the two
/// predictive means is compared against theta_n = theta_coeff * n^{-e},
/// where e = (2*alpha + d) / (2*alpha + d + 1).
struct CpdConfig {
  KernelSpec kernel;
  double c_rho = kDefaultCRho;
  /// +infinity encodes a detector that never fires.
  double theta_coeff = 2.6;
  int dim = 1;
  double sigma2 = 1.0;
  /// Quadrature nodes for the L2 distance; the integral is approximated by
  /// the mean over nodes times `domain_measure`.
  std::vector<Point> quad_grid;
  double domain_measure = 1.0;

  double exponent() const;
  void validate() const;
};

struct DetectionResult {
  double delta_hat_sq = 0.0;
  double threshold = 0.0;
  bool detected = false;
};

double rho_cpd(const CpdConfig& cfg, std::size_t n);
double theta(const CpdConfig& cfg, std::size_t n);

/// Quadrature of (mu1 - mu2)^2 over the configured domain.
double delta_hat_sq(std::span<const double> mu1, std::span<const double> mu2,
                    const CpdConfig& cfg);
double delta_hat_sq(const Eigen::VectorXd& mu1, const Eigen::VectorXd& mu2,
                    const CpdConfig& cfg);

/// Runs the test on an even-sized sample; throws std::invalid_argument on an
/// odd or empty sample. The sample is never modified.
DetectionResult detect(const CpdConfig& cfg, std::span<const Sample> sample);

/// Same test for samples located on quadrature nodes: `nodes[i]` is the index
/// into `quad` of the i-th covariate and all kernel values come from the
/// node table. `quad` must carry the same nodes as cfg.quad_grid.
DetectionResult detect_on_nodes(const CpdConfig& cfg, const GridKernel& quad,
                                std::span<const std::size_t> nodes, std::span<const double> ys);

/// Half-sample size beyond which a change of squared size `delta_sq` is
/// detected without false alarms:
/// 2 * (C * (F^2 + x^2 g^2) / delta_sq)^(1 + 1 / (2*alpha + d)).
double min_sample_size(double c, double f, double g, double x_conf, double delta_sq, double alpha,
                       int dim);

}  // namespace gpucb

#endif  // GPUCB_CPD_HPP
