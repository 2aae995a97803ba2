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

#ifndef GPUCB_GPR_HPP
#define GPUCB_GPR_HPP

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gpucb/kernel.hpp"

namespace gpucb {

/// Raised when a factorization or a variance evaluation breaks down.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double jitter)
      : std::runtime_error(what), jitter_(jitter) {}
  /// Diagonal jitter in force at the time of failure (0 if none was tried).
  double jitter() const { return jitter_; }

 private:
  double jitter_;
};

struct Sample {
  Point x;
  double y = 0.0;
};

/// Covariate-response pairs in insertion order.
using Dataset = std::vector<Sample>;

/// Cholesky factor of `matrix`, retried with jitter 1e-10*n, 1e-9*n, 1e-8*n on
/// the diagonal. `jitter_used` receives the jitter of the successful attempt.
Eigen::MatrixXd robust_cholesky(const Eigen::MatrixXd& matrix, double* jitter_used = nullptr);

/// Solves (gram + diag_add*I) w = y through robust_cholesky.
Eigen::VectorXd regularized_weights(const Eigen::MatrixXd& gram_no_diag, double diag_add,
                                    const Eigen::VectorXd& y);

/// Gaussian Process Regression with explicit regularization rho.
///
/// The regularized Gram matrix is K + n*rho*I. The predictive mean is
/// k*^T (K + n*rho*I)^{-1} y and the predictive variance is
/// sigma2 / (n*rho) * (k(x, x) - k*^T (K + n*rho*I)^{-1} k*).
///
/// Models are values: `extended` returns a new model with one more pair and
/// the same diagonal addition n*rho, reusing the existing factor in O(n^2).
class GprModel {
 public:
  static GprModel fit(const KernelSpec& spec, std::span<const Sample> data, double rho,
                      double sigma2);

  double predict_mean(const Point& x) const;
  /// Clamped at zero for rounding-level negatives; throws NumericalError when
  /// the bracket falls below -1e-10.
  double predict_var(const Point& x) const;

  /// Appends (x, y) keeping n*rho fixed, so rho becomes n*rho / (n + 1).
  GprModel extended(const Point& x, double y) const&;
  GprModel extended(const Point& x, double y) &&;

  std::size_t size() const { return train_.size(); }
  const Dataset& train() const { return train_; }
  const KernelSpec& kernel() const { return spec_; }
  double rho() const { return diag_nominal_ / static_cast<double>(train_.size()); }
  double sigma2() const { return sigma2_; }
  /// Diagonal actually added to the factored matrix, jitter included.
  double diag_add() const { return diag_nominal_ + jitter_; }
  double jitter() const { return jitter_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  /// Lower-triangular factor, upper part zeroed.
  Eigen::MatrixXd factor() const;

 private:
  GprModel() = default;
  void append_in_place(const Point& x, double y);
  Eigen::VectorXd kernel_vector(const Point& x) const;

  KernelSpec spec_;
  Dataset train_;
  double diag_nominal_ = 0.0;
  double jitter_ = 0.0;
  double sigma2_ = 1.0;
  // Lower factor lives in the top-left n x n block; the buffer grows
  // geometrically so that repeated extension stays O(n^2) per step.
  Eigen::MatrixXd factor_buf_;
  Eigen::VectorXd whitened_;  // L^{-1} y
  Eigen::VectorXd weights_;
};

/// 1/2 log det(I + K / sigma2); zero for an empty design.
double information_gain(const KernelSpec& spec, std::span<const Point> xs, double sigma2);

/// Posterior mean and variance on every node of a fixed grid, for training
/// points that are themselves grid nodes. Appending a node costs O(n * G):
/// the projections V = L^{-1} K(X, grid) already hold the new factor row.
class GridPosterior {
 public:
  GridPosterior(std::shared_ptr<const GridKernel> grid, double diag_add, double sigma2);

  void append(std::size_t node, double y);

  std::size_t size() const { return nodes_.size(); }
  double mean(std::size_t node) const { return mean_(static_cast<Eigen::Index>(node)); }
  double variance(std::size_t node) const;
  const Eigen::VectorXd& means() const { return mean_; }
  double diag_add() const { return diag_add_; }
  double sigma2() const { return sigma2_; }
  const std::vector<std::size_t>& nodes() const { return nodes_; }

 private:
  std::shared_ptr<const GridKernel> grid_;
  double diag_add_;
  double sigma2_;
  std::vector<std::size_t> nodes_;
  // Row i is L^{-1} K(X, grid) row i; row-major so rows append contiguously.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> proj_;
  Eigen::VectorXd whitened_;  // L^{-1} y
  Eigen::VectorXd mean_;
  Eigen::VectorXd explained_;  // squared column norms of V
  Eigen::VectorXd scratch_;
};

}  // namespace gpucb

#endif  // GPUCB_GPR_HPP
