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

#include "gpucb/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <Eigen/Cholesky>

namespace gpucb {

namespace {

constexpr double kNegativeVarianceTolerance = 1e-10;
constexpr int kJitterEscalations = 3;

double clamp_bracket(double bracket) {
  if (bracket >= 0.0) return bracket;
  if (bracket > -kNegativeVarianceTolerance) return 0.0;
  throw NumericalError("predictive variance is negative beyond rounding: " +
                           std::to_string(bracket),
                       0.0);
}

}  // namespace

Eigen::MatrixXd robust_cholesky(const Eigen::MatrixXd& matrix, double* jitter_used) {
  if (!matrix.allFinite()) throw NumericalError("matrix has non-finite entries", 0.0);
  Eigen::LLT<Eigen::MatrixXd> llt(matrix);
  double jitter = 0.0;
  if (llt.info() != Eigen::Success) {
    const auto n = static_cast<double>(matrix.rows());
    jitter = 1e-10 * n;
    for (int attempt = 0;; ++attempt) {
      Eigen::MatrixXd jittered = matrix;
      jittered.diagonal().array() += jitter;
      llt.compute(jittered);
      if (llt.info() == Eigen::Success) break;
      if (attempt + 1 >= kJitterEscalations) {
        throw NumericalError("Cholesky factorization failed with jitter " + std::to_string(jitter),
                             jitter);
      }
      jitter *= 10.0;
    }
  }
  if (jitter_used != nullptr) *jitter_used = jitter;
  return llt.matrixL();
}

Eigen::VectorXd regularized_weights(const Eigen::MatrixXd& gram_no_diag, double diag_add,
                                    const Eigen::VectorXd& y) {
  Eigen::MatrixXd k = gram_no_diag;
  k.diagonal().array() += diag_add;
  const Eigen::MatrixXd l = robust_cholesky(k);
  Eigen::VectorXd w = l.triangularView<Eigen::Lower>().solve(y);
  l.triangularView<Eigen::Lower>().transpose().solveInPlace(w);
  return w;
}

// ---------------------------------------------------------------------------
// GprModel

GprModel GprModel::fit(const KernelSpec& spec, std::span<const Sample> data, double rho,
                       double sigma2) {
  if (data.empty()) throw std::invalid_argument("GprModel::fit: empty dataset");
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw std::invalid_argument("GprModel::fit: rho must be positive");
  }
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw std::invalid_argument("GprModel::fit: sigma2 must be positive");
  }
  spec.validate();

  GprModel m;
  m.spec_ = spec;
  m.train_.assign(data.begin(), data.end());
  m.sigma2_ = sigma2;
  const auto n = static_cast<Eigen::Index>(data.size());
  m.diag_nominal_ = static_cast<double>(n) * rho;

  std::vector<Point> xs;
  xs.reserve(data.size());
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    xs.push_back(data[static_cast<std::size_t>(i)].x);
    y(i) = data[static_cast<std::size_t>(i)].y;
  }
  m.factor_buf_ = robust_cholesky(gram(spec, xs, m.diag_nominal_), &m.jitter_);
  m.whitened_ = m.factor_buf_.triangularView<Eigen::Lower>().solve(y);
  m.weights_ = m.factor_buf_.transpose().triangularView<Eigen::Upper>().solve(m.whitened_);
  return m;
}

Eigen::VectorXd GprModel::kernel_vector(const Point& x) const {
  Eigen::VectorXd k(static_cast<Eigen::Index>(train_.size()));
  for (std::size_t i = 0; i < train_.size(); ++i) {
    k(static_cast<Eigen::Index>(i)) = eval(spec_, x, train_[i].x);
  }
  return k;
}

double GprModel::predict_mean(const Point& x) const { return kernel_vector(x).dot(weights_); }

double GprModel::predict_var(const Point& x) const {
  const auto n = static_cast<Eigen::Index>(train_.size());
  const Eigen::VectorXd v =
      factor_buf_.topLeftCorner(n, n).triangularView<Eigen::Lower>().solve(kernel_vector(x));
  const double bracket = clamp_bracket(eval(spec_, x, x) - v.squaredNorm());
  return sigma2_ / diag_nominal_ * bracket;
}

Eigen::MatrixXd GprModel::factor() const {
  const auto n = static_cast<Eigen::Index>(train_.size());
  return factor_buf_.topLeftCorner(n, n).triangularView<Eigen::Lower>();
}

void GprModel::append_in_place(const Point& x, double y) {
  const auto n = static_cast<Eigen::Index>(train_.size());
  const Eigen::VectorXd l =
      factor_buf_.topLeftCorner(n, n).triangularView<Eigen::Lower>().solve(kernel_vector(x));
  const double pivot_sq = eval(spec_, x, x) + diag_add() - l.squaredNorm();
  if (!(pivot_sq > 0.0)) {
    throw NumericalError("rank extension produced a non-positive pivot", jitter_);
  }
  const double pivot = std::sqrt(pivot_sq);

  if (factor_buf_.rows() < n + 1) {
    const Eigen::Index cap = std::max<Eigen::Index>(2 * n, 8);
    factor_buf_.conservativeResize(cap, cap);
  }
  factor_buf_.row(n).head(n) = l.transpose();
  factor_buf_(n, n) = pivot;

  whitened_.conservativeResize(n + 1);
  whitened_(n) = (y - l.dot(whitened_.head(n))) / pivot;
  weights_ = factor_buf_.topLeftCorner(n + 1, n + 1)
                 .triangularView<Eigen::Lower>()
                 .transpose()
                 .solve(whitened_);
  train_.push_back(Sample{x, y});
}

GprModel GprModel::extended(const Point& x, double y) const& {
  GprModel copy = *this;
  copy.append_in_place(x, y);
  return copy;
}

GprModel GprModel::extended(const Point& x, double y) && {
  append_in_place(x, y);
  return std::move(*this);
}

double information_gain(const KernelSpec& spec, std::span<const Point> xs, double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("information_gain: sigma2 must be positive");
  if (xs.empty()) return 0.0;
  Eigen::MatrixXd m = gram(spec, xs, 0.0) / sigma2;
  m.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("information_gain: I + K/sigma2 is not positive definite", 0.0);
  }
  // 1/2 log det = sum log diag(L)
  return llt.matrixLLT().diagonal().array().log().sum();
}

// ---------------------------------------------------------------------------
// GridPosterior

GridPosterior::GridPosterior(std::shared_ptr<const GridKernel> grid, double diag_add,
                             double sigma2)
    : grid_(std::move(grid)), diag_add_(diag_add), sigma2_(sigma2) {
  if (!grid_ || grid_->size() == 0) throw std::invalid_argument("GridPosterior: empty grid");
  if (!(diag_add > 0.0)) throw std::invalid_argument("GridPosterior: diag_add must be positive");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("GridPosterior: sigma2 must be positive");
  const auto g = static_cast<Eigen::Index>(grid_->size());
  mean_ = Eigen::VectorXd::Zero(g);
  explained_ = Eigen::VectorXd::Zero(g);
}

void GridPosterior::append(std::size_t node, double y) {
  if (node >= grid_->size()) throw std::out_of_range("GridPosterior::append: node out of range");
  const auto n = static_cast<Eigen::Index>(nodes_.size());
  const auto g = static_cast<Eigen::Index>(node);

  // New factor row: L^{-1} k(X, x_node) is column `node` of the projections.
  Eigen::VectorXd l;
  if (n > 0) l = proj_.topRows(n).col(g);
  const double pivot_sq = 1.0 + diag_add_ - explained_(g);
  if (!(pivot_sq > 0.0)) {
    throw NumericalError("grid posterior extension produced a non-positive pivot", 0.0);
  }
  const double pivot = std::sqrt(pivot_sq);

  scratch_ = grid_->table.col(g);
  if (n > 0) scratch_.noalias() -= proj_.topRows(n).transpose() * l;
  scratch_ /= pivot;

  if (proj_.rows() < n + 1) {
    const Eigen::Index cap = std::max<Eigen::Index>(2 * n, 16);
    proj_.conservativeResize(cap, static_cast<Eigen::Index>(grid_->size()));
  }
  proj_.row(n) = scratch_.transpose();

  whitened_.conservativeResize(n + 1);
  const double a = (y - (n > 0 ? l.dot(whitened_.head(n)) : 0.0)) / pivot;
  whitened_(n) = a;
  mean_.noalias() += a * scratch_;
  explained_.array() += scratch_.array().square();
  nodes_.push_back(node);
}

double GridPosterior::variance(std::size_t node) const {
  const double bracket = clamp_bracket(1.0 - explained_(static_cast<Eigen::Index>(node)));
  return sigma2_ / diag_add_ * bracket;
}

}  // namespace gpucb
