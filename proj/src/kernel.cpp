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

#include "gpucb/kernel.hpp"

#include <cmath>
#include <utility>

namespace gpucb {

namespace {
const double kSqrt3 = std::sqrt(3.0);
const double kSqrt5 = std::sqrt(5.0);
}  // namespace

double smoothness_value(Smoothness s) {
  switch (s) {
    case Smoothness::kHalf:
      return 0.5;
    case Smoothness::kThreeHalves:
      return 1.5;
    case Smoothness::kFiveHalves:
      return 2.5;
  }
  return 2.5;
}

Smoothness smoothness_from_value(double alpha) {
  if (alpha == 0.5) return Smoothness::kHalf;
  if (alpha == 1.5) return Smoothness::kThreeHalves;
  if (alpha == 2.5) return Smoothness::kFiveHalves;
  throw std::invalid_argument("Matérn smoothness must be one of 0.5, 1.5, 2.5; got " +
                              std::to_string(alpha));
}

void KernelSpec::validate() const {
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
    throw std::invalid_argument("kernel lengthscale must be positive and finite");
  }
}

double eval_distance(const KernelSpec& spec, double r) {
  const double s = r / spec.lengthscale;
  switch (spec.smoothness) {
    case Smoothness::kHalf:
      return std::exp(-s);
    case Smoothness::kThreeHalves: {
      const double z = kSqrt3 * s;
      return (1.0 + z) * std::exp(-z);
    }
    case Smoothness::kFiveHalves: {
      const double z = kSqrt5 * s;
      return (1.0 + z + z * z / 3.0) * std::exp(-z);
    }
  }
  return 0.0;
}

double eval(const KernelSpec& spec, const Point& x, const Point& y) {
  return eval_distance(spec, (x - y).norm());
}

Eigen::MatrixXd gram(const KernelSpec& spec, std::span<const Point> xs, double diag_add) {
  if (xs.empty()) throw std::invalid_argument("gram: empty point list");
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = 1.0 + diag_add;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = eval(spec, xs[i], xs[j]);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Eigen::MatrixXd cross_gram(const KernelSpec& spec, std::span<const Point> xs,
                           std::span<const Point> ys) {
  Eigen::MatrixXd k(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(ys.size()));
  for (std::size_t j = 0; j < ys.size(); ++j) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = eval(spec, xs[i], ys[j]);
    }
  }
  return k;
}

void kernel_row(const KernelSpec& spec, const Point& x, std::span<const Point> ys,
                Eigen::VectorXd& out) {
  out.resize(static_cast<Eigen::Index>(ys.size()));
  for (std::size_t j = 0; j < ys.size(); ++j) {
    out(static_cast<Eigen::Index>(j)) = eval(spec, x, ys[j]);
  }
}

double sup_norm(const KernelSpec&) { return 1.0; }

GridKernel::GridKernel(const KernelSpec& s, std::vector<Point> pts)
    : spec(s), nodes(std::move(pts)), table(gram(s, nodes, 0.0)) {}

}  // namespace gpucb
