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

#ifndef GPUCB_KERNEL_HPP
#define GPUCB_KERNEL_HPP

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gpucb {

/// A point of the action domain. Dimension 1 is the common case.
using Point = Eigen::VectorXd;

inline Point make_point(double x) {
  Point p(1);
  p(0) = x;
  return p;
}

/// Half-integer Matérn smoothness indices that admit a closed form.
enum class Smoothness { kHalf, kThreeHalves, kFiveHalves };

double smoothness_value(Smoothness s);
/// Maps 0.5, 1.5, 2.5 onto the enum; throws std::invalid_argument otherwise.
Smoothness smoothness_from_value(double alpha);

/// Isotropic Matérn covariance with unit variance, k(x, x) = 1.
struct KernelSpec {
  Smoothness smoothness = Smoothness::kFiveHalves;
  double lengthscale = 1.0;

  double alpha() const { return smoothness_value(smoothness); }
  /// Throws std::invalid_argument when the lengthscale is not positive.
  void validate() const;
};

/// Covariance as a function of Euclidean distance r >= 0.
double eval_distance(const KernelSpec& spec, double r);

double eval(const KernelSpec& spec, const Point& x, const Point& y);

/// Gram matrix with `diag_add` on the diagonal. Each off-diagonal entry is
/// computed once and mirrored, so the result is exactly symmetric.
Eigen::MatrixXd gram(const KernelSpec& spec, std::span<const Point> xs, double diag_add);

/// Matrix of k(xs[i], ys[j]).
Eigen::MatrixXd cross_gram(const KernelSpec& spec, std::span<const Point> xs,
                           std::span<const Point> ys);

/// Row vector k(x, ys[j]) written into `out` (resized as needed).
void kernel_row(const KernelSpec& spec, const Point& x, std::span<const Point> ys,
                Eigen::VectorXd& out);

/// sup_{x,y} |k(x, y)|; 1 for every normalised Matérn kernel.
double sup_norm(const KernelSpec& spec);

/// Nodes of a fixed evaluation grid together with their full kernel table.
/// Built once and shared read-only between agents and detectors that only
/// ever touch grid nodes.
struct GridKernel {
  KernelSpec spec;
  std::vector<Point> nodes;
  Eigen::MatrixXd table;  // table(i, j) = k(nodes[i], nodes[j])

  GridKernel(const KernelSpec& s, std::vector<Point> pts);
  std::size_t size() const { return nodes.size(); }
};

}  // namespace gpucb

#endif  // GPUCB_KERNEL_HPP
