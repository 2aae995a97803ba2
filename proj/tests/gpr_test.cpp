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
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "gtest/gtest.h"

namespace gpucb {
namespace {

Dataset random_dataset(int n, std::uint64_t seed, double lo = 0.0, double hi = 5.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::normal_distribution<double> z;
  Dataset d;
  for (int i = 0; i < n; ++i) d.push_back(Sample{make_point(u(rng)), z(rng)});
  return d;
}

std::vector<Point> points_of(const Dataset& d) {
  std::vector<Point> xs;
  for (const auto& s : d) xs.push_back(s.x);
  return xs;
}

Eigen::VectorXd responses_of(const Dataset& d) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) y(static_cast<Eigen::Index>(i)) = d[i].y;
  return y;
}

// Dense solve of (K + n rho I) w = y, independent of the factorization path.
Eigen::VectorXd dense_weights(const KernelSpec& k, const Dataset& d, double rho) {
  const Eigen::MatrixXd a = gram(k, points_of(d), static_cast<double>(d.size()) * rho);
  return a.fullPivLu().solve(responses_of(d));
}

std::vector<Point> unit_grid(int n, double hi = 5.0) {
  std::vector<Point> g;
  for (int i = 0; i < n; ++i) g.push_back(make_point(hi * i / (n - 1)));
  return g;
}

TEST(GprTest, SinglePairWeights) {
  const Dataset d = {{make_point(1.0), 2.0}};
  const auto m = GprModel::fit(KernelSpec{}, d, 1.0, 1.0);
  ASSERT_EQ(m.weights().size(), 1);
  EXPECT_DOUBLE_EQ(m.weights()(0), 1.0);
  EXPECT_DOUBLE_EQ(m.predict_mean(make_point(1.0)), 1.0);
  EXPECT_DOUBLE_EQ(m.predict_var(make_point(1.0)), 0.5);
}

TEST(GprTest, DuplicatePointsSolveTwoByTwo) {
  const Dataset d = {{make_point(2.0), 1.0}, {make_point(2.0), 3.0}};
  const auto m = GprModel::fit(KernelSpec{}, d, 0.5, 1.0);
  Eigen::Matrix2d a;
  a << 2.0, 1.0, 1.0, 2.0;
  const Eigen::Vector2d want = a.inverse() * Eigen::Vector2d(1.0, 3.0);
  EXPECT_NEAR(m.weights()(0), want(0), 1e-14);
  EXPECT_NEAR(m.weights()(1), want(1), 1e-14);
}

TEST(GprTest, ResidualAgainstDenseSolve) {
  const KernelSpec k;
  const Dataset d = random_dataset(10, 3);
  const auto m = GprModel::fit(k, d, 0.1, 1.0);
  const Eigen::MatrixXd a = gram(k, points_of(d), 10 * 0.1);
  EXPECT_LT((a * m.weights() - responses_of(d)).lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_LT((m.weights() - dense_weights(k, d, 0.1)).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(GprTest, MeanAndVarianceRevertFarAway) {
  const Dataset d = random_dataset(8, 4);
  const double rho = 0.2, sigma2 = 0.3;
  const auto m = GprModel::fit(KernelSpec{}, d, rho, sigma2);
  const Point far = make_point(5.0 + 50.0);
  EXPECT_NEAR(m.predict_mean(far), 0.0, 1e-6);
  EXPECT_NEAR(m.predict_var(far), sigma2 / (8 * rho), 1e-6);
}

TEST(GprTest, InterpolatesWithTinyRegularization) {
  Dataset d;
  for (int i = 0; i < 10; ++i) d.push_back(Sample{make_point(0.5 * i), std::sin(1.3 * i)});
  const auto m = GprModel::fit(KernelSpec{}, d, 1e-9, 1.0);
  for (const auto& s : d) EXPECT_NEAR(m.predict_mean(s.x), s.y, 1e-3);
}

TEST(GprTest, FactorReconstructsRegularizedGram) {
  const KernelSpec k;
  const Dataset d = random_dataset(30, 8);
  const auto m = GprModel::fit(k, d, 0.05, 1.0);
  const Eigen::MatrixXd l = m.factor();
  const Eigen::MatrixXd a = gram(k, points_of(d), m.diag_add());
  EXPECT_LT((l * l.transpose() - a).norm() / a.norm(), 1e-8);
  EXPECT_EQ(m.weights().size(), 30);
  EXPECT_TRUE(l.isLowerTriangular());
}

TEST(GprTest, RejectsBadInputs) {
  const Dataset d = random_dataset(3, 1);
  EXPECT_THROW(GprModel::fit(KernelSpec{}, Dataset{}, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(GprModel::fit(KernelSpec{}, d, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(GprModel::fit(KernelSpec{}, d, 1.0, -1.0), std::invalid_argument);
}

TEST(GprTest, RobustCholeskyEscalatesThenThrows) {
  // Rank one; succeeds once jitter lifts the null space.
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(4, 4);
  double jitter = -1.0;
  const Eigen::MatrixXd l = robust_cholesky(ones, &jitter);
  EXPECT_GE(jitter, 0.0);
  EXPECT_LT(jitter, 1e-6);
  Eigen::MatrixXd lifted = ones;
  lifted.diagonal().array() += jitter;
  EXPECT_LT((l * l.transpose() - lifted).norm(), 1e-9);

  // Indefinite beyond any jitter the policy allows.
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
  bad(2, 2) = -1.0;
  try {
    robust_cholesky(bad);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NEAR(e.jitter(), 1e-10 * 3 * 100, 1e-20);
  }
}

TEST(GprTest, RegularizedWeightsMatchModel) {
  const KernelSpec k;
  const Dataset d = random_dataset(12, 21);
  const auto m = GprModel::fit(k, d, 0.3, 1.0);
  const Eigen::VectorXd w = regularized_weights(gram(k, points_of(d), 0.0), 12 * 0.3, responses_of(d));
  EXPECT_LT((w - m.weights()).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(GprTest, ExtensionKeepsDiagonalFixed) {
  const KernelSpec k;
  const Dataset d = random_dataset(5, 2);
  const auto m = GprModel::fit(k, d, 0.2, 1.0);
  const auto e = m.extended(make_point(1.7), 0.4);
  EXPECT_EQ(e.size(), 6u);
  EXPECT_DOUBLE_EQ(e.rho() * 6, m.rho() * 5);
  EXPECT_EQ(m.size(), 5u);
}

TEST(GprTest, InformationGainCases) {
  const KernelSpec k;
  EXPECT_EQ(information_gain(k, std::vector<Point>{}, 1.0), 0.0);
  EXPECT_NEAR(information_gain(k, std::vector<Point>{make_point(0.3)}, 1.0),
              0.346573590279972654708616060729, 1e-15);

  const std::vector<Point> xs = points_of(random_dataset(5, 9));
  const double sigma2 = 0.4;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram(k, xs, 0.0));
  double want = 0.0;
  for (double lam : eig.eigenvalues()) want += 0.5 * std::log1p(lam / sigma2);
  EXPECT_NEAR(information_gain(k, xs, sigma2), want, 1e-8);
}

// ---------------------------------------------------------------------------
// GridPosterior

TEST(GridPosteriorTest, MatchesFullFit) {
  const KernelSpec k;
  auto grid = std::make_shared<const GridKernel>(k, unit_grid(200));
  const double sigma2 = 0.1;
  GridPosterior post(grid, sigma2, sigma2);
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> pick(0, 199);
  std::normal_distribution<double> z;
  Dataset d;
  for (int step = 0; step < 60; ++step) {
    const std::size_t node = pick(rng);
    const double y = z(rng);
    post.append(node, y);
    d.push_back(Sample{grid->nodes[node], y});
    if (step % 7 != 0) continue;
    const auto m = GprModel::fit(k, d, sigma2 / static_cast<double>(d.size()), sigma2);
    for (std::size_t g = 0; g < grid->size(); g += 3) {
      EXPECT_NEAR(post.mean(g), m.predict_mean(grid->nodes[g]), 1e-8);
      EXPECT_NEAR(post.variance(g), m.predict_var(grid->nodes[g]), 1e-8);
    }
  }
}

TEST(GridPosteriorTest, EmptyIsPrior) {
  auto grid = std::make_shared<const GridKernel>(KernelSpec{}, unit_grid(10));
  const GridPosterior post(grid, 0.5, 2.0);
  for (std::size_t g = 0; g < 10; ++g) {
    EXPECT_EQ(post.mean(g), 0.0);
    EXPECT_DOUBLE_EQ(post.variance(g), 4.0);
  }
}

// ---------------------------------------------------------------------------
// Properties

TEST(GprPropertyTest, ResidualUpToTwoHundredPoints) {
  const KernelSpec k;
  for (int n : {1, 5, 20, 80, 200}) {
    const Dataset d = random_dataset(n, 100 + n);
    const double rho = 0.01;
    const auto m = GprModel::fit(k, d, rho, 1.0);
    const Eigen::VectorXd y = responses_of(d);
    const Eigen::MatrixXd a = gram(k, points_of(d), n * rho);
    EXPECT_LT((a * m.weights() - y).lpNorm<Eigen::Infinity>(),
              1e-8 * (1.0 + y.lpNorm<Eigen::Infinity>()))
        << "n = " << n;
  }
}

TEST(GprPropertyTest, VarianceNonNegativeOnGrid) {
  const auto grid = unit_grid(101);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> log_rho(-8.0, 0.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Dataset d = random_dataset(1 + trial % 25, 500 + trial);
    const auto m = GprModel::fit(KernelSpec{}, d, std::pow(10.0, log_rho(rng)), 1.0);
    for (const auto& x : grid) EXPECT_GE(m.predict_var(x), 0.0);
  }
}

TEST(GprPropertyTest, InformationGainSubsetMonotone) {
  const std::vector<Point> xs = points_of(random_dataset(6, 12));
  const KernelSpec k;
  const double full = information_gain(k, xs, 1.0);
  for (unsigned mask = 0; mask < (1u << 6); ++mask) {
    std::vector<Point> sub;
    for (int i = 0; i < 6; ++i) {
      if (mask & (1u << i)) sub.push_back(xs[static_cast<std::size_t>(i)]);
    }
    EXPECT_LE(information_gain(k, sub, 1.0), full + 1e-10) << "mask " << mask;
  }
}

TEST(GprPropertyTest, InformationGainGrowsAsNoiseShrinks) {
  const std::vector<Point> xs = points_of(random_dataset(8, 13));
  const KernelSpec k;
  const double g10 = information_gain(k, xs, 10.0);
  const double g1 = information_gain(k, xs, 1.0);
  const double g01 = information_gain(k, xs, 0.1);
  EXPECT_GE(g10, 0.0);
  EXPECT_LT(g10, g1);
  EXPECT_LT(g1, g01);
}

TEST(GprPropertyTest, PermutationInvariant) {
  const KernelSpec k;
  Dataset d = random_dataset(15, 31);
  const auto a = GprModel::fit(k, d, 0.05, 0.7);
  std::mt19937_64 rng(2);
  std::shuffle(d.begin(), d.end(), rng);
  const auto b = GprModel::fit(k, d, 0.05, 0.7);
  for (const auto& x : unit_grid(51)) {
    EXPECT_NEAR(a.predict_mean(x), b.predict_mean(x), 1e-10);
    EXPECT_NEAR(a.predict_var(x), b.predict_var(x), 1e-10);
  }
}

TEST(GprPropertyTest, IncrementalMatchesFullRefit) {
  const KernelSpec k;
  const Dataset d = random_dataset(120, 44);
  const double diag = 0.15;
  auto inc = GprModel::fit(k, std::span<const Sample>(d.data(), 1), diag, 1.0);
  for (std::size_t n = 2; n <= d.size(); ++n) {
    inc = std::move(inc).extended(d[n - 1].x, d[n - 1].y);
    if (n % 17 != 0 && n != d.size()) continue;
    const auto full =
        GprModel::fit(k, std::span<const Sample>(d.data(), n), diag / static_cast<double>(n), 1.0);
    EXPECT_LT((inc.weights() - full.weights()).lpNorm<Eigen::Infinity>(), 1e-6);
    for (const auto& x : unit_grid(41)) {
      EXPECT_NEAR(inc.predict_mean(x), full.predict_mean(x), 1e-8);
      EXPECT_NEAR(inc.predict_var(x), full.predict_var(x), 1e-8);
    }
  }
}

}  // namespace
}  // namespace gpucb
