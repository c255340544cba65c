#include <cmath>
#include <random>

#include "doctest.h"

#include "icma/diagnostics.hpp"
#include "icma/error.hpp"
#include "icma/inference.hpp"

using namespace icma;

TEST_CASE("Kolmogorov survival function") {
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(kolmogorov_survival(1.6276) == doctest::Approx(0.01).epsilon(1e-3));
  CHECK(kolmogorov_survival(10.0) < 1e-80);
  double prev = 1.0;
  for (double x = 0.1; x < 3.0; x += 0.1) {
    const double s = kolmogorov_survival(x);
    CHECK(s <= prev);
    prev = s;
  }
}

TEST_CASE("KS accepts exact normal quantiles") {
  const Eigen::Index n = 200;
  Vector grid(n);
  for (Eigen::Index i = 0; i < n; ++i) grid(i) = normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  const KsResult r = ks_normality(grid);
  CHECK(r.p > 0.99);
  // Affine invariance: parameters are re-estimated.
  const KsResult shifted = ks_normality((3.0 * grid.array() + 7.0).matrix());
  CHECK(shifted.statistic == doctest::Approx(r.statistic).epsilon(1e-10));
}

TEST_CASE("KS rejects uniform residuals") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector x(500);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = std::pow(u(rng), 4.0);
  CHECK(ks_normality(x).p < 0.01);
  CHECK_THROWS_AS(ks_normality(Vector::Constant(20, 1.0)), Error);
  CHECK_THROWS_AS(ks_normality(Vector::Zero(5)), Error);
}

TEST_CASE("distance covariance") {
  Vector y(4);
  y << 1.0, 2.0, 3.0, 4.0;
  // Independent of a constant.
  CHECK(distance_covariance(Matrix::Ones(4, 2), y) == doctest::Approx(0.0));
  // Rows equal to y: dCov^2(y, y) is positive and scales quadratically.
  const double self = distance_covariance(Matrix(y), y);
  CHECK(self > 0.0);
  CHECK(distance_covariance(Matrix(2.0 * y), 2.0 * y) == doctest::Approx(4.0 * self));
  CHECK_THROWS_AS(distance_covariance(Matrix::Ones(3, 2), y), Error);
}

TEST_CASE("residual independence permutation test") {
  std::mt19937_64 rng(52);
  std::normal_distribution<double> g;
  const Eigen::Index n = 60;
  Matrix tensors(8, n);
  Vector independent(n), dependent(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < 8; ++k) tensors(k, i) = g(rng);
    independent(i) = g(rng);
    dependent(i) = tensors.col(i).squaredNorm() + 0.1 * g(rng);
  }
  const IndependenceResult dep = residual_independence(tensors, dependent, 199, 7);
  CHECK(dep.p < 0.05);
  CHECK(dep.p >= 1.0 / 200.0);
  CHECK(dep.permutations == 199);
  const IndependenceResult ind = residual_independence(tensors, independent, 199, 7);
  CHECK(ind.p > 0.01);
  // p has resolution 1 / (permutations + 1).
  const double steps = ind.p * 200.0;
  CHECK(std::abs(steps - std::round(steps)) < 1e-9);

  const IndependenceResult again = residual_independence(tensors, independent, 199, 7, 4);
  CHECK(again.p == ind.p);
  CHECK(again.statistic == ind.statistic);

  CHECK_THROWS_AS(residual_independence(tensors, independent, 0, 7), Error);
  CHECK_THROWS_AS(residual_independence(tensors.leftCols(5), independent.head(5), 10, 7), Error);
  CHECK_THROWS_AS(residual_independence(tensors, independent.head(10), 10, 7), Error);
}

TEST_CASE("diagnose combines both tests") {
  std::mt19937_64 rng(53);
  std::normal_distribution<double> g;
  const Eigen::Index n = 80;
  Matrix tensors(4, n);
  Vector scalar(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < 4; ++k) tensors(k, i) = g(rng);
    scalar(i) = g(rng);
  }
  const DiagnosticReport r = diagnose(tensors, scalar, 99, 3);
  CHECK(r.level == 0.05);
  CHECK(r.normality_rejected == (r.ks.p < 0.05));
  CHECK(r.independence_rejected == (r.independence.p < 0.05));
  CHECK(r.ks_parameters_estimated);
}
