#pragma once

#include <cstddef>
#include <cstdint>

#include "icma/tensor.hpp"

namespace icma {

struct KsResult {
  double statistic = 0.0;
  double p = 1.0;
};

// Kolmogorov survival function P(K > x) for the limiting distribution.
double kolmogorov_survival(double x);

// One-sample KS against a normal with the sample mean and sd. The p-value is
// the asymptotic Kolmogorov one, which is conservative when parameters are
// estimated.
KsResult ks_normality(const Vector& residuals);

struct IndependenceResult {
  double statistic = 0.0;  // squared sample distance covariance
  double p = 1.0;
  std::size_t permutations = 0;
};

// Squared distance covariance between the rows of x (n x p) and y (n).
double distance_covariance(const Matrix& x, const Vector& y);

// Permutation test of independence between the tensor residuals (columns of
// an N x n matrix) and scalar residuals, by distance covariance.
IndependenceResult residual_independence(const Matrix& tensor_residuals, const Vector& scalar_residuals,
                                         std::size_t permutations, std::uint64_t seed,
                                         unsigned workers = 1);

struct DiagnosticReport {
  KsResult ks;
  IndependenceResult independence;
  double level = 0.05;
  bool normality_rejected = false;
  bool independence_rejected = false;
  bool ks_parameters_estimated = true;
};

DiagnosticReport diagnose(const Matrix& tensor_residuals, const Vector& scalar_residuals,
                          std::size_t permutations, std::uint64_t seed, double level = 0.05,
                          unsigned workers = 1);

}  // namespace icma
