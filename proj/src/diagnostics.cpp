#include "icma/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "icma/error.hpp"
#include "icma/inference.hpp"
#include "icma/parallel.hpp"
#include "icma/random.hpp"

namespace icma {

namespace {

using Index = Eigen::Index;

Matrix double_centered(const Matrix& dist) {
  const Vector row_mean = dist.rowwise().mean();
  const Vector col_mean = dist.colwise().mean().transpose();
  const double grand = dist.mean();
  Matrix out = dist;
  out.colwise() -= row_mean;
  out.rowwise() -= col_mean.transpose();
  out.array() += grand;
  return out;
}

Matrix tensor_distances(const Matrix& columns) {
  const Matrix gram = columns.transpose() * columns;
  const Index n = gram.rows();
  Matrix d(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      d(i, j) = std::sqrt(std::max(0.0, gram(i, i) + gram(j, j) - 2.0 * gram(i, j)));
    }
  }
  return d;
}

Matrix scalar_distances(const Vector& y) {
  const Index n = y.size();
  Matrix d(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) d(i, j) = std::abs(y(i) - y(j));
  }
  return d;
}

double permuted_statistic(const Matrix& a, const Matrix& b, const std::vector<Index>& perm) {
  const Index n = a.rows();
  double acc = 0.0;
  for (Index j = 0; j < n; ++j) {
    const Index pj = perm[static_cast<std::size_t>(j)];
    for (Index i = 0; i < n; ++i) acc += a(i, j) * b(perm[static_cast<std::size_t>(i)], pj);
  }
  return acc / static_cast<double>(n * n);
}

}  // namespace

double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 1.18) {
    // Small-x series for the CDF converges faster here.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double odd = 2.0 * k - 1.0;
      cdf += std::exp(-odd * odd * pi2 / (8.0 * x * x));
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / x;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_normality(const Vector& residuals) {
  const Index n = residuals.size();
  if (n < 8) fail(ErrorKind::data, "KS normality test needs at least 8 residuals");
  const double mean = residuals.mean();
  const double sd = sample_sd(residuals);
  if (!(sd > 0.0)) fail(ErrorKind::data, "KS normality test: residuals have zero variance");

  std::vector<double> sorted(residuals.data(), residuals.data() + n);
  std::sort(sorted.begin(), sorted.end());
  double d = 0.0;
  const double nd = static_cast<double>(n);
  for (Index i = 0; i < n; ++i) {
    const double f = normal_cdf((sorted[static_cast<std::size_t>(i)] - mean) / sd);
    d = std::max({d, static_cast<double>(i + 1) / nd - f, f - static_cast<double>(i) / nd});
  }
  return {d, kolmogorov_survival(std::sqrt(nd) * d)};
}

double distance_covariance(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) fail(ErrorKind::data, "distance covariance: sample sizes differ");
  const Matrix a = double_centered(tensor_distances(x.transpose()));
  const Matrix b = double_centered(scalar_distances(y));
  return (a.array() * b.array()).sum() / static_cast<double>(y.size() * y.size());
}

IndependenceResult residual_independence(const Matrix& tensor_residuals, const Vector& scalar_residuals,
                                         std::size_t permutations, std::uint64_t seed, unsigned workers) {
  const Index n = scalar_residuals.size();
  if (tensor_residuals.cols() != n) fail(ErrorKind::data, "independence test: residual counts differ");
  if (n < 10) fail(ErrorKind::data, "independence test needs at least 10 units");
  if (permutations == 0) fail(ErrorKind::config, "independence test needs at least one permutation");

  const Matrix a = double_centered(tensor_distances(tensor_residuals));
  const Matrix b = double_centered(scalar_distances(scalar_residuals));
  std::vector<Index> identity(static_cast<std::size_t>(n));
  std::iota(identity.begin(), identity.end(), Index{0});
  const double observed = permuted_statistic(a, b, identity);

  std::vector<char> exceeds(permutations, 0);
  parallel_for(permutations, workers, [&](std::size_t k) {
    Rng rng = make_rng(seed, kStreamPermutation, k);
    std::vector<Index> perm = identity;
    std::shuffle(perm.begin(), perm.end(), rng);
    exceeds[k] = permuted_statistic(a, b, perm) >= observed ? 1 : 0;
  });
  const auto count = static_cast<double>(std::count(exceeds.begin(), exceeds.end(), 1));

  IndependenceResult out;
  out.statistic = observed;
  out.permutations = permutations;
  out.p = (1.0 + count) / (static_cast<double>(permutations) + 1.0);
  return out;
}

DiagnosticReport diagnose(const Matrix& tensor_residuals, const Vector& scalar_residuals,
                          std::size_t permutations, std::uint64_t seed, double level, unsigned workers) {
  DiagnosticReport r;
  r.level = level;
  r.ks = ks_normality(scalar_residuals);
  r.independence = residual_independence(tensor_residuals, scalar_residuals, permutations, seed, workers);
  r.normality_rejected = r.ks.p < level;
  r.independence_rejected = r.independence.p < level;
  return r;
}

}  // namespace icma
