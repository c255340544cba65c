#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "icma/tensor.hpp"

namespace icma {

using Ranks = std::array<std::size_t, 3>;

// beta = core x1 U1 x2 U2 x3 U3, with core R1xR2xR3 and U_d of shape N_d x R_d.
struct TuckerFactors {
  Tensor3 core;
  std::array<Matrix, 3> factors;

  Dims dims() const;
  Ranks ranks() const;
};

// Sequentially truncated HOSVD, truncating modes in order 1, 2, 3.
TuckerFactors st_hosvd(const Tensor3& t, const Ranks& ranks);

Tensor3 compose(const TuckerFactors& f);

struct TuckerOptions {
  double tolerance = 1e-6;  // absolute log-likelihood increase
  int max_iters = 500;
  std::uint64_t seed = 0x5EED;  // random-start fallback
};

// Gaussian regression omega_i = <A_i, beta> + e_i with beta of Tucker rank `ranks`.
struct TuckerRegressionProblem {
  Vector responses;
  Matrix covariates;  // N x n: column i is vec(A_i)
  Dims dims;
  Ranks ranks{1, 1, 1};
  TuckerOptions options;

  std::size_t units() const { return static_cast<std::size_t>(responses.size()); }
  void validate() const;
};

struct TuckerFit {
  TuckerFactors beta;
  std::vector<double> loglik_trace;
  bool converged = false;
  int iterations = 0;
  double sigma2_hat = 0.0;
  bool random_start = false;

  double loglik() const { return loglik_trace.empty() ? 0.0 : loglik_trace.back(); }
};

// Profile Gaussian log-likelihood at residual sum of squares `rss`.
double gaussian_loglik(double rss, std::size_t n);

// Free parameters of a Tucker tensor: sum N_d R_d + prod R_d - sum R_d^2.
std::size_t effective_parameters(const Dims& dims, const Ranks& ranks);

TuckerFactors warm_start(const TuckerRegressionProblem& p);
TuckerFactors random_start(const Dims& dims, const Ranks& ranks, std::uint64_t seed);

// Block relaxation: exact least-squares updates of U1, U2, U3 then the core,
// repeated until the log-likelihood gain drops below the tolerance.
TuckerFit fit_tucker_regression(const TuckerRegressionProblem& p, const TuckerFactors& init);

// Warm start, falling back to a seeded random start if the warm start leads
// to a rank-deficient block.
TuckerFit fit_tucker_regression(const TuckerRegressionProblem& p);

struct RankCandidate {
  Ranks ranks{};
  std::size_t parameters = 0;
  bool ok = false;
  double bic = 0.0;
  std::string error;
};

struct RankSelection {
  Ranks ranks{};
  TuckerFit fit;
  double bic = 0.0;
  std::vector<RankCandidate> candidates;
};

// Fits every candidate (p.ranks is ignored) and keeps the smallest
// -2 loglik + log(n) p_e; ties go to fewer parameters, then list order.
RankSelection select_rank_bic(const TuckerRegressionProblem& p, const std::vector<Ranks>& candidates);

std::vector<Ranks> simulation_rank_set();
std::vector<Ranks> extended_rank_set();

}  // namespace icma
