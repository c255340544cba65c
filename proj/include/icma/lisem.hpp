#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "icma/tensor.hpp"
#include "icma/tucker.hpp"

namespace icma {

// n units of (Z_i, X_i, M_i, Y_i). Mediators are stored one unit per column
// of an N x n matrix, each column in vec order.
struct Dataset {
  Matrix covariates;  // n x J
  Vector treatment;   // n, entries 0 or 1
  Matrix mediators;   // N x n
  Dims dims;
  Vector outcome;     // n

  std::size_t units() const { return static_cast<std::size_t>(outcome.size()); }
  std::size_t covariate_count() const { return static_cast<std::size_t>(covariates.cols()); }
  Tensor3 mediator(std::size_t i) const;

  // Throws ErrorKind::data on shape mismatches, non-binary treatment or
  // non-finite values.
  void validate() const;
};

// Columns (X, Z_1..Z_J[, 1]).
Matrix scalar_design(const Dataset& d, bool include_intercept);

struct MediatorFit {
  Tensor3 alpha;
  std::vector<Tensor3> psi;
  Tensor3 intercept;   // eta_1; zero when intercepts are off
  Matrix residuals;    // N x n, column i is vec of the residual tensor of unit i
};

struct TotalFit {
  double tau = 0.0;
  Vector theta;            // J covariate coefficients
  double intercept = 0.0;
  Vector residuals;        // xi
  bool saturated = false;  // no residual degrees of freedom
};

struct OutcomeFit {
  double gamma = 0.0;
  TuckerFactors beta;
  Tensor3 beta_tensor;
  Vector s;
  double intercept = 0.0;  // eta_2
  Vector residuals;        // epsilon (scalar)
  Ranks ranks{};
  TuckerFit tucker;
  std::vector<RankCandidate> rank_candidates;
};

struct LisemConfig {
  bool include_intercept = true;
  std::vector<Ranks> rank_candidates = simulation_rank_set();
  std::optional<Ranks> ranks;  // fixed rank; skips BIC selection
  TuckerOptions tucker;
};

MediatorFit fit_mediator_model(const Dataset& d, bool include_intercept);
TotalFit fit_total_model(const Dataset& d, bool include_intercept);

// omega = Y - B theta and the mediator residuals as covariates.
TuckerRegressionProblem residualize(const Dataset& d, const TotalFit& total,
                                    const MediatorFit& mediator);

// Tucker fit of beta on the residualized problem, then (gamma, s, eta_2) by
// least squares of Y - <M, beta> on the scalar design. A warm start, when
// given, replaces the default initialization (used by bootstrap refits).
OutcomeFit fit_outcome_model(const Dataset& d, const TuckerRegressionProblem& problem,
                             const LisemConfig& config,
                             const TuckerFactors* warm = nullptr);

struct LisemFit {
  Tensor3 alpha_hat;
  std::vector<Tensor3> psi_hat;
  double gamma_hat = 0.0;
  TuckerFactors beta_hat;
  Tensor3 beta_tensor;  // compose(beta_hat)
  Vector s_hat;
  double tau_hat = 0.0;
  Vector theta_hat;
  Matrix eps_tensor_resid;  // N x n
  Vector eps_scalar_resid;
  Vector xi_resid;
  Tensor3 eta1_hat;
  double eta2_hat = 0.0;
  double total_intercept = 0.0;
  Ranks ranks{};
  TuckerFit tucker;
  std::vector<RankCandidate> rank_candidates;
  bool saturated = false;
  bool include_intercept = true;

  double indirect_effect() const { return inner(alpha_hat, beta_tensor); }
};

LisemFit fit_lisem(const Dataset& d, const LisemConfig& config,
                   const TuckerFactors* warm = nullptr);

}  // namespace icma
