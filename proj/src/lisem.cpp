#include "icma/lisem.hpp"

#include <cmath>
#include <string>

#include "icma/error.hpp"
#include "icma/linalg.hpp"

namespace icma {

namespace {

using Index = Eigen::Index;

}  // namespace

Tensor3 Dataset::mediator(std::size_t i) const {
  const auto col = mediators.col(static_cast<Index>(i));
  return unvec(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), dims);
}

void Dataset::validate() const {
  const auto n = outcome.size();
  if (n < 1) fail(ErrorKind::data, "dataset has no units");
  if (treatment.size() != n || covariates.rows() != n || mediators.cols() != n) {
    fail(ErrorKind::data, "dataset columns disagree on the number of units");
  }
  if (static_cast<std::size_t>(mediators.rows()) != dims.size() || dims.size() == 0) {
    fail(ErrorKind::data, "mediator tensors do not match the declared dims");
  }
  if (static_cast<std::size_t>(n) < covariate_count() + 1) {
    fail(ErrorKind::data, "need at least J + 1 units, got " + std::to_string(n));
  }
  for (Index i = 0; i < n; ++i) {
    if (treatment(i) != 0.0 && treatment(i) != 1.0) {
      fail(ErrorKind::data, "treatment of unit " + std::to_string(i + 1) + " is not 0 or 1");
    }
  }
  if (!outcome.allFinite() || !covariates.allFinite() || !mediators.allFinite()) {
    fail(ErrorKind::data, "dataset contains non-finite values");
  }
}

Matrix scalar_design(const Dataset& d, bool include_intercept) {
  const Index n = static_cast<Index>(d.units());
  const Index j = static_cast<Index>(d.covariate_count());
  Matrix b(n, 1 + j + (include_intercept ? 1 : 0));
  b.col(0) = d.treatment;
  if (j > 0) b.middleCols(1, j) = d.covariates;
  if (include_intercept) b.col(1 + j).setOnes();
  return b;
}

MediatorFit fit_mediator_model(const Dataset& d, bool include_intercept) {
  d.validate();
  const Matrix b = scalar_design(d, include_intercept);
  // A_{X,Z} = B kron I_N, so the joint problem splits into one regression per
  // locus sharing the design B.
  const Matrix coef = solve_least_squares(b, Matrix(d.mediators.transpose()), "mediator model");
  const Index j = static_cast<Index>(d.covariate_count());

  MediatorFit out;
  auto row_tensor = [&](Index row) {
    const Vector v = coef.row(row).transpose();
    return unvec(v, d.dims);
  };
  out.alpha = row_tensor(0);
  for (Index k = 0; k < j; ++k) out.psi.push_back(row_tensor(1 + k));
  out.intercept = include_intercept ? row_tensor(1 + j) : Tensor3(d.dims);
  out.residuals = d.mediators - (b * coef).transpose();
  return out;
}

TotalFit fit_total_model(const Dataset& d, bool include_intercept) {
  d.validate();
  const Matrix b = scalar_design(d, include_intercept);
  const Vector coef = solve_least_squares(b, d.outcome, "total-effect model");
  const Index j = static_cast<Index>(d.covariate_count());

  TotalFit out;
  out.tau = coef(0);
  out.theta = coef.segment(1, j);
  out.intercept = include_intercept ? coef(1 + j) : 0.0;
  out.residuals = d.outcome - b * coef;
  out.saturated = b.rows() == b.cols();
  if (out.saturated) out.residuals.setZero();
  return out;
}

TuckerRegressionProblem residualize(const Dataset& d, const TotalFit& total,
                                    const MediatorFit& mediator) {
  TuckerRegressionProblem p;
  p.responses = total.residuals;
  p.covariates = mediator.residuals;
  p.dims = d.dims;
  return p;
}

OutcomeFit fit_outcome_model(const Dataset& d, const TuckerRegressionProblem& problem,
                             const LisemConfig& config, const TuckerFactors* warm) {
  OutcomeFit out;
  TuckerRegressionProblem p = problem;
  p.options = config.tucker;

  if (config.ranks || warm) {
    p.ranks = config.ranks ? *config.ranks : warm->ranks();
    bool done = false;
    if (warm && warm->ranks() == p.ranks) {
      try {
        out.tucker = fit_tucker_regression(p, *warm);
        done = true;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::numerical) throw;
      }
    }
    if (!done) out.tucker = fit_tucker_regression(p);
    out.ranks = p.ranks;
  } else {
    RankSelection sel = select_rank_bic(p, config.rank_candidates);
    out.tucker = std::move(sel.fit);
    out.ranks = sel.ranks;
    out.rank_candidates = std::move(sel.candidates);
  }
  out.beta = out.tucker.beta;
  out.beta_tensor = compose(out.beta);

  const Matrix b = scalar_design(d, config.include_intercept);
  const Vector partial = d.outcome - d.mediators.transpose() * out.beta_tensor.as_vector();
  const Vector coef = solve_least_squares(b, partial, "outcome model");
  const Index j = static_cast<Index>(d.covariate_count());
  out.gamma = coef(0);
  out.s = coef.segment(1, j);
  out.intercept = config.include_intercept ? coef(1 + j) : 0.0;
  out.residuals = partial - b * coef;
  return out;
}

LisemFit fit_lisem(const Dataset& d, const LisemConfig& config, const TuckerFactors* warm) {
  MediatorFit mediator = fit_mediator_model(d, config.include_intercept);
  TotalFit total = fit_total_model(d, config.include_intercept);
  const TuckerRegressionProblem problem = residualize(d, total, mediator);
  OutcomeFit outcome = fit_outcome_model(d, problem, config, warm);

  LisemFit fit;
  fit.alpha_hat = std::move(mediator.alpha);
  fit.psi_hat = std::move(mediator.psi);
  fit.eta1_hat = std::move(mediator.intercept);
  fit.eps_tensor_resid = std::move(mediator.residuals);
  fit.tau_hat = total.tau;
  fit.theta_hat = std::move(total.theta);
  fit.total_intercept = total.intercept;
  fit.xi_resid = std::move(total.residuals);
  fit.saturated = total.saturated;
  fit.gamma_hat = outcome.gamma;
  fit.beta_hat = std::move(outcome.beta);
  fit.beta_tensor = std::move(outcome.beta_tensor);
  fit.s_hat = std::move(outcome.s);
  fit.eta2_hat = outcome.intercept;
  fit.eps_scalar_resid = std::move(outcome.residuals);
  fit.ranks = outcome.ranks;
  fit.tucker = std::move(outcome.tucker);
  fit.rank_candidates = std::move(outcome.rank_candidates);
  fit.include_intercept = config.include_intercept;
  return fit;
}

}  // namespace icma
