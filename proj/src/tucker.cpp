#include "icma/tucker.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "icma/error.hpp"
#include "icma/linalg.hpp"
#include "icma/random.hpp"

namespace icma {

namespace {

using Index = Eigen::Index;

std::string describe(const Ranks& r) {
  return "(" + std::to_string(r[0]) + "," + std::to_string(r[1]) + "," + std::to_string(r[2]) + ")";
}

void require_ranks(const Dims& dims, const Ranks& ranks) {
  for (int d = 0; d < 3; ++d) {
    if (ranks[d] < 1 || ranks[d] > dims[d + 1]) {
      fail(ErrorKind::config, "Tucker rank " + describe(ranks) + " exceeds tensor dimensions");
    }
  }
}

// Leading left singular vectors of m.
Matrix leading_left_vectors(const Matrix& m, std::size_t count) {
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU);
  return svd.matrixU().leftCols(static_cast<Index>(count));
}

// Working state of one block-relaxation run.
class BlockRelaxation {
 public:
  BlockRelaxation(const TuckerRegressionProblem& p, const TuckerFactors& init)
      : p_(p), n_(static_cast<Index>(p.units())), beta_(init) {}

  TuckerFit run();

 private:
  Matrix mode_regressors(int d) const;
  Matrix core_regressors() const;
  void update_factor(int d);
  void update_core();
  void orthonormalize(int d);
  double current_loglik() const;

  const TuckerRegressionProblem& p_;
  Index n_;
  TuckerFactors beta_;
  Vector fitted_;
};

Matrix BlockRelaxation::mode_regressors(int d) const {
  const Dims& dims = p_.dims;
  const auto n1 = static_cast<Index>(dims.n1);
  const auto n2 = static_cast<Index>(dims.n2);
  const auto n3 = static_cast<Index>(dims.n3);
  const auto& u = beta_.factors;
  const auto rd = u[d].cols();
  const auto nd = u[d].rows();

  // G maps the non-d modes of a unit's covariate tensor to the R_d columns of
  // its regressor block: G = (U_c kron U_b) * core_(d)^T.
  Matrix g;
  switch (d) {
    case 0: g = kron(u[2], u[1]) * mode_matricize(beta_.core, 1).transpose(); break;
    case 1: g = kron(u[2], u[0]) * mode_matricize(beta_.core, 2).transpose(); break;
    default: g = kron(u[1], u[0]) * mode_matricize(beta_.core, 3).transpose(); break;
  }

  Matrix x(n_, nd * rd);
  Matrix block(nd, rd);
  for (Index i = 0; i < n_; ++i) {
    const double* a = p_.covariates.col(i).data();
    switch (d) {
      case 0:
        block.noalias() = Eigen::Map<const Matrix>(a, n1, n2 * n3) * g;
        break;
      case 1:
        block.setZero();
        for (Index p3 = 0; p3 < n3; ++p3) {
          Eigen::Map<const Matrix> slice(a + n1 * n2 * p3, n1, n2);
          block.noalias() += slice.transpose() * g.middleRows(n1 * p3, n1);
        }
        break;
      default:
        block.noalias() = Eigen::Map<const Matrix>(a, n1 * n2, n3).transpose() * g;
        break;
    }
    x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(block.data(), block.size());
  }
  return x;
}

Matrix BlockRelaxation::core_regressors() const {
  const auto& u = beta_.factors;
  const Matrix k = kron(u[2], kron(u[1], u[0]));
  return p_.covariates.transpose() * k;
}

// Least squares over the non-negligible columns; columns carrying no signal
// (norm below the rank tolerance of the largest) keep a zero coefficient.
Vector pinned_least_squares(const Matrix& x, const Vector& y, const char* what) {
  const Vector norms = x.colwise().norm();
  const double largest = norms.size() ? norms.maxCoeff() : 0.0;
  if (!std::isfinite(largest)) fail(ErrorKind::numerical, std::string(what) + ": non-finite design");
  if (largest == 0.0) return Vector::Zero(x.cols());
  std::vector<Index> keep;
  for (Index j = 0; j < norms.size(); ++j) {
    if (norms(j) > kRankTolerance * largest) keep.push_back(j);
  }
  Vector coef = Vector::Zero(x.cols());
  if (static_cast<Index>(keep.size()) == x.cols()) {
    coef = solve_least_squares(x, y, what);
  } else {
    Matrix reduced(x.rows(), static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) reduced.col(static_cast<Index>(k)) = x.col(keep[k]);
    const Vector sub = solve_least_squares(reduced, y, what);
    for (std::size_t k = 0; k < keep.size(); ++k) coef(keep[k]) = sub(static_cast<Index>(k));
  }
  return coef;
}

void BlockRelaxation::update_factor(int d) {
  const Matrix x = mode_regressors(d);
  const Vector coef = pinned_least_squares(x, p_.responses, "Tucker factor update");
  auto& u = beta_.factors[d];
  u = Eigen::Map<const Matrix>(coef.data(), u.rows(), u.cols());
  fitted_.noalias() = x * coef;
  orthonormalize(d);
}

// U = Q R with Q = U R^{-1}; R is absorbed into the core so beta is unchanged.
// Rows of U that are exactly zero stay exactly zero.
void BlockRelaxation::orthonormalize(int d) {
  auto& u = beta_.factors[d];
  Eigen::HouseholderQR<Matrix> qr(u);
  const Matrix r = qr.matrixQR().topRows(u.cols()).triangularView<Eigen::Upper>();
  if (!has_full_column_rank(r)) return;
  Matrix q = u;
  r.triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(q);
  u = std::move(q);
  beta_.core = mode_multiply(beta_.core, d + 1, r);
}

void BlockRelaxation::update_core() {
  const Matrix x = core_regressors();
  const Vector coef = pinned_least_squares(x, p_.responses, "Tucker core update");
  beta_.core = unvec(coef, beta_.core.dims());
  fitted_.noalias() = x * coef;
}

double BlockRelaxation::current_loglik() const {
  const double ll = gaussian_loglik((p_.responses - fitted_).squaredNorm(), p_.units());
  if (!std::isfinite(ll)) fail(ErrorKind::numerical, "non-finite Tucker log-likelihood");
  return ll;
}

TuckerFit BlockRelaxation::run() {
  TuckerFit fit;
  const double total = p_.responses.squaredNorm();

  if (total == 0.0) {
    update_core();
    fit.beta = beta_;
    fit.loglik_trace.push_back(current_loglik());
    fit.converged = true;
    fit.iterations = 1;
    fit.sigma2_hat = 0.0;
    return fit;
  }

  fitted_ = core_regressors() * beta_.core.as_vector();
  double previous = current_loglik();
  fit.loglik_trace.push_back(previous);

  for (int iter = 1; iter <= p_.options.max_iters; ++iter) {
    const TuckerFactors before = beta_;
    const Vector fitted_before = fitted_;
    for (int d = 0; d < 3; ++d) update_factor(d);
    update_core();
    const double ll = current_loglik();
    fit.iterations = iter;
    if (ll < previous) {
      // Round-off at the optimum; keep the better iterate.
      beta_ = before;
      fitted_ = fitted_before;
      fit.converged = true;
      break;
    }
    fit.loglik_trace.push_back(ll);
    const double rss = (p_.responses - fitted_).squaredNorm();
    if (ll - previous < p_.options.tolerance || rss <= 1e-26 * total) {
      fit.converged = true;
      break;
    }
    previous = ll;
  }

  fit.beta = beta_;
  fit.sigma2_hat = (p_.responses - fitted_).squaredNorm() / static_cast<double>(p_.units());
  return fit;
}

}  // namespace

Dims TuckerFactors::dims() const {
  return {static_cast<std::size_t>(factors[0].rows()), static_cast<std::size_t>(factors[1].rows()),
          static_cast<std::size_t>(factors[2].rows())};
}

Ranks TuckerFactors::ranks() const { return {core.dims().n1, core.dims().n2, core.dims().n3}; }

TuckerFactors st_hosvd(const Tensor3& t, const Ranks& ranks) {
  require_ranks(t.dims(), ranks);
  TuckerFactors out;
  Tensor3 current = t;
  for (int d = 0; d < 3; ++d) {
    const Matrix u = leading_left_vectors(mode_matricize(current, d + 1), ranks[d]);
    current = mode_multiply(current, d + 1, u.transpose());
    out.factors[d] = u;
  }
  out.core = std::move(current);
  return out;
}

Tensor3 compose(const TuckerFactors& f) {
  Tensor3 t = mode_multiply(f.core, 1, f.factors[0]);
  t = mode_multiply(t, 2, f.factors[1]);
  return mode_multiply(t, 3, f.factors[2]);
}

void TuckerRegressionProblem::validate() const {
  if (responses.size() < 1) fail(ErrorKind::data, "Tucker regression needs at least one unit");
  if (static_cast<std::size_t>(covariates.rows()) != dims.size() ||
      covariates.cols() != responses.size()) {
    fail(ErrorKind::data, "Tucker regression covariates do not match responses and dims");
  }
  require_ranks(dims, ranks);
  if (!(options.tolerance > 0.0) || options.max_iters < 1) {
    fail(ErrorKind::config, "Tucker tolerance must be positive and max_iters at least 1");
  }
}

double gaussian_loglik(double rss, std::size_t n) {
  const double nd = static_cast<double>(n);
  const double sigma2 = std::max(rss / nd, std::numeric_limits<double>::min());
  return -0.5 * nd * (std::log(2.0 * std::numbers::pi) + std::log(sigma2) + 1.0);
}

std::size_t effective_parameters(const Dims& dims, const Ranks& r) {
  return dims.n1 * r[0] + dims.n2 * r[1] + dims.n3 * r[2] + r[0] * r[1] * r[2] -
         (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
}

TuckerFactors warm_start(const TuckerRegressionProblem& p) {
  p.validate();
  const std::size_t n = p.units();
  std::optional<Vector> estimate;
  if (n > p.dims.size()) {
    try {
      estimate = solve_least_squares(p.covariates.transpose(), p.responses, "warm start");
    } catch (const Error&) {
    }
  }
  if (!estimate) estimate = p.covariates * p.responses / static_cast<double>(n);
  return st_hosvd(unvec(*estimate, p.dims), p.ranks);
}

TuckerFactors random_start(const Dims& dims, const Ranks& ranks, std::uint64_t seed) {
  require_ranks(dims, ranks);
  Rng rng = make_rng(seed, kStreamTuckerInit, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  TuckerFactors f;
  for (int d = 0; d < 3; ++d) {
    Matrix u(static_cast<Index>(dims[d + 1]), static_cast<Index>(ranks[d]));
    for (Index j = 0; j < u.cols(); ++j)
      for (Index i = 0; i < u.rows(); ++i) u(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(u);
    f.factors[d] = qr.householderQ() * Matrix::Identity(u.rows(), u.cols());
  }
  f.core = Tensor3(Dims{ranks[0], ranks[1], ranks[2]});
  for (double& v : f.core.values()) v = normal(rng);
  return f;
}

TuckerFit fit_tucker_regression(const TuckerRegressionProblem& p, const TuckerFactors& init) {
  p.validate();
  if (!(init.dims() == p.dims) || init.ranks() != p.ranks) {
    fail(ErrorKind::data, "Tucker initial value does not match problem dims/ranks");
  }
  BlockRelaxation solver(p, init);
  return solver.run();
}

TuckerFit fit_tucker_regression(const TuckerRegressionProblem& p) {
  try {
    return fit_tucker_regression(p, warm_start(p));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::numerical) throw;
  }
  TuckerFit fit = fit_tucker_regression(p, random_start(p.dims, p.ranks, p.options.seed));
  fit.random_start = true;
  return fit;
}

RankSelection select_rank_bic(const TuckerRegressionProblem& p,
                              const std::vector<Ranks>& candidates) {
  if (candidates.empty()) fail(ErrorKind::config, "rank selection needs at least one candidate");
  const double log_n = std::log(static_cast<double>(p.units()));
  RankSelection best;
  bool have_best = false;
  std::size_t best_params = 0;
  for (const Ranks& ranks : candidates) {
    RankCandidate c;
    c.ranks = ranks;
    TuckerRegressionProblem sub = p;
    sub.ranks = ranks;
    try {
      TuckerFit fit = fit_tucker_regression(sub);
      c.parameters = effective_parameters(p.dims, ranks);
      c.bic = -2.0 * fit.loglik() + log_n * static_cast<double>(c.parameters);
      c.ok = true;
      const bool better = !have_best || c.bic < best.bic ||
                          (c.bic == best.bic && c.parameters < best_params);
      if (better) {
        best.ranks = ranks;
        best.fit = std::move(fit);
        best.bic = c.bic;
        best_params = c.parameters;
        have_best = true;
      }
    } catch (const Error& e) {
      c.error = e.what();
    }
    best.candidates.push_back(std::move(c));
  }
  if (!have_best) {
    fail(ErrorKind::numerical, "all Tucker rank candidates failed: " + best.candidates.front().error);
  }
  return best;
}

std::vector<Ranks> simulation_rank_set() { return {{1, 1, 1}, {1, 2, 1}, {2, 2, 1}, {2, 2, 2}}; }

std::vector<Ranks> extended_rank_set() {
  return {{1, 1, 1}, {1, 2, 1}, {2, 2, 1}, {2, 2, 2}, {2, 3, 2}, {2, 3, 3}, {3, 3, 3}};
}

}  // namespace icma
