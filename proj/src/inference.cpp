#include "icma/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "icma/error.hpp"
#include "icma/parallel.hpp"
#include "icma/random.hpp"

namespace icma {

namespace {

using Index = Eigen::Index;

struct Draw {
  Vector alpha;
  Vector beta;
  double gamma = 0.0;
  double tau = 0.0;
  double delta = 0.0;
};

double max_abs(const Tensor3& t) { return t.as_vector().cwiseAbs().maxCoeff(); }

Tensor3 to_tensor(const Vector& v, Dims dims) { return unvec(v, dims); }

Effect make_effect(double estimate, const Vector& draws, double z) {
  Effect e;
  e.estimate = estimate;
  e.sd = sample_sd(draws);
  e.lower = estimate - z * e.sd;
  e.upper = estimate + z * e.sd;
  return e;
}

}  // namespace

const char* to_string(SignCoupling c) { return c == SignCoupling::shared ? "shared" : "independent"; }

SignCoupling parse_sign_coupling(const std::string& name) {
  if (name == "independent") return SignCoupling::independent;
  if (name == "shared") return SignCoupling::shared;
  fail(ErrorKind::config, "unknown sign coupling '" + name + "'");
}

std::vector<double> wild_signs(std::uint64_t seed, std::size_t index, std::size_t n, unsigned channel) {
  Rng rng = make_rng(derive_seed(seed, kStreamBootstrap, channel), kStreamBootstrap, index);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> signs(n);
  for (double& s : signs) s = coin(rng) ? 1.0 : -1.0;
  return signs;
}

Dataset bootstrap_sample(const Dataset& d, const LisemFit& fit, std::span<const double> v_signs,
                         std::span<const double> w_signs) {
  if (v_signs.size() != d.units() || w_signs.size() != d.units()) {
    fail(ErrorKind::data, "bootstrap signs do not match unit count");
  }
  const Index n = static_cast<Index>(d.units());
  const Eigen::Map<const Vector> v(v_signs.data(), n);
  const Eigen::Map<const Vector> w(w_signs.data(), n);

  Dataset out = d;
  // M - eps_hat is the fitted mediator eta_1 + X alpha + sum_j Z_j psi_j.
  out.mediators = d.mediators - fit.eps_tensor_resid + fit.eps_tensor_resid * v.asDiagonal();
  const Vector linear = out.mediators.transpose() * fit.beta_tensor.as_vector();
  out.outcome = Vector::Constant(n, fit.eta2_hat) + fit.gamma_hat * d.treatment + linear +
                w.cwiseProduct(fit.eps_scalar_resid);
  if (d.covariate_count() > 0) out.outcome += d.covariates * fit.s_hat;
  return out;
}

BootstrapEnsemble bootstrap(const Dataset& d, const LisemFit& fit, const LisemConfig& config,
                            const BootstrapOptions& options) {
  if (options.replicates < 2) fail(ErrorKind::config, "bootstrap needs at least 2 replicates");
  LisemConfig refit = config;
  refit.ranks = fit.ranks;
  refit.include_intercept = fit.include_intercept;

  std::vector<std::optional<Draw>> draws(options.replicates);
  parallel_for(options.replicates, options.workers, [&](std::size_t b) {
    const std::vector<double> v = wild_signs(options.seed, b, d.units(), 0);
    const std::vector<double> w =
        options.coupling == SignCoupling::shared ? v : wild_signs(options.seed, b, d.units(), 1);
    const Dataset sample = bootstrap_sample(d, fit, v, w);
    try {
      const LisemFit f = fit_lisem(sample, refit, options.warm_refits ? &fit.beta_hat : nullptr);
      Draw draw;
      draw.alpha = f.alpha_hat.as_vector();
      draw.beta = f.beta_tensor.as_vector();
      draw.gamma = f.gamma_hat;
      draw.tau = f.tau_hat;
      draw.delta = f.indirect_effect();
      draws[b] = std::move(draw);
    } catch (const Error&) {
      // counted below
    }
  });

  BootstrapEnsemble ens;
  ens.dims = d.dims;
  ens.requested = options.replicates;
  ens.seed = options.seed;
  const auto ok = static_cast<std::size_t>(
      std::count_if(draws.begin(), draws.end(), [](const auto& x) { return x.has_value(); }));
  ens.failed = options.replicates - ok;
  if (static_cast<double>(ens.failed) > options.max_failure_fraction * static_cast<double>(options.replicates) ||
      ok < 2) {
    fail(ErrorKind::bootstrap, std::to_string(ens.failed) + " of " +
                                   std::to_string(options.replicates) + " bootstrap refits failed");
  }

  const auto big_n = static_cast<Index>(d.dims.size());
  ens.alpha_draws.resize(big_n, static_cast<Index>(ok));
  ens.beta_draws.resize(big_n, static_cast<Index>(ok));
  ens.gamma_draws.resize(static_cast<Index>(ok));
  ens.tau_draws.resize(static_cast<Index>(ok));
  ens.delta_draws.resize(static_cast<Index>(ok));
  Index k = 0;
  for (const auto& draw : draws) {
    if (!draw) continue;
    ens.alpha_draws.col(k) = draw->alpha;
    ens.beta_draws.col(k) = draw->beta;
    ens.gamma_draws(k) = draw->gamma;
    ens.tau_draws(k) = draw->tau;
    ens.delta_draws(k) = draw->delta;
    ++k;
  }
  return ens;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::config, "normal quantile needs p in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

double sample_sd(const Vector& draws) {
  if (draws.size() < 2) return 0.0;
  const double mean = draws.mean();
  return std::sqrt((draws.array() - mean).square().sum() / static_cast<double>(draws.size() - 1));
}

Vector row_sd(const Matrix& draws) {
  Vector out(draws.rows());
  if (draws.cols() < 2) return Vector::Zero(draws.rows());
  const Vector mean = draws.rowwise().mean();
  const double denom = static_cast<double>(draws.cols() - 1);
  for (Index r = 0; r < draws.rows(); ++r) {
    out(r) = std::sqrt((draws.row(r).array() - mean(r)).square().sum() / denom);
  }
  return out;
}

double marginal_p(double estimate, double sd, double zero_sd) {
  if (sd <= zero_sd) return std::abs(estimate) <= zero_sd ? 1.0 : 0.0;
  return two_sided_p(estimate / sd);
}

MaxPResult maxp_pvalues(const LisemFit& fit, const BootstrapEnsemble& ens) {
  const Dims dims = fit.alpha_hat.dims();
  const Tensor3 sd_alpha = to_tensor(row_sd(ens.alpha_draws), dims);
  const Tensor3 sd_beta = to_tensor(row_sd(ens.beta_draws), dims);
  // Standard deviations this far below the tensor's scale are round-off.
  const double zero_alpha = 1e-10 * std::max(max_abs(fit.alpha_hat), max_abs(sd_alpha));
  const double zero_beta = 1e-10 * std::max(max_abs(fit.beta_tensor), max_abs(sd_beta));

  MaxPResult out{Tensor3(dims), Tensor3(dims), Tensor3(dims)};
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const double pa = marginal_p(fit.alpha_hat.values()[k], sd_alpha.values()[k], zero_alpha);
    const double pb = marginal_p(fit.beta_tensor.values()[k], sd_beta.values()[k], zero_beta);
    out.p_alpha.values()[k] = pa;
    out.p_beta.values()[k] = pb;
    out.p.values()[k] = std::max(pa, pb);
  }
  return out;
}

BhResult bh_adjust(std::span<const double> p, double q) {
  const std::size_t m = p.size();
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorKind::data, "p-value outside [0, 1]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

  BhResult out{std::vector<double>(m), std::vector<bool>(m)};
  double running = 1.0;
  for (std::size_t rank = m; rank >= 1; --rank) {
    const std::size_t idx = order[rank - 1];
    running = std::min(running, std::min(1.0, static_cast<double>(m) * p[idx] / static_cast<double>(rank)));
    // m * p / m can round one ulp below p.
    out.adjusted[idx] = std::max(running, p[idx]);
  }
  for (std::size_t i = 0; i < m; ++i) out.significant[i] = out.adjusted[i] < q;
  return out;
}

std::size_t MediationReport::significant_count() const {
  return static_cast<std::size_t>(std::count(significant.begin(), significant.end(), true));
}

MediationReport effects(const LisemFit& fit, const BootstrapEnsemble& ens, double alpha_level, double q) {
  if (!(alpha_level > 0.0 && alpha_level < 1.0)) fail(ErrorKind::config, "CI level must be in (0, 1)");
  if (!(q > 0.0 && q < 1.0)) fail(ErrorKind::config, "q must be in (0, 1)");
  const Dims dims = fit.alpha_hat.dims();
  const MaxPResult maxp = maxp_pvalues(fit, ens);
  const BhResult bh = bh_adjust(maxp.p.values(), q);

  MediationReport r;
  r.dims = dims;
  r.alpha = fit.alpha_hat;
  r.beta = fit.beta_tensor;
  r.alpha_beta = hadamard(fit.alpha_hat, fit.beta_tensor);
  r.sd_alpha = to_tensor(row_sd(ens.alpha_draws), dims);
  r.sd_beta = to_tensor(row_sd(ens.beta_draws), dims);
  r.p_raw = maxp.p;
  r.p_adjusted = Tensor3(dims, bh.adjusted);
  r.significant = bh.significant;
  r.q = q;
  r.ci_level = 1.0 - alpha_level;

  const double z = normal_quantile(1.0 - alpha_level / 2.0);
  r.total = make_effect(fit.tau_hat, ens.tau_draws, z);
  r.direct = make_effect(fit.gamma_hat, ens.gamma_draws, z);
  r.indirect = make_effect(fit.indirect_effect(), ens.delta_draws, z);
  r.direct_p = marginal_p(r.direct.estimate, r.direct.sd, 0.0);
  r.replicates = ens.size();
  r.failed = ens.failed;
  r.ranks = fit.ranks;
  return r;
}

MediationAnalysis analyze(const Dataset& d, const AnalysisOptions& options) {
  MediationAnalysis out;
  out.fit = fit_lisem(d, options.lisem);
  out.ensemble = bootstrap(d, out.fit, options.lisem, options.bootstrap);
  out.report = effects(out.fit, out.ensemble, options.ci_alpha, options.q);
  return out;
}

}  // namespace icma
