#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"

#include "icma/error.hpp"
#include "icma/inference.hpp"
#include "icma/simulation.hpp"

using namespace icma;

namespace {

// Step-up by definition: largest k with p_(k) <= k q / m; reject the k smallest.
std::vector<bool> step_up(const std::vector<double>& p, double q) {
  const std::size_t m = p.size();
  std::vector<double> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  double cut = -1.0;
  for (std::size_t k = m; k >= 1; --k) {
    if (sorted[k - 1] <= static_cast<double>(k) * q / static_cast<double>(m)) {
      cut = sorted[k - 1];
      break;
    }
  }
  std::vector<bool> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = p[i] <= cut;
  return out;
}

ScenarioSpec small_spec(int scenario) {
  ScenarioSpec s;
  s.scenario = scenario;
  s.n = 60;
  s.dims = {8, 8, 8};
  s.bootstrap = 20;
  s.seed = 77;
  return s;
}

}  // namespace

TEST_CASE("BH adjustment on a hand-worked example") {
  const std::vector<double> p{0.01, 0.02, 0.03, 0.04};
  const BhResult r = bh_adjust(p, 0.05);
  for (double a : r.adjusted) CHECK(a == doctest::Approx(0.04).epsilon(1e-15));
  for (bool s : r.significant) CHECK(s);

  const std::vector<double> ones(5, 1.0);
  const BhResult all = bh_adjust(ones, 0.05);
  for (double a : all.adjusted) CHECK(a == 1.0);
  for (bool s : all.significant) CHECK_FALSE(s);

  const std::vector<double> single{0.03};
  CHECK(bh_adjust(single, 0.05).adjusted[0] == 0.03);
  CHECK(bh_adjust(single, 0.05).significant[0]);

  const std::vector<double> bad{0.5, 1.5};
  CHECK_THROWS_AS(bh_adjust(bad, 0.05), Error);
  CHECK(bh_adjust(std::vector<double>{}, 0.05).adjusted.empty());
}

TEST_CASE("BH agrees with the step-up rule and is monotone") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t m = 1 + rep % 40;
    std::vector<double> p(m);
    for (double& v : p) v = std::pow(u(rng), 3.0);  // skewed toward 0
    const BhResult r = bh_adjust(p, 0.1);
    const std::vector<bool> oracle = step_up(p, 0.1);
    for (std::size_t i = 0; i < m; ++i) {
      // significant uses strict '<', the oracle '<='; ties at exactly q have measure zero here.
      CHECK(r.significant[i] == oracle[i]);
      CHECK(r.adjusted[i] >= p[i]);
      CHECK(r.adjusted[i] <= 1.0);
      for (std::size_t j = 0; j < m; ++j) {
        if (p[i] <= p[j]) CHECK(r.adjusted[i] <= r.adjusted[j]);
      }
    }
  }
}

TEST_CASE("normal distribution helpers") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  for (double p : {0.01, 0.2, 0.5, 0.77, 0.999}) CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  CHECK_THROWS_AS(normal_quantile(0.0), Error);
  CHECK_THROWS_AS(normal_quantile(1.0), Error);
  CHECK(two_sided_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(two_sided_p(-2.0) == two_sided_p(2.0));
}

TEST_CASE("MaxP takes the larger of the two marginal p-values") {
  // z_alpha = 3, z_beta = 1: p = max(2 - 2 Phi(3), 2 - 2 Phi(1)) = 0.3173.
  const double pa = marginal_p(3.0, 1.0, 0.0);
  const double pb = marginal_p(1.0, 1.0, 0.0);
  const double oracle_b = 1.0 - std::erf(1.0 / std::sqrt(2.0));
  CHECK(pb == doctest::Approx(oracle_b).epsilon(1e-14));
  CHECK(std::max(pa, pb) == doctest::Approx(0.3173).epsilon(1e-4));

  LisemFit fit;
  fit.alpha_hat = Tensor3(Dims{2, 1, 1}, std::vector<double>{3.0, 0.0});
  fit.beta_tensor = Tensor3(Dims{2, 1, 1}, std::vector<double>{1.0, 2.0});
  BootstrapEnsemble ens;
  ens.dims = {2, 1, 1};
  // Draw sd 1 in row 0; row 1 of alpha constant (sd 0) and estimate 0.
  ens.alpha_draws = Matrix(2, 2);
  ens.alpha_draws << 3.0 - std::sqrt(0.5), 3.0 + std::sqrt(0.5), 0.0, 0.0;
  ens.beta_draws = Matrix(2, 2);
  ens.beta_draws << 1.0 - std::sqrt(0.5), 1.0 + std::sqrt(0.5), 2.0 - std::sqrt(0.5), 2.0 + std::sqrt(0.5);
  const MaxPResult r = maxp_pvalues(fit, ens);
  CHECK(r.p_alpha.values()[0] == doctest::Approx(2.0 - 2.0 * normal_cdf(3.0)).epsilon(1e-10));
  CHECK(r.p.values()[0] == doctest::Approx(oracle_b).epsilon(1e-10));
  CHECK(r.p_alpha.values()[1] == 1.0);  // zero sd, zero estimate
  CHECK(r.p.values()[1] == 1.0);
}

TEST_CASE("zero standard deviation rules") {
  CHECK(marginal_p(0.0, 0.0, 0.0) == 1.0);
  CHECK(marginal_p(0.5, 0.0, 0.0) == 0.0);
  CHECK(marginal_p(1e-14, 1e-15, 1e-12) == 1.0);
  CHECK(marginal_p(2.0, 1e-15, 1e-12) == 0.0);
  CHECK(sample_sd(Vector::Constant(5, 2.0)) == 0.0);
  CHECK(sample_sd(Vector::Constant(1, 2.0)) == 0.0);
  Vector v(3);
  v << 1.0, 2.0, 3.0;
  CHECK(sample_sd(v) == doctest::Approx(1.0));
  CHECK(row_sd(Matrix::Zero(4, 10)).isZero(0.0));
}

TEST_CASE("wild signs are Rademacher and reproducible") {
  const auto a = wild_signs(5, 3, 1000);
  CHECK(a == wild_signs(5, 3, 1000));
  CHECK(a != wild_signs(5, 4, 1000));
  CHECK(a != wild_signs(5, 3, 1000, 1));
  double sum = 0.0;
  for (double v : a) {
    CHECK((v == 1.0 || v == -1.0));
    sum += v;
  }
  CHECK(std::abs(sum) < 150.0);
}

TEST_CASE("bootstrap sample flips residuals around the fit") {
  const ScenarioSpec spec = small_spec(5);
  const Dataset d = generate(spec, 0);
  LisemConfig cfg;
  cfg.include_intercept = false;
  const LisemFit fit = fit_lisem(d, cfg);
  const std::size_t n = d.units();
  const std::vector<double> ones(n, 1.0);
  const Dataset same = bootstrap_sample(d, fit, ones, ones);
  CHECK((same.mediators - d.mediators).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((same.outcome - d.outcome).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(same.treatment == d.treatment);
  CHECK(same.covariates == d.covariates);

  const std::vector<double> minus(n, -1.0);
  const Dataset flipped = bootstrap_sample(d, fit, minus, ones);
  CHECK((flipped.mediators + same.mediators - 2.0 * (d.mediators - fit.eps_tensor_resid)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_THROWS_AS(bootstrap_sample(d, fit, std::vector<double>(n - 1, 1.0), ones), Error);
}

TEST_CASE("bootstrap is deterministic across worker counts") {
  const ScenarioSpec spec = small_spec(5);
  const Dataset d = generate(spec, 1);
  AnalysisOptions opt;
  opt.lisem.include_intercept = false;
  opt.bootstrap.replicates = 12;
  opt.bootstrap.seed = 99;
  opt.bootstrap.workers = 1;
  const MediationAnalysis a = analyze(d, opt);
  opt.bootstrap.workers = 3;
  const MediationAnalysis b = analyze(d, opt);
  CHECK(a.ensemble.gamma_draws == b.ensemble.gamma_draws);
  CHECK(a.ensemble.beta_draws == b.ensemble.beta_draws);
  CHECK(a.report.p_adjusted == b.report.p_adjusted);
  CHECK(a.report.direct.sd == b.report.direct.sd);
  opt.bootstrap.seed = 100;
  const MediationAnalysis c = analyze(d, opt);
  CHECK(c.ensemble.gamma_draws != a.ensemble.gamma_draws);

  opt.bootstrap.replicates = 1;
  CHECK_THROWS_AS(analyze(d, opt), Error);
}

TEST_CASE("effects: intervals, nesting and reported ranks") {
  const ScenarioSpec spec = small_spec(5);
  const Dataset d = generate(spec, 2);
  AnalysisOptions opt;
  opt.lisem.include_intercept = false;
  opt.bootstrap.replicates = 20;
  opt.bootstrap.seed = 3;
  const MediationAnalysis a = analyze(d, opt);
  const MediationReport& r = a.report;
  const double z = normal_quantile(0.975);
  CHECK(r.direct.lower == doctest::Approx(r.direct.estimate - z * r.direct.sd));
  CHECK(r.direct.upper == doctest::Approx(r.direct.estimate + z * r.direct.sd));
  CHECK(r.direct.sd == doctest::Approx(sample_sd(a.ensemble.gamma_draws)));
  CHECK(r.indirect.estimate == doctest::Approx(inner(a.fit.alpha_hat, a.fit.beta_tensor)));
  CHECK(r.total.estimate == a.fit.tau_hat);
  CHECK(r.ranks == a.fit.ranks);
  CHECK(r.replicates + r.failed == 20);
  for (std::size_t k = 0; k < r.dims.size(); ++k) {
    CHECK(r.p_adjusted.values()[k] >= r.p_raw.values()[k]);
    CHECK(r.significant[k] == (r.p_adjusted.values()[k] < r.q));
  }
  CHECK_THROWS_AS(effects(a.fit, a.ensemble, 0.05, 1.5), Error);
  CHECK(parse_sign_coupling("shared") == SignCoupling::shared);
  CHECK(std::string(to_string(SignCoupling::independent)) == "independent");
  CHECK_THROWS_AS(parse_sign_coupling("both"), Error);
}
