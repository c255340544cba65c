#include "icma/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "icma/error.hpp"
#include "icma/parallel.hpp"
#include "icma/random.hpp"

namespace icma {

namespace {

using Index = Eigen::Index;

inline constexpr std::uint64_t kStreamReplicateBootstrap = 0xB007;
inline constexpr std::uint64_t kStreamRegionPsi = 0x9517;

void fill_box(Tensor3& t, const Cube& box, double value) {
  for (std::size_t p3 = box.lower[2]; p3 < box.upper[2]; ++p3)
    for (std::size_t p2 = box.lower[1]; p2 < box.upper[1]; ++p2)
      for (std::size_t p1 = box.lower[0]; p1 < box.upper[0]; ++p1) t(p1, p2, p3) = value;
}

Cube box(std::array<std::size_t, 3> origin, std::size_t side) {
  return {origin, {origin[0] + side, origin[1] + side, origin[2] + side}};
}

bool in_box(const Cube& b, std::size_t p1, std::size_t p2, std::size_t p3) {
  return p1 >= b.lower[0] && p1 < b.upper[0] && p2 >= b.lower[1] && p2 < b.upper[1] &&
         p3 >= b.lower[2] && p3 < b.upper[2];
}

double treatment_probability(double z) { return 1.0 / (1.0 + std::exp(-(0.5 - 0.5 * z))); }

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

bool covers(const Effect& e, double truth) { return e.lower <= truth && truth <= e.upper; }

}  // namespace

Phantom phantom_parameters(Dims dims) {
  if (dims.n1 < 8 || dims.n2 < 8 || dims.n3 < 8) {
    fail(ErrorKind::config, "phantom parameters need dims of at least 8x8x8");
  }
  Phantom ph{Tensor3(dims), Tensor3(dims), Tensor3(dims)};
  const double c1 = (static_cast<double>(dims.n1) - 1.0) / 2.0;
  const double c2 = (static_cast<double>(dims.n2) - 1.0) / 2.0;
  for (std::size_t p3 = 0; p3 < dims.n3; ++p3) {
    for (std::size_t p2 = 0; p2 < dims.n2; ++p2) {
      for (std::size_t p1 = 0; p1 < dims.n1; ++p1) {
        const double u = (static_cast<double>(p1) - c1) / 2.0;
        const double v = (static_cast<double>(p2) - c2) / 3.0;
        const double r2 = u * u + v * v;
        if (r2 <= 1.0) ph.alpha(p1, p2, p3) = r2 <= 0.35 ? kPhantomCore : kPhantomRim;
      }
    }
  }
  ph.psi = ph.alpha;

  const std::size_t m1 = dims.n1 / 2;
  const std::size_t m2 = dims.n2 / 2;
  const std::size_t m3 = dims.n3 / 2;
  fill_box(ph.beta, Cube{{m1 - 2, m2 - 2, m3 - 3}, {m1, m2, m3 - 1}}, kPhantomCubePositive);
  fill_box(ph.beta, Cube{{m1 + 1, m2, m3 + 1}, {m1 + 3, m2 + 2, m3 + 3}}, kPhantomCubeNegative);
  return ph;
}

void ScenarioSpec::validate() const {
  if (scenario < 1 || scenario > 5) fail(ErrorKind::config, "scenario must be 1-5");
  if (n < 4) fail(ErrorKind::config, "scenario sample size must be at least 4");
  if (bootstrap < 2) fail(ErrorKind::config, "bootstrap count must be at least 2");
  if (!(q > 0.0 && q < 1.0)) fail(ErrorKind::config, "q must be in (0, 1)");
}

ScenarioTruth scenario_truth(const ScenarioSpec& spec) {
  spec.validate();
  Phantom ph = phantom_parameters(spec.dims);
  ScenarioTruth t;
  t.psi = ph.psi;
  t.s = spec.s;
  const bool alpha_on = spec.scenario == 2 || spec.scenario >= 4;
  const bool beta_on = spec.scenario >= 3;
  const bool gamma_on = spec.scenario == 1 || spec.scenario == 2 || spec.scenario == 5;
  t.alpha = alpha_on ? ph.alpha : Tensor3(spec.dims);
  t.beta = beta_on ? ph.beta : Tensor3(spec.dims);
  t.gamma = gamma_on ? spec.gamma : 0.0;
  return t;
}

Dataset generate(const ScenarioSpec& spec, std::size_t replicate) {
  const ScenarioTruth truth = scenario_truth(spec);
  Rng rng = make_rng(spec.seed, kStreamGenerate, replicate);
  std::uniform_real_distribution<double> uniform(0.0, 2.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto n = static_cast<Index>(spec.n);
  const auto big_n = static_cast<Index>(spec.dims.size());
  Dataset d;
  d.dims = spec.dims;
  d.covariates.resize(n, 1);
  d.treatment.resize(n);
  d.mediators.resize(big_n, n);
  d.outcome.resize(n);

  const auto alpha = truth.alpha.as_vector();
  const auto psi = truth.psi.as_vector();
  const auto beta = truth.beta.as_vector();
  for (Index i = 0; i < n; ++i) {
    const double z = uniform(rng);
    std::bernoulli_distribution coin(treatment_probability(z));
    const double x = coin(rng) ? 1.0 : 0.0;
    auto m = d.mediators.col(i);
    for (Index k = 0; k < big_n; ++k) m(k) = spec.mediator_noise_sd * normal(rng);
    m += x * alpha + z * psi;
    const double e = spec.outcome_noise_sd * normal(rng);
    d.covariates(i, 0) = z;
    d.treatment(i) = x;
    d.outcome(i) = x * truth.gamma + z * truth.s + m.dot(beta) + e;
  }
  return d;
}

ReplicationSummary run_study(const ScenarioSpec& spec) {
  spec.validate();
  const ScenarioTruth truth = scenario_truth(spec);
  ReplicationSummary out;
  out.dims = spec.dims;
  out.replications = spec.replications;
  out.proportion_adjusted = Tensor3(spec.dims);
  out.proportion_raw = Tensor3(spec.dims);
  out.true_alpha_beta = hadamard(truth.alpha, truth.beta);

  AnalysisOptions options;
  options.lisem.include_intercept = spec.include_intercept;
  options.lisem.rank_candidates = spec.rank_candidates;
  options.bootstrap.replicates = spec.bootstrap;
  options.bootstrap.workers = 1;
  options.bootstrap.coupling = spec.coupling;
  options.q = spec.q;

  struct Outcome {
    ReplicateRecord record;
    std::vector<bool> adjusted;
    std::vector<bool> raw;
  };
  std::vector<Outcome> results(spec.replications);
  parallel_for(spec.replications, spec.workers, [&](std::size_t r) {
    Outcome& o = results[r];
    o.record.replicate = r;
    AnalysisOptions local = options;
    local.bootstrap.seed = derive_seed(spec.seed, kStreamReplicateBootstrap, r);
    try {
      const Dataset d = generate(spec, r);
      const MediationAnalysis a = analyze(d, local);
      o.record.ok = true;
      o.record.gamma = a.fit.gamma_hat;
      o.record.direct = a.report.direct;
      o.record.total = a.report.total;
      o.record.indirect = a.report.indirect;
      o.record.significant = a.report.significant_count();
      o.record.ranks = a.fit.ranks;
      o.adjusted = a.report.significant;
      o.raw.resize(spec.dims.size());
      for (std::size_t k = 0; k < spec.dims.size(); ++k) o.raw[k] = a.report.p_raw.values()[k] < spec.q;
    } catch (const Error&) {
      o.record.ok = false;
    }
  });

  std::vector<double> gammas, taus, deltas, halfwidths;
  for (const Outcome& o : results) {
    out.records.push_back(o.record);
    if (!o.record.ok) {
      ++out.failed;
      continue;
    }
    for (std::size_t k = 0; k < spec.dims.size(); ++k) {
      if (o.adjusted[k]) out.proportion_adjusted.values()[k] += 1.0;
      if (o.raw[k]) out.proportion_raw.values()[k] += 1.0;
    }
    gammas.push_back(o.record.direct.estimate);
    taus.push_back(o.record.total.estimate);
    deltas.push_back(o.record.indirect.estimate);
    halfwidths.push_back(0.5 * (o.record.direct.upper - o.record.direct.lower));
    if (covers(o.record.direct, truth.gamma)) ++out.direct_covered;
    if (covers(o.record.total, truth.total())) ++out.total_covered;
    if (covers(o.record.indirect, truth.indirect())) ++out.indirect_covered;
    ++out.rank_counts[o.record.ranks];
  }
  const std::size_t ok = spec.replications - out.failed;
  if (ok > 0) {
    out.proportion_adjusted *= 1.0 / static_cast<double>(ok);
    out.proportion_raw *= 1.0 / static_cast<double>(ok);
  }
  out.gamma_mean = mean(gammas);
  out.gamma_sd = sd(gammas);
  out.tau_mean = mean(taus);
  out.tau_sd = sd(taus);
  out.delta_mean = mean(deltas);
  out.delta_sd = sd(deltas);
  out.direct_halfwidth_mean = mean(halfwidths);
  const double z = normal_quantile(0.975);
  out.gamma_interval_lower = out.gamma_mean - z * out.gamma_sd;
  out.gamma_interval_upper = out.gamma_mean + z * out.gamma_sd;
  return out;
}

void RegionStudySpec::validate() const {
  if (region_side == 0) fail(ErrorKind::config, "region side must be positive");
  const Cube region = box(region_origin, region_side);
  for (int a = 0; a < 3; ++a) {
    if (region.upper[a] > dims[a + 1]) fail(ErrorKind::config, "planted region exceeds image dims");
  }
  for (const Dims& p : pooled) PoolingSpec{PoolMethod::average, p, dims}.validate();
}

Cube planted_region(const RegionStudySpec& spec) { return box(spec.region_origin, spec.region_side); }

Dataset generate_region_study(const RegionStudySpec& spec) {
  spec.validate();
  const Cube region = planted_region(spec);
  const auto n = static_cast<Index>(spec.n);
  const auto big_n = static_cast<Index>(spec.dims.size());

  // psi is random with standard-normal entries everywhere.
  Rng psi_rng = make_rng(spec.seed, kStreamRegionPsi, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector psi(big_n);
  for (Index k = 0; k < big_n; ++k) psi(k) = normal(psi_rng);

  Tensor3 alpha(spec.dims);
  Tensor3 beta(spec.dims);
  if (spec.signal) fill_box(alpha, region, spec.alpha_value);
  fill_box(beta, region, spec.beta_value);

  std::vector<Index> region_loci;
  for (std::size_t p3 = 0; p3 < spec.dims.n3; ++p3)
    for (std::size_t p2 = 0; p2 < spec.dims.n2; ++p2)
      for (std::size_t p1 = 0; p1 < spec.dims.n1; ++p1)
        if (in_box(region, p1, p2, p3)) region_loci.push_back(static_cast<Index>(alpha.offset(p1, p2, p3)));

  Rng rng = make_rng(spec.seed, kStreamGenerate, 0);
  std::uniform_real_distribution<double> uniform(0.0, 2.0);
  Dataset d;
  d.dims = spec.dims;
  d.covariates.resize(n, 1);
  d.treatment.resize(n);
  d.mediators.resize(big_n, n);
  d.outcome.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double z = uniform(rng);
    std::bernoulli_distribution coin(treatment_probability(z));
    const double x = coin(rng) ? 1.0 : 0.0;
    auto m = d.mediators.col(i);
    m = z * psi + x * alpha.as_vector();
    for (Index k : region_loci) m(k) += spec.mediator_noise_sd * normal(rng);
    const double e = spec.outcome_noise_sd * normal(rng);
    d.covariates(i, 0) = z;
    d.treatment(i) = x;
    d.outcome(i) = x * spec.gamma + z * spec.s + m.dot(beta.as_vector()) + e;
  }
  return d;
}

bool RegionStudySummary::success() const {
  if (!methods_agree) return false;
  for (const auto& r : runs) {
    if (!r.covers_truth || !r.no_false_regions) return false;
  }
  return true;
}

namespace {

// True when the union of `cubes` contains every voxel of `target`.
bool union_covers(const std::vector<Cube>& cubes, const Cube& target) {
  for (std::size_t p3 = target.lower[2]; p3 < target.upper[2]; ++p3)
    for (std::size_t p2 = target.lower[1]; p2 < target.upper[1]; ++p2)
      for (std::size_t p1 = target.lower[0]; p1 < target.upper[0]; ++p1) {
        const bool hit = std::any_of(cubes.begin(), cubes.end(), [&](const Cube& c) { return in_box(c, p1, p2, p3); });
        if (!hit) return false;
      }
  return true;
}

}  // namespace

RegionStudySummary run_region_study(const RegionStudySpec& spec) {
  const Dataset d = generate_region_study(spec);
  const Cube truth = planted_region(spec);
  AnalysisOptions options;
  options.lisem.include_intercept = false;
  options.lisem.rank_candidates = spec.rank_candidates;
  options.bootstrap.replicates = spec.bootstrap;
  options.bootstrap.coupling = spec.coupling;
  options.bootstrap.seed = spec.seed;
  options.bootstrap.workers = spec.workers;
  options.q = spec.q;

  RegionStudySummary summary;
  for (const Dims& pooled : spec.pooled) {
    std::vector<std::vector<Cube>> passing_by_method;
    for (PoolMethod method : spec.methods) {
      RegionStudyRun run;
      run.pooling = PoolingSpec{method, pooled, spec.dims};
      run.selection = select_regions(d, run.pooling, options, spec.screen_p, spec.region_fraction);
      const std::vector<Cube> passing = run.selection.passing();
      for (const Cube& c : passing) {
        if (!c.intersects(truth)) run.no_false_regions = false;
      }
      run.covers_truth = union_covers(passing, truth);
      passing_by_method.push_back(passing);
      summary.runs.push_back(std::move(run));
    }
    for (std::size_t k = 1; k < passing_by_method.size(); ++k) {
      if (passing_by_method[k] != passing_by_method[0]) summary.methods_agree = false;
    }
  }
  return summary;
}

}  // namespace icma
