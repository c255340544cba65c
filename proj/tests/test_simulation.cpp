#include <cmath>

#include "doctest.h"

#include "icma/error.hpp"
#include "icma/simulation.hpp"

using namespace icma;

namespace {

std::size_t nonzero(const Tensor3& t) {
  std::size_t c = 0;
  for (double v : t.values()) c += v != 0.0;
  return c;
}

RegionStudySpec small_region_spec() {
  RegionStudySpec s;
  s.dims = {16, 16, 16};
  s.n = 40;
  s.region_origin = {4, 4, 4};
  s.pooled = {{8, 8, 8}};
  return s;
}

}  // namespace

TEST_CASE("phantom geometry") {
  const Phantom ph = phantom_parameters({8, 8, 8});
  CHECK(nonzero(hadamard(ph.alpha, ph.beta)) == 12);
  CHECK(nonzero(ph.beta) == 16);
  CHECK(ph.psi == ph.alpha);
  // Every slice along mode 3 carries the same cross-section.
  for (std::size_t p3 = 1; p3 < 8; ++p3)
    for (std::size_t p2 = 0; p2 < 8; ++p2)
      for (std::size_t p1 = 0; p1 < 8; ++p1) CHECK(ph.alpha(p1, p2, p3) == ph.alpha(p1, p2, 0));
  CHECK(ph.alpha(3, 3, 0) == kPhantomCore);
  CHECK(ph.alpha(0, 0, 0) == 0.0);
  bool has_rim = false;
  for (double v : ph.alpha.values()) has_rim |= v == kPhantomRim;
  CHECK(has_rim);
  double positive = 0.0, negative = 0.0;
  for (double v : ph.beta.values()) (v > 0 ? positive : negative) += v;
  CHECK(positive == 8.0);
  CHECK(negative == -8.0);
  CHECK_THROWS_AS(phantom_parameters({4, 8, 8}), Error);
}

TEST_CASE("scenario nulls") {
  ScenarioSpec s;
  const Phantom ph = phantom_parameters(s.dims);
  const bool alpha_on[] = {false, true, false, true, true};
  const bool beta_on[] = {false, false, true, true, true};
  const bool gamma_on[] = {true, true, false, false, true};
  for (int k = 1; k <= 5; ++k) {
    s.scenario = k;
    const ScenarioTruth t = scenario_truth(s);
    CHECK((t.alpha == ph.alpha) == alpha_on[k - 1]);
    CHECK((nonzero(t.alpha) == 0) == !alpha_on[k - 1]);
    CHECK((t.beta == ph.beta) == beta_on[k - 1]);
    CHECK((nonzero(t.beta) == 0) == !beta_on[k - 1]);
    CHECK(t.gamma == (gamma_on[k - 1] ? 10.0 : 0.0));
    CHECK(t.s == 10.0);
    CHECK(t.psi == ph.psi);
  }
  s.scenario = 6;
  CHECK_THROWS_AS(scenario_truth(s), Error);
}

TEST_CASE("generator distributions") {
  ScenarioSpec s;
  s.scenario = 1;
  s.n = 4000;
  const Dataset d = generate(s, 0);
  d.validate();
  // E[X] = integral of the logistic over a symmetric interval = 0.5.
  CHECK(d.treatment.mean() == doctest::Approx(0.5).epsilon(0.06));
  CHECK(d.covariates.minCoeff() >= 0.0);
  CHECK(d.covariates.maxCoeff() <= 2.0);
  CHECK(d.covariates.mean() == doctest::Approx(1.0).epsilon(0.03));

  // Scenario 1: M = Z psi + E, Y = 10 X + 10 Z + e.
  const ScenarioTruth t = scenario_truth(s);
  const Matrix noise = d.mediators - t.psi.as_vector() * d.covariates.col(0).transpose();
  const double mediator_sd = std::sqrt(noise.squaredNorm() / static_cast<double>(noise.size()));
  CHECK(mediator_sd == doctest::Approx(0.3).epsilon(0.01));
  const Vector e = d.outcome - 10.0 * d.treatment - 10.0 * d.covariates.col(0);
  CHECK(std::sqrt(e.squaredNorm() / 4000.0) == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("generator is reproducible per replicate") {
  ScenarioSpec s;
  s.scenario = 5;
  s.n = 30;
  const Dataset a = generate(s, 3);
  const Dataset b = generate(s, 3);
  const Dataset c = generate(s, 4);
  CHECK(a.mediators == b.mediators);
  CHECK(a.outcome == b.outcome);
  CHECK(a.mediators != c.mediators);
  s.seed += 1;
  CHECK(generate(s, 3).outcome != a.outcome);
}

TEST_CASE("small replication study") {
  ScenarioSpec s;
  s.scenario = 5;
  s.n = 60;
  s.replications = 3;
  s.bootstrap = 10;
  const ReplicationSummary r = run_study(s);
  CHECK(r.records.size() == 3);
  std::size_t ranked = 0;
  for (const auto& [ranks, count] : r.rank_counts) ranked += count;
  CHECK(ranked + r.failed == 3);
  for (double v : r.proportion_adjusted.values()) CHECK((v >= 0.0 && v <= 1.0));
  for (std::size_t k = 0; k < r.dims.size(); ++k) {
    CHECK(r.proportion_adjusted.values()[k] <= r.proportion_raw.values()[k]);
  }
  CHECK(nonzero(r.true_alpha_beta) == 12);
  CHECK(r.gamma_interval_lower < r.gamma_mean);
  CHECK(r.gamma_interval_upper > r.gamma_mean);

  s.replications = 0;
  const ReplicationSummary empty = run_study(s);
  CHECK(empty.records.empty());
  CHECK(empty.failed == 0);
  CHECK(nonzero(empty.proportion_adjusted) == 0);
}

TEST_CASE("region study data") {
  RegionStudySpec s = small_region_spec();
  const Dataset d = generate_region_study(s);
  d.validate();
  const Cube region = planted_region(s);
  CHECK(region == Cube{{4, 4, 4}, {12, 12, 12}});

  s.signal = false;
  const Dataset null = generate_region_study(s);
  CHECK(null.outcome.size() == d.outcome.size());
  CHECK(null.treatment == d.treatment);
  // Only the region loci differ, by X alpha.
  const Matrix diff = d.mediators - null.mediators;
  for (std::size_t p3 = 0; p3 < 16; ++p3)
    for (std::size_t p2 = 0; p2 < 16; ++p2)
      for (std::size_t p1 = 0; p1 < 16; ++p1) {
        const bool in_block = p1 >= 4 && p1 < 12 && p2 >= 4 && p2 < 12 && p3 >= 4 && p3 < 12;
        const auto k = static_cast<Eigen::Index>(Tensor3(s.dims).offset(p1, p2, p3));
        const Vector expected = in_block ? Vector(d.treatment) : Vector::Zero(d.treatment.size());
        CHECK((diff.row(k).transpose() - expected).cwiseAbs().maxCoeff() < 1e-12);
      }

  // Outside the region the mediator carries no noise: M = Z psi exactly, so the
  // ratio M / Z is the same for every unit.
  const auto k = static_cast<Eigen::Index>(Tensor3(s.dims).offset(0, 0, 0));
  const double ratio = d.mediators(k, 0) / d.covariates(0, 0);
  for (Eigen::Index i = 1; i < d.mediators.cols(); ++i) {
    CHECK(d.mediators(k, i) == doctest::Approx(ratio * d.covariates(i, 0)).epsilon(1e-12));
  }

  RegionStudySpec bad = small_region_spec();
  bad.region_origin = {9, 4, 4};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = small_region_spec();
  bad.pooled = {{5, 8, 8}};
  CHECK_THROWS_AS(bad.validate(), Error);
}
