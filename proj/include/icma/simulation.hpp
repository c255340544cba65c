#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "icma/inference.hpp"
#include "icma/lisem.hpp"
#include "icma/pooling.hpp"

namespace icma {

// Fixture parameter images for the five-scenario study.
//
// alpha and psi share one image: an elliptical cylinder along mode 3, centered
// in the (p1, p2) plane with semi-axes 2 (mode 1) and 3 (mode 2) voxels. Loci
// with normalized radius^2 <= 0.35 take kPhantomCore, the rest of the cylinder
// kPhantomRim. beta is two disjoint 2x2x2 cubes valued +1 and -1; the first
// cube sits inside the cylinder, the second straddles its edge.
inline constexpr double kPhantomCore = 1.0;
inline constexpr double kPhantomRim = 0.5;
inline constexpr double kPhantomCubePositive = 1.0;
inline constexpr double kPhantomCubeNegative = -1.0;

struct Phantom {
  Tensor3 alpha;
  Tensor3 psi;
  Tensor3 beta;
};

Phantom phantom_parameters(Dims dims);

struct ScenarioSpec {
  int scenario = 1;
  std::size_t n = 100;
  Dims dims{8, 8, 8};
  std::size_t replications = 100;
  std::size_t bootstrap = 200;
  double q = 0.05;
  std::uint64_t seed = 2023;
  double gamma = 10.0;
  double s = 10.0;
  double mediator_noise_sd = 0.3;
  double outcome_noise_sd = 0.1;
  bool include_intercept = false;
  std::vector<Ranks> rank_candidates = simulation_rank_set();
  SignCoupling coupling = SignCoupling::independent;
  unsigned workers = 0;

  void validate() const;
};

// Parameters actually used by a scenario (nulls applied).
struct ScenarioTruth {
  Tensor3 alpha;
  Tensor3 psi;
  Tensor3 beta;
  double gamma = 0.0;
  double s = 0.0;

  double indirect() const { return inner(alpha, beta); }
  double total() const { return gamma + indirect(); }
};

ScenarioTruth scenario_truth(const ScenarioSpec& spec);

// Z ~ U(0,2), logit P(X = 1) = 0.5 - 0.5 Z, Gaussian mediator and outcome
// noise, M and Y assembled per the scenario.
Dataset generate(const ScenarioSpec& spec, std::size_t replicate);

struct ReplicateRecord {
  std::size_t replicate = 0;
  bool ok = false;
  double gamma = 0.0;
  Effect direct;
  Effect total;
  Effect indirect;
  std::size_t significant = 0;
  Ranks ranks{};
};

struct ReplicationSummary {
  Dims dims;
  std::size_t replications = 0;
  std::size_t failed = 0;
  Tensor3 proportion_adjusted;  // fraction of replicates with BH-adjusted p < q
  Tensor3 proportion_raw;       // fraction with raw MaxP p < q
  Tensor3 true_alpha_beta;
  double gamma_mean = 0.0;
  double gamma_sd = 0.0;
  double tau_mean = 0.0;
  double tau_sd = 0.0;
  double delta_mean = 0.0;
  double delta_sd = 0.0;
  double gamma_interval_lower = 0.0;  // mean -/+ z_{0.975} sd across replicates
  double gamma_interval_upper = 0.0;
  double direct_halfwidth_mean = 0.0;  // mean bootstrap CI half-width for gamma
  std::size_t direct_covered = 0;
  std::size_t total_covered = 0;
  std::size_t indirect_covered = 0;
  std::map<Ranks, std::size_t> rank_counts;
  std::vector<ReplicateRecord> records;
};

ReplicationSummary run_study(const ScenarioSpec& spec);

// Large-image study: alpha, beta and the mediator noise are confined to one
// cube-shaped region; elsewhere the mediator is Z psi exactly.
struct RegionStudySpec {
  Dims dims{32, 48, 40};
  std::size_t n = 100;
  std::array<std::size_t, 3> region_origin{8, 16, 16};  // 0-based
  std::size_t region_side = 8;
  double alpha_value = 1.0;
  double beta_value = 1.0;
  bool signal = true;  // false: alpha = 0
  double gamma = 10.0;
  double s = 10.0;
  double mediator_noise_sd = 0.3;
  double outcome_noise_sd = 0.1;
  // Pooling cubes of 16x16x8, 8x16x8 and 8x8x8 source voxels, aligned so that no cube splits the planted region.
  std::vector<Dims> pooled{{2, 3, 5}, {4, 3, 5}, {4, 6, 5}};
  std::vector<PoolMethod> methods{PoolMethod::max, PoolMethod::average};
  std::size_t bootstrap = 100;
  double q = 0.05;
  double screen_p = 0.2;
  double region_fraction = 0.05;
  std::uint64_t seed = 2023;
  std::vector<Ranks> rank_candidates = simulation_rank_set();
  SignCoupling coupling = SignCoupling::independent;
  unsigned workers = 0;

  void validate() const;
};

Dataset generate_region_study(const RegionStudySpec& spec);

// 0-based bounds of the planted region, which is also supp(alpha o beta).
Cube planted_region(const RegionStudySpec& spec);

struct RegionStudyRun {
  PoolingSpec pooling;
  RegionSelection selection;
  bool covers_truth = false;      // passing regions jointly cover the planted region
  bool no_false_regions = true;   // every passing region overlaps the planted region
};

struct RegionStudySummary {
  std::vector<RegionStudyRun> runs;
  bool methods_agree = true;  // identical passing regions across methods at matched dims
  bool success() const;
};

RegionStudySummary run_region_study(const RegionStudySpec& spec);

}  // namespace icma
