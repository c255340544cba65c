#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "icma/lisem.hpp"

namespace icma {

// How the tensor and scalar residual of a unit are sign-flipped.
//  independent: separate signs v_i (mediator) and w_i (outcome).
//  shared: one sign for both. The outcome-model refit is then invariant to
//    the flip (each row (eps_i, Y_i) changes sign as a whole), so beta draws
//    barely vary; kept for comparison.
enum class SignCoupling { independent, shared };

const char* to_string(SignCoupling c);
SignCoupling parse_sign_coupling(const std::string& name);

struct BootstrapOptions {
  std::size_t replicates = 500;
  SignCoupling coupling = SignCoupling::independent;
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0: hardware concurrency
  double max_failure_fraction = 0.10;
  // Start refits from the point estimate's factors instead of the usual
  // initialization. Faster, but the draws stay too close to beta-hat.
  bool warm_refits = false;
};

// Draws from the successful replicates, in replicate order.
struct BootstrapEnsemble {
  Dims dims;
  std::size_t requested = 0;
  std::size_t failed = 0;
  std::uint64_t seed = 0;
  Matrix alpha_draws;  // N x B
  Matrix beta_draws;   // N x B, composed tensors
  Vector gamma_draws;
  Vector tau_draws;
  Vector delta_draws;  // <alpha, beta> per replicate

  std::size_t size() const { return static_cast<std::size_t>(gamma_draws.size()); }
};

// Random signs in {-1, +1} for replicate `index`; `channel` 0 flips mediator
// residuals, channel 1 outcome residuals.
std::vector<double> wild_signs(std::uint64_t seed, std::size_t index, std::size_t n, unsigned channel = 0);

// One wild-bootstrap sample: v_i multiplies the tensor residual of unit i and
// w_i its scalar residual.
Dataset bootstrap_sample(const Dataset& d, const LisemFit& fit, std::span<const double> v,
                         std::span<const double> w);

// Refits run at the point estimate's Tucker rank.
BootstrapEnsemble bootstrap(const Dataset& d, const LisemFit& fit, const LisemConfig& config,
                            const BootstrapOptions& options);

double normal_cdf(double x);
double normal_quantile(double p);
// 2 - 2 Phi(|z|)
double two_sided_p(double z);

double sample_sd(const Vector& draws);
// Per-row sample standard deviation (denominator B - 1).
Vector row_sd(const Matrix& draws);

struct MaxPResult {
  Tensor3 p_alpha;
  Tensor3 p_beta;
  Tensor3 p;  // elementwise max of the two
};

// Marginal p-value of an estimate given its bootstrap sd. A zero sd yields
// p = 1 for a zero estimate and p = 0 otherwise; sds below `zero_sd` count as zero.
double marginal_p(double estimate, double sd, double zero_sd);

MaxPResult maxp_pvalues(const LisemFit& fit, const BootstrapEnsemble& ens);

struct BhResult {
  std::vector<double> adjusted;
  std::vector<bool> significant;
};

// Benjamini-Hochberg step-up adjustment; significant means adjusted < q.
BhResult bh_adjust(std::span<const double> p, double q);

struct Effect {
  double estimate = 0.0;
  double sd = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct MediationReport {
  Dims dims;
  Tensor3 alpha;
  Tensor3 beta;
  Tensor3 alpha_beta;
  Tensor3 sd_alpha;
  Tensor3 sd_beta;
  Tensor3 p_raw;
  Tensor3 p_adjusted;
  std::vector<bool> significant;  // vec order
  double q = 0.05;
  double ci_level = 0.95;
  Effect total;     // tau
  Effect direct;    // gamma(x)
  Effect indirect;  // delta(x) = <alpha, beta>
  double direct_p = 1.0;
  std::size_t replicates = 0;
  std::size_t failed = 0;
  Ranks ranks{};

  std::size_t significant_count() const;
};

// Normal-approximation intervals at confidence 1 - alpha_level; per-locus
// MaxP p-values adjusted by BH at level q.
MediationReport effects(const LisemFit& fit, const BootstrapEnsemble& ens, double alpha_level = 0.05,
                        double q = 0.05);

struct AnalysisOptions {
  LisemConfig lisem;
  BootstrapOptions bootstrap;
  double q = 0.05;
  double ci_alpha = 0.05;
};

struct MediationAnalysis {
  LisemFit fit;
  BootstrapEnsemble ensemble;
  MediationReport report;
};

// Fit, bootstrap, MaxP and BH in one call.
MediationAnalysis analyze(const Dataset& d, const AnalysisOptions& options);

}  // namespace icma
