#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "icma/inference.hpp"
#include "icma/pooling.hpp"
#include "icma/simulation.hpp"

namespace icma {

inline constexpr const char* kVersion = "1.0.0";

enum class Mode { analyze, simulate, pool_select, diagnose, generate };

const char* to_string(Mode m);

struct PoolRequest {
  PoolMethod method = PoolMethod::average;
  Dims pooled;
};

// "max:16x24x20"
PoolRequest parse_pool_request(const std::string& text);
// "1x1x1,2x2x1" or "111,221"
std::vector<Ranks> parse_rank_list(const std::string& text);

struct RunConfig {
  std::optional<Mode> mode;
  std::filesystem::path scalars;
  std::filesystem::path tensors;
  std::filesystem::path out = "icma-out";
  std::uint64_t seed = 2023;
  std::optional<std::size_t> bootstrap;  // default depends on mode
  std::size_t replications = 100;
  double q = 0.05;
  std::vector<Ranks> ranks = simulation_rank_set();
  std::vector<PoolRequest> pools;
  double screen_p = 0.2;
  double region_frac = 0.05;
  std::optional<bool> intercepts;  // default: on for data, off for scenarios
  unsigned workers = 0;
  std::string scenario = "5";  // 1-5 or appendix-c
  std::size_t n = 100;
  std::size_t permutations = 499;
  SignCoupling coupling = SignCoupling::independent;

  // Keys match the long flag names (without dashes). Throws ErrorKind::config.
  void set(const std::string& key, const std::string& value);
  // JSON object whose keys are accepted by set(); array values are allowed for
  // "pool" and "ranks".
  void load(const std::filesystem::path& path);
  void validate() const;
  // Checks only the options that shape an analysis (q, bootstrap count).
  void validate_analysis() const;

  std::size_t bootstrap_count() const;
  bool intercepts_for_data() const { return intercepts.value_or(true); }
  bool intercepts_for_scenario() const { return intercepts.value_or(false); }
  AnalysisOptions analysis_options(bool include_intercept) const;
  ScenarioSpec scenario_spec() const;
  RegionStudySpec region_study_spec() const;
  bool region_scenario() const { return scenario == "appendix-c"; }

  // Canonical JSON text of every field, for provenance records.
  std::string to_json() const;
};

// Runs the configured mode and writes its artifacts under `out`. Throws Error.
void run(const RunConfig& config);

}  // namespace icma
