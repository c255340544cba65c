#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "icma/inference.hpp"
#include "icma/lisem.hpp"

namespace icma {

enum class PoolMethod { average, max };

const char* to_string(PoolMethod m);
PoolMethod parse_pool_method(const std::string& name);

// Disjoint-cube pooling of a `source` image down to `pooled`; every source
// extent must be a multiple of the pooled one.
struct PoolingSpec {
  PoolMethod method = PoolMethod::average;
  Dims pooled;
  Dims source;

  Dims cube() const;
  void validate() const;
};

// Half-open 0-based box [lower, upper) in source coordinates.
struct Cube {
  std::array<std::size_t, 3> lower{};
  std::array<std::size_t, 3> upper{};

  bool contains(const Cube& other) const;
  bool intersects(const Cube& other) const;
  bool operator==(const Cube&) const = default;
};

Tensor3 pool(const Tensor3& t, const PoolingSpec& spec);
Dataset pool_dataset(const Dataset& d, const PoolingSpec& spec);

Cube source_cube(const PoolingSpec& spec, const std::array<std::size_t, 3>& pooled_locus);

// Dataset restricted to the mediator sub-tensor inside `cube`.
Dataset extract_region(const Dataset& d, const Cube& cube);

struct Candidate {
  std::array<std::size_t, 3> pooled_locus{};  // 0-based
  Cube cube;
  double screen_p = 1.0;
};

// First step: full analysis of the pooled mediator; loci with raw MaxP
// p < threshold become candidates, in vec order.
std::vector<Candidate> screen_regions(const Dataset& pooled, const PoolingSpec& spec,
                                      const AnalysisOptions& options, double threshold);

struct RegionResult {
  Candidate candidate;
  std::size_t loci = 0;
  std::size_t significant = 0;
  double significant_fraction = 0.0;
  bool passes = false;
  std::array<double, 3> center{};  // 1-based source coordinates; NaN without significant loci
  double direct_estimate = 0.0;
  double direct_p = 1.0;
};

struct RegionSelection {
  PoolingSpec spec;
  std::vector<Candidate> candidates;
  std::vector<RegionResult> regions;

  std::vector<Cube> passing() const;
};

// Second step: full analysis with BH adjustment inside every candidate cube
// of the source image; a region passes when at least `region_fraction` of its
// loci are significant.
RegionSelection second_step(const Dataset& source, const PoolingSpec& spec,
                            std::vector<Candidate> candidates, const AnalysisOptions& options,
                            double region_fraction);

// pool, screen_regions and second_step in sequence.
RegionSelection select_regions(const Dataset& source, const PoolingSpec& spec,
                               const AnalysisOptions& options, double screen_threshold,
                               double region_fraction);

}  // namespace icma
