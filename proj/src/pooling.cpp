#include "icma/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "icma/error.hpp"
#include "icma/parallel.hpp"
#include "icma/random.hpp"

namespace icma {

namespace {

using Index = Eigen::Index;

// Distinct seeds for the first-step analysis and each candidate region.
inline constexpr std::uint64_t kStreamScreen = 0x5C12;
inline constexpr std::uint64_t kStreamRegion = 0x2E61;

std::size_t extent(const Dims& d, int axis) { return d[axis + 1]; }

}  // namespace

const char* to_string(PoolMethod m) { return m == PoolMethod::average ? "average" : "max"; }

PoolMethod parse_pool_method(const std::string& name) {
  if (name == "average" || name == "avg" || name == "mean") return PoolMethod::average;
  if (name == "max") return PoolMethod::max;
  fail(ErrorKind::config, "unknown pooling method '" + name + "'");
}

Dims PoolingSpec::cube() const {
  return {source.n1 / pooled.n1, source.n2 / pooled.n2, source.n3 / pooled.n3};
}

void PoolingSpec::validate() const {
  for (int d = 1; d <= 3; ++d) {
    if (pooled[d] == 0 || source[d] == 0 || source[d] % pooled[d] != 0) {
      fail(ErrorKind::config, "pooled extent " + std::to_string(pooled[d]) + " does not divide source extent " +
                                  std::to_string(source[d]) + " on mode " + std::to_string(d));
    }
  }
}

bool Cube::contains(const Cube& other) const {
  for (int a = 0; a < 3; ++a) {
    if (other.lower[a] < lower[a] || other.upper[a] > upper[a]) return false;
  }
  return true;
}

bool Cube::intersects(const Cube& other) const {
  for (int a = 0; a < 3; ++a) {
    if (other.upper[a] <= lower[a] || upper[a] <= other.lower[a]) return false;
  }
  return true;
}

Tensor3 pool(const Tensor3& t, const PoolingSpec& spec) {
  spec.validate();
  if (!(t.dims() == spec.source)) fail(ErrorKind::data, "pooling input does not match source dims");
  const Dims c = spec.cube();
  const double volume = static_cast<double>(c.size());
  Tensor3 out(spec.pooled);
  for (std::size_t q3 = 0; q3 < spec.pooled.n3; ++q3) {
    for (std::size_t q2 = 0; q2 < spec.pooled.n2; ++q2) {
      for (std::size_t q1 = 0; q1 < spec.pooled.n1; ++q1) {
        double acc = spec.method == PoolMethod::max ? -std::numeric_limits<double>::infinity() : 0.0;
        for (std::size_t k = 0; k < c.n3; ++k) {
          for (std::size_t j = 0; j < c.n2; ++j) {
            for (std::size_t i = 0; i < c.n1; ++i) {
              const double v = t(q1 * c.n1 + i, q2 * c.n2 + j, q3 * c.n3 + k);
              acc = spec.method == PoolMethod::max ? std::max(acc, v) : acc + v;
            }
          }
        }
        out(q1, q2, q3) = spec.method == PoolMethod::max ? acc : acc / volume;
      }
    }
  }
  return out;
}

Dataset pool_dataset(const Dataset& d, const PoolingSpec& spec) {
  Dataset out = d;
  out.dims = spec.pooled;
  out.mediators.resize(static_cast<Index>(spec.pooled.size()), d.mediators.cols());
  for (std::size_t i = 0; i < d.units(); ++i) {
    out.mediators.col(static_cast<Index>(i)) = pool(d.mediator(i), spec).as_vector();
  }
  return out;
}

Cube source_cube(const PoolingSpec& spec, const std::array<std::size_t, 3>& pooled_locus) {
  const Dims c = spec.cube();
  Cube cube;
  for (int a = 0; a < 3; ++a) {
    if (pooled_locus[a] >= extent(spec.pooled, a)) fail(ErrorKind::data, "pooled locus out of range");
    cube.lower[a] = pooled_locus[a] * extent(c, a);
    cube.upper[a] = cube.lower[a] + extent(c, a);
  }
  return cube;
}

Dataset extract_region(const Dataset& d, const Cube& cube) {
  for (int a = 0; a < 3; ++a) {
    if (cube.lower[a] >= cube.upper[a] || cube.upper[a] > extent(d.dims, a)) {
      fail(ErrorKind::data, "region lies outside the source image");
    }
  }
  const Dims sub{cube.upper[0] - cube.lower[0], cube.upper[1] - cube.lower[1], cube.upper[2] - cube.lower[2]};
  Dataset out = d;
  out.dims = sub;
  out.mediators.resize(static_cast<Index>(sub.size()), d.mediators.cols());
  for (Index i = 0; i < d.mediators.cols(); ++i) {
    const auto src = d.mediators.col(i);
    auto dst = out.mediators.col(i);
    Index k = 0;
    for (std::size_t p3 = cube.lower[2]; p3 < cube.upper[2]; ++p3) {
      for (std::size_t p2 = cube.lower[1]; p2 < cube.upper[1]; ++p2) {
        for (std::size_t p1 = cube.lower[0]; p1 < cube.upper[0]; ++p1) {
          dst(k++) = src(static_cast<Index>(p1 + d.dims.n1 * (p2 + d.dims.n2 * p3)));
        }
      }
    }
  }
  return out;
}

std::vector<Candidate> screen_regions(const Dataset& pooled, const PoolingSpec& spec,
                                      const AnalysisOptions& options, double threshold) {
  if (!(pooled.dims == spec.pooled)) fail(ErrorKind::data, "screening dataset is not at the pooled dims");
  AnalysisOptions screen = options;
  screen.bootstrap.seed = derive_seed(options.bootstrap.seed, kStreamScreen, 0);
  const MediationAnalysis analysis = analyze(pooled, screen);

  std::vector<Candidate> out;
  const Dims& pd = spec.pooled;
  for (std::size_t q3 = 0; q3 < pd.n3; ++q3) {
    for (std::size_t q2 = 0; q2 < pd.n2; ++q2) {
      for (std::size_t q1 = 0; q1 < pd.n1; ++q1) {
        const double p = analysis.report.p_raw(q1, q2, q3);
        if (p < threshold) {
          Candidate c;
          c.pooled_locus = {q1, q2, q3};
          c.cube = source_cube(spec, c.pooled_locus);
          c.screen_p = p;
          out.push_back(c);
        }
      }
    }
  }
  return out;
}

std::vector<Cube> RegionSelection::passing() const {
  std::vector<Cube> out;
  for (const auto& r : regions) {
    if (r.passes) out.push_back(r.candidate.cube);
  }
  return out;
}

RegionSelection second_step(const Dataset& source, const PoolingSpec& spec,
                            std::vector<Candidate> candidates, const AnalysisOptions& options,
                            double region_fraction) {
  RegionSelection sel;
  sel.spec = spec;
  sel.candidates = std::move(candidates);
  sel.regions.resize(sel.candidates.size());

  AnalysisOptions inner_options = options;
  inner_options.bootstrap.workers = 1;
  parallel_for(sel.candidates.size(), options.bootstrap.workers, [&](std::size_t k) {
    RegionResult& r = sel.regions[k];
    r.candidate = sel.candidates[k];
    r.center = {std::nan(""), std::nan(""), std::nan("")};
    const Cube& cube = r.candidate.cube;
    const Dataset sub = extract_region(source, cube);
    AnalysisOptions o = inner_options;
    const auto& q = r.candidate.pooled_locus;
    o.bootstrap.seed = derive_seed(options.bootstrap.seed, kStreamRegion, q[0] + 4096 * (q[1] + 4096 * q[2]));
    const MediationAnalysis a = analyze(sub, o);
    const Dims& sd = sub.dims;
    r.loci = sd.size();
    std::array<double, 3> sum{0.0, 0.0, 0.0};
    for (std::size_t p3 = 0; p3 < sd.n3; ++p3) {
      for (std::size_t p2 = 0; p2 < sd.n2; ++p2) {
        for (std::size_t p1 = 0; p1 < sd.n1; ++p1) {
          if (!a.report.significant[p1 + sd.n1 * (p2 + sd.n2 * p3)]) continue;
          ++r.significant;
          sum[0] += static_cast<double>(cube.lower[0] + p1 + 1);
          sum[1] += static_cast<double>(cube.lower[1] + p2 + 1);
          sum[2] += static_cast<double>(cube.lower[2] + p3 + 1);
        }
      }
    }
    r.significant_fraction = static_cast<double>(r.significant) / static_cast<double>(r.loci);
    r.passes = r.significant_fraction >= region_fraction;
    if (r.significant > 0) {
      for (int a3 = 0; a3 < 3; ++a3) r.center[a3] = sum[a3] / static_cast<double>(r.significant);
    }
    r.direct_estimate = a.report.direct.estimate;
    r.direct_p = a.report.direct_p;
  });
  return sel;
}

RegionSelection select_regions(const Dataset& source, const PoolingSpec& spec,
                               const AnalysisOptions& options, double screen_threshold,
                               double region_fraction) {
  PoolingSpec full = spec;
  full.source = source.dims;
  full.validate();
  const Dataset pooled = pool_dataset(source, full);
  std::vector<Candidate> candidates = screen_regions(pooled, full, options, screen_threshold);
  return second_step(source, full, std::move(candidates), options, region_fraction);
}

}  // namespace icma
