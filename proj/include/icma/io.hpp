#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "icma/diagnostics.hpp"
#include "icma/inference.hpp"
#include "icma/lisem.hpp"
#include "icma/pooling.hpp"
#include "icma/simulation.hpp"

namespace icma {

// Binary stack of n tensors: magic "ICMA3T\0", one version byte, little-endian
// u32 n, N1, N2, N3, then n * N1 * N2 * N3 little-endian doubles (vec order,
// one tensor after another).
inline constexpr char kStackMagic[7] = {'I', 'C', 'M', 'A', '3', 'T', '\0'};
inline constexpr std::uint8_t kStackVersion = 1;

struct TensorStack {
  Dims dims;
  Matrix values;  // N x n
};

void write_tensor_stack(const std::filesystem::path& path, const TensorStack& stack);
TensorStack read_tensor_stack(const std::filesystem::path& path);

// Comma-separated table with header id,X,Y,Z_1..Z_J.
struct ScalarTable {
  std::vector<std::string> ids;
  Vector treatment;
  Vector outcome;
  Matrix covariates;  // n x J
};

void write_scalar_table(const std::filesystem::path& path, const ScalarTable& table);
ScalarTable read_scalar_table(const std::filesystem::path& path);

struct LoadedDataset {
  Dataset data;
  std::vector<std::string> ids;
};

LoadedDataset ingest(const std::filesystem::path& scalars, const std::filesystem::path& tensors);
void emit(const Dataset& d, const std::vector<std::string>& ids, const std::filesystem::path& scalars,
          const std::filesystem::path& tensors);
std::vector<std::string> default_ids(std::size_t n);

// Per-locus table in vec order with 1-based coordinates.
void write_locus_table(const std::filesystem::path& path, const MediationReport& report);
std::string locus_table(const MediationReport& report);

// Line-delimited JSON writers. The first line of each file is a header record
// carrying the format name and version.
inline constexpr int kReportVersion = 1;

void write_analysis_report(const std::filesystem::path& path, const LisemFit& fit,
                           const MediationReport& report);
void write_simulation_report(const std::filesystem::path& path, const ScenarioSpec& spec,
                             const ReplicationSummary& summary);
void write_proportion_table(const std::filesystem::path& path, const ReplicationSummary& summary);
void write_region_report(const std::filesystem::path& path, const std::vector<RegionSelection>& selections);
void write_region_table(const std::filesystem::path& path, const std::vector<RegionSelection>& selections);
void write_diagnostic_report(const std::filesystem::path& path, const DiagnosticReport& report);

std::string format_double(double v);

}  // namespace icma
