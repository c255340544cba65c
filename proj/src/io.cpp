#include "icma/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "icma/error.hpp"

namespace icma {

namespace {

using Index = Eigen::Index;
using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& in, const std::string& where) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) fail(ErrorKind::data, where + ": truncated header");
  return to_little(v);
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFu) fail(ErrorKind::data, std::string(what) + " does not fit the stack header");
  return static_cast<std::uint32_t>(v);
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) fail(ErrorKind::config, "cannot write " + path.string());
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& text, std::size_t row, const std::string& column) {
  const std::string where = "row " + std::to_string(row) + ", column " + column;
  if (text.empty()) fail(ErrorKind::data, where + ": empty value");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    fail(ErrorKind::data, where + ": '" + text + "' is not a number");
  }
  if (used != text.size()) fail(ErrorKind::data, where + ": '" + text + "' is not a number");
  if (!std::isfinite(v)) fail(ErrorKind::data, where + ": non-finite value");
  return v;
}

json effect_json(const Effect& e) {
  return {{"estimate", e.estimate}, {"sd", e.sd}, {"lower", e.lower}, {"upper", e.upper}};
}

json ranks_json(const Ranks& r) { return json::array({r[0], r[1], r[2]}); }

json dims_json(const Dims& d) { return json::array({d.n1, d.n2, d.n3}); }

json cube_json(const Cube& c) {
  // 1-based inclusive bounds.
  return {{"lower", json::array({c.lower[0] + 1, c.lower[1] + 1, c.lower[2] + 1})},
          {"upper", json::array({c.upper[0], c.upper[1], c.upper[2]})}};
}

json header(const std::string& kind) {
  return {{"record", "header"}, {"format", "icma-" + kind}, {"version", kReportVersion}};
}

void write_lines(const std::filesystem::path& path, const std::vector<json>& records) {
  std::ofstream out = open_out(path);
  for (const json& r : records) out << r.dump() << '\n';
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_tensor_stack(const std::filesystem::path& path, const TensorStack& stack) {
  const auto big_n = static_cast<Index>(stack.dims.size());
  if (stack.values.rows() != big_n) fail(ErrorKind::data, "tensor stack rows do not match dims");
  std::ofstream out = open_out(path, std::ios::binary);
  out.write(kStackMagic, sizeof kStackMagic);
  out.put(static_cast<char>(kStackVersion));
  put_u32(out, checked_u32(static_cast<std::size_t>(stack.values.cols()), "unit count"));
  put_u32(out, checked_u32(stack.dims.n1, "N1"));
  put_u32(out, checked_u32(stack.dims.n2, "N2"));
  put_u32(out, checked_u32(stack.dims.n3, "N3"));
  for (Index i = 0; i < stack.values.cols(); ++i) {
    for (Index k = 0; k < big_n; ++k) {
      const double v = to_little(stack.values(k, i));
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
  if (!out) fail(ErrorKind::config, "failed writing " + path.string());
}

TensorStack read_tensor_stack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data, "cannot open tensor stack " + path.string());
  const std::string where = path.filename().string();
  char magic[sizeof kStackMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kStackMagic, sizeof magic) != 0) {
    fail(ErrorKind::data, where + ": not a tensor stack file (bad magic)");
  }
  const int version = in.get();
  if (version != kStackVersion) fail(ErrorKind::data, where + ": unsupported stack version " + std::to_string(version));
  const std::uint32_t n = get_u32(in, where);
  TensorStack stack;
  stack.dims.n1 = get_u32(in, where);
  stack.dims.n2 = get_u32(in, where);
  stack.dims.n3 = get_u32(in, where);
  if (stack.dims.size() == 0) fail(ErrorKind::data, where + ": zero tensor dimension");

  const std::uintmax_t header_bytes = sizeof kStackMagic + 1 + 4 * sizeof(std::uint32_t);
  const std::uintmax_t expected = header_bytes + static_cast<std::uintmax_t>(n) * stack.dims.size() * sizeof(double);
  const std::uintmax_t actual = std::filesystem::file_size(path);
  if (actual != expected) {
    fail(ErrorKind::data, where + ": payload length mismatch (header promises " + std::to_string(n) +
                              " tensors, file holds " + std::to_string(actual) + " bytes, expected " +
                              std::to_string(expected) + ")");
  }
  const auto big_n = static_cast<Index>(stack.dims.size());
  stack.values.resize(big_n, static_cast<Index>(n));
  for (Index i = 0; i < static_cast<Index>(n); ++i) {
    for (Index k = 0; k < big_n; ++k) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      v = to_little(v);
      if (!std::isfinite(v)) {
        fail(ErrorKind::data, where + ": non-finite value in tensor " + std::to_string(i + 1));
      }
      stack.values(k, i) = v;
    }
  }
  return stack;
}

void write_scalar_table(const std::filesystem::path& path, const ScalarTable& t) {
  const auto n = static_cast<Index>(t.ids.size());
  if (t.treatment.size() != n || t.outcome.size() != n || t.covariates.rows() != n) {
    fail(ErrorKind::data, "scalar table columns differ in length");
  }
  std::ofstream out = open_out(path);
  out << "id,X,Y";
  for (Index j = 0; j < t.covariates.cols(); ++j) out << ",Z_" << (j + 1);
  out << '\n';
  for (Index i = 0; i < n; ++i) {
    out << t.ids[static_cast<std::size_t>(i)] << ',' << format_double(t.treatment(i)) << ','
        << format_double(t.outcome(i));
    for (Index j = 0; j < t.covariates.cols(); ++j) out << ',' << format_double(t.covariates(i, j));
    out << '\n';
  }
}

ScalarTable read_scalar_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::data, "cannot open scalar table " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::data, "scalar table is empty");
  const std::vector<std::string> head = split_csv(line);
  if (head.size() < 3 || head[0] != "id" || head[1] != "X" || head[2] != "Y") {
    fail(ErrorKind::data, "scalar table header must start with id,X,Y");
  }
  const std::size_t j = head.size() - 3;
  for (std::size_t c = 0; c < j; ++c) {
    if (head[3 + c] != "Z_" + std::to_string(c + 1)) {
      fail(ErrorKind::data, "scalar table column " + std::to_string(4 + c) + " must be Z_" + std::to_string(c + 1));
    }
  }

  std::vector<std::vector<double>> rows;
  ScalarTable t;
  std::set<std::string> seen;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() != head.size()) {
      fail(ErrorKind::data, "row " + std::to_string(row) + ": expected " + std::to_string(head.size()) +
                                " fields, found " + std::to_string(cells.size()));
    }
    if (cells[0].empty()) fail(ErrorKind::data, "row " + std::to_string(row) + ": empty id");
    if (!seen.insert(cells[0]).second) {
      fail(ErrorKind::data, "row " + std::to_string(row) + ": duplicate id '" + cells[0] + "'");
    }
    std::vector<double> values(head.size() - 1);
    for (std::size_t c = 1; c < head.size(); ++c) values[c - 1] = parse_number(cells[c], row, head[c]);
    if (values[0] != 0.0 && values[0] != 1.0) {
      fail(ErrorKind::data, "row " + std::to_string(row) + " (id '" + cells[0] + "'): X = " + cells[1] +
                                " is not binary");
    }
    t.ids.push_back(cells[0]);
    rows.push_back(std::move(values));
  }
  const auto n = static_cast<Index>(rows.size());
  t.treatment.resize(n);
  t.outcome.resize(n);
  t.covariates.resize(n, static_cast<Index>(j));
  for (Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    t.treatment(i) = r[0];
    t.outcome(i) = r[1];
    for (std::size_t c = 0; c < j; ++c) t.covariates(i, static_cast<Index>(c)) = r[2 + c];
  }
  return t;
}

std::vector<std::string> default_ids(std::size_t n) {
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i + 1);
  return ids;
}

LoadedDataset ingest(const std::filesystem::path& scalars, const std::filesystem::path& tensors) {
  ScalarTable t = read_scalar_table(scalars);
  TensorStack s = read_tensor_stack(tensors);
  if (static_cast<std::size_t>(s.values.cols()) != t.ids.size()) {
    fail(ErrorKind::data, "unit count mismatch: scalar table has " + std::to_string(t.ids.size()) +
                              " rows, tensor stack has " + std::to_string(s.values.cols()));
  }
  LoadedDataset out;
  out.data.covariates = std::move(t.covariates);
  out.data.treatment = std::move(t.treatment);
  out.data.outcome = std::move(t.outcome);
  out.data.mediators = std::move(s.values);
  out.data.dims = s.dims;
  out.ids = std::move(t.ids);
  out.data.validate();
  return out;
}

void emit(const Dataset& d, const std::vector<std::string>& ids, const std::filesystem::path& scalars,
          const std::filesystem::path& tensors) {
  d.validate();
  if (ids.size() != d.units()) fail(ErrorKind::data, "id count does not match unit count");
  write_scalar_table(scalars, ScalarTable{ids, d.treatment, d.outcome, d.covariates});
  write_tensor_stack(tensors, TensorStack{d.dims, d.mediators});
}

std::string locus_table(const MediationReport& r) {
  std::ostringstream out;
  out << "p1,p2,p3,alpha,beta,alpha_beta,sd_alpha,sd_beta,p_raw,p_adj,significant\n";
  const Dims& d = r.dims;
  std::size_t k = 0;
  for (std::size_t p3 = 0; p3 < d.n3; ++p3) {
    for (std::size_t p2 = 0; p2 < d.n2; ++p2) {
      for (std::size_t p1 = 0; p1 < d.n1; ++p1, ++k) {
        out << (p1 + 1) << ',' << (p2 + 1) << ',' << (p3 + 1) << ',' << format_double(r.alpha.values()[k]) << ','
            << format_double(r.beta.values()[k]) << ',' << format_double(r.alpha_beta.values()[k]) << ','
            << format_double(r.sd_alpha.values()[k]) << ',' << format_double(r.sd_beta.values()[k]) << ','
            << format_double(r.p_raw.values()[k]) << ',' << format_double(r.p_adjusted.values()[k]) << ','
            << (r.significant[k] ? 1 : 0) << '\n';
      }
    }
  }
  return out.str();
}

void write_locus_table(const std::filesystem::path& path, const MediationReport& report) {
  std::ofstream out = open_out(path);
  out << locus_table(report);
}

void write_analysis_report(const std::filesystem::path& path, const LisemFit& fit, const MediationReport& r) {
  std::vector<json> lines;
  lines.push_back(header("analysis"));
  lines.push_back({{"record", "effects"},
                   {"total", effect_json(r.total)},
                   {"direct", effect_json(r.direct)},
                   {"indirect", effect_json(r.indirect)},
                   {"direct_p", r.direct_p},
                   {"ci_level", r.ci_level}});
  json cands = json::array();
  for (const auto& c : fit.rank_candidates) {
    json e = {{"ranks", ranks_json(c.ranks)}, {"parameters", c.parameters}, {"ok", c.ok}};
    if (c.ok) e["bic"] = c.bic;
    else e["error"] = c.error;
    cands.push_back(e);
  }
  lines.push_back({{"record", "model"},
                   {"dims", dims_json(r.dims)},
                   {"units", fit.eps_scalar_resid.size()},
                   {"ranks", ranks_json(r.ranks)},
                   {"rank_candidates", cands},
                   {"tucker_iterations", fit.tucker.iterations},
                   {"tucker_converged", fit.tucker.converged},
                   {"loglik", fit.tucker.loglik()},
                   {"saturated", fit.saturated},
                   {"intercepts", fit.include_intercept}});
  lines.push_back({{"record", "inference"},
                   {"replicates", r.replicates},
                   {"failed", r.failed},
                   {"q", r.q},
                   {"significant", r.significant_count()},
                   {"loci", r.dims.size()}});
  write_lines(path, lines);
}

void write_simulation_report(const std::filesystem::path& path, const ScenarioSpec& spec,
                             const ReplicationSummary& s) {
  std::vector<json> lines;
  lines.push_back(header("simulation"));
  json ranks = json::array();
  for (const auto& [r, count] : s.rank_counts) ranks.push_back({{"ranks", ranks_json(r)}, {"count", count}});
  const std::size_t ok = s.replications - s.failed;
  lines.push_back({{"record", "summary"},
                   {"scenario", spec.scenario},
                   {"n", spec.n},
                   {"dims", dims_json(spec.dims)},
                   {"replications", s.replications},
                   {"failed", s.failed},
                   {"bootstrap", spec.bootstrap},
                   {"q", spec.q},
                   {"gamma_mean", s.gamma_mean},
                   {"gamma_sd", s.gamma_sd},
                   {"gamma_interval", json::array({s.gamma_interval_lower, s.gamma_interval_upper})},
                   {"tau_mean", s.tau_mean},
                   {"tau_sd", s.tau_sd},
                   {"delta_mean", s.delta_mean},
                   {"delta_sd", s.delta_sd},
                   {"direct_ci_halfwidth_mean", s.direct_halfwidth_mean},
                   {"direct_coverage", ok ? static_cast<double>(s.direct_covered) / static_cast<double>(ok) : 0.0},
                   {"total_coverage", ok ? static_cast<double>(s.total_covered) / static_cast<double>(ok) : 0.0},
                   {"indirect_coverage", ok ? static_cast<double>(s.indirect_covered) / static_cast<double>(ok) : 0.0},
                   {"rank_counts", ranks}});
  for (const auto& rec : s.records) {
    json e = {{"record", "replicate"}, {"replicate", rec.replicate}, {"ok", rec.ok}};
    if (rec.ok) {
      e["direct"] = effect_json(rec.direct);
      e["total"] = effect_json(rec.total);
      e["indirect"] = effect_json(rec.indirect);
      e["significant"] = rec.significant;
      e["ranks"] = ranks_json(rec.ranks);
    }
    lines.push_back(e);
  }
  write_lines(path, lines);
}

void write_proportion_table(const std::filesystem::path& path, const ReplicationSummary& s) {
  std::ofstream out = open_out(path);
  out << "locus,p1,p2,p3,true_alpha_beta,proportion_adjusted,proportion_raw\n";
  const Dims& d = s.dims;
  std::size_t k = 0;
  for (std::size_t p3 = 0; p3 < d.n3; ++p3) {
    for (std::size_t p2 = 0; p2 < d.n2; ++p2) {
      for (std::size_t p1 = 0; p1 < d.n1; ++p1, ++k) {
        out << (k + 1) << ',' << (p1 + 1) << ',' << (p2 + 1) << ',' << (p3 + 1) << ','
            << format_double(s.true_alpha_beta.values()[k]) << ','
            << format_double(s.proportion_adjusted.values()[k]) << ','
            << format_double(s.proportion_raw.values()[k]) << '\n';
      }
    }
  }
}

void write_region_report(const std::filesystem::path& path, const std::vector<RegionSelection>& selections) {
  std::vector<json> lines;
  lines.push_back(header("regions"));
  for (const auto& sel : selections) {
    json regions = json::array();
    for (const auto& r : sel.regions) {
      const auto& q = r.candidate.pooled_locus;
      json e = {{"pooled_locus", json::array({q[0] + 1, q[1] + 1, q[2] + 1})},
                {"cube", cube_json(r.candidate.cube)},
                {"screen_p", r.candidate.screen_p},
                {"loci", r.loci},
                {"significant", r.significant},
                {"significant_fraction", r.significant_fraction},
                {"passes", r.passes},
                {"direct_estimate", r.direct_estimate},
                {"direct_p", r.direct_p}};
      if (r.significant > 0) e["center"] = json::array({r.center[0], r.center[1], r.center[2]});
      regions.push_back(e);
    }
    lines.push_back({{"record", "selection"},
                     {"method", to_string(sel.spec.method)},
                     {"pooled_dims", dims_json(sel.spec.pooled)},
                     {"source_dims", dims_json(sel.spec.source)},
                     {"candidates", sel.candidates.size()},
                     {"passing", sel.passing().size()},
                     {"regions", regions}});
  }
  write_lines(path, lines);
}

void write_region_table(const std::filesystem::path& path, const std::vector<RegionSelection>& selections) {
  std::ofstream out = open_out(path);
  out << "method,pooled_dims,pooled_locus,center_p1,center_p2,center_p3,significant_fraction,direct_estimate,"
         "direct_p\n";
  for (const auto& sel : selections) {
    const Dims& pd = sel.spec.pooled;
    for (const auto& r : sel.regions) {
      if (!r.passes) continue;
      const auto& q = r.candidate.pooled_locus;
      out << to_string(sel.spec.method) << ',' << pd.n1 << 'x' << pd.n2 << 'x' << pd.n3 << ',' << (q[0] + 1) << 'x'
          << (q[1] + 1) << 'x' << (q[2] + 1) << ',' << format_double(r.center[0]) << ','
          << format_double(r.center[1]) << ',' << format_double(r.center[2]) << ','
          << format_double(r.significant_fraction) << ',' << format_double(r.direct_estimate) << ','
          << format_double(r.direct_p) << '\n';
    }
  }
}

void write_diagnostic_report(const std::filesystem::path& path, const DiagnosticReport& r) {
  std::vector<json> lines;
  lines.push_back(header("diagnostics"));
  lines.push_back({{"record", "normality"},
                   {"test", "kolmogorov-smirnov"},
                   {"statistic", r.ks.statistic},
                   {"p", r.ks.p},
                   {"rejected", r.normality_rejected},
                   {"parameters_estimated", r.ks_parameters_estimated},
                   {"note", "location and scale estimated from the residuals; asymptotic p is conservative"}});
  lines.push_back({{"record", "independence"},
                   {"test", "distance-covariance permutation"},
                   {"statistic", r.independence.statistic},
                   {"p", r.independence.p},
                   {"permutations", r.independence.permutations},
                   {"rejected", r.independence_rejected},
                   {"note", "substitutes for the ball covariance test"}});
  lines.push_back({{"record", "level"}, {"level", r.level}});
  write_lines(path, lines);
}

}  // namespace icma
