#include "icma/run.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "icma/diagnostics.hpp"
#include "icma/error.hpp"
#include "icma/io.hpp"

namespace icma {

namespace {

using json = nlohmann::json;

std::size_t parse_count(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long x = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    x = std::stoull(v, &used);
  } catch (const std::exception&) {
    fail(ErrorKind::config, key + ": '" + v + "' is not a non-negative integer");
  }
  if (used != v.size()) fail(ErrorKind::config, key + ": '" + v + "' is not a non-negative integer");
  return static_cast<std::size_t>(x);
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    fail(ErrorKind::config, key + ": '" + v + "' is not a number");
  }
  if (used != v.size()) fail(ErrorKind::config, key + ": '" + v + "' is not a number");
  return x;
}

bool parse_switch(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  fail(ErrorKind::config, key + ": expected on or off, got '" + v + "'");
}

Dims parse_dims(const std::string& text) {
  Dims d;
  char x1 = 0, x2 = 0;
  std::istringstream in(text);
  long long a = 0, b = 0, c = 0;
  if (!(in >> a >> x1 >> b >> x2 >> c) || x1 != 'x' || x2 != 'x' || !in.eof() || a <= 0 || b <= 0 || c <= 0) {
    fail(ErrorKind::config, "dims '" + text + "' must look like 16x24x20");
  }
  d.n1 = static_cast<std::size_t>(a);
  d.n2 = static_cast<std::size_t>(b);
  d.n3 = static_cast<std::size_t>(c);
  return d;
}

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "on" : "off";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return format_double(v.get<double>());
  fail(ErrorKind::config, "config value " + v.dump() + " is not a scalar");
}

std::string dims_text(const Dims& d) {
  return std::to_string(d.n1) + "x" + std::to_string(d.n2) + "x" + std::to_string(d.n3);
}

std::string ranks_text(const Ranks& r) {
  return std::to_string(r[0]) + "x" + std::to_string(r[1]) + "x" + std::to_string(r[2]);
}

void require_inputs(const RunConfig& c) {
  if (c.scalars.empty() || c.tensors.empty()) {
    fail(ErrorKind::config, std::string("mode ") + to_string(*c.mode) + " needs --scalars and --tensors");
  }
}

void write_provenance(const RunConfig& c, double seconds, const std::vector<std::string>& artifacts) {
  json p;
  p["format"] = "icma-provenance";
  p["version"] = kReportVersion;
  p["software_version"] = kVersion;
  p["mode"] = to_string(*c.mode);
  p["seed"] = c.seed;
  p["config"] = json::parse(c.to_json());
  p["wall_seconds"] = seconds;
  p["artifacts"] = artifacts;
  std::filesystem::create_directories(c.out);
  std::ofstream out(c.out / "provenance.json", std::ios::trunc);
  if (!out) fail(ErrorKind::config, "cannot write provenance record in " + c.out.string());
  out << p.dump(2) << '\n';
}

std::vector<std::string> run_analyze(const RunConfig& c) {
  require_inputs(c);
  const LoadedDataset in = ingest(c.scalars, c.tensors);
  const MediationAnalysis a = analyze(in.data, c.analysis_options(c.intercepts_for_data()));
  write_analysis_report(c.out / "report.jsonl", a.fit, a.report);
  write_locus_table(c.out / "loci.csv", a.report);
  return {"report.jsonl", "loci.csv"};
}

std::vector<std::string> run_simulate(const RunConfig& c) {
  if (c.region_scenario()) {
    const RegionStudySpec spec = c.region_study_spec();
    const RegionStudySummary s = run_region_study(spec);
    std::vector<RegionSelection> selections;
    for (const auto& r : s.runs) selections.push_back(r.selection);
    write_region_report(c.out / "regions.jsonl", selections);
    write_region_table(c.out / "regions.csv", selections);
    json summary = {{"record", "region-study"},
                    {"methods_agree", s.methods_agree},
                    {"success", s.success()},
                    {"planted_region", {{"lower", planted_region(spec).lower}, {"upper", planted_region(spec).upper}}}};
    json runs = json::array();
    for (const auto& r : s.runs) {
      runs.push_back({{"method", to_string(r.pooling.method)},
                      {"pooled_dims", dims_text(r.pooling.pooled)},
                      {"candidates", r.selection.candidates.size()},
                      {"passing", r.selection.passing().size()},
                      {"covers_truth", r.covers_truth},
                      {"no_false_regions", r.no_false_regions}});
    }
    summary["runs"] = runs;
    std::ofstream out(c.out / "region_study.json", std::ios::trunc);
    out << summary.dump(2) << '\n';
    return {"regions.jsonl", "regions.csv", "region_study.json"};
  }
  const ScenarioSpec spec = c.scenario_spec();
  const ReplicationSummary s = run_study(spec);
  write_simulation_report(c.out / "simulation.jsonl", spec, s);
  write_proportion_table(c.out / "proportions.csv", s);
  return {"simulation.jsonl", "proportions.csv"};
}

std::vector<std::string> run_pool_select(const RunConfig& c) {
  require_inputs(c);
  if (c.pools.empty()) fail(ErrorKind::config, "mode pool-select needs at least one --pool METHOD:D1xD2xD3");
  const LoadedDataset in = ingest(c.scalars, c.tensors);
  const AnalysisOptions options = c.analysis_options(c.intercepts_for_data());
  std::vector<RegionSelection> selections;
  for (const PoolRequest& p : c.pools) {
    PoolingSpec spec{p.method, p.pooled, in.data.dims};
    selections.push_back(select_regions(in.data, spec, options, c.screen_p, c.region_frac));
  }
  write_region_report(c.out / "regions.jsonl", selections);
  write_region_table(c.out / "regions.csv", selections);
  return {"regions.jsonl", "regions.csv"};
}

std::vector<std::string> run_diagnose(const RunConfig& c) {
  require_inputs(c);
  const LoadedDataset in = ingest(c.scalars, c.tensors);
  LisemConfig lc = c.analysis_options(c.intercepts_for_data()).lisem;
  const LisemFit fit = fit_lisem(in.data, lc);
  const DiagnosticReport r =
      diagnose(fit.eps_tensor_resid, fit.eps_scalar_resid, c.permutations, c.seed, 0.05, c.workers);
  write_diagnostic_report(c.out / "diagnostics.jsonl", r);
  return {"diagnostics.jsonl"};
}

std::vector<std::string> run_generate(const RunConfig& c) {
  Dataset d = c.region_scenario() ? generate_region_study(c.region_study_spec()) : generate(c.scenario_spec(), 0);
  emit(d, default_ids(d.units()), c.out / "scalars.csv", c.out / "tensors.icma");
  return {"scalars.csv", "tensors.icma"};
}

}  // namespace

const char* to_string(Mode m) {
  switch (m) {
    case Mode::analyze: return "analyze";
    case Mode::simulate: return "simulate";
    case Mode::pool_select: return "pool-select";
    case Mode::diagnose: return "diagnose";
    case Mode::generate: return "generate";
  }
  return "unknown";
}

PoolRequest parse_pool_request(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) fail(ErrorKind::config, "pool spec '" + text + "' must look like max:16x24x20");
  return {parse_pool_method(text.substr(0, colon)), parse_dims(text.substr(colon + 1))};
}

std::vector<Ranks> parse_rank_list(const std::string& text) {
  std::vector<Ranks> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    Ranks r{};
    if (item.find('x') != std::string::npos) {
      const Dims d = parse_dims(item);
      r = {d.n1, d.n2, d.n3};
    } else if (item.size() == 3 && std::isdigit(static_cast<unsigned char>(item[0])) &&
               std::isdigit(static_cast<unsigned char>(item[1])) && std::isdigit(static_cast<unsigned char>(item[2]))) {
      r = {static_cast<std::size_t>(item[0] - '0'), static_cast<std::size_t>(item[1] - '0'),
           static_cast<std::size_t>(item[2] - '0')};
    } else {
      fail(ErrorKind::config, "rank '" + item + "' must look like 2x2x1 or 221");
    }
    if (r[0] == 0 || r[1] == 0 || r[2] == 0) fail(ErrorKind::config, "ranks must be positive");
    out.push_back(r);
  }
  if (out.empty()) fail(ErrorKind::config, "empty rank list");
  return out;
}

void RunConfig::set(const std::string& key, const std::string& v) {
  if (key == "mode") {
    if (v == "analyze") mode = Mode::analyze;
    else if (v == "simulate") mode = Mode::simulate;
    else if (v == "pool-select") mode = Mode::pool_select;
    else if (v == "diagnose") mode = Mode::diagnose;
    else if (v == "generate") mode = Mode::generate;
    else fail(ErrorKind::config, "unknown mode '" + v + "'");
  } else if (key == "scalars") {
    scalars = v;
  } else if (key == "tensors") {
    tensors = v;
  } else if (key == "out") {
    if (v.empty()) fail(ErrorKind::config, "out: empty path");
    out = v;
  } else if (key == "seed") {
    seed = parse_count(key, v);
  } else if (key == "bootstrap") {
    bootstrap = parse_count(key, v);
  } else if (key == "replications") {
    replications = parse_count(key, v);
  } else if (key == "q") {
    q = parse_real(key, v);
  } else if (key == "ranks") {
    ranks = parse_rank_list(v);
  } else if (key == "pool") {
    pools.push_back(parse_pool_request(v));
  } else if (key == "screen-p") {
    screen_p = parse_real(key, v);
  } else if (key == "region-frac") {
    region_frac = parse_real(key, v);
  } else if (key == "intercepts") {
    intercepts = parse_switch(key, v);
  } else if (key == "workers") {
    workers = static_cast<unsigned>(parse_count(key, v));
  } else if (key == "scenario") {
    if (v != "1" && v != "2" && v != "3" && v != "4" && v != "5" && v != "appendix-c") {
      fail(ErrorKind::config, "scenario must be 1-5 or appendix-c, got '" + v + "'");
    }
    scenario = v;
  } else if (key == "n") {
    n = parse_count(key, v);
  } else if (key == "permutations") {
    permutations = parse_count(key, v);
  } else if (key == "sign-coupling") {
    coupling = parse_sign_coupling(v);
  } else {
    fail(ErrorKind::config, "unknown option '" + key + "'");
  }
}

void RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::config, "config " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::config, "config " + path.string() + " must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (value.is_array()) {
      if (key == "pool") {
        for (const auto& item : value) set(key, scalar_text(item));
      } else if (key == "ranks") {
        std::string joined;
        for (const auto& item : value) joined += (joined.empty() ? "" : ",") + scalar_text(item);
        set(key, joined);
      } else {
        fail(ErrorKind::config, "config key '" + key + "' does not take a list");
      }
    } else {
      set(key, scalar_text(value));
    }
  }
}

void RunConfig::validate_analysis() const {
  if (!(q > 0.0 && q < 1.0)) fail(ErrorKind::config, "q must be in (0, 1)");
  if (bootstrap_count() < 2) fail(ErrorKind::config, "bootstrap count must be at least 2");
}

void RunConfig::validate() const {
  if (!mode) fail(ErrorKind::config, "no mode given");
  validate_analysis();
  if (!(screen_p >= 0.0 && screen_p <= 1.0)) fail(ErrorKind::config, "screen-p must be in [0, 1]");
  if (!(region_frac >= 0.0 && region_frac <= 1.0)) fail(ErrorKind::config, "region-frac must be in [0, 1]");
  if (*mode == Mode::diagnose && permutations == 0) fail(ErrorKind::config, "permutations must be positive");
}

std::size_t RunConfig::bootstrap_count() const {
  if (bootstrap) return *bootstrap;
  return mode == Mode::simulate ? (region_scenario() ? 100 : 200) : 500;
}

AnalysisOptions RunConfig::analysis_options(bool include_intercept) const {
  AnalysisOptions o;
  o.lisem.include_intercept = include_intercept;
  o.lisem.rank_candidates = ranks;
  o.bootstrap.replicates = bootstrap_count();
  o.bootstrap.seed = seed;
  o.bootstrap.workers = workers;
  o.bootstrap.coupling = coupling;
  o.q = q;
  return o;
}

ScenarioSpec RunConfig::scenario_spec() const {
  if (region_scenario()) fail(ErrorKind::config, "scenario appendix-c is a region study");
  ScenarioSpec s;
  s.scenario = std::stoi(scenario);
  s.n = n;
  s.replications = replications;
  s.bootstrap = bootstrap_count();
  s.q = q;
  s.seed = seed;
  s.include_intercept = intercepts_for_scenario();
  s.rank_candidates = ranks;
  s.workers = workers;
  s.coupling = coupling;
  return s;
}

RegionStudySpec RunConfig::region_study_spec() const {
  RegionStudySpec s;
  s.n = n;
  s.bootstrap = bootstrap_count();
  s.q = q;
  s.screen_p = screen_p;
  s.region_fraction = region_frac;
  s.seed = seed;
  s.workers = workers;
  s.rank_candidates = ranks;
  s.coupling = coupling;
  if (!pools.empty()) {
    s.pooled.clear();
    s.methods.clear();
    for (const PoolRequest& p : pools) {
      if (std::find(s.pooled.begin(), s.pooled.end(), p.pooled) == s.pooled.end()) s.pooled.push_back(p.pooled);
      if (std::find(s.methods.begin(), s.methods.end(), p.method) == s.methods.end()) s.methods.push_back(p.method);
    }
  }
  return s;
}

std::string RunConfig::to_json() const {
  json j;
  j["mode"] = mode ? to_string(*mode) : "";
  j["scalars"] = scalars.string();
  j["tensors"] = tensors.string();
  j["out"] = out.string();
  j["seed"] = seed;
  j["bootstrap"] = bootstrap_count();
  j["replications"] = replications;
  j["q"] = q;
  json r = json::array();
  for (const Ranks& x : ranks) r.push_back(ranks_text(x));
  j["ranks"] = r;
  json p = json::array();
  for (const PoolRequest& x : pools) p.push_back(std::string(to_string(x.method)) + ":" + dims_text(x.pooled));
  j["pool"] = p;
  j["screen-p"] = screen_p;
  j["region-frac"] = region_frac;
  if (intercepts) j["intercepts"] = *intercepts ? "on" : "off";
  j["workers"] = workers;
  j["scenario"] = scenario;
  j["n"] = n;
  j["permutations"] = permutations;
  j["sign-coupling"] = to_string(coupling);
  return j.dump();
}

void run(const RunConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(config.out);
  std::vector<std::string> artifacts;
  switch (*config.mode) {
    case Mode::analyze: artifacts = run_analyze(config); break;
    case Mode::simulate: artifacts = run_simulate(config); break;
    case Mode::pool_select: artifacts = run_pool_select(config); break;
    case Mode::diagnose: artifacts = run_diagnose(config); break;
    case Mode::generate: artifacts = run_generate(config); break;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_provenance(config, seconds, artifacts);
}

}  // namespace icma
