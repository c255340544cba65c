#include "icma/icma.h"

#include <exception>
#include <new>
#include <string>

#include "icma/error.hpp"
#include "icma/io.hpp"
#include "icma/run.hpp"

struct icma_config {
  icma::RunConfig config;
};

struct icma_dataset {
  icma::Dataset data;
  std::vector<std::string> ids;
};

struct icma_analysis {
  icma::MediationAnalysis analysis;
};

namespace {

thread_local std::string last_error;

icma_status status_of(icma::ErrorKind k) {
  switch (k) {
    case icma::ErrorKind::config: return ICMA_ERR_CONFIG;
    case icma::ErrorKind::data: return ICMA_ERR_DATA;
    case icma::ErrorKind::numerical: return ICMA_ERR_NUMERICAL;
    case icma::ErrorKind::bootstrap: return ICMA_ERR_BOOTSTRAP;
  }
  return ICMA_ERR_INTERNAL;
}

template <typename F>
icma_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return ICMA_OK;
  } catch (const icma::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return ICMA_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return ICMA_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return ICMA_ERR_INTERNAL;
  }
}

icma_status null_argument(const char* what) {
  last_error = std::string("null argument: ") + what;
  return ICMA_ERR_CONFIG;
}

icma_effect to_c(const icma::Effect& e) { return {e.estimate, e.sd, e.lower, e.upper}; }

}  // namespace

extern "C" {

const char* icma_version(void) { return icma::kVersion; }

const char* icma_status_name(icma_status status) {
  switch (status) {
    case ICMA_OK: return "ok";
    case ICMA_ERR_CONFIG: return "config";
    case ICMA_ERR_DATA: return "data";
    case ICMA_ERR_NUMERICAL: return "numerical";
    case ICMA_ERR_BOOTSTRAP: return "bootstrap";
    case ICMA_ERR_INTERNAL: break;
  }
  return "internal";
}

const char* icma_last_error(void) { return last_error.c_str(); }

icma_status icma_config_new(icma_config** out) {
  if (!out) return null_argument("out");
  return guarded([&] { *out = new icma_config{}; });
}

void icma_config_free(icma_config* config) { delete config; }

icma_status icma_config_set(icma_config* config, const char* key, const char* value) {
  if (!config || !key || !value) return null_argument("config, key or value");
  return guarded([&] { config->config.set(key, value); });
}

icma_status icma_config_load(icma_config* config, const char* path) {
  if (!config || !path) return null_argument("config or path");
  return guarded([&] { config->config.load(path); });
}

icma_status icma_run(const icma_config* config) {
  if (!config) return null_argument("config");
  return guarded([&] { icma::run(config->config); });
}

icma_status icma_dataset_load(const char* scalars, const char* tensors, icma_dataset** out) {
  if (!scalars || !tensors || !out) return null_argument("scalars, tensors or out");
  return guarded([&] {
    icma::LoadedDataset in = icma::ingest(scalars, tensors);
    *out = new icma_dataset{std::move(in.data), std::move(in.ids)};
  });
}

icma_status icma_dataset_simulate(int scenario, size_t n, uint64_t seed, size_t replicate, icma_dataset** out) {
  if (!out) return null_argument("out");
  return guarded([&] {
    icma::ScenarioSpec spec;
    spec.scenario = scenario;
    spec.n = n;
    spec.seed = seed;
    icma::Dataset d = icma::generate(spec, replicate);
    std::vector<std::string> ids = icma::default_ids(d.units());
    *out = new icma_dataset{std::move(d), std::move(ids)};
  });
}

icma_status icma_dataset_save(const icma_dataset* dataset, const char* scalars, const char* tensors) {
  if (!dataset || !scalars || !tensors) return null_argument("dataset, scalars or tensors");
  return guarded([&] { icma::emit(dataset->data, dataset->ids, scalars, tensors); });
}

icma_status icma_dataset_shape(const icma_dataset* dataset, size_t* units, size_t dims[3], size_t* covariates) {
  if (!dataset) return null_argument("dataset");
  if (units) *units = dataset->data.units();
  if (dims) {
    dims[0] = dataset->data.dims.n1;
    dims[1] = dataset->data.dims.n2;
    dims[2] = dataset->data.dims.n3;
  }
  if (covariates) *covariates = dataset->data.covariate_count();
  last_error.clear();
  return ICMA_OK;
}

void icma_dataset_free(icma_dataset* dataset) { delete dataset; }

icma_status icma_analyze(const icma_dataset* dataset, const icma_config* config, icma_analysis** out) {
  if (!dataset || !out) return null_argument("dataset or out");
  return guarded([&] {
    const icma::RunConfig defaults;
    const icma::RunConfig& c = config ? config->config : defaults;
    c.validate_analysis();
    *out = new icma_analysis{icma::analyze(dataset->data, c.analysis_options(c.intercepts_for_data()))};
  });
}

icma_status icma_analysis_effects(const icma_analysis* analysis, icma_effects* out) {
  if (!analysis || !out) return null_argument("analysis or out");
  const icma::MediationReport& r = analysis->analysis.report;
  out->total = to_c(r.total);
  out->direct = to_c(r.direct);
  out->indirect = to_c(r.indirect);
  out->direct_p = r.direct_p;
  for (int k = 0; k < 3; ++k) out->ranks[k] = r.ranks[static_cast<std::size_t>(k)];
  out->significant = r.significant_count();
  out->replicates = r.replicates;
  out->failed = r.failed;
  last_error.clear();
  return ICMA_OK;
}

icma_status icma_analysis_locus(const icma_analysis* analysis, size_t p1, size_t p2, size_t p3, icma_locus* out) {
  if (!analysis || !out) return null_argument("analysis or out");
  const icma::MediationReport& r = analysis->analysis.report;
  if (p1 >= r.dims.n1 || p2 >= r.dims.n2 || p3 >= r.dims.n3) {
    last_error = "locus out of range";
    return ICMA_ERR_DATA;
  }
  const std::size_t k = r.alpha.offset(p1, p2, p3);
  out->alpha = r.alpha.values()[k];
  out->beta = r.beta.values()[k];
  out->alpha_beta = r.alpha_beta.values()[k];
  out->sd_alpha = r.sd_alpha.values()[k];
  out->sd_beta = r.sd_beta.values()[k];
  out->p_raw = r.p_raw.values()[k];
  out->p_adjusted = r.p_adjusted.values()[k];
  out->significant = r.significant[k] ? 1 : 0;
  last_error.clear();
  return ICMA_OK;
}

icma_status icma_analysis_write(const icma_analysis* analysis, const char* directory) {
  if (!analysis || !directory) return null_argument("analysis or directory");
  return guarded([&] {
    const std::filesystem::path dir(directory);
    icma::write_analysis_report(dir / "report.jsonl", analysis->analysis.fit, analysis->analysis.report);
    icma::write_locus_table(dir / "loci.csv", analysis->analysis.report);
  });
}

void icma_analysis_free(icma_analysis* analysis) { delete analysis; }

}  // extern "C"
