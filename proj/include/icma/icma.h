/* C interface to the image causal mediation library.
 *
 * Every function returning icma_status reports failures through the status
 * code; icma_last_error() then holds a one-line description for the calling
 * thread. Handles are opaque and must be released with their _free function.
 */
#ifndef ICMA_ICMA_H
#define ICMA_ICMA_H

#include <stddef.h>
#include <stdint.h>

#if defined(ICMA_BUILDING_LIBRARY)
#define ICMA_API __attribute__((visibility("default")))
#else
#define ICMA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum icma_status {
  ICMA_OK = 0,
  ICMA_ERR_INTERNAL = 1,
  ICMA_ERR_CONFIG = 2,
  ICMA_ERR_DATA = 3,
  ICMA_ERR_NUMERICAL = 4,
  ICMA_ERR_BOOTSTRAP = 5
} icma_status;

typedef struct icma_config icma_config;
typedef struct icma_dataset icma_dataset;
typedef struct icma_analysis icma_analysis;

typedef struct icma_effect {
  double estimate;
  double sd;
  double lower;
  double upper;
} icma_effect;

typedef struct icma_effects {
  icma_effect total;
  icma_effect direct;
  icma_effect indirect;
  double direct_p;
  size_t ranks[3];
  size_t significant;
  size_t replicates;
  size_t failed;
} icma_effects;

typedef struct icma_locus {
  double alpha;
  double beta;
  double alpha_beta;
  double sd_alpha;
  double sd_beta;
  double p_raw;
  double p_adjusted;
  int significant;
} icma_locus;

ICMA_API const char* icma_version(void);
/* "config", "data", "numerical", "bootstrap", "internal" or "ok". */
ICMA_API const char* icma_status_name(icma_status status);
ICMA_API const char* icma_last_error(void);

ICMA_API icma_status icma_config_new(icma_config** out);
ICMA_API void icma_config_free(icma_config* config);
/* Keys are the long CLI flag names without dashes, e.g. "bootstrap", "pool". */
ICMA_API icma_status icma_config_set(icma_config* config, const char* key, const char* value);
ICMA_API icma_status icma_config_load(icma_config* config, const char* path);
ICMA_API icma_status icma_run(const icma_config* config);

ICMA_API icma_status icma_dataset_load(const char* scalars, const char* tensors, icma_dataset** out);
/* One replicate of a simulation scenario (1-5) at 8x8x8. */
ICMA_API icma_status icma_dataset_simulate(int scenario, size_t n, uint64_t seed, size_t replicate,
                                           icma_dataset** out);
ICMA_API icma_status icma_dataset_save(const icma_dataset* dataset, const char* scalars, const char* tensors);
ICMA_API icma_status icma_dataset_shape(const icma_dataset* dataset, size_t* units, size_t dims[3],
                                        size_t* covariates);
ICMA_API void icma_dataset_free(icma_dataset* dataset);

/* Fit, bootstrap and test using the options of `config` (may be NULL for defaults). */
ICMA_API icma_status icma_analyze(const icma_dataset* dataset, const icma_config* config, icma_analysis** out);
ICMA_API icma_status icma_analysis_effects(const icma_analysis* analysis, icma_effects* out);
/* 0-based locus coordinates. */
ICMA_API icma_status icma_analysis_locus(const icma_analysis* analysis, size_t p1, size_t p2, size_t p3,
                                         icma_locus* out);
/* Writes report.jsonl and loci.csv into `directory`. */
ICMA_API icma_status icma_analysis_write(const icma_analysis* analysis, const char* directory);
ICMA_API void icma_analysis_free(icma_analysis* analysis);

#ifdef __cplusplus
}
#endif

#endif
