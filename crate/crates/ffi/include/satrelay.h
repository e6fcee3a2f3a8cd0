/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef SATRELAY_H
#define SATRELAY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SAT_BRANCH_CLOUD_LASER 0

#define SAT_BRANCH_RAIN 1

#define SAT_BRANCH_CLOUD_RF 2

#define SAT_BRANCH_FOG 3

// Result code of every exported function.
typedef enum SatStatus {
  SAT_STATUS_OK = 0,
  SAT_STATUS_NULL_POINTER = 1,
  SAT_STATUS_INVALID_UTF8 = 2,
  SAT_STATUS_INVALID_PARAMETER = 3,
  SAT_STATUS_DEGENERATE_CHAIN = 4,
  SAT_STATUS_INCONSISTENT = 5,
  SAT_STATUS_CONFIG = 6,
  SAT_STATUS_IO = 7,
  SAT_STATUS_BUFFER_TOO_SMALL = 8,
  SAT_STATUS_INTERNAL = 9,
} SatStatus;

// Opaque per-weather scenario.
typedef struct SatScenario SatScenario;

// Laser-downlink chain inputs. Capacities in bit/s, timeouts in seconds.
typedef struct SatLaserParams {
  double rho_ss;
  double rho_sg;
  double alpha;
  uint64_t buffer_packets;
  double packet_bits;
  double cap_ss_bps;
  double cap_sg_bps;
  double timeout_ss_s;
  double timeout_sg_s;
} SatLaserParams;

typedef struct SatPerf {
  double throughput_bps;
  double avg_queue_bits;
  double drop_prob;
} SatPerf;

// Fluid RF branch inputs, in bits per one-second step.
typedef struct SatFluidParams {
  double beta_bits_per_step;
  double phi_bits_per_step;
  double buffer_bits;
  uint32_t horizon_steps;
} SatFluidParams;

typedef struct SatSimResult {
  uint64_t observed_slots;
  double throughput_bps;
  double throughput_stderr;
  double avg_queue_bits_embedded;
  double avg_queue_stderr;
  double avg_queue_bits_timeweighted;
  double drop_events_per_slot;
  double drop_stderr;
  double drops_per_arrival;
  uint64_t delivered_packets;
  uint64_t dropped_packets;
  double elapsed_model_time_s;
} SatSimResult;

// Operating point applied to a configuration file.
typedef struct SatOperatingPoint {
  double alpha;
  uint64_t buffer_packets;
  double tx_power_dbm;
} SatOperatingPoint;

typedef struct SatWeights {
  double cloud;
  double rain;
  double fog;
} SatWeights;

typedef struct SatWeatherReport {
  struct SatPerf cloud_laser;
  struct SatPerf cloud_rf;
  struct SatPerf cloud;
  struct SatPerf rain;
  struct SatPerf fog;
  struct SatPerf combined;
} SatWeatherReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer stays
// valid until the next call into the library from the same thread.
const char *sat_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *sat_version(void);

// Throughput, mean queue and drop probability of one laser-downlink chain.
//
// # Safety
// `params` and `out` must be valid pointers or NULL.
enum SatStatus sat_laser_metrics(const struct SatLaserParams *params, struct SatPerf *out);

// Stationary distribution `P(0..=L)` of a laser-downlink chain.
//
// `*written` receives `L + 1`. When `capacity` is smaller the call returns
// `BufferTooSmall` and writes nothing to `probs`.
//
// # Safety
// `probs` must point to `capacity` writable doubles; the other pointers must
// be valid or NULL.
enum SatStatus sat_laser_stationary(const struct SatLaserParams *params,
                                    double *probs,
                                    size_t capacity,
                                    size_t *written);

// Metrics of one fluid RF branch.
//
// # Safety
// `params` and `out` must be valid pointers or NULL.
enum SatStatus sat_fluid_metrics(const struct SatFluidParams *params, struct SatPerf *out);

// Monte Carlo run of a laser-downlink chain with the default warm-up and
// batch count. Identical inputs give identical results on every platform.
//
// # Safety
// `params` and `out` must be valid pointers or NULL.
enum SatStatus sat_laser_simulate(const struct SatLaserParams *params,
                                  uint64_t slots,
                                  uint64_t seed,
                                  struct SatSimResult *out);

// Builds a scenario from TOML configuration text. `op` overrides the
// configured operating point when not NULL.
//
// # Safety
// `toml` must be a NUL-terminated string; `out` must be valid or NULL.
enum SatStatus sat_scenario_from_toml(const char *toml,
                                      const struct SatOperatingPoint *op,
                                      struct SatScenario **out);

// Like [`sat_scenario_from_toml`], reading the configuration from a file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be valid or NULL.
enum SatStatus sat_scenario_from_path(const char *path,
                                      const struct SatOperatingPoint *op,
                                      struct SatScenario **out);

// Builds a scenario from explicit branch parameters.
//
// # Safety
// All pointers must be valid or NULL.
enum SatStatus sat_scenario_new(const struct SatLaserParams *cloud_laser,
                                const struct SatFluidParams *cloud_rf,
                                const struct SatLaserParams *rain,
                                const struct SatFluidParams *fog,
                                const struct SatWeights *weights,
                                struct SatScenario **out);

// Releases a scenario. NULL is ignored.
//
// # Safety
// `scenario` must come from one of the constructors and not be used again.
void sat_scenario_free(struct SatScenario *scenario);

// Per-weather and combined metrics of a scenario.
//
// # Safety
// `scenario` must be a live handle or NULL; `out` valid or NULL.
enum SatStatus sat_scenario_evaluate(const struct SatScenario *scenario,
                                     struct SatWeatherReport *out);

// Chain inputs of a laser branch (`SAT_BRANCH_CLOUD_LASER` or
// `SAT_BRANCH_RAIN`).
//
// # Safety
// `scenario` must be a live handle or NULL; `out` valid or NULL.
enum SatStatus sat_scenario_laser_params(const struct SatScenario *scenario,
                                         uint32_t branch,
                                         struct SatLaserParams *out);

// Fluid inputs of an RF branch (`SAT_BRANCH_CLOUD_RF` or `SAT_BRANCH_FOG`).
//
// # Safety
// `scenario` must be a live handle or NULL; `out` valid or NULL.
enum SatStatus sat_scenario_fluid_params(const struct SatScenario *scenario,
                                         uint32_t branch,
                                         struct SatFluidParams *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SATRELAY_H */
