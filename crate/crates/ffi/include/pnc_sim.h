#ifndef PNC_SIM_H
#define PNC_SIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes.
 */
typedef enum PncStatus {
  PNC_STATUS_OK = 0,
  PNC_STATUS_NULL_POINTER = 1,
  PNC_STATUS_INVALID_ARGUMENT = 2,
  PNC_STATUS_UNKNOWN_PRESET = 3,
  PNC_STATUS_INVALID_CONFIG = 4,
  PNC_STATUS_INTERNAL = 5,
  PNC_STATUS_PANIC = 6,
} PncStatus;

/**
 * Opaque simulator handle.
 */
typedef struct PncSimulator PncSimulator;

/**
 * Aggregate of one SNR point.
 */
typedef struct PncMetrics {
  uint64_t frames;
  uint64_t frame_errors;
  double fer;
  double throughput_bps;
  double t_total_us_mean;
  double t_slot0_us_mean;
  double t3_us;
  double k_ehat_mean;
} PncMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a simulator for a registered preset. `threads == 0` uses
 * `PNC_SIM_THREADS` or the machine's core count.
 *
 * # Safety
 * `preset_name` must be a NUL-terminated string; `out` must be writable.
 */
enum PncStatus pnc_sim_create(const char *preset_name, uint32_t threads, struct PncSimulator **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `sim` must come from [`pnc_sim_create`] and not be used afterwards.
 */
void pnc_sim_destroy(struct PncSimulator *sim);

/**
 * Sets the seed shared by subsequent runs.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum PncStatus pnc_sim_set_seed(struct PncSimulator *sim, uint64_t seed);

/**
 * Sets user B's amplitude and phase mismatch.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum PncStatus pnc_sim_set_precoding(struct PncSimulator *sim, double o_pw, double o_ph);

/**
 * Per-slot SNR offsets in dB (PNC uplink, downlink, P2P uplink, P2P downlink).
 *
 * # Safety
 * `sim` must be a live handle and `offsets` point to four doubles.
 */
enum PncStatus pnc_sim_set_slot_offsets(struct PncSimulator *sim, const double *offsets);

/**
 * Simulates `frames` frames at `snr_db`.
 *
 * # Safety
 * `sim` must be a live handle and `out` writable.
 */
enum PncStatus pnc_sim_run_point(const struct PncSimulator *sim,
                                 double snr_db,
                                 uint64_t frames,
                                 struct PncMetrics *out);

/**
 * Source bits of users A and B per frame.
 *
 * # Safety
 * `sim` must be a live handle; `k_a` and `k_b` writable.
 */
enum PncStatus pnc_sim_source_bits(const struct PncSimulator *sim, size_t *k_a, size_t *k_b);

/**
 * Number of registered presets.
 */
size_t pnc_preset_count(void);

/**
 * Copies the name of preset `index` into `buf` (NUL-terminated, truncated
 * to `len - 1` bytes). Returns the full name length, or 0 when `index`
 * is out of range.
 *
 * # Safety
 * `buf` must be null or hold `len` bytes.
 */
size_t pnc_preset_name(size_t index, char *buf, size_t len);

/**
 * Copies this thread's last error message into `buf` like
 * [`pnc_preset_name`] and returns its full length (0 after a success).
 *
 * # Safety
 * `buf` must be null or hold `len` bytes.
 */
size_t pnc_last_error(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PNC_SIM_H */
