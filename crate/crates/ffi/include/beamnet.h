#ifndef BEAMNET_H
#define BEAMNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BnStatus {
  BN_STATUS_OK = 0,
  BN_STATUS_NULL_POINTER = 1,
  /**
   * Argument outside the domain of the operation, or a size mismatch.
   */
  BN_STATUS_INVALID_ARGUMENT = 2,
  BN_STATUS_CONFIG = 3,
  BN_STATUS_IO = 4,
  /**
   * Caller buffer is too small; the required length was written back.
   */
  BN_STATUS_BUFFER_TOO_SMALL = 5,
  BN_STATUS_INTERNAL = 6,
} BnStatus;

/**
 * Designed pilot sequence.
 */
typedef struct BnPilot BnPilot;

/**
 * Round schedule of a network alignment.
 */
typedef struct BnPlan BnPlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next call into the library from the same thread.
 */
const char *bn_last_error(void);

/**
 * Static NUL-terminated library version.
 */
const char *bn_version(void);

/**
 * Designs the comb pilot with `ms` active bins and index `k` in a length-`m`
 * sequence of energy `energy`. The weight search is seeded by `seed`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum BnStatus bn_pilot_design(size_t m,
                              size_t ms,
                              size_t k,
                              double energy,
                              uint64_t seed,
                              struct BnPilot **out);

/**
 * Number of samples `M`, or 0 for a null handle.
 *
 * # Safety
 * `pilot` must be null or a live handle from [`bn_pilot_design`].
 */
size_t bn_pilot_length(const struct BnPilot *pilot);

/**
 * Time-domain samples as separate real and imaginary arrays of `cap` entries.
 *
 * # Safety
 * `pilot` must be a live handle; `re` and `im` must hold `cap` doubles and
 * `len` must be writable.
 */
enum BnStatus bn_pilot_samples(const struct BnPilot *pilot,
                               double *re,
                               double *im,
                               size_t cap,
                               size_t *len);

/**
 * Active bin indices in increasing order.
 *
 * # Safety
 * `pilot` must be a live handle; `bins` must hold `cap` entries and `len`
 * must be writable.
 */
enum BnStatus bn_pilot_active_bins(const struct BnPilot *pilot,
                                   size_t *bins,
                                   size_t cap,
                                   size_t *len);

/**
 * # Safety
 * `pilot` must be null or a handle not freed before.
 */
void bn_pilot_free(struct BnPilot *pilot);

/**
 * Schedule covering every pair of `k` devices.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum BnStatus bn_plan_create(size_t k, struct BnPlan **out);

/**
 * Number of rounds, or 0 for a null handle.
 *
 * # Safety
 * `plan` must be null or a live handle from [`bn_plan_create`].
 */
size_t bn_plan_num_rounds(const struct BnPlan *plan);

/**
 * Transmitters and receivers of one round. Each list goes to its own
 * buffer of `cap` entries; `n_tx` and `n_rx` receive the list lengths.
 *
 * # Safety
 * `plan` must be a live handle; the buffers must hold `cap` entries and the
 * length pointers must be writable.
 */
enum BnStatus bn_plan_round(const struct BnPlan *plan,
                            size_t round,
                            size_t *tx,
                            size_t *n_tx,
                            size_t *rx,
                            size_t *n_rx,
                            size_t cap);

/**
 * # Safety
 * `plan` must be null or a handle not freed before.
 */
void bn_plan_free(struct BnPlan *plan);

/**
 * Runs the Monte-Carlo sweep described by a TOML configuration and writes
 * the record and aggregate CSV tables into `out_dir`.
 *
 * # Safety
 * Both arguments must be valid NUL-terminated strings.
 */
enum BnStatus bn_run_sweep(const char *config_toml, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BEAMNET_H */
