#ifndef EFX_H
#define EFX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Check only the final allocation.
 */
#define EFX_CHECKS_FINAL 0

/**
 * Also check the phase boundaries (the default of the Rust API).
 */
#define EFX_CHECKS_BOUNDARIES 1

/**
 * Also check after every solver step.
 */
#define EFX_CHECKS_EVERY 2

typedef enum EfxStatus {
  EFX_STATUS_OK = 0,
  EFX_STATUS_NULL_POINTER = 1,
  EFX_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed JSON, an invalid instance or allocation, or an unsatisfiable generator spec.
   */
  EFX_STATUS_INVALID_INPUT = 3,
  EFX_STATUS_NOT_TRIANGLE_FREE = 4,
  EFX_STATUS_SEARCH_SPACE_TOO_LARGE = 5,
  /**
   * A solver self-check failed.
   */
  EFX_STATUS_INTERNAL = 6,
  EFX_STATUS_OUT_OF_RANGE = 7,
  EFX_STATUS_PANIC = 8,
} EfxStatus;

/**
 * A parsed instance.
 */
typedef struct EfxInstance EfxInstance;

/**
 * An allocation produced by [`efx_solve`].
 */
typedef struct EfxSolution EfxSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The library version as a static NUL-terminated string.
 */
const char *efx_version(void);

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *efx_last_error_message(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void efx_string_free(char *s);

/**
 * Parses instance JSON into a new handle.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum EfxStatus efx_instance_from_json(const char *json, struct EfxInstance **out);

/**
 * Generates an instance from a generator spec given as JSON, e.g.
 * `{"seed": 1, "n": 6, "m": 12, "topology": "tree", "valuation_class": "additive", "v_max": 50, "max_parallel": 4}`.
 *
 * # Safety
 * `spec_json` must be a NUL-terminated string; `out` must be writable.
 */
enum EfxStatus efx_gen_instance(const char *spec_json,
                                struct EfxInstance **out);

/**
 * Releases an instance. NULL is ignored.
 *
 * # Safety
 * `instance` must come from this library and not have been freed.
 */
void efx_instance_free(struct EfxInstance *instance);

/**
 * # Safety
 * `instance` must be a live handle; `out` must be writable.
 */
enum EfxStatus efx_instance_agent_count(const struct EfxInstance *instance, size_t *out);

/**
 * # Safety
 * `instance` must be a live handle; `out` must be writable.
 */
enum EfxStatus efx_instance_good_count(const struct EfxInstance *instance, size_t *out);

/**
 * Sets `out_found` and, when a triangle exists, writes its agents to `out_agents[0..3]`.
 *
 * # Safety
 * `instance` must be a live handle; `out_agents` must hold 3 entries; `out_found` must be writable.
 */
enum EfxStatus efx_instance_find_triangle(const struct EfxInstance *instance,
                                          size_t *out_agents,
                                          bool *out_found);

/**
 * Serialises an instance; release the result with [`efx_string_free`].
 *
 * # Safety
 * `instance` must be a live handle; `out` must be writable.
 */
enum EfxStatus efx_instance_to_json(const struct EfxInstance *instance, char **out);

/**
 * Solves an instance. `checks` is one of the `EFX_CHECKS_*` constants.
 *
 * # Safety
 * `instance` must be a live handle; `out` must be writable.
 */
enum EfxStatus efx_solve(const struct EfxInstance *instance,
                         uint32_t checks,
                         struct EfxSolution **out);

/**
 * Releases a solution. NULL is ignored.
 *
 * # Safety
 * `solution` must come from this library and not have been freed.
 */
void efx_solution_free(struct EfxSolution *solution);

/**
 * Goods held by `agent`, ascending. Writes at most `cap` ids to `buf` and the
 * bundle size to `out_len`; pass `cap = 0` to query the size.
 *
 * # Safety
 * `solution` must be a live handle; `buf` must hold `cap` entries; `out_len` must be writable.
 */
enum EfxStatus efx_solution_bundle(const struct EfxSolution *solution,
                                   size_t agent,
                                   size_t *buf,
                                   size_t cap,
                                   size_t *out_len);

/**
 * The picking sequence, in the same buffer convention as [`efx_solution_bundle`].
 *
 * # Safety
 * `solution` must be a live handle; `buf` must hold `cap` entries; `out_len` must be writable.
 */
enum EfxStatus efx_solution_sigma(const struct EfxSolution *solution,
                                  size_t *buf,
                                  size_t cap,
                                  size_t *out_len);

/**
 * Allocation JSON (with `sigma`), as printed by `efx solve`.
 *
 * # Safety
 * `solution` must be a live handle; `out` must be writable.
 */
enum EfxStatus efx_solution_to_json(const struct EfxSolution *solution, char **out);

/**
 * Run metrics as a JSON object.
 *
 * # Safety
 * `solution` must be a live handle; `out` must be writable.
 */
enum EfxStatus efx_solution_metrics_json(const struct EfxSolution *solution, char **out);

/**
 * Whether an allocation (as JSON) has no strong envy.
 *
 * # Safety
 * `instance` must be a live handle; `allocation_json` NUL-terminated; `out_passed` writable.
 */
enum EfxStatus efx_check_efx(const struct EfxInstance *instance,
                             const char *allocation_json,
                             bool *out_passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EFX_H */
