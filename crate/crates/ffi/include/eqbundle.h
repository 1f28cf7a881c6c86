#ifndef EQBUNDLE_H
#define EQBUNDLE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Status codes. `EQB_STATUS_OK` is zero; everything else is a failure.
 */
typedef enum eqb_status {
  EQB_STATUS_OK = 0,
  EQB_STATUS_NULL_ARGUMENT = 1,
  EQB_STATUS_INVALID_UTF8 = 2,
  EQB_STATUS_SYNTAX = 3,
  EQB_STATUS_SEMANTIC = 4,
  EQB_STATUS_INVALID_INPUT = 5,
  EQB_STATUS_NUMERICAL = 6,
  EQB_STATUS_GEOMETRY = 7,
  EQB_STATUS_CONSISTENCY = 8,
  EQB_STATUS_COCYCLE_VIOLATION = 9,
  EQB_STATUS_SOLVER = 10,
  EQB_STATUS_IO = 11,
  EQB_STATUS_PANIC = 12,
} eqb_status;

/**
 * Outcome of the obstruction pipeline.
 */
typedef enum eqb_verdict {
  EQB_VERDICT_CANCELS = 0,
  EQB_VERDICT_OBSTRUCTED = 2,
  EQB_VERDICT_INCONCLUSIVE = 3,
} eqb_verdict;

/**
 * A parsed and validated scenario.
 */
typedef struct eqb_scenario eqb_scenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string.
 */
const char *eqb_version(void);

/**
 * Message of the last failure on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *eqb_last_error(void);

/**
 * Parses scenario text and builds the bundle.
 *
 * # Safety
 * `source` is a NUL-terminated string; `out` points to writable storage.
 */
enum eqb_status eqb_scenario_load(const char *source, struct eqb_scenario **out);

/**
 * Loads one of the scenarios shipped with the library by name.
 *
 * # Safety
 * `name` is a NUL-terminated string; `out` points to writable storage.
 */
enum eqb_status eqb_scenario_load_bundled(const char *name, struct eqb_scenario **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `scenario` is NULL or a handle from a load call, not yet freed.
 */
void eqb_scenario_free(struct eqb_scenario *scenario);

/**
 * Dimension of the parameter space.
 *
 * # Safety
 * `scenario` is a live handle.
 */
size_t eqb_scenario_dimension(const struct eqb_scenario *scenario);

/**
 * Equivariant holonomy of `word` along a named path (`unit` or a path
 * from the scenario), in `section` (NULL for the reference section).
 *
 * # Safety
 * Pointers are live; strings are NUL-terminated; `out_value` is writable.
 */
enum eqb_status eqb_holonomy(const struct eqb_scenario *scenario,
                             const char *word,
                             const char *path,
                             const char *section,
                             double *out_value);

/**
 * Largest cocycle-law residual over words up to `word_length` at `probes`
 * seeded points.
 *
 * # Safety
 * `scenario` is a live handle; `out_residual` is writable.
 */
enum eqb_status eqb_check_cocycle(const struct eqb_scenario *scenario,
                                  size_t word_length,
                                  size_t probes,
                                  uint64_t seed,
                                  double *out_residual);

/**
 * Runs the obstruction pipeline (`local` selects the lattice pipeline).
 *
 * # Safety
 * `scenario` is a live handle; `out_verdict` is writable.
 */
enum eqb_status eqb_scenario_verdict(const struct eqb_scenario *scenario,
                                     bool local,
                                     uint64_t seed,
                                     enum eqb_verdict *out_verdict);

/**
 * Runs a CLI command (`check-cocycle`, `anomaly`, `curvature`, `verdict`,
 * `verdict-local`, `selftest`) and returns the JSON report.
 *
 * `scenario` is a file path or bundled name (may be NULL for `selftest`).
 * The report is written to `out_json` (free with [`eqb_string_free`]) and
 * the CLI exit code to `out_exit`. Command-level failures are reported
 * inside the JSON with exit code 1, not as a status.
 *
 * # Safety
 * Strings are NUL-terminated or NULL where allowed; outputs are writable.
 */
enum eqb_status eqb_run(const char *command,
                        const char *scenario,
                        uint64_t seed,
                        char **out_json,
                        int32_t *out_exit);

/**
 * Releases a string returned by the library. NULL is ignored.
 *
 * # Safety
 * `s` is NULL or a string from [`eqb_run`], not yet freed.
 */
void eqb_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EQBUNDLE_H */
