#ifndef KWLAB_H
#define KWLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every fallible call.
 */
typedef enum KwStatus {
  KW_STATUS_OK = 0,
  KW_STATUS_INVALID_PARAMETER = 1,
  KW_STATUS_UNSUPPORTED = 2,
  KW_STATUS_OUT_OF_RANGE = 3,
  KW_STATUS_NOT_A_LEVEL = 4,
  KW_STATUS_GRID_TOO_COARSE = 5,
  KW_STATUS_TOLERANCE = 6,
  KW_STATUS_NUMERIC = 7,
  KW_STATUS_UNKNOWN_EXPERIMENT = 8,
  KW_STATUS_IO = 9,
  KW_STATUS_SERIALIZATION = 10,
  KW_STATUS_NULL_POINTER = 11,
  KW_STATUS_INVALID_UTF8 = 12,
  KW_STATUS_PANIC = 13,
} KwStatus;

/*
 Opaque ladder engine over one model pair.
 */
typedef struct KwEngine KwEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null if none.
 The pointer stays valid until the next failing call on the same thread.
 */
const char *kw_last_error(void);

/*
 Library version, a static nul-terminated string.
 */
const char *kw_version(void);

/*
 Build an engine for `model` (`torus2`, `torus3`, `torus3d2`, `sphere2`,
 `sphere3`) with spectra up to `lambda_max`.

 # Safety
 `model` must be a valid nul-terminated string and `out` a valid pointer.
 The handle written to `out` must be released with `kw_engine_free`.
 */
enum KwStatus kw_engine_new(const char *model, double lambda_max, struct KwEngine **out);

/*
 Release an engine. Null is ignored.

 # Safety
 `engine` must come from `kw_engine_new` and not be used afterwards.
 */
void kw_engine_free(struct KwEngine *engine);

/*
 Sharp ladder sum `sum_{lambda_j <= lambda} sum_{|mu_k - c lambda_j| <= eps} W`.
 `c` is a slope expression such as `3/5` or `sqrt(1/2)`.

 # Safety
 `engine` must be a live handle, `c` a nul-terminated string, `out` valid.
 */
enum KwStatus kw_sharp_ladder_sum(const struct KwEngine *engine,
                                  const char *c,
                                  double eps,
                                  double lambda,
                                  double *out);

/*
 Exact lattice-pair count behind a torus sharp sum.

 # Safety
 As for `kw_sharp_ladder_sum`.
 */
enum KwStatus kw_sharp_ladder_count(const struct KwEngine *engine,
                                    const char *c,
                                    double eps,
                                    double lambda,
                                    uint64_t *out);

/*
 Sharp jump at the single level `lambda_j`.

 # Safety
 As for `kw_sharp_ladder_sum`.
 */
enum KwStatus kw_jump_at(const struct KwEngine *engine,
                         const char *c,
                         double eps,
                         double lambda_j,
                         double *out);

/*
 Fuzzy ladder sum with a window descriptor (`bump:<a>`,
 `comb:<a>,<spacing>,<teeth>`, `mollified:<T>,<eps>`). Writes the value and
 the bound on the truncated mass.

 # Safety
 `engine` must be a live handle, `c` and `window` nul-terminated strings,
 `out_value` and `out_bound` valid pointers.
 */
enum KwStatus kw_fuzzy_ladder_sum(const struct KwEngine *engine,
                                  const char *c,
                                  const char *window,
                                  double lambda,
                                  double *out_value,
                                  double *out_bound);

/*
 Run a registered experiment. `config_toml` holds any subset of the
 configuration keys and must name the experiment. Writes the number of
 failed verdict rows to `out_failed`.

 # Safety
 `config_toml` must be a nul-terminated string and `out_failed` valid.
 */
enum KwStatus kw_run_experiment(const char *config_toml, uint32_t *out_failed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KWLAB_H */
