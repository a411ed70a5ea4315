#ifndef FPGA3D_H
#define FPGA3D_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Opaque metrics handle.
 */
typedef struct Fpga3dMetrics Fpga3dMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *fpga3d_last_error(void);

/**
 * Run the full flow.
 *
 * `tiers` = 0 keeps the architecture file's tier count; `width` = 0 runs
 * the minimum-channel-width search. On success `*out` owns a metrics
 * handle that must be released with `fpga3d_metrics_free`.
 *
 * # Safety
 * `arch_path`, `blif_path` and `out_dir` must be valid NUL-terminated
 * strings; `out` must be a valid writable pointer.
 */
int32_t fpga3d_run(const char *arch_path,
                   const char *blif_path,
                   const char *out_dir,
                   uint64_t seed,
                   uint32_t tiers,
                   uint32_t width,
                   struct Fpga3dMetrics **out);

/**
 * Release a metrics handle. Null is a no-op.
 *
 * # Safety
 * `m` must be a handle from `fpga3d_run` not yet freed, or null.
 */
void fpga3d_metrics_free(struct Fpga3dMetrics *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FPGA3D_H */
