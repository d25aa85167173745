#ifndef AKGEO_H
#define AKGEO_H

/* Generated by cbindgen from the akgeo-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every C-visible call.
typedef enum AkgeoStatus {
  // Success.
  AKGEO_STATUS_OK = 0,
  // A required pointer argument was null.
  AKGEO_STATUS_NULL_ARGUMENT = 1,
  // Malformed input: bad UTF-8, bad JSON, or parameters outside the
  // admissible domain.
  AKGEO_STATUS_INVALID_ARGUMENT = 2,
  // The geometry pipeline reported an error; see `akgeo_last_error`.
  AKGEO_STATUS_COMPUTE_FAILED = 3,
  // An output buffer is smaller than the required element count.
  AKGEO_STATUS_BUFFER_TOO_SMALL = 4,
  // The handle has no data of the requested kind (for example plurigenera
  // of a manifold outside the deformation family).
  AKGEO_STATUS_UNSUPPORTED = 5,
  // An internal panic was caught at the boundary.
  AKGEO_STATUS_PANIC = 6,
} AkgeoStatus;

// Analysis results behind an opaque pointer.
typedef struct AkgeoAnalysis AkgeoAnalysis;

// Analyzes the 4-dimensional nilmanifold family member with parameter `a`.
//
// # Safety
// `out` must be a valid pointer to an `AkgeoAnalysis*`; on success it
// receives a handle that must be released with `akgeo_analysis_free`.
enum AkgeoStatus akgeo_analyze_kodaira_thurston(double a, struct AkgeoAnalysis **out);

// Analyzes the 6-dimensional deformed quotient at parameters `t[0..4]`.
//
// # Safety
// `t` must point to four doubles; `out` must be a valid pointer to an
// `AkgeoAnalysis*` and receives a handle to free with
// `akgeo_analysis_free`.
enum AkgeoStatus akgeo_analyze_nakamura(const double *t, struct AkgeoAnalysis **out);

// Analyzes a manifold given as a JSON description (same schema as the CLI
// accepts from files).
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be a valid pointer to
// an `AkgeoAnalysis*` and receives a handle to free with
// `akgeo_analysis_free`.
enum AkgeoStatus akgeo_analyze_json(const char *json, struct AkgeoAnalysis **out);

// Releases a handle. Passing null is a no-op.
//
// # Safety
// `handle` must be null or a pointer obtained from an analyze call that has
// not been freed yet.
void akgeo_analysis_free(struct AkgeoAnalysis *handle);

// Real dimension of the analyzed quotient.
//
// # Safety
// `handle` must be a live analysis handle and `out` a valid pointer.
enum AkgeoStatus akgeo_dimension(const struct AkgeoAnalysis *handle, size_t *out);

// Classification flags, written as 0/1 into any non-null out-pointers.
//
// # Safety
// `handle` must be a live analysis handle; each out-pointer is either null
// (skipped) or valid.
enum AkgeoStatus akgeo_classification(const struct AkgeoAnalysis *handle,
                                      int32_t *integrable,
                                      int32_t *almost_kahler,
                                      int32_t *quasi_kahler);

// Scalar curvature of the canonical connection in the real trace
// convention.
//
// # Safety
// `handle` must be a live analysis handle and `out` a valid pointer.
enum AkgeoStatus akgeo_scalar_real(const struct AkgeoAnalysis *handle, double *out);

// Scalar curvature contracted in the unitary frame.
//
// # Safety
// `handle` must be a live analysis handle and `out` a valid pointer.
enum AkgeoStatus akgeo_scalar_complex(const struct AkgeoAnalysis *handle, double *out);

// Copies the real Ricci matrix row-major into `buffer` (`len` doubles,
// needs `dim * dim`).
//
// # Safety
// `handle` must be a live analysis handle and `buffer` must point to at
// least `len` writable doubles.
enum AkgeoStatus akgeo_ricci_real(const struct AkgeoAnalysis *handle, double *buffer, size_t len);

// Copies the complex Ricci matrix row-major into `re`/`im` (`len` doubles
// each, needs `n * n` where `n = dim / 2`).
//
// # Safety
// `handle` must be a live analysis handle; `re` and `im` must each point to
// at least `len` writable doubles.
enum AkgeoStatus akgeo_ricci_complex(const struct AkgeoAnalysis *handle,
                                     double *re,
                                     double *im,
                                     size_t len);

// The m-th plurigenus (0 or 1). Only deformation-family manifolds carry
// plurigenus data; anything else returns `Unsupported`.
//
// # Safety
// `handle` must be a live analysis handle and `out` a valid pointer.
enum AkgeoStatus akgeo_plurigenus(const struct AkgeoAnalysis *handle, uint32_t m, uint8_t *out);

// Kodaira dimension: 0 stays 0, minus infinity is encoded as `INT32_MIN`.
// Only defined for the deformation family.
//
// # Safety
// `handle` must be a live analysis handle and `out` a valid pointer.
enum AkgeoStatus akgeo_kodaira_dimension(const struct AkgeoAnalysis *handle, int32_t *out);

// Full JSON report, allocated by this library; release it with
// `akgeo_string_free`.
//
// # Safety
// `handle` must be a live analysis handle and `out` a valid pointer to a
// `char*`.
enum AkgeoStatus akgeo_report_json(const struct AkgeoAnalysis *handle, char **out);

// Frees a string returned by this library. Passing null is a no-op.
//
// # Safety
// `s` must be null or a pointer returned by `akgeo_report_json` that has
// not been freed yet.
void akgeo_string_free(char *s);

// Message describing the most recent failure on this thread. The pointer
// stays valid until the next failing call on the same thread.
const char *akgeo_last_error(void);

#endif  /* AKGEO_H */
