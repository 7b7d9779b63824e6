#ifndef PDFADE_H
#define PDFADE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define PDF_METHOD_APPROX1 1

#define PDF_METHOD_APPROX2 2

#define PDF_METHOD_APPROX3 3

#define PDF_METHOD_APPROX4 4

#define PDF_METHOD_MONTE_CARLO 5

/*
 Result code of every fallible call.
 */
typedef enum PdfStatus {
  PDF_STATUS_OK = 0,
  PDF_STATUS_NULL_POINTER = 1,
  PDF_STATUS_INVALID_ARGUMENT = 2,
  PDF_STATUS_DOMAIN = 3,
  PDF_STATUS_CONSTRAINT = 4,
  PDF_STATUS_NUMERIC = 5,
  PDF_STATUS_PANIC = 6,
} PdfStatus;

/*
 The evaluated grid of one optimization, in increasing `rc`.
 */
typedef struct PdfOptimization PdfOptimization;

/*
 System parameters and quadrature settings.
 */
typedef struct PdfSystem PdfSystem;

/*
 One evaluated rate split.
 */
typedef struct PdfPoint {
  double rc;
  double re;
  uint64_t n;
  double p_e;
  double phi_argument;
  double log10_q;
} PdfPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty if none. The
 pointer stays valid until the next failing call on the same thread.
 */
const char *pdf_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *pdf_version(void);

/*
 Validates and stores a system. Power is given in dB.

 # Safety
 `out` must be a valid pointer to writable storage for one handle.
 */
enum PdfStatus pdf_system_new(uint64_t m,
                              uint64_t m_hat,
                              double k,
                              double l_f,
                              double t,
                              double power_db,
                              double epsilon,
                              struct PdfSystem **out);

/*
 Releases a system handle. Null is ignored.

 # Safety
 `system` must be null or a handle from [`pdf_system_new`] not yet freed.
 */
void pdf_system_free(struct PdfSystem *system);

/*
 Packet-erasure probability at channel rate `rc`. `trials` and `seed` are
 used only by the Monte Carlo method.

 # Safety
 `system` must be a live handle and `out_p_e` a valid writable pointer.
 */
enum PdfStatus pdf_outage_probability(const struct PdfSystem *system,
                                      uint32_t method,
                                      double rc,
                                      uint64_t trials,
                                      uint64_t seed,
                                      double *out_p_e);

/*
 `log10 q` for `n` packets of which `m_hat` must survive, each lost with
 probability `p_e`: exact binomial when `exact`, otherwise the Gaussian form.

 # Safety
 `out_log10_q` must be a valid writable pointer.
 */
enum PdfStatus pdf_message_error_log10(uint64_t n,
                                       uint64_t m_hat,
                                       double p_e,
                                       bool exact,
                                       double *out_log10_q);

/*
 Exhaustive search for the split minimizing the message-error
 probability. The Monte Carlo method additionally needs
 `allow_mc_search` and at least 100000 `trials`.

 # Safety
 `system` must be a live handle and `out` a valid writable pointer.
 */
enum PdfStatus pdf_optimize(const struct PdfSystem *system,
                            uint32_t method,
                            uint64_t trials,
                            uint64_t seed,
                            bool allow_mc_search,
                            struct PdfOptimization **out);

/*
 Number of grid points in a result; 0 for null.

 # Safety
 `result` must be null or a live handle.
 */
size_t pdf_optimization_len(const struct PdfOptimization *result);

/*
 The optimal split.

 # Safety
 `result` must be a live handle and `out` a valid writable pointer.
 */
enum PdfStatus pdf_optimization_best(const struct PdfOptimization *result, struct PdfPoint *out);

/*
 Grid point `index`, in increasing `rc`.

 # Safety
 `result` must be a live handle and `out` a valid writable pointer.
 */
enum PdfStatus pdf_optimization_point(const struct PdfOptimization *result,
                                      size_t index,
                                      struct PdfPoint *out);

/*
 Releases an optimization result. Null is ignored.

 # Safety
 `result` must be null or a handle from [`pdf_optimize`] not yet freed.
 */
void pdf_optimization_free(struct PdfOptimization *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PDFADE_H */
