#ifndef PAIRINDEX_H
#define PAIRINDEX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Box boundary condition.
typedef enum PixBoundary {
  PIX_BOUNDARY_OPEN = 0,
  PIX_BOUNDARY_PERIODIC = 1,
} PixBoundary;

// Haldane flux orientation.
typedef enum PixChirality {
  PIX_CHIRALITY_PLUS = 0,
  PIX_CHIRALITY_MINUS = 1,
} PixChirality;

// Status codes returned by every fallible function.
typedef enum PixStatus {
  PIX_STATUS_OK = 0,
  PIX_STATUS_NULL_POINTER = 1,
  PIX_STATUS_DOMAIN = 2,
  PIX_STATUS_CONFIG = 3,
  PIX_STATUS_GAP_CLOSED = 4,
  PIX_STATUS_PRECONDITION = 5,
  PIX_STATUS_TIME_REVERSAL_VIOLATED = 6,
  PIX_STATUS_NUMERICAL = 7,
  PIX_STATUS_IO = 8,
  PIX_STATUS_PANIC = 9,
} PixStatus;

// Opaque Hamiltonian on an L×L box.
typedef struct PixModel PixModel;

// Index of the pair of projections with the flux at the central dual point.
typedef struct PixIndexReport {
  int64_t chern;
  uint8_t z2;
  uintptr_t n_plus;
  uintptr_t n_minus;
  double trace_a3;
  double residual;
  double count_defect;
  double delta;
  bool ambiguous_window;
  bool passes_quality_gate;
} PixIndexReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer stays
// valid until the next call into this library on the same thread.
const char *pix_last_error(void);

// Library version as a static NUL-terminated string.
const char *pix_version(void);

// Spinless Haldane model on an L×L box.
//
// # Safety
// `out` must be NULL or valid for writing one pointer.
enum PixStatus pix_model_new_haldane(double t,
                                     double t_prime,
                                     double lambda_v,
                                     enum PixChirality chir,
                                     uintptr_t size,
                                     enum PixBoundary bc,
                                     struct PixModel **out);

// Kane-Mele model with Rashba coupling and on-site disorder of amplitude
// `disorder_w` drawn from `seed`.
//
// # Safety
// `out` must be NULL or valid for writing one pointer.
enum PixStatus pix_model_new_kane_mele(double t,
                                       double t_prime,
                                       double lambda_v,
                                       double lambda_r,
                                       double disorder_w,
                                       uint64_t seed,
                                       uintptr_t size,
                                       enum PixBoundary bc,
                                       struct PixModel **out);

// Release a model. NULL is ignored.
//
// # Safety
// `model` must be NULL or a handle from `pix_model_new_*` not yet freed.
void pix_model_free(struct PixModel *model);

// Hilbert-space dimension of the model, 0 for NULL.
//
// # Safety
// `model` must be NULL or a live handle.
uintptr_t pix_model_dim(const struct PixModel *model);

// Gap of the spectrum at `e_f`.
//
// # Safety
// `model` must be a live handle and `out` valid for writing one double.
enum PixStatus pix_spectral_gap(const struct PixModel *model, double e_f, double *out);

// Eigenvalues of the Hamiltonian in ascending order into `buf`, which holds
// `len` doubles and must hold at least `pix_model_dim` of them.
//
// # Safety
// `model` must be a live handle and `buf` valid for writing `len` doubles.
enum PixStatus pix_spectrum(const struct PixModel *model, double *buf, uintptr_t len);

// Index report of an open-box model at Fermi energy `e_f` with window
// half-width `delta`.
//
// # Safety
// `model` must be a live handle and `out` valid for writing one report.
enum PixStatus pix_index_report(const struct PixModel *model,
                                double e_f,
                                double delta,
                                struct PixIndexReport *out);

// Lattice Chern number of the clean Haldane model's lower band on an n×n grid.
//
// # Safety
// `out` must be valid for writing one integer.
enum PixStatus pix_chern_lattice(double t,
                                 double t_prime,
                                 double lambda_v,
                                 enum PixChirality chir,
                                 uintptr_t n,
                                 int64_t *out);

// Z₂ index of the clean Kane-Mele model over the effective Brillouin zone
// on an n×n grid (n even).
//
// # Safety
// `out` must be valid for writing one byte.
enum PixStatus pix_z2_ebz(double t,
                          double t_prime,
                          double lambda_v,
                          double lambda_r,
                          uintptr_t n,
                          uint8_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PAIRINDEX_H */
