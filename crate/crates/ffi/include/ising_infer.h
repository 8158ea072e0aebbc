#ifndef ISING_INFER_H
#define ISING_INFER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum IsingStatus {
  ISING_STATUS_OK = 0,
  ISING_STATUS_NULL_POINTER = 1,
  ISING_STATUS_INVALID_ARGUMENT = 2,
  ISING_STATUS_CAPACITY = 3,
  ISING_STATUS_CONSTRUCTION = 4,
  ISING_STATUS_NUMERIC = 5,
  ISING_STATUS_DOMAIN = 6,
  ISING_STATUS_UNSUPPORTED = 7,
  ISING_STATUS_BUFFER_TOO_SMALL = 8,
  ISING_STATUS_PANIC = 9,
} IsingStatus;

typedef enum IsingFamily {
  ISING_FAMILY_COMPLETE = 0,
  ISING_FAMILY_BIPARTITE = 1,
  // `param` is the class count `q`.
  ISING_FAMILY_Q_PARTITE = 2,
  // `param` is the class count `q`.
  ISING_FAMILY_CYCLIC_Q_PARTITE = 3,
  // `param` is the degree `d`.
  ISING_FAMILY_RANDOM_REGULAR = 4,
} IsingFamily;

// Opaque coupling matrix.
typedef struct IsingCoupling IsingCoupling;

// Opaque critical limit law.
typedef struct IsingCriticalLaw IsingCriticalLaw;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next failing call on the same thread.
const char *ising_last_error_message(void);

void ising_clear_error(void);

// Library version as a static NUL-terminated string.
const char *ising_version(void);

// `splitmix64(splitmix64(master) ^ index)`.
uint64_t ising_derive_seed(uint64_t master, uint64_t index);

// Builds a coupling matrix. `seed` is used by the random regular family only.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum IsingStatus ising_coupling_new(enum IsingFamily family,
                                    size_t n,
                                    size_t param,
                                    uint64_t seed,
                                    struct IsingCoupling **out);

// Builds a custom matrix from `n * n` row-major entries.
//
// # Safety
// `entries` must point to `n * n` readable doubles and `out` to writable storage.
enum IsingStatus ising_coupling_from_dense(size_t n,
                                           const double *entries,
                                           struct IsingCoupling **out);

// # Safety
// `handle` must come from a constructor of this library or be null.
void ising_coupling_free(struct IsingCoupling *handle);

// # Safety
// `handle` must be a live handle and `out` writable.
enum IsingStatus ising_coupling_n(const struct IsingCoupling *handle, size_t *out);

// # Safety
// `handle` must be a live handle and `out` writable.
enum IsingStatus ising_coupling_entry(const struct IsingCoupling *handle,
                                      size_t i,
                                      size_t j,
                                      double *out);

// Writes the `n` eigenvalues, sorted by decreasing absolute value, to `out`.
//
// # Safety
// `handle` must be a live handle and `out` must hold `len` doubles.
enum IsingStatus ising_coupling_eigenvalues(const struct IsingCoupling *handle,
                                            double *out,
                                            size_t len);

// MPLE of `theta`. A nonexistent estimate is reported as `+-inf` with `exists = false`.
//
// # Safety
// `spins` must hold `n` entries; `value` and `exists` must be writable.
enum IsingStatus ising_mple(const struct IsingCoupling *handle,
                            const int8_t *spins,
                            size_t n,
                            double *value,
                            bool *exists);

// Exact MLE; fails with `Capacity` when the model cannot be enumerated.
//
// # Safety
// As for [`ising_mple`].
enum IsingStatus ising_mle_exact(const struct IsingCoupling *handle,
                                 const int8_t *spins,
                                 size_t n,
                                 double *value,
                                 bool *exists);

// Runs Glauber dynamics from a uniform start and writes the final spins.
//
// # Safety
// `out_spins` must hold `n` writable entries.
enum IsingStatus ising_glauber_sample(const struct IsingCoupling *handle,
                                      double theta,
                                      size_t sweeps,
                                      size_t burn_in,
                                      uint64_t seed,
                                      int8_t *out_spins,
                                      size_t n);

// Log-partition function of the Curie-Weiss model with `n` spins.
//
// # Safety
// `out` must be writable.
enum IsingStatus ising_cw_log_z(size_t n, double theta, double *out);

// Positive root of `x = tanh(theta x)`; zero for `theta <= 1`.
//
// # Safety
// `out` must be writable.
enum IsingStatus ising_solve_m(double theta, double *out);

// # Safety
// `out` must be writable.
enum IsingStatus ising_sigma_sq(double theta, double *out);

// # Safety
// `out` must be writable for one handle.
enum IsingStatus ising_critical_law_new(double h, struct IsingCriticalLaw **out);

// # Safety
// `handle` must come from [`ising_critical_law_new`] or be null.
void ising_critical_law_free(struct IsingCriticalLaw *handle);

// # Safety
// `handle` must be live and `out` writable.
enum IsingStatus ising_critical_law_log_normalizer(const struct IsingCriticalLaw *handle,
                                                   double *out);

// # Safety
// `handle` must be live and `out` writable.
enum IsingStatus ising_critical_law_pdf(const struct IsingCriticalLaw *handle,
                                        double u,
                                        double *out);

// # Safety
// `handle` must be live and `out` writable.
enum IsingStatus ising_critical_law_cdf(const struct IsingCriticalLaw *handle,
                                        double u,
                                        double *out);

// # Safety
// `handle` must be live and `out` writable.
enum IsingStatus ising_critical_law_quantile(const struct IsingCriticalLaw *handle,
                                             double p,
                                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISING_INFER_H */
