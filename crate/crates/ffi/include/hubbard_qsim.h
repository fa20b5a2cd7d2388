#ifndef HUBBARD_QSIM_H
#define HUBBARD_QSIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HqsStatus {
  HQS_STATUS_OK = 0,
  HQS_STATUS_NULL_POINTER = 1,
  HQS_STATUS_INVALID_ARGUMENT = 2,
  HQS_STATUS_PARSE = 3,
  HQS_STATUS_RESOURCE_LIMIT = 4,
  HQS_STATUS_IO = 5,
  HQS_STATUS_BUFFER_TOO_SMALL = 6,
  HQS_STATUS_INVALID_UTF8 = 7,
  HQS_STATUS_PANIC = 8,
} HqsStatus;

typedef struct HqsModel HqsModel;

typedef struct HqsNoise HqsNoise;

typedef struct HqsIqpeOptions {
  uint32_t m_bits;
  uint32_t trotter_steps;
  uint64_t shots_per_bit;
  uint32_t runs;
  /**
   * Relative padding of the energy window.
   */
  double margin;
  uint64_t seed;
  bool fast_powers;
} HqsIqpeOptions;

typedef struct HqsEnergyEstimate {
  double energy;
  double phi;
  double t;
  double e_lo;
  double e_hi;
  double delta_e;
} HqsEnergyEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *hqs_version(void);

/**
 * Length in bytes of the last error message on this thread, excluding the
 * terminating NUL; 0 if the last call succeeded.
 */
size_t hqs_last_error_length(void);

/**
 * Copies the last error message into `buf` (NUL-terminated, truncated to
 * `len - 1` bytes). Returns the number of bytes written, excluding the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t hqs_last_error_message(char *buf, size_t len);

/**
 * Builds a Hubbard model on a named lattice (`"hexagon6"`, `"triangle"`,
 * `"chain:N"`, `"ring:N"`).
 *
 * # Safety
 * `lattice` must be a NUL-terminated string; `out` must be writable.
 */
enum HqsStatus hqs_model_new(const char *lattice, double gamma0, double u0, struct HqsModel **out);

/**
 * # Safety
 * `model` must be null or a handle from [`hqs_model_new`] not yet freed.
 */
void hqs_model_free(struct HqsModel *model);

/**
 * Number of lattice sites, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t hqs_model_n_sites(const struct HqsModel *model);

/**
 * Exact ground-state energy at fixed electron number.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum HqsStatus hqs_ground_energy(const struct HqsModel *model, size_t n_occ, double *out);

struct HqsIqpeOptions hqs_iqpe_options_default(void);

/**
 * Runs `options.runs` independent IQPE estimates starting from the
 * tight-binding Slater determinant with `n_occ` electrons. `noise` may be
 * null for a noiseless run. `out` must hold at least `options.runs`
 * entries; `out_len` is its capacity.
 *
 * # Safety
 * Pointers must be valid as described; `noise` may be null.
 */
enum HqsStatus hqs_run_iqpe(const struct HqsModel *model,
                            size_t n_occ,
                            const struct HqsIqpeOptions *options,
                            const struct HqsNoise *noise,
                            struct HqsEnergyEstimate *out,
                            size_t out_len);

/**
 * Adiabatic evolution from the tight-binding Slater determinant along the
 * linear schedule of duration `total_time` with step `dt`. Writes the
 * per-site charge and spin densities (`len` must equal the site count) and
 * the final energy expectation.
 *
 * # Safety
 * `charge` and `spin` must be valid for `len` doubles; `energy` writable.
 */
enum HqsStatus hqs_adiabatic_observables(const struct HqsModel *model,
                                         size_t n_occ,
                                         double total_time,
                                         double dt,
                                         double *charge,
                                         double *spin,
                                         size_t len,
                                         double *energy);

/**
 * Reference device noise profile.
 *
 * # Safety
 * `out` must be writable.
 */
enum HqsStatus hqs_noise_baseline(struct HqsNoise **out);

/**
 * Noise profile read from a `key = value` file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum HqsStatus hqs_noise_load(const char *path, struct HqsNoise **out);

/**
 * Multiplies one channel (`"p1q"`, `"p2q"`, `"t1"`, `"t2"`, `"t1t2"`,
 * `"t1q"`, `"t2q"`, `"tmeas"`, `"p01"`, `"p10"`, `"readout"`) by `factor`,
 * or every channel at once with `"strength"`. `clipped` (may be null)
 * reports whether a probability was capped at 1.
 *
 * # Safety
 * `noise` must be a live handle; `field` a NUL-terminated string.
 */
enum HqsStatus hqs_noise_scale(struct HqsNoise *noise,
                               const char *field,
                               double factor,
                               bool *clipped);

/**
 * Selects the simulation backend: `"auto"`, `"trajectories"` or `"density"`.
 *
 * # Safety
 * `noise` must be a live handle; `backend` a NUL-terminated string.
 */
enum HqsStatus hqs_noise_set_backend(struct HqsNoise *noise, const char *backend);

/**
 * # Safety
 * `noise` must be null or a handle not yet freed.
 */
void hqs_noise_free(struct HqsNoise *noise);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HUBBARD_QSIM_H */
