#ifndef DECLAB_H
#define DECLAB_H

/* C interface to the decoupling laboratory. Every call returns a status; on failure the
 * message is available from declab_last_error() on the calling thread. Objects returned
 * through out-parameters are owned by the caller and released with the matching _free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DECLAB_API __declspec(dllexport)
#else
#define DECLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum declab_status {
    DECLAB_OK = 0,
    DECLAB_INVALID_ARGUMENT = 1,
    DECLAB_SCHEMA = 2,
    DECLAB_NUMERIC_POISON = 3,
    DECLAB_DEGENERATE = 4,
    DECLAB_NOT_TRANSVERSE = 5,
    DECLAB_IO = 6,
    DECLAB_INTERNAL = 99
} declab_status;

DECLAB_API const char* declab_version(void);
DECLAB_API const char* declab_status_string(declab_status status);
/* Message of the most recent failure on this thread ("" when none). */
DECLAB_API const char* declab_last_error(void);

/* ------------------------------------------------------------------------------------------
 * Commands. Each produces a result holding named JSON/CSV documents and warnings. */

typedef struct declab_result declab_result;

/* Runs a "v": 1 configuration given as JSON text. Documents: "report", "csv", "slopes", "plotdata". */
DECLAB_API declab_status declab_run_config(const char* config_json, declab_result** out);
/* One scenario cell; center may be NULL (origin). Same documents as declab_run_config. */
DECLAB_API declab_status declab_run_example(const char* kind, int64_t N, double p, uint64_t seed, uint64_t budget,
                                            const double center[4], declab_result** out);
/* Document "report": non-transverse counts, strip geometry and agreement for level log2(K) squares. */
DECLAB_API declab_status declab_run_transversality(const double A[6], int K, double nu, declab_result** out);
/* Document "report": max residual of the rescaling identity for a random atomic field in R. */
DECLAB_API declab_status declab_run_rescale_check(const double A[6], double a, double b, double delta, int trials,
                                                  uint64_t seed, declab_result** out);
/* Document "report": kappa, gamma candidate, one gamma iteration and the contradiction search.
 * p and eps are decimal or rational text ("6.01", "13/2", "1e-3"). */
DECLAB_API declab_status declab_run_exponents(const char* p, int s, const char* eps, double big_o,
                                              declab_result** out);
/* Document "report": rescaling, Jacobian and rank identity checks. */
DECLAB_API declab_status declab_run_smoke(uint64_t seed, declab_result** out);

/* NULL when the result has no document of that name. */
DECLAB_API const char* declab_result_document(const declab_result* result, const char* name);
DECLAB_API size_t declab_result_warning_count(const declab_result* result);
DECLAB_API const char* declab_result_warning(const declab_result* result, size_t index);
/* 1 when every check in the result passed (always 1 for measurements). */
DECLAB_API int declab_result_passed(const declab_result* result);
DECLAB_API void declab_result_free(declab_result* result);

/* ------------------------------------------------------------------------------------------
 * Direct measurement objects. */

typedef struct declab_surface declab_surface;
typedef struct declab_field declab_field;
typedef struct declab_report declab_report;

typedef enum declab_strategy { DECLAB_STRATEGY_MC = 0, DECLAB_STRATEGY_LATTICE = 1 } declab_strategy;

typedef struct declab_sampler {
    declab_strategy strategy;
    uint64_t budget;
    uint64_t seed;
    double spacing; /* lattice spacing, 0 chooses one from the budget */
    int threads;    /* 0: DECLAB_THREADS or hardware concurrency */
} declab_sampler;

DECLAB_API void declab_sampler_init(declab_sampler* sampler);

/* Psi_A(t,s) = (t, s, A1 t^2 + 2 A2 ts + A3 s^2, A4 t^2 + 2 A5 ts + A6 s^2). */
DECLAB_API declab_status declab_surface_quad(const double A[6], declab_surface** out);
/* Phi(t) + Phi(s) on I1 x I2 for the moment curve Phi(t) = (t, t^2, t^3, t^4). */
DECLAB_API declab_status declab_surface_moment_lift(double i1_lo, double i1_hi, double i2_lo, double i2_hi,
                                                    declab_surface** out);
/* 1 when rank[Psi_t, Psi_s, Psi_tt, Psi_ss, Psi_ts] = 4 at (t, s). */
DECLAB_API declab_status declab_surface_rank_check(const declab_surface* surface, double t, double s, int* out);
DECLAB_API void declab_surface_free(declab_surface* surface);

/* g = 1 on [0,1]^2 with quadrature prepared for caps of level cap_level. */
DECLAB_API declab_status declab_field_const(int cap_level, declab_field** out);
DECLAB_API declab_status declab_field_random_phase(uint64_t seed, int phase_level, declab_field** out);
/* Unit masses at (0, n/M), n = 1..M, M = ceil(sqrt(N)). */
DECLAB_API declab_status declab_field_flat_line(int64_t N, declab_field** out);
/* n point masses: points holds (t, s) pairs, amplitudes holds (re, im) pairs (NULL for all ones). */
DECLAB_API declab_status declab_field_atomic(size_t n, const double* points, const double* amplitudes,
                                             declab_field** out);
DECLAB_API void declab_field_free(declab_field* field);

/* ||E g||_p over w_{B_N} against the caps of side N^{-1/2}; sampler may be NULL (defaults). */
DECLAB_API declab_status declab_measure_linear(const declab_surface* surface, const declab_field* field, int64_t N,
                                               double p, const declab_sampler* sampler, declab_report** out);
/* Keys: N, p, caps, cap_level, lhs, lhs_se, rhs_lp, rhs_l2, ratio_lp, ratio_l2, ratio_lp_se, ratio_l2_se,
 * under_resolved. */
DECLAB_API declab_status declab_report_value(const declab_report* report, const char* key, double* out);
DECLAB_API const char* declab_report_json(const declab_report* report);
DECLAB_API void declab_report_free(declab_report* report);

#ifdef __cplusplus
}
#endif

#endif
