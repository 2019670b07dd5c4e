/* C interface to the gexlab library.
 *
 * Objects are opaque handles created by gx_*_create / gx_*_parse and released
 * with the matching gx_*_destroy (which accept NULL). Every fallible call
 * returns a gx_status; on failure gx_last_error() describes the problem for
 * the calling thread until its next failing call. Outputs are written only on
 * GX_OK. Handles may be shared across threads for reading.
 */
#ifndef GEXLAB_GEXLAB_H
#define GEXLAB_GEXLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GX_API __declspec(dllexport)
#else
#define GX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gx_status {
    GX_OK = 0,
    GX_INVALID_ARGUMENT = 1,  /* malformed input, size mismatch, bad spec */
    GX_DOMAIN = 2,            /* value outside the model's domain */
    GX_NOT_REPRESENTABLE = 3, /* object cannot live on this grid topology */
    GX_NOT_CONVERGED = 4,
    GX_INTERNAL = 5
} gx_status;

typedef struct gx_grid gx_grid;
typedef struct gx_driver gx_driver;
typedef struct gx_claim gx_claim;
typedef struct gx_control gx_control;
typedef struct gx_report gx_report;

/* One report row. Strings stay valid while the report is alive and unchanged.
 * reference is NaN when a check has no target value; +inf stands for an
 * infinite penalty. */
typedef struct gx_row {
    const char* check;
    const char* fixture;
    double value;
    double reference;
    double tolerance;
    int pass;
    const char* note;
} gx_row;

typedef struct gx_suite_options {
    int trials;                /* default 1000 */
    uint64_t seed;             /* default 1 */
    int threads;               /* default 1 */
    double tolerance;          /* inequalities; default 1e-10 */
    double identity_tolerance; /* exact identities; default 1e-12 */
    double stop_density;       /* random stopping times; default 0.1 */
} gx_suite_options;

GX_API const char* gx_version(void);
GX_API const char* gx_last_error(void);
GX_API const char* gx_status_name(gx_status status);
/* Shortest round-trip decimal, "inf" for +inf. Returns the length written
 * (excluding the terminator), or the length needed if buf is too small. */
GX_API size_t gx_format_real(double value, char* buf, size_t size);

/* --- grids ------------------------------------------------------------- */
GX_API gx_status gx_grid_create(double horizon, int steps, int full_binary, gx_grid** out);
GX_API void gx_grid_destroy(gx_grid* grid);
GX_API int gx_grid_steps(const gx_grid* grid);
GX_API double gx_grid_horizon(const gx_grid* grid);
GX_API int gx_grid_full_binary(const gx_grid* grid);
GX_API double gx_grid_time(const gx_grid* grid, int step);
GX_API size_t gx_grid_node_count(const gx_grid* grid, int step);
GX_API gx_status gx_grid_level(const gx_grid* grid, int step, size_t index, double* out);

/* --- drivers ----------------------------------------------------------- */
/* "zero", "abs:MU", "entropic:GAMMA[,R]", "linear:B", "interval:A,B",
 * "nonconvex:GAMMA[,R]". */
GX_API gx_status gx_driver_parse(const char* spec, gx_driver** out);
GX_API void gx_driver_destroy(gx_driver* driver);
GX_API const char* gx_driver_name(const gx_driver* driver);
GX_API gx_status gx_driver_eval(const gx_driver* driver, double t, double z, double* out);
/* Replaces the penalty integrand used by the dual and penalty calls
 * (default "conjugate", the closed form when the driver has one):
 * "conjugate", "fenchel" (grid search), "ball:R", "quadratic:GAMMA",
 * "truncated:N" (the conjugate cut off outside |q| <= N). */
GX_API gx_status gx_driver_set_integrand(gx_driver* driver, const char* spec);
GX_API const char* gx_driver_integrand_name(const gx_driver* driver);
/* Zero, Lipschitz and convexity probes as report rows. */
GX_API gx_status gx_driver_probe(const gx_driver* driver, uint64_t seed, gx_report** out);

/* --- claims (terminal, at step N) -------------------------------------- */
GX_API gx_status gx_claim_from_values(const gx_grid* grid, const double* values, size_t count, gx_claim** out);
/* "bt", "abs", "square", "call:K", "put:K", "digital:K", "constant:C",
 * "linear:A,B". */
GX_API gx_status gx_claim_from_payoff(const gx_grid* grid, const char* spec, gx_claim** out);
GX_API void gx_claim_destroy(gx_claim* claim);

/* --- controls (steps 0..N-1, layers back to back) ---------------------- */
GX_API gx_status gx_control_constant(const gx_grid* grid, double q, gx_control** out);
GX_API gx_status gx_control_from_values(const gx_grid* grid, const double* values, size_t count, gx_control** out);
GX_API void gx_control_destroy(gx_control* control);
GX_API gx_status gx_control_values(const gx_control* control, double* out, size_t count);
GX_API gx_status gx_control_range(const gx_control* control, double* min, double* max);

/* --- utilities --------------------------------------------------------- */
/* u_0 by the backward scheme. */
GX_API gx_status gx_utility(const gx_driver* driver, const gx_claim* claim, double* u0);
/* u_0 by the dual recursion over the conjugate of the driver; optionally the
 * worst-case control and whether the admissibility bound was active. */
GX_API gx_status gx_dual_utility(const gx_driver* driver, const gx_claim* claim, double* u0,
                                 gx_control** argmin, int* any_clamped);
GX_API gx_status gx_duality_gap(const gx_driver* driver, const gx_claim* claim, double* gap);

/* --- penalty ------------------------------------------------------------ */
/* c_{s,t}(Q) at node (s, index), f = conjugate of the driver. */
GX_API gx_status gx_penalty_formula(const gx_driver* driver, const gx_control* control, int s, int t,
                                    size_t index, double* value, int* infinite);
/* Primal sup-over-claims value at s = 0; full binary grids with N <= 4. */
GX_API gx_status gx_primal_oracle(const gx_driver* driver, const gx_control* control, uint64_t seed,
                                  double* value, int* converged);

/* --- conjugates --------------------------------------------------------- */
/* f(t, q); numeric != 0 forces the grid search even with a closed form. */
GX_API gx_status gx_conjugate_eval(const gx_driver* driver, int numeric, double t, double q, double* value,
                                   int* infinite);
GX_API gx_status gx_conjugate_report(const gx_driver* driver, double tolerance, gx_report** out);
/* Truncated family f_n on the given levels: monotonicity of f_n and g_n and
 * the infimum identity. */
GX_API gx_status gx_family_check(const gx_driver* driver, const double* levels, size_t count, gx_report** out);

/* --- suites ------------------------------------------------------------- */
GX_API void gx_suite_defaults(gx_suite_options* options);
GX_API gx_status gx_axiom_suite(const gx_driver* driver, int steps, const gx_suite_options* options,
                                gx_report** out);
GX_API gx_status gx_supermartingale_suite(const gx_driver* driver, const gx_control* control,
                                          const gx_suite_options* options, gx_report** out);
GX_API gx_status gx_decomposition_suite(const gx_driver* driver, const gx_control* control,
                                        const gx_suite_options* options, gx_report** out);
GX_API gx_status gx_cocycle_suite(const gx_driver* driver, const gx_control* control,
                                  const gx_suite_options* options, gx_report** out);
GX_API gx_status gx_doob_check(const gx_driver* driver, const gx_control* control, double tolerance,
                               gx_report** out);
GX_API gx_status gx_pasting_suite(const gx_driver* driver, const gx_grid* grid, double bound,
                                  const gx_suite_options* options, gx_report** out);
GX_API gx_status gx_truncation_check(const gx_driver* driver, const gx_control* control, const double* levels,
                                     size_t level_count, const double* stop_levels, size_t stop_count,
                                     gx_report** out);
GX_API gx_status gx_monotone_utility_check(const gx_driver* driver, const gx_claim* claim, const double* levels,
                                           size_t count, double tolerance, gx_report** out);
GX_API gx_status gx_dual_properties(const gx_driver* driver, const gx_claim* claim, int split, double tolerance,
                                    gx_report** out);
GX_API gx_status gx_upper_bound_check(const gx_driver* driver, const gx_control* control, double tolerance,
                                      gx_report** out);

/* --- reports ------------------------------------------------------------ */
GX_API gx_status gx_report_create(gx_report** out);
GX_API void gx_report_destroy(gx_report* report);
GX_API gx_status gx_report_add(gx_report* report, const gx_row* row);
GX_API gx_status gx_report_merge(gx_report* into, const gx_report* from);
GX_API size_t gx_report_size(const gx_report* report);
GX_API gx_status gx_report_row(const gx_report* report, size_t index, gx_row* out);
GX_API int gx_report_passed(const gx_report* report);
/* Header "check,fixture,value,reference,tolerance,pass". The string lives
 * until the report is next modified or destroyed. */
GX_API const char* gx_report_csv(gx_report* report);
GX_API const char* gx_report_summary(gx_report* report);

#ifdef __cplusplus
}
#endif

#endif /* GEXLAB_GEXLAB_H */
