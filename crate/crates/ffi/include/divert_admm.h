#ifndef DIVERT_ADMM_H
#define DIVERT_ADMM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Values per state row returned by `da_solution_trajectory`.
#define DA_TRAJECTORY_COLUMNS 6

// Result codes. Zero is success.
typedef enum DaStatus {
  DA_STATUS_OK = 0,
  DA_STATUS_NULL_POINTER = 1,
  DA_STATUS_INVALID_INPUT = 2,
  DA_STATUS_DIMENSION = 3,
  DA_STATUS_DEGENERATE = 4,
  DA_STATUS_DIVERGED = 5,
  DA_STATUS_INFEASIBLE = 6,
  DA_STATUS_PARSE = 7,
  DA_STATUS_IO = 8,
  // Output buffer too small; the required length was still reported.
  DA_STATUS_BUFFER_TOO_SMALL = 9,
  DA_STATUS_PANIC = 10,
} DaStatus;

typedef enum DaBranch {
  DA_BRANCH_ALREADY_FEASIBLE = 0,
  DA_BRANCH_NARROW = 1,
  DA_BRANCH_WIDE = 2,
  DA_BRANCH_DEGENERATE_ZERO = 3,
  DA_BRANCH_DEGENERATE_COLLINEAR = 4,
} DaBranch;

// Opaque scenario handle, carrying the solver settings it was loaded with.
typedef struct DaScenario DaScenario;

// Opaque solution handle.
typedef struct DaSolution DaSolution;

// ADMM settings. Non-positive tolerances select the horizon default.
typedef struct DaSolverParams {
  double rho;
  size_t max_iter;
  double eps_pri;
  double eps_dual;
} DaSolverParams;

// Engagement geometry. Angles in radians, SI units throughout.
typedef struct DaScenarioParams {
  double p0[2];
  double v0[2];
  double chi0[2];
  double nu0[2];
  double theta_f;
  double u_ub;
  double dt;
  size_t horizon;
} DaScenarioParams;

// Scalar diagnostics of a solution.
typedef struct DaSummary {
  size_t horizon;
  double miss_distance;
  double impact_angle_error;
  double max_ortho_violation;
  double max_accel_violation;
  double terminal_vy;
  size_t iterations;
  bool converged;
  // Final primal and dual residuals; NaN for the baseline.
  double r_norm;
  double s_norm;
} DaSummary;

typedef struct DaProjection {
  double z_alpha[2];
  double z_beta[2];
  double psi;
  enum DaBranch branch;
} DaProjection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *da_version(void);

// Message for the last failed call on this thread, or an empty string.
// The pointer stays valid until the next `da_*` call on the same thread.
const char *da_last_error_message(void);

// Default solver settings (`rho = 1`, 10000 iterations, horizon-scaled
// tolerances).
struct DaSolverParams da_solver_params_default(void);

// Validates `params` and stores a new scenario in `*out`. The scenario
// carries default solver settings.
//
// # Safety
// `params` must point to a valid `DaScenarioParams`; `out` must be writable.
enum DaStatus da_scenario_new(const struct DaScenarioParams *params, struct DaScenario **out);

// Parses a scenario document (same schema as the CLI's scenario files,
// `chi0` required) and stores it in `*out`, including its solver settings.
//
// # Safety
// `json` must be a valid NUL-terminated string; `out` must be writable.
enum DaStatus da_scenario_from_json(const char *json, struct DaScenario **out);

// Copies the scenario's parameters into `*out`.
//
// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum DaStatus da_scenario_params(const struct DaScenario *scenario, struct DaScenarioParams *out);

// Releases a scenario. Null is ignored.
//
// # Safety
// `scenario` must be null or a handle not yet freed.
void da_scenario_free(struct DaScenario *scenario);

// Solves the scenario with ADMM. `params` may be null to use the settings
// stored with the scenario. Hitting the iteration cap is not an error:
// check `converged` in the summary.
//
// # Safety
// `scenario` must be a live handle, `params` null or valid, `out` writable.
enum DaStatus da_solve(const struct DaScenario *scenario,
                       const struct DaSolverParams *params,
                       struct DaSolution **out);

// Flies the saturated OGL baseline on the scenario.
//
// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum DaStatus da_ogl_simulate(const struct DaScenario *scenario, struct DaSolution **out);

// # Safety
// `solution` must be a live handle; `out` must be writable.
enum DaStatus da_solution_summary(const struct DaSolution *solution, struct DaSummary *out);

// Controls as `u_x0, u_y0, u_x1, ...` (2N values).
//
// # Safety
// `solution` must be a live handle; `buf` null or writable for `len`
// doubles; `required` null or writable.
enum DaStatus da_solution_controls(const struct DaSolution *solution,
                                   double *buf,
                                   size_t len,
                                   size_t *required);

// States as N+1 rows of `p_x, p_y, v_x, v_y, l_x, l_y`
// (`DA_TRAJECTORY_COLUMNS` values per row).
//
// # Safety
// As for `da_solution_controls`.
enum DaStatus da_solution_trajectory(const struct DaSolution *solution,
                                     double *buf,
                                     size_t len,
                                     size_t *required);

// Releases a solution. Null is ignored.
//
// # Safety
// `solution` must be null or a handle not yet freed.
void da_solution_free(struct DaSolution *solution);

// Nearest pair `(z_alpha, z_beta)` whose inter-angle is `theta`, in
// `(0, pi)`.
//
// # Safety
// `alpha`, `beta` must each point to two doubles; `out` must be writable.
enum DaStatus da_project_angle_set(const double *alpha,
                                   const double *beta,
                                   double theta,
                                   struct DaProjection *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIVERT_ADMM_H */
