//! C interface to `divert-admm`.
//!
//! Scenarios and solutions are opaque heap handles created by `da_*_new` /
//! `da_solve` and released with the matching `*_free`. Every fallible call
//! returns a `DaStatus`; on failure a message for the calling thread is
//! available from `da_last_error_message`. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use divert_admm::io::parse_scenario;
use divert_admm::projections::project_angle_set;
use divert_admm::{
    ogl_simulate, solve, Branch, EngagementScenario, Error, GuidanceSolution, SolverOptions, Vec2, VectorPair,
};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Dimension = 3,
    Degenerate = 4,
    Diverged = 5,
    Infeasible = 6,
    Parse = 7,
    Io = 8,
    /// Output buffer too small; the required length was still reported.
    BufferTooSmall = 9,
    Panic = 10,
}

impl From<&Error> for DaStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidInput(_) => DaStatus::InvalidInput,
            Error::Dimension { .. } => DaStatus::Dimension,
            Error::Degenerate => DaStatus::Degenerate,
            Error::Diverged { .. } => DaStatus::Diverged,
            Error::InfeasibleAtUpperBound { .. } => DaStatus::Infeasible,
            Error::Parse(_) => DaStatus::Parse,
            Error::Io(_) | Error::Csv(_) => DaStatus::Io,
        }
    }
}

/// Engagement geometry. Angles in radians, SI units throughout.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DaScenarioParams {
    pub p0: [f64; 2],
    pub v0: [f64; 2],
    pub chi0: [f64; 2],
    pub nu0: [f64; 2],
    pub theta_f: f64,
    pub u_ub: f64,
    pub dt: f64,
    pub horizon: usize,
}

/// ADMM settings. Non-positive tolerances select the horizon default.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DaSolverParams {
    pub rho: f64,
    pub max_iter: usize,
    pub eps_pri: f64,
    pub eps_dual: f64,
}

/// Scalar diagnostics of a solution.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DaSummary {
    pub horizon: usize,
    pub miss_distance: f64,
    pub impact_angle_error: f64,
    pub max_ortho_violation: f64,
    pub max_accel_violation: f64,
    pub terminal_vy: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final primal and dual residuals; NaN for the baseline.
    pub r_norm: f64,
    pub s_norm: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DaBranch {
    AlreadyFeasible = 0,
    Narrow = 1,
    Wide = 2,
    DegenerateZero = 3,
    DegenerateCollinear = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DaProjection {
    pub z_alpha: [f64; 2],
    pub z_beta: [f64; 2],
    pub psi: f64,
    pub branch: DaBranch,
}

/// Opaque scenario handle, carrying the solver settings it was loaded with.
pub struct DaScenario {
    scenario: EngagementScenario,
    options: SolverOptions,
}

/// Opaque solution handle.
pub struct DaSolution {
    solution: GuidanceSolution,
}

/// Values per state row returned by `da_solution_trajectory`.
pub const DA_TRAJECTORY_COLUMNS: usize = 6;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

/// Runs `f`, recording any error or panic for `da_last_error_message`.
fn guard(f: impl FnOnce() -> Result<(), (DaStatus, String)>) -> DaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            DaStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            DaStatus::Panic
        }
    }
}

fn core_err(e: Error) -> (DaStatus, String) {
    (DaStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (DaStatus, String) {
    (DaStatus::NullPointer, format!("{what} is null"))
}

fn vec2(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn da_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message for the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next `da_*` call on the same thread.
#[no_mangle]
pub extern "C" fn da_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default solver settings (`rho = 1`, 10000 iterations, horizon-scaled
/// tolerances).
#[no_mangle]
pub extern "C" fn da_solver_params_default() -> DaSolverParams {
    let d = SolverOptions::default();
    DaSolverParams { rho: d.rho, max_iter: d.max_iter, eps_pri: 0.0, eps_dual: 0.0 }
}

/// Validates `params` and stores a new scenario in `*out`. The scenario
/// carries default solver settings.
///
/// # Safety
/// `params` must point to a valid `DaScenarioParams`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn da_scenario_new(params: *const DaScenarioParams, out: *mut *mut DaScenario) -> DaStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let scenario = EngagementScenario {
            p0: vec2(p.p0),
            v0: vec2(p.v0),
            chi0: vec2(p.chi0),
            nu0: vec2(p.nu0),
            theta_f: p.theta_f,
            u_ub: p.u_ub,
            dt: p.dt,
            horizon: p.horizon,
        };
        scenario.validate().map_err(core_err)?;
        *out = Box::into_raw(Box::new(DaScenario { scenario, options: SolverOptions::default() }));
        Ok(())
    })
}

/// Parses a scenario document (same schema as the CLI's scenario files,
/// `chi0` required) and stores it in `*out`, including its solver settings.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn da_scenario_from_json(json: *const c_char, out: *mut *mut DaScenario) -> DaStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| (DaStatus::Parse, format!("json is not UTF-8: {e}")))?;
        let file = parse_scenario(text).map_err(core_err)?;
        let scenario = file.scenario().map_err(core_err)?;
        *out = Box::into_raw(Box::new(DaScenario { scenario, options: file.solver_options() }));
        Ok(())
    })
}

/// Copies the scenario's parameters into `*out`.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn da_scenario_params(scenario: *const DaScenario, out: *mut DaScenarioParams) -> DaStatus {
    guard(|| {
        let s = &scenario.as_ref().ok_or_else(|| null("scenario"))?.scenario;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = DaScenarioParams {
            p0: [s.p0.x, s.p0.y],
            v0: [s.v0.x, s.v0.y],
            chi0: [s.chi0.x, s.chi0.y],
            nu0: [s.nu0.x, s.nu0.y],
            theta_f: s.theta_f,
            u_ub: s.u_ub,
            dt: s.dt,
            horizon: s.horizon,
        };
        Ok(())
    })
}

/// Releases a scenario. Null is ignored.
///
/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn da_scenario_free(scenario: *mut DaScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Solves the scenario with ADMM. `params` may be null to use the settings
/// stored with the scenario. Hitting the iteration cap is not an error:
/// check `converged` in the summary.
///
/// # Safety
/// `scenario` must be a live handle, `params` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn da_solve(
    scenario: *const DaScenario,
    params: *const DaSolverParams,
    out: *mut *mut DaSolution,
) -> DaStatus {
    guard(|| {
        let sc = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let options = match params.as_ref() {
            Some(p) => SolverOptions {
                rho: p.rho,
                max_iter: p.max_iter,
                eps_pri: (p.eps_pri > 0.0).then_some(p.eps_pri),
                eps_dual: (p.eps_dual > 0.0).then_some(p.eps_dual),
            },
            None => sc.options,
        };
        let solution = solve(&sc.scenario, &options.resolve(sc.scenario.horizon)).map_err(core_err)?;
        *out = Box::into_raw(Box::new(DaSolution { solution }));
        Ok(())
    })
}

/// Flies the saturated OGL baseline on the scenario.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn da_ogl_simulate(scenario: *const DaScenario, out: *mut *mut DaSolution) -> DaStatus {
    guard(|| {
        let sc = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let solution = ogl_simulate(&sc.scenario).map_err(core_err)?;
        *out = Box::into_raw(Box::new(DaSolution { solution }));
        Ok(())
    })
}

/// # Safety
/// `solution` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn da_solution_summary(solution: *const DaSolution, out: *mut DaSummary) -> DaStatus {
    guard(|| {
        let s = &solution.as_ref().ok_or_else(|| null("solution"))?.solution;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = DaSummary {
            horizon: s.controls.len(),
            miss_distance: s.miss_distance,
            impact_angle_error: s.impact_angle_error,
            max_ortho_violation: s.max_ortho_violation,
            max_accel_violation: s.max_accel_violation,
            terminal_vy: s.terminal_vy,
            iterations: s.iterations,
            converged: s.converged,
            r_norm: s.final_residuals.0,
            s_norm: s.final_residuals.1,
        };
        Ok(())
    })
}

/// Copies `values` into `buf` after reporting their count in `*required`.
/// A null `buf` only queries the count.
unsafe fn copy_out(values: &[f64], buf: *mut f64, len: usize, required: *mut usize) -> Result<(), (DaStatus, String)> {
    if let Some(r) = required.as_mut() {
        *r = values.len();
    }
    if buf.is_null() {
        return Ok(());
    }
    if len < values.len() {
        return Err((DaStatus::BufferTooSmall, format!("buffer holds {len} values, {} required", values.len())));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

/// Controls as `u_x0, u_y0, u_x1, ...` (2N values).
///
/// # Safety
/// `solution` must be a live handle; `buf` null or writable for `len`
/// doubles; `required` null or writable.
#[no_mangle]
pub unsafe extern "C" fn da_solution_controls(
    solution: *const DaSolution,
    buf: *mut f64,
    len: usize,
    required: *mut usize,
) -> DaStatus {
    guard(|| {
        let s = &solution.as_ref().ok_or_else(|| null("solution"))?.solution;
        let values: Vec<f64> = s.controls.iter().flat_map(|u| [u.x, u.y]).collect();
        copy_out(&values, buf, len, required)
    })
}

/// States as N+1 rows of `p_x, p_y, v_x, v_y, l_x, l_y`
/// (`DA_TRAJECTORY_COLUMNS` values per row).
///
/// # Safety
/// As for `da_solution_controls`.
#[no_mangle]
pub unsafe extern "C" fn da_solution_trajectory(
    solution: *const DaSolution,
    buf: *mut f64,
    len: usize,
    required: *mut usize,
) -> DaStatus {
    guard(|| {
        let tr = &solution.as_ref().ok_or_else(|| null("solution"))?.solution.trajectory;
        let values: Vec<f64> =
            (0..tr.p.len()).flat_map(|t| [tr.p[t].x, tr.p[t].y, tr.v[t].x, tr.v[t].y, tr.l[t].x, tr.l[t].y]).collect();
        copy_out(&values, buf, len, required)
    })
}

/// Releases a solution. Null is ignored.
///
/// # Safety
/// `solution` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn da_solution_free(solution: *mut DaSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Nearest pair `(z_alpha, z_beta)` whose inter-angle is `theta`, in
/// `(0, pi)`.
///
/// # Safety
/// `alpha`, `beta` must each point to two doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn da_project_angle_set(
    alpha: *const f64,
    beta: *const f64,
    theta: f64,
    out: *mut DaProjection,
) -> DaStatus {
    guard(|| {
        if alpha.is_null() || beta.is_null() {
            return Err(null("input vector"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if !(theta > 0.0 && theta < std::f64::consts::PI) {
            return Err((DaStatus::InvalidInput, format!("theta must lie in (0, pi), got {theta}")));
        }
        let a = std::slice::from_raw_parts(alpha, 2);
        let b = std::slice::from_raw_parts(beta, 2);
        if !a.iter().chain(b).all(|x| x.is_finite()) {
            return Err((DaStatus::InvalidInput, "vectors must be finite".into()));
        }
        let p = project_angle_set(&VectorPair::new(Vec2::new(a[0], a[1]), Vec2::new(b[0], b[1])), theta);
        *out = DaProjection {
            z_alpha: [p.z_alpha.x, p.z_alpha.y],
            z_beta: [p.z_beta.x, p.z_beta.y],
            psi: p.psi,
            branch: match p.branch {
                Branch::AlreadyFeasible => DaBranch::AlreadyFeasible,
                Branch::Narrow => DaBranch::Narrow,
                Branch::Wide => DaBranch::Wide,
                Branch::DegenerateZero => DaBranch::DegenerateZero,
                Branch::DegenerateCollinear => DaBranch::DegenerateCollinear,
            },
        };
        Ok(())
    })
}
