//! Plain ADMM over the stacked consensus form.
//!
//! One sweep is the least-squares u-update with the cached factorization,
//! the convex projections (acceleration disc, terminal half-space), the
//! nonconvex pair projection, and the scaled dual ascent on every block.
//! The first block of `z`, paired with the terminal equality rows, stays
//! identically zero.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::problem::{
    assemble, forward_simulate, unstack_controls, BlockLayout, EngagementScenario, StackedProblem, TrajectoryRecord,
};
use crate::projections::{angle_between, project_ball, project_c3_into, project_halfspace};
use crate::Vec2;

/// Inter-angle enforced between `u_t` and `l_t`.
pub const MANEUVER_ANGLE: f64 = FRAC_PI_2;

/// Controls below this fraction of `u_ub` count as zero in diagnostics: at
/// that size a converged iterate's direction is consensus noise.
pub const NEGLIGIBLE_ACCEL_FRACTION: f64 = 1e-6;

/// Iterates with `|u|` above this are treated as divergent.
pub const DIVERGENCE_BOUND: f64 = 1e12;

pub const DEFAULT_RHO: f64 = 1.0;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub rho: f64,
    pub max_iter: usize,
    pub eps_pri: f64,
    pub eps_dual: f64,
    pub record_history: bool,
    /// Evaluate the u-update normal equations every iteration and keep the
    /// worst relative residual in [`SolverState::max_normal_residual`].
    pub check_normal_equations: bool,
}

impl SolverConfig {
    /// Defaults for horizon N: `eps = 1e-6 * sqrt(rows of M)`.
    pub fn for_horizon(horizon: usize) -> Self {
        let eps = default_tolerance(horizon);
        Self {
            rho: DEFAULT_RHO,
            max_iter: DEFAULT_MAX_ITER,
            eps_pri: eps,
            eps_dual: eps,
            record_history: true,
            check_normal_equations: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(invalid(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.eps_pri > 0.0) || !(self.eps_dual > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        Ok(())
    }
}

/// Horizon-independent solver settings. Tolerances left unset resolve to
/// [`default_tolerance`] for the horizon being solved, so one set of
/// options can drive scenarios of different N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rho: f64,
    pub max_iter: usize,
    pub eps_pri: Option<f64>,
    pub eps_dual: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { rho: DEFAULT_RHO, max_iter: DEFAULT_MAX_ITER, eps_pri: None, eps_dual: None }
    }
}

impl SolverOptions {
    pub fn resolve(&self, horizon: usize) -> SolverConfig {
        let eps = default_tolerance(horizon);
        SolverConfig {
            rho: self.rho,
            max_iter: self.max_iter,
            eps_pri: self.eps_pri.unwrap_or(eps),
            eps_dual: self.eps_dual.unwrap_or(eps),
            ..SolverConfig::for_horizon(horizon)
        }
    }
}

pub fn default_tolerance(horizon: usize) -> f64 {
    1e-6 * (BlockLayout { horizon }.rows() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualSample {
    pub k: usize,
    pub r_norm: f64,
    pub s_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub u: DVector<f64>,
    /// Stacked `(0, z1, z2, z3)`, same length as `n`.
    pub z: DVector<f64>,
    /// Scaled duals `(w0, w1, w2, w3)`.
    pub w: DVector<f64>,
    pub k: usize,
    pub r_norm: f64,
    pub s_norm: f64,
    pub history: Vec<ResidualSample>,
    pub max_normal_residual: f64,
}

impl SolverState {
    pub fn zeros(layout: BlockLayout) -> Self {
        Self::warm(layout, DVector::zeros(layout.cols()), DVector::zeros(layout.rows()), DVector::zeros(layout.rows()))
            .expect("zero state has consistent dimensions")
    }

    /// Warm start from given iterates. The terminal block of `z` is reset
    /// to zero.
    pub fn warm(layout: BlockLayout, u: DVector<f64>, mut z: DVector<f64>, w: DVector<f64>) -> Result<Self> {
        if u.len() != layout.cols() {
            return Err(Error::Dimension { expected: layout.cols(), actual: u.len() });
        }
        for v in [&z, &w] {
            if v.len() != layout.rows() {
                return Err(Error::Dimension { expected: layout.rows(), actual: v.len() });
            }
        }
        z.rows_mut(0, 3).fill(0.0);
        Ok(Self {
            u,
            z,
            w,
            k: 0,
            r_norm: f64::INFINITY,
            s_norm: f64::INFINITY,
            history: Vec::new(),
            max_normal_residual: 0.0,
        })
    }
}

/// `argmin |u|^2 + (rho/2) |M u - n - z + w|^2`.
pub fn u_update(problem: &StackedProblem, z: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
    let target = &problem.n + z - w;
    let mut rhs = problem.apply_transpose(&target);
    rhs *= problem.rho / 2.0;
    problem.factor.solve_mut(&mut rhs);
    rhs
}

/// Relative residual of `(2I + rho M^T M) u = rho M^T (n + z - w)`.
pub fn normal_equation_residual(problem: &StackedProblem, u: &DVector<f64>, z: &DVector<f64>, w: &DVector<f64>) -> f64 {
    let rhs = problem.apply_transpose(&(&problem.n + z - w)) * problem.rho;
    let lhs = u * 2.0 + problem.apply_transpose(&problem.apply(u)) * problem.rho;
    (lhs - &rhs).norm() / rhs.norm().max(1.0)
}

/// Primal residual `M u - z - n` and dual residual `rho M^T (z_prev - z)`.
pub fn residuals(
    problem: &StackedProblem,
    u: &DVector<f64>,
    z: &DVector<f64>,
    z_prev: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let r = problem.affine(u) - z;
    let s = problem.apply_transpose(&(z_prev - z)) * problem.rho;
    (r, s)
}

/// Projects `M u - n + w` block by block into the feasible sets.
fn z_update(layout: BlockLayout, u_ub: f64, affine: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
    let v = affine + w;
    let mut z = DVector::zeros(layout.rows());

    let accel = layout.accel();
    for t in 0..layout.horizon {
        let i = accel.start + 2 * t;
        let p = project_ball(Vec2::new(v[i], v[i + 1]), u_ub);
        z[i] = p.x;
        z[i + 1] = p.y;
    }
    z[layout.vy()] = project_halfspace(v[layout.vy()]);

    let pair = layout.pair();
    project_c3_into(&v.as_slice()[pair.clone()], MANEUVER_ANGLE, &mut z.as_mut_slice()[pair]);
    z
}

/// One full ADMM sweep, updating `state` in place.
pub fn iterate(
    problem: &StackedProblem,
    scenario: &EngagementScenario,
    state: &mut SolverState,
    config: &SolverConfig,
) {
    let u = u_update(problem, &state.z, &state.w);
    if config.check_normal_equations {
        let res = normal_equation_residual(problem, &u, &state.z, &state.w);
        state.max_normal_residual = state.max_normal_residual.max(res);
    }
    let affine = problem.affine(&u);
    let z = z_update(problem.layout, scenario.u_ub, &affine, &state.w);
    let r = &affine - &z;
    let s = problem.apply_transpose(&(&state.z - &z)) * problem.rho;

    state.w += &r;
    state.u = u;
    state.z = z;
    state.k += 1;
    state.r_norm = r.norm();
    state.s_norm = s.norm();
    if config.record_history {
        state.history.push(ResidualSample { k: state.k, r_norm: state.r_norm, s_norm: state.s_norm });
    }
}

/// Control sequence with diagnostics re-derived by forward simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceSolution {
    pub controls: Vec<Vec2>,
    pub trajectory: TrajectoryRecord,
    /// `|l_N|` [m].
    pub miss_distance: f64,
    /// `|angle(v_N) - theta_f|` wrapped to `[0, pi]` [rad].
    pub impact_angle_error: f64,
    /// Worst `|angle(u_t, l_t) - pi/2|` over non-negligible controls [rad].
    pub max_ortho_violation: f64,
    /// Worst `max(|u_t| - u_ub, 0)` [m/s^2].
    pub max_accel_violation: f64,
    /// `v_yN` [m/s].
    pub terminal_vy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_residuals: (f64, f64),
    pub history: Vec<ResidualSample>,
}

/// Wraps an angle difference into `[0, pi]`.
pub fn wrapped_angle_error(angle: f64, target: f64) -> f64 {
    let d = (angle - target).rem_euclid(2.0 * std::f64::consts::PI);
    d.min(2.0 * std::f64::consts::PI - d)
}

impl GuidanceSolution {
    pub fn evaluate(scenario: &EngagementScenario, controls: Vec<Vec2>) -> Result<Self> {
        let trajectory = forward_simulate(scenario, &controls)?;
        let vn = trajectory.terminal_velocity();
        let impact_angle_error = if vn.norm() == 0.0 {
            std::f64::consts::PI
        } else {
            wrapped_angle_error(vn.y.atan2(vn.x), scenario.theta_f)
        };
        let floor = NEGLIGIBLE_ACCEL_FRACTION * scenario.u_ub;
        let max_ortho_violation = controls
            .iter()
            .zip(&trajectory.l)
            .filter(|(u, _)| u.norm() > floor)
            .filter_map(|(u, l)| angle_between(u, l).ok())
            .map(|a| (a - MANEUVER_ANGLE).abs())
            .fold(0.0, f64::max);
        let max_accel_violation = controls.iter().map(|u| (u.norm() - scenario.u_ub).max(0.0)).fold(0.0, f64::max);
        Ok(Self {
            miss_distance: trajectory.terminal_los().norm(),
            impact_angle_error,
            max_ortho_violation,
            max_accel_violation,
            terminal_vy: vn.y,
            controls,
            trajectory,
            iterations: 0,
            converged: false,
            final_residuals: (f64::NAN, f64::NAN),
            history: Vec::new(),
        })
    }

    /// Largest control magnitude.
    pub fn max_accel(&self) -> f64 {
        self.controls.iter().map(|u| u.norm()).fold(0.0, f64::max)
    }
}

/// Assembles the problem and runs ADMM from the zero state.
pub fn solve(scenario: &EngagementScenario, config: &SolverConfig) -> Result<GuidanceSolution> {
    config.validate()?;
    let problem = assemble(scenario, config.rho)?;
    let state = SolverState::zeros(problem.layout);
    solve_from(&problem, scenario, config, state).map(|(sol, _)| sol)
}

/// Runs ADMM from `state` until both residuals meet their tolerances or
/// `max_iter` sweeps have been taken. The returned solution is built from
/// `u`, not from the consensus copies.
pub fn solve_from(
    problem: &StackedProblem,
    scenario: &EngagementScenario,
    config: &SolverConfig,
    mut state: SolverState,
) -> Result<(GuidanceSolution, SolverState)> {
    config.validate()?;
    if (config.rho - problem.rho).abs() > 0.0 {
        return Err(invalid("config rho differs from the assembled problem"));
    }
    let mut converged = false;
    for _ in 0..config.max_iter {
        iterate(problem, scenario, &mut state, config);
        let u_norm = state.u.norm();
        if !u_norm.is_finite()
            || !state.r_norm.is_finite()
            || !state.s_norm.is_finite()
            || !state.w.iter().all(|x| x.is_finite())
        {
            return Err(Error::Diverged { iteration: state.k, reason: "non-finite iterate".into() });
        }
        if u_norm > DIVERGENCE_BOUND {
            return Err(Error::Diverged { iteration: state.k, reason: format!("|u| = {u_norm:e}") });
        }
        if state.r_norm <= config.eps_pri && state.s_norm <= config.eps_dual {
            converged = true;
            break;
        }
    }
    let mut solution = GuidanceSolution::evaluate(scenario, unstack_controls(&state.u))?;
    solution.iterations = state.k;
    solution.converged = converged;
    solution.final_residuals = (state.r_norm, state.s_norm);
    solution.history = state.history.clone();
    Ok((solution, state))
}
