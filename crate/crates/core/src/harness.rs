//! Scenario orchestration: head-to-head comparison of ADMM and the
//! guidance-law baseline, target-position sweeps, and the minimum feasible
//! horizon search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::ogl::ogl_trace;
use crate::problem::EngagementScenario;
use crate::solver::{solve, GuidanceSolution, SolverConfig, SolverOptions};
use crate::Vec2;

/// ADMM and baseline solutions for one scenario, flown with the same N, dt
/// and acceleration bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub admm: GuidanceSolution,
    pub ogl: GuidanceSolution,
    /// Whether any baseline command exceeded `u_ub` before clamping.
    pub ogl_saturated: bool,
}

pub fn compare(scenario: &EngagementScenario, config: &SolverConfig) -> Result<Comparison> {
    let admm = solve(scenario, config)?;
    let trace = ogl_trace(scenario)?;
    Ok(Comparison { ogl_saturated: trace.saturated(scenario.u_ub), admm, ogl: trace.solution })
}

/// Steps until the baseline reaches its closest approach: the first `t >= 1`
/// with `|l_{t+1}| >= |l_t|`, or `max_steps` if the range is still closing.
///
/// The baseline's terminal miss is only meaningful when the horizon ends at
/// its engagement; giving ADMM the same horizon keeps the comparison fair.
pub fn ogl_engagement_horizon(scenario: &EngagementScenario, max_steps: usize) -> Result<usize> {
    if max_steps < 2 {
        return Err(invalid(format!("max_steps must be at least 2, got {max_steps}")));
    }
    let trace = ogl_trace(&scenario.with_horizon(max_steps))?;
    let range: Vec<f64> = trace.solution.trajectory.l.iter().map(|l| l.norm()).collect();
    let t = (1..max_steps).find(|&t| range[t + 1] >= range[t]).unwrap_or(max_steps);
    Ok(t.max(2))
}

/// How each sweep cell chooses its horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HorizonPolicy {
    /// The base scenario's N for every cell.
    Fixed,
    /// [`ogl_engagement_horizon`] of the cell, searched up to `max_steps`.
    OglEngagement { max_steps: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Target offset along the interceptor's initial heading, per grid
    /// row [m].
    pub range_values: Vec<f64>,
    /// Target offset to the right of the initial heading, per grid column
    /// [m].
    pub crosstrack_values: Vec<f64>,
    /// Everything but the target position (and N under a non-fixed policy).
    pub base: EngagementScenario,
    pub solver: SolverOptions,
    pub horizon: HorizonPolicy,
    /// Seeds the per-cell target jitter; `None` leaves cells on the grid.
    pub seed: Option<u64>,
    /// Half-width of the uniform per-axis target jitter [m].
    pub jitter: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, values) in [("range_values", &self.range_values), ("crosstrack_values", &self.crosstrack_values)] {
            if values.is_empty() {
                return Err(invalid(format!("{name} must not be empty")));
            }
            if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid(format!("{name} must be finite and strictly increasing")));
            }
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(invalid(format!("jitter must be non-negative, got {}", self.jitter)));
        }
        self.base.validate()?;
        self.solver.resolve(self.base.horizon).validate()
    }

    pub fn cell_count(&self) -> usize {
        self.range_values.len() * self.crosstrack_values.len()
    }

    /// Target position for a (range, crosstrack) pair, measured in the
    /// frame of the initial heading (`+x` when the interceptor is at rest).
    pub fn grid_point(&self, range: f64, crosstrack: f64) -> Vec2 {
        let speed = self.base.v0.norm();
        let heading = if speed > 0.0 { self.base.v0 / speed } else { Vec2::new(1.0, 0.0) };
        let right = Vec2::new(heading.y, -heading.x);
        self.base.p0 + heading * range + right * crosstrack
    }

    /// Scenario of cell `index` in row-major order (range outer).
    pub fn cell_scenario(&self, index: usize) -> Result<EngagementScenario> {
        let cols = self.crosstrack_values.len();
        let (range, crosstrack) = (self.range_values[index / cols], self.crosstrack_values[index % cols]);
        let mut chi0 = self.grid_point(range, crosstrack);
        if let Some(seed) = self.seed {
            // One stream per cell keeps the draw independent of evaluation order.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            if self.jitter > 0.0 {
                chi0.x += rng.random_range(-self.jitter..=self.jitter);
                chi0.y += rng.random_range(-self.jitter..=self.jitter);
            }
        }
        let mut scenario = EngagementScenario { chi0, ..self.base.clone() };
        if let HorizonPolicy::OglEngagement { max_steps } = self.horizon {
            scenario.horizon = ogl_engagement_horizon(&scenario, max_steps)?;
        }
        Ok(scenario)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub range: f64,
    pub crosstrack: f64,
    pub chi0: Vec2,
    pub horizon: usize,
    pub miss_admm: f64,
    pub miss_ogl: f64,
    pub angle_err_admm: f64,
    pub angle_err_ogl: f64,
    pub ogl_saturated: bool,
    pub converged: bool,
    pub iterations: usize,
    /// Set when the cell failed; the metrics are then NaN.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, range outer.
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, row: usize, col: usize) -> &SweepCell {
        &self.cells[row * self.cols + col]
    }
}

fn evaluate_cell(spec: &SweepSpec, index: usize) -> SweepCell {
    let cols = spec.crosstrack_values.len();
    let (range, crosstrack) = (spec.range_values[index / cols], spec.crosstrack_values[index % cols]);
    let outcome = spec.cell_scenario(index).and_then(|sc| {
        let cmp = compare(&sc, &spec.solver.resolve(sc.horizon))?;
        Ok((sc, cmp))
    });
    match outcome {
        Ok((sc, cmp)) => SweepCell {
            range,
            crosstrack,
            chi0: sc.chi0,
            horizon: sc.horizon,
            miss_admm: cmp.admm.miss_distance,
            miss_ogl: cmp.ogl.miss_distance,
            angle_err_admm: cmp.admm.impact_angle_error,
            angle_err_ogl: cmp.ogl.impact_angle_error,
            ogl_saturated: cmp.ogl_saturated,
            converged: cmp.admm.converged,
            iterations: cmp.admm.iterations,
            error: None,
        },
        Err(e) => SweepCell {
            range,
            crosstrack,
            chi0: spec.grid_point(range, crosstrack),
            horizon: 0,
            miss_admm: f64::NAN,
            miss_ogl: f64::NAN,
            angle_err_admm: f64::NAN,
            angle_err_ogl: f64::NAN,
            ogl_saturated: false,
            converged: false,
            iterations: 0,
            error: Some(e.to_string()),
        },
    }
}

/// Evaluates every grid cell. Cells are independent, so they run on the
/// rayon pool (`threads = None` uses the global pool); results are
/// collected in row-major order regardless of scheduling.
pub fn sweep(spec: &SweepSpec, threads: Option<usize>) -> Result<SweepResult> {
    spec.validate()?;
    let run = || (0..spec.cell_count()).into_par_iter().map(|i| evaluate_cell(spec, i)).collect::<Vec<_>>();
    let cells = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| invalid(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    Ok(SweepResult { rows: spec.range_values.len(), cols: spec.crosstrack_values.len(), cells })
}

/// Post-hoc physical feasibility, judged on simulated diagnostics rather
/// than on solver residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityTolerance {
    /// Miss distance [m].
    pub miss: f64,
    /// Impact-angle error [rad].
    pub angle: f64,
    /// Deviation of `angle(u_t, l_t)` from a right angle [rad].
    pub ortho: f64,
    /// Acceleration bound excess relative to `u_ub`.
    pub accel_rel: f64,
    pub require_converged: bool,
}

impl Default for FeasibilityTolerance {
    fn default() -> Self {
        Self { miss: 1e-2, angle: 1e-2, ortho: 1e-3, accel_rel: 1e-6, require_converged: true }
    }
}

impl FeasibilityTolerance {
    pub fn accepts(&self, scenario: &EngagementScenario, solution: &GuidanceSolution) -> bool {
        (solution.converged || !self.require_converged)
            && solution.miss_distance <= self.miss
            && solution.impact_angle_error <= self.angle
            && solution.max_ortho_violation <= self.ortho
            && solution.max_accel_violation <= self.accel_rel * scenario.u_ub
    }
}

/// Smallest N in `[lo, hi]` accepted by `feasible`, assuming feasibility is
/// monotone in N. Each candidate is evaluated at most once.
pub fn bisect_horizon(lo: usize, hi: usize, mut feasible: impl FnMut(usize) -> Result<bool>) -> Result<usize> {
    check_bracket(lo, hi)?;
    if !feasible(hi)? {
        return Err(Error::InfeasibleAtUpperBound { n_hi: hi });
    }
    if lo == hi || feasible(lo)? {
        return Ok(lo);
    }
    // Invariant: lo infeasible, hi feasible.
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Exhaustive counterpart of [`bisect_horizon`]: the first accepted N,
/// with no monotonicity assumption.
pub fn scan_horizon(lo: usize, hi: usize, mut feasible: impl FnMut(usize) -> Result<bool>) -> Result<usize> {
    check_bracket(lo, hi)?;
    for n in lo..=hi {
        if feasible(n)? {
            return Ok(n);
        }
    }
    Err(Error::InfeasibleAtUpperBound { n_hi: hi })
}

fn check_bracket(lo: usize, hi: usize) -> Result<()> {
    if lo < 2 || lo > hi {
        return Err(invalid(format!("invalid horizon bracket [{lo}, {hi}]")));
    }
    Ok(())
}

/// Whether the scenario at horizon `n` solves to a feasible trajectory.
pub fn horizon_feasible(
    scenario: &EngagementScenario,
    options: &SolverOptions,
    tol: &FeasibilityTolerance,
    n: usize,
) -> Result<bool> {
    let sc = scenario.with_horizon(n);
    let mut config = options.resolve(n);
    config.record_history = false;
    match solve(&sc, &config) {
        Ok(sol) => Ok(tol.accepts(&sc, &sol)),
        Err(Error::Diverged { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Minimum feasible horizon by bisection over `[n_lo, n_hi]`, or by linear
/// scan when `linear_scan` is set.
pub fn min_feasible_horizon(
    scenario: &EngagementScenario,
    options: &SolverOptions,
    n_lo: usize,
    n_hi: usize,
    tol: &FeasibilityTolerance,
    linear_scan: bool,
) -> Result<usize> {
    let feasible = |n| horizon_feasible(scenario, options, tol, n);
    if linear_scan {
        scan_horizon(n_lo, n_hi, feasible)
    } else {
        bisect_horizon(n_lo, n_hi, feasible)
    }
}
