//! Engagement model, discretized dynamics and the stacked affine maps the
//! ADMM iteration consumes.
//!
//! Controls are stacked as `u = (u_0, ..., u_{N-1})` with each `u_t`
//! contributing two consecutive entries `(x, y)`. With explicit-Euler
//! stepping every quantity the constraints touch is affine in `u`:
//!
//! ```text
//! v_t = v_0 + dt * sum_{s<t} u_s
//! p_t = p_0 + t*dt*v_0 + dt^2 * sum_{s<t-1} (t-1-s) u_s
//! l_t = chi_0 + t*dt*nu_0 - p_t
//! ```

use std::ops::Range;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{invalid, Error, Result};
use crate::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct EngagementScenario {
    /// Interceptor initial position [m].
    pub p0: Vec2,
    /// Interceptor initial velocity [m/s].
    pub v0: Vec2,
    /// Target initial position [m].
    pub chi0: Vec2,
    /// Target constant velocity [m/s].
    pub nu0: Vec2,
    /// Desired terminal heading [rad], in (-pi, pi].
    pub theta_f: f64,
    /// Acceleration magnitude bound [m/s^2].
    pub u_ub: f64,
    /// Step size [s].
    pub dt: f64,
    /// Number of control steps N.
    pub horizon: usize,
}

impl EngagementScenario {
    pub fn validate(&self) -> Result<()> {
        let vecs = [self.p0, self.v0, self.chi0, self.nu0];
        if vecs.iter().any(|v| !v.iter().all(|x| x.is_finite())) {
            return Err(invalid("scenario vectors must be finite"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.u_ub > 0.0) {
            return Err(invalid(format!("u_ub must be positive, got {}", self.u_ub)));
        }
        if self.horizon < 2 {
            return Err(invalid(format!("horizon N must be at least 2, got {}", self.horizon)));
        }
        let pi = std::f64::consts::PI;
        if !(self.theta_f > -pi && self.theta_f <= pi) {
            return Err(invalid(format!("theta_f must lie in (-pi, pi], got {}", self.theta_f)));
        }
        Ok(())
    }

    /// Distance from interceptor to target at t = 0.
    pub fn initial_range(&self) -> f64 {
        (self.chi0 - self.p0).norm()
    }

    pub fn with_horizon(&self, horizon: usize) -> Self {
        Self { horizon, ..self.clone() }
    }

    /// Line of sight at step `t` for interceptor position `p`.
    pub fn los(&self, t: usize, p: &Vec2) -> Vec2 {
        self.chi0 + self.nu0 * (self.dt * t as f64) - p
    }

    /// Position of the target at step `t`.
    pub fn target_position(&self, t: usize) -> Vec2 {
        self.chi0 + self.nu0 * (self.dt * t as f64)
    }
}

/// Simulated engagement. `u` has N entries, the state sequences N+1.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub u: Vec<Vec2>,
    pub p: Vec<Vec2>,
    pub v: Vec<Vec2>,
    pub l: Vec<Vec2>,
}

impl TrajectoryRecord {
    pub fn horizon(&self) -> usize {
        self.u.len()
    }

    pub fn terminal_los(&self) -> Vec2 {
        *self.l.last().expect("trajectory has N+1 states")
    }

    pub fn terminal_velocity(&self) -> Vec2 {
        *self.v.last().expect("trajectory has N+1 states")
    }
}

/// Steps the double integrator under `u` and records the line of sight.
pub fn forward_simulate(scenario: &EngagementScenario, u: &[Vec2]) -> Result<TrajectoryRecord> {
    if u.len() != scenario.horizon {
        return Err(Error::Dimension { expected: scenario.horizon, actual: u.len() });
    }
    let n = u.len();
    let mut p = Vec::with_capacity(n + 1);
    let mut v = Vec::with_capacity(n + 1);
    let mut l = Vec::with_capacity(n + 1);
    let (mut pt, mut vt) = (scenario.p0, scenario.v0);
    for (t, ut) in u.iter().enumerate() {
        p.push(pt);
        v.push(vt);
        l.push(scenario.los(t, &pt));
        pt += vt * scenario.dt;
        vt += ut * scenario.dt;
    }
    p.push(pt);
    v.push(vt);
    l.push(scenario.los(n, &pt));
    Ok(TrajectoryRecord { u: u.to_vec(), p, v, l })
}

pub fn stack_controls(u: &[Vec2]) -> DVector<f64> {
    DVector::from_iterator(2 * u.len(), u.iter().flat_map(|ut| [ut.x, ut.y]))
}

pub fn unstack_controls(u: &DVector<f64>) -> Vec<Vec2> {
    u.as_slice().chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect()
}

/// Row offsets of the blocks of `M u - n` for horizon N.
///
/// Order is: terminal constraints (3), acceleration copy (2N), terminal
/// crossrange speed (1), then the (u, l) pair block (4N) with the u half
/// first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub horizon: usize,
}

impl BlockLayout {
    pub fn cols(&self) -> usize {
        2 * self.horizon
    }

    pub fn rows(&self) -> usize {
        6 * self.horizon + 4
    }

    pub fn terminal(&self) -> Range<usize> {
        0..3
    }

    pub fn accel(&self) -> Range<usize> {
        3..3 + 2 * self.horizon
    }

    pub fn vy(&self) -> usize {
        3 + 2 * self.horizon
    }

    pub fn pair(&self) -> Range<usize> {
        4 + 2 * self.horizon..self.rows()
    }

    /// Control half of the pair block.
    pub fn pair_u(&self) -> Range<usize> {
        let s = self.pair().start;
        s..s + 2 * self.horizon
    }

    /// LOS half of the pair block.
    pub fn pair_l(&self) -> Range<usize> {
        let s = self.pair().start + 2 * self.horizon;
        s..s + 2 * self.horizon
    }
}

/// Assembled constraint maps for one scenario and penalty.
///
/// `A u - b = (l_N, sin(theta_f) v_xN - cos(theta_f) v_yN)`,
/// `P u - q = v_yN`, `G u - h = (u, l_0..l_{N-1})` and `M`, `n` stack them
/// under an identity block for the acceleration bound.
#[derive(Debug, Clone)]
pub struct StackedProblem {
    pub layout: BlockLayout,
    pub rho: f64,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub p: DVector<f64>,
    pub q: f64,
    pub g: CsrMatrix<f64>,
    pub h: DVector<f64>,
    pub m: CsrMatrix<f64>,
    pub mt: CsrMatrix<f64>,
    pub n: DVector<f64>,
    /// Cholesky factor of `I + (rho/2) M^T M`.
    pub factor: Cholesky<f64, Dyn>,
}

impl StackedProblem {
    pub fn horizon(&self) -> usize {
        self.layout.horizon
    }

    /// `M x`.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.m * x
    }

    /// `M^T y`.
    pub fn apply_transpose(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.mt * y
    }

    /// `M x - n`.
    pub fn affine(&self, x: &DVector<f64>) -> DVector<f64> {
        self.apply(x) - &self.n
    }

    pub fn dense_m(&self) -> DMatrix<f64> {
        DMatrix::from(&self.m)
    }
}

/// Row enforcing `sin(theta_f) v_xN - cos(theta_f) v_yN = 0` as `row . u - c`.
pub fn impact_angle_row(scenario: &EngagementScenario) -> (DVector<f64>, f64) {
    let (s, c) = scenario.theta_f.sin_cos();
    let dt = scenario.dt;
    let row = DVector::from_iterator(2 * scenario.horizon, (0..scenario.horizon).flat_map(|_| [dt * s, -dt * c]));
    let offset = -(s * scenario.v0.x - c * scenario.v0.y);
    (row, offset)
}

/// Uncontrolled LOS at step `t`: `chi_0 + t dt nu_0 - p_0 - t dt v_0`.
fn free_los(scenario: &EngagementScenario, t: usize) -> Vec2 {
    let tdt = t as f64 * scenario.dt;
    scenario.chi0 + scenario.nu0 * tdt - scenario.p0 - scenario.v0 * tdt
}

pub fn assemble(scenario: &EngagementScenario, rho: f64) -> Result<StackedProblem> {
    scenario.validate()?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid(format!("rho must be positive, got {rho}")));
    }
    let horizon = scenario.horizon;
    let layout = BlockLayout { horizon };
    let cols = layout.cols();
    let dt2 = scenario.dt * scenario.dt;

    // A: l_N rows then the impact-angle row.
    let mut a = DMatrix::zeros(3, cols);
    for s in 0..horizon {
        let coef = -dt2 * (horizon - 1 - s) as f64;
        a[(0, 2 * s)] = coef;
        a[(1, 2 * s + 1)] = coef;
    }
    let (angle_row, angle_offset) = impact_angle_row(scenario);
    a.set_row(2, &angle_row.transpose());
    let l_free = free_los(scenario, horizon);
    let b = DVector::from_column_slice(&[-l_free.x, -l_free.y, angle_offset]);

    let p = DVector::from_iterator(cols, (0..horizon).flat_map(|_| [0.0, scenario.dt]));
    let q = -scenario.v0.y;

    // G: identity over u, then l_t for t = 0..N-1 (lower triangular).
    let mut g_coo = CooMatrix::new(4 * horizon, cols);
    for i in 0..cols {
        g_coo.push(i, i, 1.0);
    }
    let mut h = DVector::zeros(4 * horizon);
    for t in 0..horizon {
        let row = cols + 2 * t;
        for s in 0..t.saturating_sub(1) {
            let coef = -dt2 * (t - 1 - s) as f64;
            g_coo.push(row, 2 * s, coef);
            g_coo.push(row + 1, 2 * s + 1, coef);
        }
        let c = free_los(scenario, t);
        h[row] = -c.x;
        h[row + 1] = -c.y;
    }
    let g = CsrMatrix::from(&g_coo);

    let mut m_coo = CooMatrix::new(layout.rows(), cols);
    for r in 0..3 {
        for c in 0..cols {
            if a[(r, c)] != 0.0 {
                m_coo.push(r, c, a[(r, c)]);
            }
        }
    }
    for i in 0..cols {
        m_coo.push(layout.accel().start + i, i, 1.0);
    }
    for (c, &val) in p.iter().enumerate() {
        if val != 0.0 {
            m_coo.push(layout.vy(), c, val);
        }
    }
    for (r, c, &val) in g.triplet_iter() {
        m_coo.push(layout.pair().start + r, c, val);
    }
    let m = CsrMatrix::from(&m_coo);
    let mt = m.transpose();

    let mut n = DVector::zeros(layout.rows());
    n.rows_mut(0, 3).copy_from(&b);
    n[layout.vy()] = q;
    n.rows_mut(layout.pair().start, 4 * horizon).copy_from(&h);

    let mtm = DMatrix::from(&(&mt * &m));
    let k = DMatrix::identity(cols, cols) + mtm * (rho / 2.0);
    let factor = Cholesky::new(k).expect("I + (rho/2) M^T M is positive definite");

    Ok(StackedProblem { layout, rho, a, b, p, q, g, h, m, mt, n, factor })
}
