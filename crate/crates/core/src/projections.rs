//! Euclidean projections used by the z-updates.
//!
//! The acceleration bound and the terminal half-space are convex and have
//! the usual one-line projections. The perpendicularity constraint between
//! `u_t` and `l_t` is the nonconvex set
//! `{ (a, b) : angle(a, b) = theta }`, whose projection is computed in
//! closed form: both vectors are rotated inside their common plane, `a` by
//! `psi` and `b` by the remaining `|phi - theta| - psi`, and each is replaced
//! by the foot of its perpendicular on the rotated ray. The split `psi`
//! minimizes
//!
//! ```text
//! g(psi) = |a|^2 sin^2(psi) + |b|^2 sin^2(|phi - theta| - psi)
//! ```
//!
//! which is a pure sinusoid in `2 psi`, so the two-argument arctangent of
//! its phasor gives the global minimizer.

use nalgebra::{DVector, Rotation2};

use crate::error::{Error, Result};
use crate::Vec2;

/// Pairs closer than this to the target angle are left untouched [rad].
pub const FEASIBLE_ANGLE_TOL: f64 = 1e-12;

/// Below this `|sin(phi)|` the 2x2 reconstruction system is too
/// ill-conditioned and the rotated rays are built directly.
const MIN_SYSTEM_SINE: f64 = 1e-6;

/// Projects `x` onto the closed disc of the given radius.
pub fn project_ball(x: Vec2, radius: f64) -> Vec2 {
    let norm = x.norm();
    if norm <= radius {
        x
    } else {
        x * (radius / norm)
    }
}

/// Positive part, the projection onto `[0, inf)`.
pub fn project_halfspace(x: f64) -> f64 {
    x.max(0.0)
}

/// Unsigned angle in `[0, pi]`.
pub fn angle_between(alpha: &Vec2, beta: &Vec2) -> Result<f64> {
    if alpha.norm() == 0.0 || beta.norm() == 0.0 {
        return Err(Error::Degenerate);
    }
    Ok(alpha.perp(beta).abs().atan2(alpha.dot(beta)))
}

/// One `(u_t, l_t)` point to be projected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorPair {
    pub alpha: Vec2,
    pub beta: Vec2,
}

impl VectorPair {
    pub fn new(alpha: Vec2, beta: Vec2) -> Self {
        Self { alpha, beta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    AlreadyFeasible,
    /// Angle was larger than the target: the pair was closed.
    Narrow,
    /// Angle was smaller than the target: the pair was opened.
    Wide,
    /// A zero vector; the angle is undefined and the pair is kept.
    DegenerateZero,
    /// Parallel or antiparallel input, opened/closed with the fixed
    /// orientation: `alpha` counterclockwise, `beta` clockwise.
    DegenerateCollinear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorPairProjection {
    pub z_alpha: Vec2,
    pub z_beta: Vec2,
    pub branch: Branch,
    /// Rotation applied to `alpha` [rad]; 0 when nothing was rotated.
    pub psi: f64,
}

impl VectorPairProjection {
    fn unchanged(pair: &VectorPair, branch: Branch) -> Self {
        Self { z_alpha: pair.alpha, z_beta: pair.beta, branch, psi: 0.0 }
    }

    /// `|alpha - z_alpha|^2 + |beta - z_beta|^2`.
    pub fn distance_squared(&self, pair: &VectorPair) -> f64 {
        (pair.alpha - self.z_alpha).norm_squared() + (pair.beta - self.z_beta).norm_squared()
    }
}

/// Phasor coefficients of `g'(psi) = gamma sin(2 psi) - delta cos(2 psi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSplit {
    pub gamma: f64,
    pub delta: f64,
    pub omega: f64,
}

impl AngleSplit {
    /// `norm_a`, `norm_b` are the vector lengths, `offset = |phi - theta|`.
    pub fn new(norm_a: f64, norm_b: f64, offset: f64) -> Self {
        let (a2, b2) = (norm_a * norm_a, norm_b * norm_b);
        let (s, c) = (2.0 * offset).sin_cos();
        let gamma = a2 + b2 * c;
        let delta = b2 * s;
        Self { gamma, delta, omega: delta.atan2(gamma) }
    }

    /// Normalized stationarity residual `|gamma sin 2psi - delta cos 2psi| / |(gamma, delta)|`.
    pub fn stationarity(&self, psi: f64) -> f64 {
        let (s, c) = (2.0 * psi).sin_cos();
        let scale = self.gamma.hypot(self.delta);
        if scale == 0.0 {
            return 0.0;
        }
        (self.gamma * s - self.delta * c).abs() / scale
    }
}

/// Objective of the rotation split for lengths `a`, `b` and offset.
fn split_cost(norm_a: f64, norm_b: f64, offset: f64, psi: f64) -> f64 {
    let (sa, sb) = (psi.sin(), (offset - psi).sin());
    norm_a * norm_a * sa * sa + norm_b * norm_b * sb * sb
}

/// Optimal rotation of `alpha` for the given lengths and offset.
///
/// Each vector may rotate by at most a right angle, otherwise its foot of
/// perpendicular degenerates. For `theta = pi/2` the offset never exceeds
/// `pi/2` and the unconstrained minimizer `omega / 2` always lies inside
/// the window; for other angles it is clamped to whichever window end has
/// the lower cost.
fn optimal_psi(norm_a: f64, norm_b: f64, offset: f64) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    let psi = AngleSplit::new(norm_a, norm_b, offset).omega / 2.0;
    let lo = (offset - FRAC_PI_2).max(0.0);
    let hi = offset.min(FRAC_PI_2);
    if (lo..=hi).contains(&psi) {
        psi
    } else if split_cost(norm_a, norm_b, offset, lo) <= split_cost(norm_a, norm_b, offset, hi) {
        lo
    } else {
        hi
    }
}

/// Closed-form projection of `pair` onto `{ angle(z_alpha, z_beta) = theta }`.
///
/// # Panics
///
/// If `theta` is not in `(0, pi)`.
pub fn project_angle_set(pair: &VectorPair, theta: f64) -> VectorPairProjection {
    assert!(theta > 0.0 && theta < std::f64::consts::PI, "target angle must lie in (0, pi), got {theta}");
    let (alpha, beta) = (pair.alpha, pair.beta);
    let (na, nb) = (alpha.norm(), beta.norm());
    if na == 0.0 || nb == 0.0 {
        return VectorPairProjection::unchanged(pair, Branch::DegenerateZero);
    }
    let cross = alpha.perp(&beta);
    let phi = cross.abs().atan2(alpha.dot(&beta));
    if (phi - theta).abs() <= FEASIBLE_ANGLE_TOL {
        return VectorPairProjection::unchanged(pair, Branch::AlreadyFeasible);
    }
    let narrow = phi > theta;
    let offset = (phi - theta).abs();
    let psi = optimal_psi(na, nb, offset);
    let rest = offset - psi;

    if cross == 0.0 {
        let z_alpha = Rotation2::new(psi) * alpha * psi.cos();
        let z_beta = Rotation2::new(-rest) * beta * rest.cos();
        return VectorPairProjection { z_alpha, z_beta, branch: Branch::DegenerateCollinear, psi };
    }

    let branch = if narrow { Branch::Narrow } else { Branch::Wide };
    let (z_alpha, z_beta) = if cross.abs() >= MIN_SYSTEM_SINE * na * nb {
        let d = if narrow {
            [
                na * na * psi.cos().powi(2),
                na * nb * psi.cos() * (phi - psi).cos(),
                na * nb * rest.cos() * (theta + psi).cos(),
                nb * nb * rest.cos().powi(2),
            ]
        } else {
            [
                na * na * psi.cos().powi(2),
                na * nb * psi.cos() * (phi + psi).cos(),
                na * nb * rest.cos() * (theta - psi).cos(),
                nb * nb * rest.cos().powi(2),
            ]
        };
        // [alpha^T; beta^T] z = rhs, solved per unknown vector.
        let solve = |r0: f64, r1: f64| Vec2::new(beta.y * r0 - alpha.y * r1, alpha.x * r1 - beta.x * r0) / cross;
        (solve(d[0], d[1]), solve(d[2], d[3]))
    } else {
        // Nearly parallel: rotate directly; alpha turns toward beta when
        // closing the pair and away from it when opening.
        let orient = cross.signum();
        let sign = if narrow { orient } else { -orient };
        (Rotation2::new(sign * psi) * alpha * psi.cos(), Rotation2::new(-sign * rest) * beta * rest.cos())
    };
    VectorPairProjection { z_alpha, z_beta, branch, psi }
}

/// Coefficients of the stationarity condition for `pair`, or `None` when the
/// closed form does not apply (zero vector or already feasible).
pub fn angle_split(pair: &VectorPair, theta: f64) -> Option<AngleSplit> {
    let phi = angle_between(&pair.alpha, &pair.beta).ok()?;
    if (phi - theta).abs() <= FEASIBLE_ANGLE_TOL {
        return None;
    }
    Some(AngleSplit::new(pair.alpha.norm(), pair.beta.norm(), (phi - theta).abs()))
}

/// Projects every `(u_t, l_t)` pair of a stacked `(u, l)` point.
///
/// `eta` holds the 2N control entries followed by the 2N LOS entries.
pub fn project_c3_stack(eta: &DVector<f64>, theta: f64, horizon: usize) -> Result<DVector<f64>> {
    if eta.len() != 4 * horizon {
        return Err(Error::Dimension { expected: 4 * horizon, actual: eta.len() });
    }
    let mut out = DVector::zeros(eta.len());
    project_c3_into(eta.as_slice(), theta, out.as_mut_slice());
    Ok(out)
}

/// Slice form of [`project_c3_stack`]; lengths must already agree.
pub(crate) fn project_c3_into(eta: &[f64], theta: f64, out: &mut [f64]) {
    let half = eta.len() / 2;
    let (u, l) = eta.split_at(half);
    let (zu, zl) = out.split_at_mut(half);
    for t in 0..half / 2 {
        let i = 2 * t;
        let pair = VectorPair::new(Vec2::new(u[i], u[i + 1]), Vec2::new(l[i], l[i + 1]));
        let proj = project_angle_set(&pair, theta);
        zu[i] = proj.z_alpha.x;
        zu[i + 1] = proj.z_alpha.y;
        zl[i] = proj.z_beta.x;
        zl[i + 1] = proj.z_beta.y;
    }
}

pub mod oracle {
    //! Brute-force reference for [`project_angle_set`](super::project_angle_set).
    //!
    //! Sweeps the rotation split on a uniform grid, refines the best cell by
    //! golden-section search and rebuilds the outputs as perpendicular feet
    //! on explicitly rotated rays. Slow; intended for tests.

    use super::{Branch, VectorPair, VectorPairProjection, FEASIBLE_ANGLE_TOL};
    use crate::Vec2;

    const GOLDEN_TOL: f64 = 1e-12;

    fn cost(na: f64, nb: f64, offset: f64, psi: f64) -> f64 {
        na * na * psi.sin().powi(2) + nb * nb * (offset - psi).sin().powi(2)
    }

    fn unit_at(angle: f64) -> Vec2 {
        Vec2::new(angle.cos(), angle.sin())
    }

    fn foot(v: Vec2, dir: Vec2) -> Vec2 {
        dir * v.dot(&dir)
    }

    fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        while hi - lo > GOLDEN_TOL {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = f(x2);
            }
        }
        0.5 * (lo + hi)
    }

    /// Grid plus golden-section minimizer over `psi in [0, |phi - theta|]`.
    ///
    /// # Panics
    ///
    /// If `grid < 10_000`.
    pub fn oracle_project_angle_set(pair: &VectorPair, theta: f64, grid: usize) -> VectorPairProjection {
        assert!(grid >= 10_000, "oracle grid must have at least 1e4 cells");
        let (a, b) = (pair.alpha, pair.beta);
        let (na, nb) = (a.norm(), b.norm());
        let keep = |branch| VectorPairProjection { z_alpha: a, z_beta: b, branch, psi: 0.0 };
        if na == 0.0 || nb == 0.0 {
            return keep(Branch::DegenerateZero);
        }
        let heading_a = a.y.atan2(a.x);
        let heading_b = b.y.atan2(b.x);
        // signed angle from a to b in (-pi, pi]
        let mut signed = heading_b - heading_a;
        while signed > std::f64::consts::PI {
            signed -= 2.0 * std::f64::consts::PI;
        }
        while signed <= -std::f64::consts::PI {
            signed += 2.0 * std::f64::consts::PI;
        }
        let phi = signed.abs();
        if (phi - theta).abs() <= FEASIBLE_ANGLE_TOL {
            return keep(Branch::AlreadyFeasible);
        }
        let offset = (phi - theta).abs();

        let step = offset / grid as f64;
        let best = (0..=grid)
            .map(|i| (i, cost(na, nb, offset, i as f64 * step)))
            .fold((0, f64::INFINITY), |acc, (i, c)| if c < acc.1 { (i, c) } else { acc })
            .0;
        let lo = best.saturating_sub(1) as f64 * step;
        let hi = ((best + 1).min(grid)) as f64 * step;
        let psi = golden_section(|x| cost(na, nb, offset, x), lo, hi);
        let rest = offset - psi;

        let collinear = a.perp(&b) == 0.0;
        // Direction in which a turns: toward b when closing, away when opening.
        let toward = if signed >= 0.0 { 1.0 } else { -1.0 };
        let turn_a = if collinear {
            1.0
        } else if phi > theta {
            toward
        } else {
            -toward
        };
        let dir_a = unit_at(heading_a + turn_a * psi);
        let dir_b = unit_at(heading_b - turn_a * rest);
        let branch = if collinear {
            Branch::DegenerateCollinear
        } else if phi > theta {
            Branch::Narrow
        } else {
            Branch::Wide
        };
        VectorPairProjection { z_alpha: foot(a, dir_a), z_beta: foot(b, dir_b), branch, psi }
    }
}
