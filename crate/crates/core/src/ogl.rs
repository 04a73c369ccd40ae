//! Classical impact-angle optimal guidance law, flown closed loop on the
//! same double integrator and acceleration bound as the ADMM solution.

use crate::error::Result;
use crate::problem::EngagementScenario;
use crate::solver::GuidanceSolution;
use crate::Vec2;

/// Closing-speed floor used in the time-to-go estimate [m/s].
pub const CLOSING_SPEED_FLOOR: f64 = 1e-6;

/// Time-to-go floor as a multiple of the step size.
pub const TGO_FLOOR_STEPS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OglState {
    /// LOS angle [rad].
    pub sigma: f64,
    /// LOS rate [rad/s].
    pub sigma_dot: f64,
    /// Closing velocity `-d|l|/dt` [m/s].
    pub closing_velocity: f64,
    /// Time to go [s].
    pub t_go: f64,
}

impl OglState {
    /// Relative geometry from LOS `l` and its rate `l_dot`.
    ///
    /// Returns `None` at zero range, where the LOS is undefined.
    pub fn from_relative(l: &Vec2, l_dot: &Vec2, dt: f64) -> Option<Self> {
        let range = l.norm();
        if range == 0.0 {
            return None;
        }
        let closing_velocity = -l.dot(l_dot) / range;
        let t_go = (range / closing_velocity.max(CLOSING_SPEED_FLOOR)).max(TGO_FLOOR_STEPS * dt);
        Some(Self { sigma: l.y.atan2(l.x), sigma_dot: l.perp(l_dot) / (range * range), closing_velocity, t_go })
    }
}

/// Wraps an angle into `(-pi, pi]`.
fn wrap(angle: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let w = (angle + pi).rem_euclid(2.0 * pi) - pi;
    if w == -pi {
        pi
    } else {
        w
    }
}

/// `a = V_c (4 sigma_dot + 2 (sigma - theta_f) / t_go)`, unclamped.
///
/// The angle difference is wrapped into `(-pi, pi]` so the command does not
/// jump when the LOS crosses the branch cut of `atan2`.
pub fn ogl_command(state: &OglState, theta_f: f64) -> f64 {
    state.closing_velocity * (4.0 * state.sigma_dot + 2.0 * wrap(state.sigma - theta_f) / state.t_go)
}

/// Closed-loop run with the commanded (pre-clamp) lateral accelerations.
#[derive(Debug, Clone, PartialEq)]
pub struct OglTrace {
    pub solution: GuidanceSolution,
    pub commands: Vec<f64>,
}

impl OglTrace {
    /// Whether any command exceeded the acceleration bound.
    pub fn saturated(&self, u_ub: f64) -> bool {
        self.commands.iter().any(|a| a.abs() > u_ub)
    }
}

/// Flies the law for N steps. Positive commands act along the LOS rotated
/// counterclockwise by a right angle.
pub fn ogl_trace(scenario: &EngagementScenario) -> Result<OglTrace> {
    scenario.validate()?;
    let (mut p, mut v) = (scenario.p0, scenario.v0);
    let mut controls = Vec::with_capacity(scenario.horizon);
    let mut commands = Vec::with_capacity(scenario.horizon);
    for t in 0..scenario.horizon {
        let l = scenario.los(t, &p);
        let l_dot = scenario.nu0 - v;
        let (a, u) = match OglState::from_relative(&l, &l_dot, scenario.dt) {
            Some(state) => {
                let a = ogl_command(&state, scenario.theta_f);
                let normal = Vec2::new(-l.y, l.x) / l.norm();
                (a, normal * a.clamp(-scenario.u_ub, scenario.u_ub))
            }
            None => (0.0, Vec2::zeros()),
        };
        commands.push(a);
        controls.push(u);
        p += v * scenario.dt;
        v += u * scenario.dt;
    }
    let mut solution = GuidanceSolution::evaluate(scenario, controls)?;
    solution.iterations = scenario.horizon;
    solution.converged = true;
    Ok(OglTrace { solution, commands })
}

pub fn ogl_simulate(scenario: &EngagementScenario) -> Result<GuidanceSolution> {
    ogl_trace(scenario).map(|t| t.solution)
}
