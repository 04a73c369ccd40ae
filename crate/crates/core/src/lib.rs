//! Computational impact-angle guidance with a state-dependent maneuver
//! direction constraint.
//!
//! The guidance problem (planar double integrator, terminal intercept and
//! impact-angle constraints, bounded acceleration held perpendicular to the
//! line of sight) is solved with plain ADMM. The nonconvex
//! perpendicularity constraint is handled by a closed-form Euclidean
//! projection onto the set of vector pairs with a prescribed inter-angle,
//! see [`projections::project_angle_set`].
//!
//! The classical optimal guidance law is provided in [`ogl`] as a baseline,
//! and [`harness`] runs both methods over scenarios and sweeps.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod io;
pub mod ogl;
pub mod problem;
pub mod projections;
pub mod solver;

pub use error::{Error, Result};

pub use harness::{
    compare, min_feasible_horizon, sweep, Comparison, FeasibilityTolerance, HorizonPolicy, SweepCell, SweepResult,
    SweepSpec,
};
pub use ogl::{ogl_command, ogl_simulate, OglState};
pub use problem::{assemble, forward_simulate, EngagementScenario, StackedProblem, TrajectoryRecord};
pub use projections::{project_angle_set, Branch, VectorPair, VectorPairProjection};
pub use solver::{solve, GuidanceSolution, SolverConfig, SolverOptions, SolverState};

/// Planar vector used for positions, velocities, accelerations and LOS.
pub type Vec2 = nalgebra::Vector2<f64>;

/// Version string embedded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
