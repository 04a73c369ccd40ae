//! Property tests for the vector-pair projection.

use std::f64::consts::FRAC_PI_2;

use divert_admm::projections::{angle_between, project_angle_set};
use divert_admm::{Branch, Vec2, VectorPair};
use nalgebra::Rotation2;
use proptest::prelude::*;

fn vec2() -> impl Strategy<Value = Vec2> {
    (-1e3f64..1e3, -1e3f64..1e3).prop_map(|(x, y)| Vec2::new(x, y))
}

fn pair() -> impl Strategy<Value = VectorPair> {
    (vec2(), vec2())
        .prop_filter("non-degenerate", |(a, b)| a.norm() > 1e-3 && b.norm() > 1e-3)
        .prop_map(|(a, b)| VectorPair::new(a, b))
}

fn scale(pair: &VectorPair) -> f64 {
    pair.alpha.norm().max(pair.beta.norm())
}

proptest! {
    #[test]
    fn output_is_feasible(p in pair()) {
        let proj = project_angle_set(&p, FRAC_PI_2);
        // Shrinking a vector to zero is a legitimate projection.
        if proj.z_alpha.norm() > 1e-9 * scale(&p) && proj.z_beta.norm() > 1e-9 * scale(&p) {
            let angle = angle_between(&proj.z_alpha, &proj.z_beta).unwrap();
            prop_assert!((angle - FRAC_PI_2).abs() < 1e-9, "angle {angle}");
        }
    }

    #[test]
    fn projection_is_idempotent(p in pair()) {
        let once = project_angle_set(&p, FRAC_PI_2);
        let twice = project_angle_set(&VectorPair::new(once.z_alpha, once.z_beta), FRAC_PI_2);
        let tol = 1e-9 * scale(&p);
        prop_assert!((twice.z_alpha - once.z_alpha).norm() <= tol);
        prop_assert!((twice.z_beta - once.z_beta).norm() <= tol);
    }

    #[test]
    fn projection_commutes_with_rotation(p in pair(), angle in -3.0f64..3.0) {
        let proj = project_angle_set(&p, FRAC_PI_2);
        prop_assume!(proj.branch != Branch::DegenerateCollinear);
        let r = Rotation2::new(angle);
        let rotated = project_angle_set(&VectorPair::new(r * p.alpha, r * p.beta), FRAC_PI_2);
        let tol = 1e-9 * scale(&p);
        prop_assert!((rotated.z_alpha - r * proj.z_alpha).norm() <= tol);
        prop_assert!((rotated.z_beta - r * proj.z_beta).norm() <= tol);
    }

    #[test]
    fn never_farther_than_a_feasible_candidate(p in pair()) {
        // Dropping beta onto the normal of alpha is always feasible.
        let proj = project_angle_set(&p, FRAC_PI_2);
        let a_hat = p.alpha.normalize();
        let candidate = VectorPair::new(p.alpha, p.beta - a_hat * a_hat.dot(&p.beta));
        let dc = (p.beta - candidate.beta).norm_squared();
        prop_assert!(proj.distance_squared(&p) <= dc * (1.0 + 1e-12) + 1e-12 * scale(&p).powi(2));
    }
}
