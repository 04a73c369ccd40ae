//! Convergence behaviour of the solver on the shipped nominal scenario.

use std::path::Path;

use divert_admm::io::load_scenario;
use divert_admm::solve;

#[test]
fn nominal_residuals_bottom_out_at_the_end() {
    let file = load_scenario(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/nominal.json")).unwrap();
    let sc = file.scenario().unwrap();
    let sol = solve(&sc, &file.solver_options().resolve(sc.horizon)).unwrap();
    assert!(sol.converged);
    assert_eq!(sol.history.len(), sol.iterations);

    // Residuals are not monotone for this nonconvex problem, but the best
    // iterate should come in the last tenth of the run.
    let worst = |s: &divert_admm::solver::ResidualSample| s.r_norm.max(s.s_norm);
    let best =
        (0..sol.history.len()).min_by(|&i, &j| worst(&sol.history[i]).total_cmp(&worst(&sol.history[j]))).unwrap();
    assert!(best >= sol.history.len() * 9 / 10, "best iterate {best} of {}", sol.history.len());

    assert!(sol.miss_distance < 1e-3);
    assert!(sol.impact_angle_error < 1e-3);
    assert!(sol.max_ortho_violation < 1e-3);
    assert!(sol.max_accel_violation <= 1e-6 * sc.u_ub);
    assert!(sol.terminal_vy >= -1e-6);
}
