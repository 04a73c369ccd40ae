//! Scenario and sweep files, CSV artifacts and run manifests.
//!
//! Floats are written with 17 significant digits so every value
//! round-trips exactly, and each CSV starts with a `# config_hash=` comment
//! line tying it to the fully-resolved configuration that produced it.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};
use crate::harness::{HorizonPolicy, SweepResult, SweepSpec};
use crate::problem::EngagementScenario;
use crate::solver::{GuidanceSolution, ResidualSample, SolverOptions, DEFAULT_MAX_ITER, DEFAULT_RHO};
use crate::Vec2;

/// On-disk scenario. Angles are in degrees, everything else SI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub p0: [f64; 2],
    pub v0: [f64; 2],
    /// Optional only inside sweep files, where the grid places the target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi0: Option<[f64; 2]>,
    pub nu0: [f64; 2],
    pub theta_f_deg: f64,
    pub u_ub: f64,
    pub dt: f64,
    #[serde(rename = "N")]
    pub horizon: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_pri: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_dual: Option<f64>,
}

fn default_rho() -> f64 {
    DEFAULT_RHO
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

fn vec2(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

impl ScenarioFile {
    pub fn scenario(&self) -> Result<EngagementScenario> {
        let chi0 = self.chi0.ok_or_else(|| invalid("missing field `chi0`"))?;
        self.scenario_with_target(vec2(chi0))
    }

    fn scenario_with_target(&self, chi0: Vec2) -> Result<EngagementScenario> {
        let sc = EngagementScenario {
            p0: vec2(self.p0),
            v0: vec2(self.v0),
            chi0,
            nu0: vec2(self.nu0),
            theta_f: self.theta_f_deg.to_radians(),
            u_ub: self.u_ub,
            dt: self.dt,
            horizon: self.horizon,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { rho: self.rho, max_iter: self.max_iter, eps_pri: self.eps_pri, eps_dual: self.eps_dual }
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioFile> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

/// Command-line solver settings; each one present replaces the file value.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverOverrides {
    pub rho: Option<f64>,
    pub max_iter: Option<usize>,
    pub eps_pri: Option<f64>,
    pub eps_dual: Option<f64>,
}

impl SolverOverrides {
    pub fn apply(&self, mut options: SolverOptions) -> SolverOptions {
        options.rho = self.rho.unwrap_or(options.rho);
        options.max_iter = self.max_iter.unwrap_or(options.max_iter);
        options.eps_pri = self.eps_pri.or(options.eps_pri);
        options.eps_dual = self.eps_dual.or(options.eps_dual);
        options
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum HorizonPolicyFile {
    Fixed,
    OglEngagement { max_steps: usize },
}

impl From<HorizonPolicyFile> for HorizonPolicy {
    fn from(p: HorizonPolicyFile) -> Self {
        match p {
            HorizonPolicyFile::Fixed => HorizonPolicy::Fixed,
            HorizonPolicyFile::OglEngagement { max_steps } => HorizonPolicy::OglEngagement { max_steps },
        }
    }
}

/// On-disk sweep. `base` carries every scenario field except the target
/// position; solver settings come from `base` as in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub base: ScenarioFile,
    pub range_values: Vec<f64>,
    pub crosstrack_values: Vec<f64>,
    #[serde(default = "default_policy")]
    pub horizon: HorizonPolicyFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub jitter: f64,
}

fn default_policy() -> HorizonPolicyFile {
    HorizonPolicyFile::Fixed
}

impl SweepFile {
    pub fn spec(&self) -> Result<SweepSpec> {
        let base = self.base.scenario_with_target(self.base.chi0.map(vec2).unwrap_or_else(Vec2::zeros))?;
        let spec = SweepSpec {
            range_values: self.range_values.clone(),
            crosstrack_values: self.crosstrack_values.clone(),
            base,
            solver: self.base.solver_options(),
            horizon: self.horizon.into(),
            seed: self.seed,
            jitter: self.jitter,
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub fn parse_sweep(text: &str) -> Result<SweepFile> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_sweep(path: &Path) -> Result<SweepFile> {
    parse_sweep(&std::fs::read_to_string(path)?)
}

/// Hex SHA-256 of the compact JSON form of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Full round-trip precision.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn csv_writer<W: Write>(mut out: W, hash: &str) -> Result<csv::Writer<W>> {
    writeln!(out, "# config_hash={hash}")?;
    Ok(csv::Writer::from_writer(out))
}

pub const TRAJECTORY_HEADER: [&str; 11] =
    ["t", "p_x", "p_y", "v_x", "v_y", "u_x", "u_y", "l_x", "l_y", "u_norm", "angle_u_l"];

/// One row per step `t = 0..=N`. The control columns of the terminal row
/// are empty, as is the angle wherever `u_t = 0`.
pub fn write_trajectory_csv<W: Write>(out: W, hash: &str, solution: &GuidanceSolution) -> Result<()> {
    let mut w = csv_writer(out, hash)?;
    w.write_record(TRAJECTORY_HEADER)?;
    let tr = &solution.trajectory;
    for t in 0..tr.p.len() {
        let u = solution.controls.get(t);
        let angle = u.filter(|u| u.norm() > 0.0).map(|u| u.angle(&tr.l[t]));
        w.write_record([
            t.to_string(),
            fmt_f64(tr.p[t].x),
            fmt_f64(tr.p[t].y),
            fmt_f64(tr.v[t].x),
            fmt_f64(tr.v[t].y),
            fmt_opt(u.map(|u| u.x)),
            fmt_opt(u.map(|u| u.y)),
            fmt_f64(tr.l[t].x),
            fmt_f64(tr.l[t].y),
            fmt_opt(u.map(|u| u.norm())),
            fmt_opt(angle),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_residuals_csv<W: Write>(out: W, hash: &str, history: &[ResidualSample]) -> Result<()> {
    let mut w = csv_writer(out, hash)?;
    w.write_record(["k", "r_norm", "s_norm"])?;
    for s in history {
        w.write_record([s.k.to_string(), fmt_f64(s.r_norm), fmt_f64(s.s_norm)])?;
    }
    w.flush()?;
    Ok(())
}

pub const SWEEP_HEADER: [&str; 14] = [
    "range",
    "crosstrack",
    "miss_admm",
    "miss_ogl",
    "angle_err_admm",
    "angle_err_ogl",
    "converged",
    "iters",
    "ogl_saturated",
    "horizon",
    "chi0_x",
    "chi0_y",
    "error",
    "cell",
];

pub fn write_sweep_csv<W: Write>(out: W, hash: &str, result: &SweepResult) -> Result<()> {
    let mut w = csv_writer(out, hash)?;
    w.write_record(SWEEP_HEADER)?;
    for (i, c) in result.cells.iter().enumerate() {
        w.write_record([
            fmt_f64(c.range),
            fmt_f64(c.crosstrack),
            fmt_f64(c.miss_admm),
            fmt_f64(c.miss_ogl),
            fmt_f64(c.angle_err_admm),
            fmt_f64(c.angle_err_ogl),
            c.converged.to_string(),
            c.iterations.to_string(),
            c.ogl_saturated.to_string(),
            c.horizon.to_string(),
            fmt_f64(c.chi0.x),
            fmt_f64(c.chi0.y),
            c.error.clone().unwrap_or_default(),
            i.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Scalar outcome of one solution, as written to summary files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSummary {
    pub horizon: usize,
    pub converged: bool,
    pub iterations: usize,
    pub miss_distance: f64,
    pub impact_angle_error: f64,
    pub max_ortho_violation: f64,
    pub max_accel_violation: f64,
    pub max_accel: f64,
    pub terminal_vy: f64,
    pub final_r_norm: Option<f64>,
    pub final_s_norm: Option<f64>,
}

impl From<&GuidanceSolution> for SolutionSummary {
    fn from(s: &GuidanceSolution) -> Self {
        let finite = |x: f64| x.is_finite().then_some(x);
        Self {
            horizon: s.controls.len(),
            converged: s.converged,
            iterations: s.iterations,
            miss_distance: s.miss_distance,
            impact_angle_error: s.impact_angle_error,
            max_ortho_violation: s.max_ortho_violation,
            max_accel_violation: s.max_accel_violation,
            max_accel: s.max_accel(),
            terminal_vy: s.terminal_vy,
            final_r_norm: finite(s.final_residuals.0),
            final_s_norm: finite(s.final_residuals.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCellRecord {
    pub range: f64,
    pub crosstrack: f64,
    pub chi0: [f64; 2],
    pub horizon: usize,
    pub miss_admm: Option<f64>,
    pub miss_ogl: Option<f64>,
    pub angle_err_admm: Option<f64>,
    pub angle_err_ogl: Option<f64>,
    pub ogl_saturated: bool,
    pub converged: bool,
    pub iterations: usize,
    pub error: Option<String>,
}

/// Sweep result with the spec that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepDocument<'a> {
    pub config_hash: &'a str,
    pub spec: &'a SweepFile,
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<SweepCellRecord>,
}

impl<'a> SweepDocument<'a> {
    pub fn new(config_hash: &'a str, spec: &'a SweepFile, result: &SweepResult) -> Self {
        let finite = |x: f64| x.is_finite().then_some(x);
        let cells = result
            .cells
            .iter()
            .map(|c| SweepCellRecord {
                range: c.range,
                crosstrack: c.crosstrack,
                chi0: [c.chi0.x, c.chi0.y],
                horizon: c.horizon,
                miss_admm: finite(c.miss_admm),
                miss_ogl: finite(c.miss_ogl),
                angle_err_admm: finite(c.angle_err_admm),
                angle_err_ogl: finite(c.angle_err_ogl),
                ogl_saturated: c.ogl_saturated,
                converged: c.converged,
                iterations: c.iterations,
                error: c.error.clone(),
            })
            .collect();
        Self { config_hash, spec, rows: result.rows, cols: result.cols, cells }
    }
}

/// Record of one CLI invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub input_path: String,
    pub config_hash: String,
    pub outputs: Vec<String>,
    pub duration_s: f64,
    pub version: String,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::GuidanceSolution;

    const NOMINAL: &str = r#"{
  "p0": [0, 0], "v0": [50, 0], "chi0": [600, -300], "nu0": [0, 0],
  "theta_f_deg": 90, "u_ub": 20, "dt": 0.1, "N": 200
}"#;

    #[test]
    fn parses_scenario_with_defaults() {
        let f = parse_scenario(NOMINAL).unwrap();
        let sc = f.scenario().unwrap();
        assert_eq!(sc.chi0, Vec2::new(600.0, -300.0));
        assert!((sc.theta_f - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(f.solver_options(), SolverOptions::default());
    }

    #[test]
    fn missing_key_is_reported_with_position() {
        let text = NOMINAL.replace(r#""u_ub": 20, "#, "");
        let msg = parse_scenario(&text).unwrap_err().to_string();
        assert!(msg.contains("missing field `u_ub`") && msg.contains("line"), "{msg}");
        let msg = parse_scenario("{\n  \"p0\": [0, 0],\n  \"v0\": [1, x]\n}").unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = NOMINAL.replace("\"N\"", "\"horizon\"");
        assert!(parse_scenario(&text).is_err());
    }

    #[test]
    fn invalid_values_fail_validation() {
        let text = NOMINAL.replace("\"dt\": 0.1", "\"dt\": -0.1");
        assert!(parse_scenario(&text).unwrap().scenario().is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let file = SolverOptions { rho: 0.3, max_iter: 500, eps_pri: Some(1e-4), eps_dual: None };
        let o = SolverOverrides { rho: Some(2.0), eps_dual: Some(1e-5), ..Default::default() };
        let merged = o.apply(file);
        assert_eq!(merged, SolverOptions { rho: 2.0, max_iter: 500, eps_pri: Some(1e-4), eps_dual: Some(1e-5) });
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let f = parse_scenario(NOMINAL).unwrap();
        let h = config_hash(&f).unwrap();
        assert_eq!(h.len(), 64);
        assert_eq!(h, config_hash(&parse_scenario(NOMINAL).unwrap()).unwrap());
        let mut g = f.clone();
        g.rho = 1.5;
        assert_ne!(h, config_hash(&g).unwrap());
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn trajectory_csv_layout() {
        let sc = parse_scenario(NOMINAL).unwrap().scenario().unwrap().with_horizon(3);
        let controls = vec![Vec2::new(0.0, 1.0), Vec2::zeros(), Vec2::new(2.0, 0.0)];
        let sol = GuidanceSolution::evaluate(&sc, controls).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, "abc", &sol).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# config_hash=abc");
        assert_eq!(lines[1], TRAJECTORY_HEADER.join(","));
        assert_eq!(lines.len(), 2 + 4);
        // Zero control: no angle. Terminal row: no control columns.
        assert!(lines[3].ends_with(",0.0000000000000000e0,"));
        let last: Vec<&str> = lines[5].split(',').collect();
        assert_eq!([last[5], last[6], last[9], last[10]], ["", "", "", ""]);
        let first: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(first[0], "0");
        assert_eq!(first[7].parse::<f64>().unwrap(), 600.0);
    }

    #[test]
    fn sweep_file_round_trip() {
        let text = r#"{
  "base": {"p0": [0, 0], "v0": [50, 0], "nu0": [0, 0], "theta_f_deg": 90,
           "u_ub": 20, "dt": 0.1, "N": 100, "rho": 1.0},
  "range_values": [400, 600], "crosstrack_values": [100, 200, 300],
  "horizon": {"policy": "ogl_engagement", "max_steps": 800}
}"#;
        let f = parse_sweep(text).unwrap();
        let spec = f.spec().unwrap();
        assert_eq!(spec.cell_count(), 6);
        assert_eq!(spec.horizon, HorizonPolicy::OglEngagement { max_steps: 800 });
        let again: SweepFile = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(again, f);
        let bad = text.replace("[400, 600]", "[600, 400]");
        assert!(parse_sweep(&bad).unwrap().spec().is_err());
    }
}
