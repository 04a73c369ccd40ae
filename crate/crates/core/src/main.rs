//! `divert-admm` command-line entry point.
//!
//! Exit codes: 0 on success (converged), 2 when the solver stopped at its
//! iteration cap, 1 on any input or runtime error.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use divert_admm::harness::{compare, min_feasible_horizon, sweep, FeasibilityTolerance};
use divert_admm::io::{
    config_hash, load_scenario, load_sweep, write_json, write_residuals_csv, write_sweep_csv, write_trajectory_csv,
    RunManifest, ScenarioFile, SolutionSummary, SolverOverrides, SweepDocument,
};
use divert_admm::{solve, Error, GuidanceSolution, SolverOptions, VERSION};

#[derive(Debug, Parser)]
#[command(name = "divert-admm", version, about = "Impact-angle guidance by ADMM with an OGL baseline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one scenario with ADMM.
    Solve {
        /// Scenario JSON file.
        scenario: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Solve one scenario with ADMM and fly the OGL baseline on it.
    Compare {
        /// Scenario JSON file.
        scenario: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Compare both methods over a grid of target positions.
    Sweep {
        /// Sweep JSON file.
        spec: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        output: OutputFlags,
        /// Seed for jittered cell positions (overrides the spec file).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for the grid.
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Smallest horizon N in [n-lo, n-hi] with a feasible solution.
    MinHorizon {
        /// Scenario JSON file.
        scenario: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        output: OutputFlags,
        #[arg(long)]
        n_lo: usize,
        #[arg(long)]
        n_hi: usize,
        /// Scan every N instead of bisecting.
        #[arg(long)]
        linear_scan: bool,
        /// Largest accepted miss distance [m].
        #[arg(long, default_value_t = FeasibilityTolerance::default().miss)]
        miss_tol: f64,
        /// Largest accepted impact-angle error [rad].
        #[arg(long, default_value_t = FeasibilityTolerance::default().angle)]
        angle_tol: f64,
    },
}

/// Solver settings; each flag given replaces the scenario file value.
#[derive(Debug, Args)]
struct SolverFlags {
    /// ADMM penalty (overrides the file).
    #[arg(long)]
    rho: Option<f64>,
    /// Iteration cap (overrides the file).
    #[arg(long)]
    max_iter: Option<usize>,
    /// Primal residual tolerance (overrides the file).
    #[arg(long)]
    eps_pri: Option<f64>,
    /// Dual residual tolerance (overrides the file).
    #[arg(long)]
    eps_dual: Option<f64>,
}

impl SolverFlags {
    fn overrides(&self) -> SolverOverrides {
        SolverOverrides { rho: self.rho, max_iter: self.max_iter, eps_pri: self.eps_pri, eps_dual: self.eps_dual }
    }
}

#[derive(Debug, Args)]
struct OutputFlags {
    /// Artifact directory, created if missing.
    #[arg(long, env = "DIVERT_ADMM_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
}

/// Everything that determines a run's numeric output.
#[derive(Serialize)]
struct ResolvedRun<'a, T: Serialize> {
    command: &'a str,
    input: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    extra: Option<serde_json::Value>,
}

/// Scenario file with solver settings merged and tolerances made explicit.
fn resolve_scenario(file: &ScenarioFile, solver: &SolverFlags) -> (ScenarioFile, SolverOptions) {
    let options = solver.overrides().apply(file.solver_options());
    let config = options.resolve(file.horizon);
    let resolved = ScenarioFile {
        description: None,
        rho: config.rho,
        max_iter: config.max_iter,
        eps_pri: Some(config.eps_pri),
        eps_dual: Some(config.eps_dual),
        ..file.clone()
    };
    (resolved, options)
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, Error> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.display().to_string());
        p
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, Error> {
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    fn finish(mut self, command: &str, input: &Path, hash: &str, started: Instant) -> Result<(), Error> {
        let manifest_path = self.path("manifest.json");
        let manifest = RunManifest {
            command: command.into(),
            input_path: input.display().to_string(),
            config_hash: hash.into(),
            outputs: self.written,
            duration_s: started.elapsed().as_secs_f64(),
            version: VERSION.into(),
        };
        write_json(&manifest_path, &manifest)
    }
}

fn write_solution(
    out: &mut Outputs,
    prefix: &str,
    hash: &str,
    sol: &GuidanceSolution,
    residuals: bool,
) -> Result<(), Error> {
    write_trajectory_csv(out.create(&format!("{prefix}trajectory.csv"))?, hash, sol)?;
    if residuals {
        write_residuals_csv(out.create(&format!("{prefix}residuals.csv"))?, hash, &sol.history)?;
    }
    Ok(())
}

fn status(converged: bool) -> u8 {
    if converged {
        0
    } else {
        2
    }
}

fn cmd_solve(path: &Path, solver: &SolverFlags, output: &OutputFlags) -> Result<u8, Error> {
    let started = Instant::now();
    let file = load_scenario(path)?;
    let scenario = file.scenario()?;
    let (resolved, options) = resolve_scenario(&file, solver);
    let hash = config_hash(&ResolvedRun { command: "solve", input: &resolved, extra: None })?;
    let sol = solve(&scenario, &options.resolve(scenario.horizon))?;

    let mut out = Outputs::new(&output.out_dir)?;
    write_solution(&mut out, "", &hash, &sol, true)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        config_hash: &'a str,
        admm: SolutionSummary,
    }
    let summary_path = out.path("summary.json");
    write_json(&summary_path, &Summary { config_hash: &hash, admm: (&sol).into() })?;
    out.finish("solve", path, &hash, started)?;
    report(&sol, "admm");
    Ok(status(sol.converged))
}

fn cmd_compare(path: &Path, solver: &SolverFlags, output: &OutputFlags) -> Result<u8, Error> {
    let started = Instant::now();
    let file = load_scenario(path)?;
    let scenario = file.scenario()?;
    let (resolved, options) = resolve_scenario(&file, solver);
    let hash = config_hash(&ResolvedRun { command: "compare", input: &resolved, extra: None })?;
    let cmp = compare(&scenario, &options.resolve(scenario.horizon))?;

    let mut out = Outputs::new(&output.out_dir)?;
    write_solution(&mut out, "admm_", &hash, &cmp.admm, true)?;
    write_solution(&mut out, "ogl_", &hash, &cmp.ogl, false)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        config_hash: &'a str,
        admm: SolutionSummary,
        ogl: SolutionSummary,
        ogl_saturated: bool,
    }
    let summary_path = out.path("summary.json");
    write_json(
        &summary_path,
        &Summary {
            config_hash: &hash,
            admm: (&cmp.admm).into(),
            ogl: (&cmp.ogl).into(),
            ogl_saturated: cmp.ogl_saturated,
        },
    )?;
    out.finish("compare", path, &hash, started)?;
    report(&cmp.admm, "admm");
    report(&cmp.ogl, "ogl");
    Ok(status(cmp.admm.converged))
}

fn cmd_sweep(
    path: &Path,
    solver: &SolverFlags,
    output: &OutputFlags,
    seed: Option<u64>,
    parallel: Option<usize>,
) -> Result<u8, Error> {
    let started = Instant::now();
    let mut file = load_sweep(path)?;
    let options = solver.overrides().apply(file.base.solver_options());
    file.base.rho = options.rho;
    file.base.max_iter = options.max_iter;
    file.base.eps_pri = options.eps_pri;
    file.base.eps_dual = options.eps_dual;
    file.seed = seed.or(file.seed);
    if parallel == Some(0) {
        return Err(Error::InvalidInput("--parallel must be at least 1".into()));
    }
    let spec = file.spec()?;
    let hashed = divert_admm::io::SweepFile { description: None, ..file.clone() };
    let hash = config_hash(&ResolvedRun { command: "sweep", input: &hashed, extra: None })?;
    let result = sweep(&spec, parallel)?;

    let mut out = Outputs::new(&output.out_dir)?;
    write_sweep_csv(out.create("sweep.csv")?, &hash, &result)?;
    let json_path = out.path("sweep.json");
    write_json(&json_path, &SweepDocument::new(&hash, &file, &result))?;
    out.finish("sweep", path, &hash, started)?;
    let failed = result.cells.iter().filter(|c| c.error.is_some()).count();
    let converged = result.cells.iter().filter(|c| c.converged).count();
    println!("sweep: {} cells, {converged} converged, {failed} failed", result.cells.len());
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_min_horizon(
    path: &Path,
    solver: &SolverFlags,
    output: &OutputFlags,
    n_lo: usize,
    n_hi: usize,
    linear_scan: bool,
    miss_tol: f64,
    angle_tol: f64,
) -> Result<u8, Error> {
    let started = Instant::now();
    let file = load_scenario(path)?;
    let scenario = file.scenario()?;
    let options = solver.overrides().apply(file.solver_options());
    let tol = FeasibilityTolerance { miss: miss_tol, angle: angle_tol, ..FeasibilityTolerance::default() };
    let resolved = ScenarioFile {
        description: None,
        rho: options.rho,
        max_iter: options.max_iter,
        eps_pri: options.eps_pri,
        eps_dual: options.eps_dual,
        ..file.clone()
    };
    let extra = serde_json::json!({
        "n_lo": n_lo, "n_hi": n_hi, "linear_scan": linear_scan,
        "miss_tol": tol.miss, "angle_tol": tol.angle, "ortho_tol": tol.ortho,
    });
    let hash = config_hash(&ResolvedRun { command: "min-horizon", input: &resolved, extra: Some(extra) })?;
    let n = min_feasible_horizon(&scenario, &options, n_lo, n_hi, &tol, linear_scan)?;

    let mut out = Outputs::new(&output.out_dir)?;
    let result_path = out.path("min_horizon.json");
    write_json(
        &result_path,
        &serde_json::json!({
            "config_hash": hash, "min_horizon": n, "n_lo": n_lo, "n_hi": n_hi,
            "method": if linear_scan { "linear_scan" } else { "bisection" },
        }),
    )?;
    out.finish("min-horizon", path, &hash, started)?;
    println!("min-horizon: N = {n}");
    Ok(0)
}

fn report(sol: &GuidanceSolution, label: &str) {
    println!(
        "{label}: converged={} iterations={} miss={:.6e} m angle_error={:.6e} rad",
        sol.converged, sol.iterations, sol.miss_distance, sol.impact_angle_error
    );
}

fn run(cli: Cli) -> Result<u8, (PathBuf, Error)> {
    match &cli.command {
        Command::Solve { scenario, solver, output } => {
            cmd_solve(scenario, solver, output).map_err(|e| (scenario.clone(), e))
        }
        Command::Compare { scenario, solver, output } => {
            cmd_compare(scenario, solver, output).map_err(|e| (scenario.clone(), e))
        }
        Command::Sweep { spec, solver, output, seed, parallel } => {
            cmd_sweep(spec, solver, output, *seed, *parallel).map_err(|e| (spec.clone(), e))
        }
        Command::MinHorizon { scenario, solver, output, n_lo, n_hi, linear_scan, miss_tol, angle_tol } => {
            cmd_min_horizon(scenario, solver, output, *n_lo, *n_hi, *linear_scan, *miss_tol, *angle_tol)
                .map_err(|e| (scenario.clone(), e))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err((path, e)) => {
            eprintln!("error: {}: {e}", path.display());
            ExitCode::from(1)
        }
    }
}
