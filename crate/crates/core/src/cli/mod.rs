//! Command-line front end: run configuration, solver dispatch, output
//! files and the timing and convergence studies.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::reference::{self, EvolutionRun, EvolveOptions};
use crate::shock1d;
use crate::sweep2d::Field2D;
use crate::systems::{build_model, list_models, Problem, Side, StateVector};

pub mod output;
pub mod pipeline;
pub mod study;

pub use pipeline::{sweep, Solution, SweepOptions, SweepOutcome, Timings};
pub use study::{study_convergence, study_scaling, ConvergenceRow, ConvergenceTable, ScalingRow, ScalingTable};

pub const MIN_GRID: usize = 8;
pub const DEFAULT_GRID_1D: usize = 257;
pub const DEFAULT_GRID_2D: usize = 129;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Sweep,
    Evolve,
    Both,
}

impl SolverKind {
    fn sweeps(self) -> bool {
        self != SolverKind::Evolve
    }

    fn evolves(self) -> bool {
        self != SolverKind::Sweep
    }
}

/// Everything that determines a run. Loaded from JSON; command-line flags
/// override individual keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// `[n]` in 1D; `[m]` (square) or `[mx, my]` in 2D. Empty picks a default.
    #[serde(default)]
    pub grid: Vec<usize>,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default)]
    pub alpha_brackets: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub shock_bracket: Option<(f64, f64)>,
    #[serde(default)]
    pub shock_field: Option<usize>,
    #[serde(default)]
    pub sides: Option<Vec<Side>>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Drives the random restart check of 1D shock solves.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub evolve: EvolveOptions,
    /// Grid sizes for the studies.
    #[serde(default)]
    pub sizes: Vec<usize>,
    /// Timed repetitions per size in the scaling study; the minimum counts.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

fn default_repeats() -> usize {
    3
}

impl RunConfig {
    pub fn new(problem: impl Into<String>) -> Self {
        RunConfig {
            problem: problem.into(),
            params: BTreeMap::new(),
            grid: Vec::new(),
            solver: SolverKind::Sweep,
            alpha_brackets: None,
            shock_bracket: None,
            shock_field: None,
            sides: None,
            out: None,
            seed: 0,
            evolve: EvolveOptions::default(),
            sizes: Vec::new(),
            repeats: default_repeats(),
        }
    }

    pub fn with_grid(mut self, grid: &[usize]) -> Self {
        self.grid = grid.to_vec();
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Build the model and check the configuration against it.
    pub fn problem(&self) -> Result<Problem> {
        let p = build_model(&self.problem, &self.params)?;
        if let Some(s) = self.grid.iter().find(|s| **s < MIN_GRID) {
            return Err(Error::Config(format!("grid size {s} is below the minimum {MIN_GRID}")));
        }
        let dims_ok = match p.dimension() {
            1 => self.grid.len() <= 1,
            _ => self.grid.len() <= 2,
        };
        if !dims_ok {
            return Err(Error::Config(format!("grid {:?} does not fit a {}D problem", self.grid, p.dimension())));
        }
        if let (Some(m), Some(br)) = (p.as_1d(), &self.alpha_brackets) {
            let need = m.boundary().left.free_parameters();
            if br.len() != need {
                return Err(Error::Config(format!("{} needs {need} parameter brackets, got {}", self.problem, br.len())));
            }
        }
        Ok(p)
    }

    pub fn grid_sizes(&self, problem: &Problem) -> Vec<usize> {
        if !self.grid.is_empty() {
            return self.grid.clone();
        }
        match problem.dimension() {
            1 => vec![DEFAULT_GRID_1D],
            _ => vec![DEFAULT_GRID_2D],
        }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            alpha_brackets: self.alpha_brackets.clone(),
            shock_bracket: self.shock_bracket,
            shock_field: self.shock_field,
            sides: self.sides.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionSummary {
    pub steps: usize,
    pub converged: bool,
    pub stagnated: bool,
    pub final_residual: f64,
    pub steady_tol: f64,
    pub cfl: f64,
}

impl From<&EvolutionRun> for EvolutionSummary {
    fn from(r: &EvolutionRun) -> Self {
        EvolutionSummary {
            steps: r.steps,
            converged: r.converged,
            stagnated: r.stagnated,
            final_residual: r.final_residual(),
            steady_tol: r.steady_tol,
            cfl: r.cfl,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub version: String,
    pub config: RunConfig,
    pub timings: Timings,
    pub diagnostics: Value,
    pub evolution: Option<EvolutionSummary>,
    pub comparison: Option<pipeline::Agreement>,
    pub restart: Option<Value>,
    pub files: Vec<String>,
}

/// Results of [`run`] kept in memory for callers that want more than the
/// report.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub report: RunReport,
    pub problem: Problem,
    pub sweep: Option<SweepOutcome>,
    pub evolution: Option<(EvolutionRun, EvolvedField)>,
}

#[derive(Debug, Clone)]
pub enum EvolvedField {
    OneD(Vec<StateVector>),
    TwoD(Field2D),
}

fn evolve(problem: &Problem, sizes: &[usize], opts: &EvolveOptions) -> Result<(EvolutionRun, EvolvedField)> {
    if let Some(m) = problem.as_1d() {
        let g = pipeline::grid_1d(m, sizes)?;
        let (run, u) = reference::evolve_lf_1d(m, &g, &reference::linear_init_1d(m, &g), opts)?;
        return Ok((run, EvolvedField::OneD(u)));
    }
    let model: &dyn crate::systems::Conservation2D = match problem {
        Problem::Scalar2D(m) => m,
        Problem::Euler2D(e) => e,
        _ => unreachable!(),
    };
    let g = pipeline::grid_2d(model.domain(), sizes)?;
    let (run, f) = reference::evolve_lf_2d(model, &g, &reference::model_init_2d(model, &g), opts)?;
    Ok((run, EvolvedField::TwoD(f)))
}

fn compare(problem: &Problem, sweep: &SweepOutcome, evolved: &EvolvedField) -> Option<pipeline::Agreement> {
    match (&sweep.solution, evolved) {
        (Solution::OneD { solutions, .. }, EvolvedField::OneD(u)) => {
            let m = problem.as_1d()?;
            // The LF run settles on one steady state; compare with the
            // closest sweep solution.
            solutions
                .iter()
                .map(|s| pipeline::agreement_1d(m, s, u, pipeline::EXCLUDE_CELLS as usize))
                .min_by(|a, b| a.l1.total_cmp(&b.l1))
        }
        (sol, EvolvedField::TwoD(f)) => {
            let field = sol.field2d()?;
            let keep = pipeline::smooth_mask(field, sol.curves(), pipeline::EXCLUDE_CELLS);
            let model: &dyn crate::systems::Conservation2D = match problem {
                Problem::Scalar2D(m) => m,
                Problem::Euler2D(e) => e,
                _ => return None,
            };
            Some(pipeline::agreement_2d(model, field, f, &keep))
        }
        _ => None,
    }
}

/// Re-solve a single 1D shock from random sub-brackets around it; every
/// restart should land within one cell.
fn restart_check(problem: &Problem, outcome: &SweepOutcome, seed: u64, trials: usize) -> Option<Value> {
    let m = problem.as_1d()?;
    let Solution::OneD { grid, solutions } = &outcome.solution else {
        return None;
    };
    if solutions.len() != 1 || m.boundary().left.free_parameters() > 0 {
        return None;
    }
    let xs = solutions[0].shock.as_ref()?.x_s;
    let left = shock1d::left_branch(m, &[], grid).ok()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = grid.h();
    let mut max_cells = 0.0_f64;
    let mut failures = 0;
    for _ in 0..trials {
        let lo = rng.random_range(grid.x_left..=(xs - 2.0 * h).max(grid.x_left));
        let hi = rng.random_range((xs + 2.0 * h).min(grid.x_right)..=grid.x_right);
        match shock1d::solve_shock_on_branch(m, &left, &[], (lo, hi), None) {
            Ok(s) => {
                let x = s.shock.as_ref().map_or(f64::NAN, |s| s.x_s);
                max_cells = max_cells.max((x - xs).abs() / h);
            }
            Err(_) => failures += 1,
        }
    }
    Some(json!({ "seed": seed, "trials": trials, "failures": failures, "max_cells": max_cells }))
}

/// Execute the configured solver(s) and, when `config.out` is set, write
/// the solution files and `report.json`.
pub fn run(config: &RunConfig) -> Result<RunResult> {
    let problem = config.problem()?;
    let sizes = config.grid_sizes(&problem);
    let mut timings = Timings::default();
    let sweep = if config.solver.sweeps() {
        let o = pipeline::sweep(&problem, &sizes, &config.sweep_options())?;
        timings = o.timings;
        Some(o)
    } else {
        None
    };
    let evolution = if config.solver.evolves() {
        let t = Instant::now();
        let e = evolve(&problem, &sizes, &config.evolve)?;
        timings.evolve = t.elapsed().as_secs_f64().max(1e-9);
        if !e.0.converged {
            warn!("evolution stopped before reaching the steady tolerance");
        }
        Some(e)
    } else {
        None
    };
    let comparison = match (&sweep, &evolution) {
        (Some(s), Some((_, f))) => compare(&problem, s, f),
        _ => None,
    };
    let restart = sweep.as_ref().and_then(|s| restart_check(&problem, s, config.seed, 5));
    let mut report = RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: RunConfig {
            grid: sizes,
            ..config.clone()
        },
        timings,
        diagnostics: sweep
            .as_ref()
            .map_or(Value::Null, |s| pipeline::diagnostics(&problem, &s.solution)),
        evolution: evolution.as_ref().map(|(r, _)| r.into()),
        comparison,
        restart,
        files: Vec::new(),
    };
    if let Some(dir) = &config.out {
        let t = Instant::now();
        write_outputs(dir, &problem, sweep.as_ref(), evolution.as_ref(), &mut report)?;
        report.timings.io = t.elapsed().as_secs_f64().max(1e-9);
        // Rewrite with the final I/O time.
        fs::write(dir.join("report.json"), output::to_json(&report)?)?;
    }
    info!("{} done: sweep {:.3}s", problem.id(), report.timings.sweep_total());
    Ok(RunResult {
        report,
        problem,
        sweep,
        evolution,
    })
}

fn write_outputs(
    dir: &Path,
    problem: &Problem,
    sweep: Option<&SweepOutcome>,
    evolution: Option<&(EvolutionRun, EvolvedField)>,
    report: &mut RunReport,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    if let Some(s) = sweep {
        match &s.solution {
            Solution::OneD { grid, solutions } => {
                let m = problem.as_1d().expect("1D problem");
                for (k, sol) in solutions.iter().enumerate() {
                    let name = if k == 0 { "field.csv".to_string() } else { format!("field_{k}.csv") };
                    output::write(dir, &name, &output::field_1d_csv(grid, m.size(), |j| sol.state(j).cloned()), &mut files)?;
                }
                output::write(dir, "curve.csv", &output::shocks_1d_csv(solutions), &mut files)?;
                if let Some(sol) = solutions.first() {
                    output::write(dir, "trace.csv", &output::eigen_trace_csv(m, sol), &mut files)?;
                }
            }
            sol => {
                let f = sol.field2d().expect("2D field");
                output::write(dir, "field.csv", &output::field_2d_csv(f), &mut files)?;
                output::write(dir, "curve.csv", &output::curves_csv(sol.curves()), &mut files)?;
            }
        }
    }
    if let Some((run, f)) = evolution {
        let text = match f {
            EvolvedField::OneD(u) => {
                let m = problem.as_1d().expect("1D problem");
                let g = pipeline::grid_1d(m, &report.config.grid)?;
                output::field_1d_csv(&g, m.size(), |j| Some(u[j].clone()))
            }
            EvolvedField::TwoD(f) => output::field_2d_csv(f),
        };
        output::write(dir, "lf_field.csv", &text, &mut files)?;
        output::write(dir, "lf_history.csv", &output::history_csv(run), &mut files)?;
    }
    files.push("report.json".into());
    report.files = files;
    Ok(())
}

/// `errors.json` contents for a failed run.
pub fn error_json(e: &Error) -> Value {
    let mut v = json!({
        "kind": e.kind(),
        "message": e.to_string(),
        "exit_code": e.exit_code(),
    });
    match e {
        Error::IncompleteCurve { partial, .. } => v["partial_curve"] = json!(partial),
        Error::Coverage { nodes } => v["uncovered"] = json!(nodes),
        _ => {}
    }
    v
}

#[derive(Parser, Debug)]
#[command(name = "fastsweep", version, about = "Fast sweeping steady-state solvers for hyperbolic conservation laws")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List the built-in problems.
    List,
    /// Solve one problem.
    Run(RunArgs),
    /// Time the sweep solver over a geometric sequence of grids.
    StudyScaling(StudyArgs),
    /// Error against the exact solution over a sequence of grids.
    StudyConvergence(StudyArgs),
    /// Sweep and Lax-Friedrichs evolution on the same grid, compared.
    Compare(RunArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub problem: Option<String>,
    /// `N`, `M` (square) or `MXxMY`.
    #[arg(long)]
    pub grid: Option<String>,
    /// JSON configuration; flags given here override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub solver: Option<SolverKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Model parameter override, `name=value`; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct StudyArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated grid sizes.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
}

fn parse_grid(s: &str) -> Result<Vec<usize>> {
    s.split(['x', 'X', ','])
        .map(|p| p.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad grid '{s}'"))))
        .collect()
}

/// Merge defaults, the JSON file and the flags, in increasing precedence.
pub fn resolve_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::new(
            args.problem
                .clone()
                .ok_or_else(|| Error::Config("--problem or --config is required".into()))?,
        ),
    };
    if let Some(p) = &args.problem {
        cfg.problem = p.clone();
    }
    if let Some(g) = &args.grid {
        cfg.grid = parse_grid(g)?;
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    if let Some(s) = args.solver {
        cfg.solver = s;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    for kv in &args.params {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("parameter '{kv}' is not NAME=VALUE")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Config(format!("parameter '{kv}' has no numeric value")))?;
        cfg.params.insert(k.trim().to_string(), v);
    }
    Ok(cfg)
}

fn report_error(e: &Error, out: Option<&Path>) -> i32 {
    eprintln!("error: {e}");
    if let Some(dir) = out {
        let _ = fs::create_dir_all(dir);
        let _ = fs::write(dir.join("errors.json"), serde_json::to_string_pretty(&error_json(e)).unwrap_or_default());
    }
    e.exit_code()
}

fn print_json<T: Serialize>(v: &T) {
    use std::io::Write;
    // A closed pipe downstream is not an error of the run.
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

/// Dispatch a parsed command line; returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match cli.command {
        Command::List => {
            print_json(&list_models());
            0
        }
        Command::Run(args) => run_verb(&args, None),
        Command::Compare(args) => run_verb(&args, Some(SolverKind::Both)),
        Command::StudyScaling(s) => study_verb(&s, true),
        Command::StudyConvergence(s) => study_verb(&s, false),
    }
}

fn run_verb(args: &RunArgs, force: Option<SolverKind>) -> i32 {
    let cfg = match resolve_config(args) {
        Ok(mut c) => {
            if let Some(s) = force {
                c.solver = s;
            }
            c
        }
        Err(e) => return report_error(&e, args.out.as_deref()),
    };
    match run(&cfg) {
        Ok(r) => {
            if force.is_some() {
                print_json(&json!({
                    "comparison": r.report.comparison,
                    "evolution": r.report.evolution,
                    "timings": r.report.timings,
                }));
            } else {
                print_json(&r.report);
            }
            0
        }
        Err(e) => report_error(&e, cfg.out.as_deref()),
    }
}

fn study_verb(s: &StudyArgs, scaling: bool) -> i32 {
    let mut cfg = match resolve_config(&s.run) {
        Ok(c) => c,
        Err(e) => return report_error(&e, s.run.out.as_deref()),
    };
    if !s.sizes.is_empty() {
        cfg.sizes = s.sizes.clone();
    }
    if let Some(r) = s.repeats {
        cfg.repeats = r;
    }
    let out = cfg.out.clone();
    let write = |name: &str, csv: String, json: String| -> Result<()> {
        if let Some(dir) = &out {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(format!("{name}.csv")), csv)?;
            fs::write(dir.join("report.json"), json)?;
        }
        Ok(())
    };
    let result = if scaling {
        study_scaling(&cfg).and_then(|t| {
            write("scaling", t.csv(), output::to_json(&t)?)?;
            print_json(&t);
            t.failure.map_or(Ok(()), Err)
        })
    } else {
        study_convergence(&cfg).and_then(|t| {
            write("convergence", t.csv(), output::to_json(&t)?)?;
            print_json(&t);
            t.failure.map_or(Ok(()), Err)
        })
    };
    match result {
        Ok(()) => 0,
        Err(e) => report_error(&e, out.as_deref()),
    }
}

/// Entry point of the binary.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    execute(Cli::parse())
}
