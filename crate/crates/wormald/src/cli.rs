//! `wormald` command line.
//!
//! Exit codes: 0 success (including runs whose ODE left the domain, flagged
//! as `domain_exited` in the manifest), 1 IO failure, 2 invalid
//! configuration, 3 numerical failure, 4 a hypothesis check failed.

use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use wormald_core::analysis::{self, DeviationReport};
use wormald_core::coupon::{self, TruncationLevel};
use wormald_core::mc::{self, HypothesisReport, RunPlan};
use wormald_core::ode::{self, IntegratorConfig, Trajectory};
use wormald_core::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::{parallel, report};

const RNG_DESCRIPTION: &str = "xoshiro256** seeded through splitmix64; \
run i uses seed mix64(master ^ 0x9E3779B97F4A7C15 * (i + 1))";

#[derive(Parser, Debug)]
#[command(name = "wormald", version, about = "Differential-equation method experiments on the coupon-collecting process")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the coupon ODE system and write ode.csv
    Solve(Flags),
    /// Simulate coupon runs and write trajectory CSVs
    Simulate(Flags),
    /// Simulate, integrate and write trajectory.csv, ode.csv, deviation.csv
    Compare(Flags),
    /// Mean sup-deviation across n with a power-law fit; writes scaling.csv
    Scaling(Flags),
    /// Cover-time tails against the limit expressions; writes gumbel.csv
    Gumbel(Flags),
    /// Empirical check of increment, drift and Lipschitz hypotheses; writes check.json
    Check(Flags),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Simulate(_) => "simulate",
            Command::Compare(_) => "compare",
            Command::Scaling(_) => "scaling",
            Command::Gumbel(_) => "gumbel",
            Command::Check(_) => "check",
        }
    }

    fn flags(&self) -> &Flags {
        match self {
            Command::Solve(f)
            | Command::Simulate(f)
            | Command::Compare(f)
            | Command::Scaling(f)
            | Command::Gumbel(f)
            | Command::Check(f) => f,
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
struct Flags {
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of coupon types
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Truncation level (tracked copy counts 0..=l plus overflow)
    #[arg(long)]
    l: Option<usize>,
    /// Horizon in scaled time
    #[arg(long = "s-max")]
    s_max: Option<f64>,
    /// RK4 step
    #[arg(long)]
    h: Option<f64>,
    #[arg(long = "grid-stride")]
    grid_stride: Option<usize>,
    /// Comma-separated offsets c for the cover-time threshold n ln n + c n
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    cs: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated sizes for the scaling study
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    /// Pilot states for the drift check
    #[arg(long = "state-samples")]
    state_samples: Option<usize>,
    /// Output directory (default: $WORMALD_OUT_DIR, else the working directory)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Flags {
    fn to_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            n: self.n,
            runs: self.runs,
            seed: self.seed,
            l: self.l,
            s_max: self.s_max,
            h: self.h,
            grid_stride: self.grid_stride,
            cs: self.cs.clone(),
            trials: self.trials,
            ns: self.ns.clone(),
            state_samples: self.state_samples,
            out: self.out.clone(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(Error),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("hypothesis check failed")]
    CheckFailed,
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::CheckFailed => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("wormald {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

/// Fully resolved parameters shared by the subcommands.
struct Params {
    config: ExperimentConfig,
    out_dir: PathBuf,
}

impl Params {
    fn resolve(flags: &Flags) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let config = flags.to_config().overlay(file);
        let out_dir = config.output_dir();
        Ok(Params { config, out_dir })
    }

    fn l(&self) -> Result<TruncationLevel, CliError> {
        Ok(TruncationLevel::new(self.config.l.unwrap_or(coupon::DEFAULT_TRUNCATION))?)
    }

    fn seed(&self) -> u64 {
        self.config.seed.unwrap_or(0)
    }

    fn runs(&self, default: usize) -> usize {
        self.config.runs.unwrap_or(default)
    }

    fn n(&self, default: usize) -> Result<usize, CliError> {
        match self.config.n.unwrap_or(default) {
            0 => Err(CliError::Config("n must be at least 1".into())),
            n => Ok(n),
        }
    }

    fn s_max(&self, default: f64) -> Result<f64, CliError> {
        let s = self.config.s_max.unwrap_or(default);
        if s.is_nan() || s <= 0.0 || s.is_infinite() {
            return Err(CliError::Config("s-max must be positive and finite".into()));
        }
        Ok(s)
    }

    fn integrator(&self, s_max: f64) -> Result<IntegratorConfig, CliError> {
        let h = self.config.h.unwrap_or(IntegratorConfig::default().step);
        Ok(match self.config.grid_stride {
            Some(stride) => IntegratorConfig::new(h, stride)?,
            None => analysis::default_config(h, s_max)?,
        })
    }

    /// Explicit `s_max` gives `m = round(s_max n)`; otherwise `m = ceil(n ln n)`.
    fn plan(&self, n: usize, runs: usize) -> Result<RunPlan, CliError> {
        let l = self.l()?;
        if self.config.s_max.is_some() {
            let s_max = self.s_max(1.0)?;
            return Ok(RunPlan::with_scaled_horizon(n, l, s_max, self.integrator(s_max)?, self.seed(), runs)?);
        }
        let default = RunPlan::new(n, l, self.seed(), runs)?;
        let m = default.horizon_steps();
        let config = self.integrator(default.s_max())?;
        Ok(RunPlan::with_horizon_steps(n, l, m, config, self.seed(), runs)?)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Config echo without the output location, so manifests do not depend
    /// on where they were written.
    fn echo(&self) -> Value {
        let mut cfg = self.config.clone();
        cfg.out = None;
        serde_json::to_value(cfg).expect("config serializes")
    }
}

fn execute(command: &Command) -> Result<(), CliError> {
    let params = Params::resolve(command.flags())?;
    match command {
        Command::Solve(_) => solve(&params),
        Command::Simulate(_) => simulate(&params),
        Command::Compare(_) => compare(&params),
        Command::Scaling(_) => scaling(&params),
        Command::Gumbel(_) => gumbel(&params),
        Command::Check(_) => check(&params),
    }
}

struct Manifest<'a> {
    subcommand: &'static str,
    params: &'a Params,
    run_seeds: Vec<u64>,
    outputs: Vec<String>,
    sigma_exit: Option<f64>,
    summary: Value,
}

impl Manifest<'_> {
    fn write(self) -> Result<(), CliError> {
        let value = json!({
            "tool": "wormald",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": self.subcommand,
            "config": self.params.echo(),
            "rng": RNG_DESCRIPTION,
            "seeds": { "master": self.params.seed(), "runs": self.run_seeds },
            "outputs": self.outputs,
            "domain_exited": self.sigma_exit.is_some(),
            "sigma_exit": self.sigma_exit,
            "summary": self.summary,
        });
        report::write_json(&self.params.path("manifest.json"), &value)?;
        Ok(())
    }
}

fn prepare(params: &Params) -> Result<(), CliError> {
    fs::create_dir_all(&params.out_dir)?;
    Ok(())
}

fn trajectory_name(run: usize, runs: usize) -> String {
    if runs == 1 {
        "trajectory.csv".into()
    } else {
        format!("trajectory_{run}.csv")
    }
}

fn earliest_exit<'a>(trajs: impl IntoIterator<Item = &'a Trajectory>) -> Option<f64> {
    trajs.into_iter().filter_map(Trajectory::sigma_exit).reduce(f64::min)
}

fn solve(params: &Params) -> Result<(), CliError> {
    let l = params.l()?;
    let s_max = params.s_max(4.0)?;
    let spec = coupon::make_coupon_spec(l, s_max)?;
    let traj = ode::integrate(&spec, &coupon::initial_state(l), s_max, params.integrator(s_max)?)?;
    prepare(params)?;
    report::write_trajectory(&params.path("ode.csv"), &traj)?;
    println!("ode: {} grid points to s = {}", traj.points().len(), traj.last().s);
    Manifest {
        subcommand: "solve",
        params,
        run_seeds: vec![],
        outputs: vec!["ode.csv".into()],
        sigma_exit: traj.sigma_exit(),
        summary: json!({ "points": traj.points().len() }),
    }
    .write()
}

fn simulate(params: &Params) -> Result<(), CliError> {
    let plan = params.plan(params.n(10_000)?, params.runs(1))?;
    let trajs = parallel::simulate_all(&plan)?;
    prepare(params)?;
    let mut outputs = Vec::new();
    for (i, traj) in trajs.iter().enumerate() {
        let name = trajectory_name(i, trajs.len());
        report::write_trajectory(&params.path(&name), traj)?;
        outputs.push(name);
    }
    println!("simulated {} run(s) of {} steps at n = {}", trajs.len(), plan.horizon_steps(), plan.n());
    Manifest {
        subcommand: "simulate",
        params,
        run_seeds: (0..plan.run_count()).map(|i| plan.run_seed(i)).collect(),
        outputs,
        sigma_exit: earliest_exit(&trajs),
        summary: json!({ "horizon_steps": plan.horizon_steps(), "s_max": plan.s_max() }),
    }
    .write()
}

fn compare(params: &Params) -> Result<(), CliError> {
    let n = params.n(100_000)?;
    let s_max = params.s_max(4.0)?;
    let plan =
        RunPlan::with_scaled_horizon(n, params.l()?, s_max, params.integrator(s_max)?, params.seed(), params.runs(1))?;
    let runs = parallel::compare_all(&plan)?;
    prepare(params)?;

    let mut outputs = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        let name = trajectory_name(i, runs.len());
        report::write_trajectory(&params.path(&name), &run.simulated)?;
        outputs.push(name);
    }
    report::write_trajectory(&params.path("ode.csv"), &runs[0].ode)?;
    let deviations: Vec<DeviationReport> = runs.iter().map(|r| r.deviation.clone()).collect();
    report::write_deviations(&params.path("deviation.csv"), &deviations)?;
    outputs.extend(["ode.csv".to_string(), "deviation.csv".to_string()]);

    let worst = deviations.iter().map(|d| d.sup_deviation).fold(0.0, f64::max);
    println!("max sup deviation over {} run(s): {worst:.6}", runs.len());
    Manifest {
        subcommand: "compare",
        params,
        run_seeds: (0..plan.run_count()).map(|i| plan.run_seed(i)).collect(),
        outputs,
        sigma_exit: earliest_exit(runs.iter().flat_map(|r| [&r.simulated, &r.ode])),
        summary: json!({
            "max_sup_deviation": worst,
            "grid_gap_bound": plan.grid_gap_bound(),
        }),
    }
    .write()
}

fn scaling(params: &Params) -> Result<(), CliError> {
    let ns = params.config.ns.clone().unwrap_or_else(|| vec![1_000, 10_000, 100_000]);
    let s_max = params.s_max(4.0)?;
    let runs = params.runs(20);
    let report = parallel::scaling_study(&ns, runs, params.seed(), params.l()?, s_max, params.integrator(s_max)?)?;
    prepare(params)?;
    report::write_scaling(&params.path("scaling.csv"), &report)?;
    println!("alpha = {:.4} over n = {:?}", report.alpha, ns);
    Manifest {
        subcommand: "scaling",
        params,
        run_seeds: ns.iter().map(|&n| wormald_core::rng::derive_seed(params.seed(), n as u64)).collect(),
        outputs: vec!["scaling.csv".into()],
        sigma_exit: None,
        summary: json!({
            "alpha": report.alpha,
            "intercept": report.intercept,
            "strictly_decreasing": report.is_strictly_decreasing(),
        }),
    }
    .write()
}

fn gumbel(params: &Params) -> Result<(), CliError> {
    let n = params.n(10_000)?;
    let trials = params.config.trials.unwrap_or(10_000);
    let cs = params.config.cs.clone().unwrap_or_else(|| vec![-1.0, 0.0, 1.0, 2.0]);
    let report = parallel::gumbel_experiment(n, trials, &cs, params.seed())?;
    prepare(params)?;
    report::write_gumbel(&params.path("gumbel.csv"), &report)?;
    for r in &report.rows {
        println!(
            "c = {:>6.3}: empirical {:.4} ± {:.4}, nested {:.4}, classical {:.4}",
            r.c, r.empirical, r.std_error, r.reference_nested, r.reference_classical
        );
    }
    Manifest {
        subcommand: "gumbel",
        params,
        run_seeds: vec![],
        outputs: vec!["gumbel.csv".into()],
        sigma_exit: None,
        summary: json!({ "thresholds": report.rows.iter().map(|r| r.threshold).collect::<Vec<_>>() }),
    }
    .write()
}

fn check(params: &Params) -> Result<(), CliError> {
    let plan = params.plan(params.n(1_000)?, params.runs(10))?;
    let spec = coupon::make_coupon_spec(plan.truncation(), plan.s_max())?.with_lipschitz_hint(1.0)?;
    let report = mc::check_hypotheses(&spec, &plan, params.config.state_samples.unwrap_or(50))?;
    prepare(params)?;
    report::write_json(&params.path("check.json"), &hypothesis_json(&report))?;
    println!("increment: {}", verdict(report.increment.passed));
    println!("drift:     {} (max |z| = {:.3})", verdict(report.drift.passed), report.drift.max_abs_z);
    println!("lipschitz: {} (estimate {:.6})", verdict(report.lipschitz.passed), report.lipschitz.estimate);
    Manifest {
        subcommand: "check",
        params,
        run_seeds: (0..plan.run_count()).map(|i| plan.run_seed(i)).collect(),
        outputs: vec!["check.json".into()],
        sigma_exit: None,
        summary: json!({ "all_passed": report.all_passed() }),
    }
    .write()?;
    if report.all_passed() {
        Ok(())
    } else {
        Err(CliError::CheckFailed)
    }
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "FAIL"
    }
}

fn finite_or_string(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

fn hypothesis_json(r: &HypothesisReport) -> Value {
    let states: Vec<Value> = r
        .drift
        .states
        .iter()
        .map(|s| {
            json!({
                "t": s.t,
                "counts_of_counts": s.counts_of_counts,
                "samples": s.sample_count,
                "coordinates": s.coordinates.iter().map(|c| json!({
                    "empirical_mean": c.empirical_mean,
                    "predicted": c.predicted,
                    "std_error": c.std_error,
                    "sample_std_error": c.sample_std_error,
                    "z_score": finite_or_string(c.z_score),
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "increment": {
            "runs": r.increment.runs,
            "max_observed": r.increment.max_observed,
            "bound": r.increment.bound,
            "passed": r.increment.passed,
        },
        "drift": {
            "max_abs_z": finite_or_string(r.drift.max_abs_z),
            "z_threshold": r.drift.z_threshold,
            "passed": r.drift.passed,
            "states": states,
        },
        "lipschitz": {
            "samples": r.lipschitz.samples,
            "estimate": r.lipschitz.estimate,
            "hint": r.lipschitz.hint,
            "passed": r.lipschitz.passed,
        },
        "note": r.note,
    })
}
