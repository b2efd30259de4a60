//! Command-line front end.
//!
//! Every flag can also come from a TOML file given with `--config`; keys are
//! flag names without the leading dashes (`A-design = 2`, `lambda-bar = 1.5`,
//! `E-grid = [1, 2, 3]`). Top-level keys apply to every subcommand and a table
//! named after the subcommand overrides them. Flags on the command line win.
//!
//! Exit codes: 0 success, 1 invalid input or failed verification, 2 when
//! more than half of the runs diverged.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{
    self, default_initial, default_tolerance, CrossingsRow, ExperimentSpec, SweepSpec, ToleranceRegion,
    DEFAULT_WINDOW,
};
use crate::generator;
use crate::integrators::{simulate_with, Dynamics, DynamicsConfig, Trajectory, ZNoise};
use crate::matrices::Design;
use crate::potentials::{self, Potential};
use crate::schedules::{check_assumption, Schedule};
use crate::theory::{self, ScheduleFamily, TheoryConstants};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gle-anneal", version, about = "Simulated annealing with generalised Langevin dynamics")]
#[command(args_override_self = true)]
pub struct Cli {
    /// TOML file whose keys mirror the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for parallel runs (default: all cores).
    #[arg(long, global = true, env = "GLE_ANNEAL_THREADS")]
    pub threads: Option<usize>,

    /// Directory receiving CSV output.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One trajectory written to trajectory.csv.
    Simulate(SimulateArgs),
    /// Mean crossings of {x₁ = 0} over seeded runs.
    Crossings(CrossingsArgs),
    /// Success proportions and crossings over an (E, knob) grid.
    Sweep(SweepArgs),
    /// Log-count visit histogram of (x₁, x₂).
    Heatmap(HeatmapArgs),
    /// Numerical checks of the generator identities and the drift bound.
    Verify(VerifyArgs),
    /// Closed-form constants of the convergence theory.
    Theory(TheoryArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    /// quadratic, bivar, alpine12, u2 or u3.
    #[arg(long, default_value = "bivar")]
    pub potential: String,
    /// Dimension for quadratic/alpine.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value = "gle")]
    pub dynamics: String,
    /// Memory/coupling design 1–4.
    #[arg(long = "A-design", default_value_t = 1)]
    pub a_design: u32,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long = "lambda-bar", default_value_t = 1.0)]
    pub lambda_bar: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Step size (default 0.1; 0.02 for sweeps).
    #[arg(long)]
    pub dt: Option<f64>,
    /// simulation, theoretical or constant.
    #[arg(long, default_value = "simulation")]
    pub schedule: String,
    #[arg(long = "E")]
    pub energy: Option<f64>,
    /// Temperature of the constant schedule.
    #[arg(long = "T")]
    pub temperature: Option<f64>,
    /// printed or calibrated amplitude of the memory noise.
    #[arg(long = "z-noise", default_value = "printed")]
    pub z_noise: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated initial position (default per potential).
    #[arg(long)]
    pub initial: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, default_value_t = 100_000)]
    pub steps: u64,
    #[arg(long = "snapshot-stride", default_value_t = 1)]
    pub snapshot_stride: u64,
}

#[derive(Debug, Args)]
pub struct CrossingsArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, default_value_t = 100_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    /// `lo:hi,lo:hi,...` (default per potential).
    #[arg(long)]
    pub tolerance: Option<String>,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    /// Underdamped plus GLE with every design, one row each.
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long = "E-grid", value_delimiter = ',', required = true)]
    pub energy_grid: Vec<f64>,
    /// μ (underdamped) or λ̄²/μ (GLE) values.
    #[arg(long = "knob-grid", value_delimiter = ',', required = true)]
    pub knob_grid: Vec<f64>,
    #[arg(long = "mu-pool", value_delimiter = ',', default_value = "0.5,1,2,4")]
    pub mu_pool: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    #[arg(long, default_value_t = 50_000)]
    pub steps: u64,
    #[arg(long)]
    pub tolerance: Option<String>,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, default_value_t = 100_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    #[arg(long = "x-range", value_delimiter = ',', num_args = 2, default_values_t = [-8.0, 8.0], allow_hyphen_values = true)]
    pub x_range: Vec<f64>,
    #[arg(long = "y-range", value_delimiter = ',', num_args = 2, default_values_t = [-8.0, 8.0], allow_hyphen_values = true)]
    pub y_range: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// generator, carre or lyapunov.
    #[arg(long)]
    pub what: String,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 10.0)]
    pub radius: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "quadratic")]
    pub potential: String,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long = "A-design", default_value_t = 1)]
    pub a_design: u32,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long = "lambda-bar", default_value_t = 1.0)]
    pub lambda_bar: f64,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("mode").required(true).args(["rate", "log_sobolev", "compare", "constants"]))]
pub struct TheoryArgs {
    /// Exponential rate r(E); needs --E, --gap, --delta, --alpha.
    #[arg(long)]
    pub rate: bool,
    /// Log-Sobolev factor C at --T; needs --gap.
    #[arg(long = "log-sobolev")]
    pub log_sobolev: bool,
    /// Optimality ratio 2C⁻¹ / (|T′| p(1/T)) at t = 10³…10⁹ for f ≡ --f.
    #[arg(long)]
    pub compare: bool,
    /// S₀, S₁, β coefficients and λ̂² of the configured system.
    #[arg(long)]
    pub constants: bool,
    #[arg(long = "E")]
    pub energy: Option<f64>,
    #[arg(long)]
    pub gap: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "T")]
    pub temperature: Option<f64>,
    #[arg(long = "a-m", default_value_t = 1.0)]
    pub a_m: f64,
    #[arg(long = "A-star", default_value_t = 1.0)]
    pub a_star: f64,
    /// Constant value of f in T = scale / (f ln(e + t)).
    #[arg(long, default_value_t = 1.0)]
    pub f: f64,
    /// Numerator of the schedule family (default: the gap).
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long, default_value = "quadratic")]
    pub potential: String,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long = "A-design", default_value_t = 1)]
    pub a_design: u32,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long = "lambda-bar", default_value_t = 1.0)]
    pub lambda_bar: f64,
    /// Print JSON instead of a bare number.
    #[arg(long)]
    pub json: bool,
}

const SUBCOMMANDS: [&str; 6] = ["simulate", "crossings", "sweep", "heatmap", "verify", "theory"];

fn toml_to_arg(v: &toml::Value) -> Option<String> {
    match v {
        toml::Value::String(s) => Some(s.clone()),
        toml::Value::Integer(i) => Some(i.to_string()),
        toml::Value::Float(f) => Some(f.to_string()),
        toml::Value::Array(a) => Some(a.iter().filter_map(toml_to_arg).collect::<Vec<_>>().join(",")),
        _ => None,
    }
}

fn table_to_args(table: &toml::Table, out: &mut Vec<OsString>) -> Result<()> {
    for (k, v) in table {
        if SUBCOMMANDS.contains(&k.as_str()) {
            continue;
        }
        match v {
            toml::Value::Boolean(true) => out.push(format!("--{k}").into()),
            toml::Value::Boolean(false) => {}
            toml::Value::Table(_) => {
                return Err(Error::validation(k.clone(), "unexpected table in config"));
            }
            other => {
                let s = toml_to_arg(other).ok_or_else(|| Error::validation(k.clone(), "unsupported value"))?;
                out.push(format!("--{k}={s}").into());
            }
        }
    }
    Ok(())
}

/// Splices config-file flags in front of the command-line flags of the
/// subcommand so that explicit flags override them.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy().to_string();
        if s == "--config" {
            path = it.next().map(PathBuf::from);
            if path.is_none() {
                return Err(Error::Missing("config".into()));
            }
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path)?;
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::validation("config", e.to_string()))?;
    let Some(pos) = rest
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
    else {
        return Ok(rest);
    };
    let sub = rest[pos].to_string_lossy().to_string();
    let mut injected = Vec::new();
    table_to_args(&table, &mut injected)?;
    if let Some(toml::Value::Table(t)) = table.get(&sub) {
        table_to_args(t, &mut injected)?;
    }
    let tail = rest.split_off(pos + 1);
    rest.extend(injected);
    rest.extend(tail);
    Ok(rest)
}

/// Parses `argv` and runs the command, writing results to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = match expand_config(argv.into_iter().map(Into::into).collect()) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INVALID
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a, out, err),
        Command::Crossings(a) => crossings(cli, a, out, err),
        Command::Sweep(a) => sweep(cli, a, out, err),
        Command::Heatmap(a) => heatmap(cli, a, out, err),
        Command::Verify(a) => verify(a, out),
        Command::Theory(a) => theory_cmd(a, out),
    }
}

fn parse_list(s: &str, key: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::validation(key, format!("bad number `{p}`")))
        })
        .collect()
}

struct System {
    potential: Arc<dyn Potential>,
    dynamics: Dynamics,
    design: Design,
    cfg: DynamicsConfig,
    initial: Vec<f64>,
}

fn schedule_from(a: &SystemArgs) -> Result<Schedule> {
    match a.schedule.as_str() {
        "simulation" | "theoretical" => {
            let e = a.energy.ok_or_else(|| Error::Missing("E".into()))?;
            if !(e > 0.0) {
                return Err(Error::validation("E", format!("must be positive, got {e}")));
            }
            Ok(if a.schedule == "simulation" {
                Schedule::simulation(e)
            } else {
                Schedule::theoretical(e)
            })
        }
        "constant" => {
            let t = a.temperature.ok_or_else(|| Error::Missing("T".into()))?;
            if !(t >= 0.0) {
                return Err(Error::validation("T", format!("must be nonnegative, got {t}")));
            }
            Ok(Schedule::constant(t))
        }
        other => Err(Error::validation(
            "schedule",
            format!("expected simulation, theoretical or constant, got `{other}`"),
        )),
    }
}

fn build_system(a: &SystemArgs, default_dt: f64, err: &mut dyn Write) -> Result<System> {
    let potential = potentials::by_name(&a.potential, a.dim)?;
    let dynamics: Dynamics = a.dynamics.parse()?;
    let design = Design::from_index(a.a_design)?;
    let schedule = schedule_from(a)?;
    let dt = a.dt.unwrap_or(default_dt);
    let z_noise: ZNoise = a.z_noise.parse()?;
    let cfg = DynamicsConfig::new(potential.clone(), design, a.mu, a.lambda_bar, schedule, dt)?
        .with_gamma(a.gamma)
        .with_z_noise(z_noise);
    let initial = match &a.initial {
        Some(s) => parse_list(s, "initial")?,
        None => default_initial(potential.as_ref()),
    };
    if initial.len() != potential.dim() {
        return Err(Error::Dimension {
            what: "initial point",
            expected: potential.dim(),
            got: initial.len(),
        });
    }
    warn_schedule(&schedule, potential.as_ref(), err);
    Ok(System {
        potential,
        dynamics,
        design,
        cfg,
        initial,
    })
}

fn warn_schedule(schedule: &Schedule, potential: &dyn Potential, err: &mut dyn Write) {
    if schedule.energy.is_infinite() {
        return;
    }
    if let Some(b) = potential.bounds() {
        let rep = check_assumption(schedule, b.gap());
        if !rep.valid {
            let _ = writeln!(
                err,
                "warning: schedule outside the convergence assumptions (gap {:.3}): {}",
                b.gap(),
                rep.reasons.join("; ")
            );
        }
    }
}

fn tolerance_for(s: &Option<String>, potential: &dyn Potential) -> Result<ToleranceRegion> {
    match s {
        Some(s) => ToleranceRegion::parse(s, potential.dim()),
        None => Ok(default_tolerance(potential)),
    }
}

fn simulate(cli: &Cli, a: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let sys = build_system(&a.system, 0.1, err)?;
    let stride = a.snapshot_stride.max(1);
    let mut traj = Trajectory {
        stride,
        steps: Vec::new(),
        states: Vec::new(),
    };
    let start = sys.cfg.initial_state(sys.initial.clone());
    let total = a.steps;
    let outcome = simulate_with(&sys.cfg, sys.dynamics, &start, total, a.system.seed, |k, s| {
        if k % stride == 0 || k == total {
            traj.steps.push(k);
            traj.states.push(s.clone());
        }
    });
    let path = cli.out.join("trajectory.csv");
    experiments::write_trajectory_csv(&path, &traj, &sys.cfg)?;
    writeln!(out, "{}", path.display())?;
    match outcome {
        Ok(_) => Ok(EXIT_OK),
        Err(Error::Diverged { step }) => {
            writeln!(err, "error: trajectory diverged at step {step}")?;
            Ok(EXIT_DIVERGED)
        }
        Err(e) => Err(e),
    }
}

fn crossings(cli: &Cli, a: &CrossingsArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let sys = build_system(&a.system, 0.1, err)?;
    let tolerance = tolerance_for(&a.tolerance, sys.potential.as_ref())?;
    let variants: Vec<(Dynamics, Design)> = if a.table {
        std::iter::once((Dynamics::Underdamped, sys.design))
            .chain(Design::ALL.iter().map(|&d| (Dynamics::Gle, d)))
            .collect()
    } else {
        vec![(sys.dynamics, sys.design)]
    };
    let mut rows = Vec::new();
    let mut dominated = false;
    for (dynamics, design) in variants {
        let cfg = if design == sys.design {
            sys.cfg.clone()
        } else {
            DynamicsConfig::new(
                sys.potential.clone(),
                design,
                a.system.mu,
                a.system.lambda_bar,
                sys.cfg.schedule,
                sys.cfg.dt,
            )?
            .with_gamma(sys.cfg.gamma)
            .with_z_noise(sys.cfg.z_noise)
        };
        let spec = ExperimentSpec {
            dynamics,
            initial: sys.initial.clone(),
            steps: a.steps,
            runs: a.runs,
            seed_base: a.system.seed,
            tolerance: tolerance.clone(),
            window: a.window,
        };
        let exp = experiments::run_experiment(&cfg, &spec, cli.threads)?;
        let label = match dynamics {
            Dynamics::Gle => format!("gle-A{}", design.index()),
            d => d.to_string(),
        };
        experiments::write_runs_csv(&cli.out.join(format!("crossings_runs_{label}.csv")), &exp.results)?;
        dominated |= exp.aggregate.divergence_dominated();
        writeln!(
            out,
            "{label}: crossings_mean={} success_final={} success_window={} diverged={}",
            exp.aggregate.crossings_mean,
            exp.aggregate.success_final,
            exp.aggregate.success_window,
            exp.aggregate.diverged_count
        )?;
        rows.push(CrossingsRow {
            dynamics,
            design: (dynamics == Dynamics::Gle).then_some(design),
            steps: a.steps,
            dt: cfg.dt,
            energy: cfg.schedule.energy,
            mu: a.system.mu,
            lambda_bar: a.system.lambda_bar,
            aggregate: exp.aggregate,
        });
    }
    let path = cli.out.join("crossings.csv");
    experiments::write_crossings_csv(&path, &rows)?;
    writeln!(out, "{}", path.display())?;
    Ok(if dominated { divergence_exit(err) } else { EXIT_OK })
}

fn divergence_exit(err: &mut dyn Write) -> i32 {
    let _ = writeln!(err, "error: more than half of the runs diverged");
    EXIT_DIVERGED
}

fn sweep(cli: &Cli, a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut sys_args = a.system.clone();
    // The grid supplies E; the system only needs a placeholder for validation.
    sys_args.energy = Some(a.energy_grid.first().copied().unwrap_or(1.0));
    let sys = build_system(&sys_args, 0.02, err)?;
    let tolerance = tolerance_for(&a.tolerance, sys.potential.as_ref())?;
    let mut spec = SweepSpec::new(a.energy_grid.clone(), a.knob_grid.clone());
    spec.mu_pool = a.mu_pool.clone();
    spec.runs_per_cell = a.runs;
    spec.steps = a.steps;
    spec.dt = sys.cfg.dt;
    spec.seed_base = a.system.seed;
    spec.gamma = a.system.gamma;
    spec.window = a.window;
    spec.z_noise = sys.cfg.z_noise;
    let cells = experiments::sweep(
        &spec,
        sys.dynamics,
        sys.design,
        sys.potential.clone(),
        &sys.initial,
        &tolerance,
        cli.threads,
    )?;
    let path = cli.out.join("sweep.csv");
    experiments::write_sweep_csv(&path, &cells)?;
    writeln!(out, "{}", path.display())?;
    let runs: usize = cells.iter().map(|c| c.aggregate.runs).sum();
    let diverged: usize = cells.iter().map(|c| c.aggregate.diverged_count).sum();
    Ok(if 2 * diverged > runs { divergence_exit(err) } else { EXIT_OK })
}

fn heatmap(cli: &Cli, a: &HeatmapArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let sys = build_system(&a.system, 0.1, err)?;
    let h = experiments::histogram2d(
        &sys.cfg,
        sys.dynamics,
        &sys.initial,
        a.steps,
        a.runs,
        a.system.seed,
        (a.x_range[0], a.x_range[1]),
        (a.y_range[0], a.y_range[1]),
        (a.bins, a.bins),
        cli.threads,
    )?;
    let path = cli.out.join("heatmap.csv");
    experiments::write_histogram_csv(&path, &h)?;
    writeln!(out, "{}", path.display())?;
    Ok(EXIT_OK)
}

fn print_json<T: Serialize>(out: &mut dyn Write, v: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Error::Domain(e.to_string()))?;
    writeln!(out, "{s}")?;
    Ok(())
}

fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let potential = potentials::by_name(&a.potential, a.dim)?;
    let design = Design::from_index(a.a_design)?;
    let cfg = DynamicsConfig::new(potential, design, a.mu, a.lambda_bar, Schedule::constant(a.temperature), 0.1)?;
    if !(a.temperature > 0.0) {
        return Err(Error::validation("T", "must be positive"));
    }
    let passed = match a.what.as_str() {
        "generator" => {
            let r = generator::check_chain_rule(&cfg, a.temperature, a.samples.unwrap_or(100), a.radius, a.seed);
            print_json(out, &r)?;
            r.passed
        }
        "carre" => {
            let r = generator::check_carre(&cfg, a.temperature, a.samples.unwrap_or(100), a.radius, a.seed);
            print_json(out, &r)?;
            r.passed
        }
        "lyapunov" => {
            let samples = a.samples.unwrap_or(10_000);
            let mut r = generator::build_r(&cfg, a.temperature, a.radius, samples, a.seed)?;
            let rep = generator::verify_drift(&mut r, &cfg, a.temperature, samples, a.radius, a.seed.wrapping_add(1), None);
            print_json(out, &rep)?;
            rep.passed
        }
        other => {
            return Err(Error::validation(
                "what",
                format!("expected generator, carre or lyapunov, got `{other}`"),
            ))
        }
    };
    Ok(if passed { EXIT_OK } else { EXIT_INVALID })
}

fn need(v: Option<f64>, key: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Missing(key.into()))
}

fn theory_cmd(a: &TheoryArgs, out: &mut dyn Write) -> Result<i32> {
    let system_consts = || -> Result<(TheoryConstants, f64, f64)> {
        let potential = potentials::by_name(&a.potential, a.dim)?;
        let design = Design::from_index(a.a_design)?;
        let cfg = DynamicsConfig::new(potential.clone(), design, a.mu, a.lambda_bar, Schedule::constant(1.0), 0.1)?;
        let consts = TheoryConstants::for_config(&cfg, a.a_star)?;
        let b = potential.bounds().expect("checked by for_config");
        Ok((consts, b.gap(), b.a_m))
    };
    if a.rate {
        let r = theory::rate_r(need(a.energy, "E")?, need(a.gap, "gap")?, need(a.delta, "delta")?, need(a.alpha, "alpha")?)?;
        if a.json {
            print_json(out, &r)?;
        } else {
            writeln!(out, "{}", r.value)?;
        }
    } else if a.log_sobolev {
        let (consts, _, _) = system_consts()?;
        let temp = need(a.temperature, "T")?;
        let gap = need(a.gap, "gap")?;
        let c = theory::log_sobolev_c(temp, &consts, gap, a.a_m);
        if a.json {
            print_json(out, &serde_json::json!({ "T": temp, "gap": gap, "C": c }))?;
        } else {
            writeln!(out, "{c}")?;
        }
    } else if a.compare {
        let (consts, sys_gap, a_m) = system_consts()?;
        let gap = a.gap.unwrap_or(sys_gap);
        let fv = a.f;
        let f = move |_: f64| fv;
        let zero = |_: f64| 0.0;
        let family = ScheduleFamily {
            scale: a.scale.unwrap_or(gap),
            f: &f,
            f_prime: &zero,
        };
        let rep = theory::schedule_comparison(&family, &consts, gap, a_m, &theory::DEFAULT_P, &theory::decade_times())?;
        print_json(out, &rep)?;
    } else {
        let (consts, _, _) = system_consts()?;
        print_json(out, &consts)?;
    }
    Ok(EXIT_OK)
}

