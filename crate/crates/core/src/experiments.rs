//! Annealing experiments: crossing counts, success proportions, visit
//! histograms and parameter sweeps, plus their CSV outputs.
//!
//! Run `i` of an experiment uses seed `seed_base + i`, so two experiments that
//! differ only in the dynamics see the same noise run by run. Runs execute on
//! a rayon pool but are collected in index order and reduced sequentially,
//! which makes every aggregate independent of the thread count.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrators::{simulate_with, Dynamics, DynamicsConfig, State, Trajectory, ZNoise};
use crate::matrices::Design;
use crate::potentials::Potential;
use crate::schedules::Schedule;

/// First line of every CSV file written by this crate.
pub const CSV_MAGIC: &str = "# gle-anneal v1";

/// Default number of trailing iterations averaged for the window criterion.
pub const DEFAULT_WINDOW: usize = 5000;

/// Sign changes of `path`, skipping exact zeros: a crossing is counted when
/// the next nonzero sample has the opposite sign to the last nonzero one.
pub fn count_crossings(path: &[f64]) -> usize {
    let mut c = CrossingCounter::default();
    for &v in path {
        c.push(v);
    }
    c.count
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CrossingCounter {
    last: f64,
    pub count: usize,
}

impl CrossingCounter {
    pub fn push(&mut self, v: f64) {
        if v == 0.0 || v.is_nan() {
            return;
        }
        if self.last != 0.0 && (v > 0.0) != (self.last > 0.0) {
            self.count += 1;
        }
        self.last = v;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToleranceRegion {
    pub intervals: Vec<(f64, f64)>,
}

impl ToleranceRegion {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::validation("tolerance", "each interval needs lo ≤ hi"));
        }
        Ok(Self { intervals })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self {
            intervals: vec![(lo, hi); dim],
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.intervals.len()
            && x
                .iter()
                .zip(&self.intervals)
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Parses `lo:hi,lo:hi,...`; a single interval is repeated to `dim`.
    pub fn parse(s: &str, dim: usize) -> Result<Self> {
        let mut iv = Vec::new();
        for part in s.split(',') {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| Error::validation("tolerance", format!("expected lo:hi, got `{part}`")))?;
            let lo: f64 = lo.trim().parse().map_err(|_| Error::validation("tolerance", format!("bad number `{lo}`")))?;
            let hi: f64 = hi.trim().parse().map_err(|_| Error::validation("tolerance", format!("bad number `{hi}`")))?;
            iv.push((lo, hi));
        }
        if iv.len() == 1 && dim > 1 {
            iv = vec![iv[0]; dim];
        }
        if iv.len() != dim {
            return Err(Error::Dimension {
                what: "tolerance intervals",
                expected: dim,
                got: iv.len(),
            });
        }
        Self::new(iv)
    }
}

/// Initial point of the benchmark set-ups: `x_j = 6` for Alpine, `(4, 2)`
/// for the two-dimensional multi-well potentials, `x_j = 1` otherwise.
pub fn default_initial(potential: &dyn Potential) -> Vec<f64> {
    let n = potential.dim();
    match potential.name() {
        "alpine12" | "alpine" => vec![6.0; n],
        "bivar" | "u2" | "u3" => vec![4.0, 2.0],
        _ => vec![1.0; n],
    }
}

/// Region of attraction of the global minimum for each benchmark.
pub fn default_tolerance(potential: &dyn Potential) -> ToleranceRegion {
    let n = potential.dim();
    match potential.name() {
        "alpine12" | "alpine" => ToleranceRegion::cube(n, -2.0, 2.0),
        "bivar" | "u2" | "u3" => ToleranceRegion {
            intervals: vec![(-6.5, -4.5), (1.5, 4.5)],
        },
        _ => ToleranceRegion::cube(n, -0.5, 0.5),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    pub final_state: State,
    pub window_mean_x: Vec<f64>,
    pub crossings: usize,
    pub success_final: bool,
    pub success_window: bool,
    /// Step at which the state became non-finite.
    pub diverged: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSpec {
    pub dynamics: Dynamics,
    pub initial: Vec<f64>,
    pub steps: u64,
    pub runs: usize,
    pub seed_base: u64,
    pub tolerance: ToleranceRegion,
    pub window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub runs: usize,
    /// Over runs that did not diverge; NaN if all did.
    pub crossings_mean: f64,
    pub crossings_std: f64,
    pub success_final: f64,
    pub success_window: f64,
    pub diverged_count: usize,
}

impl Aggregate {
    pub fn from_results(results: &[RunResult]) -> Self {
        let runs = results.len();
        let ok: Vec<&RunResult> = results.iter().filter(|r| r.diverged.is_none()).collect();
        let k = ok.len() as f64;
        let mean = ok.iter().map(|r| r.crossings as f64).sum::<f64>() / k;
        let var = if ok.len() > 1 {
            ok.iter().map(|r| (r.crossings as f64 - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        let frac = |pred: fn(&RunResult) -> bool| {
            if runs == 0 {
                f64::NAN
            } else {
                results.iter().filter(|r| pred(r)).count() as f64 / runs as f64
            }
        };
        Self {
            runs,
            crossings_mean: mean,
            crossings_std: var.sqrt(),
            success_final: frac(|r| r.success_final),
            success_window: frac(|r| r.success_window),
            diverged_count: runs - ok.len(),
        }
    }

    /// More than half of the runs diverged.
    pub fn divergence_dominated(&self) -> bool {
        2 * self.diverged_count > self.runs
    }
}

/// One seeded trajectory with crossings counted at every step.
pub fn run_single(cfg: &DynamicsConfig, spec: &ExperimentSpec, run: usize) -> Result<RunResult> {
    let seed = spec.seed_base.wrapping_add(run as u64);
    let n = cfg.n();
    let initial = cfg.initial_state(spec.initial.clone());
    let window = spec.window.max(1) as u64;
    let first_in_window = (spec.steps + 1).saturating_sub(window);
    let mut counter = CrossingCounter::default();
    let mut sum = vec![0.0; n];
    let mut in_window = 0usize;
    let mut last = initial.clone();

    let outcome = simulate_with(cfg, spec.dynamics, &initial, spec.steps, seed, |k, s| {
        counter.push(s.x[0]);
        if k >= first_in_window {
            for (a, v) in sum.iter_mut().zip(&s.x) {
                *a += v;
            }
            in_window += 1;
        }
        last.clone_from(s);
    });

    let diverged = match outcome {
        Ok(_) => None,
        Err(Error::Diverged { step }) => Some(step),
        Err(e) => return Err(e),
    };
    let window_mean_x: Vec<f64> = sum.iter().map(|v| v / in_window.max(1) as f64).collect();
    let ok = diverged.is_none();
    Ok(RunResult {
        run,
        seed,
        success_final: ok && spec.tolerance.contains(&last.x),
        success_window: ok && spec.tolerance.contains(&window_mean_x),
        final_state: last,
        window_mean_x,
        crossings: counter.count,
        diverged,
    })
}

/// Runs `f` on a pool of `threads` workers, or on the global pool for `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None | Some(0) => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::validation("threads", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Experiment {
    pub results: Vec<RunResult>,
    pub aggregate: Aggregate,
}

pub fn run_experiment(cfg: &DynamicsConfig, spec: &ExperimentSpec, threads: Option<usize>) -> Result<Experiment> {
    if spec.runs == 0 {
        return Err(Error::validation("runs", "must be at least 1"));
    }
    if spec.initial.len() != cfg.n() {
        return Err(Error::Dimension {
            what: "initial point",
            expected: cfg.n(),
            got: spec.initial.len(),
        });
    }
    let results = with_threads(threads, || {
        (0..spec.runs)
            .into_par_iter()
            .map(|i| run_single(cfg, spec, i))
            .collect::<Result<Vec<_>>>()
    })??;
    let aggregate = Aggregate::from_results(&results);
    Ok(Experiment { results, aggregate })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram2d {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub bins: (usize, usize),
    /// Row-major over `(x bin, y bin)`.
    pub counts: Vec<u64>,
}

impl Histogram2d {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), bins: (usize, usize)) -> Result<Self> {
        if bins.0 == 0 || bins.1 == 0 {
            return Err(Error::validation("bins", "must be positive"));
        }
        if !(x_range.0 < x_range.1 && y_range.0 < y_range.1) {
            return Err(Error::validation("bounds", "need lo < hi on both axes"));
        }
        Ok(Self {
            x_range,
            y_range,
            bins,
            counts: vec![0; bins.0 * bins.1],
        })
    }

    fn bin(v: f64, (lo, hi): (f64, f64), nb: usize) -> usize {
        let f = ((v - lo) / (hi - lo) * nb as f64).floor();
        if f.is_nan() || f < 0.0 {
            0
        } else {
            (f as usize).min(nb - 1)
        }
    }

    /// Out-of-range visits land in the nearest edge bin.
    pub fn add(&mut self, x: f64, y: f64) {
        let i = Self::bin(x, self.x_range, self.bins.0);
        let j = Self::bin(y, self.y_range, self.bins.1);
        self.counts[i * self.bins.1 + j] += 1;
    }

    pub fn merge(&mut self, other: &Histogram2d) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.bins.1 + j]
    }

    pub fn log_count(&self, i: usize, j: usize) -> f64 {
        (self.count(i, j) as f64).ln_1p()
    }

    pub fn x_center(&self, i: usize) -> f64 {
        let (lo, hi) = self.x_range;
        lo + (i as f64 + 0.5) * (hi - lo) / self.bins.0 as f64
    }

    pub fn y_center(&self, j: usize) -> f64 {
        let (lo, hi) = self.y_range;
        lo + (j as f64 + 0.5) * (hi - lo) / self.bins.1 as f64
    }

    /// Bin holding the point, after edge clamping.
    pub fn locate(&self, x: f64, y: f64) -> (usize, usize) {
        (
            Self::bin(x, self.x_range, self.bins.0),
            Self::bin(y, self.y_range, self.bins.1),
        )
    }
}

/// Visits of `(x₁, x₂)` over `runs` seeded trajectories, every state from the
/// initial one to the last finite one.
#[allow(clippy::too_many_arguments)]
pub fn histogram2d(
    cfg: &DynamicsConfig,
    dynamics: Dynamics,
    initial: &[f64],
    steps: u64,
    runs: usize,
    seed_base: u64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    bins: (usize, usize),
    threads: Option<usize>,
) -> Result<Histogram2d> {
    if cfg.n() != 2 {
        return Err(Error::Dimension {
            what: "histogram state space",
            expected: 2,
            got: cfg.n(),
        });
    }
    let empty = Histogram2d::new(x_range, y_range, bins)?;
    let start = cfg.initial_state(initial.to_vec());
    let parts = with_threads(threads, || {
        (0..runs)
            .into_par_iter()
            .map(|i| {
                let mut h = empty.clone();
                let seed = seed_base.wrapping_add(i as u64);
                match simulate_with(cfg, dynamics, &start, steps, seed, |_, s| h.add(s.x[0], s.x[1])) {
                    Ok(_) | Err(Error::Diverged { .. }) => Ok(h),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut total = empty;
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSpec {
    pub energies: Vec<f64>,
    /// `μ` for the kinetic dynamics, `λ̄²/μ` for the GLE.
    pub knobs: Vec<f64>,
    pub mu_pool: Vec<f64>,
    pub runs_per_cell: usize,
    pub steps: u64,
    pub dt: f64,
    pub seed_base: u64,
    pub gamma: f64,
    pub window: usize,
    pub z_noise: ZNoise,
}

impl SweepSpec {
    /// Desk-scale defaults: 20 runs per cell, 5·10⁴ steps, `Δt = 0.02`.
    pub fn new(energies: Vec<f64>, knobs: Vec<f64>) -> Self {
        Self {
            energies,
            knobs,
            mu_pool: vec![0.5, 1.0, 2.0, 4.0],
            runs_per_cell: 20,
            steps: 50_000,
            dt: 0.02,
            seed_base: 0,
            gamma: 1.0,
            window: DEFAULT_WINDOW,
            z_noise: ZNoise::Printed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub energy: f64,
    pub knob: f64,
    pub mu_drawn: f64,
    pub lambda_bar: f64,
    pub aggregate: Aggregate,
}

/// `μ` for a GLE cell, drawn uniformly from the pool with a seed that
/// depends only on the sweep seed and the cell index.
pub fn draw_mu(pool: &[f64], seed_base: u64, cell: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_base);
    rng.set_stream(cell as u64);
    pool[rng.random_range(0..pool.len())]
}

/// `(μ, λ̄)` of a cell: the knob is `μ` itself for the kinetic dynamics and
/// `λ̄²/μ` for the GLE.
pub fn cell_parameters(spec: &SweepSpec, dynamics: Dynamics, cell: usize, knob: f64) -> (f64, f64) {
    match dynamics {
        Dynamics::Gle => {
            let mu = draw_mu(&spec.mu_pool, spec.seed_base, cell);
            (mu, (knob * mu).sqrt())
        }
        _ => (knob, 1.0),
    }
}

pub fn sweep(
    spec: &SweepSpec,
    dynamics: Dynamics,
    design: Design,
    potential: Arc<dyn Potential>,
    initial: &[f64],
    tolerance: &ToleranceRegion,
    threads: Option<usize>,
) -> Result<Vec<SweepCell>> {
    if spec.energies.is_empty() || spec.knobs.is_empty() {
        return Err(Error::validation("grid", "energy and knob grids must be nonempty"));
    }
    if spec.mu_pool.is_empty() {
        return Err(Error::validation("mu-pool", "must be nonempty"));
    }
    if spec.runs_per_cell == 0 {
        return Err(Error::validation("runs", "must be at least 1"));
    }
    let mut cells = Vec::new();
    let mut configs = Vec::new();
    for &energy in &spec.energies {
        if !(energy > 0.0) {
            return Err(Error::validation("E", format!("must be positive, got {energy}")));
        }
        for &knob in &spec.knobs {
            if !(knob > 0.0) {
                return Err(Error::validation("knob", format!("must be positive, got {knob}")));
            }
            let idx = cells.len();
            let (mu, lambda_bar) = cell_parameters(spec, dynamics, idx, knob);
            let cfg = DynamicsConfig::new(potential.clone(), design, mu, lambda_bar, Schedule::simulation(energy), spec.dt)?
                .with_gamma(spec.gamma)
                .with_z_noise(spec.z_noise);
            configs.push(cfg);
            cells.push((energy, knob, mu, lambda_bar));
        }
    }
    let exp_spec = ExperimentSpec {
        dynamics,
        initial: initial.to_vec(),
        steps: spec.steps,
        runs: spec.runs_per_cell,
        seed_base: spec.seed_base,
        tolerance: tolerance.clone(),
        window: spec.window,
    };
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.runs_per_cell).map(move |r| (c, r)))
        .collect();
    let results = with_threads(threads, || {
        jobs.par_iter()
            .map(|&(c, r)| run_single(&configs[c], &exp_spec, r))
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(cells
        .iter()
        .zip(results.chunks(spec.runs_per_cell))
        .map(|(&(energy, knob, mu, lambda_bar), chunk)| SweepCell {
            energy,
            knob,
            mu_drawn: mu,
            lambda_bar,
            aggregate: Aggregate::from_results(chunk),
        })
        .collect())
}

fn open_csv(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "{CSV_MAGIC}")?;
    Ok(csv::Writer::from_writer(f))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// `step, t, temperature, x1.., y1.., z1..`.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory, cfg: &DynamicsConfig) -> Result<()> {
    let mut w = open_csv(path)?;
    let (n, m) = (cfg.n(), cfg.m());
    let mut header = vec!["step".to_string(), "t".into(), "temperature".into()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("y{i}")));
    header.extend((1..=m).map(|i| format!("z{i}")));
    w.write_record(&header)?;
    for (k, s) in traj.steps.iter().zip(&traj.states) {
        let mut row = vec![k.to_string(), fmt(*k as f64 * cfg.dt), fmt(cfg.schedule.temperature(*k, cfg.dt))];
        row.extend(s.x.iter().map(|v| fmt(*v)));
        row.extend(s.y.iter().chain(&s.z).map(|v| fmt(*v)));
        // Overdamped states carry no y/z; pad so every row has the header's width.
        row.resize(header.len(), String::new());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the crossings summary.
#[derive(Debug, Clone, Serialize)]
pub struct CrossingsRow {
    pub dynamics: Dynamics,
    pub design: Option<Design>,
    pub steps: u64,
    pub dt: f64,
    pub energy: f64,
    pub mu: f64,
    pub lambda_bar: f64,
    pub aggregate: Aggregate,
}

pub const CROSSINGS_HEADER: [&str; 13] = [
    "dynamics",
    "design",
    "runs",
    "steps",
    "dt",
    "E",
    "mu",
    "lambda_bar",
    "crossings_mean",
    "crossings_std",
    "success_final",
    "success_window",
    "diverged_count",
];

pub fn write_crossings_csv(path: &Path, rows: &[CrossingsRow]) -> Result<()> {
    let mut w = open_csv(path)?;
    w.write_record(CROSSINGS_HEADER)?;
    for r in rows {
        let a = &r.aggregate;
        w.write_record([
            r.dynamics.to_string(),
            r.design.map(|d| d.index().to_string()).unwrap_or_default(),
            a.runs.to_string(),
            r.steps.to_string(),
            fmt(r.dt),
            fmt(r.energy),
            fmt(r.mu),
            fmt(r.lambda_bar),
            fmt(a.crossings_mean),
            fmt(a.crossings_std),
            fmt(a.success_final),
            fmt(a.success_window),
            a.diverged_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-run detail: `run, seed, crossings, success_final, success_window,
/// diverged_step, x1.., wx1..` (final and window-mean positions).
pub fn write_runs_csv(path: &Path, results: &[RunResult]) -> Result<()> {
    let mut w = open_csv(path)?;
    let n = results.first().map(|r| r.final_state.x.len()).unwrap_or(0);
    let mut header: Vec<String> = ["run", "seed", "crossings", "success_final", "success_window", "diverged_step"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("wx{i}")));
    w.write_record(&header)?;
    for r in results {
        let mut row = vec![
            r.run.to_string(),
            r.seed.to_string(),
            r.crossings.to_string(),
            (r.success_final as u8).to_string(),
            (r.success_window as u8).to_string(),
            r.diverged.map(|s| s.to_string()).unwrap_or_default(),
        ];
        row.extend(r.final_state.x.iter().chain(&r.window_mean_x).map(|v| fmt(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub const SWEEP_HEADER: [&str; 7] = [
    "E",
    "knob",
    "mu_drawn",
    "success_final",
    "success_window",
    "crossings_mean",
    "diverged_count",
];

pub fn write_sweep_csv(path: &Path, cells: &[SweepCell]) -> Result<()> {
    let mut w = open_csv(path)?;
    w.write_record(SWEEP_HEADER)?;
    for c in cells {
        w.write_record([
            fmt(c.energy),
            fmt(c.knob),
            fmt(c.mu_drawn),
            fmt(c.aggregate.success_final),
            fmt(c.aggregate.success_window),
            fmt(c.aggregate.crossings_mean),
            c.aggregate.diverged_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const HISTOGRAM_HEADER: [&str; 6] = ["i", "j", "x1", "x2", "count", "log_count"];

pub fn write_histogram_csv(path: &Path, h: &Histogram2d) -> Result<()> {
    let mut w = open_csv(path)?;
    w.write_record(HISTOGRAM_HEADER)?;
    for i in 0..h.bins.0 {
        for j in 0..h.bins.1 {
            w.write_record([
                i.to_string(),
                j.to_string(),
                fmt(h.x_center(i)),
                fmt(h.y_center(j)),
                h.count(i, j).to_string(),
                fmt(h.log_count(i, j)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
