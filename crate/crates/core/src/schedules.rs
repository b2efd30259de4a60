//! Annealing temperature schedules.
//!
//! Two decaying forms are provided: the discrete-time schedule used by the
//! simulations, `T_k = (1/5 + ln(1 + kΔt)/E)⁻¹`, and the logarithmic form
//! `T_t = E / ln(e + t)` that appears in the convergence theory.

use serde::Serialize;

/// Default additive offset of the simulation schedule; `T_0 = 1/offset`.
pub const SIM_OFFSET: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Simulation,
    Theoretical,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub energy: f64,
    pub offset: f64,
    pub constant_t: f64,
}

impl Schedule {
    pub fn simulation(energy: f64) -> Self {
        Self {
            kind: ScheduleKind::Simulation,
            energy,
            offset: SIM_OFFSET,
            constant_t: 0.0,
        }
    }

    pub fn theoretical(energy: f64) -> Self {
        Self {
            kind: ScheduleKind::Theoretical,
            energy,
            offset: 0.0,
            constant_t: 0.0,
        }
    }

    pub fn constant(t: f64) -> Self {
        Self {
            kind: ScheduleKind::Constant,
            energy: f64::INFINITY,
            offset: 0.0,
            constant_t: t,
        }
    }

    /// Temperature at continuous time `t ≥ 0`.
    pub fn at_time(&self, t: f64) -> f64 {
        match self.kind {
            ScheduleKind::Simulation => 1.0 / (self.offset + (1.0 + t).ln() / self.energy),
            ScheduleKind::Theoretical => self.energy / (std::f64::consts::E + t).ln(),
            ScheduleKind::Constant => self.constant_t,
        }
    }

    /// `dT/dt` at time `t`.
    pub fn derivative(&self, t: f64) -> f64 {
        match self.kind {
            ScheduleKind::Simulation => {
                let temp = self.at_time(t);
                -temp * temp / (self.energy * (1.0 + t))
            }
            ScheduleKind::Theoretical => {
                let l = (std::f64::consts::E + t).ln();
                -self.energy / ((std::f64::consts::E + t) * l * l)
            }
            ScheduleKind::Constant => 0.0,
        }
    }

    /// Temperature used by step `k` of a discretisation with increment `dt`.
    pub fn temperature(&self, k: u64, dt: f64) -> f64 {
        self.at_time(k as f64 * dt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub valid: bool,
    pub energy_exceeds_gap: bool,
    pub monotone: bool,
    pub derivative_bounded: bool,
    /// Smallest `T̃` with `−T̃/t ≤ T′(t)` over the sampled horizon.
    pub fitted_t_tilde: f64,
    /// Whether `T_t ≥ E / ln t` on the sampled horizon (`t > e`). Informational:
    /// both decaying forms sit slightly below this curve.
    pub log_lower_bound: bool,
    pub reasons: Vec<String>,
}

/// Sample times for schedule diagnostics: 0 plus 400 log-spaced points in [1e-3, 1e7].
pub fn sample_times() -> Vec<f64> {
    let mut ts = vec![0.0];
    let n = 400;
    for i in 0..=n {
        ts.push(10f64.powf(-3.0 + 10.0 * i as f64 / n as f64));
    }
    ts
}

/// Checks the schedule conditions of the convergence theory against a
/// barrier height `gap = U_M − U_m`.
pub fn check_assumption(s: &Schedule, gap: f64) -> AssumptionReport {
    let ts = sample_times();
    let mut reasons = Vec::new();

    let energy_exceeds_gap = s.energy > gap;
    if !energy_exceeds_gap {
        reasons.push("E ≤ U_M−U_m".to_string());
    }

    let temps: Vec<f64> = ts.iter().map(|&t| s.at_time(t)).collect();
    let monotone = temps.windows(2).all(|w| w[1] <= w[0]) && temps.iter().all(|&v| v > 0.0);
    if !monotone {
        reasons.push("temperature not positive and nonincreasing".to_string());
    }

    let mut t_tilde: f64 = 0.0;
    let mut derivative_bounded = true;
    for &t in &ts {
        let d = s.derivative(t);
        if d > 0.0 {
            derivative_bounded = false;
        }
        t_tilde = t_tilde.max(-d * t);
    }
    if !t_tilde.is_finite() {
        derivative_bounded = false;
    }
    if !derivative_bounded {
        reasons.push("T' not within [-T̃/t, 0]".to_string());
    }

    let log_lower_bound = ts
        .iter()
        .filter(|&&t| t > std::f64::consts::E)
        .all(|&t| s.at_time(t) >= s.energy / t.ln());

    AssumptionReport {
        valid: energy_exceeds_gap && monotone && derivative_bounded,
        energy_exceeds_gap,
        monotone,
        derivative_bounded,
        fitted_t_tilde: t_tilde,
        log_lower_bound,
        reasons,
    }
}
