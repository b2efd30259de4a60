//! Closed-form constants of the convergence theory: the exponential rate,
//! the log-Sobolev factor `C_t`, and the schedule-optimality comparison.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrators::DynamicsConfig;
use crate::matrices::operator_norm;

/// `S₀ = √(1 + |D²U|²_∞)`.
pub fn s0(hess_sup: f64) -> f64 {
    (1.0 + hess_sup * hess_sup).sqrt()
}

/// `S₁ = 2 + 156 S₀² + 1024 S₀⁴`.
pub fn s1(s0: f64) -> f64 {
    let s2 = s0 * s0;
    2.0 + 156.0 * s2 + 1024.0 * s2 * s2
}

/// `λ̂² = max(|λ|², |λᵀ|², |λ⁻¹|², |λ⁻¹||λᵀ|)` in operator norm.
pub fn lambda_hat_sq(lambda: &nalgebra::DMatrix<f64>, left_inverse: &nalgebra::DMatrix<f64>) -> f64 {
    let l = operator_norm(lambda);
    let lt = operator_norm(&lambda.transpose());
    let li = operator_norm(left_inverse);
    (l * l).max(lt * lt).max(li * li).max(li * lt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryConstants {
    pub s0: f64,
    pub s1: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub a_star: f64,
    pub lambda_hat_sq: f64,
}

impl TheoryConstants {
    /// Coefficients of `β` large enough to absorb every negative `|∇_z h|²`
    /// term of the entropy dissipation, doubled for margin:
    /// ```text
    /// β₀ = 2(1 + 2320 S₀²λ̂² + λ̂²(3 + S₁ + S₁² + 3S₁⁴))
    /// β₁ = 2 λ̂² S₁² |Aᵀ|
    /// β₂ = 2 (208 S₀² + 3 S₁²) λ̂² |Aᵀ|²
    /// ```
    pub fn derive(hess_sup: f64, lambda_hat_sq: f64, a_t_norm: f64, a_star: f64) -> Self {
        let s0 = s0(hess_sup);
        let s1 = s1(s0);
        let l2 = lambda_hat_sq;
        let beta0 = 2.0 * (1.0 + 2320.0 * s0 * s0 * l2 + l2 * (3.0 + s1 + s1 * s1 + 3.0 * s1.powi(4)));
        let beta1 = 2.0 * l2 * s1 * s1 * a_t_norm;
        let beta2 = 2.0 * (208.0 * s0 * s0 + 3.0 * s1 * s1) * l2 * a_t_norm * a_t_norm;
        Self {
            s0,
            s1,
            beta0,
            beta1,
            beta2,
            a_star,
            lambda_hat_sq: l2,
        }
    }

    /// Constants for a configured system; the potential must declare bounds.
    pub fn for_config(cfg: &DynamicsConfig, a_star: f64) -> Result<Self> {
        let b = cfg
            .potential
            .bounds()
            .ok_or_else(|| Error::MissingBounds(cfg.potential.name().to_string()))?;
        let l2 = lambda_hat_sq(&cfg.coupling.lambda, &cfg.coupling.left_inverse);
        let at = operator_norm(&cfg.memory.a.transpose());
        Ok(Self::derive(b.hess_sup, l2, at, a_star))
    }

    /// `β(x) = 1 + β₀ + β₁x + β₂x²`.
    pub fn beta(&self, x: f64) -> f64 {
        1.0 + self.beta0 + self.beta1 * x + self.beta2 * x * x
    }
}

/// `C = A_* + β(1/T) e^{gap/T} (T/4) max(2, a_m⁻²)`.
pub fn log_sobolev_c(temp: f64, consts: &TheoryConstants, gap: f64, a_m: f64) -> f64 {
    let inv = 1.0 / temp;
    consts.a_star + consts.beta(inv) * (gap * inv).exp() * temp / 4.0 * (1.0 / (a_m * a_m)).max(2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateBranch {
    /// `(1 − gap/E − α)/2`: the barrier limits the rate.
    Barrier,
    /// `(δ − α)/E`: the tolerance limits the rate.
    Tolerance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rate {
    pub value: f64,
    pub branch: RateBranch,
    /// `E* = (gap + 2(δ − α))/(1 − α)`, where the branches meet.
    pub crossover: f64,
}

/// `r(E) = min((1 − gap/E − α)/2, (δ − α)/E)`, with the branch chosen by
/// the case split `E < (gap + 2(δ − α))/(1 − α)`.
pub fn rate_r(energy: f64, gap: f64, delta: f64, alpha: f64) -> Result<Rate> {
    if !(gap >= 0.0) {
        return Err(Error::validation("gap", format!("must be nonnegative, got {gap}")));
    }
    if !(energy > gap) {
        return Err(Error::Domain(format!(
            "rate defined for E > U_M−U_m only (E = {energy}, gap = {gap})"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::validation("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    if !(delta > alpha) {
        return Err(Error::validation("delta", format!("must exceed alpha, got {delta}")));
    }
    let barrier = (1.0 - gap / energy - alpha) / 2.0;
    let tolerance = (delta - alpha) / energy;
    let crossover = (gap + 2.0 * (delta - alpha)) / (1.0 - alpha);
    let (value, branch) = if energy < crossover {
        (barrier, RateBranch::Barrier)
    } else {
        (tolerance, RateBranch::Tolerance)
    };
    Ok(Rate {
        value,
        branch,
        crossover,
    })
}

/// `T_t = scale / (f(t) ln(e + t))`, the family over which the cooling
/// schedule is optimal; with `scale = gap` this is the form in the
/// optimality statement.
pub struct ScheduleFamily<'a> {
    pub scale: f64,
    pub f: &'a dyn Fn(f64) -> f64,
    pub f_prime: &'a dyn Fn(f64) -> f64,
}

impl ScheduleFamily<'_> {
    pub fn temperature(&self, t: f64) -> f64 {
        self.scale / ((self.f)(t) * (std::f64::consts::E + t).ln())
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let l = (std::f64::consts::E + t).ln();
        let f = (self.f)(t);
        let fp = (self.f_prime)(t);
        -self.scale * (fp * l + f / (std::f64::consts::E + t)) / (f * l).powi(2)
    }
}

/// Evaluates `Σ cᵢ xⁱ`.
pub fn polynomial(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// `x⁵`, the lowest order the dissipation argument permits.
pub const DEFAULT_P: [f64; 6] = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0];

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonPoint {
    pub t: f64,
    pub temperature: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub points: Vec<ComparisonPoint>,
    pub increasing: bool,
    pub decreasing: bool,
    pub final_ratio: f64,
}

/// Evaluates `2C_t⁻¹` against `|T′_t| p(1/T_t)` along `times` and reports
/// their ratio.
pub fn schedule_comparison(
    family: &ScheduleFamily<'_>,
    consts: &TheoryConstants,
    gap: f64,
    a_m: f64,
    p: &[f64],
    times: &[f64],
) -> Result<ComparisonReport> {
    if p.iter().any(|&c| c < 0.0) || p.len() < 6 || p[5..].iter().all(|&c| c == 0.0) {
        return Err(Error::validation(
            "p",
            "needs nonnegative coefficients and order at least five",
        ));
    }
    let points: Vec<ComparisonPoint> = times
        .iter()
        .map(|&t| {
            let temp = family.temperature(t);
            let lhs = 2.0 / log_sobolev_c(temp, consts, gap, a_m);
            let rhs = family.derivative(t).abs() * polynomial(p, 1.0 / temp);
            ComparisonPoint {
                t,
                temperature: temp,
                lhs,
                rhs,
                ratio: lhs / rhs,
            }
        })
        .collect();
    let increasing = points.windows(2).all(|w| w[1].ratio > w[0].ratio);
    let decreasing = points.windows(2).all(|w| w[1].ratio < w[0].ratio);
    let final_ratio = points.last().map(|p| p.ratio).unwrap_or(f64::NAN);
    Ok(ComparisonReport {
        points,
        increasing,
        decreasing,
        final_ratio,
    })
}

/// `10³, 10⁴, …, 10⁹`.
pub fn decade_times() -> Vec<f64> {
    (3..=9).map(|k| 10f64.powi(k)).collect()
}
