//! The generator of the continuous GLE and the Lyapunov drift bound.
//!
//! For a test function `f(x, y, z)`
//! ```text
//! L f = y·∇ₓf − ∇U·∇_y f + (λᵀz)·∇_y f − (λy)·∇_z f − T⁻¹ zᵀA∇_z f + A : D²_z f
//! Γ f = ∇_z f · A ∇_z f
//! ```
//! Only first derivatives and the `z`-block of the Hessian enter, so test
//! functions supply exactly those.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrators::{DynamicsConfig, State};
use crate::matrices::operator_norm;
use crate::potentials::Potential;

/// Violations below this count as numerical noise.
pub const VIOLATION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl Gradient {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            x: vec![0.0; n],
            y: vec![0.0; n],
            z: vec![0.0; m],
        }
    }

    fn scale(mut self, c: f64) -> Self {
        for v in self.x.iter_mut().chain(&mut self.y).chain(&mut self.z) {
            *v *= c;
        }
        self
    }

    fn add(mut self, other: &Gradient) -> Self {
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a += b;
        }
        for (a, b) in self.y.iter_mut().zip(&other.y) {
            *a += b;
        }
        for (a, b) in self.z.iter_mut().zip(&other.z) {
            *a += b;
        }
        self
    }
}

pub trait SmoothTestFunction: Send + Sync {
    fn value(&self, s: &State) -> f64;
    fn grad(&self, s: &State) -> Gradient;
    /// `∂²f/∂z_i∂z_j`.
    fn hess_zz(&self, s: &State) -> DMatrix<f64>;
}

impl<F: SmoothTestFunction + ?Sized> SmoothTestFunction for &F {
    fn value(&self, s: &State) -> f64 {
        (**self).value(s)
    }
    fn grad(&self, s: &State) -> Gradient {
        (**self).grad(s)
    }
    fn hess_zz(&self, s: &State) -> DMatrix<f64> {
        (**self).hess_zz(s)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

pub fn apply_generator<F: SmoothTestFunction + ?Sized>(f: &F, s: &State, temp: f64, cfg: &DynamicsConfig) -> f64 {
    let g = f.grad(s);
    let n = cfg.n();
    let lambda = &cfg.coupling.lambda;
    let a = &cfg.memory.a;

    let mut grad_u = vec![0.0; n];
    cfg.potential.gradient(&s.x, &mut grad_u);

    let z = DVector::from_column_slice(&s.z);
    let y = DVector::from_column_slice(&s.y);
    let gz = DVector::from_column_slice(&g.z);
    let lt_z = lambda.transpose() * &z;
    let l_y = lambda * &y;

    let hamiltonian = dot(&s.y, &g.x) - dot(&grad_u, &g.y);
    let exchange = dot(lt_z.as_slice(), &g.y) - l_y.dot(&gz);
    let friction = -(z.dot(&(a * &gz))) / temp;
    let diffusion = a.component_mul(&f.hess_zz(s)).sum();
    hamiltonian + exchange + friction + diffusion
}

pub fn carre_du_champ<F: SmoothTestFunction + ?Sized>(f: &F, s: &State, cfg: &DynamicsConfig) -> f64 {
    let gz = DVector::from_vec(f.grad(s).z);
    gz.dot(&(&cfg.memory.a * &gz))
}

/// `f²`.
pub struct Squared<F>(pub F);

impl<F: SmoothTestFunction> SmoothTestFunction for Squared<F> {
    fn value(&self, s: &State) -> f64 {
        self.0.value(s).powi(2)
    }
    fn grad(&self, s: &State) -> Gradient {
        let v = self.0.value(s);
        self.0.grad(s).scale(2.0 * v)
    }
    fn hess_zz(&self, s: &State) -> DMatrix<f64> {
        let v = self.0.value(s);
        let gz = DVector::from_vec(self.0.grad(s).z);
        self.0.hess_zz(s) * (2.0 * v) + &gz * gz.transpose() * 2.0
    }
}

/// `e^f`.
pub struct Exp<F>(pub F);

impl<F: SmoothTestFunction> SmoothTestFunction for Exp<F> {
    fn value(&self, s: &State) -> f64 {
        self.0.value(s).exp()
    }
    fn grad(&self, s: &State) -> Gradient {
        let e = self.0.value(s).exp();
        self.0.grad(s).scale(e)
    }
    fn hess_zz(&self, s: &State) -> DMatrix<f64> {
        let e = self.0.value(s).exp();
        let gz = DVector::from_vec(self.0.grad(s).z);
        (self.0.hess_zz(s) + &gz * gz.transpose()) * e
    }
}

/// `a·f + b·g`.
pub struct Combination<F, G> {
    pub a: f64,
    pub f: F,
    pub b: f64,
    pub g: G,
}

impl<F: SmoothTestFunction, G: SmoothTestFunction> SmoothTestFunction for Combination<F, G> {
    fn value(&self, s: &State) -> f64 {
        self.a * self.f.value(s) + self.b * self.g.value(s)
    }
    fn grad(&self, s: &State) -> Gradient {
        self.f.grad(s).scale(self.a).add(&self.g.grad(s).scale(self.b))
    }
    fn hess_zz(&self, s: &State) -> DMatrix<f64> {
        self.f.hess_zz(s) * self.a + self.g.hess_zz(s) * self.b
    }
}

/// `|z|²/2`.
pub struct HalfNormZ;

impl SmoothTestFunction for HalfNormZ {
    fn value(&self, s: &State) -> f64 {
        0.5 * dot(&s.z, &s.z)
    }
    fn grad(&self, s: &State) -> Gradient {
        Gradient {
            x: vec![0.0; s.x.len()],
            y: vec![0.0; s.y.len()],
            z: s.z.clone(),
        }
    }
    fn hess_zz(&self, s: &State) -> DMatrix<f64> {
        DMatrix::identity(s.z.len(), s.z.len())
    }
}

/// `x·y`.
pub struct PositionVelocity;

impl SmoothTestFunction for PositionVelocity {
    fn value(&self, s: &State) -> f64 {
        dot(&s.x, &s.y)
    }
    fn grad(&self, s: &State) -> Gradient {
        Gradient {
            x: s.y.clone(),
            y: s.x.clone(),
            z: vec![0.0; s.z.len()],
        }
    }
    fn hess_zz(&self, s: &State) -> DMatrix<f64> {
        DMatrix::zeros(s.z.len(), s.z.len())
    }
}

/// The Gibbs energy `U(x) + |y|²/2 + |z|²/2`.
pub struct Energy(pub Arc<dyn Potential>);

impl SmoothTestFunction for Energy {
    fn value(&self, s: &State) -> f64 {
        self.0.value(&s.x) + 0.5 * dot(&s.y, &s.y) + 0.5 * dot(&s.z, &s.z)
    }
    fn grad(&self, s: &State) -> Gradient {
        Gradient {
            x: self.0.gradient_vec(&s.x),
            y: s.y.clone(),
            z: s.z.clone(),
        }
    }
    fn hess_zz(&self, s: &State) -> DMatrix<f64> {
        DMatrix::identity(s.z.len(), s.z.len())
    }
}

/// `sin(Σx) cos(Σy) + (1 + (Σy)²) e^{−|z|²/4}`: couples every block and
/// has a non-diagonal `z`-Hessian.
pub struct Wave;

impl SmoothTestFunction for Wave {
    fn value(&self, s: &State) -> f64 {
        let sx: f64 = s.x.iter().sum();
        let sy: f64 = s.y.iter().sum();
        let g = (-0.25 * dot(&s.z, &s.z)).exp();
        sx.sin() * sy.cos() + (1.0 + sy * sy) * g
    }
    fn grad(&self, s: &State) -> Gradient {
        let sx: f64 = s.x.iter().sum();
        let sy: f64 = s.y.iter().sum();
        let g = (-0.25 * dot(&s.z, &s.z)).exp();
        let gx = sx.cos() * sy.cos();
        let gy = -sx.sin() * sy.sin() + 2.0 * sy * g;
        let w = -0.5 * (1.0 + sy * sy) * g;
        Gradient {
            x: vec![gx; s.x.len()],
            y: vec![gy; s.y.len()],
            z: s.z.iter().map(|z| w * z).collect(),
        }
    }
    fn hess_zz(&self, s: &State) -> DMatrix<f64> {
        let sy: f64 = s.y.iter().sum();
        let g = (-0.25 * dot(&s.z, &s.z)).exp();
        let z = DVector::from_column_slice(&s.z);
        let m = s.z.len();
        ((&z * z.transpose()) * 0.25 - DMatrix::identity(m, m) * 0.5) * ((1.0 + sy * sy) * g)
    }
}

/// Uniform sample from the ball of the given radius in `ℝ^{2n+m}`.
pub fn sample_ball(rng: &mut ChaCha8Rng, n: usize, m: usize, radius: f64) -> State {
    let d = 2 * n + m;
    let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let norm = dot(&v, &v).sqrt();
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / d as f64) / norm;
    for c in &mut v {
        *c *= r;
    }
    split(&v, n, m)
}

/// Point on the sphere of the given radius.
pub fn sample_sphere(rng: &mut ChaCha8Rng, n: usize, m: usize, radius: f64) -> State {
    let d = 2 * n + m;
    let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let r = radius / dot(&v, &v).sqrt();
    for c in &mut v {
        *c *= r;
    }
    split(&v, n, m)
}

fn split(v: &[f64], n: usize, m: usize) -> State {
    State::new(v[..n].to_vec(), v[n..2 * n].to_vec(), v[2 * n..2 * n + m].to_vec())
}

fn flatten(s: &State) -> Vec<f64> {
    s.x.iter().chain(&s.y).chain(&s.z).copied().collect()
}

/// The Lyapunov function
/// `R = U(x) + |y|²/2 + |z|²/2 + δT(yᵀλ⁻¹z + ½x·y)`
/// with the quadratic envelope `a|v|² − d ≤ R ≤ b|v|² + d`.
#[derive(Debug, Clone, Serialize)]
pub struct LyapunovR {
    pub delta: f64,
    pub t_max: f64,
    pub quad_lo: f64,
    pub quad_hi: f64,
    pub shift_d: f64,
    /// Set by [`verify_drift`]; zero until then.
    pub drift_c: f64,
    #[serde(skip)]
    left_inverse: DMatrix<f64>,
}

impl LyapunovR {
    pub fn left_inverse(&self) -> &DMatrix<f64> {
        &self.left_inverse
    }

    fn cross(&self, s: &State) -> f64 {
        let z = DVector::from_column_slice(&s.z);
        let li_z = &self.left_inverse * z;
        dot(&s.y, li_z.as_slice()) + 0.5 * dot(&s.x, &s.y)
    }

    pub fn value(&self, cfg: &DynamicsConfig, s: &State, temp: f64) -> f64 {
        cfg.potential.value(&s.x) + 0.5 * dot(&s.y, &s.y) + 0.5 * dot(&s.z, &s.z)
            + self.delta * temp * self.cross(s)
    }

    /// `δT(yᵀλ⁻¹z + ½x·y)`.
    pub fn cross_term(&self, s: &State, temp: f64) -> f64 {
        self.delta * temp * self.cross(s)
    }

    /// `L R` in closed form:
    /// `−T⁻¹zᵀAz + Tr A + δT[−∇U·λ⁻¹z + zᵀλλ⁻¹z − |y|² − T⁻¹zᵀA(λ⁻¹)ᵀy
    ///  + ½(|y|² − ∇U·x + zᵀλx)]`.
    pub fn generator(&self, cfg: &DynamicsConfig, s: &State, temp: f64) -> f64 {
        let a = &cfg.memory.a;
        let lambda = &cfg.coupling.lambda;
        let li = &self.left_inverse;
        let x = DVector::from_column_slice(&s.x);
        let y = DVector::from_column_slice(&s.y);
        let z = DVector::from_column_slice(&s.z);
        let grad_u = DVector::from_vec(cfg.potential.gradient_vec(&s.x));

        let energy = -z.dot(&(a * &z)) / temp + a.trace();
        let li_z = li * &z;
        let yy = y.dot(&y);
        let mixed = -grad_u.dot(&li_z) + z.dot(&(lambda * &li_z)) - yy
            - z.dot(&(a * (li.transpose() * &y))) / temp;
        let xy = yy - grad_u.dot(&x) + z.dot(&(lambda * &x));
        energy + self.delta * temp * (mixed + 0.5 * xy)
    }

    /// `R` at a fixed temperature as a generic test function.
    pub fn at<'a>(&'a self, cfg: &'a DynamicsConfig, temp: f64) -> FrozenR<'a> {
        FrozenR { r: self, cfg, temp }
    }
}

pub struct FrozenR<'a> {
    r: &'a LyapunovR,
    cfg: &'a DynamicsConfig,
    temp: f64,
}

impl SmoothTestFunction for FrozenR<'_> {
    fn value(&self, s: &State) -> f64 {
        self.r.value(self.cfg, s, self.temp)
    }
    fn grad(&self, s: &State) -> Gradient {
        let dt = self.r.delta * self.temp;
        let li = &self.r.left_inverse;
        let y = DVector::from_column_slice(&s.y);
        let z = DVector::from_column_slice(&s.z);
        let li_z = li * &z;
        let lit_y = li.transpose() * &y;
        let gu = self.cfg.potential.gradient_vec(&s.x);
        Gradient {
            x: gu.iter().zip(&s.y).map(|(g, y)| g + 0.5 * dt * y).collect(),
            y: (0..s.y.len())
                .map(|i| s.y[i] + dt * (li_z[i] + 0.5 * s.x[i]))
                .collect(),
            z: (0..s.z.len()).map(|i| s.z[i] + dt * lit_y[i]).collect(),
        }
    }
    fn hess_zz(&self, s: &State) -> DMatrix<f64> {
        DMatrix::identity(s.z.len(), s.z.len())
    }
}

/// Right-hand side of the δ bound:
/// `(A_c/2)[(|λ|²/(2r₁) + 1 + (r₂/r₁)|λ⁻¹|²)T_max² + 2|A|²|λ⁻¹|²]⁻¹`.
pub fn delta_bound(cfg: &DynamicsConfig, t_max: f64) -> Result<f64> {
    let bounds = cfg
        .potential
        .bounds()
        .ok_or_else(|| Error::MissingBounds(cfg.potential.name().to_string()))?;
    if cfg.coupling.lambda_bar <= 0.0 {
        return Err(Error::validation("lambda-bar", "λ must have a left inverse"));
    }
    let a_c = cfg.memory.coercivity;
    if a_c <= 1e-12 {
        return Err(Error::CoercivityZero);
    }
    let l = operator_norm(&cfg.coupling.lambda);
    let li = operator_norm(&cfg.coupling.left_inverse);
    let a = cfg.memory.op_norm;
    let (r1, r2) = (bounds.r1, bounds.r2);
    let bracket = (l * l / (2.0 * r1) + 1.0 + r2 / r1 * li * li) * t_max * t_max + 2.0 * a * a * li * li;
    Ok(0.5 * a_c / bracket)
}

/// Radius of the far-field shell used to fix the growth constants.
pub const FAR_RADIUS: f64 = 1e3;

/// Builds `R` with δ at the bound and fits its quadratic envelope on a
/// seeded sample of the ball of radius `radius`.
pub fn build_r(cfg: &DynamicsConfig, t_max: f64, radius: f64, samples: usize, seed: u64) -> Result<LyapunovR> {
    if !(t_max > 0.0) {
        return Err(Error::validation("t-max", "must be positive"));
    }
    let delta = delta_bound(cfg, t_max)?;
    let mut r = LyapunovR {
        delta,
        t_max,
        quad_lo: 0.0,
        quad_hi: 0.0,
        shift_d: 0.0,
        drift_c: 0.0,
        left_inverse: cfg.coupling.left_inverse.clone(),
    };
    let (n, m) = (cfg.n(), cfg.m());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Growth rates from the far shell, at both ends of the temperature range.
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..samples.max(1000) {
        let s = sample_sphere(&mut rng, n, m, FAR_RADIUS);
        for temp in [t_max, 0.0] {
            let q = r.value(cfg, &s, temp) / (FAR_RADIUS * FAR_RADIUS);
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    if !(lo > 0.0) {
        return Err(Error::Domain(format!(
            "R is not coercive for δ = {delta:e} (far-field ratio {lo:e})"
        )));
    }
    r.quad_lo = 0.9 * lo;
    r.quad_hi = 1.1 * hi;

    let mut shift: f64 = 0.0;
    for _ in 0..samples {
        let s = sample_ball(&mut rng, n, m, radius);
        let v2 = s.norm_sq();
        for temp in [t_max, 0.0] {
            let val = r.value(cfg, &s, temp);
            shift = shift.max(r.quad_lo * v2 - val).max(val - r.quad_hi * v2);
        }
    }
    r.shift_d = shift * (1.0 + 1e-6) + 1e-9;
    Ok(r)
}

/// Largest `|δT(yᵀλ⁻¹z + ½x·y)| / |v|²` over a seeded sample of the ball.
pub fn cross_term_ratio(r: &LyapunovR, cfg: &DynamicsConfig, temp: f64, radius: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m) = (cfg.n(), cfg.m());
    (0..samples)
        .map(|_| sample_ball(&mut rng, n, m, radius))
        .filter(|s| s.norm_sq() > 0.0)
        .map(|s| r.cross_term(&s, temp).abs() / s.norm_sq())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct DriftReport {
    pub delta: f64,
    pub c: f64,
    pub d: f64,
    pub temperature: f64,
    pub radius: f64,
    pub samples: usize,
    pub max_violation: f64,
    pub violations: usize,
    /// Largest `L R` seen on the far shell; negative means the drift wins.
    pub far_field_max: f64,
    pub far_field_negative: bool,
    pub passed: bool,
}

/// Candidate drift rates, searched from the top.
fn c_grid() -> impl Iterator<Item = f64> {
    (0..60).map(|k| 2f64.powi(-k))
}

fn drift_gap(r: &LyapunovR, cfg: &DynamicsConfig, s: &State, temp: f64, c: f64) -> f64 {
    r.generator(cfg, s, temp) + c * temp * r.value(cfg, s, temp)
}

/// Projected finite-difference gradient ascent of `L R + cT R` in the ball.
fn ascend(r: &LyapunovR, cfg: &DynamicsConfig, start: &State, temp: f64, c: f64, radius: f64) -> f64 {
    let (n, m) = (cfg.n(), cfg.m());
    let mut v = flatten(start);
    let eval = |v: &[f64]| drift_gap(r, cfg, &split(v, n, m), temp, c);
    let mut best = eval(&v);
    let mut step = 0.1 * radius;
    for _ in 0..200 {
        let h = 1e-6 * (1.0 + radius);
        let mut g = vec![0.0; v.len()];
        for i in 0..v.len() {
            let mut vp = v.clone();
            let mut vm = v.clone();
            vp[i] += h;
            vm[i] -= h;
            g[i] = (eval(&vp) - eval(&vm)) / (2.0 * h);
        }
        let gn = dot(&g, &g).sqrt();
        if gn == 0.0 {
            break;
        }
        let mut cand: Vec<f64> = v.iter().zip(&g).map(|(a, b)| a + step * b / gn).collect();
        let cn = dot(&cand, &cand).sqrt();
        if cn > radius {
            for c in &mut cand {
                *c *= radius / cn;
            }
        }
        let val = eval(&cand);
        if val > best {
            best = val;
            v = cand;
        } else {
            step *= 0.5;
            if step < 1e-10 * radius {
                break;
            }
        }
    }
    best
}

/// Fits `(c, d)` for `L R ≤ −cT R + d` on one seeded sample of the ball and
/// checks it on an independent one.
///
/// `c` is the largest power of two (halved once for margin) for which
/// `L R + cT R < 0` on the whole far shell; `d` is the maximum of
/// `L R + cT R` over the fit sample, refined by local ascent. With
/// `force_c = Some(0.0)` the weaker bound `L R ≤ d` is checked instead.
pub fn verify_drift(
    r: &mut LyapunovR,
    cfg: &DynamicsConfig,
    temp: f64,
    samples: usize,
    radius: f64,
    seed: u64,
    force_c: Option<f64>,
) -> DriftReport {
    let (n, m) = (cfg.n(), cfg.m());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let far: Vec<State> = (0..2000).map(|_| sample_sphere(&mut rng, n, m, FAR_RADIUS)).collect();
    let far_field_max = far
        .par_iter()
        .map(|s| r.generator(cfg, s, temp))
        .reduce(|| f64::NEG_INFINITY, f64::max);

    let c = force_c.unwrap_or_else(|| {
        c_grid()
            .find(|&c| far.par_iter().all(|s| drift_gap(r, cfg, s, temp, c) < 0.0))
            .map(|c| 0.5 * c)
            .unwrap_or(0.0)
    });

    let fit: Vec<State> = (0..samples).map(|_| sample_ball(&mut rng, n, m, radius)).collect();
    let mut gaps: Vec<(f64, usize)> = fit
        .par_iter()
        .enumerate()
        .map(|(i, s)| (drift_gap(r, cfg, s, temp, c), i))
        .collect();
    gaps.sort_by(|a, b| b.0.total_cmp(&a.0));
    let refined = gaps
        .iter()
        .take(8)
        .map(|&(_, i)| ascend(r, cfg, &fit[i], temp, c, radius))
        .fold(f64::NEG_INFINITY, f64::max);
    let sup = gaps.first().map(|g| g.0).unwrap_or(0.0).max(refined);
    let d = sup.max(0.0) * (1.0 + 1e-6) + 1e-6;

    let check: Vec<State> = (0..samples).map(|_| sample_ball(&mut rng, n, m, radius)).collect();
    let excess: Vec<f64> = check
        .par_iter()
        .map(|s| drift_gap(r, cfg, s, temp, c) - d)
        .collect();
    let max_violation = excess.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let violations = excess.iter().filter(|&&e| e > VIOLATION_TOLERANCE).count();

    r.drift_c = c;
    DriftReport {
        delta: r.delta,
        c,
        d,
        temperature: temp,
        radius,
        samples,
        max_violation,
        violations,
        far_field_max,
        far_field_negative: far_field_max < 0.0,
        passed: violations == 0,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub identity: &'static str,
    pub functions: usize,
    pub samples: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn rel_err(lhs: f64, rhs: f64, scale: f64) -> f64 {
    (lhs - rhs).abs() / scale.max(1e-300)
}

/// The three test functions exercised by the identity checks.
pub fn standard_test_functions(cfg: &DynamicsConfig) -> Vec<Box<dyn SmoothTestFunction>> {
    vec![
        Box::new(Energy(cfg.potential.clone())),
        Box::new(Combination {
            a: 0.3,
            f: PositionVelocity,
            b: 1.0,
            g: HalfNormZ,
        }),
        Box::new(Wave),
    ]
}

/// Worst relative error of `Γ(f) = ½L(f²) − fL(f)`; the scale is the largest
/// of the three terms so that cancellation in the right-hand side is not
/// mistaken for an error.
pub fn check_carre(cfg: &DynamicsConfig, temp: f64, samples: usize, radius: f64, seed: u64) -> IdentityReport {
    let funcs = standard_test_functions(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<State> = (0..samples).map(|_| sample_ball(&mut rng, cfg.n(), cfg.m(), radius)).collect();
    let mut worst: f64 = 0.0;
    for f in &funcs {
        let sq = Squared(f.as_ref());
        for s in &pts {
            let gamma = carre_du_champ(f.as_ref(), s, cfg);
            let half_l_sq = 0.5 * apply_generator(&sq, s, temp, cfg);
            let f_lf = f.value(s) * apply_generator(f.as_ref(), s, temp, cfg);
            let scale = gamma.abs().max(half_l_sq.abs()).max(f_lf.abs());
            worst = worst.max(rel_err(gamma, half_l_sq - f_lf, scale));
        }
    }
    IdentityReport {
        identity: "carre-du-champ",
        functions: funcs.len(),
        samples,
        max_rel_error: worst,
        tolerance: 1e-6,
        passed: worst <= 1e-6,
    }
}

/// Worst relative error of `L(e^f) = e^f L f + e^f Γ(f)`.
pub fn check_chain_rule(cfg: &DynamicsConfig, temp: f64, samples: usize, radius: f64, seed: u64) -> IdentityReport {
    let funcs = standard_test_functions(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<State> = (0..samples).map(|_| sample_ball(&mut rng, cfg.n(), cfg.m(), radius)).collect();
    let mut worst: f64 = 0.0;
    for f in &funcs {
        // Keep e^f finite on the ball.
        let scaled = Combination {
            a: 0.01,
            f: f.as_ref(),
            b: 0.0,
            g: HalfNormZ,
        };
        let ex = Exp(&scaled);
        for s in &pts {
            let e = scaled.value(s).exp();
            let lhs = apply_generator(&ex, s, temp, cfg);
            let lf = e * apply_generator(&scaled, s, temp, cfg);
            let gf = e * carre_du_champ(&scaled, s, cfg);
            let scale = lhs.abs().max(lf.abs()).max(gf.abs());
            worst = worst.max(rel_err(lhs, lf + gf, scale));
        }
    }
    IdentityReport {
        identity: "chain-rule",
        functions: funcs.len(),
        samples,
        max_rel_error: worst,
        tolerance: 1e-6,
        passed: worst <= 1e-6,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrices::{self, Design};
    use crate::potentials::{by_name, quadratic};
    use crate::schedules::Schedule;

    fn cfg(design: Design, lambda_bar: f64) -> DynamicsConfig {
        let pot: Arc<dyn Potential> = Arc::new(quadratic(1, &[0.5]).unwrap());
        DynamicsConfig::new(pot, design, 1.0, lambda_bar, Schedule::constant(1.0), 0.1).unwrap()
    }

    struct Const;
    impl SmoothTestFunction for Const {
        fn value(&self, _: &State) -> f64 {
            3.0
        }
        fn grad(&self, s: &State) -> Gradient {
            Gradient::zeros(s.x.len(), s.z.len())
        }
        fn hess_zz(&self, s: &State) -> DMatrix<f64> {
            DMatrix::zeros(s.z.len(), s.z.len())
        }
    }

    #[test]
    fn constants_are_annihilated() {
        let c = cfg(Design::Rotation, 1.0);
        let s = State::new(vec![0.3], vec![-1.0], vec![2.0, 0.5]);
        assert_eq!(apply_generator(&Const, &s, 0.7, &c), 0.0);
        assert_eq!(carre_du_champ(&Const, &s, &c), 0.0);
    }

    #[test]
    fn half_norm_z_without_coupling() {
        // λ̄ = 0, A = I₂: L(|z|²/2) = −T⁻¹|z|² + m.
        let pot: Arc<dyn Potential> = Arc::new(quadratic(1, &[0.5]).unwrap());
        let memory = matrices::make_a(Design::Identity, 2, 1.0).unwrap();
        let coupling = matrices::decoupled(Design::Rotation, 1);
        let c = DynamicsConfig::from_parts(pot, memory, coupling, 1.0, Schedule::constant(1.0), 0.1).unwrap();
        let s = State::new(vec![0.3], vec![-1.0], vec![2.0, 0.5]);
        let temp = 0.5;
        let expected = -(4.0 + 0.25) / temp + 2.0;
        assert!((apply_generator(&HalfNormZ, &s, temp, &c) - expected).abs() < 1e-14);
    }

    #[test]
    fn position_velocity_symbolic() {
        // U = x², so ∇U = 2x: L(x·y) = |y|² − 2|x|² + zᵀλx.
        let pot: Arc<dyn Potential> = Arc::new(quadratic(1, &[1.0]).unwrap());
        let c = DynamicsConfig::new(pot, Design::Triangular, 1.0, 1.5, Schedule::constant(1.0), 0.1).unwrap();
        let s = State::new(vec![0.7], vec![-1.2], vec![0.4, 2.0]);
        let expected = 1.44 - 2.0 * 0.49 + 0.4 * 1.5 * 0.7;
        assert!((apply_generator(&PositionVelocity, &s, 0.3, &c) - expected).abs() < 1e-14);
    }

    #[test]
    fn carre_examples() {
        let c = cfg(Design::Identity, 1.0);
        let s = State::new(vec![0.3], vec![-1.0], vec![2.0]);
        assert_eq!(carre_du_champ(&PositionVelocity, &s, &c), 0.0);
        struct Z1;
        impl SmoothTestFunction for Z1 {
            fn value(&self, s: &State) -> f64 {
                s.z[0]
            }
            fn grad(&self, s: &State) -> Gradient {
                let mut g = Gradient::zeros(s.x.len(), s.z.len());
                g.z[0] = 1.0;
                g
            }
            fn hess_zz(&self, s: &State) -> DMatrix<f64> {
                DMatrix::zeros(s.z.len(), s.z.len())
            }
        }
        assert_eq!(carre_du_champ(&Z1, &s, &c), 1.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let c = cfg(Design::DampedRotation, 0.8);
        let r = build_r(&cfg(Design::Identity, 1.0), 1.0, 5.0, 200, 1).unwrap();
        let c1 = cfg(Design::Identity, 1.0);
        let frozen = r.at(&c1, 0.6);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let funcs: Vec<(Box<dyn SmoothTestFunction + '_>, &DynamicsConfig)> = vec![
            (Box::new(Wave), &c),
            (Box::new(Exp(Combination { a: 0.1, f: Wave, b: 0.2, g: PositionVelocity })), &c),
            (Box::new(Squared(Energy(c.potential.clone()))), &c),
            (Box::new(frozen), &c1),
        ];
        for (f, cf) in &funcs {
            for _ in 0..20 {
                let s = sample_ball(&mut rng, cf.n(), cf.m(), 2.0);
                let v = flatten(&s);
                let g = f.grad(&s);
                let gv: Vec<f64> = g.x.iter().chain(&g.y).chain(&g.z).copied().collect();
                let h = 1e-5;
                for i in 0..v.len() {
                    let mut p = v.clone();
                    let mut q = v.clone();
                    p[i] += h;
                    q[i] -= h;
                    let fd = (f.value(&split(&p, cf.n(), cf.m())) - f.value(&split(&q, cf.n(), cf.m()))) / (2.0 * h);
                    assert!((fd - gv[i]).abs() <= 1e-5 * fd.abs().max(1.0), "{i}: {fd} vs {}", gv[i]);
                }
                let hz = f.hess_zz(&s);
                let m = cf.m();
                for j in 0..m {
                    let mut p = s.clone();
                    let mut q = s.clone();
                    p.z[j] += h;
                    q.z[j] -= h;
                    let (gp, gq) = (f.grad(&p).z, f.grad(&q).z);
                    for i in 0..m {
                        let fd = (gp[i] - gq[i]) / (2.0 * h);
                        assert!((fd - hz[(i, j)]).abs() <= 1e-5 * fd.abs().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn linearity() {
        let c = cfg(Design::Triangular, 1.3);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let s = sample_ball(&mut rng, 1, 2, 3.0);
            let comb = Combination { a: 2.5, f: Wave, b: -0.7, g: PositionVelocity };
            let lhs = apply_generator(&comb, &s, 0.8, &c);
            let rhs = 2.5 * apply_generator(&Wave, &s, 0.8, &c) - 0.7 * apply_generator(&PositionVelocity, &s, 0.8, &c);
            assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn delta_closed_form() {
        // A = I, λ = I, U = x²/2 (r₁ = r₂ = 1), T_max = 1: (1/2)/(1/2 + 1 + 1 + 2) = 1/9.
        let r = build_r(&cfg(Design::Identity, 1.0), 1.0, 10.0, 500, 0).unwrap();
        assert!((r.delta - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn origin_value_is_zero() {
        let c = cfg(Design::Identity, 1.0);
        let r = build_r(&c, 1.0, 10.0, 500, 0).unwrap();
        assert_eq!(r.value(&c, &State::at_rest(vec![0.0], 1), 1.0), 0.0);
    }

    #[test]
    fn rejects_singular_memory() {
        let c = cfg(Design::Rotation, 1.0);
        assert!(matches!(build_r(&c, 1.0, 10.0, 100, 0), Err(Error::CoercivityZero)));
        let alp = DynamicsConfig::new(by_name("alpine12", None).unwrap(), Design::Identity, 1.0, 1.0, Schedule::constant(1.0), 0.1).unwrap();
        assert!(matches!(build_r(&alp, 1.0, 10.0, 100, 0), Err(Error::MissingBounds(_))));
    }

    #[test]
    fn closed_form_matches_generic_generator() {
        let c = cfg(Design::Identity, 1.0);
        let r = build_r(&c, 1.0, 10.0, 500, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for temp in [1.0, 0.3] {
            for _ in 0..100 {
                let s = sample_ball(&mut rng, 1, 1, 10.0);
                let closed = r.generator(&c, &s, temp);
                let generic = apply_generator(&r.at(&c, temp), &s, temp, &c);
                assert!((closed - generic).abs() < 1e-10 * closed.abs().max(1.0));
            }
        }
    }

    #[test]
    fn envelope_and_cross_term() {
        let c = cfg(Design::Identity, 1.0);
        let r = build_r(&c, 1.0, 10.0, 2000, 3).unwrap();
        assert!(r.quad_lo > 0.0 && r.quad_hi >= r.quad_lo);
        assert!(cross_term_ratio(&r, &c, 1.0, 10.0, 5000, 6) <= 0.25);
    }

    #[test]
    fn drift_on_quadratic_benchmark() {
        let c = cfg(Design::Identity, 1.0);
        let mut r = build_r(&c, 1.0, 10.0, 2000, 0).unwrap();
        let rep = verify_drift(&mut r, &c, 1.0, 2000, 10.0, 5, None);
        assert!(rep.passed, "{rep:?}");
        assert!(rep.c > 0.0 && rep.far_field_negative);
    }

    #[test]
    fn drift_with_zero_rate() {
        let c = cfg(Design::Identity, 1.0);
        let mut r = build_r(&c, 1.0, 10.0, 500, 0).unwrap();
        let rep = verify_drift(&mut r, &c, 1.0, 2000, 10.0, 11, Some(0.0));
        assert!(rep.passed && rep.c == 0.0);
    }
}
