//! Benchmark cost functions with closed-form gradients.
//!
//! Every potential is immutable after construction and can be shared across
//! worker threads. Potentials that satisfy the quadratic growth conditions
//! used by the convergence theory carry a [`QuadraticBounds`] record:
//!
//! ```text
//! |a∘x|² + U_m ≤ U(x) ≤ |a∘x|² + U_M
//! ∇U(x)·x ≥ r1 |x|² − U_g
//! |∇U(x)|² ≤ r2 |x|² + U_g
//! ```
//!
//! For the multi-well benchmarks those constants are fitted numerically (see
//! [`fit_bounds`]) and stored; the test suite re-verifies them on a grid.

use std::sync::Arc;

use crate::error::{Error, Result};

/// A differentiable cost function `U: ℝⁿ → ℝ`.
pub trait Potential: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `∇U(x)` (a subgradient for nonsmooth potentials) into `grad`.
    fn gradient(&self, x: &[f64], grad: &mut [f64]);

    fn bounds(&self) -> Option<&QuadraticBounds> {
        None
    }

    /// False on the set where `U` is not differentiable.
    fn is_smooth_at(&self, _x: &[f64]) -> bool {
        true
    }

    fn gradient_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient(x, &mut g);
        g
    }
}

/// Constants of the quadratic growth conditions on `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticBounds {
    pub a_bar: Vec<f64>,
    pub a_m: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub r1: f64,
    pub r2: f64,
    pub u_g: f64,
    /// `sup_x |D²U(x)|` in operator norm.
    pub hess_sup: f64,
}

impl QuadraticBounds {
    pub fn new(
        a_bar: Vec<f64>,
        u_min: f64,
        u_max: f64,
        r1: f64,
        r2: f64,
        u_g: f64,
        hess_sup: f64,
    ) -> Self {
        let a_m = a_bar.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            a_bar,
            a_m,
            u_min,
            u_max,
            r1,
            r2,
            u_g,
            hess_sup,
        }
    }

    /// `U_M − U_m`, the critical energy of the annealing schedule.
    pub fn gap(&self) -> f64 {
        self.u_max - self.u_min
    }

    fn weighted_norm_sq(&self, x: &[f64]) -> f64 {
        self.a_bar
            .iter()
            .zip(x)
            .map(|(a, xi)| (a * xi) * (a * xi))
            .sum()
    }

    /// Largest violation of the three growth conditions at `x`, as
    /// `(lower_q1, upper_q1, q2, q3)`. Nonpositive entries mean the condition holds.
    pub fn violations(&self, potential: &dyn Potential, x: &[f64]) -> [f64; 4] {
        let u = potential.value(x);
        let g = potential.gradient_vec(x);
        let ax = self.weighted_norm_sq(x);
        let xx: f64 = x.iter().map(|v| v * v).sum();
        let gx: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
        let gg: f64 = g.iter().map(|v| v * v).sum();
        [
            (ax + self.u_min) - u,
            u - (ax + self.u_max),
            (self.r1 * xx - self.u_g) - gx,
            gg - (self.r2 * xx + self.u_g),
        ]
    }
}

/// `U(x) = Σ cᵢ xᵢ²`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    coeffs: Vec<f64>,
    bounds: QuadraticBounds,
}

pub fn quadratic(n: usize, coeffs: &[f64]) -> Result<Quadratic> {
    if n == 0 {
        return Err(Error::validation("dim", "must be at least 1"));
    }
    if coeffs.len() != n {
        return Err(Error::Dimension {
            what: "quadratic coefficients",
            expected: n,
            got: coeffs.len(),
        });
    }
    if let Some(c) = coeffs.iter().find(|c| !(**c > 0.0) || !c.is_finite()) {
        return Err(Error::validation(
            "coeffs",
            format!("coefficients must be strictly positive, got {c}"),
        ));
    }
    let cmin = coeffs.iter().copied().fold(f64::INFINITY, f64::min);
    let cmax = coeffs.iter().copied().fold(0.0, f64::max);
    // ∇U·x = 2Σcᵢxᵢ² ≥ 2 c_min |x|², |∇U|² = 4Σcᵢ²xᵢ² ≤ 4 c_max² |x|².
    // U_g only has to be positive; it absorbs rounding at equality.
    let bounds = QuadraticBounds::new(
        coeffs.iter().map(|c| c.sqrt()).collect(),
        0.0,
        0.0,
        2.0 * cmin,
        4.0 * cmax * cmax,
        1e-12,
        2.0 * cmax,
    );
    Ok(Quadratic {
        coeffs: coeffs.to_vec(),
        bounds,
    })
}

impl Potential for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.coeffs.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(c, xi)| c * xi * xi).sum()
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        for ((g, c), xi) in grad.iter_mut().zip(&self.coeffs).zip(x) {
            *g = 2.0 * c * xi;
        }
    }

    fn bounds(&self) -> Option<&QuadraticBounds> {
        Some(&self.bounds)
    }
}

/// `amp · exp(−p (x₁−c₁)² − q (x₂−c₂)²)`
#[derive(Debug, Clone, Copy)]
struct Well {
    amp: f64,
    c1: f64,
    c2: f64,
    p: f64,
    q: f64,
}

impl Well {
    #[inline]
    fn eval(&self, x1: f64, x2: f64, grad: Option<&mut [f64; 2]>) -> f64 {
        let d1 = x1 - self.c1;
        let d2 = x2 - self.c2;
        let v = self.amp * (-self.p * d1 * d1 - self.q * d2 * d2).exp();
        if let Some(g) = grad {
            g[0] += -2.0 * self.p * d1 * v;
            g[1] += -2.0 * self.q * d2 * v;
        }
        v
    }
}

/// `5 x₁² e^{−x₁²/9} cos(x₁+2x₂) cos(2x₁−x₂) / (1 + x₂²/9)`
#[inline]
fn ripple(x1: f64, x2: f64, grad: Option<&mut [f64; 2]>) -> f64 {
    let e = (-x1 * x1 / 9.0).exp();
    let (s1, c1) = (x1 + 2.0 * x2).sin_cos();
    let (s2, c2) = (2.0 * x1 - x2).sin_cos();
    let den = 1.0 + x2 * x2 / 9.0;
    let amp = 5.0 * x1 * x1 * e;
    let v = amp * c1 * c2 / den;
    if let Some(g) = grad {
        let damp = 5.0 * e * (2.0 * x1 - 2.0 * x1 * x1 * x1 / 9.0);
        g[0] += (damp * c1 * c2 + amp * (-s1 * c2 - 2.0 * c1 * s2)) / den;
        g[1] += amp * ((-2.0 * s1 * c2 + c1 * s2) / den - c1 * c2 * (2.0 * x2 / 9.0) / (den * den));
    }
    v
}

/// Which of the three two-dimensional multi-well landscapes to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiWellKind {
    /// The bivariate benchmark with a barrier along `x₁ = 0` and its global
    /// minimum near `(−5, 3)`.
    Bivariate,
    /// Isotropic confinement and a barrier with a narrow gap near the origin.
    U2,
    /// Elongated wells, no ripple term.
    U3,
}

#[derive(Debug, Clone)]
pub struct MultiWell {
    kind: MultiWellKind,
    wells: [Well; 2],
    bounds: QuadraticBounds,
}

impl MultiWell {
    pub fn kind(&self) -> MultiWellKind {
        self.kind
    }

    fn confinement(&self) -> (f64, f64) {
        match self.kind {
            MultiWellKind::Bivariate | MultiWellKind::U3 => (1.0 / 5.0, 1.0 / 10.0),
            MultiWellKind::U2 => (1.0 / 7.0, 1.0 / 7.0),
        }
    }

    fn eval(&self, x: &[f64], mut grad: Option<&mut [f64; 2]>) -> f64 {
        let (x1, x2) = (x[0], x[1]);
        let (k1, k2) = self.confinement();
        let mut v = k1 * x1 * x1 + k2 * x2 * x2;
        if let Some(g) = grad.as_deref_mut() {
            *g = [2.0 * k1 * x1, 2.0 * k2 * x2];
        }

        // Barrier along x₁ = 0.
        let ex1 = (-x1 * x1).exp();
        match self.kind {
            MultiWellKind::Bivariate | MultiWellKind::U3 => {
                v += 5.0 * ex1;
                if let Some(g) = grad.as_deref_mut() {
                    g[0] += -10.0 * x1 * ex1;
                }
            }
            MultiWellKind::U2 => {
                let ex2 = (-9.0 * x2 * x2).exp();
                v += 5.0 * (1.0 - ex2) * ex1;
                if let Some(g) = grad.as_deref_mut() {
                    g[0] += -10.0 * x1 * (1.0 - ex2) * ex1;
                    g[1] += 90.0 * x2 * ex2 * ex1;
                }
            }
        }

        for w in &self.wells {
            v -= w.eval(x1, x2, None);
        }
        if let Some(g) = grad.as_deref_mut() {
            let mut wg = [0.0; 2];
            for w in &self.wells {
                w.eval(x1, x2, Some(&mut wg));
            }
            g[0] -= wg[0];
            g[1] -= wg[1];
        }

        if self.kind != MultiWellKind::U3 {
            v += ripple(x1, x2, grad);
        }
        v
    }
}

impl Potential for MultiWell {
    fn name(&self) -> &str {
        match self.kind {
            MultiWellKind::Bivariate => "bivar",
            MultiWellKind::U2 => "u2",
            MultiWellKind::U3 => "u3",
        }
    }

    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x, None)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let mut g = [0.0; 2];
        self.eval(x, Some(&mut g));
        grad[..2].copy_from_slice(&g);
    }

    fn bounds(&self) -> Option<&QuadraticBounds> {
        Some(&self.bounds)
    }
}

// Fitted with `fit_bounds(.., 20.0, 0.05)` and padded; see tests.
pub fn bivariate_multiwell() -> MultiWell {
    MultiWell {
        kind: MultiWellKind::Bivariate,
        wells: [
            Well { amp: 7.0, c1: -5.0, c2: 3.0, p: 1.0, q: 1.0 },
            Well { amp: 6.0, c1: 5.0, c2: -2.0, p: 1.0, q: 1.0 },
        ],
        bounds: QuadraticBounds::new(
            vec![(1.0f64 / 5.0).sqrt(), (1.0f64 / 10.0).sqrt()],
            BIVAR_FIT[0],
            BIVAR_FIT[1],
            BIVAR_FIT[2],
            BIVAR_FIT[3],
            BIVAR_FIT[4],
            BIVAR_FIT[5],
        ),
    }
}

pub fn u2() -> MultiWell {
    MultiWell {
        kind: MultiWellKind::U2,
        wells: [
            Well { amp: 7.0, c1: -5.0, c2: 3.0, p: 1.0, q: 1.0 },
            Well { amp: 6.0, c1: 5.0, c2: -2.0, p: 1.0, q: 1.0 },
        ],
        bounds: QuadraticBounds::new(
            vec![(1.0f64 / 7.0).sqrt(), (1.0f64 / 7.0).sqrt()],
            U2_FIT[0],
            U2_FIT[1],
            U2_FIT[2],
            U2_FIT[3],
            U2_FIT[4],
            U2_FIT[5],
        ),
    }
}

pub fn u3() -> MultiWell {
    MultiWell {
        kind: MultiWellKind::U3,
        wells: [
            Well { amp: 7.0, c1: -5.0, c2: 3.0, p: 2.0, q: 0.2 },
            Well { amp: 6.0, c1: 5.0, c2: -2.0, p: 0.2, q: 2.0 },
        ],
        bounds: QuadraticBounds::new(
            vec![(1.0f64 / 5.0).sqrt(), (1.0f64 / 10.0).sqrt()],
            U3_FIT[0],
            U3_FIT[1],
            U3_FIT[2],
            U3_FIT[3],
            U3_FIT[4],
            U3_FIT[5],
        ),
    }
}

// [U_m, U_M, r1, r2, U_g, |D²U|∞]
const BIVAR_FIT: [f64; 6] = [-16.6, 13.6, 0.1, 0.32, 1300.0, 95.0];
const U2_FIT: [f64; 6] = [-16.6, 13.6, 1.0 / 7.0, 8.0 / 49.0, 1300.0, 95.0];
const U3_FIT: [f64; 6] = [-7.05, 5.05, 0.1, 0.32, 110.0, 30.0];

/// `U(x) = ½ Σᵢ |xᵢ sin xᵢ + 0.1 xᵢ|` in twelve dimensions.
///
/// Not differentiable where `xᵢ sin xᵢ + 0.1 xᵢ = 0`; there the subgradient
/// component is taken as 0. Grows only linearly, so it carries no
/// [`QuadraticBounds`].
#[derive(Debug, Clone)]
pub struct Alpine {
    dim: usize,
}

pub fn alpine12() -> Alpine {
    Alpine { dim: 12 }
}

pub fn alpine(dim: usize) -> Result<Alpine> {
    if dim == 0 {
        return Err(Error::validation("dim", "must be at least 1"));
    }
    Ok(Alpine { dim })
}

#[inline]
fn alpine_inner(x: f64) -> f64 {
    x * x.sin() + 0.1 * x
}

impl Potential for Alpine {
    fn name(&self) -> &str {
        "alpine12"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().map(|&xi| alpine_inner(xi).abs()).sum::<f64>()
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        for (g, &xi) in grad.iter_mut().zip(x) {
            let inner = alpine_inner(xi);
            let sign = if inner > 0.0 {
                1.0
            } else if inner < 0.0 {
                -1.0
            } else {
                0.0
            };
            *g = 0.5 * sign * (xi.sin() + xi * xi.cos() + 0.1);
        }
    }

    fn is_smooth_at(&self, x: &[f64]) -> bool {
        x.iter().all(|&xi| alpine_inner(xi) != 0.0)
    }
}

/// Looks a potential up by its CLI name. `dim` only applies to `quadratic`
/// (coefficients ½, i.e. `U = |x|²/2`).
pub fn by_name(name: &str, dim: Option<usize>) -> Result<Arc<dyn Potential>> {
    Ok(match name {
        "quadratic" => {
            let n = dim.unwrap_or(1);
            Arc::new(quadratic(n, &vec![0.5; n])?)
        }
        "bivar" => Arc::new(bivariate_multiwell()),
        "alpine12" => Arc::new(alpine12()),
        "u2" => Arc::new(u2()),
        "u3" => Arc::new(u3()),
        other => return Err(Error::UnknownPotential(other.to_string())),
    })
}

pub const POTENTIAL_NAMES: [&str; 5] = ["quadratic", "bivar", "alpine12", "u2", "u3"];

/// Every point of the square grid `[-radius, radius]²` with spacing `step`.
pub fn grid_2d(radius: f64, step: f64) -> impl Iterator<Item = [f64; 2]> {
    let n = (2.0 * radius / step).round() as i64;
    (0..=n).flat_map(move |i| {
        (0..=n).map(move |j| [-radius + i as f64 * step, -radius + j as f64 * step])
    })
}

/// Fits growth constants for a two-dimensional potential with confinement
/// weights `a_bar` by scanning a grid.
///
/// `r1 = min āᵢ²` and `r2 = 8 max āᵢ⁴` are fixed fractions/multiples of the
/// asymptotic quadratic rates; `U_m`, `U_M`, `U_g` and `|D²U|∞` are the grid
/// extrema. The Hessian norm uses central differences of the gradient.
pub fn fit_bounds(potential: &dyn Potential, a_bar: &[f64], radius: f64, step: f64) -> QuadraticBounds {
    assert_eq!(potential.dim(), 2, "fit_bounds scans a 2-d grid");
    let r1 = a_bar.iter().map(|a| a * a).fold(f64::INFINITY, f64::min);
    let r2 = 8.0 * a_bar.iter().map(|a| a.powi(4)).fold(0.0, f64::max);
    let mut u_min = f64::INFINITY;
    let mut u_max = f64::NEG_INFINITY;
    let mut u_g: f64 = 0.0;
    let mut hess: f64 = 0.0;
    let h = 1e-5;
    for x in grid_2d(radius, step) {
        let u = potential.value(&x);
        let ax: f64 = a_bar.iter().zip(&x).map(|(a, v)| (a * v) * (a * v)).sum();
        u_min = u_min.min(u - ax);
        u_max = u_max.max(u - ax);
        let g = potential.gradient_vec(&x);
        let xx = x[0] * x[0] + x[1] * x[1];
        let gx = g[0] * x[0] + g[1] * x[1];
        let gg = g[0] * g[0] + g[1] * g[1];
        u_g = u_g.max(r1 * xx - gx).max(gg - r2 * xx);

        let mut m = [[0.0; 2]; 2];
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let gp = potential.gradient_vec(&xp);
            let gm = potential.gradient_vec(&xm);
            for i in 0..2 {
                m[i][j] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        // Symmetric 2×2: spectral norm = max |eigenvalue|.
        let a = 0.5 * (m[0][0] + m[1][1]);
        let b = 0.5 * (m[0][1] + m[1][0]);
        let d = 0.5 * (m[0][0] - m[1][1]);
        let rad = (d * d + b * b).sqrt();
        hess = hess.max((a + rad).abs()).max((a - rad).abs());
    }
    QuadraticBounds::new(a_bar.to_vec(), u_min, u_max, r1, r2, u_g, hess)
}
