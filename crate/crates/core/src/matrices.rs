//! Memory matrices `A = μ·Aᵢ`, couplings `λ = λ̄·λᵢ` and the noise factor `Σ`
//! with `ΣΣᵀ = A + Aᵀ`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

/// Eigenvalues of `A + Aᵀ` above this are treated as zero when taking the
/// square root; anything lower is rejected.
pub const PSD_TOLERANCE: f64 = 1e-12;

/// One of the four memory/coupling designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Design {
    /// `m = n`, `A₁ = Iₙ`, `λ₁ = Iₙ`.
    Identity,
    /// `m = 2n`, `A₂ = (0 −I; I I)`.
    Rotation,
    /// `m = 2n`, `A₃ = (I −I; I I)`.
    DampedRotation,
    /// `m = 2n`, ones on and above the diagonal, minus ones below.
    Triangular,
}

impl Design {
    pub const ALL: [Design; 4] = [
        Design::Identity,
        Design::Rotation,
        Design::DampedRotation,
        Design::Triangular,
    ];

    pub fn from_index(i: u32) -> Result<Self> {
        match i {
            1 => Ok(Design::Identity),
            2 => Ok(Design::Rotation),
            3 => Ok(Design::DampedRotation),
            4 => Ok(Design::Triangular),
            other => Err(Error::UnknownDesign(other)),
        }
    }

    pub fn index(self) -> u32 {
        match self {
            Design::Identity => 1,
            Design::Rotation => 2,
            Design::DampedRotation => 3,
            Design::Triangular => 4,
        }
    }

    /// Dimension `m` of the auxiliary variable for position dimension `n`.
    pub fn aux_dim(self, n: usize) -> usize {
        match self {
            Design::Identity => n,
            _ => 2 * n,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MemoryMatrix {
    pub a: DMatrix<f64>,
    pub mu: f64,
    pub design: Option<Design>,
    /// Smallest eigenvalue of `(A + Aᵀ)/2`, clamped at 0.
    pub coercivity: f64,
    pub op_norm: f64,
}

impl MemoryMatrix {
    /// Wraps an arbitrary square matrix. Not covered by the theory constants.
    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension {
                what: "memory matrix columns",
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        let sym = symmetric_part(&a);
        let min_eig = SymmetricEigen::new(sym).eigenvalues.min();
        let coercivity = min_eig.max(0.0);
        let op_norm = operator_norm(&a);
        Ok(Self {
            a,
            mu: 1.0,
            design: None,
            coercivity,
            op_norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// `zᵀ A z`
    pub fn quadratic_form(&self, z: &[f64]) -> f64 {
        let m = self.dim();
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                acc += z[i] * self.a[(i, j)] * z[j];
            }
        }
        acc
    }
}

#[derive(Debug, Clone)]
pub struct Coupling {
    /// `m × n`, rank `n`.
    pub lambda: DMatrix<f64>,
    pub lambda_bar: f64,
    /// `n × m` with `left_inverse · lambda = Iₙ`.
    pub left_inverse: DMatrix<f64>,
}

impl Coupling {
    pub fn n(&self) -> usize {
        self.lambda.ncols()
    }

    pub fn m(&self) -> usize {
        self.lambda.nrows()
    }
}

#[derive(Debug, Clone)]
pub struct NoiseMatrix {
    pub sigma: DMatrix<f64>,
}

fn symmetric_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn operator_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

fn base_a(design: Design, n: usize) -> DMatrix<f64> {
    let i = DMatrix::<f64>::identity(n, n);
    match design {
        Design::Identity => i,
        Design::Rotation | Design::DampedRotation => {
            let m = 2 * n;
            let mut a = DMatrix::zeros(m, m);
            if design == Design::DampedRotation {
                a.view_mut((0, 0), (n, n)).copy_from(&i);
            }
            a.view_mut((0, n), (n, n)).copy_from(&(-&i));
            a.view_mut((n, 0), (n, n)).copy_from(&i);
            a.view_mut((n, n), (n, n)).copy_from(&i);
            a
        }
        Design::Triangular => {
            let m = 2 * n;
            DMatrix::from_fn(m, m, |r, c| if c >= r { 1.0 } else { -1.0 })
        }
    }
}

pub fn make_a(design: Design, n: usize, mu: f64) -> Result<MemoryMatrix> {
    if n == 0 {
        return Err(Error::validation("dim", "must be at least 1"));
    }
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::validation("mu", format!("must be positive, got {mu}")));
    }
    let a = base_a(design, n) * mu;
    let mut mem = MemoryMatrix::from_matrix(a)?;
    mem.mu = mu;
    mem.design = Some(design);
    Ok(mem)
}

pub fn make_lambda(design: Design, n: usize, lambda_bar: f64) -> Result<Coupling> {
    if n == 0 {
        return Err(Error::validation("dim", "must be at least 1"));
    }
    if !(lambda_bar > 0.0) || !lambda_bar.is_finite() {
        return Err(Error::validation(
            "lambda-bar",
            format!("must be positive, got {lambda_bar}"),
        ));
    }
    let m = design.aux_dim(n);
    let mut base = DMatrix::zeros(m, n);
    base.view_mut((0, 0), (n, n)).fill_with_identity();
    let lambda = &base * lambda_bar;
    let left_inverse = base.transpose() / lambda_bar;
    Ok(Coupling {
        lambda,
        lambda_bar,
        left_inverse,
    })
}

/// A coupling with `λ̄ = 0`: no exchange between velocity and memory.
/// There is no left inverse, so it is stored as zero.
pub fn decoupled(design: Design, n: usize) -> Coupling {
    let m = design.aux_dim(n);
    Coupling {
        lambda: DMatrix::zeros(m, n),
        lambda_bar: 0.0,
        left_inverse: DMatrix::zeros(n, m),
    }
}

/// Symmetric positive semidefinite square root of `A + Aᵀ`.
pub fn make_sigma(a: &MemoryMatrix) -> Result<NoiseMatrix> {
    let gram = &a.a + a.a.transpose();
    let eig = SymmetricEigen::new(gram);
    let min = eig.eigenvalues.min();
    if min < -PSD_TOLERANCE {
        return Err(Error::InvalidMemoryMatrix {
            min_eigenvalue: min,
        });
    }
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let q = &eig.eigenvectors;
    let sigma = q * DMatrix::from_diagonal(&roots) * q.transpose();
    Ok(NoiseMatrix { sigma })
}
