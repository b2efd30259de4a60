use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value failed validation; `key` names the offending option.
    #[error("invalid {key}: {reason}")]
    Validation { key: String, reason: String },

    #[error("{0} required")]
    Missing(String),

    #[error("unknown A/lambda design {0} (expected 1, 2, 3 or 4)")]
    UnknownDesign(u32),

    #[error("unknown potential `{0}`")]
    UnknownPotential(String),

    #[error("invalid memory matrix: A + A^T has eigenvalue {min_eigenvalue:e} < -1e-12")]
    InvalidMemoryMatrix { min_eigenvalue: f64 },

    #[error("state became non-finite at step {step}")]
    Diverged { step: u64 },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{0}")]
    Domain(String),

    #[error("coercivity zero, Lyapunov construction inapplicable")]
    CoercivityZero,

    #[error("potential `{0}` declares no quadratic bounds")]
    MissingBounds(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn validation(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
