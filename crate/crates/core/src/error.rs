//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sampling budget exhausted after {attempts} attempts for {domain}")]
    SamplingBudget { domain: String, attempts: u64 },

    #[error("division guard tripped: |{what}| = {magnitude:.3e} below relative threshold")]
    DivisionGuard { what: String, magnitude: f64 },

    #[error("evaluation hit a pole of h (1 + (2δ-1)e^{{2Nz3}} vanished) at z3 = {z3}")]
    PoleEncountered { z3: num_complex::Complex64 },

    #[error("contour error: {0}")]
    Contour(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("inversion failed: {0}")]
    Inversion(String),

    #[error("certificate violation: {0}")]
    CertificateViolation(String),

    #[error("quadratic fit failed: {0}")]
    Fit(String),

    #[error("no witness circle found: {0}")]
    NoWitness(String),

    #[error("correction budget exceeded: sup-norm {sup:.3e} > budget {budget:.3e}")]
    CorrectionBudget { sup: f64, budget: f64 },

    #[error("interpolation points too close: min separation {min_sep:.3e} < {required:.3e}")]
    Conditioning { min_sep: f64, required: f64 },

    #[error("tuning stage {stage} failed: {reason}")]
    StageFailure { stage: String, reason: String },

    #[error("chain stage {stage} failed on condition ({condition}): {reason}")]
    Chain {
        stage: usize,
        condition: String,
        reason: String,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("serialization: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
