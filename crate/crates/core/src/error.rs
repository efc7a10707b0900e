use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("eigendecomposition did not converge (dim {dim})")]
    EigenNoConvergence { dim: usize },

    #[error("series exponential did not converge after {terms} terms (dt*|H| = {scaled_norm:.3e})")]
    SeriesNoConvergence { terms: usize, scaled_norm: f64 },

    #[error("step refinement exhausted after {halvings} halvings: dt = {dt:.3e}, terminal mismatch {mismatch:.3e} > {tol:.1e}")]
    RefinementExhausted { halvings: u32, dt: f64, mismatch: f64, tol: f64 },

    #[error("negative variance {value:.3e} beyond tolerance {tol:.1e} in {context}")]
    NegativeVariance { value: f64, tol: f64, context: &'static str },

    #[error("state norm {norm} deviates from 1 beyond {tol:.1e}")]
    NotNormalized { norm: f64, tol: f64 },

    #[error("{0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical machinery, as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigenNoConvergence { .. }
                | Error::SeriesNoConvergence { .. }
                | Error::RefinementExhausted { .. }
                | Error::NegativeVariance { .. }
                | Error::NotNormalized { .. }
                | Error::Domain(_)
        )
    }
}
