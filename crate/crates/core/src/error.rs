use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("J_{nu}(0) diverges for negative order")]
    Divergence { nu: f64 },

    #[error("special function evaluation did not converge: {0}")]
    NonConvergence(String),

    #[error("series not converged (nu={nu}, scale={scale:e}, needed > {n_max} terms)")]
    SeriesNotConverged { nu: f64, scale: f64, n_max: usize },

    #[error("q2 series produced a non-positive value {value:e} (nu={nu}, tau={tau}, y={y})")]
    PositivityViolation { nu: f64, tau: f64, y: f64, value: f64 },

    #[error("log-value {log_value} below underflow floor")]
    Underflow { log_value: f64 },

    #[error("rejection sampling exhausted after {attempts} attempts")]
    RejectionExhausted { attempts: usize },

    #[error("inverse CDF failure: {0}")]
    InverseCdf(String),

    #[error("kernel requires nu = 1/2 (delta = 3), got nu = {nu}")]
    Order { nu: f64 },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("curve mass {mass} deviates from 1 by more than {tol:e}")]
    MassDefect { mass: f64, tol: f64 },

    #[error("unknown validation suite `{0}`")]
    UnknownSuite(String),
}

impl Error {
    /// Numerical failures, as opposed to bad arguments.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::Domain(_) | Error::Order { .. } | Error::UnknownSuite(_) | Error::MassDefect { .. })
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
