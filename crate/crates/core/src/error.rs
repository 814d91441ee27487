use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("pressure solve did not converge: residual {residual:.3e} > {tol:.1e} after {iterations} iterations")]
    Convergence {
        residual: f64,
        tol: f64,
        iterations: usize,
    },

    #[error("non-finite values at step {step} (t = {t})")]
    BlowUp { step: u64, t: f64 },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("time step {dt:.3e} exceeds the stability bound {limit:.3e}")]
    Stability { dt: f64, limit: f64 },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Numerical failures (blow-up, solver breakdown), as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Convergence { .. } | Error::BlowUp { .. })
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Format(_))
    }
}
