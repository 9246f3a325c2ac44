use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Iterative eigensolver gave up.
    #[error("eigensolver did not converge for eigenvalue {index} after {iterations} iterations (off-diagonal {residual:e})")]
    NoConvergence {
        index: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("no Lyapunov certificate: {0}")]
    NoCertificate(String),

    #[error("not integrable: {0}")]
    Integrability(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("inversion failed: {0}")]
    Inversion(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Parameter(msg()))
    }
}
