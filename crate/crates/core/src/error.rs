//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Grid construction rejected: bad bounds or too few points.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Detector placement violates the layout rules.
    #[error("invalid region: {0}")]
    InvalidRegion(String),

    /// State constructor or state-level precondition rejected.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Scalar parameter out of range (mass, widths, step counts).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Operands live on different grids.
    #[error("grid mismatch: {0} points vs {1} points")]
    GridMismatch(usize, usize),

    /// LU elimination hit an exactly zero pivot column.
    #[error("singular linear system at pivot {pivot}")]
    SingularSystem { pivot: usize },

    /// A propagating state reached the grid edge. Dirichlet walls reflect,
    /// so everything after this point would be an artifact; the run aborts.
    #[error(
        "edge contamination at step {step} (t = {time}): \
         edge amplitude {amplitude:.3e} exceeds 1e-6 of the state norm"
    )]
    EdgeContamination {
        step: usize,
        time: f64,
        amplitude: f64,
    },

    /// Operation outside its supported size or scheme.
    #[error("unsupported: {0}")]
    Unsupported(String),
}
