use thiserror::Error;

/// Errors produced while building or solving a decomposed Helmholtz problem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error(
        "domain {width} x {height} cannot be meshed with square cells \
         (aspect ratio is not a ratio of integers with denominator <= {max_denominator})"
    )]
    NonCommensurate {
        width: f64,
        height: f64,
        max_denominator: usize,
    },

    #[error("invalid wavenumber field: {0}")]
    InvalidWavenumber(String),

    #[error("strip decomposition rejected: {0}")]
    StripBound(String),

    #[error("singular matrix in {context} (zero pivot at row {row})")]
    Singular { context: String, row: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("Fourier number {xi} is at the cutoff |xi| = k = {k}")]
    Cutoff { xi: f64, k: f64 },

    #[error("symbol relation violated: {0}")]
    Relation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
