use thiserror::Error;

/// Errors raised by the density, training and harness routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid label distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("kernel domain error: 1 + w1i[{label}] + w1j[{label}] = {value} <= 0 (rows {rows:?})")]
    KernelDomain {
        rows: Option<(usize, usize)>,
        label: usize,
        value: f64,
    },

    #[error("label distribution entry {index} = {value} is not strictly positive")]
    NonInteriorLabel { index: usize, value: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("model is degenerate: {0}")]
    ModelDegenerate(String),

    #[error("invalid confidence level or multiplier: {0}")]
    InvalidLevel(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged after {batches} consecutive non-finite batches; try a smaller learning rate (currently {learning_rate:e})")]
    Divergence { batches: usize, learning_rate: f64 },

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
