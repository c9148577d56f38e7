use thiserror::Error;

/// Errors raised by the quantum-dot toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("ill-conditioned basis ({0}); try a smaller interval count or a larger cutoff")]
    IllConditioned(String),

    #[error("no qubit: {0}")]
    NoQubit(String),

    #[error("step-size failure: norm deficit {deficit:.3e} at t = {time:.6e}; halve dt (raise steps per period)")]
    StepSize { deficit: f64, time: f64 },

    #[error("root at scan endpoint E = {0}; widen the energy range")]
    WidenRange(f64),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
