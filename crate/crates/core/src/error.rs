use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bracket endpoints do not enclose a sign change (f({lo}) and f({hi}) share sign)")]
    BracketInvalid { lo: f64, hi: f64 },

    #[error("tolerance {requested:e} is below the {precision} capability {capability:e}")]
    ToleranceUnreachable {
        requested: f64,
        capability: f64,
        precision: &'static str,
    },

    #[error("root iteration did not converge after {iterations} iterations (worst residual {worst_residual:e})")]
    NoConvergence {
        iterations: usize,
        worst_residual: f64,
        residuals: Vec<f64>,
    },

    #[error("invalid distribution: {0}")]
    InvalidSpec(String),

    #[error("degenerate (constant) distribution: {0}")]
    DegenerateSpec(String),

    #[error("{what} exceeds capability bound {limit}")]
    CapabilityExceeded { what: String, limit: usize },

    #[error("band structure violation: {0}")]
    StructureViolation(String),

    #[error("eigenvalue count mismatch: {real} real + {complex} complex != {n}; {diagnostics}")]
    CountMismatch {
        n: usize,
        real: usize,
        complex: usize,
        diagnostics: String,
    },

    #[error("continuity break for eigenvalue {j} at g = {g}: nearest candidate {distance:e} outside window {window:e}")]
    ContinuityBreak { j: usize, g: f64, distance: f64, window: f64 },

    #[error("eigenvalue difference {difference:e} is below extended-precision capability")]
    PrecisionExceeded { difference: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
