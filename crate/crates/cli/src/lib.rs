//! Command-line front end for `hatano-core`: experiment configuration,
//! the realization sweep, reproducible output directories and SVG plots.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;
pub mod sweep;

pub use config::{ExperimentConfig, Overrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] hatano_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for configuration problems, 2 when a capability bound is hit, 3 for
    /// structural or solver failures.
    pub fn exit_code(&self) -> i32 {
        use hatano_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                E::InvalidSpec(_) | E::DegenerateSpec(_) | E::InvalidArgument(_) | E::Schema(_) | E::Io(_) => 1,
                E::CapabilityExceeded { .. } | E::PrecisionExceeded { .. } | E::ToleranceUnreachable { .. } => 2,
                E::StructureViolation(_)
                | E::CountMismatch { .. }
                | E::ContinuityBreak { .. }
                | E::NoConvergence { .. }
                | E::BracketInvalid { .. } => 3,
            },
        }
    }
}

/// Caps the global thread pool at `HATANO_THREADS` when set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("HATANO_THREADS") else { return Ok(()) };
    let threads: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("HATANO_THREADS must be a positive integer, got {v:?}")))?;
    if threads == 0 {
        return Err(CliError::Config("HATANO_THREADS must be positive".into()));
    }
    // a pool built earlier in the same process keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}
