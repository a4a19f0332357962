use thiserror::Error;

/// Errors raised by the numeric core and the simulation harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical singularity in {context}{}", step_suffix(*.step))]
    Singular {
        context: &'static str,
        step: Option<usize>,
    },

    #[error("Riccati iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("gains are stale: heading moved {drift:.4} rad since they were computed (limit {limit} rad)")]
    StaleGains { drift: f64, limit: f64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error(transparent)]
    Psl(#[from] crate::cinematography::PslError),

    #[error("actor track error: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),
}

fn step_suffix(step: Option<usize>) -> String {
    match step {
        Some(k) => format!(" at step {k}"),
        None => String::new(),
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
