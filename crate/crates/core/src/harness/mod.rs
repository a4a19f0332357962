//! Scenario files, the closed-loop simulator, CSV logs and metrics.

use std::path::PathBuf;

use thiserror::Error;

use crate::cinematography::PslError;

pub mod log;
pub mod metrics;
pub mod scenario;
pub mod sim;

pub use log::{emit_log, emit_plot_data, read_log, write_log, LOG_HEADER};
pub use metrics::{compute_metrics, RunReport};
pub use scenario::{load_scenario, Mode, Scenario, Trajectory};
pub use sim::{run_closed_loop, RunOptions, RunOutput, StepRecord};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid scenario: `{key}`: {msg}")]
    Invalid { key: String, msg: String },

    #[error(transparent)]
    Psl(#[from] PslError),

    #[error(transparent)]
    Core(#[from] crate::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    /// `state` is a JSON snapshot for reproducing the failure.
    #[error("run aborted at step {step}: {source}\nstate: {state}")]
    RunAborted {
        step: usize,
        #[source]
        source: crate::Error,
        state: String,
    },
}
