//! Trial driver, trace persistence, convergence labels, replay validation
//! and batch statistics.

use thiserror::Error;

use crate::agent::AgentError;
use crate::equilibrium::EquilibriumError;
use crate::opponents::PolicyError;

pub mod batch;
pub mod config;
pub mod convergence;
pub mod run;
pub mod trace;
pub mod validate;

pub use batch::{
    read_summary_csv, run_batch, run_batch_with_jobs, write_summary_csv, BatchResult, BatchStats,
    SummaryRow, TrialOutcome, SUMMARY_SCHEMA,
};
pub use config::{AgentSpec, RunConfig, DEFAULT_WINDOW};
pub use convergence::{detect_convergence, ConvergedKind, RunSummary};
pub use run::{run_trial, run_trial_with_order, seat_seed};
pub use trace::{EpochRecord, RunTrace, StopReason, TraceEnd, TraceHeader, TRACE_SCHEMA};
pub use validate::{
    check_synchronization, validate_self_described, validate_trace, Divergence, Rule,
    SyncViolation, ValidationReport,
};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("reading trace: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("unsupported trace schema {0:?}")]
    Schema(String),
    #[error("trace line {line}: {message}")]
    Structural { line: usize, message: String },
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid run config: {0}")]
    Config(String),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("summary file: {0}")]
    Csv(#[from] csv::Error),
    #[error("insufficient data: {epochs} complete epochs, window needs {window}")]
    InsufficientData { epochs: usize, window: usize },
}
