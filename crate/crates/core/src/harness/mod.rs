//! Corpus runner, explicit-state oracle, counterexample replay and reports.

pub mod interp;
mod oracle;
mod replay;
mod report;
mod run;
mod task;

use thiserror::Error;

use crate::frontend::FrontendError;
use crate::transform::TransformError;

pub use oracle::{interpret_bounded, OracleResult};
pub use replay::replay;
pub use report::{write_csv, write_outputs, write_quantiles, Counts, RunReport, CSV_COLUMNS};
pub use run::{
    classify, prepare, run_algorithm, run_pairs, run_task, run_task_isolated, Classification,
    Record, RunConfig, RunOutcome,
};
pub use task::{load_corpus, Expected, Task};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("bad task header: {0}")]
    Header(String),
    #[error("i/o error: {0}")]
    Io(String),
}
