//! Replicated optimisation runs over the synthetic objectives, scored by the
//! gap measure and written out as CSV rows plus JSON run histories.

pub mod config;
pub mod error;
pub mod experiment;
pub mod report;
pub mod summary;

pub use config::{ExperimentConfig, Method};
pub use error::{BenchError, Result};
pub use experiment::{gap, initial_design, run_experiment, DiagnosticRow, ExperimentOutput, GapRecord, RunRecord};
pub use summary::{render_table, summarize, SummaryRow};
