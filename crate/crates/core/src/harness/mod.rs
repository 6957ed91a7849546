//! Matched deterministic and stochastic runs.
//!
//! For every lattice scale `L` and seed, the droplet is simulated in
//! microscopic time `L² t` and compared at each checkpoint `t` with the
//! flowed domain `D_t`: the report records the Hausdorff distance and the
//! two inclusions `D_t^(-η) ⊂ A` and `A ⊂ D_t^(η)`. The flow is integrated
//! once per plan and shared by all replicas.

mod plan;
mod report;

pub use plan::{Checkpoint, ExperimentPlan};
pub use report::{
    aggregate, convergence_from_scales, convergence_table, read_rows, run_experiment, run_experiment_with, summary_json, write_report,
    write_rows, CheckpointView, ComparisonReport, ConvergenceRow, ConvergenceTable, FlowSummary, ReportFiles,
    ReportRow, ScaleSummary,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
