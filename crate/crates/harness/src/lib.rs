//! Experiment runner for the `apmc-core` samplers: plan files, result tables,
//! per-run traces, summaries and charts.

pub mod error;
pub mod plan;
pub mod posterior;
pub mod results;
pub mod runner;
pub mod summary;
mod svg;

pub use error::{HarnessError, HarnessResult};
pub use plan::{Algorithm, CellConfig, ExperimentPlan, GridValue};
pub use results::{ResultRow, RunStatus};
pub use runner::{run_cell, run_plan, CellOutcome, PlanReport};
