//! Experiment driver: configuration, Monte Carlo trials, reports and test
//! batteries.

pub mod battery;
pub mod config;
pub mod montecarlo;
pub mod report;

pub use config::{ExperimentConfig, Overrides, OutputConfig, ProblemConfig, ReportFormat};
pub use montecarlo::{run_monte_carlo, McSummary, TrialOutcome};
pub use report::emit_report;
