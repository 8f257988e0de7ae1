//! Experiment orchestration: scenario configs, sweeps, rate fits and CSV reports.

mod config;
mod rate;
mod report;
mod scenarios;

pub use config::{ExperimentConfig, Preset, ScenarioKind, Sweep, SweepParam, CALIBRATION_BASELINE, SCENARIOS};
pub use rate::{fit_rate, RateFit};
pub use report::{emit_report, ReportTable, Value};
pub use scenarios::{run_experiment, run_experiments, ExperimentReport, ADMISSIBILITY_DELTA, BUDGET_COLUMNS};
