//! Scenario files, built-in examples, experiment runs and reports.

pub mod builtins;
pub mod run;
pub mod scenario;

pub use builtins::{builtin, scenario_text, Builtin, BUILTINS};
pub use run::{
    apply_overrides, run, Provenance, ReduceReport, ReportBody, ReportBundle, RunOptions, EXIT_BOUND_VIOLATION,
    EXIT_INFRASTRUCTURE, EXIT_OK,
};
pub use scenario::{parse_scenario, Experiment, ExperimentParams, GroupSpec, Scenario, ScenarioError, System};
