//! Command-line front end for `ablkit`: scenario files, built-in scenarios
//! and reports.

pub mod builtin;
pub mod commands;
pub mod report;
pub mod scenario;

pub use commands::{CliError, CliResult, Source};
pub use report::{Report, ReportBody};
pub use scenario::{emit_scenario, parse_scenario, Scenario, ScenarioFile};
