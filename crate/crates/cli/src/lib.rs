//! Scenario runner behind the `lightcone` binary: JSON configs in, CSV and
//! JSON reports out.

pub mod config;
pub mod report;
pub mod scenario;

pub use config::{load_config, parse_config, ScenarioConfig};
pub use report::{emit_report, Format, Report, Row};
pub use scenario::{run_scenario, Subcommand};
