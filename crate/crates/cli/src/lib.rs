//! Batch experiment runner for the environmental-asset game: config
//! ingestion, scenario orchestration, and deterministic artifact emission.

pub mod config;
pub mod error;
pub mod report;
pub mod scenario;
pub mod spill;

pub use config::{load_config, parse_config, LoadedConfig, ScenarioConfig, ScenarioKind};
pub use error::{CliError, EXIT_CHECK_FAILED};
pub use scenario::{run_scenario, RunOutcome};
