//! Scenario runner: a JSON config in, a run report with checks, CSV tables and kernel dumps out.

pub mod config;
pub mod model;
pub mod pipeline;
pub mod report;

pub use config::{load, parse, ConfigError, ScenarioConfig};
pub use pipeline::{run, RunOptions};
pub use report::{RunReport, Sink};
