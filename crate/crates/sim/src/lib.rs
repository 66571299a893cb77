//! Scenario engine, metrics, traces and sweeps for the predictive status
//! update protocol.

pub mod acceptance;
pub mod aoi;
pub mod config;
pub mod engine;
pub mod scenario;
pub mod summary;
pub mod sweep;
pub mod trace;

pub use config::{ConfigError, Mode, ScenarioConfig, ScenarioKind};
pub use engine::{run, run_baseline, Engine, EngineError, Link};
pub use summary::{RunMeta, RunSummary};
