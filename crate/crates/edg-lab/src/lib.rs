//! Experiment orchestration for `edg-core`: JSON configs, deterministic runs,
//! parameter sweeps and the acceptance checks.

pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod sweep;
pub mod verify;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{LabError, LabResult};
pub use run::{run_experiment, RunOutcome};
