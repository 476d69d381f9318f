//! Configuration-driven experiments and self-verification for `dcw-core`.

pub mod config;
pub mod run;
pub mod verify;

pub use config::{ExperimentConfig, ExperimentKind, ValidationError};
pub use run::{run_experiment, Format, RunOptions, RunRecord};
pub use verify::{verify_suite, verify_suite_with, Level, Mutation};
