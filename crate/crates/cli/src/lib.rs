//! Experiment harness for the MSD boundary condition: configurable runs of
//! dark solitons, vortices and vortex rings that write CSV tables, PGM
//! snapshots and a reproducibility manifest.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{BcKind, Experiment, ExperimentConfig, TimeStep};
pub use experiments::{run, Report, RunSummary};
