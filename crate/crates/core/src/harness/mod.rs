//! Error metrics, evaluation datasets, experiment configuration and the
//! command implementations behind the `siacnn` binary.

mod commands;
mod config;
mod evaluate;
mod metrics;

pub use commands::*;
pub use config::{init_threads, ExperimentConfig, Overrides, Preset, ENV_OUT_DIR, ENV_THREADS, MAX_SEED};
pub use evaluate::*;
pub use metrics::{grid_errors, quartiles};
