//! Command-line front end for the `cvtele` toolkit: experiment configs,
//! the end-to-end simulation pipeline and the regression table.

pub mod config;
pub mod pipeline;
pub mod reproduce;

pub use config::ExperimentConfig;
pub use pipeline::{run_pipeline, Metrics};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VALIDATION: i32 = 1;
    pub const REGRESSION: i32 = 2;
}
