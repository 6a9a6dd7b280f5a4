//! Files, experiment drivers, and the command line around `homeostat-core`.

pub mod checkpoint;
pub mod config_file;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod run_dir;

pub use error::{LabError, Result};
