//! File formats, run orchestration and the command line for `simple-pinn-core`.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod evaluate;
pub mod export;
pub mod reference;
pub mod run;

pub use error::{CliError, Result};
