//! Configuration-driven experiment runner for the highlight pre-caching
//! simulator: loads a TOML experiment, sweeps the service duration, runs
//! every configured strategy and writes CSV/JSON artifacts.

pub mod config;
pub mod error;
pub mod plotdata;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
