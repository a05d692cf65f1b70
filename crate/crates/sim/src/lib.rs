pub mod cli;
pub mod config;
pub mod error;
pub mod reduction;
pub mod snapshot;
pub mod timeseries;

pub use error::{Result, SimError};
