//! Error metric, parameter sweeps, snapshot comparisons, configuration files
//! and the invariant suite behind `svea validate`.

mod config;
mod sweep;
pub mod validation;

pub use config::{parse_config, ConfigMap, Manifest};
pub use sweep::*;
