//! Data ingestion, configuration and the command pipeline behind the binary.

pub mod config;
pub mod export;
pub mod ingest;
pub mod pipeline;
pub mod transform;

pub use config::RunConfig;
pub use pipeline::{estimate_panel, run_fit, run_irf, run_simulate, run_test, run_transform, Estimation};
