//! Reproducible experiment runner around `collapse-core`.
//!
//! Configuration comes from a TOML file and/or command-line flags;
//! experiments are trait objects resolved by name through
//! [`registry::ExperimentRegistry`]. Every stochastic output is fully
//! determined by `(config, seed)` regardless of thread count.

pub mod config;
pub mod experiments;
pub mod export;
pub mod histogram;
pub mod manifest;
pub mod registry;
