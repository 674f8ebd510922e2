//! Sweeps, persistence and classical pipelines on top of `pendulum-core`.

pub mod config;
pub mod persist;
pub mod pipeline;
pub mod sweep;

pub use pendulum_core as core;
