//! Command-line driver for `blochpack-core`: JSON configuration, CSV and
//! JSON outputs with run manifests, and rayon parallelism.

pub mod cli;
pub mod commands;
pub mod config;
pub mod output;
pub mod sampled;
pub mod verify;

pub use blochpack_core as core;
