//! File formats, checkpoints, configuration and parallel drivers around
//! [`skyforge_core`], plus the `skyforge` command line.

pub mod catalog_io;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod fsutil;
pub mod manifest;
pub mod parallel;
pub mod reference;
pub mod report;
pub mod tokens;

pub use error::{Category, Error, Result};
pub use skyforge_core as core;
