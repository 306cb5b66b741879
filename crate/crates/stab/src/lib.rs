//! Standard-library companion to `stab-core`: SNAP ingestion, the binary
//! graph and oracle formats, JSON/CSV artifacts, thread-pool versions of the
//! heavy steps, and the `stab` command-line tool.

pub mod cli;
pub mod config;
pub mod doc;
pub mod error;
pub mod format;
pub mod parallel;
pub mod report;
pub mod snap;
pub mod stats;

pub use error::{Error, Result};
