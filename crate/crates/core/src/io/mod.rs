//! Configuration, field output, logs and checkpoints.

pub mod checkpoint;
pub mod config;
pub mod csv;
pub mod vtu;

pub use checkpoint::{Checkpoint, SCHEMA_VERSION};
pub use config::RunConfig;
