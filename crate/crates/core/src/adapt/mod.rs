//! Reconstruction-based interpolation error, metric construction and the
//! adaptive driver.

pub mod driver;
pub mod metric;
pub mod reconstruct;

pub use driver::{system_dof, AdaptRecord, Driver, IterLine, RunLog, RunOptions, RunState, StepRecord};
pub use metric::{build_metric, MetricOptions};
pub use reconstruct::{interpolation_error, reconstruct, slab_interpolation_error, LocalPoly, ReconstructedField};
