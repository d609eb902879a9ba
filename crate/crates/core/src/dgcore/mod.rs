pub mod assembly;
pub mod basis;
pub mod field;
pub mod flux;
pub mod quadrature;
pub mod space;

pub use assembly::{FarField, Operator, Problem, TestSpace, TimeRule};
pub use field::{SlabSolution, SpatialField};
pub use flux::FluxKind;
pub use space::DgSpace;
