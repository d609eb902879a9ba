pub mod cases;
pub mod diagnostics;
pub mod studies;

pub use cases::{make_case, CaseSpec, Perturbation, Quantity, CASE_NAMES};
pub use diagnostics::{line_profile, theta_perturbation_range, RunSummary};
