//! Nonlinear and linear solvers for the slab systems.

pub mod gmres;
pub mod ilu;
pub mod newton;
pub mod sparse;

pub use newton::{
    constant_guess, extrapolate_guess, newton_solve, semi_implicit_step, IterRecord, NewtonOptions, NewtonReport,
    SlabStep, SolveMode,
};
