//! Optimization kernels shared by the solvers.

pub mod lp;
pub mod scalar;

pub use lp::{solve_lp, Constraint, Goal, LinearProgram, LpSolution, LpStatus, Sense};
pub use scalar::{maximize_1d, minimize_1d};
