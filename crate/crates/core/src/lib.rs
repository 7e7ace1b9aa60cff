//! Worst-case regret of contract regulation under moral hazard.
//!
//! A firm hires a worker whose effort is hidden; a regulator restricts the contracts the
//! firm may offer without knowing the production technology. This crate computes the
//! firm's and the fully informed regulator's programs, the resulting regret, adversarial
//! technologies, and the minmax-regret minimum piece rate.

// Negated float comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod adversary;
pub mod analysis;
pub mod bench;
pub mod error;
pub mod firm;
pub mod io;
pub mod minmax;
pub mod model;
pub mod optim;
pub mod regret;
pub mod regulator;

pub use error::{Error, Result};
pub use model::{Action, Contract, EquilibriumOutcome, OutputGrid, Params, Regulation, Technology, EPS_TOL};
