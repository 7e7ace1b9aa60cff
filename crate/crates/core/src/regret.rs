//! Regret of a regulation against a technology.

use crate::error::Result;
use crate::firm::worst_case_equilibrium;
use crate::model::{Params, Regulation, Technology};
use crate::regulator::full_info_value;
use serde::Serialize;

/// `V(T)` minus the regulator's payoff at the worst equilibrium, with its components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretReport {
    pub full_info_value: f64,
    pub profit: f64,
    pub worker_surplus: f64,
    pub participated: bool,
    pub action_index: Option<usize>,
    pub regret: f64,
}

pub fn regret(t: &Technology, r: &Regulation, p: &Params) -> Result<RegretReport> {
    let v = full_info_value(t, p)?;
    let eq = worst_case_equilibrium(t, r, p)?;
    Ok(RegretReport {
        full_info_value: v,
        profit: eq.profit,
        worker_surplus: eq.worker_surplus,
        participated: eq.participated,
        action_index: eq.action_index,
        regret: v - (eq.profit + p.alpha() * eq.worker_surplus),
    })
}
