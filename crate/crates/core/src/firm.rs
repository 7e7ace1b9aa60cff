//! The firm's problem: cheapest implementation of each action under a regulation,
//! profit maximization, and the regulator-adversarial equilibrium selection.

use crate::error::{Error, Result};
use crate::model::{dot, Contract, ContractSpace, EquilibriumOutcome, Params, Regulation, Technology, EPS_TOL};
use crate::optim::{solve_lp, Goal, LinearProgram, LpStatus, Sense};
use serde::Serialize;

/// Cheapest admissible contract implementing one action, if any.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImplementationResult {
    pub action_index: usize,
    pub contract: Option<Contract>,
    pub expected_payment: f64,
    pub feasible: bool,
}

impl ImplementationResult {
    pub(crate) fn infeasible(idx: usize) -> Self {
        ImplementationResult {
            action_index: idx,
            contract: None,
            expected_payment: f64::NAN,
            feasible: false,
        }
    }
}

/// The worker's best surplus under `w` and every action attaining it within `EPS_TOL`.
pub fn worker_best_actions(w: &Contract, t: &Technology) -> Result<(f64, Vec<usize>)> {
    if w.grid() != t.grid() {
        return Err(Error::invalid("/contract", "contract and technology use different grids"));
    }
    let surplus: Vec<f64> = t.actions().iter().map(|a| w.expected(a) - a.effort).collect();
    let best = surplus.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let idx = (0..surplus.len()).filter(|&i| surplus[i] >= best - EPS_TOL).collect();
    Ok((best, idx))
}

/// Incentive and participation rows for implementing `idx`: one row per competitor, then IR.
pub(crate) fn incentive_rows(t: &Technology, idx: usize, lp: &mut LinearProgram) {
    let target = &t.actions()[idx];
    for (j, other) in t.actions().iter().enumerate() {
        if j == idx {
            continue;
        }
        let coeffs = target.probs.iter().zip(&other.probs).map(|(a, b)| a - b).collect();
        lp.push(coeffs, Sense::Ge, target.effort - other.effort);
    }
    lp.push(target.probs.clone(), Sense::Ge, target.effort);
}

/// Minimizes the expected payment of contracts in `r` that make `idx` incentive compatible
/// and individually rational.
pub fn min_cost_implementation(t: &Technology, r: &Regulation, idx: usize) -> Result<ImplementationResult> {
    if idx >= t.len() {
        return Err(Error::invalid("/action_index", format!("action {idx} out of range")));
    }
    match r.contract_space(t.grid())? {
        ContractSpace::Slopes(slopes) => Ok(cheapest_slope(t, &slopes, idx)),
        ContractSpace::Boxes(boxes) => cheapest_in_boxes(t, &boxes, idx),
    }
}

fn cheapest_slope(t: &Technology, slopes: &[f64], idx: usize) -> ImplementationResult {
    let mut sorted = slopes.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut best = ImplementationResult::infeasible(idx);
    for s in sorted {
        let w = Contract::linear(t.grid(), s).expect("validated slope");
        let (surplus, set) = worker_best_actions(&w, t).expect("same grid");
        if !set.contains(&idx) || surplus < -EPS_TOL {
            continue;
        }
        let pay = s * t.mean(idx);
        if !best.feasible || pay < best.expected_payment {
            best = ImplementationResult {
                action_index: idx,
                contract: Some(w),
                expected_payment: pay,
                feasible: true,
            };
        }
    }
    best
}

fn cheapest_in_boxes(t: &Technology, boxes: &[Vec<(f64, f64)>], idx: usize) -> Result<ImplementationResult> {
    if boxes.iter().any(|b| b.is_empty()) {
        return Ok(ImplementationResult::infeasible(idx));
    }
    let combos: usize = boxes.iter().map(|b| b.len()).product();
    if combos > 1 && t.grid().len() > 3 {
        return Err(Error::Unsupported(
            "interval unions are only solved exactly on grids with at most 3 levels".into(),
        ));
    }
    let target = &t.actions()[idx];
    let mut best = ImplementationResult::infeasible(idx);
    let mut choice = vec![0usize; boxes.len()];
    for _ in 0..combos {
        let bounds: Vec<(f64, f64)> = boxes.iter().zip(&choice).map(|(b, &c)| b[c]).collect();
        let mut lp = LinearProgram::new(target.probs.clone(), bounds);
        incentive_rows(t, idx, &mut lp);
        let sol = solve_lp(&lp, Goal::Minimize)?;
        if sol.status == LpStatus::Optimal && (!best.feasible || sol.value < best.expected_payment) {
            let w = Contract::new(t.grid().clone(), sol.x)?;
            best = ImplementationResult {
                action_index: idx,
                expected_payment: w.expected(target),
                contract: Some(w),
                feasible: true,
            };
        }
        for (c, b) in choice.iter_mut().zip(boxes) {
            *c += 1;
            if *c < b.len() {
                break;
            }
            *c = 0;
        }
    }
    Ok(best)
}

struct Candidate {
    idx: usize,
    contract: Contract,
    profit: f64,
    surplus: f64,
}

/// Every implementable action whose profit can come within `EPS_TOL` of the best one.
///
/// Profit is at most `mean - k - effort` (participation), so actions are visited in
/// decreasing order of that bound and skipped once it falls below the running maximum.
fn implementable(t: &Technology, r: &Regulation) -> Result<Vec<Candidate>> {
    let bound = |i: usize| t.mean(i) - t.k() - t.actions()[i].effort;
    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by(|&a, &b| bound(b).total_cmp(&bound(a)).then(a.cmp(&b)));
    let mut out = Vec::with_capacity(t.len());
    let mut top = f64::NEG_INFINITY;
    for idx in order {
        if bound(idx) < top - EPS_TOL {
            break;
        }
        let imp = min_cost_implementation(t, r, idx)?;
        if let (true, Some(w)) = (imp.feasible, imp.contract) {
            let profit = t.mean(idx) - t.k() - imp.expected_payment;
            top = top.max(profit);
            out.push(Candidate {
                idx,
                profit,
                surplus: imp.expected_payment - t.actions()[idx].effort,
                contract: w,
            });
        }
    }
    out.sort_by_key(|c| c.idx);
    Ok(out)
}

fn outcome(c: Candidate) -> EquilibriumOutcome {
    EquilibriumOutcome {
        participated: true,
        contract: Some(c.contract),
        action_index: Some(c.idx),
        profit: c.profit,
        worker_surplus: c.surplus,
    }
}

/// Profit-maximizing contract and action; the firm exits when no action earns more than `EPS_TOL`.
pub fn firm_best_response(t: &Technology, r: &Regulation) -> Result<EquilibriumOutcome> {
    let best = implementable(t, r)?
        .into_iter()
        .fold(None::<Candidate>, |acc, c| match acc {
            Some(a) if a.profit >= c.profit => Some(a),
            _ => Some(c),
        });
    Ok(match best {
        Some(c) if c.profit > EPS_TOL => outcome(c),
        _ => EquilibriumOutcome::exit(),
    })
}

/// Among profit-maximal pairs (within `EPS_TOL`), the one minimizing `profit + alpha * surplus`.
pub fn worst_case_equilibrium(t: &Technology, r: &Regulation, p: &Params) -> Result<EquilibriumOutcome> {
    let cands = implementable(t, r)?;
    let top = cands.iter().map(|c| c.profit).fold(f64::NEG_INFINITY, f64::max);
    if !(top > EPS_TOL) {
        return Ok(EquilibriumOutcome::exit());
    }
    let payoff = |c: &Candidate| c.profit + p.alpha() * c.surplus;
    let chosen = cands
        .into_iter()
        .filter(|c| c.profit >= top - EPS_TOL)
        .fold(None::<Candidate>, |acc, c| match acc {
            Some(a) if payoff(&a) <= payoff(&c) => Some(a),
            _ => Some(c),
        })
        .expect("at least one candidate attains the maximum");
    Ok(outcome(chosen))
}

/// Re-checks incentive compatibility, participation, limited liability and membership.
pub fn verify_implementation(t: &Technology, r: &Regulation, imp: &ImplementationResult, tol: f64) -> bool {
    let Some(w) = &imp.contract else {
        return !imp.feasible;
    };
    let a = &t.actions()[imp.action_index];
    let own = dot(w.payments(), &a.probs) - a.effort;
    own >= -tol
        && t.actions().iter().all(|b| own >= dot(w.payments(), &b.probs) - b.effort - tol)
        && w.payments().iter().zip(t.grid().levels()).all(|(&v, &y)| v >= -tol && v <= y + tol)
        && r.contract_allowed(w, tol)
}
