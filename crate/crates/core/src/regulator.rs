//! The regulator's full-information benchmark over all limited-liability contracts.

use crate::error::{Error, Result};
use crate::firm::{incentive_rows, ImplementationResult};
use crate::model::{Contract, Params, Technology};
use crate::optim::{solve_lp, Goal, LinearProgram, LpStatus, Sense};

/// Largest expected transfer to the worker that implements `idx` while the firm breaks even.
pub fn max_transfer_implementation(t: &Technology, idx: usize) -> Result<ImplementationResult> {
    if idx >= t.len() {
        return Err(Error::invalid("/action_index", format!("action {idx} out of range")));
    }
    let target = &t.actions()[idx];
    let bounds = t.grid().levels().iter().map(|&y| (0.0, y)).collect();
    let mut lp = LinearProgram::new(target.probs.clone(), bounds);
    incentive_rows(t, idx, &mut lp);
    lp.push(target.probs.clone(), Sense::Le, t.mean(idx) - t.k());
    let sol = solve_lp(&lp, Goal::Maximize)?;
    if sol.status != LpStatus::Optimal {
        return Ok(ImplementationResult::infeasible(idx));
    }
    let w = Contract::new(t.grid().clone(), sol.x)?;
    Ok(ImplementationResult {
        action_index: idx,
        expected_payment: w.expected(target),
        contract: Some(w),
        feasible: true,
    })
}

/// Per-action full-information payoff, `None` when the action cannot be implemented.
pub fn action_values(t: &Technology, p: &Params) -> Result<Vec<Option<f64>>> {
    (0..t.len())
        .map(|idx| {
            let imp = max_transfer_implementation(t, idx)?;
            Ok(imp.feasible.then(|| action_value(t, p, idx, imp.expected_payment)))
        })
        .collect()
}

/// `V(T)`: the best weighted payoff a fully informed regulator can secure, floored at 0.
///
/// An action's payoff is at most `alpha (mean - k - effort)`, which orders and prunes the search.
pub fn full_info_value(t: &Technology, p: &Params) -> Result<f64> {
    let bound = |i: usize| p.alpha() * (t.mean(i) - t.k() - t.actions()[i].effort);
    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by(|&a, &b| bound(b).total_cmp(&bound(a)).then(a.cmp(&b)));
    let mut best = 0.0f64;
    for idx in order {
        if bound(idx) <= best {
            break;
        }
        let imp = max_transfer_implementation(t, idx)?;
        if imp.feasible {
            best = best.max(action_value(t, p, idx, imp.expected_payment));
        }
    }
    Ok(best)
}

fn action_value(t: &Technology, p: &Params, idx: usize, transfer: f64) -> f64 {
    t.mean(idx) - t.k() - transfer + p.alpha() * (transfer - t.actions()[idx].effort)
}
