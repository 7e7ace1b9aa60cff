//! Reference computations that share no code with the solvers they check.

use crate::optim::lp::{Goal, LinearProgram, LpStatus, Sense};

/// Cheapest implementation of action `idx` on a binary technology with outputs `{0, top}`.
///
/// Limited liability pins `w(0) = 0`, so a contract is a slope `s` in `[floor, 1]` and the
/// incentive constraints are one-dimensional: `s (mu_i - mu_j) >= e_i - e_j`. Returns the
/// expected payment `s * mu_i`, or `None` when no slope works.
pub fn binary_min_cost(means: &[f64], efforts: &[f64], floor: f64, idx: usize) -> Option<f64> {
    let (mi, ei) = (means[idx], efforts[idx]);
    let mut lo = floor;
    let mut hi = 1.0f64;
    if mi > 0.0 {
        lo = lo.max(ei / mi);
    } else if ei > 0.0 {
        return None;
    }
    for (j, (&mj, &ej)) in means.iter().zip(efforts).enumerate() {
        if j == idx {
            continue;
        }
        let dm = mi - mj;
        let de = ei - ej;
        if dm > 0.0 {
            lo = lo.max(de / dm);
        } else if dm < 0.0 {
            hi = hi.min(de / dm);
        } else if de > 0.0 {
            return None;
        }
    }
    (lo <= hi).then_some(lo * mi)
}

/// Slack by which the slope interval of [`binary_min_cost`] is nonempty (negative when empty).
/// Used to skip instances sitting on a feasibility knife edge.
pub fn binary_slope_slack(means: &[f64], efforts: &[f64], floor: f64, idx: usize) -> f64 {
    let (mi, ei) = (means[idx], efforts[idx]);
    let mut lo = floor;
    let mut hi = 1.0f64;
    if mi > 0.0 {
        lo = lo.max(ei / mi);
    }
    for (j, (&mj, &ej)) in means.iter().zip(efforts).enumerate() {
        let dm = mi - mj;
        if j == idx || dm == 0.0 {
            continue;
        }
        let r = (ei - ej) / dm;
        if dm > 0.0 {
            lo = lo.max(r);
        } else {
            hi = hi.min(r);
        }
    }
    hi - lo
}

/// Outcome of brute-force vertex enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VertexOutcome {
    Optimal(f64),
    Infeasible,
}

/// Optimum of a bounded LP by enumerating every basic solution.
///
/// All bounds must be finite. Each choice of `n` tight hyperplanes among the constraint rows
/// and bound faces is solved by Gaussian elimination and kept if feasible within `tol`.
pub fn vertex_enumeration(lp: &LinearProgram, goal: Goal, tol: f64) -> VertexOutcome {
    let n = lp.objective.len();
    let mut planes: Vec<(Vec<f64>, f64)> = lp.constraints.iter().map(|c| (c.coeffs.clone(), c.rhs)).collect();
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        assert!(lo.is_finite() && hi.is_finite(), "vertex enumeration needs finite bounds");
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lo));
        planes.push((e, hi));
    }
    let feasible = |x: &[f64]| {
        lp.bounds.iter().zip(x).all(|(&(lo, hi), &v)| v >= lo - tol && v <= hi + tol)
            && lp.constraints.iter().all(|c| {
                let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
                match c.sense {
                    Sense::Le => lhs <= c.rhs + tol,
                    Sense::Ge => lhs >= c.rhs - tol,
                    Sense::Eq => (lhs - c.rhs).abs() <= tol,
                }
            })
    };
    let mut best: Option<f64> = None;
    for combo in combinations(planes.len(), n) {
        let rows: Vec<&(Vec<f64>, f64)> = combo.iter().map(|&i| &planes[i]).collect();
        let Some(x) = solve_square(&rows) else { continue };
        if !feasible(&x) {
            continue;
        }
        let v: f64 = lp.objective.iter().zip(&x).map(|(a, b)| a * b).sum();
        best = Some(match (best, goal) {
            (None, _) => v,
            (Some(b), Goal::Minimize) => b.min(v),
            (Some(b), Goal::Maximize) => b.max(v),
        });
    }
    best.map_or(VertexOutcome::Infeasible, VertexOutcome::Optimal)
}

/// Maps a solver status onto the oracle's two outcomes; bounded programs are never unbounded.
pub fn same_outcome(status: LpStatus, value: f64, oracle: VertexOutcome, tol: f64) -> bool {
    match (status, oracle) {
        (LpStatus::Optimal, VertexOutcome::Optimal(v)) => (value - v).abs() <= tol * v.abs().max(1.0),
        (LpStatus::Infeasible, VertexOutcome::Infeasible) => true,
        _ => false,
    }
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Gaussian elimination with partial pivoting; `None` for (near) singular systems.
fn solve_square(rows: &[&(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let n = rows.len();
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .map(|(c, b)| {
            let mut r = c.clone();
            r.push(*b);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        let pivot = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col {
                let f = row[col] / pivot[col];
                for (x, &y) in row.iter_mut().zip(&pivot).skip(col) {
                    *x -= f * y;
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_oracle_examples() {
        // Two actions (e=0, mu=0.5) and (e=0.2, mu=1): implementing the second needs slope 0.4.
        let (m, e) = ([0.5, 1.0], [0.0, 0.2]);
        assert!((binary_min_cost(&m, &e, 0.0, 1).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(binary_min_cost(&m, &e, 0.0, 0), Some(0.0));
        assert_eq!(binary_min_cost(&m, &e, 0.5, 0), None);
        assert_eq!(binary_min_cost(&[0.0], &[0.1], 0.0, 0), None);
    }

    #[test]
    fn vertex_enumeration_examples() {
        // max x + y on the unit box cut by x + y <= 1.5
        let mut lp = LinearProgram::new(vec![1.0, 1.0], vec![(0.0, 1.0), (0.0, 1.0)]);
        lp.push(vec![1.0, 1.0], Sense::Le, 1.5);
        assert_eq!(vertex_enumeration(&lp, Goal::Maximize, 1e-12), VertexOutcome::Optimal(1.5));
        lp.push(vec![1.0, 0.0], Sense::Ge, 2.0);
        assert_eq!(vertex_enumeration(&lp, Goal::Maximize, 1e-12), VertexOutcome::Infeasible);
    }
}
