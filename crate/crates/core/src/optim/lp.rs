//! Dense linear programming.
//!
//! Programs here have few variables (one per grid level) and many rows (one per
//! competing action). The solver therefore works on the dual: the primal
//! `min c.x  s.t.  G x >= h` (bounds folded into `G`, `x` free) becomes the
//! standard-form program `min -h.y  s.t.  G^T y = c, y >= 0`, whose tableau has
//! one row per primal variable. The primal solution is read off the simplex
//! multipliers of the final basis.
//!
//! Pricing is Dantzig's most-negative reduced cost with lowest-index ties; after a
//! run of degenerate pivots it falls back to Bland's rule, which cannot cycle.
//! Both rules are deterministic.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Goal {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, sense: Sense, rhs: f64) -> Self {
        Constraint { coeffs, sense, rhs }
    }
}

/// `objective . x` subject to `constraints` and per-variable `bounds` (infinite ends allowed).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; empty unless `status` is `Optimal`.
    pub x: Vec<f64>,
    pub value: f64,
}

impl LpSolution {
    fn status(status: LpStatus) -> Self {
        LpSolution { status, x: Vec::new(), value: f64::NAN }
    }
}

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots tolerated before pricing falls back to Bland's rule.
const BLAND_AFTER: usize = 20;

impl LinearProgram {
    pub fn new(objective: Vec<f64>, bounds: Vec<(f64, f64)>) -> Self {
        LinearProgram { objective, constraints: Vec::new(), bounds }
    }

    pub fn push(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint::new(coeffs, sense, rhs));
    }

    fn check(&self) -> Result<()> {
        let n = self.objective.len();
        if self.bounds.len() != n {
            return Err(Error::invalid("/bounds", "one bound pair per variable required"));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("/objective", "objective coefficients must be finite"));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::invalid(format!("/bounds/{j}"), "bounds must satisfy lo <= hi"));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::invalid(format!("/constraints/{i}"), "row length differs from variable count"));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(Error::invalid(format!("/constraints/{i}"), "row entries must be finite"));
            }
        }
        Ok(())
    }
}

/// Solves `lp`. Infeasibility and unboundedness are statuses; malformed input is an error.
pub fn solve_lp(lp: &LinearProgram, goal: Goal) -> Result<LpSolution> {
    lp.check()?;
    let n = lp.objective.len();
    let sign = match goal {
        Goal::Minimize => 1.0,
        Goal::Maximize => -1.0,
    };

    // Substitute fixed variables.
    let free: Vec<usize> = (0..n).filter(|&j| lp.bounds[j].0 != lp.bounds[j].1).collect();
    let mut x_full: Vec<f64> = lp.bounds.iter().map(|b| if b.0 == b.1 { b.0 } else { 0.0 }).collect();
    let c: Vec<f64> = free.iter().map(|&j| sign * lp.objective[j]).collect();

    // Inequalities g.x >= h over the free variables, stored row-major.
    let nf = free.len();
    let fixed: Vec<usize> = (0..n).filter(|&j| lp.bounds[j].0 == lp.bounds[j].1).collect();
    let mut g: Vec<f64> = Vec::with_capacity((2 * lp.constraints.len() + 2 * nf) * nf);
    let mut h: Vec<f64> = Vec::with_capacity(2 * lp.constraints.len() + 2 * nf);
    for row in &lp.constraints {
        let b = row.rhs - fixed.iter().map(|&j| row.coeffs[j] * x_full[j]).sum::<f64>();
        if matches!(row.sense, Sense::Ge | Sense::Eq) {
            g.extend(free.iter().map(|&j| row.coeffs[j]));
            h.push(b);
        }
        if matches!(row.sense, Sense::Le | Sense::Eq) {
            g.extend(free.iter().map(|&j| -row.coeffs[j]));
            h.push(-b);
        }
    }
    for (jj, &j) in free.iter().enumerate() {
        let (lo, hi) = lp.bounds[j];
        for (finite, sign, v) in [(lo.is_finite(), 1.0, lo), (hi.is_finite(), -1.0, -hi)] {
            if finite {
                g.extend((0..nf).map(|i| if i == jj { sign } else { 0.0 }));
                h.push(v);
            }
        }
    }

    let finish = |x_full: Vec<f64>| {
        let value = lp.objective.iter().zip(&x_full).map(|(a, b)| a * b).sum();
        LpSolution { status: LpStatus::Optimal, x: x_full, value }
    };

    if free.is_empty() {
        let scale = h.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        return Ok(if h.iter().all(|&v| v <= FEAS_TOL * scale) {
            finish(x_full)
        } else {
            LpSolution::status(LpStatus::Infeasible)
        });
    }

    match dual_simplex_solve(&g, &h, &c)? {
        DualOutcome::Optimal(x) => {
            for (jj, &j) in free.iter().enumerate() {
                let (lo, hi) = lp.bounds[j];
                x_full[j] = x[jj].clamp(lo, hi);
            }
            Ok(finish(x_full))
        }
        DualOutcome::PrimalInfeasible => Ok(LpSolution::status(LpStatus::Infeasible)),
        DualOutcome::DualInfeasible => {
            let zero = vec![0.0; c.len()];
            Ok(match dual_simplex_solve(&g, &h, &zero)? {
                DualOutcome::Optimal(_) => LpSolution::status(LpStatus::Unbounded),
                _ => LpSolution::status(LpStatus::Infeasible),
            })
        }
    }
}

enum DualOutcome {
    Optimal(Vec<f64>),
    PrimalInfeasible,
    DualInfeasible,
}

/// Solves `min c.x s.t. G x >= h` through `min -h.y s.t. G^T y = c, y >= 0`.
/// `g` holds the rows of `G` back to back.
fn dual_simplex_solve(g: &[f64], h: &[f64], c: &[f64]) -> Result<DualOutcome> {
    let n = c.len();
    let m = h.len();
    let width = m + n + 1;
    let rhs_col = m + n;

    let mut flip = vec![1.0; n];
    let mut tab = vec![vec![0.0; width]; n];
    for i in 0..n {
        if c[i] < 0.0 {
            flip[i] = -1.0;
        }
        for j in 0..m {
            tab[i][j] = flip[i] * g[j * n + i];
        }
        tab[i][m + i] = 1.0;
        tab[i][rhs_col] = flip[i] * c[i];
    }
    let mut basis: Vec<usize> = (m..m + n).collect();

    let c_scale = c.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let h_scale = h.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let max_iter = 200 * (m + n) + 1000;

    // Phase 1: drive the artificials to zero.
    let mut obj = vec![0.0; width];
    for row in &tab {
        for j in 0..m {
            obj[j] -= row[j];
        }
        obj[rhs_col] -= row[rhs_col];
    }
    if let Phase::Unbounded = run_phase(&mut tab, &mut obj, &mut basis, m, PIVOT_TOL, max_iter)? {
        return Err(Error::Numerical("phase one reported an unbounded direction".into()));
    }
    let infeasibility: f64 = basis
        .iter()
        .zip(&tab)
        .filter(|(&b, _)| b >= m)
        .map(|(_, row)| row[rhs_col])
        .sum();
    if infeasibility > FEAS_TOL * c_scale {
        return Ok(DualOutcome::DualInfeasible);
    }
    for r in 0..n {
        if basis[r] < m {
            continue;
        }
        let best = (0..m)
            .filter(|&j| tab[r][j].abs() > 1e-9)
            .max_by(|&a, &b| tab[r][a].abs().total_cmp(&tab[r][b].abs()));
        if let Some(j) = best {
            pivot(&mut tab, &mut obj, &mut basis, r, j);
        }
    }

    // Phase 2: minimize -h.y.
    let mut obj = vec![0.0; width];
    for j in 0..m {
        obj[j] = -h[j];
    }
    for (r, &b) in basis.iter().enumerate() {
        let cb = if b < m { -h[b] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..width {
                obj[j] -= cb * tab[r][j];
            }
        }
    }
    match run_phase(&mut tab, &mut obj, &mut basis, m, PIVOT_TOL * h_scale, max_iter)? {
        Phase::Unbounded => Ok(DualOutcome::PrimalInfeasible),
        Phase::Optimal => {
            // Reduced cost of artificial column i equals -pi_i; x = -flip * pi.
            let x = (0..n).map(|i| flip[i] * obj[m + i]).collect();
            Ok(DualOutcome::Optimal(x))
        }
    }
}

enum Phase {
    Optimal,
    Unbounded,
}

fn run_phase(
    tab: &mut [Vec<f64>],
    obj: &mut [f64],
    basis: &mut [usize],
    enter_limit: usize,
    rc_tol: f64,
    max_iter: usize,
) -> Result<Phase> {
    let rhs_col = obj.len() - 1;
    let mut degenerate_run = 0usize;
    for _ in 0..max_iter {
        // Dantzig pricing, switching to Bland's rule once pivots stall.
        let enter = if degenerate_run < BLAND_AFTER {
            (0..enter_limit)
                .filter(|&j| obj[j] < -rc_tol)
                .min_by(|&a, &b| obj[a].total_cmp(&obj[b]).then(a.cmp(&b)))
        } else {
            (0..enter_limit).find(|&j| obj[j] < -rc_tol)
        };
        let Some(enter) = enter else {
            return Ok(Phase::Optimal);
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..tab.len() {
            let a = tab[r][enter];
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = tab[r][rhs_col].max(0.0) / a;
            leave = match leave {
                None => Some((r, ratio)),
                Some((lr, lratio)) => {
                    let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                    if ratio < lratio && !tie || tie && basis[r] < basis[lr] {
                        Some((r, ratio))
                    } else {
                        Some((lr, lratio))
                    }
                }
            };
        }
        let Some((r, ratio)) = leave else {
            return Ok(Phase::Unbounded);
        };
        degenerate_run = if ratio <= 1e-14 { degenerate_run + 1 } else { 0 };
        pivot(tab, obj, basis, r, enter);
    }
    Err(Error::Numerical("simplex iteration limit reached".into()))
}

fn pivot(tab: &mut [Vec<f64>], obj: &mut [f64], basis: &mut [usize], r: usize, j: usize) {
    let p = tab[r][j];
    for v in tab[r].iter_mut() {
        *v /= p;
    }
    let prow = tab[r].clone();
    for (i, row) in tab.iter_mut().enumerate() {
        if i == r {
            continue;
        }
        let f = row[j];
        if f != 0.0 {
            for (v, pv) in row.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            row[j] = 0.0;
        }
    }
    let f = obj[j];
    if f != 0.0 {
        for (v, pv) in obj.iter_mut().zip(&prow) {
            *v -= f * pv;
        }
        obj[j] = 0.0;
    }
    basis[r] = j;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn opt(lp: &LinearProgram, goal: Goal) -> LpSolution {
        solve_lp(lp, goal).unwrap()
    }

    #[test]
    fn spec_examples() {
        let mut lp = LinearProgram::new(vec![1.0], vec![(0.0, f64::INFINITY)]);
        lp.push(vec![1.0], Sense::Le, 1.0);
        let s = opt(&lp, Goal::Maximize);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 1.0).abs() < 1e-12);

        let mut lp = LinearProgram::new(vec![1.0], vec![(f64::NEG_INFINITY, f64::INFINITY)]);
        lp.push(vec![1.0], Sense::Ge, 0.4);
        lp.push(vec![1.0], Sense::Le, 1.0);
        assert!((opt(&lp, Goal::Minimize).value - 0.4).abs() < 1e-12);

        let mut lp = LinearProgram::new(vec![0.5], vec![(0.0, 1.0)]);
        lp.push(vec![0.5], Sense::Ge, 0.2);
        let s = opt(&lp, Goal::Maximize);
        assert!((s.value - 0.5).abs() < 1e-12 && (s.x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn statuses() {
        let mut lp = LinearProgram::new(vec![1.0], vec![(0.0, 1.0)]);
        lp.push(vec![1.0], Sense::Ge, 2.0);
        assert_eq!(opt(&lp, Goal::Minimize).status, LpStatus::Infeasible);

        let lp = LinearProgram::new(vec![1.0, 1.0], vec![(0.0, f64::INFINITY); 2]);
        assert_eq!(opt(&lp, Goal::Maximize).status, LpStatus::Unbounded);
        assert_eq!(opt(&lp, Goal::Minimize).value, 0.0);

        let mut lp = LinearProgram::new(vec![1.0], vec![(f64::NEG_INFINITY, f64::INFINITY)]);
        lp.push(vec![1.0], Sense::Ge, 1.0);
        lp.push(vec![1.0], Sense::Le, 0.0);
        assert_eq!(opt(&lp, Goal::Maximize).status, LpStatus::Infeasible);
    }

    #[test]
    fn fixed_variables_and_equalities() {
        let mut lp = LinearProgram::new(vec![1.0, 2.0, 3.0], vec![(0.0, 0.0), (0.0, 5.0), (0.0, 5.0)]);
        lp.push(vec![7.0, 1.0, 1.0], Sense::Eq, 4.0);
        let s = opt(&lp, Goal::Minimize);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 8.0).abs() < 1e-12);
        assert_eq!(s.x[0], 0.0);
    }

    #[test]
    fn redundant_and_degenerate_rows() {
        // x1 and x2 only appear through their sum.
        let mut lp = LinearProgram::new(vec![1.0, 1.0], vec![(f64::NEG_INFINITY, f64::INFINITY); 2]);
        lp.push(vec![1.0, 1.0], Sense::Ge, 1.0);
        lp.push(vec![2.0, 2.0], Sense::Ge, 2.0);
        lp.push(vec![1.0, 1.0], Sense::Ge, 1.0);
        let s = opt(&lp, Goal::Minimize);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 1.0).abs() < 1e-12);
        assert!((s.x[0] + s.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn malformed_input_is_an_error() {
        let lp = LinearProgram::new(vec![1.0], vec![(1.0, 0.0)]);
        assert!(solve_lp(&lp, Goal::Minimize).is_err());
        let mut lp = LinearProgram::new(vec![1.0], vec![(0.0, 1.0)]);
        lp.push(vec![1.0, 2.0], Sense::Ge, 0.0);
        assert!(solve_lp(&lp, Goal::Minimize).is_err());
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut lp = LinearProgram::new((0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(), vec![(-2.0, 2.0); 3]);
            for _ in 0..5 {
                lp.push((0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(), Sense::Le, rng.gen_range(0.0..1.0));
            }
            assert_eq!(opt(&lp, Goal::Minimize), opt(&lp, Goal::Minimize));
        }
    }
}
