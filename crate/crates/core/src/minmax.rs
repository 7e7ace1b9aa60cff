//! Branch formulas of the worst-case regret of minimum piece rates, the minmax piece rate,
//! its variant under quantitative knowledge, and technology-class validators.

use crate::error::{Error, Result};
use crate::model::{Action, Params, Technology};
use crate::optim::{maximize_1d, minimize_1d};
use serde::Serialize;

const ORDER_TOL: f64 = 1e-12;

fn check_slope(ell: f64, open_top: bool) -> Result<()> {
    let ok = ell.is_finite() && ell >= 0.0 && if open_top { ell < 1.0 } else { ell <= 1.0 };
    if ok {
        Ok(())
    } else {
        let range = if open_top { "[0, 1)" } else { "[0, 1]" };
        Err(Error::invalid("/ell", format!("slope {ell} outside {range}")))
    }
}

/// Regret of the no-production family against `MPR(ell)`: `alpha e^{(2l-1)/(1-l)} (1-l) ybar`.
pub fn branch_no_production(ell: f64, p: &Params) -> Result<f64> {
    check_slope(ell, true)?;
    Ok(p.alpha() * ((2.0 * ell - 1.0) / (1.0 - ell)).exp() * (1.0 - ell) * p.ybar())
}

/// Regret of the surplus-extraction family against `MPR(ell)`: `alpha e^{-1/alpha} (1-l) ybar`.
pub fn branch_extraction(ell: f64, p: &Params) -> Result<f64> {
    check_slope(ell, false)?;
    Ok(p.alpha() * (-1.0 / p.alpha()).exp() * (1.0 - ell) * p.ybar())
}

/// A minmax piece rate with its worst-case regret and the branch values there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinmaxResult {
    pub ell_star: f64,
    pub rbar: f64,
    pub branch_no_production: f64,
    pub branch_extraction: f64,
    /// Regret of a single sure action priced just at the exit threshold.
    pub branch_single: f64,
}

/// Closed-form minmax piece rate `(alpha - 1)/(2 alpha - 1)` and its regret.
pub fn optimal_mpr(p: &Params) -> MinmaxResult {
    let l = p.ell_star();
    MinmaxResult {
        ell_star: l,
        rbar: p.rbar(),
        branch_no_production: branch_no_production(l, p).expect("ell* < 1/2"),
        branch_extraction: branch_extraction(l, p).expect("ell* < 1/2"),
        branch_single: p.alpha() * l * p.ybar(),
    }
}

/// Minimizes the larger branch over `[0, 1/2]` by golden section, with the closed form as a candidate.
pub fn optimal_mpr_numeric(p: &Params, tol: f64) -> Result<MinmaxResult> {
    if !(tol > 0.0) {
        return Err(Error::invalid("/tol", "tolerance must be positive"));
    }
    let objective = |l: f64| {
        let a = branch_no_production(l, p).expect("l in [0, 1/2]");
        let b = branch_extraction(l, p).expect("l in [0, 1/2]");
        a.max(b)
    };
    let (l, v) = minimize_1d(objective, 0.0, 0.5, tol, &[p.ell_star()])?;
    Ok(MinmaxResult {
        ell_star: l,
        rbar: v,
        branch_no_production: branch_no_production(l, p)?,
        branch_extraction: branch_extraction(l, p)?,
        branch_single: p.alpha() * l * p.ybar(),
    })
}

/// Quantitative knowledge: `k` in `[k_lo, k_hi]` and every mean in `[y_lo, ybar]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KnowledgeBox {
    pub k_lo: f64,
    pub k_hi: f64,
    pub y_lo: f64,
    ybar: f64,
}

impl KnowledgeBox {
    pub fn new(k_lo: f64, k_hi: f64, y_lo: f64, p: &Params) -> Result<Self> {
        if !(k_lo.is_finite() && k_lo >= 0.0) {
            return Err(Error::invalid("/k_lo", "need k_lo >= 0"));
        }
        if !(k_hi.is_finite() && k_hi > 0.0 && k_hi >= k_lo) {
            return Err(Error::invalid("/k_hi", "need k_hi > 0 and k_hi >= k_lo"));
        }
        if !(y_lo.is_finite() && y_lo >= 0.0 && y_lo < p.ybar()) {
            return Err(Error::invalid("/y_lo", "need 0 <= y_lo < ybar"));
        }
        Ok(KnowledgeBox { k_lo, k_hi, y_lo, ybar: p.ybar() })
    }

    /// No knowledge beyond the model: `k` in `[0, ybar]`, means in `[0, ybar]`.
    pub fn unconstrained(p: &Params) -> Self {
        KnowledgeBox { k_lo: 0.0, k_hi: p.ybar(), y_lo: 0.0, ybar: p.ybar() }
    }

    pub fn ybar(&self) -> f64 {
        self.ybar
    }

    pub fn contains(&self, t: &Technology) -> bool {
        let k_ok = t.k() >= self.k_lo - ORDER_TOL && t.k() <= self.k_hi + ORDER_TOL;
        k_ok && t
            .means()
            .iter()
            .all(|&m| m >= self.y_lo - ORDER_TOL && m <= self.ybar + ORDER_TOL * self.ybar.max(1.0))
    }
}

/// The three lower-bound branches under a knowledge box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstrainedBranches {
    pub single: f64,
    pub no_hire: f64,
    pub extraction: f64,
}

impl ConstrainedBranches {
    pub fn max(&self) -> f64 {
        self.single.max(self.no_hire).max(self.extraction)
    }
}

const BRANCH_TOL: f64 = 1e-12;

/// Suprema of the single-action, no-hire and extraction regrets against `MPR(ell)` over `box_`.
pub fn constrained_branches(ell: f64, p: &Params, box_: &KnowledgeBox) -> Result<ConstrainedBranches> {
    check_slope(ell, true)?;
    let (a, yb) = (p.alpha(), p.ybar());
    let KnowledgeBox { k_lo, k_hi, y_lo, .. } = *box_;
    let kept = 1.0 - ell;

    let y_single = (k_hi / kept).min(yb);
    let single = if y_single >= y_lo { a * ell * y_single } else { 0.0 };

    let no_hire = if kept * y_lo <= k_hi {
        let hi = k_hi.min(kept * yb);
        if hi < k_lo {
            0.0
        } else {
            let f = |k: f64| {
                let m = y_lo.max(k / kept);
                let log_term = if k > 0.0 { k * (m.ln() - yb.ln()) } else { 0.0 };
                a * (m - k - log_term)
            };
            let interior = (kept * yb * ((2.0 * ell - 1.0) / kept).exp()).clamp(k_lo, hi);
            maximize_1d(f, k_lo, hi, BRANCH_TOL, &[interior, (kept * y_lo).clamp(k_lo, hi)])?.1
        }
    } else {
        // Even the bottom mean is profitable at the floor; the no-hire family needs a
        // cost offset at the bottom, which removes `ell * y_lo`.
        // Linear in k, so an endpoint attains the supremum.
        let f = |k: f64| a * (kept * y_lo - k - k * (y_lo.ln() - yb.ln()));
        f(k_lo).max(f(k_hi))
    };

    let lo = (k_lo / kept).max(y_lo);
    let extraction = if lo > yb {
        0.0
    } else {
        let f = |y: f64| {
            if y <= 0.0 {
                -(a - 1.0) * k_lo
            } else {
                a * kept * y * (yb / y).ln() + (a - 1.0) * (kept * y - k_lo)
            }
        };
        let interior = (yb * (-1.0 / a).exp()).clamp(lo, yb);
        maximize_1d(f, lo, yb, BRANCH_TOL, &[interior])?.1.max(0.0)
    };

    Ok(ConstrainedBranches { single, no_hire: no_hire.max(0.0), extraction })
}

/// Minimizes the largest constrained branch over `ell` in `[0, 1)`: a grid scan followed by
/// golden section around the best grid point.
pub fn optimal_mpr_constrained(p: &Params, box_: &KnowledgeBox, tol: f64) -> Result<MinmaxResult> {
    if !(tol > 0.0) {
        return Err(Error::invalid("/tol", "tolerance must be positive"));
    }
    const SCAN: usize = 400;
    let top = 1.0 - 1e-9;
    let objective = |l: f64| constrained_branches(l, p, box_).map(|b| b.max()).unwrap_or(f64::NAN);
    let grid: Vec<f64> = (0..=SCAN).map(|i| top * i as f64 / SCAN as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&l| objective(l)).collect();
    let best = (0..grid.len())
        .min_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)))
        .expect("nonempty scan");
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(SCAN)];
    let (l, _) = minimize_1d(objective, lo, hi, tol, &[grid[best]])?;
    let b = constrained_branches(l, p, box_)?;
    Ok(MinmaxResult {
        ell_star: l,
        rbar: b.max(),
        branch_no_production: b.no_hire,
        branch_extraction: b.extraction,
        branch_single: b.single,
    })
}

fn same_length(f: &Action, g: &Action) -> Result<()> {
    if f.probs.len() != g.probs.len() {
        return Err(Error::invalid("/probs", "actions live on grids of different sizes"));
    }
    Ok(())
}

/// Likelihood-ratio dominance of `f` over `g` on the support of their mixture.
pub fn mlrp_geq(f: &Action, g: &Action) -> Result<bool> {
    same_length(f, g)?;
    let support: Vec<usize> = (0..f.probs.len()).filter(|&i| f.probs[i] + g.probs[i] > 0.0).collect();
    for (a, &lo) in support.iter().enumerate() {
        for &hi in &support[a + 1..] {
            if f.probs[hi] * g.probs[lo] < g.probs[hi] * f.probs[lo] - ORDER_TOL {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// First-order stochastic dominance: the cdf of `f` lies weakly below that of `g`.
pub fn fosd_geq(f: &Action, g: &Action) -> Result<bool> {
    same_length(f, g)?;
    let (mut cf, mut cg) = (0.0, 0.0);
    for (a, b) in f.probs.iter().zip(&g.probs) {
        cf += a;
        cg += b;
        if cf > cg + ORDER_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Classes of technologies the regulator may know it faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TechClass {
    /// Costlier actions dominate cheaper ones in likelihood ratio.
    Mlrp,
    /// Costlier actions dominate cheaper ones stochastically.
    Fosd,
    Box(KnowledgeBox),
}

/// Whether `t` belongs to `class`. Under the orders, equal-cost actions must be comparable.
pub fn technology_in_class(t: &Technology, class: &TechClass) -> bool {
    let order: fn(&Action, &Action) -> Result<bool> = match class {
        TechClass::Box(b) => return b.contains(t),
        TechClass::Mlrp => mlrp_geq,
        TechClass::Fosd => fosd_geq,
    };
    let geq = |a: &Action, b: &Action| order(a, b).unwrap_or(false);
    let acts = t.actions();
    for i in 0..acts.len() {
        for j in i + 1..acts.len() {
            let (a, b) = (&acts[i], &acts[j]);
            let ok = if a.effort > b.effort {
                geq(a, b)
            } else if b.effort > a.effort {
                geq(b, a)
            } else {
                geq(a, b) || geq(b, a)
            };
            if !ok {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(alpha: f64) -> Params {
        Params::new(alpha, 1.0).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn branch_examples() {
        assert!(close(branch_no_production(0.5, &p(3.0)).unwrap(), 1.5, 1e-12));
        assert!(close(branch_no_production(0.0, &p(2.0)).unwrap(), 2.0 * (-1.0f64).exp(), 1e-12));
        assert!(close(branch_no_production(1.0 / 3.0, &p(2.0)).unwrap(), 0.808708, 1e-6));
        assert!(branch_no_production(1.0, &p(2.0)).is_err());
        assert_eq!(branch_extraction(1.0, &p(2.0)).unwrap(), 0.0);
        assert!(close(branch_extraction(0.0, &p(1.0)).unwrap(), 0.367879, 1e-6));
        assert!(close(branch_extraction(1.0 / 3.0, &p(2.0)).unwrap(), 0.808708, 1e-6));
    }

    #[test]
    fn closed_form_examples() {
        let r = optimal_mpr(&p(1.0));
        assert_eq!(r.ell_star, 0.0);
        assert!(close(r.rbar, (-1.0f64).exp(), 1e-12));
        assert!(close(optimal_mpr(&p(2.0)).rbar, 0.808708, 1e-6));
        assert!(close(optimal_mpr(&p(1e9)).ell_star, 0.5, 1e-9));
    }

    #[test]
    fn numeric_examples() {
        assert!(close(optimal_mpr_numeric(&p(2.0), 1e-10).unwrap().ell_star, 1.0 / 3.0, 1e-6));
        assert!(close(optimal_mpr_numeric(&p(1.5), 1e-10).unwrap().ell_star, 0.25, 1e-6));
        assert!(close(optimal_mpr_numeric(&p(1.0), 1e-10).unwrap().ell_star, 0.0, 1e-6));
    }

    #[test]
    fn box_validation() {
        assert!(KnowledgeBox::new(0.0, 0.0, 0.0, &p(2.0)).is_err());
        assert!(KnowledgeBox::new(0.5, 0.4, 0.0, &p(2.0)).is_err());
        assert!(KnowledgeBox::new(0.0, 1.0, 1.0, &p(2.0)).is_err());
    }

    #[test]
    fn unconstrained_box_reproduces_branches() {
        for alpha in [1.0, 1.5, 2.0, 5.0] {
            let pp = p(alpha);
            let b = KnowledgeBox::unconstrained(&pp);
            for ell in [0.0, 0.1, 0.25, 1.0 / 3.0, 0.45, 0.5] {
                let c = constrained_branches(ell, &pp, &b).unwrap();
                assert!(close(c.no_hire, branch_no_production(ell, &pp).unwrap(), 1e-9), "{alpha} {ell}");
                assert!(close(c.extraction, branch_extraction(ell, &pp).unwrap(), 1e-9), "{alpha} {ell}");
                assert!(close(c.single, alpha * ell, 1e-12));
            }
        }
    }

    #[test]
    fn constrained_examples() {
        let pp = p(2.0);
        let r = optimal_mpr_constrained(&pp, &KnowledgeBox::unconstrained(&pp), 1e-10).unwrap();
        assert!(close(r.ell_star, 1.0 / 3.0, 1e-4));
        // Near-degenerate means: extraction reduces to (alpha - 1)((1 - l) ybar - k_lo).
        let b = KnowledgeBox::new(0.01, 0.01, 1.0 - 1e-9, &pp).unwrap();
        let c = constrained_branches(0.2, &pp, &b).unwrap();
        assert!(close(c.extraction, 0.8 - 0.01, 1e-6));
        let b = KnowledgeBox::new(0.0, 1.0, 0.0, &p(1.0)).unwrap();
        let r = optimal_mpr_constrained(&p(1.0), &b, 1e-10).unwrap();
        assert!(r.rbar <= constrained_branches(0.0, &p(1.0), &b).unwrap().max() + 1e-9);
    }

    #[test]
    fn order_examples() {
        let b = |m: f64| Action::binary(m, 0.0, 1.0).unwrap();
        assert!(mlrp_geq(&b(0.7), &b(0.3)).unwrap());
        assert!(!mlrp_geq(&b(0.3), &b(0.7)).unwrap());
        assert!(mlrp_geq(&b(0.4), &b(0.4)).unwrap());
        assert!(fosd_geq(&b(0.7), &b(0.3)).unwrap());
        let f = Action::new(0.0, vec![0.2, 0.6, 0.2]);
        let g = Action::new(0.0, vec![0.4, 0.1, 0.5]);
        assert!(!fosd_geq(&f, &g).unwrap() && !fosd_geq(&g, &f).unwrap());
        assert!(fosd_geq(&f, &f).unwrap());
        assert!(mlrp_geq(&f, &Action::new(0.0, vec![0.5, 0.5])).is_err());
    }

    #[test]
    fn class_examples() {
        use crate::model::OutputGrid;
        let grid = OutputGrid::new(vec![0.0, 0.5, 1.0]).unwrap();
        let crossing = Technology::new(
            0.0,
            grid,
            vec![Action::new(0.1, vec![0.2, 0.6, 0.2]), Action::new(0.1, vec![0.4, 0.1, 0.5])],
        )
        .unwrap();
        assert!(!technology_in_class(&crossing, &TechClass::Mlrp));
        let wide = KnowledgeBox { k_lo: 0.0, k_hi: f64::MAX, y_lo: 0.0, ybar: 1.0 };
        assert!(technology_in_class(&crossing, &TechClass::Box(wide)));
    }

    proptest! {
        #[test]
        fn branches_equalize_at_ell_star(alpha in 1.0f64..1e6) {
            let pp = p(alpha);
            let l = pp.ell_star();
            let a = branch_no_production(l, &pp).unwrap();
            let b = branch_extraction(l, &pp).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn floor_cases_dominate(alpha in 1.0f64..50.0, w in 0.0f64..=1.0) {
            let e = (-1.0 / alpha).exp();
            if w >= 0.5 {
                prop_assert!(w > e * (1.0 - w));
            } else {
                prop_assert!(((2.0 * w - 1.0) / (1.0 - w)).exp() * (1.0 - w) >= w - 1e-15);
            }
            prop_assert!(alpha * e * (1.0 - w) >= (alpha - 1.0) * (1.0 - w) - 1e-12);
        }

        #[test]
        fn mlrp_implies_fosd(a in proptest::collection::vec(0.01f64..1.0, 3), b in proptest::collection::vec(0.01f64..1.0, 3)) {
            let norm = |v: Vec<f64>| { let s: f64 = v.iter().sum(); v.into_iter().map(|x| x / s).collect::<Vec<_>>() };
            let f = Action::new(0.0, norm(a));
            let g = Action::new(0.0, norm(b));
            if mlrp_geq(&f, &g).unwrap() {
                prop_assert!(fosd_geq(&f, &g).unwrap());
            }
        }
    }
}
