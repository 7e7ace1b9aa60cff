//! Adversarial technologies: closed-form constructions, the binarizing transform and a
//! seeded random search with hill climbing.

mod constructions;
mod search;

pub use constructions::{
    band_side, construct_band_violation, construct_extraction_curve, construct_flexibility_violation,
    construct_gaming_violation, construct_no_production_curve, construct_single_action, optimal_k_no_production,
    optimal_mu_f, BandSide, Counterexample,
};
pub use search::{
    adversarial_search, adversarial_search_with_threads, random_binary_technology, thread_count, CandidateOrigin, SearchConfig, SearchOutcome,
    CLIMB_ROUNDS, CLIMB_SHARE, CLIMB_STEP, SEED_ACTIONS,
};

use crate::error::{Error, Result};
use crate::firm::worst_case_equilibrium;
use crate::model::{Action, OutputGrid, Params, Regulation, Technology};

/// Maps a technology with positive worst-case profit under an MPR regulation to a binary
/// technology on `{0, ybar}` with no fixed cost and weakly higher regret.
///
/// Costs rise by the worker's equilibrium surplus, a floor-binding action earning the old
/// profit plus `k` is appended, and every distribution is replaced by the binary one with
/// the same mean.
pub fn binarize_and_normalize(t: &Technology, r: &Regulation, p: &Params) -> Result<Technology> {
    let Regulation::Mpr { ell } = *r else {
        return Err(Error::precondition("binarization is defined for minimum piece-rate regulations only"));
    };
    if ell >= 1.0 {
        return Err(Error::precondition("a floor slope of 1 leaves no profit"));
    }
    let yb = p.ybar();
    if let Some(m) = t.means().iter().find(|&&m| m > yb * (1.0 + 1e-12)) {
        return Err(Error::precondition(format!("mean {m} exceeds ybar")));
    }
    let eq = worst_case_equilibrium(t, r, p)?;
    if !eq.participated {
        return Err(Error::precondition("the firm exits; binarization needs positive profit"));
    }
    let ws = eq.worker_surplus.max(0.0);
    let mu_star = ((eq.profit + t.k()) / (1.0 - ell)).min(yb);
    let mut actions = t
        .actions()
        .iter()
        .zip(t.means())
        .map(|(a, &m)| Action::binary(m.min(yb), a.effort + ws, yb))
        .collect::<Result<Vec<_>>>()?;
    actions.push(Action::binary(mu_star, ell * mu_star, yb)?);
    Technology::new(0.0, OutputGrid::binary(yb)?, actions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::firm::firm_best_response;
    use crate::regret::regret;

    fn p2() -> Params {
        Params::new(2.0, 1.0).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn single_action_examples() {
        let r = Regulation::mpr(1.0 / 3.0).unwrap();
        let t = construct_single_action(1.0, 0.9).unwrap();
        assert!(close(regret(&t, &r, &p2()).unwrap().regret, 0.2, 1e-9));
        let t = construct_single_action(1.0, 0.5).unwrap();
        assert!(close(regret(&t, &r, &p2()).unwrap().regret, 1.0 / 6.0, 1e-9));
        let t = construct_single_action(1.0, 2.0 / 3.0 + 1e-7).unwrap();
        assert!(close(regret(&t, &r, &p2()).unwrap().regret, 2.0 / 3.0, 1e-6));
        assert!(construct_single_action(1.0, 1.0).is_err());
    }

    #[test]
    fn optimal_k_examples() {
        assert!(close(optimal_k_no_production(1.0 / 3.0, 1.0).unwrap(), 0.404354, 1e-6));
        assert!(close(optimal_k_no_production(0.0, 1.0).unwrap(), (-1.0f64).exp(), 1e-12));
        assert!(close(optimal_k_no_production(0.5, 1.0).unwrap(), 0.5, 1e-12));
        assert!(optimal_k_no_production(0.6, 1.0).is_err());
    }

    #[test]
    fn optimal_mu_f_examples() {
        assert!(close(optimal_mu_f(&p2(), 1.0), 0.606531, 1e-6));
        assert!(close(optimal_mu_f(&Params::new(1.0, 1.0).unwrap(), 1.0), 0.367879, 1e-6));
        assert!(close(optimal_mu_f(&Params::new(1e6, 1.0).unwrap(), 1.0), 1.0 - 1e-6, 1e-9));
    }

    #[test]
    fn no_production_curve_makes_the_firm_exit() {
        let k = optimal_k_no_production(1.0 / 3.0, 1.0).unwrap();
        let t = construct_no_production_curve(1.0 / 3.0, 1.0, k, 200).unwrap();
        assert_eq!(t.actions()[0].effort, 0.0);
        assert!(close(t.mean(0), 1.5 * k, 1e-12));
        let r = Regulation::mpr(1.0 / 3.0).unwrap();
        assert!(!firm_best_response(&t, &r).unwrap().participated);
        let rep = regret(&t, &r, &p2()).unwrap();
        assert!(close(rep.regret, p2().rbar(), 0.01 * p2().rbar()));
    }

    #[test]
    fn extraction_curve_uses_the_floor_on_the_bottom_action() {
        let mu = optimal_mu_f(&p2(), 1.0);
        let t = construct_extraction_curve(1.0 / 3.0, 1.0, mu, 200).unwrap();
        let r = Regulation::mpr(1.0 / 3.0).unwrap();
        let eq = worst_case_equilibrium(&t, &r, &p2()).unwrap();
        assert_eq!(eq.action_index, Some(0));
        assert!(eq.worker_surplus.abs() < 1e-9);
        assert!(close(eq.profit, 2.0 / 3.0 * mu, 1e-9));
        assert!(close(eq.contract.unwrap().payments()[1], 1.0 / 3.0, 1e-9));
    }

    #[test]
    fn construction_domains() {
        assert!(construct_no_production_curve(0.6, 1.0, 0.1, 10).is_err());
        assert!(construct_no_production_curve(0.2, 1.0, 0.9, 10).is_err());
        assert!(construct_no_production_curve(0.2, 1.0, 0.3, 1).is_err());
        assert!(construct_extraction_curve(0.2, 1.0, 0.0, 10).is_err());
        assert!(construct_extraction_curve(0.2, 1.0, 1.2, 10).is_err());
    }

    #[test]
    fn band_violation_inside_band_is_rejected() {
        let p = p2();
        assert!(matches!(
            construct_band_violation(1.0, 1.0 / 3.0, &p, 50),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn band_violation_examples_beat_rbar() {
        let p = p2();
        for (y, w) in [(1.2, 0.5), (0.5, 1.0 / 3.0 + 0.05), (1.0, 0.2), (0.9, 0.0)] {
            if band_side(y, w, &p, 1e-12) == BandSide::Inside {
                continue;
            }
            let cx = construct_band_violation(y, w, &p, 400).unwrap();
            assert!(cx.margin > 0.0);
            let got = regret(&cx.technology, &cx.regulation, &p).unwrap().regret;
            assert!(got > p.rbar() + 1e-4, "({y}, {w}): {got}");
        }
    }

    #[test]
    fn flexibility_violation_example() {
        let p = p2();
        assert!(construct_flexibility_violation(1.0, (0.4, 0.5), &p, 0.0, 100).is_err());
        assert!(construct_flexibility_violation(1.0, (0.2, 0.5), &p, 1e-3, 100).is_err());
        let cx = construct_flexibility_violation(1.0, (0.4, 0.5), &p, 1e-3, 600).unwrap();
        assert!(cx.margin > 0.0);
        let got = regret(&cx.technology, &cx.regulation, &p).unwrap().regret;
        assert!(got > p.rbar() + 1e-4, "{got}");
    }

    #[test]
    fn gaming_violation_preconditions() {
        let p = p2();
        assert!(construct_gaming_violation(0.5, 1.5, (0.2, 0.2), 0.5, &Params::new(1.0, 1.0).unwrap(), 50).is_err());
        assert!(construct_gaming_violation(0.5, 1.5, (0.2, 0.5), 0.5, &p, 50).is_err());
        assert!(construct_gaming_violation(0.5, 1.5, (0.2, 0.2), 0.4, &p, 50).is_err());
    }

    #[test]
    fn gaming_violation_beats_rbar() {
        let p = p2();
        let cx = construct_gaming_violation(0.5, 1.5, (0.2, 0.2), 0.5, &p, 400).unwrap();
        let rep = regret(&cx.technology, &cx.regulation, &p).unwrap();
        assert!(close(rep.regret, cx.predicted_regret, 0.01 * cx.predicted_regret), "{rep:?}");
        assert!(rep.regret > p.rbar() + 1e-4);
    }

    #[test]
    fn binarize_rejects_non_mpr_and_exit() {
        let t = construct_single_action(1.0, 0.5).unwrap();
        assert!(binarize_and_normalize(&t, &Regulation::All, &p2()).is_err());
        let t = construct_single_action(1.0, 0.9).unwrap();
        assert!(binarize_and_normalize(&t, &Regulation::mpr(0.3).unwrap(), &p2()).is_err());
    }

    #[test]
    fn binarize_weakly_raises_regret_on_an_example() {
        let grid = OutputGrid::new(vec![0.0, 0.5, 1.0]).unwrap();
        let t = Technology::new(
            0.1,
            grid,
            vec![Action::new(0.0, vec![0.5, 0.3, 0.2]), Action::new(0.15, vec![0.1, 0.3, 0.6])],
        )
        .unwrap();
        let r = Regulation::mpr(0.2).unwrap();
        let before = regret(&t, &r, &p2()).unwrap().regret;
        let b = binarize_and_normalize(&t, &r, &p2()).unwrap();
        assert!(b.is_binary() && b.k() == 0.0);
        assert!(regret(&b, &r, &p2()).unwrap().regret >= before - 1e-9);
    }
}
