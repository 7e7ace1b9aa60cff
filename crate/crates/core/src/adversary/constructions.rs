//! Closed-form worst-case technologies and the counterexamples against non-optimal regulations.
//!
//! Continuum action families are discretized on uniform mean grids. Costs are built
//! chord by chord so that the chord slope into each mean equals the implementing slope
//! of the continuum family at that mean. Sampling the continuum cost curve instead
//! leaves a first-order profit opportunity between grid points, which flips the firm's
//! exit decision in the no-production family.

use crate::error::{Error, Result};
use crate::model::{levels_match, Action, OutputGrid, Params, Regulation, Technology};

/// A technology paired with the regulation it defeats and the continuum regret it targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub technology: Technology,
    pub regulation: Regulation,
    /// Regret of the continuum family the technology discretizes.
    pub predicted_regret: f64,
    /// `predicted_regret - rbar`.
    pub margin: f64,
}

/// `n` points spaced uniformly on `[lo, hi]`.
pub(crate) fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|j| if j + 1 == n { hi } else { lo + (hi - lo) * j as f64 / (n - 1) as f64 })
        .collect()
}

/// Costs with `e[0] = e0` and chord slope `slope(i_j)` from `i_{j-1}` to `i_j`.
pub(crate) fn chord_costs(means: &[f64], e0: f64, slope: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(means.len());
    out.push(e0);
    for w in means.windows(2) {
        let prev = *out.last().expect("nonempty");
        out.push(prev + slope(w[1]) * (w[1] - w[0]));
    }
    out
}

fn binary_technology(k: f64, top: f64, means: &[f64], costs: &[f64]) -> Result<Technology> {
    let actions = means
        .iter()
        .zip(costs)
        .map(|(&m, &e)| Action::binary(m, e, top))
        .collect::<Result<Vec<_>>>()?;
    Technology::new(k, OutputGrid::binary(top)?, actions)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("/{name}"), format!("{name} must be positive, got {v}")))
    }
}

/// One zero-cost action paying `yprime` for sure, with fixed cost `k`.
pub fn construct_single_action(yprime: f64, k: f64) -> Result<Technology> {
    positive("yprime", yprime)?;
    if !(0.0..yprime).contains(&k) {
        return Err(Error::invalid("/k", format!("need 0 <= k < yprime, got k = {k}")));
    }
    Technology::new(k, OutputGrid::binary(yprime)?, vec![Action::new(0.0, vec![0.0, 1.0])])
}

/// `exp((2w - y)/(y - w)) (y - w)`: the fixed cost maximizing the no-production regret.
pub fn optimal_k_no_production(wbar: f64, yprime: f64) -> Result<f64> {
    positive("yprime", yprime)?;
    if !(0.0..=yprime / 2.0).contains(&wbar) {
        return Err(Error::invalid("/wbar", format!("need 0 <= wbar <= yprime/2, got {wbar}")));
    }
    Ok(((2.0 * wbar - yprime) / (yprime - wbar)).exp() * (yprime - wbar))
}

/// Binary family on `{0, top}` with floor share `s`, fixed cost `k` and means on
/// `[k/(1-s), mean_hi]` at which no admissible contract earns a positive profit.
pub(crate) fn no_production_family(s: f64, top: f64, k: f64, mean_hi: f64, n: usize) -> Result<Technology> {
    let lo = k / (1.0 - s);
    let means = uniform(lo, mean_hi, n);
    let costs = chord_costs(&means, 0.0, |i| (i - k) / i);
    binary_technology(k, top, &means, &costs)
}

/// No-production curve: `n` binary actions on `{0, yprime}` whose means span
/// `[yprime k/(yprime - wbar), yprime]`, bottom cost 0.
pub fn construct_no_production_curve(wbar: f64, yprime: f64, k: f64, n: usize) -> Result<Technology> {
    positive("yprime", yprime)?;
    if !(0.0..=yprime / 2.0).contains(&wbar) {
        return Err(Error::invalid("/wbar", format!("need 0 <= wbar <= yprime/2, got {wbar}")));
    }
    if !(k > 0.0 && k < yprime - wbar) {
        return Err(Error::invalid("/k", format!("need 0 < k < yprime - wbar, got {k}")));
    }
    if n < 2 {
        return Err(Error::invalid("/n", "need at least 2 actions"));
    }
    no_production_family(wbar / yprime, yprime, k, yprime, n)
}

/// `yprime * exp(-1/alpha)`: the bottom mean maximizing the extraction regret.
pub fn optimal_mu_f(p: &Params, yprime: f64) -> f64 {
    yprime * (-1.0 / p.alpha()).exp()
}

/// Binary family on `{0, top}`, `k = 0`, floor share `s`, means on `[mu_f, mean_hi]`,
/// in which every action earns the firm `(1-s) mu_f` and the bottom one leaves no surplus.
pub(crate) fn extraction_family(s: f64, top: f64, mu_f: f64, mean_hi: f64, n: usize) -> Result<Technology> {
    let profit = (1.0 - s) * mu_f;
    let means = uniform(mu_f, mean_hi, n);
    let costs = chord_costs(&means, s * mu_f, |i| (i - profit) / i);
    binary_technology(0.0, top, &means, &costs)
}

/// Surplus-extraction curve: `k = 0`, `n` binary actions on `{0, yprime}` with means on `[mu_f, yprime]`.
pub fn construct_extraction_curve(wbar: f64, yprime: f64, mu_f: f64, n: usize) -> Result<Technology> {
    positive("yprime", yprime)?;
    if !(0.0..=yprime).contains(&wbar) {
        return Err(Error::invalid("/wbar", "need 0 <= wbar <= yprime"));
    }
    if !(mu_f > 0.0 && mu_f <= yprime) {
        return Err(Error::invalid("/mu_f", format!("need 0 < mu_f <= yprime, got {mu_f}")));
    }
    if n < 2 {
        return Err(Error::invalid("/n", "need at least 2 actions"));
    }
    extraction_family(wbar / yprime, yprime, mu_f, yprime, n)
}

/// Continuum regret of the no-production family with floor share `s` on means up to `ybar`.
pub(crate) fn no_production_value(alpha: f64, s: f64, ybar: f64) -> f64 {
    alpha * ((2.0 * s - 1.0) / (1.0 - s)).exp() * (1.0 - s) * ybar
}

/// Continuum regret of the extraction family with floor share `s` on means up to `ybar`.
pub(crate) fn extraction_value(alpha: f64, s: f64, ybar: f64) -> f64 {
    alpha * (-1.0 / alpha).exp() * (1.0 - s) * ybar
}

fn regulation_floor(grid: &[f64], floor: &[f64]) -> Result<Regulation> {
    Regulation::minimum_contract(grid.to_vec(), floor.to_vec())
}

/// Which side of the protection band `w` falls on at `yprime`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandSide {
    Above,
    Below,
    Inside,
}

/// Classifies `w` against the band that every optimal regulation satisfies at `yprime`.
pub fn band_side(yprime: f64, w: f64, p: &Params, tol: f64) -> BandSide {
    let (ls, yb) = (p.ell_star(), p.ybar());
    if yprime >= yb || levels_match(yprime, yb) {
        if w > ls * yprime + tol {
            BandSide::Above
        } else if w < ls * yprime - tol {
            BandSide::Below
        } else {
            BandSide::Inside
        }
    } else if w > yprime.min(ls * yb) + tol {
        BandSide::Above
    } else if w < (yprime - (1.0 - ls) * yb).max(0.0) - tol {
        BandSide::Below
    } else {
        BandSide::Inside
    }
}

/// Counterexample against a minimum-contract regulation whose floor at `yprime` is `w`
/// and equals `ell* y` at every other level it uses.
pub fn construct_band_violation(yprime: f64, w: f64, p: &Params, n: usize) -> Result<Counterexample> {
    positive("yprime", yprime)?;
    if !(0.0..=yprime).contains(&w) {
        return Err(Error::invalid("/w", format!("need 0 <= w <= yprime, got {w}")));
    }
    if n < 2 {
        return Err(Error::invalid("/n", "need at least 2 actions"));
    }
    let (alpha, yb, ls) = (p.alpha(), p.ybar(), p.ell_star());
    let side = band_side(yprime, w, p, 1e-12);
    if side == BandSide::Inside {
        return Err(Error::precondition(format!("payment {w} at {yprime} lies inside the optimal band")));
    }
    let above_ybar = yprime >= yb || levels_match(yprime, yb);
    let (technology, regulation, predicted) = match (above_ybar, side) {
        (true, BandSide::Above) => {
            let s = w / yprime;
            let reg = regulation_floor(&[0.0, yprime], &[0.0, w])?;
            if s < 0.5 {
                let k = no_production_value(1.0, s, yb);
                (no_production_family(s, yprime, k, yb, n)?, reg, no_production_value(alpha, s, yb))
            } else {
                // The family degenerates to one sure action; the firm exits when k > (1-s) ybar.
                let delta = 1e-6 * yb;
                let k = (1.0 - s) * yb + delta;
                let a = Action::binary(yb, 0.0, yprime)?;
                let t = Technology::new(k, OutputGrid::binary(yprime)?, vec![a])?;
                (t, reg, alpha * (yb - k))
            }
        }
        (true, _) => {
            let s = w / yprime;
            let mu_f = optimal_mu_f(p, yb);
            let reg = regulation_floor(&[0.0, yprime], &[0.0, w])?;
            (extraction_family(s, yprime, mu_f, yb, n)?, reg, extraction_value(alpha, s, yb))
        }
        (false, BandSide::Below) => {
            let s = w / yprime;
            let mu_f = optimal_mu_f(p, yprime);
            let reg = regulation_floor(&[0.0, yprime], &[0.0, w])?;
            (extraction_family(s, yprime, mu_f, yprime, n)?, reg, extraction_value(alpha, s, yprime))
        }
        (false, _) => {
            // Mix yprime with a level above ybar so that the mixture has mean ybar and an
            // effective floor share c/ybar strictly above ell*.
            let excess = w - ls * yprime;
            let c_target = (ls * yb + excess / 2.0).min((ls * yb + yb / 2.0) / 2.0);
            let mix = (c_target - ls * yb) / excess;
            let y2 = (yb - mix * yprime) / (1.0 - mix);
            let c = mix * w + (1.0 - mix) * ls * y2;
            let s = c / yb;
            let k = no_production_value(1.0, s, yb);
            let lo = k / (1.0 - s);
            let means = uniform(lo, yb, n);
            let costs = chord_costs(&means, 0.0, |i| (i - k) / i);
            let grid = vec![0.0, yprime, yb, y2];
            let q = lo / yb;
            let mut actions = vec![Action::new(0.0, vec![1.0 - q, q * mix, 0.0, q * (1.0 - mix)])];
            for (&m, &e) in means.iter().zip(&costs) {
                let h = (m / yb).min(1.0);
                actions.push(Action::new(e, vec![1.0 - h, 0.0, h, 0.0]));
            }
            let t = Technology::new(k, OutputGrid::new(grid.clone())?, actions)?;
            let reg = regulation_floor(&grid, &[0.0, w, ls * yb, ls * y2])?;
            (t, reg, no_production_value(alpha, s, yb))
        }
    };
    Ok(Counterexample {
        technology,
        regulation,
        predicted_regret: predicted,
        margin: predicted - p.rbar(),
    })
}

/// Counterexample against a regulation whose image at `yprime >= ybar` has the gap `(w1, w2)`.
///
/// Starts from the no-production family at `rho* ybar` and replaces its costs on the
/// means implemented by slopes inside the gap by a line of slope `w1/yprime + eps`.
pub fn construct_flexibility_violation(
    yprime: f64,
    gap: (f64, f64),
    p: &Params,
    eps: f64,
    n: usize,
) -> Result<Counterexample> {
    let (alpha, yb, ls) = (p.alpha(), p.ybar(), p.ell_star());
    let rho = p.rho_star();
    if !(yprime >= yb || levels_match(yprime, yb)) {
        return Err(Error::invalid("/yprime", "need yprime >= ybar"));
    }
    let (w1, w2) = gap;
    let tol = 1e-12 * yprime.max(1.0);
    if !(w1 < w2) || w1 < ls * yprime - tol || w2 > (1.0 - rho) * yprime + tol {
        return Err(Error::invalid("/gap", "gap must be a nonempty interval inside [ell* y, (1 - rho*) y]"));
    }
    if !(eps > 0.0) || eps >= (w2 - w1) / yprime {
        return Err(Error::invalid("/eps", "eps must be positive and keep w1/yprime + eps inside the gap"));
    }
    if n < 6 {
        return Err(Error::invalid("/n", "need at least 6 actions"));
    }
    let k = rho * yb;
    let i_lo = k / (1.0 - ls);
    let i1 = (k / (1.0 - w1 / yprime)).max(i_lo);
    let i2 = (k / (1.0 - w2 / yprime)).min(yb);
    let flat = w1 / yprime + eps;

    let span = yb - i_lo;
    let n_a = (((i1 - i_lo) / span) * n as f64).round().max(2.0) as usize;
    let n_b = (((i2 - i1) / span) * n as f64).round().max(2.0) as usize;
    let n_c = n.saturating_sub(n_a + n_b).max(2);
    let a = uniform(i_lo, i1, n_a);
    let b = uniform(i1, i2, n_b);
    let c = uniform(i2, yb, n_c);
    let mut means = a.clone();
    let mut costs = chord_costs(&a, 0.0, |i| (i - k) / i);
    let e1 = *costs.last().expect("nonempty");
    for &m in &b[1..] {
        means.push(m);
        costs.push(e1 + flat * (m - i1));
    }
    let e2 = *costs.last().expect("nonempty");
    let tail = chord_costs(&c, e2, |i| (i - k) / i);
    means.extend_from_slice(&c[1..]);
    costs.extend_from_slice(&tail[1..]);
    let technology = binary_technology(k, yprime, &means, &costs)?;
    let regulation = Regulation::image_constrained(
        vec![0.0, yprime],
        vec![vec![(0.0, 0.0)], vec![(ls * yprime, w1), (w2, yprime)]],
    )?;
    let cont_gap = (i2 - i1) - k * (i2 / i1).ln() - flat * (i2 - i1);
    let margin = alpha * cont_gap;
    Ok(Counterexample {
        technology,
        regulation,
        predicted_regret: p.rbar() + margin,
        margin,
    })
}

/// Risky-mixture counterexample on `{0, y1, ybar, y2}`.
///
/// Every action mixes `y1` and `y2` with weights `p_mix : 1 - p_mix`, so a contract acts on
/// it only through the mixture payment. With floor `w_low` at `(y1, y2)` and `ell* y`
/// elsewhere, that payment is `ell_low * mean` with `ell_low < ell*`, and the extraction
/// family at the lower floor earns `alpha exp(-1/alpha) (1 - ell_low) ybar > rbar`. The
/// bottom action is the mixture with mean `ybar exp(-1/alpha)`.
pub fn construct_gaming_violation(
    y1: f64,
    y2: f64,
    w_low: (f64, f64),
    p_mix: f64,
    p: &Params,
    n: usize,
) -> Result<Counterexample> {
    let (alpha, yb, ls) = (p.alpha(), p.ybar(), p.ell_star());
    if alpha <= 1.0 {
        return Err(Error::precondition("alpha = 1 leaves no minimum piece rate to game"));
    }
    if !(y1 > 0.0 && y1 < yb && y2 > yb) {
        return Err(Error::precondition("need 0 < y1 < ybar < y2"));
    }
    if !(p_mix > 0.0 && p_mix < 1.0) || (p_mix * y1 + (1.0 - p_mix) * y2 - yb).abs() > 1e-9 * yb {
        return Err(Error::precondition("the mixture of y1 and y2 must have mean ybar"));
    }
    let (w1, w2) = w_low;
    if !(0.0..=y1).contains(&w1) || !(0.0..=y2).contains(&w2) {
        return Err(Error::invalid("/w_low", "payments must satisfy limited liability"));
    }
    let ell_low = (p_mix * w1 + (1.0 - p_mix) * w2) / yb;
    if ell_low >= ls {
        return Err(Error::precondition("the mixture pays at least ell* per unit of output"));
    }
    if n < 2 {
        return Err(Error::invalid("/n", "need at least 2 actions"));
    }
    let mu_f = optimal_mu_f(p, yb);
    let profit = (1.0 - ell_low) * mu_f;
    let means = uniform(mu_f, yb, n);
    let costs = chord_costs(&means, ell_low * mu_f, |i| (i - profit) / i);
    let actions = means
        .iter()
        .zip(&costs)
        .map(|(&m, &e)| {
            let q = (m / yb).min(1.0);
            Action::new(e, vec![1.0 - q, q * p_mix, 0.0, q * (1.0 - p_mix)])
        })
        .collect();
    let grid = vec![0.0, y1, yb, y2];
    let technology = Technology::new(0.0, OutputGrid::new(grid.clone())?, actions)?;
    let regulation = regulation_floor(&grid, &[0.0, w1, ls * yb, w2])?;
    let predicted = extraction_value(alpha, ell_low, yb);
    Ok(Counterexample {
        technology,
        regulation,
        predicted_regret: predicted,
        margin: predicted - p.rbar(),
    })
}
