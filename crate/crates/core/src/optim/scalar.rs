//! Bounded scalar minimization: golden-section search plus caller candidates.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes `f` on `[lo, hi]`.
///
/// Golden-section refinement runs until the bracket is narrower than `tol`; the
/// result then competes with every candidate inside `[lo, hi]` and both endpoints.
/// Unimodality is not assumed, so callers should pass known interior optima.
/// Ties keep the earliest point in the order: golden result, candidates, `lo`, `hi`.
pub fn minimize_1d<F>(mut f: F, lo: f64, hi: f64, tol: f64, candidates: &[f64]) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid("/interval", format!("invalid interval [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("/tol", "tolerance must be positive"));
    }
    let mut eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_nan() {
            Err(Error::Numerical(format!("objective returned NaN at {x}")))
        } else {
            Ok(v)
        }
    };

    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
        }
    }
    let (mut best_x, mut best_f) = if fc <= fd { (c, fc) } else { (d, fd) };
    let tail = candidates
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x >= lo && *x <= hi)
        .chain([lo, hi]);
    for x in tail {
        let v = eval(x)?;
        if v < best_f {
            best_x = x;
            best_f = v;
        }
    }
    Ok((best_x, best_f))
}

/// Maximizes `f` on `[lo, hi]` by minimizing `-f`.
pub fn maximize_1d<F>(mut f: F, lo: f64, hi: f64, tol: f64, candidates: &[f64]) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let (x, v) = minimize_1d(|x| -f(x), lo, hi, tol, candidates)?;
    Ok((x, -v))
}
