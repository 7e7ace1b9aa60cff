//! Diagnostics that every optimal regulation must pass, convex envelopes, and the
//! comparative statics of the minmax piece rate in `alpha`.

use crate::error::{Error, Result};
use crate::minmax::{branch_extraction, branch_no_production};
use crate::model::{Params, Regulation, EPS_TOL};
use serde::Serialize;

/// Greatest convex minorant of a finite point set, stored by its vertices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope {
    vertices: Vec<(f64, f64)>,
}

impl Envelope {
    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    /// Envelope value at `y`, which must lie within the input range.
    pub fn eval(&self, y: f64) -> Result<f64> {
        let (lo, hi) = (self.vertices[0].0, self.vertices[self.vertices.len() - 1].0);
        if !(y >= lo && y <= hi) {
            return Err(Error::invalid("/y", format!("{y} outside [{lo}, {hi}]")));
        }
        let (a, b) = self.segment(y);
        if b.0 == a.0 {
            return Ok(a.1);
        }
        Ok(a.1 + (b.1 - a.1) * (y - a.0) / (b.0 - a.0))
    }

    /// The hull edge containing `y`.
    fn segment(&self, y: f64) -> ((f64, f64), (f64, f64)) {
        let v = &self.vertices;
        if v.len() == 1 {
            return (v[0], v[0]);
        }
        let i = v.partition_point(|p| p.0 <= y).clamp(1, v.len() - 1);
        (v[i - 1], v[i])
    }
}

/// Lower convex hull of `points`. The abscissae must be distinct and include 0.
pub fn lower_convex_envelope(points: &[(f64, f64)]) -> Result<Envelope> {
    if points.is_empty() {
        return Err(Error::invalid("/points", "no points given"));
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::invalid("/points", "coordinates must be finite"));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::invalid("/points", "abscissae must be distinct"));
    }
    if !pts.iter().any(|p| p.0 == 0.0) {
        return Err(Error::invalid("/points", "the origin abscissa 0 is required"));
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // Drop b when it lies on or above the chord from a to p.
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    Ok(Envelope { vertices: hull })
}

/// A contract whose convex envelope drops below `ell* y` somewhere above `ybar`, with the
/// mixture of outputs that games it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GamingWitness {
    /// The contract as `(y, w(y))` pairs on the probe set.
    pub contract: Vec<(f64, f64)>,
    pub y1: f64,
    pub y2: f64,
    /// Weight on `y1`.
    pub p_mix: f64,
    /// The output at which the envelope falls short.
    pub at: f64,
}

/// Outcome of the three necessary conditions on a probe set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NecessityReport {
    pub band_ok: bool,
    /// First probe `(y, minimum guarantee)` outside the band.
    pub band_violation: Option<(f64, f64)>,
    pub gaming_ok: bool,
    pub gaming_witness: Option<GamingWitness>,
    pub flexibility_ok: bool,
    /// First `(y, lo, hi)` with `[lo, hi]` required but missing from the image at `y`.
    pub flexibility_gap: Option<(f64, f64, f64)>,
    pub rho_star: f64,
    /// Probed outputs, after restricting grid-bound regulations to their own levels.
    pub probes: Vec<f64>,
    /// Number of straddling probe pairs the gaming check could use.
    pub mixture_pairs: usize,
}

impl NecessityReport {
    pub fn all_ok(&self) -> bool {
        self.band_ok && self.gaming_ok && self.flexibility_ok
    }
}

/// `count` evenly spaced outputs on `[0, 2 ybar]`.
pub fn default_probes(p: &Params, count: usize) -> Vec<f64> {
    let top = 2.0 * p.ybar();
    let n = count.max(2);
    (0..n).map(|i| top * i as f64 / (n - 1) as f64).collect()
}

fn tol(y: f64) -> f64 {
    EPS_TOL * y.abs().max(1.0)
}

fn band_bounds(y: f64, p: &Params) -> (f64, f64) {
    let (ls, yb) = (p.ell_star(), p.ybar());
    if y >= yb {
        (ls * y, ls * y)
    } else {
        ((y - (1.0 - ls) * yb).max(0.0), y.min(ls * yb))
    }
}

/// Checks the protection band, robustness to gaming and minimal flexibility on `y_probe`.
///
/// Grid-bound regulations are probed at their own levels. The gaming check uses, for each
/// probe `y0 >= ybar` where `ell* y0` is admissible, the pointwise-least admissible contract
/// paying `ell* y0` there; linear families can only offer linear contracts and always pass it.
pub fn necessity_check(r: &Regulation, p: &Params, y_probe: &[f64]) -> Result<NecessityReport> {
    r.validate()?;
    let (ls, yb) = (p.ell_star(), p.ybar());
    let rho = p.rho_star();
    let mut probes: Vec<f64> = match r.own_grid() {
        Some(g) => g.to_vec(),
        None => y_probe.iter().cloned().filter(|y| y.is_finite() && *y >= 0.0).collect(),
    };
    if !probes.contains(&0.0) {
        probes.push(0.0);
    }
    probes.sort_by(f64::total_cmp);
    probes.dedup();

    let floor: Vec<f64> = probes.iter().map(|&y| r.min_guarantee(y)).collect::<Result<_>>()?;

    let band_violation = probes.iter().zip(&floor).find_map(|(&y, &w)| {
        let (lo, hi) = band_bounds(y, p);
        (w < lo - tol(y) || w > hi + tol(y)).then_some((y, w))
    });

    let mut flexibility_gap = None;
    for &y in probes.iter().filter(|&&y| y >= yb) {
        if let Some((lo, hi)) = uncovered(&r.image(y)?, ls * y, (1.0 - rho) * y, tol(y)) {
            flexibility_gap = Some((y, lo, hi));
            break;
        }
    }

    let upper: Vec<usize> = (0..probes.len()).filter(|&i| probes[i] >= yb).collect();
    let mixture_pairs = probes.iter().filter(|&&y| y < yb).count() * upper.len();
    let gaming_witness = if matches!(r, Regulation::LinearFamily { .. }) {
        None
    } else {
        gaming_search(r, &probes, &floor, &upper, ls)?
    };

    Ok(NecessityReport {
        band_ok: band_violation.is_none(),
        band_violation,
        gaming_ok: gaming_witness.is_none(),
        gaming_witness,
        flexibility_ok: flexibility_gap.is_none(),
        flexibility_gap,
        rho_star: rho,
        probes,
        mixture_pairs,
    })
}

fn gaming_search(
    r: &Regulation,
    probes: &[f64],
    floor: &[f64],
    upper: &[usize],
    ls: f64,
) -> Result<Option<GamingWitness>> {
    for &i0 in upper {
        let y0 = probes[i0];
        let target = ls * y0;
        let admissible = r
            .image(y0)?
            .iter()
            .any(|&(lo, hi)| target >= lo - tol(y0) && target <= hi + tol(y0));
        if !admissible {
            continue;
        }
        let mut contract: Vec<(f64, f64)> = probes.iter().cloned().zip(floor.iter().cloned()).collect();
        contract[i0].1 = contract[i0].1.max(target);
        let env = lower_convex_envelope(&contract)?;
        for &j in upper {
            let y = probes[j];
            if env.eval(y)? < ls * y - tol(y) {
                let (a, b) = env.segment(y);
                let p_mix = if b.0 > a.0 { (b.0 - y) / (b.0 - a.0) } else { 1.0 };
                return Ok(Some(GamingWitness { contract, y1: a.0, y2: b.0, p_mix, at: y }));
            }
        }
    }
    Ok(None)
}

/// First piece of `[lo, hi]` not covered by the union of `intervals`, if any.
fn uncovered(intervals: &[(f64, f64)], lo: f64, hi: f64, tol: f64) -> Option<(f64, f64)> {
    let mut ivs = intervals.to_vec();
    ivs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut reach = lo;
    for (a, b) in ivs {
        if a > reach + tol {
            break;
        }
        reach = reach.max(b);
        if reach >= hi - tol {
            return None;
        }
    }
    if reach >= hi - tol {
        None
    } else {
        let next = intervals
            .iter()
            .map(|iv| iv.0)
            .filter(|&a| a > reach + tol)
            .fold(hi, f64::min);
        Some((reach, next.min(hi)))
    }
}

/// One row of the comparative statics in `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub ell_star: f64,
    pub rbar: f64,
    pub branch_no_production: f64,
    pub branch_extraction: f64,
}

/// Closed-form minmax piece rate and regret for each `alpha`, at the given `ybar`.
pub fn sweep_alpha(alphas: &[f64], ybar: f64) -> Result<Vec<SweepRow>> {
    alphas
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let p = Params::new(a, ybar).map_err(|e| match e {
                Error::Validation { reason, .. } => Error::invalid(format!("/alphas/{i}"), reason),
                other => other,
            })?;
            let l = p.ell_star();
            Ok(SweepRow {
                alpha: a,
                ell_star: l,
                rbar: p.rbar(),
                branch_no_production: branch_no_production(l, &p)?,
                branch_extraction: branch_extraction(l, &p)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(alpha: f64) -> Params {
        Params::new(alpha, 1.0).unwrap()
    }

    #[test]
    fn envelope_examples() {
        let line = lower_convex_envelope(&[(0.0, 0.0), (1.0, 0.5), (2.0, 1.0)]).unwrap();
        assert!((line.eval(1.5).unwrap() - 0.75).abs() < 1e-15);
        let e = lower_convex_envelope(&[(0.0, 0.0), (1.0, 0.8), (2.0, 0.4)]).unwrap();
        assert!((e.eval(1.0).unwrap() - 0.2).abs() < 1e-15);
        let e = lower_convex_envelope(&[(0.0, 0.0), (2.0, 1.0)]).unwrap();
        assert!((e.eval(0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!(lower_convex_envelope(&[]).is_err());
        assert!(lower_convex_envelope(&[(0.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(lower_convex_envelope(&[(1.0, 0.0)]).is_err());
        assert!(e.eval(3.0).is_err());
    }

    #[test]
    fn optimal_regulation_passes() {
        for alpha in [1.0, 2.0, 5.0, 100.0] {
            let pp = p(alpha);
            let rep = necessity_check(&Regulation::optimal(&pp), &pp, &default_probes(&pp, 200)).unwrap();
            assert!(rep.all_ok(), "{alpha}: {rep:?}");
            assert!((rep.rho_star - (-1.0 / alpha).exp() * (1.0 - pp.ell_star())).abs() < 1e-12);
        }
    }

    #[test]
    fn low_floor_fails_band() {
        let pp = p(2.0);
        let probes = default_probes(&pp, 200);
        let grid = probes.clone();
        let floor = grid.iter().map(|y| 0.5 * pp.ell_star() * y).collect();
        let r = Regulation::minimum_contract(grid, floor).unwrap();
        let rep = necessity_check(&r, &pp, &probes).unwrap();
        // The lower band edge y - (1 - ell*) ybar already binds below ybar.
        let (y, w) = rep.band_violation.unwrap();
        assert!(y > 0.8 - 0.02 && y < 1.0);
        assert!(w < y - (1.0 - pp.ell_star()));
    }

    #[test]
    fn single_linear_contract_fails_flexibility() {
        let pp = p(2.0);
        let r = Regulation::linear_family(vec![pp.ell_star()]).unwrap();
        let rep = necessity_check(&r, &pp, &default_probes(&pp, 200)).unwrap();
        assert!(rep.band_ok && rep.gaming_ok);
        assert!(!rep.flexibility_ok);
    }

    #[test]
    fn dented_floor_fails_gaming() {
        let pp = p(2.0);
        let ls = pp.ell_star();
        let grid = vec![0.0, 0.5, 1.0, 1.5];
        let r = Regulation::minimum_contract(grid.clone(), vec![0.0, 0.2, ls, 0.2]).unwrap();
        let rep = necessity_check(&r, &pp, &[]).unwrap();
        let w = rep.gaming_witness.expect("the floor dips below ell* y at 1.5");
        assert!(w.y2 >= 1.0);
    }

    #[test]
    fn sweep_examples() {
        let rows = sweep_alpha(&[1.0, 2.0, 5.0], 1.0).unwrap();
        let ls: Vec<f64> = rows.iter().map(|r| r.ell_star).collect();
        assert!((ls[0]).abs() < 1e-15 && (ls[1] - 1.0 / 3.0).abs() < 1e-15 && (ls[2] - 4.0 / 9.0).abs() < 1e-15);
        assert!((rows[0].rbar - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(sweep_alpha(&[3.0], 1.0).unwrap().len(), 1);
        assert!(matches!(sweep_alpha(&[2.0, 0.5], 1.0), Err(Error::Validation { path, .. }) if path == "/alphas/1"));
    }

    proptest! {
        #[test]
        fn envelope_is_convex_minorant(ws in proptest::collection::vec(0.0f64..1.0, 2..12)) {
            let pts: Vec<(f64, f64)> = ws.iter().enumerate().map(|(i, &w)| (i as f64, w)).collect();
            let e = lower_convex_envelope(&pts).unwrap();
            for &(y, w) in &pts {
                prop_assert!(e.eval(y).unwrap() <= w + 1e-12);
            }
            for t in pts.windows(3) {
                let (a, b, c) = (e.eval(t[0].0).unwrap(), e.eval(t[1].0).unwrap(), e.eval(t[2].0).unwrap());
                prop_assert!(b <= 0.5 * (a + c) + 1e-12);
            }
        }
    }
}
