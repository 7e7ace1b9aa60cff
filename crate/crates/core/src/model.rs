//! Domain types: output grids, actions, technologies, contracts and regulations.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Global tolerance for money comparisons.
pub const EPS_TOL: f64 = 1e-9;

/// Upper cap on the surplus weight; keeps `exp(-1/alpha)` paths well conditioned.
pub const ALPHA_MAX: f64 = 1e12;

const LEVEL_MATCH: f64 = 1e-12;
const PROB_SUM_TOL: f64 = 1e-12;

/// Economy-wide parameters: the weight on worker surplus and the bound on expected output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    alpha: f64,
    ybar: f64,
}

impl Params {
    pub fn new(alpha: f64, ybar: f64) -> Result<Self> {
        if !alpha.is_finite() || !(1.0..=ALPHA_MAX).contains(&alpha) {
            return Err(Error::invalid("/alpha", format!("alpha must lie in [1, {ALPHA_MAX:e}], got {alpha}")));
        }
        if !ybar.is_finite() || ybar <= 0.0 {
            return Err(Error::invalid("/ybar", format!("ybar must be positive, got {ybar}")));
        }
        Ok(Params { alpha, ybar })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn ybar(&self) -> f64 {
        self.ybar
    }

    /// The welfare-optimal minimum piece rate `(alpha-1)/(2alpha-1)`.
    pub fn ell_star(&self) -> f64 {
        (self.alpha - 1.0) / (2.0 * self.alpha - 1.0)
    }

    /// Profit-share rate `exp(-1/alpha)(1 - ell*)`.
    pub fn rho_star(&self) -> f64 {
        (-1.0 / self.alpha).exp() * (1.0 - self.ell_star())
    }

    /// Minimal worst-case regret `alpha^2 exp(-1/alpha) ybar / (2alpha-1)`.
    pub fn rbar(&self) -> f64 {
        let a = self.alpha;
        a * a * (-1.0 / a).exp() * self.ybar / (2.0 * a - 1.0)
    }
}

/// Finite output space. Strictly increasing, first level is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OutputGrid(Vec<f64>);

impl OutputGrid {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        Self::check(&levels, "/grid")?;
        Ok(OutputGrid(levels))
    }

    pub(crate) fn check(levels: &[f64], path: &str) -> Result<()> {
        if levels.is_empty() {
            return Err(Error::invalid(path, "grid is empty"));
        }
        if levels[0] != 0.0 {
            return Err(Error::invalid(format!("{path}/0"), "first grid level must be 0"));
        }
        for (i, &y) in levels.iter().enumerate() {
            if !y.is_finite() || y < 0.0 {
                return Err(Error::invalid(format!("{path}/{i}"), "grid levels must be finite and nonnegative"));
            }
            if i > 0 && y <= levels[i - 1] {
                return Err(Error::invalid(format!("{path}/{i}"), "grid levels must be strictly increasing"));
            }
        }
        Ok(())
    }

    /// Two-point grid `{0, top}`.
    pub fn binary(top: f64) -> Result<Self> {
        Self::new(vec![0.0, top])
    }

    pub fn levels(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn top(&self) -> f64 {
        *self.0.last().expect("grid is nonempty")
    }

    /// Index of the level equal to `y` (relative tolerance 1e-12).
    pub fn position(&self, y: f64) -> Option<usize> {
        self.0.iter().position(|&l| levels_match(l, y))
    }
}

pub(crate) fn levels_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= LEVEL_MATCH * a.abs().max(b.abs()).max(1.0)
}

/// An effort cost paired with an output distribution on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub effort: f64,
    pub probs: Vec<f64>,
}

impl Action {
    pub fn new(effort: f64, probs: Vec<f64>) -> Self {
        Action { effort, probs }
    }

    /// Expected output on `grid`.
    pub fn mean(&self, grid: &OutputGrid) -> Result<f64> {
        if self.probs.len() != grid.len() {
            return Err(Error::invalid(
                "/probs",
                format!("{} probabilities for {} grid levels", self.probs.len(), grid.len()),
            ));
        }
        Ok(dot(&self.probs, grid.levels()))
    }

    /// Binary action on `{0, top}` with mean `mu` and cost `effort`.
    pub fn binary(mu: f64, effort: f64, top: f64) -> Result<Self> {
        if !(top > 0.0) || !mu.is_finite() {
            return Err(Error::invalid("/top", "top output must be positive"));
        }
        if mu < 0.0 || mu > top * (1.0 + LEVEL_MATCH) {
            return Err(Error::invalid("/mu", format!("mean {mu} outside [0, {top}]")));
        }
        let q = (mu / top).min(1.0);
        Ok(Action::new(effort, vec![1.0 - q, q]))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A fixed production cost and a nonempty menu of actions over one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Technology {
    k: f64,
    grid: OutputGrid,
    actions: Vec<Action>,
    means: Vec<f64>,
}

impl Technology {
    /// Builds a technology and checks every structural invariant except the `ybar` bound,
    /// which needs [`Params`] and is reported by [`validate_technology`].
    pub fn new(k: f64, grid: OutputGrid, actions: Vec<Action>) -> Result<Self> {
        let violations = structural_violations(k, &grid, &actions);
        if let Some((path, reason)) = violations.into_iter().next() {
            return Err(Error::invalid(path, reason));
        }
        let means = actions.iter().map(|a| dot(&a.probs, grid.levels())).collect();
        Ok(Technology { k, grid, actions, means })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn grid(&self) -> &OutputGrid {
        &self.grid
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn mean(&self, idx: usize) -> f64 {
        self.means[idx]
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// True when every action puts mass only on 0 and the top level.
    pub fn is_binary(&self) -> bool {
        let n = self.grid.len();
        n <= 2 || self.actions.iter().all(|a| a.probs[1..n - 1].iter().all(|&p| p == 0.0))
    }

    pub fn with_k(&self, k: f64) -> Result<Self> {
        Technology::new(k, self.grid.clone(), self.actions.clone())
    }
}

fn structural_violations(k: f64, grid: &OutputGrid, actions: &[Action]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    if !k.is_finite() || k < 0.0 {
        out.push(("/k".into(), format!("production cost must be finite and nonnegative, got {k}")));
    }
    if let Err(Error::Validation { path, reason }) = OutputGrid::check(grid.levels(), "/grid") {
        out.push((path, reason));
    }
    if actions.is_empty() {
        out.push(("/actions".into(), "technology needs at least one action".into()));
    }
    for (i, a) in actions.iter().enumerate() {
        if !a.effort.is_finite() || a.effort < 0.0 {
            out.push((format!("/actions/{i}/e"), "effort cost must be finite and nonnegative".into()));
        }
        if a.probs.len() != grid.len() {
            out.push((
                format!("/actions/{i}/probs"),
                format!("{} probabilities for {} grid levels", a.probs.len(), grid.len()),
            ));
            continue;
        }
        if let Some(j) = a.probs.iter().position(|p| !p.is_finite() || !(0.0..=1.0).contains(p)) {
            out.push((format!("/actions/{i}/probs/{j}"), "probability outside [0, 1]".into()));
        }
        let s: f64 = a.probs.iter().sum();
        if (s - 1.0).abs() > PROB_SUM_TOL {
            out.push((format!("/actions/{i}/probs"), format!("probabilities do not sum to 1 (sum {s})")));
        }
    }
    out
}

/// All invariant violations of `t` under `p`, as `(path, reason)` pairs.
pub fn validate_technology(t: &Technology, p: &Params) -> Vec<(String, String)> {
    let mut out = structural_violations(t.k, &t.grid, &t.actions);
    for (i, &m) in t.means.iter().enumerate() {
        if m > p.ybar() + 1e-12 {
            out.push((format!("/actions/{i}/probs"), format!("mean exceeds ybar ({m} > {})", p.ybar())));
        }
    }
    out
}

/// Payment schedule on a grid with `0 <= w(y) <= y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    grid: OutputGrid,
    payments: Vec<f64>,
}

impl Contract {
    pub fn new(grid: OutputGrid, payments: Vec<f64>) -> Result<Self> {
        if payments.len() != grid.len() {
            return Err(Error::invalid("/payments", "one payment per grid level required"));
        }
        for (i, (&w, &y)) in payments.iter().zip(grid.levels()).enumerate() {
            if !w.is_finite() || w < -EPS_TOL || w > y + EPS_TOL * y.max(1.0) {
                return Err(Error::invalid(format!("/payments/{i}"), format!("payment {w} violates 0 <= w <= {y}")));
            }
        }
        let payments = payments
            .iter()
            .zip(grid.levels())
            .map(|(&w, &y)| w.clamp(0.0, y))
            .collect();
        Ok(Contract { grid, payments })
    }

    /// Linear schedule `w(y) = slope * y`.
    pub fn linear(grid: &OutputGrid, slope: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&slope) {
            return Err(Error::invalid("/slope", "slope must lie in [0, 1]"));
        }
        Contract::new(grid.clone(), grid.levels().iter().map(|y| slope * y).collect())
    }

    pub fn grid(&self) -> &OutputGrid {
        &self.grid
    }

    pub fn payments(&self) -> &[f64] {
        &self.payments
    }

    pub fn expected(&self, action: &Action) -> f64 {
        dot(&self.payments, &action.probs)
    }
}

/// A closed set of admissible contracts, in one of five finite encodings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Regulation {
    /// Every limited-liability contract (laissez-faire).
    All,
    /// Contracts pointwise above `ell * y`.
    Mpr { ell: f64 },
    /// Contracts pointwise above a floor given on a grid.
    MinimumContract { grid: Vec<f64>, floor: Vec<f64> },
    /// Only the linear contracts with the listed slopes.
    LinearFamily { slopes: Vec<f64> },
    /// Payments at each grid level restricted to a union of closed intervals.
    ImageConstrained { grid: Vec<f64>, intervals: Vec<Vec<(f64, f64)>> },
}

/// Per-level admissible payments, used by the solvers.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum ContractSpace {
    /// Product over levels of unions of intervals.
    Boxes(Vec<Vec<(f64, f64)>>),
    /// Finite set of linear contracts.
    Slopes(Vec<f64>),
}

impl Regulation {
    pub fn mpr(ell: f64) -> Result<Self> {
        let r = Regulation::Mpr { ell };
        r.validate()?;
        Ok(r)
    }

    pub fn minimum_contract(grid: Vec<f64>, floor: Vec<f64>) -> Result<Self> {
        let r = Regulation::MinimumContract { grid, floor };
        r.validate()?;
        Ok(r)
    }

    pub fn linear_family(slopes: Vec<f64>) -> Result<Self> {
        let r = Regulation::LinearFamily { slopes };
        r.validate()?;
        Ok(r)
    }

    pub fn image_constrained(grid: Vec<f64>, intervals: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        let r = Regulation::ImageConstrained { grid, intervals };
        r.validate()?;
        Ok(r)
    }

    /// The optimal regulation `C*_alpha`: an MPR floor at `ell*`.
    pub fn optimal(p: &Params) -> Self {
        Regulation::Mpr { ell: p.ell_star() }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Regulation::All => Ok(()),
            Regulation::Mpr { ell } => {
                if !ell.is_finite() || !(0.0..=1.0).contains(ell) {
                    return Err(Error::invalid("/ell", format!("slope {ell} outside [0, 1]")));
                }
                Ok(())
            }
            Regulation::MinimumContract { grid, floor } => {
                OutputGrid::check(grid, "/grid")?;
                if floor.len() != grid.len() {
                    return Err(Error::invalid("/floor", "one floor value per grid level required"));
                }
                for (i, (&f, &y)) in floor.iter().zip(grid).enumerate() {
                    if !f.is_finite() || f < 0.0 || f > y {
                        return Err(Error::invalid(format!("/floor/{i}"), format!("floor {f} violates 0 <= floor <= {y}")));
                    }
                }
                Ok(())
            }
            Regulation::LinearFamily { slopes } => {
                if slopes.is_empty() {
                    return Err(Error::invalid("/slopes", "slope list is empty"));
                }
                for (i, s) in slopes.iter().enumerate() {
                    if !s.is_finite() || !(0.0..=1.0).contains(s) {
                        return Err(Error::invalid(format!("/slopes/{i}"), format!("slope {s} outside [0, 1]")));
                    }
                }
                Ok(())
            }
            Regulation::ImageConstrained { grid, intervals } => {
                OutputGrid::check(grid, "/grid")?;
                if intervals.len() != grid.len() {
                    return Err(Error::invalid("/intervals", "one interval list per grid level required"));
                }
                for (i, (list, &y)) in intervals.iter().zip(grid).enumerate() {
                    if list.is_empty() {
                        return Err(Error::invalid(format!("/intervals/{i}"), "interval list is empty"));
                    }
                    for (j, &(lo, hi)) in list.iter().enumerate() {
                        if !lo.is_finite() || !hi.is_finite() || lo > hi || lo < 0.0 || hi > y {
                            return Err(Error::invalid(
                                format!("/intervals/{i}/{j}"),
                                format!("interval [{lo}, {hi}] not inside [0, {y}]"),
                            ));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Least payment at output `y` over all admissible contracts.
    pub fn min_guarantee(&self, y: f64) -> Result<f64> {
        if !y.is_finite() || y < 0.0 {
            return Err(Error::invalid("/y", "output must be finite and nonnegative"));
        }
        match self {
            Regulation::All => Ok(0.0),
            Regulation::Mpr { ell } => Ok(ell * y),
            Regulation::LinearFamily { slopes } => Ok(slopes.iter().cloned().fold(f64::INFINITY, f64::min) * y),
            Regulation::MinimumContract { grid, floor } => {
                let i = find_level(grid, y)?;
                Ok(floor[i])
            }
            Regulation::ImageConstrained { grid, intervals } => {
                let i = find_level(grid, y)?;
                Ok(intervals[i].iter().map(|iv| iv.0).fold(f64::INFINITY, f64::min))
            }
        }
    }

    /// Payments admissible at output `y`, as a union of closed intervals.
    pub fn image(&self, y: f64) -> Result<Vec<(f64, f64)>> {
        match self {
            Regulation::All => Ok(vec![(0.0, y)]),
            Regulation::Mpr { ell } => Ok(vec![(ell * y, y)]),
            Regulation::LinearFamily { slopes } => Ok(slopes.iter().map(|s| (s * y, s * y)).collect()),
            Regulation::MinimumContract { grid, floor } => Ok(vec![(floor[find_level(grid, y)?], y)]),
            Regulation::ImageConstrained { grid, intervals } => Ok(intervals[find_level(grid, y)?].clone()),
        }
    }

    /// Whether the kind is only defined on its own grid levels.
    pub fn is_grid_bound(&self) -> bool {
        matches!(self, Regulation::MinimumContract { .. } | Regulation::ImageConstrained { .. })
    }

    /// The regulation's own grid, for grid-bound kinds.
    pub fn own_grid(&self) -> Option<&[f64]> {
        match self {
            Regulation::MinimumContract { grid, .. } | Regulation::ImageConstrained { grid, .. } => Some(grid),
            _ => None,
        }
    }

    /// Whether `w` satisfies the regulation within `tol`.
    pub fn contract_allowed(&self, w: &Contract, tol: f64) -> bool {
        let levels = w.grid().levels();
        match self {
            Regulation::LinearFamily { slopes } => slopes.iter().any(|s| {
                levels
                    .iter()
                    .zip(w.payments())
                    .all(|(y, p)| (p - s * y).abs() <= tol)
            }),
            _ => levels.iter().zip(w.payments()).all(|(&y, &p)| match self.image(y) {
                Ok(ivs) => ivs.iter().any(|&(lo, hi)| p >= lo - tol && p <= hi + tol),
                Err(_) => false,
            }),
        }
    }

    /// Admissible payments per level of `grid`, intersected with `[0, y]`.
    pub(crate) fn contract_space(&self, grid: &OutputGrid) -> Result<ContractSpace> {
        if let Regulation::LinearFamily { slopes } = self {
            return Ok(ContractSpace::Slopes(slopes.clone()));
        }
        let mut boxes = Vec::with_capacity(grid.len());
        for &y in grid.levels() {
            let ivs = self.image(y).map_err(|_| {
                Error::Unsupported(format!("technology output level {y} is not on the regulation grid"))
            })?;
            let clipped: Vec<(f64, f64)> = ivs
                .into_iter()
                .map(|(lo, hi)| (lo.max(0.0), hi.min(y)))
                .filter(|(lo, hi)| lo <= hi)
                .collect();
            boxes.push(clipped);
        }
        Ok(ContractSpace::Boxes(boxes))
    }
}

fn find_level(grid: &[f64], y: f64) -> Result<usize> {
    grid.iter()
        .position(|&l| levels_match(l, y))
        .ok_or_else(|| Error::invalid("/y", format!("output {y} is not a level of the regulation grid")))
}

/// Outcome of the contracting game. `contract` and `action_index` are absent on exit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOutcome {
    pub participated: bool,
    pub contract: Option<Contract>,
    pub action_index: Option<usize>,
    pub profit: f64,
    pub worker_surplus: f64,
}

impl EquilibriumOutcome {
    pub fn exit() -> Self {
        EquilibriumOutcome {
            participated: false,
            contract: None,
            action_index: None,
            profit: 0.0,
            worker_surplus: 0.0,
        }
    }
}
