//! Seeded random search over binary technologies.

use super::constructions::{
    construct_single_action, extraction_family, no_production_family, optimal_k_no_production, optimal_mu_f,
};
use crate::error::{Error, Result};
use crate::model::{Action, OutputGrid, Params, Regulation, Technology};
use crate::regret::regret;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Share of the random candidates that get hill-climbed.
pub const CLIMB_SHARE: f64 = 0.01;
/// Halving rounds of the coordinate search.
pub const CLIMB_ROUNDS: usize = 8;
/// Initial step as a share of each coordinate's range.
pub const CLIMB_STEP: f64 = 0.1;
/// Actions in each seeded construction.
pub const SEED_ACTIONS: usize = 400;

/// Search settings. Every candidate draws from its own ChaCha8 stream of `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub seed: u64,
    pub budget: usize,
    pub max_actions: usize,
    pub k_range: (f64, f64),
    pub mean_range: (f64, f64),
    /// The top output level of every candidate.
    pub grid_top: f64,
}

impl SearchConfig {
    /// Binary candidates on `{0, ybar}` with `k` and means anywhere in `[0, ybar]`.
    pub fn standard(p: &Params, seed: u64, budget: usize, max_actions: usize) -> Self {
        SearchConfig {
            seed,
            budget,
            max_actions,
            k_range: (0.0, p.ybar()),
            mean_range: (0.0, p.ybar()),
            grid_top: p.ybar(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::invalid("/budget", "budget must be at least 1"));
        }
        if self.max_actions == 0 {
            return Err(Error::invalid("/max_actions", "need at least one action"));
        }
        if !(self.grid_top.is_finite() && self.grid_top > 0.0) {
            return Err(Error::invalid("/grid_top", "top output must be positive"));
        }
        let ok = |(lo, hi): (f64, f64), cap: f64| lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi && hi <= cap;
        if !ok(self.k_range, f64::MAX) {
            return Err(Error::invalid("/k_range", "need 0 <= lo <= hi"));
        }
        if !ok(self.mean_range, self.grid_top) {
            return Err(Error::invalid("/mean_range", "need 0 <= lo <= hi <= grid_top"));
        }
        Ok(())
    }
}

/// Draws `k`, between 1 and `max_actions` means, and costs uniform on `[0, mean]`.
pub fn random_binary_technology<R: Rng>(cfg: &SearchConfig, rng: &mut R) -> Result<Technology> {
    cfg.validate()?;
    let g = draw_genome(cfg, rng);
    g.build(cfg.grid_top)
}

fn draw(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

fn draw_genome(cfg: &SearchConfig, rng: &mut impl Rng) -> Genome {
    let k = draw(rng, cfg.k_range);
    let n = rng.gen_range(1..=cfg.max_actions);
    let means: Vec<f64> = (0..n).map(|_| draw(rng, cfg.mean_range)).collect();
    let costs = means.iter().map(|&m| draw(rng, (0.0, m))).collect();
    Genome { k, means, costs }
}

/// A binary technology as a flat coordinate vector: `k`, then means, then costs.
#[derive(Debug, Clone)]
struct Genome {
    k: f64,
    means: Vec<f64>,
    costs: Vec<f64>,
}

impl Genome {
    fn build(&self, top: f64) -> Result<Technology> {
        let actions = self
            .means
            .iter()
            .zip(&self.costs)
            .map(|(&m, &e)| Action::binary(m, e, top))
            .collect::<Result<Vec<_>>>()?;
        Technology::new(self.k, OutputGrid::binary(top)?, actions)
    }

    fn dims(&self) -> usize {
        1 + 2 * self.means.len()
    }

    /// Moves coordinate `c` by `delta` and clamps it into its box. `None` if nothing moved.
    fn nudged(&self, c: usize, delta: f64, cfg: &SearchConfig) -> Option<Genome> {
        let n = self.means.len();
        let mut g = self.clone();
        if c == 0 {
            g.k = (g.k + delta).clamp(cfg.k_range.0, cfg.k_range.1);
        } else if c <= n {
            let i = c - 1;
            g.means[i] = (g.means[i] + delta).clamp(cfg.mean_range.0, cfg.mean_range.1);
            g.costs[i] = g.costs[i].min(g.means[i]);
        } else {
            let i = c - 1 - n;
            g.costs[i] = (g.costs[i] + delta).clamp(0.0, g.means[i]);
        }
        let same = g.k == self.k && g.means == self.means && g.costs == self.costs;
        (!same).then_some(g)
    }

    fn range(&self, c: usize, cfg: &SearchConfig) -> f64 {
        if c == 0 {
            cfg.k_range.1 - cfg.k_range.0
        } else if c <= self.means.len() {
            cfg.mean_range.1 - cfg.mean_range.0
        } else {
            cfg.mean_range.1
        }
    }
}

/// Where the best candidate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateOrigin {
    NoProduction,
    Extraction,
    SingleAction,
    Random,
    HillClimbed,
}

impl CandidateOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            CandidateOrigin::NoProduction => "no_production",
            CandidateOrigin::Extraction => "extraction",
            CandidateOrigin::SingleAction => "single_action",
            CandidateOrigin::Random => "random",
            CandidateOrigin::HillClimbed => "hill_climbed",
        }
    }
}

/// Result of [`adversarial_search`] with the settings needed to reproduce it.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub technology: Technology,
    pub regret: f64,
    /// Index of the winning candidate: constructions first, then random draws.
    pub candidate_index: usize,
    pub origin: CandidateOrigin,
    pub evaluations: usize,
    pub seed: u64,
    pub budget: usize,
    /// Floor share `w(top)/top` the constructions target.
    pub floor_share: f64,
    pub k_star: Option<f64>,
    pub mu_f_star: f64,
    pub climbed: usize,
}

/// Worker threads from `REGRETFORGE_THREADS`; 0 or unset means rayon's default.
pub fn thread_count() -> usize {
    std::env::var("REGRETFORGE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

struct Seeded {
    technology: Technology,
    origin: CandidateOrigin,
}

fn constructions(r: &Regulation, p: &Params, top: f64) -> Result<(Vec<Seeded>, f64, Option<f64>, f64)> {
    let s = (r.min_guarantee(top)? / top).clamp(0.0, 1.0);
    let mean_hi = top.min(p.ybar());
    let mut out = Vec::new();
    let mut k_star = None;
    if s <= 0.5 {
        let k = optimal_k_no_production(s * mean_hi, mean_hi)?;
        if k / (1.0 - s) < mean_hi {
            out.push(Seeded {
                technology: no_production_family(s, top, k, mean_hi, SEED_ACTIONS)?,
                origin: CandidateOrigin::NoProduction,
            });
            k_star = Some(k);
        }
    }
    let mu_f = optimal_mu_f(p, mean_hi);
    if s < 1.0 {
        out.push(Seeded {
            technology: extraction_family(s, top, mu_f, mean_hi, SEED_ACTIONS)?,
            origin: CandidateOrigin::Extraction,
        });
    }
    if s > 0.0 && s < 1.0 {
        // Exactly at the exit threshold: the firm leaves and the regulator loses alpha * s * top.
        out.push(Seeded {
            technology: construct_single_action(top, (1.0 - s) * top)?,
            origin: CandidateOrigin::SingleAction,
        });
    }
    Ok((out, s, k_star, mu_f))
}

fn score(t: &Technology, r: &Regulation, p: &Params) -> Result<f64> {
    Ok(regret(t, r, p)?.regret)
}

fn climb(start: Genome, mut best: f64, r: &Regulation, p: &Params, cfg: &SearchConfig) -> Result<(Genome, f64, usize)> {
    let mut g = start;
    let mut evals = 0;
    for round in 0..CLIMB_ROUNDS {
        let scale = CLIMB_STEP * 0.5f64.powi(round as i32);
        for c in 0..g.dims() {
            let step = scale * g.range(c, cfg);
            if step <= 0.0 {
                continue;
            }
            for delta in [step, -step] {
                let Some(next) = g.nudged(c, delta, cfg) else { continue };
                evals += 1;
                let v = score(&next.build(cfg.grid_top)?, r, p)?;
                if v > best {
                    best = v;
                    g = next;
                    break;
                }
            }
        }
    }
    Ok((g, best, evals))
}

fn run<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}

/// First index attaining the largest value.
fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Largest regret found over the seeded constructions, `budget` random binary technologies
/// and hill-climbed refinements of the best random ones. Deterministic for a given seed,
/// whatever the thread count.
pub fn adversarial_search(r: &Regulation, p: &Params, cfg: &SearchConfig) -> Result<SearchOutcome> {
    adversarial_search_with_threads(r, p, cfg, thread_count())
}

/// [`adversarial_search`] on a pool of `threads` workers (0 picks the machine default).
pub fn adversarial_search_with_threads(
    r: &Regulation,
    p: &Params,
    cfg: &SearchConfig,
    threads: usize,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    r.validate()?;
    let (seeded, s, k_star, mu_f) = constructions(r, p, cfg.grid_top)?;
    let offset = seeded.len();

    run(threads, || -> Result<SearchOutcome> {
        let seeded_scores = seeded
            .par_iter()
            .map(|c| score(&c.technology, r, p))
            .collect::<Result<Vec<_>>>()?;
        let random_scores = (0..cfg.budget)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(i as u64);
                score(&draw_genome(cfg, &mut rng).build(cfg.grid_top)?, r, p)
            })
            .collect::<Result<Vec<_>>>()?;

        let n_climb = ((cfg.budget as f64) * CLIMB_SHARE).ceil() as usize;
        let mut order: Vec<usize> = (0..cfg.budget).collect();
        order.sort_by(|&a, &b| random_scores[b].total_cmp(&random_scores[a]).then(a.cmp(&b)));
        order.truncate(n_climb);
        let climbed = order
            .par_iter()
            .map(|&i| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(i as u64);
                climb(draw_genome(cfg, &mut rng), random_scores[i], r, p, cfg)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut all = seeded_scores.clone();
        all.extend(&random_scores);
        let mut best = argmax(&all).expect("budget is positive");
        let mut origin = if best < offset { seeded[best].origin } else { CandidateOrigin::Random };
        let mut best_value = all[best];
        let mut winner: Option<Genome> = None;
        for (&i, (g, v, _)) in order.iter().zip(&climbed) {
            let idx = offset + i;
            if *v > best_value || (*v == best_value && idx < best) {
                best = idx;
                best_value = *v;
                origin = CandidateOrigin::HillClimbed;
                winner = Some(g.clone());
            }
        }
        let technology = match (origin, winner) {
            (CandidateOrigin::HillClimbed, Some(g)) => g.build(cfg.grid_top)?,
            _ if best < offset => seeded[best].technology.clone(),
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream((best - offset) as u64);
                draw_genome(cfg, &mut rng).build(cfg.grid_top)?
            }
        };
        Ok(SearchOutcome {
            technology,
            regret: best_value,
            candidate_index: best,
            origin,
            evaluations: all.len() + climbed.iter().map(|c| c.2).sum::<usize>(),
            seed: cfg.seed,
            budget: cfg.budget,
            floor_share: s,
            k_star,
            mu_f_star: mu_f,
            climbed: climbed.len(),
        })
    })?
}
