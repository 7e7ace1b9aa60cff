//! Wall-time measurement of the adversarial search.

use std::time::Instant;

use serde::Serialize;

use crate::adversary::{adversarial_search_with_threads, SearchConfig};
use crate::error::Result;
use crate::io::{fmt_num, to_csv};
use crate::model::{Params, Regulation};

/// Repetitions per benchmark; the report uses their median.
pub const BENCH_REPS: usize = 5;

#[derive(Debug, Clone, Serialize)]
pub struct BenchRun {
    pub rep: usize,
    pub seconds: f64,
    pub evaluations: usize,
    pub best_regret: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub threads: usize,
    pub runs: Vec<BenchRun>,
    pub median_seconds: f64,
    pub evaluations_per_second: f64,
    pub seconds_per_candidate: f64,
}

impl BenchReport {
    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn to_csv(&self) -> Result<String> {
        let rows: Vec<Vec<String>> = self
            .runs
            .iter()
            .map(|r| {
                vec![
                    r.rep.to_string(),
                    self.threads.to_string(),
                    fmt_num(r.seconds),
                    r.evaluations.to_string(),
                    fmt_num(r.evaluations as f64 / r.seconds),
                    fmt_num(r.best_regret),
                ]
            })
            .collect();
        to_csv(
            &["rep", "threads", "seconds", "evaluations", "evaluations_per_second", "best_regret"],
            &rows,
        )
    }
}

/// Times [`BENCH_REPS`] searches on a pool of exactly `threads` workers. A zero budget
/// yields an empty report without searching.
pub fn bench_search(r: &Regulation, p: &Params, cfg: &SearchConfig, threads: usize) -> Result<BenchReport> {
    let mut runs = Vec::new();
    if cfg.budget > 0 {
        for rep in 0..BENCH_REPS {
            let start = Instant::now();
            let out = adversarial_search_with_threads(r, p, cfg, threads)?;
            runs.push(BenchRun {
                rep,
                seconds: start.elapsed().as_secs_f64(),
                evaluations: out.evaluations,
                best_regret: out.regret,
            });
        }
    }
    let mut secs: Vec<f64> = runs.iter().map(|r| r.seconds).collect();
    secs.sort_by(f64::total_cmp);
    let median_seconds = secs.get(secs.len() / 2).copied().unwrap_or(0.0);
    let evals = runs.first().map_or(0, |r| r.evaluations);
    let (rate, per) = if median_seconds > 0.0 && evals > 0 {
        (evals as f64 / median_seconds, median_seconds / evals as f64)
    } else {
        (0.0, 0.0)
    };
    Ok(BenchReport {
        threads,
        runs,
        median_seconds,
        evaluations_per_second: rate,
        seconds_per_candidate: per,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_budget_is_empty() {
        let p = Params::new(2.0, 1.0).unwrap();
        let mut cfg = SearchConfig::standard(&p, 1, 1, 10);
        cfg.budget = 0;
        let rep = bench_search(&Regulation::optimal(&p), &p, &cfg, 1).unwrap();
        assert!(rep.is_empty());
        assert_eq!(rep.to_csv().unwrap().lines().count(), 1);
    }

    #[test]
    fn repeated_runs_agree_on_regret() {
        let p = Params::new(2.0, 1.0).unwrap();
        let cfg = SearchConfig::standard(&p, 9, 200, 10);
        let rep = bench_search(&Regulation::optimal(&p), &p, &cfg, 2).unwrap();
        assert_eq!(rep.runs.len(), BENCH_REPS);
        assert!(rep.runs.windows(2).all(|w| w[0].best_regret == w[1].best_regret));
        assert!(rep.evaluations_per_second > 0.0);
    }
}
