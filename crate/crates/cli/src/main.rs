//! `regretforge`: command-line front end.
//!
//! Exit codes: 0 success, 1 failed verification or numerical trouble, 2 invalid input,
//! 3 unsupported input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use regretforge::acceptance;
use regretforge::adversary::{adversarial_search, SearchConfig};
use regretforge::analysis::{default_probes, necessity_check, sweep_alpha};
use regretforge::bench::bench_search;
use regretforge::firm::{firm_best_response, min_cost_implementation};
use regretforge::io::{
    fmt_num, parse_regulation_json, parse_regulation_shorthand, parse_technology_json, search_outcome_to_value,
    to_csv, to_pretty,
};
use regretforge::minmax::{
    branch_extraction, branch_no_production, constrained_branches, optimal_mpr_constrained, optimal_mpr_numeric,
    KnowledgeBox,
};
use regretforge::regret::regret;
use regretforge::regulator::{action_values, full_info_value, max_transfer_implementation};
use regretforge::{Contract, Error, Params, Regulation, Technology};

#[derive(Parser)]
#[command(name = "regretforge", version, about = "Worst-case regret of contract regulation under moral hazard")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Model {
    /// Weight on worker surplus (>= 1).
    #[arg(long)]
    alpha: f64,
    /// Upper bound on mean output.
    #[arg(long, default_value_t = 1.0)]
    ybar: f64,
}

impl Model {
    fn params(&self) -> Result<Params> {
        Ok(Params::new(self.alpha, self.ybar)?)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Firm's best response and per-action cheapest implementations.
    SolveFirm {
        #[arg(long)]
        tech: PathBuf,
        /// `all`, `mpr:<ell>`, `linear:<s1>,..` or a regulation JSON file.
        #[arg(long)]
        reg: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full-information value and per-action maximal transfers.
    SolveRegulator {
        #[arg(long)]
        tech: PathBuf,
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regret of a regulation against one technology.
    Regret {
        #[arg(long)]
        tech: PathBuf,
        #[arg(long)]
        reg: String,
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Adversarial search for the technology with the largest regret.
    WorstCase {
        #[arg(long)]
        reg: String,
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        max_actions: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minmax-regret piece rate.
    Minmax {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// CSV of both branches over a grid of piece rates.
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minmax piece rate when fixed cost and mean output lie in a known box.
    MinmaxConstrained {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 0.0)]
        k_lo: f64,
        #[arg(long)]
        k_hi: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        y_lo: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Band, gaming and flexibility checks of a regulation.
    Necessity {
        #[arg(long)]
        reg: String,
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 200)]
        probes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form piece rate and regret across alphas, as CSV.
    SweepAlpha {
        /// Explicit list; overrides --from/--to/--count.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1.0)]
        from: f64,
        #[arg(long, default_value_t = 100.0)]
        to: f64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 1.0)]
        ybar: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the acceptance criteria; nonzero exit on any failure.
    Verify {
        /// Only these criteria (comma-separated ids).
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u8>>,
    },
    /// Times the adversarial search; CSV with one row per repetition.
    BenchSearch {
        #[arg(long, default_value = "mpr:0.3333333333333333")]
        reg: String,
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[arg(long, default_value_t = 10)]
        max_actions: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_tech(path: &Path) -> Result<Technology> {
    parse_technology_json(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_reg(spec: &str) -> Result<Regulation> {
    let s = spec.trim();
    if s == "all" || s.starts_with("mpr:") || s.starts_with("linear:") {
        return Ok(parse_regulation_shorthand(s)?);
    }
    let path = Path::new(s);
    parse_regulation_json(&read(path)?).with_context(|| format!("in {}", path.display()))
}

/// Writes `text` to `out` when given, otherwise to stdout.
fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn contract_json(c: &Option<Contract>) -> Value {
    c.as_ref().map_or(Value::Null, |c| json!(c.payments()))
}

fn solve_firm(tech: &Path, reg: &str) -> Result<Value> {
    let t = load_tech(tech)?;
    let r = load_reg(reg)?;
    let eq = firm_best_response(&t, &r)?;
    let imps = (0..t.len())
        .map(|i| {
            let imp = min_cost_implementation(&t, &r, i)?;
            Ok(json!({
                "action_index": i,
                "feasible": imp.feasible,
                "expected_payment": imp.feasible.then_some(imp.expected_payment),
                "contract": contract_json(&imp.contract),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "participated": eq.participated,
        "action_index": eq.action_index,
        "profit": eq.profit,
        "worker_surplus": eq.worker_surplus,
        "contract": contract_json(&eq.contract),
        "implementations": imps,
    }))
}

fn solve_regulator(tech: &Path, p: &Params) -> Result<Value> {
    let t = load_tech(tech)?;
    let values = action_values(&t, p)?;
    let actions = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let imp = max_transfer_implementation(&t, i)?;
            Ok(json!({
                "action_index": i,
                "feasible": imp.feasible,
                "transfer": imp.feasible.then_some(imp.expected_payment),
                "value": v,
                "contract": contract_json(&imp.contract),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({ "full_info_value": full_info_value(&t, p)?, "actions": actions }))
}

/// Plot-ready CSV of the regret branches over piece rates in `[0, 1)`.
fn curve_csv(p: &Params, kb: Option<&KnowledgeBox>) -> Result<String> {
    let rows = (0..=100)
        .map(|i| {
            let l = i as f64 / 100.0 * (1.0 - 1e-9);
            let row = match kb {
                None => vec![
                    fmt_num(l),
                    fmt_num(branch_no_production(l, p)?),
                    fmt_num(branch_extraction(l, p)?),
                    fmt_num(p.alpha() * l * p.ybar()),
                ],
                Some(b) => {
                    let c = constrained_branches(l, p, b)?;
                    vec![fmt_num(l), fmt_num(c.no_hire), fmt_num(c.extraction), fmt_num(c.single)]
                }
            };
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(to_csv(&["ell", "no_production", "extraction", "single_action"], &rows)?)
}

fn verify(only: Option<Vec<u8>>) -> Result<bool> {
    let ids: Vec<u8> = only.unwrap_or_else(|| (1..=11).collect());
    let mut all = true;
    for id in ids {
        let (passed, line) = if id == 11 {
            let (ok, detail) = determinism_check()?;
            (ok, format!("criterion 11 {} [determinism]: {detail}", if ok { "PASS" } else { "FAIL" }))
        } else {
            let o = acceptance::run_criterion(id).ok_or_else(|| Error::invalid("/only", format!("no criterion {id}")))?;
            (o.passed, o.line())
        };
        println!("{line}");
        all &= passed;
    }
    Ok(all)
}

/// Runs `worst-case` in two child processes with different thread counts and compares bytes.
fn determinism_check() -> Result<(bool, String)> {
    let exe = std::env::current_exe().context("locating the executable")?;
    let dir = std::env::temp_dir().join(format!("regretforge-verify-{}", std::process::id()));
    fs::create_dir_all(&dir)?;
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.join(format!("worst_case_{threads}.json"));
        let status = Command::new(&exe)
            .args(["worst-case", "--reg", "mpr:0.3333", "--alpha", "2", "--budget", "20000", "--seed", "7", "--out"])
            .arg(&out)
            .env("REGRETFORGE_THREADS", threads)
            .status()?;
        anyhow::ensure!(status.success(), "worst-case exited with {status}");
        outputs.push(fs::read(&out)?);
    }
    fs::remove_dir_all(&dir).ok();
    let same = outputs[0] == outputs[1];
    Ok((same, format!("{} bytes, identical across 1 and 4 threads: {same}", outputs[0].len())))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Cmd::SolveFirm { tech, reg, out } => emit(&to_pretty(&solve_firm(&tech, &reg)?), out.as_deref())?,
        Cmd::SolveRegulator { tech, model, out } => {
            emit(&to_pretty(&solve_regulator(&tech, &model.params()?)?), out.as_deref())?
        }
        Cmd::Regret { tech, reg, model, out } => {
            let rep = regret(&load_tech(&tech)?, &load_reg(&reg)?, &model.params()?)?;
            emit(&to_pretty(&serde_json::to_value(rep)?), out.as_deref())?
        }
        Cmd::WorstCase { reg, model, budget, seed, max_actions, out } => {
            let p = model.params()?;
            let r = load_reg(&reg)?;
            let cfg = SearchConfig::standard(&p, seed, budget, max_actions);
            let res = adversarial_search(&r, &p, &cfg)?;
            emit(&to_pretty(&search_outcome_to_value(&res, &r, &p, &cfg)), out.as_deref())?
        }
        Cmd::Minmax { model, tol, curve, out } => {
            let p = model.params()?;
            if let Some(path) = curve {
                emit(&curve_csv(&p, None)?, Some(&path))?;
            }
            emit(&to_pretty(&serde_json::to_value(optimal_mpr_numeric(&p, tol)?)?), out.as_deref())?
        }
        Cmd::MinmaxConstrained { model, k_lo, k_hi, y_lo, tol, curve, out } => {
            let p = model.params()?;
            let kb = KnowledgeBox::new(k_lo, k_hi.unwrap_or(p.ybar()), y_lo, &p)?;
            if let Some(path) = curve {
                emit(&curve_csv(&p, Some(&kb))?, Some(&path))?;
            }
            emit(&to_pretty(&serde_json::to_value(optimal_mpr_constrained(&p, &kb, tol)?)?), out.as_deref())?
        }
        Cmd::Necessity { reg, model, probes, out } => {
            let p = model.params()?;
            let rep = necessity_check(&load_reg(&reg)?, &p, &default_probes(&p, probes))?;
            let mut v = serde_json::to_value(&rep)?;
            v["all_ok"] = json!(rep.all_ok());
            emit(&to_pretty(&v), out.as_deref())?
        }
        Cmd::SweepAlpha { alphas, from, to, count, ybar, out } => {
            let alphas = alphas.unwrap_or_else(|| match count {
                0 => Vec::new(),
                1 => vec![from],
                n => (0..n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect(),
            });
            let rows: Vec<Vec<String>> = sweep_alpha(&alphas, ybar)?
                .iter()
                .map(|r| {
                    [r.alpha, r.ell_star, r.rbar, r.branch_no_production, r.branch_extraction]
                        .map(fmt_num)
                        .to_vec()
                })
                .collect();
            let csv = to_csv(&["alpha", "ell_star", "rbar", "branch_no_production", "branch_extraction"], &rows)?;
            emit(&csv, out.as_deref())?
        }
        Cmd::Verify { only } => {
            if !verify(only)? {
                return Ok(ExitCode::from(1));
            }
        }
        Cmd::BenchSearch { reg, model, budget, max_actions, seed, threads, out } => {
            let p = model.params()?;
            let mut cfg = SearchConfig::standard(&p, seed, budget.max(1), max_actions);
            cfg.budget = budget;
            let rep = bench_search(&load_reg(&reg)?, &p, &cfg, threads)?;
            eprintln!(
                "median {:.4} s, {:.0} evaluations/s over {} runs",
                rep.median_seconds,
                rep.evaluations_per_second,
                rep.runs.len()
            );
            emit(&rep.to_csv()?, out.as_deref())?
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<Error>() {
        return match e {
            Error::Validation { .. } | Error::Precondition(_) => 2,
            Error::Unsupported(_) => 3,
            Error::Numerical(_) => 1,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() || err.downcast_ref::<serde_json::Error>().is_some() {
        return 2;
    }
    1
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
