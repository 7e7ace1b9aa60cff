//! JSON documents for technologies and regulations, and CSV tables.
//!
//! Numbers are written in the shortest decimal form that parses back to the same `f64`,
//! so parse and serialize round-trip exactly and outputs are stable across runs.

use crate::error::{Error, Result};
use crate::adversary::{SearchConfig, SearchOutcome, CLIMB_ROUNDS, CLIMB_SHARE, CLIMB_STEP, SEED_ACTIONS};
use crate::model::{Action, OutputGrid, Params, Regulation, Technology};
use serde_json::{json, Map, Value};

fn parse_value(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::invalid("", format!("malformed JSON: {e}")))
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::invalid(path, "expected an object"))
}

fn field<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::invalid(format!("{path}/{key}"), "missing field"))
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::invalid(path, "expected a number"))
}

fn numbers(v: &Value, path: &str) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| Error::invalid(path, "expected an array of numbers"))?;
    arr.iter().enumerate().map(|(i, x)| number(x, &format!("{path}/{i}"))).collect()
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::invalid(path, "expected an array"))
}

/// Reads `{"k": .., "grid": [..], "actions": [{"e": .., "probs": [..]}]}`.
pub fn parse_technology_json(text: &str) -> Result<Technology> {
    technology_from_value(&parse_value(text)?)
}

pub fn technology_from_value(v: &Value) -> Result<Technology> {
    let obj = object(v, "")?;
    let k = number(field(obj, "", "k")?, "/k")?;
    let grid = numbers(field(obj, "", "grid")?, "/grid")?;
    OutputGrid::check(&grid, "/grid")?;
    let acts = array(field(obj, "", "actions")?, "/actions")?;
    let mut actions = Vec::with_capacity(acts.len());
    for (i, a) in acts.iter().enumerate() {
        let path = format!("/actions/{i}");
        let o = object(a, &path)?;
        let e = number(field(o, &path, "e")?, &format!("{path}/e"))?;
        let probs = numbers(field(o, &path, "probs")?, &format!("{path}/probs"))?;
        actions.push(Action::new(e, probs));
    }
    Technology::new(k, OutputGrid::new(grid)?, actions)
}

pub fn technology_to_value(t: &Technology) -> Value {
    json!({
        "k": t.k(),
        "grid": t.grid().levels(),
        "actions": t.actions().iter().map(|a| json!({"e": a.effort, "probs": a.probs})).collect::<Vec<_>>(),
    })
}

pub fn serialize_technology(t: &Technology) -> String {
    to_pretty(&technology_to_value(t))
}

/// Reads a regulation tagged by `"type"`: `all`, `mpr`, `min_contract`, `linear_family` or `image`.
pub fn parse_regulation_json(text: &str) -> Result<Regulation> {
    regulation_from_value(&parse_value(text)?)
}

pub fn regulation_from_value(v: &Value) -> Result<Regulation> {
    let obj = object(v, "")?;
    let tag = field(obj, "", "type")?
        .as_str()
        .ok_or_else(|| Error::invalid("/type", "expected a string"))?;
    match tag {
        "all" => Ok(Regulation::All),
        "mpr" => Regulation::mpr(number(field(obj, "", "ell")?, "/ell")?),
        "min_contract" => Regulation::minimum_contract(
            numbers(field(obj, "", "grid")?, "/grid")?,
            numbers(field(obj, "", "floor")?, "/floor")?,
        ),
        "linear_family" => Regulation::linear_family(numbers(field(obj, "", "slopes")?, "/slopes")?),
        "image" => {
            let grid = numbers(field(obj, "", "grid")?, "/grid")?;
            let lists = array(field(obj, "", "intervals")?, "/intervals")?;
            let mut intervals = Vec::with_capacity(lists.len());
            for (i, list) in lists.iter().enumerate() {
                let path = format!("/intervals/{i}");
                let mut level = Vec::new();
                for (j, iv) in array(list, &path)?.iter().enumerate() {
                    let pair = numbers(iv, &format!("{path}/{j}"))?;
                    if pair.len() != 2 {
                        return Err(Error::invalid(format!("{path}/{j}"), "an interval is a pair [lo, hi]"));
                    }
                    level.push((pair[0], pair[1]));
                }
                intervals.push(level);
            }
            Regulation::image_constrained(grid, intervals)
        }
        other => Err(Error::invalid("/type", format!("unknown regulation type {other:?}"))),
    }
}

pub fn regulation_to_value(r: &Regulation) -> Value {
    match r {
        Regulation::All => json!({"type": "all"}),
        Regulation::Mpr { ell } => json!({"type": "mpr", "ell": ell}),
        Regulation::MinimumContract { grid, floor } => json!({"type": "min_contract", "grid": grid, "floor": floor}),
        Regulation::LinearFamily { slopes } => json!({"type": "linear_family", "slopes": slopes}),
        Regulation::ImageConstrained { grid, intervals } => json!({
            "type": "image",
            "grid": grid,
            "intervals": intervals
                .iter()
                .map(|l| l.iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        }),
    }
}

pub fn serialize_regulation(r: &Regulation) -> String {
    to_pretty(&regulation_to_value(r))
}

/// Search result: the winning technology in the technology schema, its regret, and a
/// provenance block with everything needed to rerun it. Timing and thread count are left
/// out so equal inputs give equal bytes.
pub fn search_outcome_to_value(out: &SearchOutcome, r: &Regulation, p: &Params, cfg: &SearchConfig) -> Value {
    json!({
        "technology": technology_to_value(&out.technology),
        "regret": out.regret,
        "provenance": {
            "regulation": regulation_to_value(r),
            "alpha": p.alpha(),
            "ybar": p.ybar(),
            "seed": out.seed,
            "budget": out.budget,
            "max_actions": cfg.max_actions,
            "k_range": [cfg.k_range.0, cfg.k_range.1],
            "mean_range": [cfg.mean_range.0, cfg.mean_range.1],
            "grid_top": cfg.grid_top,
            "evaluations": out.evaluations,
            "candidate_index": out.candidate_index,
            "origin": out.origin.as_str(),
            "constructions": {
                "floor_share": out.floor_share,
                "k_star": out.k_star,
                "mu_f_star": out.mu_f_star,
                "actions": SEED_ACTIONS,
            },
            "hill_climb": {
                "share": CLIMB_SHARE,
                "rounds": CLIMB_ROUNDS,
                "step": CLIMB_STEP,
                "climbed": out.climbed,
            },
        },
    })
}

/// Command-line shorthand: `all`, `mpr:<ell>` or `linear:<s1>,<s2>,..`.
pub fn parse_regulation_shorthand(s: &str) -> Result<Regulation> {
    let s = s.trim();
    if s == "all" {
        return Ok(Regulation::All);
    }
    let num = |x: &str, path: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|_| Error::invalid(path, format!("not a number: {x:?}")))
    };
    if let Some(rest) = s.strip_prefix("mpr:") {
        return Regulation::mpr(num(rest, "/ell")?);
    }
    if let Some(rest) = s.strip_prefix("linear:") {
        let slopes = rest
            .split(',')
            .enumerate()
            .map(|(i, x)| num(x, &format!("/slopes/{i}")))
            .collect::<Result<Vec<_>>>()?;
        return Regulation::linear_family(slopes);
    }
    Err(Error::invalid("/type", format!("unrecognized regulation shorthand {s:?}")))
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values built from f64 and strings serialize");
    s.push('\n');
    s
}

/// Shortest round-trip decimal form of `x`.
pub fn fmt_num(x: f64) -> String {
    format!("{x}")
}

/// RFC 4180 CSV with a header row and LF line endings.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| Error::Numerical(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numerical(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Numerical(format!("csv: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path_of(e: Error) -> String {
        match e {
            Error::Validation { path, .. } => path,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn technology_examples() {
        let t = parse_technology_json(r#"{"k": 0.1, "grid": [0, 1], "actions": [{"e": 0, "probs": [0.5, 0.5]}]}"#).unwrap();
        assert_eq!(t.len(), 1);
        let e = parse_technology_json(r#"{"k": 0.1, "grid": [0, 1], "actions": [{"e": 0, "probs": [0.5, 0.4]}]}"#);
        assert_eq!(path_of(e.unwrap_err()), "/actions/0/probs");
        let e = parse_technology_json(r#"{"grid": [0, 1], "actions": [{"e": 0, "probs": [0.5, 0.5]}]}"#);
        assert_eq!(path_of(e.unwrap_err()), "/k");
        let e = parse_technology_json(r#"{"k": 0, "grid": [0, 1], "actions": [{"e": "x", "probs": [1, 0]}]}"#);
        assert_eq!(path_of(e.unwrap_err()), "/actions/0/e");
    }

    #[test]
    fn regulation_examples() {
        assert_eq!(parse_regulation_json(r#"{"type":"mpr","ell":0.3333}"#).unwrap(), Regulation::Mpr { ell: 0.3333 });
        assert_eq!(
            parse_regulation_json(r#"{"type":"linear_family","slopes":[0.4,0.6]}"#).unwrap(),
            Regulation::LinearFamily { slopes: vec![0.4, 0.6] }
        );
        assert_eq!(path_of(parse_regulation_json(r#"{"type":"mpr","ell":1.2}"#).unwrap_err()), "/ell");
        assert_eq!(path_of(parse_regulation_json(r#"{"type":"cap"}"#).unwrap_err()), "/type");
        let img = r#"{"type":"image","grid":[0,1],"intervals":[[[0,0]],[[0.3,0.4],[0.5,1]]]}"#;
        let r = parse_regulation_json(img).unwrap();
        assert_eq!(parse_regulation_json(&serialize_regulation(&r)).unwrap(), r);
    }

    #[test]
    fn shorthand() {
        assert_eq!(parse_regulation_shorthand("mpr:0.3333").unwrap(), Regulation::Mpr { ell: 0.3333 });
        assert_eq!(parse_regulation_shorthand("all").unwrap(), Regulation::All);
        assert_eq!(
            parse_regulation_shorthand("linear:0.4,0.6").unwrap(),
            Regulation::LinearFamily { slopes: vec![0.4, 0.6] }
        );
        assert!(parse_regulation_shorthand("mpr:x").is_err());
    }

    #[test]
    fn csv_layout() {
        let s = to_csv(&["a", "b"], &[vec![fmt_num(0.1), fmt_num(1e-7)]]).unwrap();
        assert_eq!(s, "a,b\n0.1,0.0000001\n");
    }

    proptest! {
        #[test]
        fn technology_round_trip(k in 0.0f64..2.0, top in 0.1f64..5.0, ms in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..6)) {
            let actions = ms.iter().map(|&(q, e)| Action::new(e, vec![1.0 - q, q])).collect();
            let t = Technology::new(k, OutputGrid::binary(top).unwrap(), actions).unwrap();
            let text = serialize_technology(&t);
            let back = parse_technology_json(&text).unwrap();
            prop_assert_eq!(&back, &t);
            prop_assert_eq!(serialize_technology(&back), text);
        }

        #[test]
        fn regulation_round_trip(ell in 0.0f64..=1.0, floor in 0.0f64..1.0) {
            for r in [
                Regulation::mpr(ell).unwrap(),
                Regulation::minimum_contract(vec![0.0, 1.0], vec![0.0, floor]).unwrap(),
                Regulation::linear_family(vec![ell, floor]).unwrap(),
            ] {
                prop_assert_eq!(parse_regulation_json(&serialize_regulation(&r)).unwrap(), r);
            }
        }
    }
}
