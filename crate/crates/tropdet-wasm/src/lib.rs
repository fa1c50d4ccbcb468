//! Browser bindings. Each entry point takes the automaton as JSON text and
//! returns a JSON report string; errors come back as `{"error": ...}` reports.

use serde_json::{json, Value};
use tropdet::bounds::{BoundsValue, Evaluator, Mode, Name};
use tropdet::determinise::{decide_at_gap, DEFAULT_STATE_BUDGET};
use tropdet::{find_gap_witness, verify_gap_witness, Wfa};
use wasm_bindgen::prelude::*;

fn report(r: Result<Value, String>) -> String {
    let v = r.unwrap_or_else(|e| json!({ "error": e }));
    serde_json::to_string_pretty(&v).unwrap_or_default()
}

fn load(automaton: &str) -> Result<Wfa, String> {
    Wfa::from_json_str(automaton).map_err(|e| e.to_string())
}

pub fn eval_report(automaton: &str, word: &str) -> Result<Value, String> {
    let wfa = load(automaton)?;
    let w = wfa.parse_word(word).map_err(|e| e.to_string())?;
    let v = wfa.eval(&w).map_err(|e| e.to_string())?;
    Ok(json!({ "word": wfa.format_word(&w), "value": v }))
}

pub fn gap_witness_report(automaton: &str, min_gap: i64, max_len: usize) -> Result<Value, String> {
    let wfa = load(automaton)?;
    let found = find_gap_witness(&wfa, min_gap, max_len).map_err(|e| e.to_string())?;
    Ok(match found {
        Some(g) => json!({
            "found": true,
            "x": wfa.format_word(&g.x),
            "y": wfa.format_word(&g.y),
            "q": wfa.state_name(g.q),
            "gap": g.gap,
            "verified": verify_gap_witness(&wfa, &g, min_gap).map_err(|e| e.to_string())?,
        }),
        None => json!({ "found": false }),
    })
}

pub fn determinize_report(automaton: &str, gap: i64) -> Result<Value, String> {
    let wfa = load(automaton)?;
    let r = decide_at_gap(&wfa, gap, DEFAULT_STATE_BUDGET).map_err(|e| e.to_string())?;
    Ok(json!({
        "gap": r.gap,
        "determinisable": r.determinisable,
        "det_states": r.det_states,
        "counterexample": r.counterexample.map(|c| json!({
            "word": wfa.format_word(&c.word),
            "a_value": c.a_value,
            "det_value": c.det_value,
        })),
        "automaton": r.automaton,
    }))
}

/// `cap = 0` evaluates exactly.
pub fn bounds_report(family: &str, name: &str, n: u64, d: u64, i: u64, cap: u64) -> Result<Value, String> {
    let mode = if cap == 0 { Mode::default() } else { Mode::saturated(cap) };
    let nm: Name = name.parse().map_err(|e: tropdet::bounds::BoundsError| e.to_string())?;
    let mut ev = match family {
        "simp" => Evaluator::simp(n, 1, mode),
        "gen" => Evaluator::gen_default(n, 1, mode),
        _ => return Err(format!("unknown family {family:?}")),
    }
    .map_err(|e| e.to_string())?;
    let v: BoundsValue = ev.eval(nm, d, i).map_err(|e| e.to_string())?;
    Ok(json!({
        "name": name,
        "value": v.render(),
        "digits": v.digits(),
        "saturated": v.is_saturated(),
    }))
}

#[wasm_bindgen(js_name = evaluate)]
pub fn eval(automaton: &str, word: &str) -> String {
    report(eval_report(automaton, word))
}

#[wasm_bindgen]
pub fn gap_witness(automaton: &str, min_gap: i32, max_len: u32) -> String {
    report(gap_witness_report(automaton, min_gap as i64, max_len as usize))
}

#[wasm_bindgen]
pub fn determinize(automaton: &str, gap: i32) -> String {
    report(determinize_report(automaton, gap as i64))
}

#[wasm_bindgen]
pub fn bounds(family: &str, name: &str, n: u32, d: u32, i: u32, cap: u32) -> String {
    report(bounds_report(family, name, n as u64, d as u64, i as u64, cap as u64))
}

#[wasm_bindgen]
pub fn fig1() -> String {
    tropdet::fixtures::fig1().to_json_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig1_reports() {
        let a = fig1();
        assert_eq!(eval_report(&a, "aabbb").unwrap()["value"], 2);
        let g = gap_witness_report(&a, 2, 10).unwrap();
        assert_eq!(g["verified"], true);
        let d = determinize_report(&a, 3).unwrap();
        assert_eq!(d["determinisable"], false);
        assert!(d["counterexample"]["word"].is_string());
    }

    #[test]
    fn errors_are_reports() {
        let out = eval("{", "a");
        assert!(out.contains("error"));
        assert_eq!(bounds_report("simp", "Len", 2, 0, 1, 0).unwrap()["value"], "1");
        assert!(bounds_report("nope", "Len", 2, 0, 1, 0).is_err());
    }
}
