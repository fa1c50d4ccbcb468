//! Command-line surface. Every verb prints one JSON report on stdout; the exit
//! code is 0 for success or a positive verdict, 1 for a negative verdict and
//! 2 for errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::analysis::{
    bounded_growth_check, charge, potential, sample_words, AnalysisError, DominanceParams, WitnessParams,
};
use crate::augmented::{AugError, AugRun, AugWfa, CycleSet, LetterId};
use crate::bounds::{BoundsError, Evaluator, Mode, Name, Upper, UpperName};
use crate::cactus::{
    cycle_m, find_reflexive_cycles, flatten, grounded_pairs, is_stable_cycle, letter_from_json, shift_to_stable,
    stabilise, unfold, validate_bounded_letter, word_from_json, CactusError, CycleCandidate, UnfoldOptions,
};
use crate::determinise::{build_restriction, check_equiv, decide_at_gap, DetError, DEFAULT_STATE_BUDGET};
use crate::gap::{find_gap_witness, verify_gap_witness};
use crate::sri::{
    bud, check_sri, classify, degenerate_shorten, SriCheck, SriDecomposition, SriError, SriKind, SriParams,
};
use crate::weight::Weight;
use crate::wfa::{Wfa, WfaError, WfaJson};
use crate::zoom::{zoom_step, Window, ZoomConfig, ZoomError, ZoomOutcome, ZoomThresholds};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Wfa(#[from] WfaError),
    #[error(transparent)]
    Aug(#[from] AugError),
    #[error(transparent)]
    Cactus(#[from] CactusError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Sri(#[from] SriError),
    #[error(transparent)]
    Zoom(#[from] ZoomError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Det(#[from] DetError),
}

impl CliError {
    /// Dotted path of variant names, e.g. `Aug.Wfa.UnknownLetter`.
    pub fn code(&self) -> String {
        let debug = format!("{self:?}");
        let mut parts = Vec::new();
        let mut rest = debug.as_str();
        loop {
            let end = rest.find(|c: char| !c.is_alphanumeric() && c != '_').unwrap_or(rest.len());
            let ident = &rest[..end];
            if ident.is_empty() || !ident.starts_with(|c: char| c.is_ascii_uppercase()) {
                break;
            }
            parts.push(ident);
            match rest[end..].strip_prefix('(') {
                Some(r) => rest = r,
                None => break,
            }
        }
        parts.join(".")
    }
}

type Res<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "tropdet", about = "Tropical weighted automata: gaps, determinisation, cactus letters, bounds")]
pub struct Cli {
    /// Seed for the randomised commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Value of a word.
    Eval {
        automaton: PathBuf,
        #[arg(long)]
        word: String,
    },
    /// Least weight of a run between state sets.
    Mwt {
        automaton: PathBuf,
        #[arg(long)]
        word: String,
        /// Comma-separated source states (default: the initial state).
        #[arg(long)]
        from: Option<String>,
        /// Comma-separated target states (default: all).
        #[arg(long)]
        to: Option<String>,
    },
    /// Removes unreachable states.
    Trim { automaton: PathBuf },
    /// Searches for a gap witness with gap above `--min-gap`.
    GapWitness {
        automaton: PathBuf,
        #[arg(long)]
        min_gap: i64,
        #[arg(long)]
        max_len: usize,
    },
    /// Builds the gap-bounded automaton and decides equivalence.
    Determinize {
        automaton: PathBuf,
        #[arg(long)]
        gap: i64,
        #[arg(long)]
        emit: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_STATE_BUDGET)]
        budget: usize,
    },
    /// Checks an automaton against its gap-bounded restriction.
    CheckEquiv {
        automaton: PathBuf,
        #[arg(long)]
        gap: i64,
        #[arg(long, default_value_t = DEFAULT_STATE_BUDGET)]
        budget: usize,
    },
    /// Reflexive and stable cycles of the augmented automaton
    #[command(subcommand)]
    Cycles(CyclesCmd),
    /// Cactus letters: stabilise, unfold, flatten, validate
    #[command(subcommand)]
    Cactus(CactusCmd),
    /// Potential, charge and bounded-growth checks
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Separated repeating infixes
    #[command(subcommand)]
    Sri(SriCmd),
    /// One zooming step on a window
    #[command(subcommand)]
    Zoom(ZoomCmd),
    /// Evaluates the bound functions
    #[command(subcommand)]
    Bounds(BoundsCmd),
}

#[derive(Subcommand, Debug)]
enum CyclesCmd {
    /// Enumerates reflexive cycles and reports which are stable.
    FindStable {
        automaton: PathBuf,
        #[arg(long, default_value_t = 3)]
        max_len: usize,
        #[arg(long, default_value_t = 20)]
        limit: usize,
    },
    /// Shifts a cycle onto a minimum-slope run.
    ShiftStable(CycleArgs),
}

#[derive(Args, Debug)]
struct CycleArgs {
    automaton: PathBuf,
    /// Cycle set as `{"baseline": q, "T": [..]}`.
    #[arg(long)]
    set: String,
    /// Augmented word (`@file`, inline JSON, or a word of the automaton).
    #[arg(long)]
    word: String,
}

#[derive(Subcommand, Debug)]
enum CactusCmd {
    /// Builds the cactus letter of a stable cycle.
    Stabilize(CycleArgs),
    /// Unfolds the cactus letter at position `--at`.
    Unfold {
        automaton: PathBuf,
        #[arg(long)]
        word: String,
        #[arg(long)]
        at: usize,
        #[arg(long = "F")]
        f: i64,
    },
    /// Unfolds every cactus letter recursively.
    Flatten {
        automaton: PathBuf,
        #[arg(long)]
        word: String,
        #[arg(long = "F")]
        f: i64,
    },
    /// Checks the word-length bound of a letter at every nesting depth.
    Validate {
        automaton: PathBuf,
        #[arg(long)]
        letter: String,
        /// `const:K`, `linear:K` (K·(d+1)) or `exp:K` (K^(d+1)).
        #[arg(long)]
        length_fn: String,
        #[arg(long, default_value_t = 4)]
        max_depth: usize,
    },
}

#[derive(Subcommand, Debug)]
enum AnalyzeCmd {
    Potential {
        automaton: PathBuf,
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 3)]
        horizon: usize,
    },
    Charge {
        automaton: PathBuf,
        #[arg(long)]
        word: String,
    },
    /// Samples words over the base letters and checks bounded growth of φ.
    Growth {
        automaton: PathBuf,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        #[arg(long, default_value_t = 3)]
        horizon: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Simple,
    General,
}

impl From<KindArg> for SriKind {
    fn from(k: KindArg) -> SriKind {
        match k {
            KindArg::Simple => SriKind::Simple,
            KindArg::General => SriKind::General,
        }
    }
}

#[derive(Args, Debug)]
struct SriArgs {
    automaton: PathBuf,
    #[arg(long)]
    word: String,
    /// Three cut positions splitting the word into `u·x·y·v`.
    #[arg(long, value_delimiter = ',', required = true)]
    cuts: Vec<usize>,
    #[arg(long, value_enum, default_value = "simple")]
    kind: KindArg,
    #[arg(long, default_value_t = 3)]
    horizon: usize,
    /// Charge-drop allowance for the general kind (default: the saturated bound).
    #[arg(long)]
    h: Option<i64>,
}

#[derive(Subcommand, Debug)]
enum SriCmd {
    Check(SriArgs),
    Classify(SriArgs),
    Bud {
        #[command(flatten)]
        sri: SriArgs,
        #[arg(long, default_value_t = 8)]
        witness_len: u64,
    },
    DegenerateShorten(SriArgs),
}

#[derive(Subcommand, Debug)]
enum ZoomCmd {
    /// One zoom step on `w1·w2·w3`.
    Step {
        automaton: PathBuf,
        #[arg(long)]
        word: String,
        /// Two cut positions splitting the word into `w1·w2·w3`.
        #[arg(long, value_delimiter = ',', required = true)]
        cuts: Vec<usize>,
        /// Inner states of the independent runs (default: the baseline).
        #[arg(long, value_delimiter = ',')]
        runs: Vec<String>,
        #[arg(long)]
        thresholds: PathBuf,
        #[arg(long, value_enum, default_value = "simple")]
        kind: KindArg,
        #[arg(long, default_value_t = 3)]
        horizon: usize,
        #[arg(long)]
        drop_bound: Option<i64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Simp,
    Gen,
    Upper,
}

#[derive(Subcommand, Debug)]
enum BoundsCmd {
    Eval {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        name: String,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        d: u64,
        #[arg(long, default_value_t = 0)]
        i: u64,
        /// Largest absolute transition weight.
        #[arg(long, default_value_t = 1)]
        w: u64,
        /// Charge-drop allowance for `gen` (default: the saturated bound).
        #[arg(long)]
        h: Option<u64>,
        /// Explicit arguments for `upper`, e.g. `--args 2,1,5` for W(n, d, Ld).
        #[arg(long, value_delimiter = ',')]
        args: Vec<u64>,
        #[arg(long)]
        saturate: Option<u64>,
        #[arg(long)]
        digits_only: bool,
    },
}

fn read(path: &Path) -> Res<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn load(path: &Path) -> Res<Wfa> {
    Ok(Wfa::from_json_str(&read(path)?)?)
}

fn json_arg(s: &str) -> Res<Value> {
    let text = match s.strip_prefix('@') {
        Some(p) => read(Path::new(p))?,
        None => s.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| CliError::Json(e.to_string()))
}

/// `@file` or inline JSON letters; otherwise a word of the automaton encoded
/// along its minimal run.
fn aug_word(aug: &AugWfa, s: &str) -> Res<Vec<LetterId>> {
    let t = s.trim_start();
    if t.starts_with('@') || t.starts_with('[') {
        return Ok(word_from_json(aug, &json_arg(t)?)?);
    }
    let base = aug.wfa().parse_word(s)?;
    aug.encode_min_run(&base)?
        .ok_or_else(|| CliError::Usage(format!("word {s:?} has no run")))
}

fn states(wfa: &Wfa, s: &Option<String>, default: Vec<usize>) -> Res<Vec<usize>> {
    match s {
        None => Ok(default),
        Some(s) => Ok(s.split(',').map(|q| wfa.state_id(q.trim())).collect::<Result<_, _>>()?),
    }
}

fn cycle(aug: &AugWfa, a: &CycleArgs) -> Res<CycleCandidate> {
    let set = json_arg(&a.set)?;
    let wfa = aug.wfa();
    let baseline = set
        .get("baseline")
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::Usage("set needs a baseline".into()))?;
    let mut reach = 0u64;
    for q in set.get("T").and_then(Value::as_array).into_iter().flatten() {
        let name = q.as_str().ok_or_else(|| CliError::Usage("T lists state names".into()))?;
        reach |= 1 << wfa.state_id(name)?;
    }
    let set = CycleSet {
        baseline: wfa.state_id(baseline)?,
        reach,
    };
    Ok(CycleCandidate::new(set, aug_word(aug, &a.word)?))
}

fn weight_json(w: Weight) -> Value {
    serde_json::to_value(w).unwrap_or(Value::Null)
}

fn run_json(aug: &AugWfa, r: &AugRun) -> Res<Value> {
    let steps = r
        .steps
        .iter()
        .map(|s| {
            Ok(json!({
                "letter": aug.letter_json(s.letter)?,
                "weight": s.weight,
                "to": aug.state_json(&s.to),
            }))
        })
        .collect::<Res<Vec<_>>>()?;
    Ok(json!({"start": aug.state_json(&r.start), "steps": steps}))
}

fn cycle_json(aug: &AugWfa, c: &CycleCandidate) -> Res<Value> {
    let names = aug.wfa().state_names();
    Ok(json!({
        "set": {
            "baseline": names[c.set.baseline],
            "T": crate::cactus::set_members(&c.set).iter().map(|&q| names[q].clone()).collect::<Vec<_>>(),
        },
        "word": aug.word_json(&c.word)?,
    }))
}

fn length_fn(spec: &str) -> Res<Box<dyn Fn(usize) -> u64>> {
    let bad = || CliError::Usage(format!("bad length function {spec:?}"));
    let (kind, k) = spec.split_once(':').ok_or_else(bad)?;
    let k: u64 = k.parse().map_err(|_| bad())?;
    Ok(match kind {
        "const" => Box::new(move |_| k),
        "linear" => Box::new(move |d| k.saturating_mul(d as u64 + 1)),
        "exp" => Box::new(move |d| k.saturating_pow(d as u32 + 1)),
        _ => return Err(bad()),
    })
}

fn split<'a>(word: &'a [LetterId], cuts: &[usize], count: usize) -> Res<Vec<&'a [LetterId]>> {
    if cuts.len() != count {
        return Err(CliError::Usage(format!("expected {count} cut positions, got {}", cuts.len())));
    }
    if cuts.windows(2).any(|w| w[0] > w[1]) || cuts.last().is_some_and(|&c| c > word.len()) {
        return Err(CliError::Usage(format!("cuts {cuts:?} do not split a word of length {}", word.len())));
    }
    let mut out = Vec::new();
    let mut prev = 0;
    for &c in cuts {
        out.push(&word[prev..c]);
        prev = c;
    }
    out.push(&word[prev..]);
    Ok(out)
}

fn sri_params(aug: &AugWfa, a: &SriArgs) -> Res<SriParams> {
    let p = SriParams::desk(aug, a.horizon)?;
    Ok(match (a.kind, a.h) {
        (_, Some(h)) => p.with_h(h),
        (KindArg::General, None) => p.with_default_h(aug),
        (KindArg::Simple, None) => p,
    })
}

/// Runs `check_sri`; a rejection ends the command with exit code 1.
fn checked_sri(aug: &AugWfa, a: &SriArgs) -> Res<Result<(SriDecomposition, SriParams), Value>> {
    let word = aug_word(aug, &a.word)?;
    let parts = split(&word, &a.cuts, 3)?;
    let params = sri_params(aug, a)?;
    match check_sri(aug, parts[0], parts[1], parts[2], parts[3], &params, a.kind.into())? {
        SriCheck::Valid(s) => Ok(Ok((s, params))),
        SriCheck::Rejected { clause, detail } => Ok(Err(json!({
            "sri": false,
            "clause": clause,
            "detail": detail,
        }))),
    }
}

fn bounds_eval(cmd: &BoundsCmd) -> Res<Value> {
    let BoundsCmd::Eval {
        family,
        name,
        n,
        d,
        i,
        w,
        h,
        args,
        saturate,
        digits_only,
    } = cmd;
    let mode = match saturate {
        Some(cap) => Mode::saturated(*cap),
        None => Mode::default(),
    };
    let value = match family {
        FamilyArg::Upper => {
            let name: UpperName = name.parse()?;
            let args: Vec<BigUint> = if args.is_empty() {
                vec![BigUint::from(*n), BigUint::from(*d), BigUint::from(*i)]
            } else {
                args.iter().map(|&a| BigUint::from(a)).collect()
            };
            Upper::new(mode).eval(name, &args)?
        }
        FamilyArg::Simp | FamilyArg::Gen => {
            let nm: Name = name.parse()?;
            let mut ev = match (family, h) {
                (FamilyArg::Simp, _) => Evaluator::simp(*n, *w, mode)?,
                (_, Some(h)) => Evaluator::gen(*n, *w, crate::bounds::BoundsValue::small(*h), mode)?,
                _ => Evaluator::gen_default(*n, *w, mode)?,
            };
            ev.eval(nm, *d, *i)?
        }
    };
    Ok(if *digits_only {
        json!({"name": name, "digits": value.digits(), "saturated": value.is_saturated()})
    } else {
        json!({
            "name": name,
            "value": value.render(),
            "digits": value.digits(),
            "saturated": value.is_saturated(),
        })
    })
}

fn dispatch(cli: &Cli) -> Res<(i32, Value)> {
    Ok(match &cli.cmd {
        Cmd::Eval { automaton, word } => {
            let wfa = load(automaton)?;
            let w = wfa.parse_word(word)?;
            (0, json!({"word": wfa.format_word(&w), "value": weight_json(wfa.eval(&w)?)}))
        }
        Cmd::Mwt { automaton, word, from, to } => {
            let wfa = load(automaton)?;
            let w = wfa.parse_word(word)?;
            let from = states(&wfa, from, vec![wfa.initial()])?;
            let to = states(&wfa, to, wfa.all_states())?;
            (0, json!({"word": wfa.format_word(&w), "value": weight_json(wfa.mwt(&from, &w, &to)?)}))
        }
        Cmd::Trim { automaton } => {
            let wfa = load(automaton)?;
            (0, serde_json::to_value(wfa.trim().to_json_value()).map_err(|e| CliError::Json(e.to_string()))?)
        }
        Cmd::GapWitness {
            automaton,
            min_gap,
            max_len,
        } => {
            let wfa = load(automaton)?;
            match find_gap_witness(&wfa, *min_gap, *max_len)? {
                Some(g) => {
                    let verified = verify_gap_witness(&wfa, &g, *min_gap)?;
                    let report = json!({
                        "found": true,
                        "x": wfa.format_word(&g.x),
                        "y": wfa.format_word(&g.y),
                        "q": wfa.state_name(g.q),
                        "gap": g.gap,
                        "verified": verified,
                    });
                    (if verified { 0 } else { 2 }, report)
                }
                None => (1, json!({"found": false, "min_gap": min_gap, "max_len": max_len})),
            }
        }
        Cmd::Determinize {
            automaton,
            gap,
            emit,
            budget,
        } => {
            let wfa = load(automaton)?;
            let r = decide_at_gap(&wfa, *gap, *budget)?;
            if let (Some(path), Some(det)) = (emit, &r.automaton) {
                let text = serde_json::to_string_pretty(det).map_err(|e| CliError::Json(e.to_string()))?;
                std::fs::write(path, text + "\n").map_err(|e| CliError::Io {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
            }
            let cex = r.counterexample.as_ref().map(|c| {
                json!({
                    "word": wfa.format_word(&c.word),
                    "a_value": weight_json(c.a_value),
                    "det_value": weight_json(c.det_value),
                })
            });
            let report = json!({
                "gap": r.gap,
                "determinisable": r.determinisable,
                "det_states": r.det_states,
                "counterexample": cex,
                "automaton": r.automaton.as_ref().map(|a: &WfaJson| serde_json::to_value(a).unwrap_or(Value::Null)),
            });
            (if r.determinisable { 0 } else { 1 }, report)
        }
        Cmd::CheckEquiv { automaton, gap, budget } => {
            let wfa = load(automaton)?;
            let det = build_restriction(&wfa, *gap, *budget)?;
            let v = check_equiv(&wfa, &det)?;
            let cex = v.counterexample.as_ref().map(|c| {
                json!({
                    "word": wfa.format_word(&c.word),
                    "a_value": weight_json(c.a_value),
                    "det_value": weight_json(c.det_value),
                })
            });
            (
                if v.equivalent { 0 } else { 1 },
                json!({"gap": gap, "equivalent": v.equivalent, "counterexample": cex}),
            )
        }
        Cmd::Cycles(CyclesCmd::FindStable {
            automaton,
            max_len,
            limit,
        }) => {
            let aug = AugWfa::new(load(automaton)?);
            let mut out = Vec::new();
            for (prefix, c) in find_reflexive_cycles(&aug, *max_len, *limit)? {
                out.push(json!({
                    "prefix": aug.word_json(&prefix)?,
                    "cycle": cycle_json(&aug, &c)?,
                    "stable": is_stable_cycle(&aug, &c)?,
                }));
            }
            (0, json!({"cycles": out}))
        }
        Cmd::Cycles(CyclesCmd::ShiftStable(a)) => {
            let aug = AugWfa::new(load(&a.automaton)?);
            let c = cycle(&aug, a)?;
            let s = shift_to_stable(&aug, &c)?;
            (
                0,
                json!({
                    "cycle": cycle_json(&aug, &s.cycle)?,
                    "anchor": run_json(&aug, &s.anchor)?,
                    "k": s.k,
                    "stable": is_stable_cycle(&aug, &s.cycle)?,
                }),
            )
        }
        Cmd::Cactus(CactusCmd::Stabilize(a)) => {
            let aug = AugWfa::new(load(&a.automaton)?);
            let c = cycle(&aug, a)?;
            let letter = stabilise(&aug, &c)?;
            let gp = grounded_pairs(&aug, &c)?;
            (
                0,
                json!({
                    "letter": aug.letter_json(letter)?,
                    "m": cycle_m(&aug, &c).to_string(),
                    "grounded_pairs": serde_json::to_value(&gp).map_err(|e| CliError::Json(e.to_string()))?,
                }),
            )
        }
        Cmd::Cactus(CactusCmd::Unfold { automaton, word, at, f }) => {
            let aug = AugWfa::new(load(automaton)?);
            let w = aug_word(&aug, word)?;
            if *at >= w.len() {
                return Err(CliError::Usage(format!("position {at} is outside the word")));
            }
            let u = unfold(&aug, &w[..*at], w[*at], &w[at + 1..], *f, &UnfoldOptions::default())?;
            (
                0,
                json!({"word": aug.word_json(&u.word)?, "m0": u.m0, "repetitions": u.repetitions}),
            )
        }
        Cmd::Cactus(CactusCmd::Flatten { automaton, word, f }) => {
            let aug = AugWfa::new(load(automaton)?);
            let w = aug_word(&aug, word)?;
            let fl = flatten(&aug, &w, *f, &UnfoldOptions::default())?;
            (
                0,
                json!({
                    "length": fl.word.len(),
                    "word": aug.word_json(&fl.word)?,
                    "boost": fl.boost,
                    "ghost_match": fl.ghost_match,
                }),
            )
        }
        Cmd::Cactus(CactusCmd::Validate {
            automaton,
            letter,
            length_fn: spec,
            max_depth,
        }) => {
            let aug = AugWfa::new(load(automaton)?);
            let l = letter_from_json(&aug, &json_arg(letter)?)?;
            let ok = validate_bounded_letter(&aug, l, &*length_fn(spec)?, *max_depth)?;
            (if ok { 0 } else { 1 }, json!({"valid": ok, "depth": aug.depth(&[l])?}))
        }
        Cmd::Analyze(AnalyzeCmd::Potential { automaton, word, horizon }) => {
            let aug = AugWfa::new(load(automaton)?);
            let w = aug_word(&aug, word)?;
            let p = potential(&aug, &w, &DominanceParams::base(&aug, *horizon)?)?;
            (0, p.to_json(&aug)?)
        }
        Cmd::Analyze(AnalyzeCmd::Charge { automaton, word }) => {
            let aug = AugWfa::new(load(automaton)?);
            let w = aug_word(&aug, word)?;
            let c = charge(&aug, &w)?;
            (0, json!({"psi": c.psi, "argmin": aug.state_json(&c.argmin)}))
        }
        Cmd::Analyze(AnalyzeCmd::Growth {
            automaton,
            samples,
            max_len,
            horizon,
        }) => {
            let aug = AugWfa::new(load(automaton)?);
            let letters = aug.base_letters()?;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let words = sample_words(&aug, &letters, *samples, *max_len, &mut rng)?;
            let r = bounded_growth_check(&aug, &letters, &words, &DominanceParams::base(&aug, *horizon)?)?;
            let ok = r.findings.is_empty();
            (
                if ok { 0 } else { 1 },
                serde_json::to_value(&r).map_err(|e| CliError::Json(e.to_string()))?,
            )
        }
        Cmd::Sri(SriCmd::Check(a)) => {
            let aug = AugWfa::new(load(&a.automaton)?);
            match checked_sri(&aug, a)? {
                Ok((s, _)) => (0, json!({"sri": true, "decomposition": s.to_json(&aug)?})),
                Err(r) => (1, r),
            }
        }
        Cmd::Sri(SriCmd::Classify(a)) => {
            let aug = AugWfa::new(load(&a.automaton)?);
            match checked_sri(&aug, a)? {
                Ok((s, _)) => (0, serde_json::to_value(classify(&aug, &s)?).map_err(|e| CliError::Json(e.to_string()))?),
                Err(r) => (1, r),
            }
        }
        Cmd::Sri(SriCmd::Bud { sri, witness_len }) => {
            let aug = AugWfa::new(load(&sri.automaton)?);
            match checked_sri(&aug, sri)? {
                Ok((s, p)) => {
                    let witness = WitnessParams::uniform(*witness_len, p.max_depth);
                    let (word, r) = bud(&aug, &s, &p.dominance, &witness)?;
                    let report = json!({
                        "word": aug.word_json(&word)?,
                        "report": serde_json::to_value(&r).map_err(|e| CliError::Json(e.to_string()))?,
                    });
                    (if r.holds() { 0 } else { 1 }, report)
                }
                Err(r) => (1, r),
            }
        }
        Cmd::Sri(SriCmd::DegenerateShorten(a)) => {
            let aug = AugWfa::new(load(&a.automaton)?);
            match checked_sri(&aug, a)? {
                Ok((s, p)) => {
                    let (word, r) = degenerate_shorten(&aug, &s, &p.dominance)?;
                    let report = json!({
                        "word": aug.word_json(&word)?,
                        "report": serde_json::to_value(&r).map_err(|e| CliError::Json(e.to_string()))?,
                    });
                    (0, report)
                }
                Err(r) => (1, r),
            }
        }
        Cmd::Zoom(ZoomCmd::Step {
            automaton,
            word,
            cuts,
            runs,
            thresholds,
            kind,
            horizon,
            drop_bound,
        }) => {
            let aug = AugWfa::new(load(automaton)?);
            let th = ZoomThresholds::from_json_str(&read(thresholds)?)?;
            let w = aug_word(&aug, word)?;
            let parts = split(&w, cuts, 2)?;
            let window = Window::new(parts[0], parts[1], parts[2]);
            let head = [parts[0], parts[1]].concat();
            let end = aug.xconf(&aug.initial_config(), &head)?;
            let targets = if runs.is_empty() {
                end.keys().filter(|s| s.is_baseline()).copied().collect::<Vec<_>>()
            } else {
                let mut out = Vec::new();
                for r in runs {
                    let q = aug.wfa().state_id(r)?;
                    let s = end
                        .keys()
                        .find(|s| s.inner == q)
                        .ok_or_else(|| CliError::Usage(format!("no run of w1·w2 ends in {r}")))?;
                    out.push(*s);
                }
                out
            };
            let mut aug_runs = Vec::new();
            for t in targets {
                let r = aug
                    .min_run(&aug.initial_config(), &head, Some(t))?
                    .ok_or_else(|| CliError::Usage("unreachable run target".into()))?;
                aug_runs.push(r);
            }
            let letter_maxw = parts[1].iter().map(|&l| aug.wmax(&[l])).collect::<Result<Vec<_>, _>>()?;
            let letter_maxw = letter_maxw.into_iter().max().unwrap_or(0);
            let kind: SriKind = (*kind).into();
            let mut sri = SriParams::desk(&aug, *horizon)?;
            if kind == SriKind::General {
                sri = sri.with_default_h(&aug);
            }
            let cfg = ZoomConfig {
                th,
                letter_maxw,
                drop_bound: drop_bound.unwrap_or(2 * letter_maxw),
                sri,
            };
            match zoom_step(&aug, &window, &aug_runs, &cfg, kind)? {
                ZoomOutcome::Sri {
                    decomposition,
                    extraction,
                } => (
                    0,
                    json!({
                        "outcome": "sri",
                        "decomposition": decomposition.to_json(&aug)?,
                        "clique": extraction.clique,
                        "colours": extraction.colours,
                        "sri": extraction.sri.as_ref().map(|s| s.to_json(&aug)).transpose()?,
                    }),
                ),
                ZoomOutcome::NewRun {
                    decomposition,
                    uncovered,
                    window,
                    runs,
                    gap,
                } => (
                    0,
                    json!({
                        "outcome": "new_run",
                        "decomposition": decomposition.to_json(&aug)?,
                        "uncovered": {"segment": uncovered.0, "state": aug.state_json(&uncovered.1)},
                        "window": window.to_json(&aug)?,
                        "runs": runs.iter().map(|r| run_json(&aug, r)).collect::<Res<Vec<_>>>()?,
                        "gap": gap,
                    }),
                ),
            }
        }
        Cmd::Bounds(b) => (0, bounds_eval(b)?),
    })
}

/// Parses `argv`, runs the command and returns the exit code and the report.
pub fn run_to_string<I, T>(argv: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return (code, e.to_string());
        }
    };
    let (code, report) = match dispatch(&cli) {
        Ok(r) => r,
        Err(e) => {
            log::error!("{e}");
            (2, json!({"error": {"code": e.code(), "message": e.to_string()}}))
        }
    };
    let text = serde_json::to_string_pretty(&report).unwrap_or_else(|_| "null".into());
    (code, text + "\n")
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let (code, out) = run_to_string(argv);
    print!("{out}");
    code
}
