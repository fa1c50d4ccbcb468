//! The acceptance suite. Runs every criterion, prints one PASS/FAIL line
//! each, and exits non-zero only when a criterion outside `KNOWN_FAILING`
//! fails.

mod common;

use std::collections::BTreeMap;
use std::fmt::Display;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{all_runs, all_words, BoundsOracle, Fail};
use tropdet::analysis::construct_high_potential;
use tropdet::augmented::{AugConfig, AugRun, AugState, AugWfa, LetterId};
use tropdet::bounds::{BoundsError, BoundsValue, Evaluator, Mode, Name, Upper, DEFAULT_BIT_BUDGET};
use tropdet::cactus::{
    cycle_m, find_reflexive_cycles, flatten, grounded_pairs, is_proper, is_stable_cycle, pumping_m0,
    shift_to_stable, stabilise, unfold, CycleCandidate, UnfoldOptions,
};
use tropdet::determinise::{build_restriction, decide_at_gap, DEFAULT_STATE_BUDGET};
use tropdet::fixtures::{bounded_gap, fig1, random_wfa};
use tropdet::sri::{check_sri, SriCheck, SriKind, SriParams};
use tropdet::weight::{Fin, Inf};
use tropdet::wfa::{RunTrace, Transition, Wfa};
use tropdet::zoom::{
    check_cover, decompose_phi_bounded, extract_sri, zoom_step, Window, ZoomConfig, ZoomOutcome, ZoomThresholds,
};
use tropdet::{find_gap_witness, verify_gap_witness};

/// Criteria whose failure is analysed rather than fixed.
const KNOWN_FAILING: &[u32] = &[9];

type Check = Result<String, String>;

trait Ctx<T> {
    fn ctx(self, what: &str) -> Result<T, String>;
}

impl<T, E: Display> Ctx<T> for Result<T, E> {
    fn ctx(self, what: &str) -> Result<T, String> {
        self.map_err(|e| format!("{what}: {e}"))
    }
}

impl<T> Ctx<T> for Option<T> {
    fn ctx(self, what: &str) -> Result<T, String> {
        self.ok_or_else(|| format!("{what}: missing"))
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let el = start.elapsed();
    if el > limit {
        Err(format!("took {el:.2?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn main() {
    let criteria: [(u32, fn() -> Check); 10] = [
        (1, fig1_unbounded_gaps),
        (2, bounded_gap_control),
        (3, equivalence_oracle),
        (4, stable_cycles),
        (5, grounded_pumping),
        (6, baseline_shift),
        (7, unfold_flatten),
        (8, charge_to_potential),
        (9, bounds_fidelity),
        (10, zoom_extraction),
    ];
    let mut unexpected = 0;
    for (n, f) in criteria {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let el = start.elapsed();
        match res {
            Ok(detail) => println!("criterion {n}: PASS ({el:.2?}) {detail}"),
            Err(detail) => {
                let note = if KNOWN_FAILING.contains(&n) { " [known]" } else { "" };
                println!("criterion {n}: FAIL{note} ({el:.2?}) {detail}");
                if note.is_empty() {
                    unexpected += 1;
                }
            }
        }
    }
    if unexpected > 0 {
        std::process::exit(1);
    }
}

// 1 ------------------------------------------------------------------------

fn fig1_unbounded_gaps() -> Check {
    let start = Instant::now();
    let wfa = fig1();
    let (a, b) = (wfa.letter_id("a").ctx("a")?, wfa.letter_id("b").ctx("b")?);
    for w in all_words(2, 6) {
        let na = w.iter().filter(|&&l| l == a).count() as i64;
        let nb = w.len() as i64 - na;
        if wfa.eval(&w).ctx("eval")? != Fin(na.min(nb)) {
            return Err(format!("fixture disagrees with min(#a,#b) on {}", wfa.format_word(&w)));
        }
    }
    for gap in 0..=8i64 {
        let r = decide_at_gap(&wfa, gap, DEFAULT_STATE_BUDGET).ctx("decide")?;
        if r.determinisable {
            return Err(format!("B = {gap} reported determinisable"));
        }
        let ce = r.counterexample.ctx("counterexample")?;
        let det = build_restriction(&wfa, gap, DEFAULT_STATE_BUDGET).ctx("restriction")?;
        let (dv, av) = (det.eval(&ce.word).ctx("det eval")?, wfa.eval(&ce.word).ctx("eval")?);
        if dv <= av || dv != ce.det_value || av != ce.a_value {
            return Err(format!("B = {gap}: counterexample does not re-verify"));
        }
        let g = find_gap_witness(&wfa, gap, 2 * gap as usize + 6)
            .ctx("witness search")?
            .ctx("witness")?;
        if !verify_gap_witness(&wfa, &g, gap).ctx("verify")? || g.gap < gap + 1 {
            return Err(format!("B = {gap}: witness does not verify"));
        }
        let (ex, ey) = (vec![a; gap as usize + 1], vec![b; gap as usize + 2]);
        if g.x != ex || g.y != ey {
            return Err(format!(
                "B = {gap}: witness x = {}, y = {}",
                wfa.format_word(&g.x),
                wfa.format_word(&g.y)
            ));
        }
    }
    within(start, Duration::from_secs(5))?;
    Ok("B in 0..=8 refuted, witnesses a^(B+1), b^(B+2)".into())
}

// 2 ------------------------------------------------------------------------

fn bounded_gap_control() -> Check {
    let start = Instant::now();
    let wfa = bounded_gap();
    let r = decide_at_gap(&wfa, 1, DEFAULT_STATE_BUDGET).ctx("decide")?;
    if !r.determinisable {
        return Err("not determinisable at B = 1".into());
    }
    let det = Wfa::from_json_value(&r.automaton.ctx("emitted automaton")?).ctx("emitted json")?;
    if det.alphabet() != wfa.alphabet() {
        return Err("alphabet changed".into());
    }
    let words = all_words(wfa.num_letters(), 8);
    for w in &words {
        if det.eval(w).ctx("det eval")? != wfa.eval(w).ctx("eval")? {
            return Err(format!("disagree on {}", wfa.format_word(w)));
        }
    }
    within(start, Duration::from_secs(5))?;
    Ok(format!("{} det states, {} words agree", r.det_states, words.len()))
}

// 3 ------------------------------------------------------------------------

fn equivalence_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let words = all_words(2, 10);
    let (mut automata, mut refuted, mut brute) = (0, 0, 0);
    while automata < 240 {
        let n = rng.gen_range(1..=3);
        let density = rng.gen_range(0.3..0.8);
        let wfa = random_wfa(&mut rng, n, 2, (-2, 2), density);
        automata += 1;
        for gap in 0..=3 {
            let r = decide_at_gap(&wfa, gap, DEFAULT_STATE_BUDGET).ctx("decide")?;
            let det = build_restriction(&wfa, gap, DEFAULT_STATE_BUDGET).ctx("restriction")?;
            let mut mismatch = None;
            for w in &words {
                if det.eval(w).ctx("det eval")? != wfa.eval(w).ctx("eval")? {
                    mismatch = Some(w);
                    break;
                }
            }
            if let Some(w) = mismatch {
                brute += 1;
                if r.determinisable {
                    return Err(format!(
                        "B = {gap}: exhaustive counterexample {} but verdict equivalent\n{}",
                        wfa.format_word(w),
                        wfa.to_json_string()
                    ));
                }
            }
            if !r.determinisable {
                refuted += 1;
                let ce = r.counterexample.ctx("counterexample")?;
                if det.eval(&ce.word).ctx("det eval")? <= wfa.eval(&ce.word).ctx("eval")? {
                    return Err(format!("B = {gap}: shipped word does not separate"));
                }
            }
        }
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "{automata} automata x 4 bounds, {refuted} refuted, {brute} with a counterexample of length <= 10"
    ))
}

// 4, 5 ---------------------------------------------------------------------

type CyclePool = Vec<(AugWfa, Vec<(Vec<LetterId>, CycleCandidate)>)>;

/// Proper reflexive cycles on at most four augmented states, drawn from
/// random automata.
fn random_cycles(seed: u64, want: usize) -> Result<CyclePool, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut total = 0;
    for _ in 0..5000 {
        if total >= want {
            break;
        }
        let n = rng.gen_range(2..=4);
        let density = rng.gen_range(0.3..0.7);
        let wfa = random_wfa(&mut rng, n, 2, (-3, 3), density);
        let aug = AugWfa::new(wfa);
        let mut keep = Vec::new();
        for (prefix, c) in find_reflexive_cycles(&aug, 3, 60).ctx("cycles")? {
            if c.set.size() <= 4 && is_proper(&aug, &c).ctx("proper")? {
                keep.push((prefix, c));
            }
        }
        let take = keep.len().min(4);
        let picked: Vec<_> = (0..take).map(|_| keep.swap_remove(rng.gen_range(0..keep.len()))).collect();
        total += picked.len();
        if !picked.is_empty() {
            out.push((aug, picked));
        }
    }
    Ok(out)
}

fn one_state(s: AugState) -> AugConfig {
    AugConfig::from([(s, 0)])
}

fn stable_cycles() -> Check {
    let pool = random_cycles(4, 240)?;
    let (mut checked, mut shifted) = (0, 0);
    for (aug, cycles) in &pool {
        for (_, c) in cycles {
            let sh = shift_to_stable(aug, c).ctx("shift")?;
            if sh.cycle != *c {
                shifted += 1;
            }
            if !is_stable_cycle(aug, &sh.cycle).ctx("stable")? {
                return Err("shift_to_stable returned an unstable cycle".into());
            }
            let states = sh.cycle.set.states();
            for k in 1..=states.len() {
                let word = sh.cycle.word.repeat(k);
                for &s in &states {
                    if let Fin(v) = aug.xconf(&one_state(s), &word).ctx("xconf")?.get(&s).map_or(Inf, |&v| Fin(v)) {
                        if v < 0 {
                            return Err(format!("negative cycle of weight {v} on w^{k}"));
                        }
                    }
                }
            }
            checked += 1;
        }
    }
    if checked < 200 {
        return Err(format!("only {checked} cycles"));
    }
    Ok(format!("{checked} cycles, {shifted} needed a shift"))
}

fn grounded_pumping() -> Check {
    const THRESHOLD: i64 = 4;
    let pool = random_cycles(5, 80)?;
    let (mut checked, mut pairs, mut ghosts) = (0, 0, 0);
    for (aug, cycles) in &pool {
        for (_, c) in cycles {
            let cyc = shift_to_stable(aug, c).ctx("shift")?.cycle;
            let gp = grounded_pairs(aug, &cyc).ctx("grounded")?;
            let alpha = stabilise(aug, &cyc).ctx("stabilise")?;
            let m = cycle_m(aug, &cyc).to_usize().ctx("m")?;
            let m0 = pumping_m0(aug, &cyc, THRESHOLD, 2000).ctx("M0")?;
            let states = cyc.set.states();
            for k in [m0, m0 + 1, m0 + 2] {
                let word = cyc.word.repeat(2 * m * k as usize);
                for &s in &states {
                    let brute = aug.xconf(&one_state(s), &word).ctx("xconf")?;
                    let succ: BTreeMap<AugState, i64> = aug.successors(s, alpha).ctx("succ")?.iter().copied().collect();
                    for &t in &states {
                        let b = brute.get(&t).copied();
                        match gp.get(s.inner, t.inner) {
                            Some(g) => {
                                if succ.get(&t) != Some(&g.weight) || b != Some(g.weight) {
                                    return Err(format!(
                                        "grounded pair weight {} vs letter {:?} vs brute {b:?} at k = {k}",
                                        g.weight,
                                        succ.get(&t)
                                    ));
                                }
                                pairs += 1;
                            }
                            None => {
                                if succ.contains_key(&t) {
                                    return Err("letter has a non-grounded transition".into());
                                }
                                if k == m0 {
                                    if b.is_some_and(|v| v <= THRESHOLD) {
                                        return Err(format!("non-grounded pair at {b:?} <= {THRESHOLD} at M0 = {m0}"));
                                    }
                                    ghosts += 1;
                                }
                            }
                        }
                    }
                }
            }
            checked += 1;
        }
    }
    if checked < 50 {
        return Err(format!("only {checked} cycles"));
    }
    Ok(format!("{checked} cycles, {pairs} grounded checks, {ghosts} non-grounded pairs above {THRESHOLD}"))
}

// 6 ------------------------------------------------------------------------

fn random_run(rng: &mut ChaCha8Rng, wfa: &Wfa, len: usize) -> RunTrace {
    let mut run = RunTrace::empty(wfa.initial());
    for _ in 0..len {
        let q = run.end();
        let out: Vec<Transition> = wfa.transitions().filter(|t| t.from == q).collect();
        if out.is_empty() {
            break;
        }
        run.transitions.push(out[rng.gen_range(0..out.len())]);
    }
    run
}

fn prefix_wts(r: &AugRun) -> Result<Vec<i64>, String> {
    (0..=r.len()).map(|i| r.prefix_wt(i).ctx("prefix")).collect()
}

fn baseline_shift() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut tuples = 0;
    for _ in 0..5000 {
        if tuples >= 240 {
            break;
        }
        let n = rng.gen_range(1..=3);
        let wfa = random_wfa(&mut rng, n, 2, (-2, 2), 0.6);
        let len = rng.gen_range(1..=6);
        let base = random_run(&mut rng, &wfa, len);
        if base.is_empty() {
            continue;
        }
        let aug = AugWfa::new(wfa.clone());
        let word = aug.encode_run(&base).ctx("encode")?;
        let runs = all_runs(&wfa, &base.word());
        let end = aug.xconf(&aug.initial_config(), &word).ctx("xconf")?;
        let ends: Vec<AugState> = end.keys().copied().collect();
        let target = ends[rng.gen_range(0..ends.len())];
        let anchor = aug
            .min_run(&aug.initial_config(), &word, Some(target))
            .ctx("min run")?
            .ctx("anchor")?;
        let r1 = aug.lift_run(&runs[rng.gen_range(0..runs.len())], &base).ctx("lift")?;
        let r2 = aug.lift_run(&runs[rng.gen_range(0..runs.len())], &base).ctx("lift")?;

        let s1 = aug.baseline_shift_run(&r1, &anchor).ctx("shift r1")?;
        let s2 = aug.baseline_shift_run(&r2, &anchor).ctx("shift r2")?;
        aug.validate_run(&s1).ctx("shifted run is not a run")?;
        aug.validate_run(&s2).ctx("shifted run is not a run")?;
        let (p1, p2, q1, q2, pa) = (prefix_wts(&r1)?, prefix_wts(&r2)?, prefix_wts(&s1)?, prefix_wts(&s2)?, prefix_wts(&anchor)?);
        for i in 0..p1.len() {
            if p1[i] - p2[i] != q1[i] - q2[i] || q1[i] != p1[i] - pa[i] {
                return Err(format!("prefix gap changed at {i}"));
            }
        }

        let z = aug.baseline_shift_run(&anchor, &anchor).ctx("self shift")?;
        if z.steps.iter().any(|s| s.weight != 0) || !aug.is_seamless(&aug.initial_config(), &z).ctx("seamless")? {
            return Err("shift(anchor, anchor) is not a zero seamless run".into());
        }

        let w1 = aug.baseline_shift_word(&word, &r1).ctx("shift word")?;
        let r21 = aug.baseline_shift_run(&r2, &r1).ctx("shift r2 by r1")?;
        let lhs = aug.baseline_shift_word(&w1, &r21).ctx("shift shifted")?;
        let rhs = aug.baseline_shift_word(&word, &r2).ctx("shift word by r2")?;
        if lhs != rhs {
            return Err("right absorption fails".into());
        }
        tuples += 1;
    }
    if tuples < 200 {
        return Err(format!("only {tuples} tuples"));
    }
    Ok(format!("{tuples} tuples"))
}

// 7 ------------------------------------------------------------------------

fn unfold_flatten() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pool = random_cycles(7, 400)?;
    let opts = UnfoldOptions::default();
    let (mut fixtures, mut ghost) = (0, 0);
    for (aug, cycles) in &pool {
        for (prefix, c) in cycles {
            if fixtures >= 80 {
                break;
            }
            if !is_stable_cycle(aug, c).ctx("stable")? {
                continue;
            }
            let alpha = stabilise(aug, c).ctx("stabilise")?;
            let x: Vec<LetterId> = [&prefix[..], &c.word].concat();
            let y = c.word.clone();
            let whole: Vec<LetterId> = [&x[..], &[alpha], &y].concat();
            let me = aug.maxeff(&whole).ctx("maxeff")?;
            let f = 2 * me + 1 + rng.gen_range(0..=4);
            let s0 = aug.initial_config();

            let u = unfold(aug, &x, alpha, &y, f, &opts).ctx("unfold")?;
            let body = u.word.len() - x.len() - y.len();
            if u.word[..x.len()] != x[..]
                || u.word[u.word.len() - y.len()..] != y[..]
                || u.word[x.len()..x.len() + body] != c.word.repeat(u.repetitions)[..]
            {
                return Err("unfolded word has the wrong shape".into());
            }
            for i in 0..=y.len() {
                let c1 = aug.xconf(&s0, &[&x[..], &[alpha], &y[..i]].concat()).ctx("xconf")?;
                let c2 = aug.xconf(&s0, &u.word[..x.len() + body + i]).ctx("xconf")?;
                for (s, v) in &c1 {
                    if c2.get(s) != Some(v) {
                        return Err(format!("unfolding changed an old state at suffix {i}"));
                    }
                }
                for (s, &v) in &c2 {
                    if !c1.contains_key(s) && v <= f - me {
                        return Err(format!("new state at {v} <= F - maxeff at suffix {i}"));
                    }
                }
            }

            let fl = flatten(aug, &whole, f, &opts).ctx("flatten")?;
            for &l in &fl.word {
                if aug.is_cactus(l).ctx("kind")? {
                    return Err("flattened word keeps a cactus letter".into());
                }
            }
            let c = aug.xconf(&s0, &whole).ctx("xconf")?;
            let d = aug.xconf(&s0, &fl.word).ctx("xconf")?;
            let max_old = c.values().copied().max().unwrap_or(0);
            for (s, v) in &c {
                if d.get(s) != Some(v) {
                    return Err("flattening changed an old state".into());
                }
            }
            for (s, &v) in &d {
                if !c.contains_key(s) && v < max_old + f {
                    return Err(format!("flattening produced {v} < max + F"));
                }
            }
            if fl.ghost_match {
                ghost += 1;
            }
            fixtures += 1;
        }
    }
    if fixtures < 50 {
        return Err(format!("only {fixtures} fixtures"));
    }
    Ok(format!("{fixtures} fixtures, ghost support matched in {ghost}"))
}

// 8 ------------------------------------------------------------------------

/// `s` spawns `h` on the baseline and `l` one below; `l` loses one per `a`
/// and dies on `b`.
fn charge_drop(slope: i64) -> AugWfa {
    AugWfa::new(
        Wfa::from_named(
            &["s", "h", "l"],
            &["a", "b"],
            "s",
            &[
                ("s", "a", 0, "h"),
                ("s", "a", -1, "l"),
                ("h", "a", 0, "h"),
                ("l", "a", -slope, "l"),
                ("h", "b", 0, "h"),
            ],
        )
        .expect("fixture is well formed"),
    )
}

fn charge_to_potential() -> Check {
    let mut fixtures = 0;
    for p in 0..=5i64 {
        for extra in 0..4 {
            let slope = 1 + extra % 2;
            let aug = charge_drop(slope);
            let wfa = aug.wfa().clone();
            let (s, h) = (wfa.state_id("s").ctx("s")?, wfa.state_id("h").ctx("h")?);
            let (a, b) = (wfa.letter_id("a").ctx("a")?, wfa.letter_id("b").ctx("b")?);
            let n = p as usize + 2 + extra as usize;
            let ts: Vec<Transition> = (0..n)
                .map(|k| Transition {
                    from: if k == 0 { s } else { h },
                    letter: a,
                    weight: 0,
                    to: h,
                })
                .collect();
            let u = aug.encode_run(&RunTrace { start: s, transitions: ts }).ctx("encode")?;
            let sigma = aug
                .base_letter(Transition { from: h, letter: b, weight: 0, to: h })
                .ctx("sigma")?;
            let (w, rep) = construct_high_potential(&aug, &u, sigma, p).ctx("construct")?;
            if rep.phi <= p {
                return Err(format!("phi = {} <= P = {p}", rep.phi));
            }
            let c = aug.xconf(&aug.initial_config(), &w).ctx("xconf")?;
            if c.get(&rep.dominant) != Some(&rep.phi) {
                return Err("certificate state does not carry phi".into());
            }
            let lower: Vec<AugState> = c.iter().filter(|(_, &v)| v < rep.phi).map(|(&t, _)| t).collect();
            let alive = aug.mwt(&[rep.dominant], &rep.suffix, None).ctx("mwt")?.is_finite();
            let lower_alive = !lower.is_empty() && aug.mwt(&lower, &rep.suffix, None).ctx("mwt")?.is_finite();
            if !alive || lower_alive {
                return Err("certificate suffix does not separate".into());
            }
            fixtures += 1;
        }
    }
    Ok(format!("{fixtures} fixtures, P in 0..=5"))
}

// 9 ------------------------------------------------------------------------

const NAMES: [(Name, &str); 5] = [
    (Name::Len, "Len"),
    (Name::Cov, "Cov"),
    (Name::MaxWt, "MaxWt"),
    (Name::Amp, "Amp"),
    (Name::Typ, "Typ"),
];

fn as_oracle(v: Result<BoundsValue, BoundsError>) -> Result<Result<BigUint, Fail>, String> {
    Ok(match v {
        Ok(BoundsValue::Exact(x)) => Ok(x),
        Ok(BoundsValue::Saturated(_)) => return Err("exact mode returned a saturated value".into()),
        Err(BoundsError::BitBudget(_)) => Err(Fail::TooBig),
        Err(BoundsError::Undefined(_)) => Err(Fail::Undefined),
        Err(BoundsError::OutOfRange(_)) => Err(Fail::OutOfRange),
        Err(e) => return Err(e.to_string()),
    })
}

fn bounds_fidelity() -> Check {
    let start = Instant::now();
    let budget = DEFAULT_BIT_BUDGET;
    let caps = [BigUint::from(10u64).pow(12), BigUint::from(10u64).pow(40)];
    let (mut points, mut exact, mut sat_checks) = (0, 0, 0);
    for n in 1..=2u64 {
        for w in 1..=3u64 {
            for gen in [false, true] {
                let oracle = if gen {
                    BoundsOracle::gen(n, w, budget).map_err(|f| format!("oracle H: {f:?}"))?
                } else {
                    BoundsOracle::simp(n, w, budget)
                };
                let mk = |mode: Mode| {
                    if gen {
                        Evaluator::gen_default(n, w, mode)
                    } else {
                        Evaluator::simp(n, w, mode)
                    }
                };
                let mut ev = mk(Mode::default()).ctx("evaluator")?;
                let mut sats: Vec<(BigUint, Evaluator)> = caps
                    .iter()
                    .map(|c| Ok((c.clone(), mk(Mode::saturated(c.clone())).ctx("evaluator")?)))
                    .collect::<Result<_, String>>()?;
                for d in 0..=2u64 {
                    for i in 0..=n + 1 {
                        for (name, label) in NAMES {
                            let got = as_oracle(ev.eval(name, d, i))?;
                            let want = oracle.eval(label, d, i);
                            if got != want {
                                return Err(format!(
                                    "{}{label}({d},{i}) at n = {n}, w = {w}: evaluator {got:?}, oracle {want:?}",
                                    if gen { "G" } else { "" }
                                ));
                            }
                            points += 1;
                            let Ok(v) = got else { continue };
                            exact += 1;
                            for (cap, se) in sats.iter_mut() {
                                let s = se.eval(name, d, i).ctx("saturated")?;
                                let ok = if &v < cap { s == BoundsValue::Exact(v.clone()) } else { s.is_saturated() };
                                if !ok {
                                    return Err(format!("saturated mode at cap {cap} gives {s} for {label}({d},{i}) = {v}"));
                                }
                                sat_checks += 1;
                            }
                        }
                    }
                }
                // bases
                for i in 0..=n + 1 {
                    if ev.eval(Name::Len, 0, i).ctx("Len")? != BoundsValue::small(1) {
                        return Err(format!("Len(0,{i}) != 1"));
                    }
                }
                for d in 1..=n {
                    if ev.eval(Name::Cov, d, n).ctx("Cov")? != BoundsValue::small(1) {
                        return Err(format!("Cov({d},{n}) != 1"));
                    }
                    if ev.eval(Name::Len, d, n + 1).ctx("Len")? != BoundsValue::small(0) {
                        return Err(format!("Len({d},{}) != 0", n + 1));
                    }
                }
            }
        }
    }
    let upper = Upper::new(Mode::default());
    for n in 1..=4u64 {
        for ld in [0u64, 1, 7, 1000] {
            if upper.w(n, 0, &BoundsValue::small(ld)).ctx("W")? != BoundsValue::small(n) {
                return Err(format!("W({n},0,{ld}) != {n}"));
            }
        }
    }
    within(start, Duration::from_secs(30))?;
    // closed form, co-evaluated at the evaluator's L(d) and at small fixed Ld
    let mut violations = Vec::new();
    let mut co = 0;
    for n in 1..=2u64 {
        let mut ev = Evaluator::simp(n, 1, Mode::default()).ctx("evaluator")?;
        for d in 0..=n {
            let mut lds: Vec<BoundsValue> = vec![ev.length_bound(d).ctx("L(d)")?];
            lds.extend([1u64, 2, 3].map(BoundsValue::small));
            for ld in lds {
                let w = upper.w(n, d, &ld).ctx("W")?;
                let cf = upper.w_closed_form(n, &ld).ctx("closed form")?;
                co += 1;
                if w.exact() > cf.exact() {
                    violations.push(format!("W({n},{d},{ld}) = {w} > {cf}"));
                }
            }
        }
    }
    let summary = format!(
        "{points} points agree with the oracle ({exact} exact), {sat_checks} saturated checks, bases hold"
    );
    if violations.is_empty() {
        Ok(format!("{summary}, closed form holds at {co} points"))
    } else {
        Err(format!(
            "{summary}; closed form W <= (2n*n!)^n*Ld^n + n fails at {}/{co} points: {}",
            violations.len(),
            violations.join(", ")
        ))
    }
}

// 10 -----------------------------------------------------------------------

fn baseline_letter(aug: &AugWfa, letter: usize, weight: i64) -> Result<LetterId, String> {
    let q = aug.wfa().initial();
    aug.base_letter(Transition { from: q, letter, weight, to: q }).ctx("letter")
}

fn top_run(aug: &AugWfa, word: &[LetterId]) -> Result<AugRun, String> {
    let c = aug.xconf(&aug.initial_config(), word).ctx("xconf")?;
    let top = *c.keys().find(|s| s.is_baseline()).ctx("baseline state")?;
    aug.min_run(&aug.initial_config(), word, Some(top))
        .ctx("min run")?
        .ctx("baseline run")
}

fn zoom_cfg(aug: &AugWfa, th: ZoomThresholds) -> Result<ZoomConfig, String> {
    Ok(ZoomConfig {
        th,
        letter_maxw: 1,
        drop_bound: 1,
        sri: SriParams::desk(aug, 2).ctx("params")?,
    })
}

fn zoom_extraction() -> Check {
    let loop1 = AugWfa::new(Wfa::from_named(&["q"], &["a"], "q", &[("q", "a", 0, "q")]).ctx("loop")?);
    let shadow = AugWfa::new(
        Wfa::from_named(
            &["p", "r"],
            &["a"],
            "p",
            &[("p", "a", 0, "p"), ("p", "a", 1, "r"), ("r", "a", 0, "r")],
        )
        .ctx("shadow")?,
    );
    let th = |cover, amp| ZoomThresholds {
        gap: 1,
        cover,
        amp,
        seg_min_len: 1,
        seg_count: 3,
        seg_quantum: 1,
    };
    let mut fixtures: Vec<(&AugWfa, usize, ZoomThresholds)> = Vec::new();
    for len in 6..=13 {
        fixtures.push((&loop1, len, th(4, 2)));
    }
    for (len, cover) in [(6, 2), (8, 4), (9, 6), (12, 4)] {
        fixtures.push((&shadow, len, th(cover, 2)));
    }
    let mut extracted = 0;
    for (aug, len, th) in &fixtures {
        let a = baseline_letter(aug, 0, 0)?;
        let win = Window::new(&[], &vec![a; *len], &[]);
        let run = top_run(aug, &win.word())?;
        let cfg = zoom_cfg(aug, *th)?;
        let dec = decompose_phi_bounded(aug, &win, &cfg).ctx("decompose")?;
        let runs = std::slice::from_ref(&run);
        if !check_cover(aug, &win, &dec, runs, th.cover).ctx("cover")?.covered {
            return Err(format!("fixture of length {len} is not covered"));
        }
        let ex = extract_sri(aug, &win, &dec, runs, th.cover, SriKind::Simple, &cfg.sri).ctx("extract")?;
        let sri = ex.sri.ctx(&format!("SRI for length {len}: {}", ex.diagnostics.join("; ")))?;
        if sri.word() != win.word() {
            return Err("split does not spell the window".into());
        }
        match check_sri(aug, &sri.u, &sri.x, &sri.y, &sri.v, &cfg.sri, SriKind::Simple).ctx("check")? {
            SriCheck::Valid(s) if s == sri => extracted += 1,
            SriCheck::Valid(_) => return Err("re-check yields a different decomposition".into()),
            SriCheck::Rejected { clause, detail } => return Err(format!("re-check rejects {clause}: {detail}")),
        }
    }

    // escape: `h` climbs away from the baseline and is never covered
    let k = 100;
    let ramp = AugWfa::new(
        Wfa::from_named(
            &["b", "h", "g"],
            &["i", "a", "e"],
            "b",
            &[
                ("b", "i", 0, "b"),
                ("b", "i", -k, "h"),
                ("b", "i", -k - 1, "g"),
                ("h", "i", 0, "h"),
                ("g", "i", 0, "g"),
                ("b", "a", 0, "b"),
                ("h", "a", 1, "h"),
                ("g", "a", 1, "g"),
                ("b", "e", 0, "b"),
                ("h", "e", 0, "h"),
            ],
        )
        .ctx("ramp")?,
    );
    let (i, a) = (baseline_letter(&ramp, 0, 0)?, baseline_letter(&ramp, 1, 0)?);
    let th = ZoomThresholds { cover: 10, amp: 6, ..th(10, 6) };
    let win = Window::new(&[i], &[a; 12], &[]);
    let run = top_run(&ramp, &win.word())?;
    let outcome = zoom_step(&ramp, &win, &[run], &zoom_cfg(&ramp, th)?, SriKind::Simple).ctx("zoom")?;
    let ZoomOutcome::NewRun { window, runs, gap, .. } = outcome else {
        return Err("escape fixture did not spawn a run".into());
    };
    let lo = window.w1.len();
    let mut least = i64::MAX;
    for pos in lo + 1..=lo + window.w2.len() {
        for x in 0..runs.len() {
            for y in x + 1..runs.len() {
                let g = (runs[x].prefix_wt(pos).ctx("wt")? - runs[y].prefix_wt(pos).ctx("wt")?).abs();
                least = least.min(g);
            }
        }
    }
    if least != gap || 2 * gap < th.cover {
        return Err(format!("certified gap {gap}, recomputed {least}, cover {}", th.cover));
    }
    Ok(format!("{extracted} covered fixtures extracted, escape gap {gap} >= cover/2"))
}
