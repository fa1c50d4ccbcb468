//! Dominance, potential, charge, and the witness checker.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::augmented::{
    config_argmin, config_min, config_support, shift_state, AugConfig, AugError, AugState, AugWfa,
    LetterId, LetterKind,
};
use crate::bounds::{Evaluator, Mode};
use crate::cactus::{
    contains_rebase, cycle_m, cycle_of_letter, flatten, unfold, validate_bounded_letter, CactusError,
    UnfoldOptions,
};
use crate::weight::{Fin, WeightError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("word contains a jump letter")]
    JumpPresent,
    #[error("word has no seamless baseline run")]
    NoSeamlessBaseline,
    #[error("configuration is empty")]
    EmptyConfiguration,
    #[error("dominance alphabet is empty")]
    EmptyAlphabet,
    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),
    #[error("flatten unsupported: {0}")]
    FlattenUnsupported(String),
    #[error("postcondition violated: {0}")]
    ContractViolated(String),
    #[error(transparent)]
    Cactus(#[from] CactusError),
    #[error(transparent)]
    Aug(#[from] AugError),
    #[error(transparent)]
    Weight(#[from] WeightError),
}

/// Suffixes searched for dominance: words over `alphabet` of length at most
/// `horizon`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DominanceParams {
    pub horizon: usize,
    pub alphabet: Vec<LetterId>,
}

impl DominanceParams {
    /// All Δ-letters of `Â`.
    pub fn base(aug: &AugWfa, horizon: usize) -> Result<DominanceParams, AnalysisError> {
        Ok(DominanceParams {
            horizon,
            alphabet: aug.base_letters()?,
        })
    }

    pub fn with_letters(mut self, extra: &[LetterId]) -> DominanceParams {
        for &l in extra {
            if !self.alphabet.contains(&l) {
                self.alphabet.push(l);
            }
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChargeReport {
    pub psi: i64,
    pub argmin: AugState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PotentialReport {
    pub phi: i64,
    pub dominant: AugState,
    pub suffix: Vec<LetterId>,
    pub horizon: usize,
}

impl PotentialReport {
    pub fn to_json(&self, aug: &AugWfa) -> Result<Value, AnalysisError> {
        Ok(json!({
            "phi": self.phi,
            "dominant": aug.state_json(&self.dominant),
            "suffix": aug.word_json(&self.suffix)?,
            "horizon": self.horizon,
        }))
    }
}

fn check_word(aug: &AugWfa, word: &[LetterId]) -> Result<(), AnalysisError> {
    for &l in word {
        if aug.is_jump(l)? {
            return Err(AnalysisError::JumpPresent);
        }
    }
    if aug.seamless_baseline(word)?.is_none() {
        return Err(AnalysisError::NoSeamlessBaseline);
    }
    Ok(())
}

/// `ψ(c) = −min c`.
pub fn charge_of_config(c: &AugConfig) -> Result<ChargeReport, AnalysisError> {
    let Fin(min) = config_min(c) else {
        return Err(AnalysisError::EmptyConfiguration);
    };
    Ok(ChargeReport {
        psi: min.checked_neg().ok_or(WeightError::Overflow("charge"))?,
        argmin: config_argmin(c).expect("non-empty"),
    })
}

pub fn charge(aug: &AugWfa, word: &[LetterId]) -> Result<ChargeReport, AnalysisError> {
    check_word(aug, word)?;
    charge_of_config(&aug.xconf(&aug.initial_config(), word)?)
}

fn step_set(aug: &AugWfa, set: &BTreeSet<AugState>, l: LetterId) -> Result<BTreeSet<AugState>, AnalysisError> {
    let mut out = BTreeSet::new();
    for &s in set {
        out.extend(aug.successors(s, l)?.iter().map(|&(t, _)| t));
    }
    Ok(out)
}

/// Shortest, then lexicographically least (by alphabet order), suffix that
/// `q` can read and no state of `lower` can.
pub fn separating_suffix(
    aug: &AugWfa,
    q: AugState,
    lower: &BTreeSet<AugState>,
    params: &DominanceParams,
) -> Result<Option<Vec<LetterId>>, AnalysisError> {
    if lower.is_empty() {
        return Ok(Some(Vec::new()));
    }
    if params.alphabet.is_empty() {
        return Err(AnalysisError::EmptyAlphabet);
    }
    type Node = (BTreeSet<AugState>, BTreeSet<AugState>);
    let start: Node = (BTreeSet::from([q]), lower.clone());
    let mut seen: HashSet<Node> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([(start, Vec::new())]);
    while let Some(((rq, rl), word)) = queue.pop_front() {
        if word.len() >= params.horizon {
            continue;
        }
        for &l in &params.alphabet {
            let nq = step_set(aug, &rq, l)?;
            if nq.is_empty() {
                continue;
            }
            let nl = step_set(aug, &rl, l)?;
            let mut w = word.clone();
            w.push(l);
            if nl.is_empty() {
                return Ok(Some(w));
            }
            let node = (nq, nl);
            if seen.insert(node.clone()) {
                queue.push_back((node, w));
            }
        }
    }
    Ok(None)
}

/// Re-checks the two clauses of dominance for a given suffix.
pub fn verify_dominance(
    aug: &AugWfa,
    c: &AugConfig,
    q: AugState,
    suffix: &[LetterId],
) -> Result<bool, AnalysisError> {
    let Some(&vq) = c.get(&q) else {
        return Ok(false);
    };
    if !aug.mwt(&[q], suffix, None)?.is_finite() {
        return Ok(false);
    }
    let lower: Vec<AugState> = c.iter().filter(|(_, &v)| v < vq).map(|(&s, _)| s).collect();
    Ok(lower.is_empty() || !aug.mwt(&lower, suffix, None)?.is_finite())
}

/// The highest state found dominant under `params`; a lower bound on `φ`.
pub fn potential_of_config(
    aug: &AugWfa,
    c: &AugConfig,
    params: &DominanceParams,
) -> Result<PotentialReport, AnalysisError> {
    let mut order: Vec<(i64, AugState)> = c.iter().map(|(&s, &v)| (v, s)).collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(v, q) in &order {
        let lower: BTreeSet<AugState> = c.iter().filter(|(_, &w)| w < v).map(|(&s, _)| s).collect();
        if let Some(suffix) = separating_suffix(aug, q, &lower, params)? {
            return Ok(PotentialReport {
                phi: v,
                dominant: q,
                suffix,
                horizon: params.horizon,
            });
        }
    }
    Err(AnalysisError::EmptyConfiguration)
}

pub fn potential(aug: &AugWfa, word: &[LetterId], params: &DominanceParams) -> Result<PotentialReport, AnalysisError> {
    check_word(aug, word)?;
    potential_of_config(aug, &aug.xconf(&aug.initial_config(), word)?, params)
}

/// A one-letter extension whose potential grew by more than `2·maxeff(σ)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GrowthFinding {
    pub word: Vec<LetterId>,
    pub letter: LetterId,
    pub delta: i64,
    pub bound: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GrowthReport {
    pub checked: usize,
    pub skipped: usize,
    pub max_phi_increase: Option<i64>,
    /// Largest charge decrease seen; unlike `φ`, `ψ` has no such bound.
    pub max_psi_drop: Option<i64>,
    pub findings: Vec<GrowthFinding>,
}

pub fn bounded_growth_check(
    aug: &AugWfa,
    letters: &[LetterId],
    samples: &[Vec<LetterId>],
    params: &DominanceParams,
) -> Result<GrowthReport, AnalysisError> {
    let mut report = GrowthReport::default();
    for w in samples {
        let Ok(before) = potential(aug, w, params) else {
            report.skipped += letters.len();
            continue;
        };
        let psi_before = charge(aug, w)?.psi;
        for &sigma in letters {
            let mut ws = w.clone();
            ws.push(sigma);
            let after = match potential(aug, &ws, params) {
                Ok(r) => r,
                Err(AnalysisError::NoSeamlessBaseline) => {
                    report.skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            report.checked += 1;
            let delta = after.phi - before.phi;
            let bound = 2 * aug.maxeff(&[sigma])?;
            report.max_phi_increase = Some(report.max_phi_increase.map_or(delta, |m| m.max(delta)));
            let drop = psi_before - charge(aug, &ws)?.psi;
            report.max_psi_drop = Some(report.max_psi_drop.map_or(drop, |m| m.max(drop)));
            if delta > bound {
                report.findings.push(GrowthFinding {
                    word: w.clone(),
                    letter: sigma,
                    delta,
                    bound,
                });
            }
        }
    }
    Ok(report)
}

/// Random words over `letters` with a seamless baseline run.
pub fn sample_words<R: Rng>(
    aug: &AugWfa,
    letters: &[LetterId],
    count: usize,
    max_len: usize,
    rng: &mut R,
) -> Result<Vec<Vec<LetterId>>, AnalysisError> {
    let mut out = vec![Vec::new()];
    let mut tries = 0;
    while out.len() < count && tries < count * 50 && !letters.is_empty() {
        tries += 1;
        let len = rng.gen_range(1..=max_len.max(1));
        let w: Vec<LetterId> = (0..len).map(|_| letters[rng.gen_range(0..letters.len())]).collect();
        if aug.seamless_baseline(&w)?.is_some() {
            out.push(w);
        }
    }
    Ok(out)
}

/// Shifting the baseline onto a minimal run of `flatten(u)` turns a charge
/// drop on `σ` into a dominant state above `P`.
pub fn construct_high_potential(
    aug: &AugWfa,
    u: &[LetterId],
    sigma: LetterId,
    p: i64,
) -> Result<(Vec<LetterId>, PotentialReport), AnalysisError> {
    for &l in u {
        if aug.is_rebase(l)? || aug.is_jump(l)? {
            return Err(AnalysisError::FlattenUnsupported(
                "u must contain only Δ-letters and cactus letters".into(),
            ));
        }
    }
    let mut us = u.to_vec();
    us.push(sigma);
    let psi_u = charge(aug, u)?.psi;
    let psi_us = charge(aug, &us)?.psi;
    let need = p as i128 + 2 * aug.maxeff(&[sigma])? as i128;
    if (psi_u as i128 - psi_us as i128) <= need {
        return Err(AnalysisError::PreconditionUnmet(format!(
            "ψ(u) − ψ(uσ) = {} is not above P + 2·maxeff(σ) = {need}",
            psi_u - psi_us
        )));
    }
    let mut has_cactus = false;
    for &l in u {
        has_cactus |= aug.is_cactus(l)?;
    }
    let x0 = if has_cactus {
        let f = 2 * aug.maxeff(&us)? + 1;
        flatten(aug, u, f, &UnfoldOptions::default())?.word
    } else {
        u.to_vec()
    };
    let s0 = aug.initial_config();
    let c = aug.xconf(&s0, &x0)?;
    let mu1 = aug
        .min_run(&s0, &x0, None)?
        .ok_or(AnalysisError::EmptyConfiguration)?;
    let mut readers: Vec<(i64, AugState)> = Vec::new();
    for (&s, &v) in &c {
        if !aug.successors(s, sigma)?.is_empty() {
            readers.push((v, s));
        }
    }
    let &(_, s1) = readers
        .iter()
        .min()
        .ok_or_else(|| AnalysisError::PreconditionUnmet("no state reads σ".into()))?;
    let w = aug.baseline_shift_word(&x0, &mu1)?;
    let c2 = aug.xconf(&s0, &w)?;
    let t = shift_state(s1, mu1.end())?;
    let r = mu1.end();
    let mut suffix = Vec::new();
    if r.inner != s1.baseline {
        suffix.push(aug.jump_letter(
            AugState::new(r.inner, r.inner, r.reach),
            AugState::new(s1.baseline, s1.baseline, r.reach),
        )?);
    }
    suffix.push(sigma);
    let phi = *c2
        .get(&t)
        .ok_or_else(|| AnalysisError::ContractViolated("shifted state is unreachable".into()))?;
    if !verify_dominance(aug, &c2, t, &suffix)? || phi <= p {
        return Err(AnalysisError::ContractViolated(format!(
            "certificate failed: weight {phi} against P = {p}"
        )));
    }
    let horizon = suffix.len();
    Ok((
        w,
        PotentialReport {
            phi,
            dominant: t,
            suffix,
            horizon,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MonotonicityReport {
    pub seamless_preserved: bool,
    pub phi_c: i64,
    pub phi_d: i64,
    pub psi_c: i64,
    pub psi_d: i64,
    pub holds: bool,
}

pub fn monotonicity_check(
    aug: &AugWfa,
    c: &AugConfig,
    d: &AugConfig,
    word: &[LetterId],
    params: &DominanceParams,
) -> Result<MonotonicityReport, AnalysisError> {
    let unmet = |m: &str| Err(AnalysisError::PreconditionUnmet(m.into()));
    if config_support(c) != config_support(d) {
        return unmet("supports differ");
    }
    if c.iter().any(|(s, v)| d[s] < *v) {
        return unmet("c ≤ d fails");
    }
    let bases: Vec<AugState> = c.keys().copied().filter(AugState::is_baseline).collect();
    let [b] = bases[..] else {
        return unmet("need exactly one baseline state");
    };
    if c[&b] != 0 || d[&b] != 0 {
        return unmet("baseline state must have value 0");
    }
    let run = match aug.baseline_run(b, word)? {
        Some(r) if aug.is_seamless(c, &r)? => r,
        _ => return unmet("no seamless baseline run from c"),
    };
    let seamless_preserved = aug.is_seamless(d, &run)?;
    let (cw, dw) = (aug.xconf(c, word)?, aug.xconf(d, word)?);
    let (pc, pd) = (potential_of_config(aug, &cw, params)?, potential_of_config(aug, &dw, params)?);
    let (qc, qd) = (charge_of_config(&cw)?, charge_of_config(&dw)?);
    Ok(MonotonicityReport {
        seamless_preserved,
        phi_c: pc.phi,
        phi_d: pd.phi,
        psi_c: qc.psi,
        psi_d: qd.psi,
        holds: seamless_preserved && pc.phi <= pd.phi && qc.psi >= qd.psi,
    })
}

/// Length functions for the simple and general bounded alphabets.
#[derive(Clone)]
pub struct WitnessParams {
    pub simp_len: Arc<dyn Fn(usize) -> u64 + Send + Sync>,
    pub gen_len: Arc<dyn Fn(usize) -> u64 + Send + Sync>,
    pub max_depth: usize,
}

impl WitnessParams {
    /// `L_simp` and `L_gen` evaluated for the declared `|Ŝ|`, saturating at
    /// `u64::MAX`.
    pub fn from_bounds(aug: &AugWfa) -> Result<WitnessParams, AnalysisError> {
        let n = u64::try_from(aug.declared_states()).unwrap_or(u64::MAX).min(64);
        let w = aug.wfa().transitions().map(|t| t.weight.unsigned_abs()).max().unwrap_or(0);
        let mode = Mode::saturated(u64::MAX);
        let table = |gen: bool| -> Vec<u64> {
            let ev = if gen {
                Evaluator::gen_default(n, w, mode.clone())
            } else {
                Evaluator::simp(n, w, mode.clone())
            };
            let Ok(mut ev) = ev else { return vec![0; n as usize + 1] };
            (0..=n)
                .map(|d| ev.length_bound(d).map_or(0, |v| v.to_u64_saturating()))
                .collect()
        };
        let (s, g) = (table(false), table(true));
        Ok(WitnessParams {
            simp_len: Arc::new(move |d| s.get(d).copied().unwrap_or(0)),
            gen_len: Arc::new(move |d| g.get(d).copied().unwrap_or(0)),
            max_depth: n.saturating_sub(1) as usize,
        })
    }

    /// A single length bound for both families.
    pub fn uniform(len: u64, max_depth: usize) -> WitnessParams {
        WitnessParams {
            simp_len: Arc::new(move |_| len),
            gen_len: Arc::new(move |_| len),
            max_depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessVerdict {
    pub pass: bool,
    pub failing_clause: Option<String>,
}

impl WitnessVerdict {
    fn fail(clause: &str) -> WitnessVerdict {
        WitnessVerdict {
            pass: false,
            failing_clause: Some(clause.to_string()),
        }
    }
}

fn in_cac(aug: &AugWfa, l: LetterId, len: &dyn Fn(usize) -> u64, depth: usize) -> Result<bool, AnalysisError> {
    Ok(!aug.is_rebase(l)?
        && !aug.is_jump(l)?
        && !contains_rebase(aug, l)?
        && validate_bounded_letter(aug, l, len, depth)?)
}

fn in_cac_reb(aug: &AugWfa, l: LetterId, len: &dyn Fn(usize) -> u64, depth: usize) -> Result<bool, AnalysisError> {
    match aug.info(l)?.kind {
        LetterKind::Rebase { cactus, .. } => in_cac(aug, cactus, len, depth),
        _ => in_cac(aug, l, len, depth),
    }
}

fn in_cac_reb_cac(aug: &AugWfa, l: LetterId, len: &dyn Fn(usize) -> u64, depth: usize) -> Result<bool, AnalysisError> {
    let LetterKind::Cactus { word, .. } = &aug.info(l)?.kind else {
        return Ok(false);
    };
    for &x in word {
        if !in_cac_reb(aug, x, len, depth)? {
            return Ok(false);
        }
    }
    Ok(word.len() as u64 <= len(aug.depth(word)? + 1))
}

/// Checks every clause of a type-0 or type-1 witness `(w1, α_{S1,w2}, w3)`.
pub fn check_witness(
    aug: &AugWfa,
    w1: &[LetterId],
    cactus: LetterId,
    w3: &[LetterId],
    kind: u8,
    params: &WitnessParams,
) -> Result<WitnessVerdict, AnalysisError> {
    let simp = &*params.simp_len;
    let gen = &*params.gen_len;
    let depth = params.max_depth;
    for &l in w1 {
        if !in_cac(aug, l, simp, depth)? {
            return Ok(WitnessVerdict::fail("1.prefix"));
        }
    }
    if !aug.is_cactus(cactus)? {
        return Ok(WitnessVerdict::fail("1.cactus"));
    }
    let cand = cycle_of_letter(aug, cactus)?;
    let (_, ghost) = aug.ghost_reach(aug.initial(), w1)?;
    if ghost != cand.set.states().into_iter().collect::<BTreeSet<_>>() {
        return Ok(WitnessVerdict::fail("1.ghost"));
    }
    let cactus_ok = match kind {
        0 => in_cac(aug, cactus, simp, depth)?,
        _ => in_cac_reb_cac(aug, cactus, simp, depth)?,
    };
    if !cactus_ok {
        return Ok(WitnessVerdict::fail("1.cactus"));
    }
    let Some((&last, body)) = w3.split_last() else {
        return Ok(WitnessVerdict::fail("1.suffix"));
    };
    for &l in body {
        if !(aug.is_jump(l)? || in_cac_reb(aug, l, simp, depth)?) {
            return Ok(WitnessVerdict::fail("1.suffix"));
        }
    }
    if !in_cac_reb_cac(aug, last, gen, depth)? {
        return Ok(WitnessVerdict::fail("1.suffix"));
    }
    let m = usize::try_from(cycle_m(aug, &cand))
        .map_err(|_| AnalysisError::PreconditionUnmet("stabilisation constant too large".into()))?;
    let mut pumped = w1.to_vec();
    for _ in 0..2 * m {
        pumped.extend_from_slice(&cand.word);
    }
    let s0 = aug.initial();
    if aug.reach(s0, w1)? != aug.reach(s0, &pumped)? {
        return Ok(WitnessVerdict::fail("2"));
    }
    pumped.extend_from_slice(w3);
    if !aug.mwt(&[s0], &pumped, None)?.is_finite() {
        return Ok(WitnessVerdict::fail("3.finite"));
    }
    let mut folded = w1.to_vec();
    folded.push(cactus);
    folded.extend_from_slice(w3);
    if aug.mwt(&[s0], &folded, None)?.is_finite() {
        return Ok(WitnessVerdict::fail("3.infinite"));
    }
    Ok(WitnessVerdict {
        pass: true,
        failing_clause: None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnfoldingPotentialReport {
    /// `xconf` after unfolding is pointwise at most `xconf` before, at every prefix of `v`.
    pub below: bool,
    /// Prefix lengths of `v` where the potentials differ.
    pub phi_mismatch: Vec<usize>,
    /// Type-0 witness verdicts built for each mismatch.
    pub witnesses: Vec<WitnessVerdict>,
}

/// Compares `u·α·v'` with its unfolding for every prefix `v'` of `v`.
pub fn unfolding_potential_check(
    aug: &AugWfa,
    u: &[LetterId],
    alpha: LetterId,
    v: &[LetterId],
    f: i64,
    params: &DominanceParams,
    witness: &WitnessParams,
) -> Result<UnfoldingPotentialReport, AnalysisError> {
    let unf = unfold(aug, u, alpha, v, f, &UnfoldOptions::default())?;
    let s0 = aug.initial_config();
    let head = unf.word.len() - v.len();
    let mut folded: Vec<LetterId> = u.to_vec();
    folded.push(alpha);
    let mut report = UnfoldingPotentialReport {
        below: true,
        phi_mismatch: Vec::new(),
        witnesses: Vec::new(),
    };
    for k in 0..=v.len() {
        let mut a = folded.clone();
        a.extend_from_slice(&v[..k]);
        let b = &unf.word[..head + k];
        let (ca, cb) = (aug.xconf(&s0, &a)?, aug.xconf(&s0, b)?);
        if ca.iter().any(|(s, &x)| cb.get(s).is_none_or(|&y| y > x)) {
            report.below = false;
        }
        let (pa, pb) = (potential_of_config(aug, &ca, params)?, potential_of_config(aug, &cb, params)?);
        if pa.phi != pb.phi {
            report.phi_mismatch.push(k);
            let mut w3 = v[..k].to_vec();
            w3.extend_from_slice(&pb.suffix);
            report.witnesses.push(check_witness(aug, u, alpha, &w3, 0, witness)?);
        }
    }
    Ok(report)
}
