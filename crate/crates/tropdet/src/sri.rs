//! Separated repeating infixes: checking, classification, and the three
//! shortening transforms.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::analysis::{
    charge_of_config, check_witness, potential_of_config, verify_dominance, AnalysisError,
    DominanceParams, WitnessParams, WitnessVerdict,
};
use crate::augmented::{shift_state, AugConfig, AugError, AugRun, AugState, AugWfa, LetterId};
use crate::bounds::{Evaluator, Mode, Name};
use crate::cactus::{
    contains_rebase, cycle_matrix, is_degenerate, is_stable_cycle, min_slope_cycle, shift_to_stable,
    stabilise, validate_bounded_letter, CactusError, CycleCandidate,
};
use crate::tropical::stabilisation_constant;
use crate::weight::{Fin, WeightError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SriError {
    #[error("letter {0} is outside the bounded cactus alphabet")]
    AlphabetMismatch(u32),
    #[error("SRI is not stable and degenerate")]
    NotDegenerate,
    #[error("SRI is not stable and non-degenerate")]
    NotStableNonDegenerate,
    #[error("no negative minimum-slope cycle on x")]
    NoNegativeCycle,
    #[error("part {0} has a negative shift on x")]
    PositivityViolated(usize),
    #[error("postcondition violated: {0}")]
    ContractViolated(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Cactus(#[from] CactusError),
    #[error(transparent)]
    Aug(#[from] AugError),
    #[error(transparent)]
    Weight(#[from] WeightError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SriKind {
    Simple,
    General,
}

/// Constants of the SRI definition: `|S|`, `m`, the length function `L`, the
/// general additive `H`, and the dominance search used for `φ`.
#[derive(Clone)]
pub struct SriParams {
    pub states: u64,
    pub m: u64,
    pub length_fn: Arc<dyn Fn(usize) -> u64 + Send + Sync>,
    pub max_depth: usize,
    pub h: i64,
    pub dominance: DominanceParams,
}

impl SriParams {
    /// `|S|` and `m = n·n!` of the underlying automaton, no length bound,
    /// `H = 0`, and Δ-letter dominance up to `horizon`.
    pub fn desk(aug: &AugWfa, horizon: usize) -> Result<SriParams, SriError> {
        let n = aug.wfa().num_states();
        let m = stabilisation_constant(&n.into());
        Ok(SriParams {
            states: n as u64,
            m: u64::try_from(m).unwrap_or(u64::MAX),
            length_fn: Arc::new(|_| u64::MAX),
            max_depth: n,
            h: 0,
            dominance: DominanceParams::base(aug, horizon)?,
        })
    }

    /// `H` taken from the saturated evaluation of `Amp(|S|, 0)`.
    pub fn with_default_h(mut self, aug: &AugWfa) -> SriParams {
        let w = aug.wfa().transitions().map(|t| t.weight.unsigned_abs()).max().unwrap_or(0);
        let mode = Mode::saturated(i64::MAX as u64);
        self.h = Evaluator::simp(self.states, w, mode)
            .and_then(|mut e| e.eval(Name::Amp, self.states, 0))
            .map_or(i64::MAX, |v| v.to_u64_saturating().min(i64::MAX as u64) as i64);
        self
    }

    pub fn with_h(mut self, h: i64) -> SriParams {
        self.h = h;
        self
    }

    pub fn with_length(mut self, f: impl Fn(usize) -> u64 + Send + Sync + 'static) -> SriParams {
        self.length_fn = Arc::new(f);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SriDecomposition {
    pub u: Vec<LetterId>,
    pub x: Vec<LetterId>,
    pub y: Vec<LetterId>,
    pub v: Vec<LetterId>,
    pub partition: Vec<Vec<AugState>>,
    pub shifts_x: Vec<i64>,
    pub shifts_y: Vec<i64>,
    /// The separation threshold the parts were cut at.
    pub gap: i64,
    pub kind: SriKind,
}

impl SriDecomposition {
    pub fn word(&self) -> Vec<LetterId> {
        [&self.u[..], &self.x, &self.y, &self.v].concat()
    }

    pub fn to_json(&self, aug: &AugWfa) -> Result<Value, SriError> {
        Ok(json!({
            "u": aug.word_json(&self.u)?,
            "x": aug.word_json(&self.x)?,
            "y": aug.word_json(&self.y)?,
            "v": aug.word_json(&self.v)?,
            "partition": self.partition.iter()
                .map(|p| p.iter().map(|s| aug.state_json(s)).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "shifts_x": self.shifts_x,
            "shifts_y": self.shifts_y,
            "gap_threshold": self.gap,
            "kind": self.kind,
        }))
    }
}

/// Result of [`check_sri`]: the decomposition, or the first failed clause.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum SriCheck {
    Valid(SriDecomposition),
    Rejected { clause: String, detail: String },
}

impl SriCheck {
    fn reject(clause: &str, detail: impl Into<String>) -> SriCheck {
        SriCheck::Rejected {
            clause: clause.to_string(),
            detail: detail.into(),
        }
    }

    pub fn sri(self) -> Option<SriDecomposition> {
        match self {
            SriCheck::Valid(s) => Some(s),
            SriCheck::Rejected { .. } => None,
        }
    }
}

fn check_alphabet(aug: &AugWfa, word: &[LetterId], params: &SriParams) -> Result<(), SriError> {
    for &l in word {
        let ok = !aug.is_jump(l)?
            && !aug.is_rebase(l)?
            && !contains_rebase(aug, l)?
            && validate_bounded_letter(aug, l, &*params.length_fn, params.max_depth)?;
        if !ok {
            return Err(SriError::AlphabetMismatch(l.0));
        }
    }
    Ok(())
}

/// Gap threshold `G = 4|S|·m·maxeff(xy)` (plus `H` for the general kind),
/// saturating.
pub fn gap_threshold(aug: &AugWfa, x: &[LetterId], y: &[LetterId], params: &SriParams, kind: SriKind) -> Result<i64, SriError> {
    let me = aug.maxeff(&[x, y].concat())?;
    let g = 4i128 * params.states as i128 * params.m as i128 * me as i128;
    let g = match kind {
        SriKind::Simple => g,
        SriKind::General => g + params.h as i128,
    };
    Ok(g.min(i64::MAX as i128) as i64)
}

/// Every cut along the order of `cs[0]` that keeps the gap in all three
/// configurations. Any valid partition coarsens this one.
fn derive_partition(cs: &[AugConfig; 3], g: i64) -> Vec<Vec<AugState>> {
    let mut order: Vec<AugState> = cs[0].keys().copied().collect();
    order.sort_by_key(|s| (cs[0][s], *s));
    let mut parts: Vec<Vec<AugState>> = Vec::new();
    let mut cur: Vec<AugState> = Vec::new();
    for (i, &s) in order.iter().enumerate() {
        if i > 0 {
            let cut = cs.iter().all(|c| {
                let lo = order[..i].iter().map(|t| c[t]).max().expect("non-empty");
                let hi = order[i..].iter().map(|t| c[t]).min().expect("non-empty");
                (hi as i128) - (lo as i128) > g as i128
            });
            if cut {
                parts.push(std::mem::take(&mut cur));
            }
        }
        cur.push(s);
    }
    if !cur.is_empty() {
        parts.push(cur);
    }
    parts
}

fn part_shift(parts: &[Vec<AugState>], a: &AugConfig, b: &AugConfig) -> Result<Vec<i64>, (usize, String)> {
    parts
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let k = b[&p[0]] - a[&p[0]];
            match p.iter().find(|s| b[s] - a[s] != k) {
                Some(s) => Err((j, format!("part {} is not shifted uniformly at {s:?}", j + 1))),
                None => Ok(k),
            }
        })
        .collect()
}

/// Checks every clause of the SRI definition and the `φ`/`ψ` clause of the
/// requested kind.
pub fn check_sri(
    aug: &AugWfa,
    u: &[LetterId],
    x: &[LetterId],
    y: &[LetterId],
    v: &[LetterId],
    params: &SriParams,
    kind: SriKind,
) -> Result<SriCheck, SriError> {
    for w in [u, x, y, v] {
        check_alphabet(aug, w, params)?;
    }
    let s0 = aug.initial_config();
    let cu = aug.xconf(&s0, u)?;
    let cux = aug.xconf(&cu, x)?;
    let cuxy = aug.xconf(&cux, y)?;
    let b: BTreeSet<AugState> = cu.keys().copied().collect();
    if b.is_empty() || cux.keys().ne(b.iter()) || cuxy.keys().ne(b.iter()) {
        return Ok(SriCheck::reject("1.support", "supports after u, ux, uxy differ"));
    }
    let lf = (params.length_fn)(aug.depth(x)? + 1);
    if (x.len() as u128) * (params.m as u128) > lf as u128 {
        return Ok(SriCheck::reject(
            "2.length",
            format!("|x| = {} exceeds L/m = {}", x.len(), lf / params.m.max(1)),
        ));
    }
    let g = gap_threshold(aug, x, y, params, kind)?;
    let cs = [cu.clone(), cux.clone(), cuxy.clone()];
    let mut parts = derive_partition(&cs, g);
    let sx = match part_shift(&parts, &cu, &cux) {
        Ok(k) => k,
        Err((_, d)) => return Ok(SriCheck::reject("3b.linear", d)),
    };
    let sy = match part_shift(&parts, &cux, &cuxy) {
        Ok(k) => k,
        Err((_, d)) => return Ok(SriCheck::reject("3b.linear", d)),
    };
    if let Some(j) = (0..parts.len()).find(|&j| sx[j].signum() != sy[j].signum()) {
        return Ok(SriCheck::reject(
            "3b.sign",
            format!("part {} shifts by {} on x and {} on y", j + 1, sx[j], sy[j]),
        ));
    }
    // merging neighbours with equal shifts keeps both clauses
    let (mut kx, mut ky) = (Vec::new(), Vec::new());
    let mut merged: Vec<Vec<AugState>> = Vec::new();
    for (j, p) in parts.drain(..).enumerate() {
        match merged.last_mut() {
            Some(last) if kx.last() == Some(&sx[j]) && ky.last() == Some(&sy[j]) => last.extend(p),
            _ => {
                merged.push(p);
                kx.push(sx[j]);
                ky.push(sy[j]);
            }
        }
    }
    let word = [u, x, y, v].concat();
    if aug.seamless_baseline(&word)?.is_none() {
        return Ok(SriCheck::reject("4.seamless", "uxyv has no seamless baseline run"));
    }
    match kind {
        SriKind::Simple => {
            let phi = |c: &AugConfig| potential_of_config(aug, c, &params.dominance).map(|r| r.phi);
            let (a, b2, c) = (phi(&cu)?, phi(&cux)?, phi(&cuxy)?);
            if !(a <= b2 && b2 <= c && ((a == b2) == (b2 == c))) {
                return Ok(SriCheck::reject("ssri.phi", format!("φ = {a}, {b2}, {c}")));
            }
        }
        SriKind::General => {
            let psi = |c: &AugConfig| charge_of_config(c).map(|r| r.psi);
            let (a, b2, c) = (psi(&cu)?, psi(&cux)?, psi(&cuxy)?);
            if !(a >= b2 && b2 >= c && ((a == b2) == (b2 == c))) {
                return Ok(SriCheck::reject("gsri.psi", format!("ψ = {a}, {b2}, {c}")));
            }
        }
    }
    Ok(SriCheck::Valid(SriDecomposition {
        u: u.to_vec(),
        x: x.to_vec(),
        y: y.to_vec(),
        v: v.to_vec(),
        partition: merged,
        shifts_x: kx,
        shifts_y: ky,
        gap: g,
        kind,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Negative,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Flavour {
    pub sign: Sign,
    pub stable: bool,
    /// Set only for stable SRI.
    pub degenerate: Option<bool>,
}

/// `(δ_ghost(s0, u), x)`.
pub fn infix_cycle(aug: &AugWfa, sri: &SriDecomposition) -> Result<CycleCandidate, SriError> {
    let (_, ghost) = aug.ghost_reach(aug.initial(), &sri.u)?;
    let s = ghost.iter().next().ok_or_else(|| SriError::ContractViolated("u reaches nothing".into()))?;
    Ok(CycleCandidate::new(s.shape(), sri.x.clone()))
}

pub fn classify(aug: &AugWfa, sri: &SriDecomposition) -> Result<Flavour, SriError> {
    let negative = sri
        .shifts_x
        .iter()
        .zip(&sri.shifts_y)
        .any(|(&a, &b)| a < 0 && b < 0);
    let cand = infix_cycle(aug, sri)?;
    let stable = is_stable_cycle(aug, &cand)?;
    Ok(Flavour {
        sign: if negative { Sign::Negative } else { Sign::Positive },
        stable,
        degenerate: if stable { Some(is_degenerate(aug, &cand)?) } else { None },
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShortenReport {
    pub config_repeats: bool,
    pub phi: (i64, i64),
    pub psi: (i64, i64),
    /// The dominance suffix of `uxyv` re-verified on `uyv`.
    pub certificate_reused: bool,
}

/// `u·y·v` for a stable degenerate SRI, with the equalities re-checked.
pub fn degenerate_shorten(
    aug: &AugWfa,
    sri: &SriDecomposition,
    dominance: &DominanceParams,
) -> Result<(Vec<LetterId>, ShortenReport), SriError> {
    let f = classify(aug, sri)?;
    if f.degenerate != Some(true) {
        return Err(SriError::NotDegenerate);
    }
    let s0 = aug.initial_config();
    let cu = aug.xconf(&s0, &sri.u)?;
    let cux = aug.xconf(&cu, &sri.x)?;
    let long = sri.word();
    let short = [&sri.u[..], &sri.y, &sri.v].concat();
    let (cl, cs) = (aug.xconf(&s0, &long)?, aug.xconf(&s0, &short)?);
    let (pl, ps) = (potential_of_config(aug, &cl, dominance)?, potential_of_config(aug, &cs, dominance)?);
    let (ql, qs) = (charge_of_config(&cl)?, charge_of_config(&cs)?);
    let report = ShortenReport {
        config_repeats: cu == cux,
        phi: (pl.phi, ps.phi),
        psi: (ql.psi, qs.psi),
        certificate_reused: verify_dominance(aug, &cs, pl.dominant, &pl.suffix)?,
    };
    if !report.config_repeats || pl.phi != ps.phi || ql.psi != qs.psi {
        return Err(SriError::ContractViolated(format!("degenerate shortening changed the word's values: {report:?}")));
    }
    Ok((short, report))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BudReport {
    pub cactus: LetterId,
    /// Item 1: `xconf(w) ≤ xconf(w')` statewise.
    pub statewise: bool,
    pub psi: (i64, i64),
    pub phi: (i64, i64),
    /// Set when `φ(w) > φ(w')`: the type-0 witness `(u, α, v·suffix)`.
    pub witness: Option<WitnessVerdict>,
}

impl BudReport {
    pub fn holds(&self) -> bool {
        self.statewise && self.psi.0 >= self.psi.1 && (self.phi.0 <= self.phi.1 || self.witness.as_ref().is_some_and(|w| w.pass))
    }
}

/// Replaces `xy` with `α_{δ_ghost(s0,u),x}` in a stable non-degenerate SRI.
pub fn bud(
    aug: &AugWfa,
    sri: &SriDecomposition,
    dominance: &DominanceParams,
    witness: &WitnessParams,
) -> Result<(Vec<LetterId>, BudReport), SriError> {
    let f = classify(aug, sri)?;
    if f.degenerate != Some(false) {
        return Err(SriError::NotStableNonDegenerate);
    }
    let alpha = stabilise(aug, &infix_cycle(aug, sri)?)?;
    let mut budded = sri.u.clone();
    budded.push(alpha);
    budded.extend_from_slice(&sri.v);
    let s0 = aug.initial_config();
    let (cw, cb) = (aug.xconf(&s0, &sri.word())?, aug.xconf(&s0, &budded)?);
    let statewise = cb.iter().all(|(s, &b)| cw.get(s).is_some_and(|&a| a <= b));
    let psi_w = charge_of_config(&cw)?.psi;
    let psi_b = match charge_of_config(&cb) {
        Ok(r) => r.psi,
        Err(AnalysisError::EmptyConfiguration) => i64::MIN,
        Err(e) => return Err(e.into()),
    };
    let pw = potential_of_config(aug, &cw, dominance)?;
    let phi_b = match potential_of_config(aug, &cb, dominance) {
        Ok(r) => r.phi,
        Err(AnalysisError::EmptyConfiguration) => i64::MIN,
        Err(e) => return Err(e.into()),
    };
    let witness = if pw.phi > phi_b {
        let w3 = [&sri.v[..], &pw.suffix].concat();
        Some(check_witness(aug, &sri.u, alpha, &w3, 0, witness)?)
    } else {
        None
    };
    Ok((
        budded,
        BudReport {
            cactus: alpha,
            statewise,
            psi: (psi_w, psi_b),
            phi: (pw.phi, phi_b),
            witness,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KillReport {
    pub ell_prime: usize,
    pub k: usize,
    pub slope_weight: i64,
    /// Shifted states of `V_1..V_{ℓ'}` with the number of finite transitions on `α`.
    pub states: Vec<(AugState, usize)>,
    pub all_killed: bool,
}

/// Shifts `(δ_ghost(s0,u), x^k)` onto a negative minimum-slope run and
/// checks that the low non-negative parts have no finite transition on the
/// resulting cactus letter. `ell_prime` defaults to the longest prefix of
/// parts with `k_{j,x} ≥ 0`.
pub fn shift_kill_positive(
    aug: &AugWfa,
    sri: &SriDecomposition,
    ell_prime: Option<usize>,
) -> Result<(LetterId, AugRun, KillReport), SriError> {
    let default = sri.shifts_x.iter().take_while(|&&k| k >= 0).count();
    let ell = ell_prime.unwrap_or(default);
    if let Some(j) = (0..ell.min(sri.shifts_x.len())).find(|&j| sri.shifts_x[j] < 0) {
        return Err(SriError::PositivityViolated(j + 1));
    }
    let cand = infix_cycle(aug, sri)?;
    let ms = min_slope_cycle(aug, &cand)?;
    if ms.weight >= 0 {
        return Err(SriError::NoNegativeCycle);
    }
    let shifted = shift_to_stable(aug, &cand)?;
    let alpha = stabilise(aug, &shifted.cycle)?;
    let anchor = shifted.anchor.start;
    let mut states = Vec::new();
    for part in sri.partition.iter().take(ell) {
        for &s in part {
            let t = shift_state(s, anchor)?;
            states.push((t, aug.successors(t, alpha)?.len()));
        }
    }
    let all_killed = states.iter().all(|&(_, n)| n == 0);
    Ok((
        alpha,
        shifted.anchor,
        KillReport {
            ell_prime: ell,
            k: shifted.k,
            slope_weight: ms.weight,
            states,
            all_killed,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunStructureReport {
    pub shifts_bounded: bool,
    pub no_upward_runs: bool,
    pub same_part_source: bool,
    /// `mwt(r →x^k→ r) ≥ 0` for `k ≤ |S|`; only meaningful for positive SRI.
    pub no_negative_cycles: bool,
}

impl RunStructureReport {
    pub fn holds(&self, positive: bool) -> bool {
        self.shifts_bounded && self.no_upward_runs && self.same_part_source && (!positive || self.no_negative_cycles)
    }
}

/// Brute-force check of the run structure on `x` and `y`: shift magnitudes,
/// no run from `V_j` into a higher part over `z^k` for `k ≤ max_power`, and a
/// same-part predecessor for every state.
pub fn run_structure(aug: &AugWfa, sri: &SriDecomposition, max_power: usize) -> Result<RunStructureReport, SriError> {
    let part_of = |s: &AugState| sri.partition.iter().position(|p| p.contains(s));
    let mut report = RunStructureReport {
        shifts_bounded: true,
        no_upward_runs: true,
        same_part_source: true,
        no_negative_cycles: true,
    };
    for (z, shifts) in [(&sri.x, &sri.shifts_x), (&sri.y, &sri.shifts_y)] {
        let me = aug.maxeff(z)?;
        report.shifts_bounded &= shifts.iter().all(|k| k.abs() <= me);
        for (j, part) in sri.partition.iter().enumerate() {
            for &s in part {
                let mut c = AugConfig::from([(s, 0)]);
                for _ in 0..max_power {
                    c = aug.xconf(&c, z)?;
                    report.no_upward_runs &= c.keys().all(|t| part_of(t).is_some_and(|jt| jt <= j));
                }
                let preds = part.iter().any(|&p| {
                    aug.reach(p, z).map(|r| r.contains(&s)).unwrap_or(false)
                });
                report.same_part_source &= preds;
            }
        }
    }
    let cand = infix_cycle(aug, sri)?;
    let mat = cycle_matrix(aug, &cand)?;
    let idx: Vec<usize> = sri
        .partition
        .iter()
        .flatten()
        .filter_map(|s| cand.set.index_of(s.inner))
        .collect();
    let mut p = mat.clone();
    for k in 1..=mat.size() {
        if k > 1 {
            p = p.mul(&mat)?;
        }
        report.no_negative_cycles &= idx.iter().all(|&i| p.get(i, i) >= Fin(0));
    }
    Ok(report)
}
