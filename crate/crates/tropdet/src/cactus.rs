//! Stable cycles, grounded pairs, cactus letters, unfolding and flattening.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

use crate::augmented::{
    AugConfig, AugError, AugRun, AugState, AugWfa, CactusTable, CycleSet, GroundedPair, LetterId,
    LetterKind, StabMode,
};
use crate::tropical::{stabilisation_constant, TropMatrix};
use crate::weight::{Fin, Inf, Weight, WeightError};
use crate::wfa::{bits, StateId, Transition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CactusError {
    #[error("not a reflexive cycle: reading the word leaves the state set")]
    NotReflexive,
    #[error("reflexive cycle is not proper: the baseline state is not reflexive")]
    NotProper,
    #[error("cycle is not stable")]
    NotStable,
    #[error("F = {f} is too small, need F > {need}")]
    FTooSmall { f: i64, need: i64 },
    #[error("no pumping constant found within {0} iterations")]
    M0CapExceeded(u64),
    #[error("word contains rebase letters, which flatten does not support")]
    RebasePresent,
    #[error("word contains jump letters")]
    JumpPresent,
    #[error("letter {0} is not a cactus letter")]
    NotCactusLetter(u32),
    #[error("word length budget of {0} letters exceeded")]
    LengthBudget(usize),
    #[error("postcondition violated: {0}")]
    ContractViolated(String),
    #[error("malformed letter JSON: {0}")]
    LetterJson(String),
    #[error(transparent)]
    Aug(#[from] AugError),
    #[error(transparent)]
    Weight(#[from] WeightError),
}

/// A pair `(S', w)` with `S' = {(p, q, T) | p ∈ T}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CycleCandidate {
    pub set: CycleSet,
    pub word: Vec<LetterId>,
}

impl CycleCandidate {
    pub fn new(set: CycleSet, word: Vec<LetterId>) -> CycleCandidate {
        CycleCandidate { set, word }
    }

    pub fn power(&self, k: usize) -> CycleCandidate {
        CycleCandidate {
            set: self.set,
            word: self.word.repeat(k),
        }
    }
}

/// The stabilisation constant used for a cycle under the automaton's mode.
pub fn cycle_m(aug: &AugWfa, cand: &CycleCandidate) -> BigUint {
    match aug.mode() {
        StabMode::Tight => stabilisation_constant(&BigUint::from(cand.set.size())),
        StabMode::Declared => stabilisation_constant(&aug.declared_states()),
    }
}

/// `n·n!` for the declared state count of `Â`.
pub fn declared_stabilisation_constant(aug: &AugWfa) -> BigUint {
    stabilisation_constant(&aug.declared_states())
}

/// The `|S'| × |S'|` min-plus matrix of `w` over `S'`.
pub fn cycle_matrix(aug: &AugWfa, cand: &CycleCandidate) -> Result<TropMatrix, CactusError> {
    let states = cand.set.states();
    let mut m = TropMatrix::infinite(states.len());
    for (i, &s) in states.iter().enumerate() {
        let c = aug.xconf(&AugConfig::from([(s, 0)]), &cand.word)?;
        for (t, v) in c {
            if !cand.set.contains(&t) {
                return Err(CactusError::NotReflexive);
            }
            let j = cand.set.index_of(t.inner).expect("contained");
            m.set(i, j, Fin(v));
        }
    }
    Ok(m)
}

pub fn is_reflexive(aug: &AugWfa, cand: &CycleCandidate) -> Result<bool, CactusError> {
    match cycle_matrix(aug, cand) {
        Ok(_) => Ok(true),
        Err(CactusError::NotReflexive) => Ok(false),
        Err(e) => Err(e),
    }
}

fn baseline_index(cand: &CycleCandidate) -> usize {
    cand.set.index_of(cand.set.baseline).expect("baseline lies in T")
}

pub fn is_proper(aug: &AugWfa, cand: &CycleCandidate) -> Result<bool, CactusError> {
    let m = cycle_matrix(aug, cand)?;
    let b = baseline_index(cand);
    Ok(m.get(b, b).is_finite())
}

/// Indices of reflexive states of a cycle matrix.
pub fn ref_states(m: &TropMatrix) -> Vec<usize> {
    (0..m.size()).filter(|&i| m.get(i, i).is_finite()).collect()
}

/// Indices of minimal reflexive states.
pub fn min_states(m: &TropMatrix) -> Vec<usize> {
    let diag = m.diagonal();
    let best = diag.iter().copied().fold(Inf, Weight::min);
    if !best.is_finite() {
        return Vec::new();
    }
    (0..m.size()).filter(|&i| diag[i] == best).collect()
}

/// Stability is decided on `w^k` for `k ≤ |S'|`, which suffices because a
/// minimum-slope cycle is attained within that many repetitions.
pub fn is_stable_cycle(aug: &AugWfa, cand: &CycleCandidate) -> Result<bool, CactusError> {
    let m = cycle_matrix(aug, cand)?;
    let b = baseline_index(cand);
    if !m.get(b, b).is_finite() {
        return Ok(false);
    }
    let mut p = m.clone();
    for k in 1..=m.size() {
        if k > 1 {
            p = p.mul(&m)?;
        }
        if p.diagonal().iter().any(|&d| d < Fin(0)) {
            return Ok(false);
        }
    }
    Ok(p.size() > 0)
}

/// A cycle `s →^{w^k} s` of minimum slope `weight / k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MinSlope {
    pub run: AugRun,
    pub k: usize,
    pub weight: i64,
}

pub fn min_slope_cycle(aug: &AugWfa, cand: &CycleCandidate) -> Result<MinSlope, CactusError> {
    let m = cycle_matrix(aug, cand)?;
    if !m.get(baseline_index(cand), baseline_index(cand)).is_finite() {
        return Err(CactusError::NotProper);
    }
    let n = m.size();
    let mut best: Option<(i64, usize, usize)> = None;
    let mut p = m.clone();
    for k in 1..=n {
        if k > 1 {
            p = p.mul(&m)?;
        }
        for i in 0..n {
            let Fin(w) = p.get(i, i) else { continue };
            let better = match best {
                None => true,
                Some((bw, bk, _)) => (w as i128) * (bk as i128) < (bw as i128) * (k as i128),
            };
            if better {
                best = Some((w, k, i));
            }
        }
    }
    let (weight, k, i) = best.expect("the baseline state is reflexive");
    let s = cand.set.states()[i];
    let word = cand.word.repeat(k);
    let run = aug
        .min_run(&AugConfig::from([(s, 0)]), &word, Some(s))?
        .expect("diagonal entry is finite");
    debug_assert_eq!(run.wt().ok(), Some(weight));
    Ok(MinSlope { run, k, weight })
}

/// A stable cycle obtained by shifting onto a minimum-slope run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StableShift {
    pub cycle: CycleCandidate,
    pub anchor: AugRun,
    pub k: usize,
}

pub fn shift_to_stable(aug: &AugWfa, cand: &CycleCandidate) -> Result<StableShift, CactusError> {
    let ms = min_slope_cycle(aug, cand)?;
    if ms.weight >= 0 {
        let anchor = aug
            .baseline_run(cand.set.baseline_state(), &cand.word)?
            .ok_or(CactusError::NotProper)?;
        return Ok(StableShift {
            cycle: cand.clone(),
            anchor,
            k: 1,
        });
    }
    let word = aug.baseline_shift_word(&ms.run.word(), &ms.run)?;
    let cycle = CycleCandidate {
        set: CycleSet {
            baseline: ms.run.start.inner,
            reach: cand.set.reach,
        },
        word,
    };
    if !is_stable_cycle(aug, &cycle)? {
        return Err(CactusError::ContractViolated(
            "shifted cycle is not stable".into(),
        ));
    }
    Ok(StableShift {
        cycle,
        anchor: ms.run,
        k: ms.k,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroundedPairs {
    #[serde(serialize_with = "ser_big")]
    pub m: BigUint,
    pub min_states: Vec<StateId>,
    pub pairs: Vec<GroundedPair>,
}

fn ser_big<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl GroundedPairs {
    pub fn get(&self, from: StateId, to: StateId) -> Option<&GroundedPair> {
        self.pairs.iter().find(|g| g.from == from && g.to == to)
    }
}

pub fn grounded_pairs(aug: &AugWfa, cand: &CycleCandidate) -> Result<GroundedPairs, CactusError> {
    if !is_stable_cycle(aug, cand)? {
        return Err(CactusError::NotStable);
    }
    let m = cycle_m(aug, cand);
    let mat = cycle_matrix(aug, cand)?;
    let mm = mat.pow_big(&m)?;
    let states = cand.set.states();
    let mins = min_states(&mm);
    let mut pairs = Vec::new();
    for i in 0..states.len() {
        for j in 0..states.len() {
            let mut best: Option<(i64, usize)> = None;
            for &g in &mins {
                if let (Fin(a), Fin(b)) = (mm.get(i, g), mm.get(g, j)) {
                    let v = a.checked_add(b).ok_or(WeightError::Overflow("grounded"))?;
                    if best.is_none_or(|(bv, _)| v < bv) {
                        best = Some((v, g));
                    }
                }
            }
            if let Some((weight, g)) = best {
                pairs.push(GroundedPair {
                    from: states[i].inner,
                    to: states[j].inner,
                    grounding: states[g].inner,
                    weight,
                });
            }
        }
    }
    Ok(GroundedPairs {
        m,
        min_states: mins.iter().map(|&g| states[g].inner).collect(),
        pairs,
    })
}

/// Interns `α_{S',w}`.
pub fn stabilise(aug: &AugWfa, cand: &CycleCandidate) -> Result<LetterId, CactusError> {
    let gp = grounded_pairs(aug, cand)?;
    let table = CactusTable {
        m: gp.m,
        pairs: gp
            .pairs
            .into_iter()
            .map(|g| ((g.from, g.to), g))
            .collect::<BTreeMap<_, _>>(),
    };
    Ok(aug.intern_cactus(cand.set, cand.word.clone(), table)?)
}

/// `(S', w)` of a cactus or rebase letter.
pub fn cycle_of_letter(aug: &AugWfa, l: LetterId) -> Result<CycleCandidate, CactusError> {
    let (set, word) = aug.cactus_parts(l)?;
    Ok(CycleCandidate { set, word })
}

fn small(v: &BigUint, what: &str) -> Result<u64, CactusError> {
    v.to_u64()
        .ok_or_else(|| CactusError::ContractViolated(format!("{what} does not fit in 64 bits")))
}

/// Least `M0` from which, on `w^{2m·k}`, grounded pairs carry their
/// stabilised weight and the other pairs exceed `threshold`. The condition is
/// confirmed on a window of `|S'| + 1` consecutive `k`.
pub fn pumping_m0(
    aug: &AugWfa,
    cand: &CycleCandidate,
    threshold: i64,
    cap: u64,
) -> Result<u64, CactusError> {
    let gp = grounded_pairs(aug, cand)?;
    let mat = cycle_matrix(aug, cand)?;
    let p = mat.pow_big(&(&gp.m * 2u32))?;
    let states = cand.set.states();
    let n = states.len();
    let mut target = TropMatrix::infinite(n);
    for g in &gp.pairs {
        let i = cand.set.index_of(g.from).expect("in set");
        let j = cand.set.index_of(g.to).expect("in set");
        target.set(i, j, Fin(g.weight));
    }
    let window = n as u64 + 1;
    let ok = |pk: &TropMatrix| {
        (0..n).all(|i| {
            (0..n).all(|j| match target.get(i, j) {
                Fin(_) => pk.get(i, j) == target.get(i, j),
                Inf => pk.get(i, j) > Fin(threshold),
            })
        })
    };
    let mut pk = p.clone();
    let mut start: Option<u64> = None;
    for k in 1..=cap + window {
        if k > 1 {
            pk = pk.mul(&p)?;
        }
        if ok(&pk) {
            let s = *start.get_or_insert(k);
            if k + 1 - s >= window {
                return Ok(s);
            }
        } else {
            start = None;
            if k > cap {
                break;
            }
        }
    }
    Err(CactusError::M0CapExceeded(cap))
}

/// Decides degeneracy using Boolean powers of `w^{2m}` up to `|S'|`.
pub fn is_degenerate(aug: &AugWfa, cand: &CycleCandidate) -> Result<bool, CactusError> {
    Ok(non_degenerate_state(aug, cand)?.is_none())
}

/// A state `s` with some reachable reflexive `t` such that `(s, t)` is not grounded.
pub fn non_degenerate_state(
    aug: &AugWfa,
    cand: &CycleCandidate,
) -> Result<Option<(AugState, AugState)>, CactusError> {
    let gp = grounded_pairs(aug, cand)?;
    let mat = cycle_matrix(aug, cand)?;
    let p = mat.pow_big(&(&gp.m * 2u32))?;
    let n = p.size();
    let states = cand.set.states();
    let refl = ref_states(&p);
    let mut reach = p.support();
    let mut power = reach.clone();
    for _ in 1..n {
        let mut next = vec![false; n * n];
        for i in 0..n {
            for k in 0..n {
                if power[i * n + k] {
                    for j in 0..n {
                        next[i * n + j] |= reach_step(&p, k, j);
                    }
                }
            }
        }
        for (r, x) in reach.iter_mut().zip(&next) {
            *r |= *x;
        }
        power = next;
    }
    for i in 0..n {
        for &t in &refl {
            if reach[i * n + t] && gp.get(states[i].inner, states[t].inner).is_none() {
                return Ok(Some((states[i], states[t])));
            }
        }
    }
    Ok(None)
}

fn reach_step(p: &TropMatrix, k: usize, j: usize) -> bool {
    p.get(k, j).is_finite()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainEntry {
    pub letters: Vec<LetterId>,
    pub first_degenerate: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainReport {
    pub chains: Vec<ChainEntry>,
    /// Chains of length at least `|S|` all contain a degenerate letter.
    pub deep_chains_degenerate: bool,
}

/// Walks every maximal cactus chain starting at `letter`.
pub fn cactus_chain_check(aug: &AugWfa, letter: LetterId) -> Result<ChainReport, CactusError> {
    let mut chains = Vec::new();
    let mut memo: HashMap<LetterId, bool> = HashMap::new();
    let mut stack = vec![vec![aug.underlying_cactus(letter)?.ok_or(CactusError::NotCactusLetter(letter.0))?]];
    while let Some(path) = stack.pop() {
        let last = *path.last().expect("non-empty");
        let (_, word) = aug.cactus_parts(last)?;
        let mut children: Vec<LetterId> = Vec::new();
        for &l in &word {
            if aug.is_cactus(l)? && !children.contains(&l) {
                children.push(l);
            }
        }
        if children.is_empty() {
            let mut first = None;
            for (i, &l) in path.iter().enumerate() {
                let deg = match memo.get(&l) {
                    Some(&d) => d,
                    None => {
                        let d = is_degenerate(aug, &cycle_of_letter(aug, l)?)?;
                        memo.insert(l, d);
                        d
                    }
                };
                if deg {
                    first = Some(i);
                    break;
                }
            }
            chains.push(ChainEntry {
                letters: path,
                first_degenerate: first,
            });
        } else {
            for &c in children.iter().rev() {
                let mut p = path.clone();
                p.push(c);
                stack.push(p);
            }
        }
    }
    let bound = aug.declared_states();
    let deep_chains_degenerate = chains
        .iter()
        .filter(|c| BigUint::from(c.letters.len()) >= bound)
        .all(|c| c.first_degenerate.is_some());
    Ok(ChainReport {
        chains,
        deep_chains_degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnfoldOptions {
    pub m0_cap: u64,
    pub max_len: usize,
}

impl Default for UnfoldOptions {
    fn default() -> Self {
        UnfoldOptions {
            m0_cap: 100_000,
            max_len: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Unfolding {
    pub word: Vec<LetterId>,
    pub m0: u64,
    pub repetitions: usize,
}

fn repetitions(aug: &AugWfa, cand: &CycleCandidate, m0: u64, opts: &UnfoldOptions) -> Result<usize, CactusError> {
    let m = small(&cycle_m(aug, cand), "stabilisation constant")?;
    let reps = 2u64
        .checked_mul(m)
        .and_then(|x| x.checked_mul(m0))
        .filter(|&r| r.saturating_mul(cand.word.len() as u64) <= opts.max_len as u64)
        .ok_or(CactusError::LengthBudget(opts.max_len))?;
    Ok(reps as usize)
}

/// `unfold(x, α, y ≀ F) = x·w^{2m·M0}·y`, with the effect on every
/// configuration along `y` re-verified.
pub fn unfold(
    aug: &AugWfa,
    prefix: &[LetterId],
    cactus: LetterId,
    suffix: &[LetterId],
    f: i64,
    opts: &UnfoldOptions,
) -> Result<Unfolding, CactusError> {
    if !matches!(aug.info(cactus)?.kind, LetterKind::Cactus { .. }) {
        return Err(CactusError::NotCactusLetter(cactus.0));
    }
    let whole: Vec<LetterId> = prefix.iter().chain([&cactus]).chain(suffix).copied().collect();
    let me = aug.maxeff(&whole)?;
    let need = me.checked_mul(2).ok_or(WeightError::Overflow("F"))?;
    if f <= need {
        return Err(CactusError::FTooSmall { f, need });
    }
    let cand = cycle_of_letter(aug, cactus)?;
    let m0 = pumping_m0(aug, &cand, f, opts.m0_cap)?;
    let reps = repetitions(aug, &cand, m0, opts)?;
    let mut word = prefix.to_vec();
    for _ in 0..reps {
        word.extend_from_slice(&cand.word);
    }
    word.extend_from_slice(suffix);
    if word.len() > opts.max_len {
        return Err(CactusError::LengthBudget(opts.max_len));
    }
    let s0 = aug.initial_config();
    let mut c1 = aug.xconf(&s0, &whole[..prefix.len() + 1])?;
    let mut c2 = aug.xconf(&s0, &word[..word.len() - suffix.len()])?;
    for i in 0..=suffix.len() {
        check_unfold_effect(&c1, &c2, f, me)?;
        if i < suffix.len() {
            c1 = aug.step(&c1, suffix[i])?;
            c2 = aug.step(&c2, suffix[i])?;
        }
    }
    Ok(Unfolding {
        word,
        m0,
        repetitions: reps,
    })
}

fn check_unfold_effect(c1: &AugConfig, c2: &AugConfig, f: i64, me: i64) -> Result<(), CactusError> {
    for (s, v) in c1 {
        match c2.get(s) {
            Some(w) if w == v => {}
            other => {
                return Err(CactusError::ContractViolated(format!(
                    "unfolding changed {s:?} from {v} to {other:?}"
                )))
            }
        }
    }
    for (s, &w) in c2 {
        if !c1.contains_key(s) && (w as i128) <= f as i128 - me as i128 {
            return Err(CactusError::ContractViolated(format!(
                "new state {s:?} has weight {w} ≤ F − maxeff"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Flattening {
    pub word: Vec<LetterId>,
    /// The additive boost applied to the per-step unfolding constant.
    pub boost: i64,
    /// Whether the support of the flat word equals `δ_ghost(s0, u)`.
    pub ghost_match: bool,
}

/// Unfolds cactus letters outermost-first until only Δ-letters remain. All
/// occurrences of one letter are unfolded together with a shared `M0`; the
/// resulting configuration contract is re-verified, and the unfolding
/// constant is raised until it holds.
pub fn flatten(aug: &AugWfa, word: &[LetterId], f: i64, opts: &UnfoldOptions) -> Result<Flattening, CactusError> {
    for &l in word {
        match aug.info(l)?.kind {
            LetterKind::Rebase { .. } => return Err(CactusError::RebasePresent),
            LetterKind::Jump { .. } => return Err(CactusError::JumpPresent),
            _ => {}
        }
    }
    let me = aug.maxeff(word)?;
    let need = me.checked_mul(2).ok_or(WeightError::Overflow("F"))?;
    if f <= need {
        return Err(CactusError::FTooSmall { f, need });
    }
    let s0 = aug.initial_config();
    let c = aug.xconf(&s0, word)?;
    let (_, ghost) = aug.ghost_reach(aug.initial(), word)?;
    let mut boost = 0i64;
    let mut last_err = None;
    for _ in 0..8 {
        match flatten_once(aug, word, f, me, boost, opts) {
            Ok(flat) => {
                let d = aug.xconf(&s0, &flat)?;
                match check_flatten_contract(&c, &d, f) {
                    Ok(()) => {
                        let support: BTreeSet<AugState> = d.keys().copied().collect();
                        return Ok(Flattening {
                            word: flat,
                            boost,
                            ghost_match: support == ghost,
                        });
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            Err(e @ (CactusError::LengthBudget(_) | CactusError::M0CapExceeded(_))) => return Err(e),
            Err(e) => last_err = Some(e),
        }
        boost = if boost == 0 { f.max(1) } else { boost.saturating_mul(2) };
    }
    Err(last_err.expect("at least one attempt"))
}

fn flatten_once(
    aug: &AugWfa,
    word: &[LetterId],
    f: i64,
    me: i64,
    boost: i64,
    opts: &UnfoldOptions,
) -> Result<Vec<LetterId>, CactusError> {
    let mut cur = word.to_vec();
    loop {
        let mut target = None;
        for &l in &cur {
            if aug.is_cactus(l)? {
                target = Some(l);
                break;
            }
        }
        let Some(alpha) = target else {
            return Ok(cur);
        };
        let cme = aug.maxeff(&cur)?;
        let step_f = (f as i128 + me as i128 + cme as i128)
            .max(2 * cme as i128)
            .saturating_add(1 + boost as i128);
        let step_f = i64::try_from(step_f).map_err(|_| WeightError::Overflow("F"))?;
        let cand = cycle_of_letter(aug, alpha)?;
        let m0 = pumping_m0(aug, &cand, step_f, opts.m0_cap)?;
        let reps = repetitions(aug, &cand, m0, opts)?;
        let count = cur.iter().filter(|&&l| l == alpha).count();
        let new_len = cur.len() - count + count * reps * cand.word.len();
        if new_len > opts.max_len {
            return Err(CactusError::LengthBudget(opts.max_len));
        }
        let mut next = Vec::with_capacity(new_len);
        for &l in &cur {
            if l == alpha {
                for _ in 0..reps {
                    next.extend_from_slice(&cand.word);
                }
            } else {
                next.push(l);
            }
        }
        cur = next;
    }
}

fn check_flatten_contract(c: &AugConfig, d: &AugConfig, f: i64) -> Result<(), CactusError> {
    for (s, v) in c {
        if d.get(s) != Some(v) {
            return Err(CactusError::ContractViolated(format!(
                "flattening changed {s:?} from {v} to {:?}",
                d.get(s)
            )));
        }
    }
    let max_old = c.values().copied().max().unwrap_or(0) as i128;
    for (s, &w) in d {
        if !c.contains_key(s) && (w as i128) < max_old + f as i128 {
            return Err(CactusError::ContractViolated(format!(
                "new state {s:?} has weight {w} < max + F"
            )));
        }
    }
    Ok(())
}

/// Membership of a letter in the `L`-bounded cactus alphabet up to
/// `max_depth`: the letter is non-degenerate and every nested cactus letter
/// `α_{S',x}` of depth `k` has `|x| ≤ L(k)`. Rebase letters are judged by
/// their cactus letter.
pub fn validate_bounded_letter(
    aug: &AugWfa,
    letter: LetterId,
    length_fn: &dyn Fn(usize) -> u64,
    max_depth: usize,
) -> Result<bool, CactusError> {
    if aug.info(letter)?.depth > max_depth {
        return Ok(false);
    }
    match aug.underlying_cactus(letter)? {
        Some(c) if is_degenerate(aug, &cycle_of_letter(aug, c)?)? => return Ok(false),
        _ => {}
    }
    let mut memo = HashMap::new();
    lengths_bounded(aug, letter, length_fn, &mut memo)
}

fn lengths_bounded(
    aug: &AugWfa,
    letter: LetterId,
    length_fn: &dyn Fn(usize) -> u64,
    memo: &mut HashMap<LetterId, bool>,
) -> Result<bool, CactusError> {
    if let Some(&v) = memo.get(&letter) {
        return Ok(v);
    }
    let info = aug.info(letter)?;
    let ok = match &info.kind {
        LetterKind::Base(_) => true,
        LetterKind::Jump { .. } => false,
        LetterKind::Rebase { cactus, .. } => lengths_bounded(aug, *cactus, length_fn, memo)?,
        LetterKind::Cactus { word, .. } => {
            let mut ok = word.len() as u64 <= length_fn(info.depth);
            for &l in word {
                if !ok {
                    break;
                }
                ok = lengths_bounded(aug, l, length_fn, memo)?;
            }
            ok
        }
    };
    memo.insert(letter, ok);
    Ok(ok)
}

/// Whether a rebase letter occurs anywhere inside `letter`.
pub fn contains_rebase(aug: &AugWfa, letter: LetterId) -> Result<bool, CactusError> {
    let info = aug.info(letter)?;
    Ok(match &info.kind {
        LetterKind::Rebase { .. } => true,
        LetterKind::Cactus { word, .. } => {
            let mut found = false;
            for &l in word {
                if contains_rebase(aug, l)? {
                    found = true;
                    break;
                }
            }
            found
        }
        _ => false,
    })
}

/// Proper reflexive cycles over Δ-letters: for each `(baseline, T)` reachable
/// from `s0` (with the shortest Δ-prefix reaching it), every cycle of the
/// underlying automaton at the baseline of length `≤ max_len` whose word maps
/// `T` onto itself.
pub fn find_reflexive_cycles(
    aug: &AugWfa,
    max_len: usize,
    limit: usize,
) -> Result<Vec<(Vec<LetterId>, CycleCandidate)>, CactusError> {
    let wfa = aug.wfa();
    let ts: Vec<Transition> = wfa.transitions().collect();
    let start = aug.initial().shape();
    let mut seen: HashMap<CycleSet, Vec<LetterId>> = HashMap::from([(start, Vec::new())]);
    let mut order = vec![start];
    let mut queue = VecDeque::from([start]);
    while let Some(shape) = queue.pop_front() {
        for t in ts.iter().filter(|t| t.from == shape.baseline) {
            let next = CycleSet {
                baseline: t.to,
                reach: wfa.reach(shape.reach, t.letter),
            };
            if !seen.contains_key(&next) {
                let mut p = seen[&shape].clone();
                p.push(aug.base_letter(*t)?);
                seen.insert(next, p);
                order.push(next);
                queue.push_back(next);
            }
        }
    }
    let mut out = Vec::new();
    for shape in order {
        let prefix = seen[&shape].clone();
        let mut stack: Vec<(StateId, u64, Vec<Transition>)> = vec![(shape.baseline, shape.reach, vec![])];
        while let Some((q, reach, path)) = stack.pop() {
            if !path.is_empty() && q == shape.baseline && reach == shape.reach {
                let word = path.iter().map(|&t| aug.base_letter(t)).collect::<Result<Vec<_>, _>>()?;
                out.push((prefix.clone(), CycleCandidate::new(shape, word)));
                if out.len() >= limit {
                    return Ok(out);
                }
            }
            if path.len() < max_len {
                for t in ts.iter().rev().filter(|t| t.from == q) {
                    let mut p = path.clone();
                    p.push(*t);
                    stack.push((t.to, wfa.reach(reach, t.letter), p));
                }
            }
        }
    }
    Ok(out)
}

/// Re-interns a letter serialized by [`AugWfa::letter_json`].
pub fn letter_from_json(aug: &AugWfa, v: &serde_json::Value) -> Result<LetterId, CactusError> {
    let bad = |m: &str| CactusError::LetterJson(m.to_string());
    let wfa = aug.wfa();
    let field = |k: &str| v.get(k).ok_or_else(|| bad(&format!("missing field {k}")));
    let state = |k: &str| -> Result<StateId, CactusError> {
        let name = field(k)?.as_str().ok_or_else(|| bad(k))?;
        Ok(wfa.state_id(name).map_err(AugError::from)?)
    };
    let mask = |t: &serde_json::Value| -> Result<u64, CactusError> {
        let mut m = 0u64;
        for q in t.as_array().ok_or_else(|| bad("T"))? {
            let name = q.as_str().ok_or_else(|| bad("T"))?;
            m |= 1 << wfa.state_id(name).map_err(AugError::from)?;
        }
        Ok(m)
    };
    let cycle = || -> Result<CycleCandidate, CactusError> {
        let set = field("set")?;
        let baseline = set
            .get("baseline")
            .and_then(|b| b.as_str())
            .ok_or_else(|| bad("set.baseline"))?;
        let set = CycleSet {
            baseline: wfa.state_id(baseline).map_err(AugError::from)?,
            reach: mask(set.get("T").ok_or_else(|| bad("set.T"))?)?,
        };
        Ok(CycleCandidate::new(set, word_from_json(aug, field("word")?)?))
    };
    match field("kind")?.as_str() {
        Some("base") => {
            let (from, to) = (state("from")?, state("to")?);
            let letter = field("letter")?.as_str().ok_or_else(|| bad("letter"))?;
            let letter = wfa.letter_id(letter).map_err(AugError::from)?;
            let Fin(weight) = wfa.weight(from, letter, to) else {
                return Err(bad("no such transition"));
            };
            Ok(aug.base_letter(Transition { from, letter, weight, to })?)
        }
        Some("cactus") => stabilise(aug, &cycle()?),
        Some("rebase") => {
            let alpha = stabilise(aug, &cycle()?)?;
            Ok(aug.rebase(alpha, state("from")?, state("to")?)?)
        }
        Some("jump") => {
            let reach = mask(field("T")?)?;
            let (from, to) = (state("from")?, state("to")?);
            Ok(aug.jump_letter(AugState::new(from, from, reach), AugState::new(to, to, reach))?)
        }
        _ => Err(bad("unknown kind")),
    }
}

pub fn word_from_json(aug: &AugWfa, v: &serde_json::Value) -> Result<Vec<LetterId>, CactusError> {
    v.as_array()
        .ok_or_else(|| CactusError::LetterJson("word must be an array".into()))?
        .iter()
        .map(|l| letter_from_json(aug, l))
        .collect()
}

/// The inner states of `T` as a list, for reporting.
pub fn set_members(set: &CycleSet) -> Vec<StateId> {
    bits(set.reach).collect()
}
