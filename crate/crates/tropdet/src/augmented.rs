//! The baseline-augmented automaton `Â`, its letter registry, and baseline
//! shifts of words, runs, states and configurations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, RwLock};

use num_bigint::BigUint;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::weight::{Fin, Inf, Weight, WeightError};
use crate::wfa::{bits, RunTrace, StateId, Sym, Transition, Wfa, WfaError};

pub type Mask = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AugError {
    #[error("invalid run: {0}")]
    InvalidRun(String),
    #[error("anchor is not a run on the given word")]
    AnchorWordMismatch,
    #[error("runs are not on the same word")]
    WordMismatch,
    #[error("baseline or reachable-set mismatch: {0}")]
    BaselineMismatch(String),
    #[error("reachable sets differ")]
    ReachMismatch,
    #[error("jump letters cannot be baseline-shifted")]
    JumpInShift,
    #[error("unknown letter id {0}")]
    UnknownLetter(u32),
    #[error("pair ({0}, {1}) is not grounded for this cactus letter")]
    NotGrounded(StateId, StateId),
    #[error("letter {0} is not a cactus letter")]
    NotCactus(u32),
    #[error("state {0:?} is not a state of the augmented automaton")]
    BadState(AugState),
    #[error(transparent)]
    Wfa(#[from] WfaError),
    #[error(transparent)]
    Weight(#[from] WeightError),
}

/// A state `(inner, baseline, reach)` of `Â`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AugState {
    pub inner: StateId,
    pub baseline: StateId,
    pub reach: Mask,
}

impl AugState {
    pub fn new(inner: StateId, baseline: StateId, reach: Mask) -> AugState {
        AugState {
            inner,
            baseline,
            reach,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.reach >> self.inner & 1 == 1 && self.reach >> self.baseline & 1 == 1
    }

    pub fn is_baseline(&self) -> bool {
        self.inner == self.baseline
    }

    pub fn shape(&self) -> CycleSet {
        CycleSet {
            baseline: self.baseline,
            reach: self.reach,
        }
    }
}

/// A saturated state set `{(p, baseline, reach) | p ∈ reach}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CycleSet {
    pub baseline: StateId,
    pub reach: Mask,
}

impl CycleSet {
    pub fn states(&self) -> Vec<AugState> {
        bits(self.reach)
            .map(|p| AugState::new(p, self.baseline, self.reach))
            .collect()
    }

    pub fn size(&self) -> usize {
        self.reach.count_ones() as usize
    }

    pub fn baseline_state(&self) -> AugState {
        AugState::new(self.baseline, self.baseline, self.reach)
    }

    pub fn contains(&self, s: &AugState) -> bool {
        s.baseline == self.baseline && s.reach == self.reach && self.reach >> s.inner & 1 == 1
    }

    /// Position of `inner` within the set, used as a matrix index.
    pub fn index_of(&self, inner: StateId) -> Option<usize> {
        if self.reach >> inner & 1 == 0 {
            return None;
        }
        Some((self.reach & ((1u64 << inner) - 1)).count_ones() as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct LetterId(pub u32);

/// Structural identity of a letter of the cactus extension.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LetterKind {
    Base(Transition),
    Cactus { set: CycleSet, word: Vec<LetterId> },
    /// `β_{S',w,s→r}` with `s = (from, p, T)` and `r = (to, p, T)` for the
    /// cactus letter `α_{S',w}`.
    Rebase {
        cactus: LetterId,
        from: StateId,
        to: StateId,
    },
    Jump {
        from: StateId,
        to: StateId,
        reach: Mask,
    },
}

/// A grounded pair of a stable cycle with its stabilised weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GroundedPair {
    pub from: StateId,
    pub to: StateId,
    pub grounding: StateId,
    pub weight: i64,
}

/// Transition table of a cactus letter over inner states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CactusTable {
    pub m: BigUint,
    pub pairs: BTreeMap<(StateId, StateId), GroundedPair>,
}

#[derive(Debug, Clone)]
pub struct LetterInfo {
    pub kind: LetterKind,
    pub depth: usize,
    pub wmax: i64,
    pub table: Option<Arc<CactusTable>>,
    /// For rebase letters, the weight `c` of the pair `(s, r)`.
    pub offset: i64,
}

#[derive(Default)]
struct Registry {
    entries: Vec<Arc<LetterInfo>>,
    index: HashMap<LetterKind, LetterId>,
}

type Succ = Arc<Vec<(AugState, i64)>>;

/// Stabilisation constant policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StabMode {
    /// `n·n!` with `n` the size of the cycle's own state set.
    #[default]
    Tight,
    /// `n·n!` with `n` the declared size of `Â`.
    Declared,
}

/// The lazily explored augmented automaton over an interned alphabet.
pub struct AugWfa {
    wfa: Wfa,
    mode: StabMode,
    registry: RwLock<Registry>,
    memo: RwLock<HashMap<(AugState, LetterId), Succ>>,
}

pub type AugConfig = BTreeMap<AugState, i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct AugStep {
    pub letter: LetterId,
    pub weight: i64,
    pub to: AugState,
}

/// A run of `Â`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AugRun {
    pub start: AugState,
    pub steps: Vec<AugStep>,
}

impl AugRun {
    pub fn empty(start: AugState) -> AugRun {
        AugRun {
            start,
            steps: Vec::new(),
        }
    }

    pub fn state_at(&self, i: usize) -> AugState {
        if i == 0 {
            self.start
        } else {
            self.steps[i - 1].to
        }
    }

    pub fn end(&self) -> AugState {
        self.state_at(self.steps.len())
    }

    pub fn word(&self) -> Vec<LetterId> {
        self.steps.iter().map(|s| s.letter).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn wt(&self) -> Result<i64, WeightError> {
        crate::weight::checked_sum(self.steps.iter().map(|s| s.weight))
    }

    /// Weight of the first `i` transitions.
    pub fn prefix_wt(&self, i: usize) -> Result<i64, WeightError> {
        crate::weight::checked_sum(self.steps[..i].iter().map(|s| s.weight))
    }

    /// Concatenates `k` copies of a cyclic run.
    pub fn repeat(&self, k: usize) -> AugRun {
        let mut steps = Vec::with_capacity(self.steps.len() * k);
        for _ in 0..k {
            steps.extend_from_slice(&self.steps);
        }
        AugRun {
            start: self.start,
            steps,
        }
    }
}

pub fn config_min(c: &AugConfig) -> Weight {
    c.values().copied().min().map_or(Inf, Fin)
}

pub fn config_argmin(c: &AugConfig) -> Option<AugState> {
    let m = c.values().copied().min()?;
    c.iter().find(|(_, &v)| v == m).map(|(s, _)| *s)
}

pub fn config_support(c: &AugConfig) -> BTreeSet<AugState> {
    c.keys().copied().collect()
}

/// Number of `(p, q, T)` with `p, q ∈ T ⊆ Q`, i.e. `Σ_k C(n,k)·k²`.
pub fn declared_size(n: usize) -> BigUint {
    let mut total = BigUint::from(0u32);
    let mut binom = BigUint::from(1u32);
    for k in 1..=n {
        binom = binom * BigUint::from(n - k + 1) / BigUint::from(k);
        total += &binom * BigUint::from(k * k);
    }
    total
}

impl AugWfa {
    pub fn new(wfa: Wfa) -> AugWfa {
        AugWfa::with_mode(wfa, StabMode::Tight)
    }

    pub fn with_mode(wfa: Wfa, mode: StabMode) -> AugWfa {
        AugWfa {
            wfa: wfa.trim(),
            mode,
            registry: RwLock::new(Registry::default()),
            memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn wfa(&self) -> &Wfa {
        &self.wfa
    }

    pub fn mode(&self) -> StabMode {
        self.mode
    }

    /// `s0 = (q0, q0, {q0})`.
    pub fn initial(&self) -> AugState {
        let q0 = self.wfa.initial();
        AugState::new(q0, q0, 1 << q0)
    }

    pub fn initial_config(&self) -> AugConfig {
        AugConfig::from([(self.initial(), 0)])
    }

    /// Declared `|S|` of the full augmented automaton.
    pub fn declared_states(&self) -> BigUint {
        declared_size(self.wfa.num_states())
    }

    pub fn num_letters(&self) -> usize {
        self.registry.read().expect("registry lock").entries.len()
    }

    pub fn info(&self, l: LetterId) -> Result<Arc<LetterInfo>, AugError> {
        self.registry
            .read()
            .expect("registry lock")
            .entries
            .get(l.0 as usize)
            .cloned()
            .ok_or(AugError::UnknownLetter(l.0))
    }

    pub fn lookup(&self, kind: &LetterKind) -> Option<LetterId> {
        self.registry
            .read()
            .expect("registry lock")
            .index
            .get(kind)
            .copied()
    }

    fn intern_with(
        &self,
        kind: LetterKind,
        make: impl FnOnce() -> Result<LetterInfo, AugError>,
    ) -> Result<LetterId, AugError> {
        if let Some(id) = self.lookup(&kind) {
            return Ok(id);
        }
        let info = make()?;
        let mut reg = self.registry.write().expect("registry lock");
        if let Some(&id) = reg.index.get(&kind) {
            return Ok(id);
        }
        let id = LetterId(reg.entries.len() as u32);
        reg.entries.push(Arc::new(info));
        reg.index.insert(kind, id);
        Ok(id)
    }

    /// Interns the Δ-letter for a transition of the underlying automaton.
    pub fn base_letter(&self, t: Transition) -> Result<LetterId, AugError> {
        if self.wfa.weight(t.from, t.letter, t.to) != Fin(t.weight) {
            return Err(AugError::InvalidRun(format!("{t:?} is not a transition")));
        }
        self.intern_with(LetterKind::Base(t), || {
            let mut wmax = 0i64;
            for p in 0..self.wfa.num_states() {
                for &(_, c) in self.wfa.successors(p, t.letter) {
                    let d = c.checked_sub(t.weight).ok_or(WeightError::Overflow("letter"))?;
                    wmax = wmax.max(d.saturating_abs());
                }
            }
            Ok(LetterInfo {
                kind: LetterKind::Base(t),
                depth: 0,
                wmax,
                table: None,
                offset: 0,
            })
        })
    }

    /// All Δ-letters, in transition order.
    pub fn base_letters(&self) -> Result<Vec<LetterId>, AugError> {
        let ts: Vec<Transition> = self.wfa.transitions().collect();
        ts.into_iter().map(|t| self.base_letter(t)).collect()
    }

    /// Interns a cactus letter with a precomputed grounded-pair table.
    pub(crate) fn intern_cactus(
        &self,
        set: CycleSet,
        word: Vec<LetterId>,
        table: CactusTable,
    ) -> Result<LetterId, AugError> {
        let kind = LetterKind::Cactus {
            set,
            word: word.clone(),
        };
        self.intern_with(kind.clone(), || {
            let depth = 1 + self.depth(&word)?;
            let wmax = table
                .pairs
                .values()
                .map(|g| g.weight.saturating_abs())
                .max()
                .unwrap_or(0);
            Ok(LetterInfo {
                kind,
                depth,
                wmax,
                table: Some(Arc::new(table)),
                offset: 0,
            })
        })
    }

    /// The rebase letter `β_{S',w,s→r}` for a cactus letter and a grounded pair
    /// `s = (from, p, T)`, `r = (to, p, T)`; the cactus letter itself when
    /// `s = r` is the baseline state.
    pub fn rebase(&self, cactus: LetterId, from: StateId, to: StateId) -> Result<LetterId, AugError> {
        let info = self.info(cactus)?;
        let (LetterKind::Cactus { set, word }, Some(table)) = (&info.kind, &info.table) else {
            return Err(AugError::NotCactus(cactus.0));
        };
        if from == set.baseline && to == set.baseline {
            return Ok(cactus);
        }
        let pair = table
            .pairs
            .get(&(from, to))
            .ok_or(AugError::NotGrounded(from, to))?;
        let c = pair.weight;
        let depth = 1 + self.depth(word)?;
        let kind = LetterKind::Rebase { cactus, from, to };
        self.intern_with(kind.clone(), || {
            let mut wmax = 0i64;
            for g in table.pairs.values() {
                let d = g.weight.checked_sub(c).ok_or(WeightError::Overflow("rebase"))?;
                wmax = wmax.max(d.saturating_abs());
            }
            Ok(LetterInfo {
                kind,
                depth,
                wmax,
                table: None,
                offset: c,
            })
        })
    }

    /// `jump_{from→to}`: rewrites the baseline component with weight 0.
    pub fn jump_letter(&self, from: AugState, to: AugState) -> Result<LetterId, AugError> {
        if from.reach != to.reach {
            return Err(AugError::ReachMismatch);
        }
        if !from.is_valid() || !to.is_valid() {
            return Err(AugError::BadState(if from.is_valid() { to } else { from }));
        }
        let kind = LetterKind::Jump {
            from: from.baseline,
            to: to.baseline,
            reach: from.reach,
        };
        self.intern_with(kind.clone(), || {
            Ok(LetterInfo {
                kind,
                depth: 0,
                wmax: 0,
                table: None,
                offset: 0,
            })
        })
    }

    pub fn is_jump(&self, l: LetterId) -> Result<bool, AugError> {
        Ok(matches!(self.info(l)?.kind, LetterKind::Jump { .. }))
    }

    pub fn is_rebase(&self, l: LetterId) -> Result<bool, AugError> {
        Ok(matches!(self.info(l)?.kind, LetterKind::Rebase { .. }))
    }

    pub fn is_cactus(&self, l: LetterId) -> Result<bool, AugError> {
        Ok(matches!(self.info(l)?.kind, LetterKind::Cactus { .. }))
    }

    /// The underlying cactus letter of a cactus or rebase letter.
    pub fn underlying_cactus(&self, l: LetterId) -> Result<Option<LetterId>, AugError> {
        Ok(match self.info(l)?.kind {
            LetterKind::Cactus { .. } => Some(l),
            LetterKind::Rebase { cactus, .. } => Some(cactus),
            _ => None,
        })
    }

    /// `(S', w)` of a cactus or rebase letter.
    pub fn cactus_parts(&self, l: LetterId) -> Result<(CycleSet, Vec<LetterId>), AugError> {
        let c = self.underlying_cactus(l)?.ok_or(AugError::NotCactus(l.0))?;
        match &self.info(c)?.kind {
            LetterKind::Cactus { set, word } => Ok((*set, word.clone())),
            _ => Err(AugError::NotCactus(l.0)),
        }
    }

    pub fn depth(&self, word: &[LetterId]) -> Result<usize, AugError> {
        word.iter().try_fold(0, |d, &l| Ok(d.max(self.info(l)?.depth)))
    }

    pub fn wmax(&self, word: &[LetterId]) -> Result<i64, AugError> {
        word.iter().try_fold(0, |d, &l| Ok(d.max(self.info(l)?.wmax)))
    }

    pub fn maxeff(&self, word: &[LetterId]) -> Result<i64, AugError> {
        word.iter().try_fold(0i64, |acc, &l| {
            acc.checked_add(self.info(l)?.wmax)
                .ok_or(AugError::Weight(WeightError::Overflow("maxeff")))
        })
    }

    /// Finite transitions of `s` on `l`, memoised.
    pub fn successors(&self, s: AugState, l: LetterId) -> Result<Succ, AugError> {
        if let Some(v) = self.memo.read().expect("memo lock").get(&(s, l)) {
            return Ok(v.clone());
        }
        let v = Arc::new(self.compute_successors(s, l)?);
        self.memo
            .write()
            .expect("memo lock")
            .entry((s, l))
            .or_insert_with(|| v.clone());
        Ok(v)
    }

    fn compute_successors(&self, s: AugState, l: LetterId) -> Result<Vec<(AugState, i64)>, AugError> {
        let info = self.info(l)?;
        let mut out = Vec::new();
        match &info.kind {
            LetterKind::Base(t) => {
                if s.baseline != t.from {
                    return Ok(out);
                }
                let reach = self.wfa.reach(s.reach, t.letter);
                for &(p2, c2) in self.wfa.successors(s.inner, t.letter) {
                    let w = c2.checked_sub(t.weight).ok_or(WeightError::Overflow("letter"))?;
                    out.push((AugState::new(p2, t.to, reach), w));
                }
            }
            LetterKind::Cactus { set, .. } => {
                if s.shape() != *set {
                    return Ok(out);
                }
                let table = info.table.as_ref().expect("cactus letters carry a table");
                for g in table.pairs.range((s.inner, 0)..=(s.inner, usize::MAX)).map(|(_, g)| g) {
                    out.push((AugState::new(g.to, set.baseline, set.reach), g.weight));
                }
            }
            LetterKind::Rebase { cactus, from, to } => {
                let cinfo = self.info(*cactus)?;
                let LetterKind::Cactus { set, .. } = &cinfo.kind else {
                    return Err(AugError::NotCactus(cactus.0));
                };
                if s.reach != set.reach || s.baseline != *from {
                    return Ok(out);
                }
                let table = cinfo.table.as_ref().expect("cactus letters carry a table");
                for g in table.pairs.range((s.inner, 0)..=(s.inner, usize::MAX)).map(|(_, g)| g) {
                    let w = g.weight.checked_sub(info.offset).ok_or(WeightError::Overflow("rebase"))?;
                    out.push((AugState::new(g.to, *to, set.reach), w));
                }
            }
            LetterKind::Jump { from, to, reach } => {
                if s.baseline == *from && s.reach == *reach {
                    out.push((AugState::new(s.inner, *to, *reach), 0));
                }
            }
        }
        Ok(out)
    }

    /// The deterministic `(baseline, reach)` component after reading `l`.
    pub fn shape_step(&self, shape: CycleSet, l: LetterId) -> Result<Option<CycleSet>, AugError> {
        let info = self.info(l)?;
        Ok(match &info.kind {
            LetterKind::Base(t) => (shape.baseline == t.from).then(|| CycleSet {
                baseline: t.to,
                reach: self.wfa.reach(shape.reach, t.letter),
            }),
            LetterKind::Cactus { set, .. } => (shape == *set).then_some(shape),
            LetterKind::Rebase { cactus, from, to } => {
                let (set, _) = self.cactus_parts(*cactus)?;
                (shape.reach == set.reach && shape.baseline == *from).then_some(CycleSet {
                    baseline: *to,
                    reach: shape.reach,
                })
            }
            LetterKind::Jump { from, to, reach } => {
                (shape.baseline == *from && shape.reach == *reach).then_some(CycleSet {
                    baseline: *to,
                    reach: *reach,
                })
            }
        })
    }

    pub fn step(&self, c: &AugConfig, l: LetterId) -> Result<AugConfig, AugError> {
        let mut out = AugConfig::new();
        for (&s, &v) in c {
            for &(t, w) in self.successors(s, l)?.iter() {
                let x = v.checked_add(w).ok_or(WeightError::Overflow("xconf"))?;
                out.entry(t).and_modify(|y| *y = (*y).min(x)).or_insert(x);
            }
        }
        Ok(out)
    }

    pub fn xconf(&self, c: &AugConfig, word: &[LetterId]) -> Result<AugConfig, AugError> {
        let mut cur = c.clone();
        for &l in word {
            cur = self.step(&cur, l)?;
        }
        Ok(cur)
    }

    pub fn xconf_trace(&self, c: &AugConfig, word: &[LetterId]) -> Result<Vec<AugConfig>, AugError> {
        let mut out = vec![c.clone()];
        for &l in word {
            let next = self.step(out.last().expect("non-empty"), l)?;
            out.push(next);
        }
        Ok(out)
    }

    /// `mwt(from →word→ to)`; `to = None` means all states.
    pub fn mwt(
        &self,
        from: &[AugState],
        word: &[LetterId],
        to: Option<&[AugState]>,
    ) -> Result<Weight, AugError> {
        let start: AugConfig = from.iter().map(|&s| (s, 0)).collect();
        let end = self.xconf(&start, word)?;
        Ok(match to {
            None => config_min(&end),
            Some(ts) => ts
                .iter()
                .filter_map(|t| end.get(t).copied())
                .min()
                .map_or(Inf, Fin),
        })
    }

    /// Boolean reachability `δ_B(s, w)`.
    pub fn reach(&self, s: AugState, word: &[LetterId]) -> Result<BTreeSet<AugState>, AugError> {
        Ok(config_support(&self.xconf(&AugConfig::from([(s, 0)]), word)?))
    }

    /// `δ_B(s, w)` together with the ghost-reachable states `δ_ghost(s, w)`.
    pub fn ghost_reach(
        &self,
        s: AugState,
        word: &[LetterId],
    ) -> Result<(BTreeSet<AugState>, BTreeSet<AugState>), AugError> {
        let reach = self.reach(s, word)?;
        let ghost = match reach.iter().next() {
            Some(r) => r.shape().states().into_iter().collect(),
            None => BTreeSet::new(),
        };
        Ok((reach, ghost))
    }

    pub fn validate_run(&self, run: &AugRun) -> Result<i64, AugError> {
        let mut cur = run.start;
        for (i, st) in run.steps.iter().enumerate() {
            let ok = self
                .successors(cur, st.letter)?
                .iter()
                .any(|&(t, w)| t == st.to && w == st.weight);
            if !ok {
                return Err(AugError::InvalidRun(format!("step {i} is not a transition")));
            }
            cur = st.to;
        }
        Ok(run.wt()?)
    }

    /// A minimal run from `start` on `word` ending in `target` (or the
    /// lowest minimal state); every prefix is minimal.
    pub fn min_run(
        &self,
        start: &AugConfig,
        word: &[LetterId],
        target: Option<AugState>,
    ) -> Result<Option<AugRun>, AugError> {
        let trace = self.xconf_trace(start, word)?;
        let last = trace.last().expect("non-empty");
        let end = match target {
            Some(t) => t,
            None => match config_argmin(last) {
                Some(t) => t,
                None => return Ok(None),
            },
        };
        if !last.contains_key(&end) {
            return Ok(None);
        }
        let mut cur = end;
        let mut steps = Vec::with_capacity(word.len());
        for i in (0..word.len()).rev() {
            let want = trace[i + 1][&cur];
            let mut found = None;
            'pred: for (&p, &v) in &trace[i] {
                for &(t, w) in self.successors(p, word[i])?.iter() {
                    if t == cur && v.checked_add(w) == Some(want) {
                        found = Some((p, w));
                        break 'pred;
                    }
                }
            }
            let (p, w) = found.expect("the minimum is attained by a predecessor");
            steps.push(AugStep {
                letter: word[i],
                weight: w,
                to: cur,
            });
            cur = p;
        }
        steps.reverse();
        Ok(Some(AugRun { start: cur, steps }))
    }

    /// True iff every prefix of `run` is minimal to its endpoint from `start`.
    pub fn is_seamless(&self, start: &AugConfig, run: &AugRun) -> Result<bool, AugError> {
        self.validate_run(run)?;
        let Some(&v0) = start.get(&run.start) else {
            return Ok(false);
        };
        let mut acc = v0;
        let mut c = start.clone();
        for st in &run.steps {
            c = self.step(&c, st.letter)?;
            acc = acc.checked_add(st.weight).ok_or(WeightError::Overflow("run"))?;
            if c.get(&st.to) != Some(&acc) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The run through baseline states `(q, q, T)` on `word` from a baseline
    /// state, if every step is a transition (jump letters break it).
    pub fn baseline_run(&self, start: AugState, word: &[LetterId]) -> Result<Option<AugRun>, AugError> {
        if !start.is_baseline() {
            return Ok(None);
        }
        let mut cur = start;
        let mut steps = Vec::with_capacity(word.len());
        for &l in word {
            let Some(shape) = self.shape_step(cur.shape(), l)? else {
                return Ok(None);
            };
            let next = shape.baseline_state();
            match self.successors(cur, l)?.iter().find(|(t, _)| *t == next) {
                Some(&(_, w)) => steps.push(AugStep {
                    letter: l,
                    weight: w,
                    to: next,
                }),
                None => return Ok(None),
            }
            cur = next;
        }
        Ok(Some(AugRun { start, steps }))
    }

    /// The baseline run of `word` from `s0`, if it exists and is seamless.
    pub fn seamless_baseline(&self, word: &[LetterId]) -> Result<Option<AugRun>, AugError> {
        match self.baseline_run(self.initial(), word)? {
            Some(run) if self.is_seamless(&self.initial_config(), &run)? => Ok(Some(run)),
            _ => Ok(None),
        }
    }

    /// The Δ-letters spelling a run of the underlying automaton.
    pub fn encode_run(&self, run: &RunTrace) -> Result<Vec<LetterId>, AugError> {
        self.wfa.validate_run(run)?;
        run.transitions.iter().map(|&t| self.base_letter(t)).collect()
    }

    /// Lifts a run of the underlying automaton, read on the Δ-letters of
    /// `baseline`, to a run of `Â` from `s0`.
    pub fn lift_run(&self, run: &RunTrace, baseline: &RunTrace) -> Result<AugRun, AugError> {
        if run.word() != baseline.word() {
            return Err(AugError::WordMismatch);
        }
        let word = self.encode_run(baseline)?;
        self.wfa.validate_run(run)?;
        let q0 = self.wfa.initial();
        if run.start != q0 || baseline.start != q0 {
            return Err(AugError::InvalidRun("runs must start at the initial state".into()));
        }
        let mut cur = self.initial();
        let mut steps = Vec::new();
        for (i, &l) in word.iter().enumerate() {
            let want = run.transitions[i].to;
            let (t, w) = *self
                .successors(cur, l)?
                .iter()
                .find(|(t, _)| t.inner == want)
                .ok_or_else(|| AugError::InvalidRun(format!("no lifted transition at {i}")))?;
            steps.push(AugStep { letter: l, weight: w, to: t });
            cur = t;
        }
        Ok(AugRun {
            start: self.initial(),
            steps,
        })
    }

    /// `shift(w, ρ0)`.
    pub fn baseline_shift_word(&self, word: &[LetterId], anchor: &AugRun) -> Result<Vec<LetterId>, AugError> {
        if anchor.word() != word {
            return Err(AugError::AnchorWordMismatch);
        }
        self.validate_run(anchor)?;
        let mut out = Vec::with_capacity(word.len());
        for (i, &l) in word.iter().enumerate() {
            let (s, r) = (anchor.state_at(i), anchor.state_at(i + 1));
            let info = self.info(l)?;
            let g = match &info.kind {
                LetterKind::Base(t) => {
                    let Fin(c) = self.wfa.weight(s.inner, t.letter, r.inner) else {
                        return Err(AugError::InvalidRun("anchor uses a missing transition".into()));
                    };
                    self.base_letter(Transition {
                        from: s.inner,
                        letter: t.letter,
                        weight: c,
                        to: r.inner,
                    })?
                }
                LetterKind::Cactus { .. } => self.rebase(l, s.inner, r.inner)?,
                LetterKind::Rebase { cactus, .. } => self.rebase(*cactus, s.inner, r.inner)?,
                LetterKind::Jump { .. } => return Err(AugError::JumpInShift),
            };
            out.push(g);
        }
        Ok(out)
    }

    /// `shift(η, ρ0)` for a run `η` on the same word as the anchor.
    pub fn baseline_shift_run(&self, run: &AugRun, anchor: &AugRun) -> Result<AugRun, AugError> {
        if run.word() != anchor.word() {
            return Err(AugError::WordMismatch);
        }
        self.validate_run(run)?;
        let word = self.baseline_shift_word(&run.word(), anchor)?;
        let shift_at = |i: usize| -> Result<AugState, AugError> {
            shift_state(run.state_at(i), anchor.state_at(i))
        };
        let mut steps = Vec::with_capacity(word.len());
        for (i, &g) in word.iter().enumerate() {
            let w = run.steps[i]
                .weight
                .checked_sub(anchor.steps[i].weight)
                .ok_or(WeightError::Overflow("shift"))?;
            steps.push(AugStep {
                letter: g,
                weight: w,
                to: shift_at(i + 1)?,
            });
        }
        Ok(AugRun {
            start: shift_at(0)?,
            steps,
        })
    }

    /// Renders a letter as a nested JSON structure with state names.
    pub fn letter_json(&self, l: LetterId) -> Result<Value, AugError> {
        let names = self.wfa.state_names();
        let set_json = |set: &CycleSet| {
            json!({
                "baseline": names[set.baseline],
                "T": bits(set.reach).map(|q| names[q].clone()).collect::<Vec<_>>(),
            })
        };
        let info = self.info(l)?;
        Ok(match &info.kind {
            LetterKind::Base(t) => json!({
                "kind": "base",
                "from": names[t.from],
                "letter": self.wfa.letter_name(t.letter),
                "weight": t.weight,
                "to": names[t.to],
            }),
            LetterKind::Cactus { set, word } => json!({
                "kind": "cactus",
                "set": set_json(set),
                "word": self.word_json(word)?,
            }),
            LetterKind::Rebase { cactus, from, to } => {
                let (set, word) = self.cactus_parts(*cactus)?;
                json!({
                    "kind": "rebase",
                    "set": set_json(&set),
                    "word": self.word_json(&word)?,
                    "from": names[*from],
                    "to": names[*to],
                })
            }
            LetterKind::Jump { from, to, reach } => json!({
                "kind": "jump",
                "from": names[*from],
                "to": names[*to],
                "T": bits(*reach).map(|q| names[q].clone()).collect::<Vec<_>>(),
            }),
        })
    }

    pub fn word_json(&self, word: &[LetterId]) -> Result<Value, AugError> {
        Ok(Value::Array(
            word.iter().map(|&l| self.letter_json(l)).collect::<Result<_, _>>()?,
        ))
    }

    pub fn state_json(&self, s: &AugState) -> Value {
        let names = self.wfa.state_names();
        json!({
            "inner": names[s.inner],
            "baseline": names[s.baseline],
            "T": bits(s.reach).map(|q| names[q].clone()).collect::<Vec<_>>(),
        })
    }

    pub fn config_json(&self, c: &AugConfig) -> Value {
        Value::Array(
            c.iter()
                .map(|(s, v)| json!({"state": self.state_json(s), "weight": v}))
                .collect(),
        )
    }

    /// Encodes a word of the underlying automaton along its minimal run.
    pub fn encode_min_run(&self, word: &[Sym]) -> Result<Option<Vec<LetterId>>, AugError> {
        match self.wfa.min_run(&self.wfa.initial_config(), word, None)? {
            Some(run) => Ok(Some(self.encode_run(&run)?)),
            None => Ok(None),
        }
    }
}

/// `shift(s, s')` for `s = (p, q, T)`, `s' = (r, q, T)`: yields `(p, r, T)`.
pub fn shift_state(s: AugState, anchor: AugState) -> Result<AugState, AugError> {
    if s.baseline != anchor.baseline || s.reach != anchor.reach {
        return Err(AugError::BaselineMismatch(format!("{s:?} vs {anchor:?}")));
    }
    Ok(AugState::new(s.inner, anchor.inner, s.reach))
}

pub fn shift_set(set: &BTreeSet<AugState>, anchor: AugState) -> Result<BTreeSet<AugState>, AugError> {
    set.iter().map(|&s| shift_state(s, anchor)).collect()
}

pub fn shift_config(c: &AugConfig, anchor: AugState) -> Result<AugConfig, AugError> {
    c.iter().map(|(&s, &v)| Ok((shift_state(s, anchor)?, v))).collect()
}
