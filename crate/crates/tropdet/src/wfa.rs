//! Weighted finite automata over the (min,+) semiring: runs, configurations and
//! minimal-weight computations.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::weight::{Fin, Inf, Weight, WeightError};

pub type StateId = usize;
pub type Sym = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WfaError {
    #[error("unknown letter {0:?}")]
    UnknownLetter(String),
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("letter index {0} out of range")]
    LetterOutOfRange(Sym),
    #[error("state index {0} out of range")]
    StateOutOfRange(StateId),
    #[error("duplicate name {0:?}")]
    DuplicateName(String),
    #[error("invalid run: {0}")]
    InvalidRun(String),
    #[error("automaton has no states")]
    NoStates,
    #[error("at most 64 states are supported, got {0}")]
    TooManyStates(usize),
    #[error("initial state was removed by trimming")]
    InitialRemoved,
    #[error("malformed automaton JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Weight(#[from] WeightError),
}

/// A transition `(from, letter, weight, to)` with a finite weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transition {
    pub from: StateId,
    pub letter: Sym,
    pub weight: i64,
    pub to: StateId,
}

/// A (min,+) automaton without initial or final weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wfa {
    states: Vec<String>,
    alphabet: Vec<String>,
    initial: StateId,
    /// `delta[p][a]` lists `(q, c)` sorted by target.
    delta: Vec<Vec<Vec<(StateId, i64)>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WfaJson {
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
    pub initial: String,
    pub transitions: Vec<TransitionJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionJson {
    pub from: String,
    pub letter: String,
    #[serde(default = "inf_weight")]
    pub weight: Weight,
    pub to: String,
}

fn inf_weight() -> Weight {
    Inf
}

fn index_names(names: &[String]) -> Result<HashMap<&str, usize>, WfaError> {
    let mut map = HashMap::new();
    for (i, n) in names.iter().enumerate() {
        if map.insert(n.as_str(), i).is_some() {
            return Err(WfaError::DuplicateName(n.clone()));
        }
    }
    Ok(map)
}

impl Wfa {
    /// Builds an automaton; parallel transitions on the same `(p, σ, q)` are
    /// collapsed to their minimum weight. The result is not trimmed.
    pub fn new(
        states: Vec<String>,
        alphabet: Vec<String>,
        initial: StateId,
        transitions: impl IntoIterator<Item = Transition>,
    ) -> Result<Wfa, WfaError> {
        if states.is_empty() {
            return Err(WfaError::NoStates);
        }
        if states.len() > 64 {
            return Err(WfaError::TooManyStates(states.len()));
        }
        index_names(&states)?;
        index_names(&alphabet)?;
        if initial >= states.len() {
            return Err(WfaError::StateOutOfRange(initial));
        }
        let mut best: BTreeMap<(StateId, Sym, StateId), i64> = BTreeMap::new();
        for t in transitions {
            if t.from >= states.len() {
                return Err(WfaError::StateOutOfRange(t.from));
            }
            if t.to >= states.len() {
                return Err(WfaError::StateOutOfRange(t.to));
            }
            if t.letter >= alphabet.len() {
                return Err(WfaError::LetterOutOfRange(t.letter));
            }
            match best.get_mut(&(t.from, t.letter, t.to)) {
                Some(c) => {
                    log::warn!(
                        "parallel transitions {} -{}-> {} collapsed to the minimum weight",
                        states[t.from],
                        alphabet[t.letter],
                        states[t.to]
                    );
                    *c = (*c).min(t.weight);
                }
                None => {
                    best.insert((t.from, t.letter, t.to), t.weight);
                }
            }
        }
        let mut delta = vec![vec![Vec::new(); alphabet.len()]; states.len()];
        for ((p, a, q), c) in best {
            delta[p][a].push((q, c));
        }
        Ok(Wfa {
            states,
            alphabet,
            initial,
            delta,
        })
    }

    /// Convenience constructor from names, used by fixtures and tests.
    pub fn from_named(
        states: &[&str],
        alphabet: &[&str],
        initial: &str,
        transitions: &[(&str, &str, i64, &str)],
    ) -> Result<Wfa, WfaError> {
        let json = WfaJson {
            states: states.iter().map(|s| s.to_string()).collect(),
            alphabet: alphabet.iter().map(|s| s.to_string()).collect(),
            initial: initial.to_string(),
            transitions: transitions
                .iter()
                .map(|(f, l, w, t)| TransitionJson {
                    from: f.to_string(),
                    letter: l.to_string(),
                    weight: Fin(*w),
                    to: t.to_string(),
                })
                .collect(),
        };
        Wfa::from_json_value(&json)
    }

    /// Parses the JSON exchange format and trims the result.
    pub fn from_json_value(json: &WfaJson) -> Result<Wfa, WfaError> {
        let sidx = index_names(&json.states)?;
        let aidx = index_names(&json.alphabet)?;
        let state = |n: &str| {
            sidx.get(n)
                .copied()
                .ok_or_else(|| WfaError::UnknownState(n.to_string()))
        };
        let mut ts = Vec::new();
        for t in &json.transitions {
            let letter = aidx
                .get(t.letter.as_str())
                .copied()
                .ok_or_else(|| WfaError::UnknownLetter(t.letter.clone()))?;
            let (from, to) = (state(&t.from)?, state(&t.to)?);
            if let Fin(w) = t.weight {
                ts.push(Transition {
                    from,
                    letter,
                    weight: w,
                    to,
                });
            }
        }
        let initial = state(&json.initial)?;
        Ok(Wfa::new(json.states.clone(), json.alphabet.clone(), initial, ts)?.trim())
    }

    pub fn from_json_str(s: &str) -> Result<Wfa, WfaError> {
        let json: WfaJson = serde_json::from_str(s).map_err(|e| WfaError::Json(e.to_string()))?;
        Wfa::from_json_value(&json)
    }

    pub fn to_json_value(&self) -> WfaJson {
        WfaJson {
            states: self.states.clone(),
            alphabet: self.alphabet.clone(),
            initial: self.states[self.initial].clone(),
            transitions: self
                .transitions()
                .map(|t| TransitionJson {
                    from: self.states[t.from].clone(),
                    letter: self.alphabet[t.letter].clone(),
                    weight: Fin(t.weight),
                    to: self.states[t.to].clone(),
                })
                .collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("automaton serialises")
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_letters(&self) -> usize {
        self.alphabet.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.states[q]
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn letter_name(&self, a: Sym) -> &str {
        &self.alphabet[a]
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn state_id(&self, name: &str) -> Result<StateId, WfaError> {
        self.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| WfaError::UnknownState(name.to_string()))
    }

    pub fn letter_id(&self, name: &str) -> Result<Sym, WfaError> {
        self.alphabet
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| WfaError::UnknownLetter(name.to_string()))
    }

    /// Outgoing transitions of `p` on `a` as `(target, weight)`, sorted by target.
    pub fn successors(&self, p: StateId, a: Sym) -> &[(StateId, i64)] {
        &self.delta[p][a]
    }

    pub fn weight(&self, p: StateId, a: Sym, q: StateId) -> Weight {
        self.delta[p][a]
            .iter()
            .find(|(t, _)| *t == q)
            .map_or(Inf, |(_, c)| Fin(*c))
    }

    /// All transitions in `(from, letter, to)` order.
    pub fn transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        self.delta.iter().enumerate().flat_map(|(p, row)| {
            row.iter().enumerate().flat_map(move |(a, ts)| {
                ts.iter().map(move |&(q, c)| Transition {
                    from: p,
                    letter: a,
                    weight: c,
                    to: q,
                })
            })
        })
    }

    fn check_word(&self, word: &[Sym]) -> Result<(), WfaError> {
        match word.iter().find(|&&a| a >= self.alphabet.len()) {
            Some(&a) => Err(WfaError::LetterOutOfRange(a)),
            None => Ok(()),
        }
    }

    /// Parses a word: comma-separated letter names, or concatenated
    /// single-character names when every letter is one character long.
    pub fn parse_word(&self, s: &str) -> Result<Vec<Sym>, WfaError> {
        let s = s.trim();
        if s.is_empty() || s == "ε" {
            return Ok(Vec::new());
        }
        if s.contains(',') || !self.alphabet.iter().all(|a| a.chars().count() == 1) {
            return s.split(',').map(|t| self.letter_id(t.trim())).collect();
        }
        s.chars().map(|c| self.letter_id(&c.to_string())).collect()
    }

    pub fn format_word(&self, word: &[Sym]) -> String {
        let single = self.alphabet.iter().all(|a| a.chars().count() == 1);
        let names: Vec<&str> = word.iter().map(|&a| self.alphabet[a].as_str()).collect();
        if single {
            names.concat()
        } else {
            names.join(",")
        }
    }

    /// Removes states unreachable from the initial state.
    pub fn trim(&self) -> Wfa {
        let n = self.states.len();
        let mut seen = vec![false; n];
        seen[self.initial] = true;
        let mut queue = VecDeque::from([self.initial]);
        while let Some(p) = queue.pop_front() {
            for ts in &self.delta[p] {
                for &(q, _) in ts {
                    if !seen[q] {
                        seen[q] = true;
                        queue.push_back(q);
                    }
                }
            }
        }
        if seen.iter().all(|&b| b) {
            return self.clone();
        }
        let mut remap = vec![usize::MAX; n];
        let mut states = Vec::new();
        for q in 0..n {
            if seen[q] {
                remap[q] = states.len();
                states.push(self.states[q].clone());
            }
        }
        let ts: Vec<Transition> = self
            .transitions()
            .filter(|t| seen[t.from])
            .map(|t| Transition {
                from: remap[t.from],
                to: remap[t.to],
                ..t
            })
            .collect();
        Wfa::new(states, self.alphabet.clone(), remap[self.initial], ts)
            .expect("trimming preserves well-formedness")
    }

    pub fn is_trim(&self) -> bool {
        self.trim().num_states() == self.num_states()
    }

    /// One tropical matrix-vector step.
    pub fn step(&self, c: &Configuration, a: Sym) -> Result<Configuration, WfaError> {
        if a >= self.alphabet.len() {
            return Err(WfaError::LetterOutOfRange(a));
        }
        let mut out = vec![Inf; self.states.len()];
        for (p, &wp) in c.weights.iter().enumerate() {
            if let Fin(v) = wp {
                for &(q, cost) in &self.delta[p][a] {
                    let cand = Fin(v).add_i64(cost)?;
                    if cand < out[q] {
                        out[q] = cand;
                    }
                }
            }
        }
        Ok(Configuration { weights: out })
    }

    pub fn xconf(&self, start: &Configuration, word: &[Sym]) -> Result<Configuration, WfaError> {
        self.check_config(start)?;
        let mut c = start.clone();
        for &a in word {
            c = self.step(&c, a)?;
        }
        Ok(c)
    }

    /// `xconf` along every prefix: element `i` is the configuration after `word[..i]`.
    pub fn xconf_trace(
        &self,
        start: &Configuration,
        word: &[Sym],
    ) -> Result<Vec<Configuration>, WfaError> {
        self.check_config(start)?;
        let mut out = Vec::with_capacity(word.len() + 1);
        out.push(start.clone());
        for &a in word {
            let next = self.step(out.last().expect("non-empty"), a)?;
            out.push(next);
        }
        Ok(out)
    }

    fn check_config(&self, c: &Configuration) -> Result<(), WfaError> {
        if c.weights.len() != self.states.len() {
            return Err(WfaError::InvalidRun(format!(
                "configuration has {} entries, automaton has {} states",
                c.weights.len(),
                self.states.len()
            )));
        }
        Ok(())
    }

    pub fn initial_config(&self) -> Configuration {
        Configuration::unit(self.states.len(), self.initial)
    }

    /// `A(w) = mwt(q0 →w→ Q)`.
    pub fn eval(&self, word: &[Sym]) -> Result<Weight, WfaError> {
        self.check_word(word)?;
        Ok(self.xconf(&self.initial_config(), word)?.min())
    }

    pub fn mwt(&self, from: &[StateId], word: &[Sym], to: &[StateId]) -> Result<Weight, WfaError> {
        self.check_word(word)?;
        let mut c = Configuration::infinite(self.states.len());
        for &p in from {
            if p >= self.states.len() {
                return Err(WfaError::StateOutOfRange(p));
            }
            c.weights[p] = Fin(0);
        }
        let end = self.xconf(&c, word)?;
        let mut best = Inf;
        for &q in to {
            if q >= self.states.len() {
                return Err(WfaError::StateOutOfRange(q));
            }
            best = best.min(end.weights[q]);
        }
        Ok(best)
    }

    pub fn all_states(&self) -> Vec<StateId> {
        (0..self.states.len()).collect()
    }

    /// Checks that `run` is a run of this automaton and returns its weight.
    pub fn validate_run(&self, run: &RunTrace) -> Result<i64, WfaError> {
        if run.start >= self.states.len() {
            return Err(WfaError::StateOutOfRange(run.start));
        }
        let mut cur = run.start;
        for (i, t) in run.transitions.iter().enumerate() {
            if t.from != cur {
                return Err(WfaError::InvalidRun(format!(
                    "transition {i} starts at {} but previous ended at {}",
                    t.from, cur
                )));
            }
            if t.letter >= self.alphabet.len() || self.weight(t.from, t.letter, t.to) != Fin(t.weight) {
                return Err(WfaError::InvalidRun(format!("transition {i} is not in the automaton")));
            }
            cur = t.to;
        }
        Ok(run.wt()?)
    }

    /// True iff every prefix of `run` is minimal to its endpoint from `start`.
    pub fn is_seamless(&self, start: &Configuration, run: &RunTrace) -> Result<bool, WfaError> {
        self.validate_run(run)?;
        self.check_config(start)?;
        let Fin(mut acc) = start.weights[run.start] else {
            return Err(WfaError::InvalidRun("run starts outside the support".into()));
        };
        let mut c = start.clone();
        for t in &run.transitions {
            c = self.step(&c, t.letter)?;
            acc = acc.checked_add(t.weight).ok_or(WeightError::Overflow("run"))?;
            if c.weights[t.to] != Fin(acc) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// A minimal run from `start` on `word` ending in `target` (or in the
    /// lowest-id minimal state). Every prefix is minimal, so the run is seamless.
    pub fn min_run(
        &self,
        start: &Configuration,
        word: &[Sym],
        target: Option<StateId>,
    ) -> Result<Option<RunTrace>, WfaError> {
        self.check_word(word)?;
        let trace = self.xconf_trace(start, word)?;
        let last = trace.last().expect("non-empty");
        let end = match target {
            Some(q) => q,
            None => match last.argmin() {
                Some(q) => q,
                None => return Ok(None),
            },
        };
        if end >= self.states.len() {
            return Err(WfaError::StateOutOfRange(end));
        }
        if !last.weights[end].is_finite() {
            return Ok(None);
        }
        let mut cur = end;
        let mut ts = Vec::with_capacity(word.len());
        for i in (0..word.len()).rev() {
            let a = word[i];
            let want = trace[i + 1].weights[cur];
            let prev = (0..self.states.len())
                .find_map(|p| {
                    let wp = trace[i].weights[p];
                    let c = self.weight(p, a, cur);
                    match (wp, c) {
                        (Fin(x), Fin(y)) if Fin(x).add_i64(y).ok() == Some(want) => Some((p, y)),
                        _ => None,
                    }
                })
                .expect("minimum is attained by some predecessor");
            ts.push(Transition {
                from: prev.0,
                letter: a,
                weight: prev.1,
                to: cur,
            });
            cur = prev.0;
        }
        ts.reverse();
        Ok(Some(RunTrace {
            start: cur,
            transitions: ts,
        }))
    }

    /// `wmax` of a single letter: the largest absolute finite weight on it.
    pub fn wmax_letter(&self, a: Sym) -> i64 {
        self.delta
            .iter()
            .flat_map(|row| row[a].iter().map(|&(_, c)| c.saturating_abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn wmax(&self, word: &[Sym]) -> Result<i64, WfaError> {
        self.check_word(word)?;
        Ok(word.iter().map(|&a| self.wmax_letter(a)).max().unwrap_or(0))
    }

    /// Maximal effect: the sum of the per-letter `wmax`.
    pub fn maxeff(&self, word: &[Sym]) -> Result<i64, WfaError> {
        self.check_word(word)?;
        Ok(crate::weight::checked_sum(word.iter().map(|&a| self.wmax_letter(a)))?)
    }

    /// The Boolean successor set `δ_B(T, a)`.
    pub fn reach(&self, set: u64, a: Sym) -> u64 {
        let mut out = 0u64;
        for p in bits(set) {
            for &(q, _) in &self.delta[p][a] {
                out |= 1 << q;
            }
        }
        out
    }
}

/// Iterates the set bits of a state mask in increasing order.
pub fn bits(mut set: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if set == 0 {
            None
        } else {
            let i = set.trailing_zeros() as usize;
            set &= set - 1;
            Some(i)
        }
    })
}

/// A run as a sequence of transitions; `start` is kept for empty runs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunTrace {
    pub start: StateId,
    pub transitions: Vec<Transition>,
}

impl RunTrace {
    pub fn empty(start: StateId) -> RunTrace {
        RunTrace {
            start,
            transitions: Vec::new(),
        }
    }

    pub fn end(&self) -> StateId {
        self.transitions.last().map_or(self.start, |t| t.to)
    }

    pub fn word(&self) -> Vec<Sym> {
        self.transitions.iter().map(|t| t.letter).collect()
    }

    pub fn wt(&self) -> Result<i64, WeightError> {
        crate::weight::checked_sum(self.transitions.iter().map(|t| t.weight))
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// The state after `i` transitions.
    pub fn state_at(&self, i: usize) -> StateId {
        if i == 0 {
            self.start
        } else {
            self.transitions[i - 1].to
        }
    }
}

/// A configuration `Q → ℤ ∪ {∞}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub weights: Vec<Weight>,
}

impl Configuration {
    pub fn infinite(n: usize) -> Configuration {
        Configuration {
            weights: vec![Inf; n],
        }
    }

    /// The configuration `c_q`: 0 at `q`, ∞ elsewhere.
    pub fn unit(n: usize, q: StateId) -> Configuration {
        let mut c = Configuration::infinite(n);
        c.weights[q] = Fin(0);
        c
    }

    pub fn get(&self, q: StateId) -> Weight {
        self.weights[q]
    }

    pub fn support(&self) -> Vec<StateId> {
        (0..self.weights.len())
            .filter(|&q| self.weights[q].is_finite())
            .collect()
    }

    pub fn support_mask(&self) -> u64 {
        self.support().into_iter().fold(0, |m, q| m | (1 << q))
    }

    pub fn min(&self) -> Weight {
        self.weights.iter().copied().fold(Inf, Weight::min)
    }

    /// Lowest-id state attaining the minimum, if the support is non-empty.
    pub fn argmin(&self) -> Option<StateId> {
        let m = self.min();
        if !m.is_finite() {
            return None;
        }
        self.weights.iter().position(|&w| w == m)
    }

    /// Componentwise order: `self ≤ other`.
    pub fn le(&self, other: &Configuration) -> bool {
        self.weights
            .iter()
            .zip(&other.weights)
            .all(|(a, b)| a <= b)
    }

    /// Subtracts the minimum; returns the normalised configuration and the shift.
    pub fn normalized(&self) -> (Configuration, Weight) {
        let m = self.min();
        let Fin(mv) = m else {
            return (self.clone(), Inf);
        };
        let weights = self
            .weights
            .iter()
            .map(|w| match w {
                Fin(v) => Fin(v - mv),
                Inf => Inf,
            })
            .collect();
        (Configuration { weights }, m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fig1_examples() {
        let a = fixtures::fig1();
        let w = |s: &str| a.parse_word(s).unwrap();
        assert_eq!(a.eval(&w("ab")).unwrap(), Fin(1));
        assert_eq!(a.eval(&w("")).unwrap(), Fin(0));
        assert_eq!(a.eval(&w("aabbb")).unwrap(), Fin(2));
        let (q0, qa, qb) = (0, a.state_id("qa").unwrap(), a.state_id("qb").unwrap());
        assert_eq!(a.mwt(&[q0], &w("aaa"), &[qa]).unwrap(), Fin(3));
        assert_eq!(a.mwt(&[q0], &w("aaa"), &[qb]).unwrap(), Fin(0));
        assert_eq!(a.mwt(&[qa], &w(""), &[qa]).unwrap(), Fin(0));
        let c = a.xconf(&a.initial_config(), &w("a")).unwrap();
        assert_eq!(c.weights, vec![Inf, Fin(1), Fin(0)]);
        let c = a.xconf(&a.initial_config(), &w("ab")).unwrap();
        assert_eq!(c.weights, vec![Inf, Fin(1), Fin(1)]);
        assert_eq!(a.maxeff(&w("ab")).unwrap(), 2);
        assert_eq!(a.maxeff(&w("")).unwrap(), 0);
        assert_eq!(a.wmax(&w("a")).unwrap(), 1);
    }

    #[test]
    fn seamless_examples() {
        let a = fixtures::fig1();
        let aa = a.parse_word("aa").unwrap();
        let qa = a.state_id("qa").unwrap();
        let qb = a.state_id("qb").unwrap();
        let c0 = a.initial_config();
        for q in [qa, qb] {
            let run = a.min_run(&c0, &aa, Some(q)).unwrap().unwrap();
            assert_eq!(run.end(), q);
            assert!(a.is_seamless(&c0, &run).unwrap());
        }
        let b = Wfa::from_named(
            &["p", "q"],
            &["a"],
            "p",
            &[("p", "a", 5, "q"), ("p", "a", 1, "p"), ("p", "a", 0, "q")],
        )
        .unwrap();
        let run = RunTrace {
            start: 0,
            transitions: vec![Transition {
                from: 0,
                letter: 0,
                weight: 0,
                to: 1,
            }],
        };
        assert!(b.is_seamless(&b.initial_config(), &run).unwrap());
        let c = Wfa::from_named(
            &["p", "q", "r"],
            &["a", "b"],
            "p",
            &[("p", "a", 0, "q"), ("p", "a", 3, "r"), ("q", "b", 0, "r"), ("r", "b", 0, "r")],
        )
        .unwrap();
        let run = RunTrace {
            start: 0,
            transitions: vec![
                Transition { from: 0, letter: 0, weight: 3, to: 2 },
                Transition { from: 2, letter: 1, weight: 0, to: 2 },
            ],
        };
        assert!(!c.is_seamless(&c.initial_config(), &run).unwrap());
    }

    #[test]
    fn duplicate_transitions_collapse_to_minimum() {
        let a = Wfa::from_named(&["p"], &["a"], "p", &[("p", "a", 4, "p"), ("p", "a", 2, "p")]).unwrap();
        assert_eq!(a.weight(0, 0, 0), Fin(2));
    }

    #[test]
    fn trim_removes_unreachable_and_is_idempotent() {
        let a = Wfa::from_named(
            &["p", "q", "dead"],
            &["a"],
            "p",
            &[("p", "a", 1, "q"), ("dead", "a", 0, "p")],
        )
        .unwrap();
        assert_eq!(a.num_states(), 2);
        assert_eq!(a.trim(), a);
        assert_eq!(fixtures::fig1().trim(), fixtures::fig1());
    }

    #[test]
    fn json_roundtrip_and_inf_weights() {
        let text = r#"{"states":["p","q"],"alphabet":["a"],"initial":"p",
            "transitions":[{"from":"p","letter":"a","weight":2,"to":"q"},
                           {"from":"q","letter":"a","weight":"inf","to":"p"},
                           {"from":"q","letter":"a","to":"q"}]}"#;
        let a = Wfa::from_json_str(text).unwrap();
        assert_eq!(a.transitions().count(), 1);
        let b = Wfa::from_json_str(&a.to_json_string()).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            Wfa::from_json_str(r#"{"states":["p"],"alphabet":["a"],"initial":"x","transitions":[]}"#),
            Err(WfaError::UnknownState(_))
        ));
    }

    #[test]
    fn word_parsing() {
        let a = fixtures::fig1();
        assert_eq!(a.parse_word("ab").unwrap(), vec![0, 1]);
        assert_eq!(a.parse_word("a,b").unwrap(), vec![0, 1]);
        assert!(a.parse_word("c").is_err());
        assert_eq!(a.format_word(&[1, 0]), "ba");
    }
}
