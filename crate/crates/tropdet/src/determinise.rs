//! The gap-bounded deterministic automaton `A|_B` and an exact equivalence
//! check against the original automaton.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::weight::{Fin, Inf, Weight, WeightError};
use crate::wfa::{StateId, Sym, Transition, Wfa, WfaError, WfaJson};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetError {
    #[error("gap bound must be non-negative, got {0}")]
    NegativeBound(i64),
    #[error("state budget of {0} configurations exceeded")]
    StateBudgetExceeded(usize),
    #[error("determinised automaton was not built from this automaton")]
    Mismatch,
    #[error("counterexample {0:?} failed re-verification")]
    Unverified(Vec<Sym>),
    #[error(transparent)]
    Wfa(#[from] WfaError),
    #[error(transparent)]
    Weight(#[from] WeightError),
}

/// A bounded configuration: sorted `(state, offset)` pairs with minimum offset 0.
pub type BoundedConfig = Vec<(StateId, i64)>;

/// The deterministic automaton `A|_B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetWfa {
    bound: i64,
    source_states: Vec<String>,
    alphabet: Vec<String>,
    configs: Vec<BoundedConfig>,
    /// `trans[d][a]` is the successor configuration and the output weight.
    trans: Vec<Vec<Option<(usize, i64)>>>,
}

pub const DEFAULT_STATE_BUDGET: usize = 200_000;

/// Builds `A|_B` by exploring configurations reachable from `{q0: 0}`.
pub fn build_restriction(wfa: &Wfa, bound: i64, budget: usize) -> Result<DetWfa, DetError> {
    if bound < 0 {
        return Err(DetError::NegativeBound(bound));
    }
    let init: BoundedConfig = vec![(wfa.initial(), 0)];
    let mut index: HashMap<BoundedConfig, usize> = HashMap::from([(init.clone(), 0)]);
    let mut configs = vec![init];
    let mut trans = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(d) = queue.pop_front() {
        let mut row = vec![None; wfa.num_letters()];
        for (a, slot) in row.iter_mut().enumerate() {
            let Some((next, out)) = successor(wfa, &configs[d], a, bound)? else {
                continue;
            };
            let id = match index.get(&next) {
                Some(&id) => id,
                None => {
                    if configs.len() >= budget {
                        return Err(DetError::StateBudgetExceeded(budget));
                    }
                    let id = configs.len();
                    index.insert(next.clone(), id);
                    configs.push(next);
                    queue.push_back(id);
                    id
                }
            };
            *slot = Some((id, out));
        }
        if trans.len() <= d {
            trans.resize(d + 1, Vec::new());
        }
        trans[d] = row;
    }
    Ok(DetWfa {
        bound,
        source_states: wfa.state_names().to_vec(),
        alphabet: wfa.alphabet().to_vec(),
        configs,
        trans,
    })
}

fn successor(
    wfa: &Wfa,
    config: &BoundedConfig,
    a: Sym,
    bound: i64,
) -> Result<Option<(BoundedConfig, i64)>, DetError> {
    let mut next = vec![Inf; wfa.num_states()];
    for &(p, off) in config {
        for &(q, c) in wfa.successors(p, a) {
            let v = Fin(off).add_i64(c)?;
            if v < next[q] {
                next[q] = v;
            }
        }
    }
    let Fin(m) = next.iter().copied().fold(Inf, Weight::min) else {
        return Ok(None);
    };
    let out = next
        .iter()
        .enumerate()
        .filter_map(|(q, w)| w.finite().map(|v| (q, v - m)))
        .filter(|&(_, off)| off <= bound)
        .collect();
    Ok(Some((out, m)))
}

impl DetWfa {
    pub fn bound(&self) -> i64 {
        self.bound
    }

    pub fn num_states(&self) -> usize {
        self.configs.len()
    }

    pub fn config(&self, d: usize) -> &BoundedConfig {
        &self.configs[d]
    }

    pub fn next(&self, d: usize, a: Sym) -> Option<(usize, i64)> {
        self.trans[d][a]
    }

    pub fn eval(&self, word: &[Sym]) -> Result<Weight, DetError> {
        let mut d = 0;
        let mut acc = Fin(0);
        for &a in word {
            if a >= self.alphabet.len() {
                return Err(WfaError::LetterOutOfRange(a).into());
            }
            match self.trans[d][a] {
                Some((n, out)) => {
                    acc = acc.add_i64(out)?;
                    d = n;
                }
                None => return Ok(Inf),
            }
        }
        Ok(acc)
    }

    /// Canonical name of a configuration, e.g. `{q0:0,qa:1}`.
    pub fn config_name(&self, d: usize) -> String {
        let parts: Vec<String> = self.configs[d]
            .iter()
            .map(|&(q, off)| format!("{}:{}", self.source_states[q], off))
            .collect();
        format!("{{{}}}", parts.join(","))
    }

    /// Exports to the core JSON format; the result is a deterministic `Wfa`.
    pub fn to_wfa(&self) -> Wfa {
        let states: Vec<String> = (0..self.configs.len()).map(|d| self.config_name(d)).collect();
        let ts = self.trans.iter().enumerate().flat_map(|(d, row)| {
            row.iter().enumerate().filter_map(move |(a, t)| {
                t.map(|(n, out)| Transition {
                    from: d,
                    letter: a,
                    weight: out,
                    to: n,
                })
            })
        });
        Wfa::new(states, self.alphabet.clone(), 0, ts).expect("exported automaton is well formed")
    }

    pub fn to_json_value(&self) -> WfaJson {
        self.to_wfa().to_json_value()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub word: Vec<Sym>,
    pub a_value: Weight,
    pub det_value: Weight,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceVerdict {
    pub equivalent: bool,
    pub counterexample: Option<Counterexample>,
}

const POS: i128 = i128::MAX / 4;
const NEG: i128 = i128::MIN / 4;

fn plus(a: i128, w: i128) -> i128 {
    if a == NEG || w == NEG {
        NEG
    } else if a == POS || w == POS {
        POS
    } else {
        a + w
    }
}

/// Product of `A` with `A|_B`. Node `q * (D + 1) + d`; `d = D` is the sink
/// reached when the deterministic automaton has forgotten every run.
struct Product<'a> {
    wfa: &'a Wfa,
    det: &'a DetWfa,
}

impl Product<'_> {
    fn width(&self) -> usize {
        self.det.num_states() + 1
    }

    fn sink(&self) -> usize {
        self.det.num_states()
    }

    fn node(&self, q: StateId, d: usize) -> usize {
        q * self.width() + d
    }

    fn is_sink(&self, n: usize) -> bool {
        n % self.width() == self.sink()
    }

    /// Edges from `n` on letter `a`; entering the sink has weight `NEG`.
    fn edges(&self, n: usize, a: Sym, out: &mut Vec<(usize, i128)>) {
        out.clear();
        let (q, d) = (n / self.width(), n % self.width());
        if d == self.sink() {
            return;
        }
        let next = self.det.next(d, a);
        for &(q2, c) in self.wfa.successors(q, a) {
            match next {
                Some((d2, o)) => out.push((self.node(q2, d2), c as i128 - o as i128)),
                None => out.push((self.node(q2, self.sink()), NEG)),
            }
        }
    }

    fn start(&self) -> usize {
        self.node(self.wfa.initial(), 0)
    }

    fn bad(&self, n: usize, v: i128) -> bool {
        v < 0 || (v != POS && self.is_sink(n))
    }
}

/// Decides `A ≡ A|_B`. Since `A|_B ≥ A` pointwise, the automata differ iff
/// some run of `A` ends strictly below the deterministic value, i.e. iff a
/// node with negative value is reachable in the product.
pub fn check_equiv(wfa: &Wfa, det: &DetWfa) -> Result<EquivalenceVerdict, DetError> {
    if det.source_states != wfa.state_names() || det.alphabet != wfa.alphabet() {
        return Err(DetError::Mismatch);
    }
    let prod = Product { wfa, det };
    let size = wfa.num_states() * prod.width();
    let mut dist = vec![POS; size];
    let mut queued = vec![false; size];
    dist[prod.start()] = 0;
    let mut queue = VecDeque::from([prod.start()]);
    let mut found = false;
    let mut edges = Vec::new();
    'search: while let Some(n) = queue.pop_front() {
        queued[n] = false;
        for a in 0..wfa.num_letters() {
            prod.edges(n, a, &mut edges);
            for &(m, w) in &edges {
                let v = plus(dist[n], w);
                if v < dist[m] {
                    dist[m] = v;
                    if prod.bad(m, v) {
                        found = true;
                        break 'search;
                    }
                    if !queued[m] {
                        queued[m] = true;
                        queue.push_back(m);
                    }
                }
            }
        }
    }
    if !found {
        return Ok(EquivalenceVerdict {
            equivalent: true,
            counterexample: None,
        });
    }
    let word = shortest_counterexample(&prod, size);
    let a_value = wfa.eval(&word)?;
    let det_value = det.eval(&word)?;
    if a_value >= det_value {
        return Err(DetError::Unverified(word));
    }
    Ok(EquivalenceVerdict {
        equivalent: false,
        counterexample: Some(Counterexample {
            word,
            a_value,
            det_value,
        }),
    })
}

/// The shortest, then lexicographically least, word reaching a bad node.
/// Called only after a bad node is known to be reachable.
fn shortest_counterexample(prod: &Product<'_>, size: usize) -> Vec<Sym> {
    let letters = prod.wfa.num_letters();
    let mut edges = Vec::new();
    // forward layers until some bad node appears
    let mut layer = vec![POS; size];
    layer[prod.start()] = 0;
    let mut len = 0;
    while !(0..size).any(|n| prod.bad(n, layer[n])) {
        let mut next = vec![POS; size];
        for n in 0..size {
            if layer[n] == POS {
                continue;
            }
            for a in 0..letters {
                prod.edges(n, a, &mut edges);
                for &(m, w) in &edges {
                    next[m] = next[m].min(plus(layer[n], w));
                }
            }
        }
        layer = next;
        len += 1;
    }
    // backward: h[k][n] is the least value of a length-k path from n
    let mut h = vec![vec![0i128; size]];
    for n in 0..size {
        if prod.is_sink(n) {
            h[0][n] = NEG;
        }
    }
    for k in 1..=len {
        let mut row = vec![POS; size];
        for (n, slot) in row.iter_mut().enumerate() {
            if prod.is_sink(n) {
                *slot = NEG;
                continue;
            }
            for a in 0..letters {
                prod.edges(n, a, &mut edges);
                for &(m, w) in &edges {
                    *slot = (*slot).min(plus(w, h[k - 1][m]));
                }
            }
        }
        h.push(row);
    }
    let mut frontier = vec![POS; size];
    frontier[prod.start()] = 0;
    let mut word = Vec::with_capacity(len);
    for j in 0..len {
        let rest = len - j - 1;
        let mut chosen = None;
        for a in 0..letters {
            let mut next = vec![POS; size];
            for n in 0..size {
                if frontier[n] == POS {
                    continue;
                }
                prod.edges(n, a, &mut edges);
                for &(m, w) in &edges {
                    next[m] = next[m].min(plus(frontier[n], w));
                }
            }
            if (0..size).any(|n| next[n] != POS && plus(next[n], h[rest][n]) < 0) {
                chosen = Some((a, next));
                break;
            }
        }
        let (a, next) = chosen.expect("a bad node is reachable in exactly `len` steps");
        word.push(a);
        frontier = next;
    }
    word
}

#[derive(Debug, Clone, Serialize)]
pub struct DecideReport {
    pub gap: i64,
    pub determinisable: bool,
    pub det_states: usize,
    pub counterexample: Option<Counterexample>,
    pub automaton: Option<WfaJson>,
}

/// Builds `A|_B` and checks it against `A`; on equivalence the deterministic
/// automaton is returned as the constructive answer.
pub fn decide_at_gap(wfa: &Wfa, bound: i64, budget: usize) -> Result<DecideReport, DetError> {
    let det = build_restriction(wfa, bound, budget)?;
    let verdict = check_equiv(wfa, &det)?;
    Ok(DecideReport {
        gap: bound,
        determinisable: verdict.equivalent,
        det_states: det.num_states(),
        counterexample: verdict.counterexample,
        automaton: verdict.equivalent.then(|| det.to_json_value()),
    })
}
