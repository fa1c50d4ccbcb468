//! Bounded search for gap witnesses.

use std::collections::{HashSet, VecDeque};

use serde::Serialize;

use crate::weight::{Fin, Inf};
use crate::wfa::{Configuration, StateId, Sym, Wfa, WfaError};

/// Words `x`, `y` and a state `q` such that the run through `q` after `x` is
/// minimal on `xy` although it is `gap` above the minimum after `x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GapWitness {
    pub x: Vec<Sym>,
    pub y: Vec<Sym>,
    pub q: StateId,
    pub gap: i64,
}

/// Re-checks both witness clauses directly with `mwt`, returning the gap.
pub fn verify_gap_witness(wfa: &Wfa, w: &GapWitness, min_gap: i64) -> Result<bool, WfaError> {
    let q0 = [wfa.initial()];
    let all = wfa.all_states();
    let xy: Vec<Sym> = w.x.iter().chain(&w.y).copied().collect();
    let total = wfa.mwt(&q0, &xy, &all)?;
    let to_q = wfa.mwt(&q0, &w.x, &[w.q])?;
    let from_q = wfa.mwt(&[w.q], &w.y, &all)?;
    let through = to_q.add(from_q)?;
    let x_min = wfa.mwt(&q0, &w.x, &all)?;
    let (Fin(tq), Fin(xm)) = (to_q, x_min) else {
        return Ok(false);
    };
    Ok(total.is_finite() && total == through && tq - xm > min_gap && tq - xm == w.gap)
}

/// Breadth-first search over min-normalised configurations for a witness
/// with gap `> min_gap` and `|x| + |y| ≤ max_len`. For each `x`, suffixes that
/// make the `q`-run the unique minimum are preferred; ties are accepted
/// when no such suffix exists within the bound.
pub fn find_gap_witness(
    wfa: &Wfa,
    min_gap: i64,
    max_len: usize,
) -> Result<Option<GapWitness>, WfaError> {
    let mut seen: HashSet<Configuration> = HashSet::new();
    let mut queue: VecDeque<(Vec<Sym>, Configuration)> = VecDeque::new();
    let start = wfa.initial_config();
    seen.insert(start.clone());
    queue.push_back((Vec::new(), start));
    while let Some((x, c)) = queue.pop_front() {
        let budget = max_len - x.len();
        let Fin(m) = c.min() else { continue };
        for q in c.support() {
            let Fin(v) = c.get(q) else { continue };
            if v - m <= min_gap {
                continue;
            }
            for strict in [true, false] {
                if let Some(y) = find_suffix(wfa, &c, q, budget, strict)? {
                    return Ok(Some(GapWitness {
                        x,
                        y,
                        q,
                        gap: v - m,
                    }));
                }
            }
        }
        if x.len() < max_len {
            for a in 0..wfa.num_letters() {
                let (next, shift) = wfa.step(&c, a)?.normalized();
                if shift == Inf || !seen.insert(next.clone()) {
                    continue;
                }
                let mut nx = x.clone();
                nx.push(a);
                queue.push_back((nx, next));
            }
        }
    }
    Ok(None)
}

/// Shortest `y` with `|y| ≤ budget` on which the run continuing from `q`
/// attains the overall minimum (strictly below all other runs if `strict`).
fn find_suffix(
    wfa: &Wfa,
    c: &Configuration,
    q: StateId,
    budget: usize,
    strict: bool,
) -> Result<Option<Vec<Sym>>, WfaError> {
    let n = wfa.num_states();
    let mut via = Configuration::infinite(n);
    via.weights[q] = c.get(q);
    let mut rest = c.clone();
    rest.weights[q] = Inf;
    let good = |rest: &Configuration, via: &Configuration| {
        let (vm, rm) = (via.min(), rest.min());
        vm.is_finite() && if strict { vm < rm } else { vm <= rm }
    };
    let mut seen: HashSet<(Configuration, Configuration)> = HashSet::new();
    let mut queue = VecDeque::from([(Vec::new(), rest, via)]);
    while let Some((y, rest, via)) = queue.pop_front() {
        if good(&rest, &via) {
            return Ok(Some(y));
        }
        if y.len() >= budget {
            continue;
        }
        for a in 0..wfa.num_letters() {
            let nr = wfa.step(&rest, a)?;
            let nv = wfa.step(&via, a)?;
            let Fin(shift) = nv.min().min(nr.min()) else { continue };
            if !nv.min().is_finite() {
                continue;
            }
            let key = (normalize_by(&nr, shift), normalize_by(&nv, shift));
            if !seen.insert(key) {
                continue;
            }
            let mut ny = y.clone();
            ny.push(a);
            queue.push_back((ny, nr, nv));
        }
    }
    Ok(None)
}

fn normalize_by(c: &Configuration, shift: i64) -> Configuration {
    Configuration {
        weights: c
            .weights
            .iter()
            .map(|w| match w {
                Fin(v) => Fin(v - shift),
                Inf => Inf,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fig1_gap_two() {
        let a = fixtures::fig1();
        let w = find_gap_witness(&a, 2, 10).unwrap().unwrap();
        assert_eq!(a.format_word(&w.x), "aaa");
        assert_eq!(a.format_word(&w.y), "bbbb");
        assert_eq!(a.state_name(w.q), "qa");
        assert_eq!(w.gap, 3);
        assert!(verify_gap_witness(&a, &w, 2).unwrap());
    }

    #[test]
    fn fig1_small_gap() {
        let a = fixtures::fig1();
        let w = find_gap_witness(&a, 0, 4).unwrap().unwrap();
        assert!(w.gap >= 1);
        assert!(verify_gap_witness(&a, &w, 0).unwrap());
    }

    #[test]
    fn det1_has_no_witness() {
        let a = fixtures::det1();
        for g in 1..4 {
            assert_eq!(find_gap_witness(&a, g, 8).unwrap(), None);
        }
    }

    #[test]
    fn fig1_unbounded_family() {
        let a = fixtures::fig1();
        for n in 0..=8i64 {
            let w = find_gap_witness(&a, n, 2 * n as usize + 4).unwrap().unwrap();
            assert!(verify_gap_witness(&a, &w, n).unwrap());
        }
    }
}
