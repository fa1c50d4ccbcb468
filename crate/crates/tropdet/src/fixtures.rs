//! Small automata used by tests, the CLI and the demo.

use rand::Rng;

use crate::wfa::{Transition, Wfa};

/// The running example: `A(w) = min(#a, #b)`.
pub fn fig1() -> Wfa {
    Wfa::from_named(
        &["q0", "qa", "qb"],
        &["a", "b"],
        "q0",
        &[
            ("q0", "a", 1, "qa"),
            ("q0", "b", 0, "qa"),
            ("q0", "a", 0, "qb"),
            ("q0", "b", 1, "qb"),
            ("qa", "a", 1, "qa"),
            ("qa", "b", 0, "qa"),
            ("qb", "a", 0, "qb"),
            ("qb", "b", 1, "qb"),
        ],
    )
    .expect("fixture is well formed")
}

/// One state with a self-loop `a/1`.
pub fn det1() -> Wfa {
    Wfa::from_named(&["q"], &["a"], "q", &[("q", "a", 1, "q")]).expect("fixture is well formed")
}

/// Two parallel runs whose weights never drift more than 1 apart.
pub fn bounded_gap() -> Wfa {
    Wfa::from_named(
        &["s", "p", "r"],
        &["a", "b"],
        "s",
        &[
            ("s", "a", 0, "p"),
            ("s", "a", 1, "r"),
            ("s", "b", 1, "p"),
            ("s", "b", 0, "r"),
            ("p", "a", 1, "p"),
            ("p", "b", 2, "p"),
            ("r", "a", 1, "r"),
            ("r", "b", 2, "r"),
            ("p", "b", 3, "r"),
            ("r", "a", 2, "p"),
        ],
    )
    .expect("fixture is well formed")
}

/// A random trim automaton with `n` states over `letters` letters; each
/// possible transition is present with probability `density`.
pub fn random_wfa<R: Rng>(
    rng: &mut R,
    n: usize,
    letters: usize,
    weights: (i64, i64),
    density: f64,
) -> Wfa {
    let states: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
    let alphabet: Vec<String> = (0..letters)
        .map(|i| ((b'a' + i as u8) as char).to_string())
        .collect();
    let mut ts = Vec::new();
    for from in 0..n {
        for letter in 0..letters {
            for to in 0..n {
                if rng.gen_bool(density) {
                    ts.push(Transition {
                        from,
                        letter,
                        weight: rng.gen_range(weights.0..=weights.1),
                        to,
                    });
                }
            }
        }
    }
    Wfa::new(states, alphabet, 0, ts)
        .expect("generated automaton is well formed")
        .trim()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::Fin;

    fn all_words(letters: usize, max_len: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        let mut layer = vec![vec![]];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &layer {
                for a in 0..letters {
                    let mut v: Vec<usize> = w.clone();
                    v.push(a);
                    next.push(v);
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }

    #[test]
    fn fig1_computes_min_of_letter_counts() {
        let a = fig1();
        for w in all_words(2, 6) {
            let na = w.iter().filter(|&&x| x == 0).count() as i64;
            let nb = w.len() as i64 - na;
            assert_eq!(a.eval(&w).unwrap(), Fin(na.min(nb)), "word {w:?}");
        }
    }

    #[test]
    fn det1_counts_letters() {
        let a = det1();
        for k in 0..5 {
            assert_eq!(a.eval(&vec![0; k]).unwrap(), Fin(k as i64));
        }
    }
}
