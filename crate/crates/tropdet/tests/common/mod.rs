//! Brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use tropdet::wfa::{RunTrace, Sym, Transition, Wfa};

/// Why the transcription has no number to offer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fail {
    /// The value exists but is wider than the bit budget.
    TooBig,
    Undefined,
    OutOfRange,
}

pub type Val = Result<BigUint, Fail>;

/// A direct transcription of the simple and general length-bound
/// recurrences. No memoisation; every call recomputes its dependencies.
pub struct BoundsOracle {
    pub n: u64,
    pub w: u64,
    /// `None` for the simple family, `Some(H)` for the general one.
    pub h: Option<BigUint>,
    pub budget: u64,
}

fn num(v: u64) -> Val {
    Ok(BigUint::from(v))
}

impl BoundsOracle {
    pub fn simp(n: u64, w: u64, budget: u64) -> BoundsOracle {
        BoundsOracle { n, w, h: None, budget }
    }

    /// The general family with `H = Amp(n, 0)` of the simple family.
    pub fn gen(n: u64, w: u64, budget: u64) -> Result<BoundsOracle, Fail> {
        let h = BoundsOracle::simp(n, w, budget).eval("Amp", n, 0)?;
        Ok(BoundsOracle { n, w, h: Some(h), budget })
    }

    fn fits(&self, v: BigUint) -> Val {
        if v.bits() > self.budget {
            Err(Fail::TooBig)
        } else {
            Ok(v)
        }
    }

    fn add(&self, a: Val, b: Val) -> Val {
        match (a, b) {
            (Err(e @ (Fail::Undefined | Fail::OutOfRange)), _) | (_, Err(e @ (Fail::Undefined | Fail::OutOfRange))) => Err(e),
            (Err(Fail::TooBig), _) | (_, Err(Fail::TooBig)) => Err(Fail::TooBig),
            (Ok(x), Ok(y)) => self.fits(x + y),
        }
    }

    fn mul(&self, a: Val, b: Val) -> Val {
        match (a, b) {
            (Err(e @ (Fail::Undefined | Fail::OutOfRange)), _) | (_, Err(e @ (Fail::Undefined | Fail::OutOfRange))) => Err(e),
            (Ok(x), _) | (_, Ok(x)) if x.is_zero() => Ok(BigUint::zero()),
            (Err(Fail::TooBig), _) | (_, Err(Fail::TooBig)) => Err(Fail::TooBig),
            (Ok(x), Ok(y)) => self.fits(x * y),
        }
    }

    fn pow(&self, a: Val, e: Val) -> Val {
        let (x, e) = match (a, e) {
            (Err(f @ (Fail::Undefined | Fail::OutOfRange)), _) | (_, Err(f @ (Fail::Undefined | Fail::OutOfRange))) => return Err(f),
            (_, Ok(e)) if e.is_zero() => return Ok(BigUint::one()),
            (Ok(x), _) if x.is_zero() || x.is_one() => return Ok(x),
            (Err(Fail::TooBig), _) | (_, Err(Fail::TooBig)) => return Err(Fail::TooBig),
            (Ok(x), Ok(e)) => (x, e),
        };
        let Some(e) = e.to_u32() else {
            return Err(Fail::TooBig);
        };
        let approx = e as f64 * x.to_f64().map_or(x.bits() as f64, f64::log2);
        if approx > self.budget as f64 + 64.0 {
            return Err(Fail::TooBig);
        }
        self.fits(x.pow(e))
    }

    fn ramsey(&self, k: Val, r: u64) -> Val {
        let e = self.mul(k.clone(), num(r));
        self.pow(k, e)
    }

    fn m(&self) -> Val {
        let fact: BigUint = (1..=self.n).map(BigUint::from).product();
        Ok(fact * self.n)
    }

    fn c(&self, k: u64) -> Val {
        self.mul(num(k), self.mul(self.m(), self.m()))
    }

    pub fn eval(&self, name: &str, d: u64, i: u64) -> Val {
        let n = self.n;
        if d > n || i > n + 1 {
            return Err(Fail::OutOfRange);
        }
        match name {
            "Len" => self.len(d, i),
            "Cov" => self.cov(d, i),
            "MaxWt" => self.max_wt(d),
            "Amp" => self.amp(d, i),
            "Typ" => self.typ(d, i),
            _ => panic!("unknown name {name}"),
        }
    }

    fn len(&self, d: u64, i: u64) -> Val {
        if i > self.n + 1 {
            return Err(Fail::OutOfRange);
        }
        if d == 0 {
            return num(1);
        }
        if i == self.n + 1 {
            return num(0);
        }
        let base = self.add(self.ramsey(self.typ(d, i), 3), num(2));
        let e = self.add(self.mul(num(2), self.amp(d, i)), num(1));
        let tail = self.mul(self.len(d - 1, 1), self.len(d, i + 1));
        self.mul(self.mul(self.c(32), tail), self.pow(base, e))
    }

    fn cov(&self, d: u64, i: u64) -> Val {
        if i == self.n {
            return num(1);
        }
        if d == 0 || i > self.n {
            return Err(Fail::Undefined);
        }
        let prod = self.mul(self.mul(self.max_wt(d - 1), self.len(d - 1, 1)), self.len(d, i + 1));
        let mut sum = self.add(prod, self.cov(d, i + 1));
        if let Some(h) = &self.h {
            sum = self.add(sum, Ok(h.clone()));
        }
        self.mul(self.c(8), sum)
    }

    fn max_wt(&self, d: u64) -> Val {
        if d == 0 {
            return num(self.w);
        }
        let len = if self.h.is_some() { self.len(d, 0) } else { self.len(d, 1) };
        self.mul(self.mul(self.mul(num(2), self.m()), self.max_wt(d - 1)), len)
    }

    fn amp(&self, d: u64, i: u64) -> Val {
        if d == 0 {
            return Err(Fail::Undefined);
        }
        let mut weight = self.mul(num(2), self.max_wt(d - 1));
        if let Some(h) = &self.h {
            weight = self.add(Ok(h.clone()), weight);
        }
        let typ = self.typ(d, i);
        let spread = self.add(self.add(self.ramsey(typ, 3), self.len(d, i + 1)), self.len(d - 1, 1));
        self.mul(self.mul(self.c(32), weight), spread)
    }

    fn typ(&self, d: u64, i: u64) -> Val {
        if d == 0 {
            return Err(Fail::Undefined);
        }
        if i == 0 {
            return num(1);
        }
        let three = self.pow(num(3), num(i));
        let base = self.add(self.mul(num(2), self.cov(d, i)), num(2));
        self.mul(three, self.pow(base, num(2 * self.n * i)))
    }
}

/// Every word over `letters` letters of length at most `max_len`.
pub fn all_words(letters: usize, max_len: usize) -> Vec<Vec<Sym>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for a in 0..letters {
                let mut v: Vec<Sym> = w.clone();
                v.push(a);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Every run of `wfa` on `word` from the initial state.
pub fn all_runs(wfa: &Wfa, word: &[Sym]) -> Vec<RunTrace> {
    let mut runs = vec![RunTrace::empty(wfa.initial())];
    for &a in word {
        let mut next = Vec::new();
        for r in &runs {
            let q = r.end();
            for &(to, weight) in wfa.successors(q, a) {
                let mut r2 = r.clone();
                r2.transitions.push(Transition { from: q, letter: a, weight, to });
                next.push(r2);
            }
        }
        runs = next;
    }
    runs
}
