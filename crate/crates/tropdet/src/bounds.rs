//! The simple and general length-bound families, the Ramsey bound, the
//! upper-bound functions of the complexity analysis, and saturating
//! arithmetic for threshold plumbing.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::tropical::stabilisation_constant;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error("parameters out of range: {0}")]
    OutOfRange(String),
    #[error("{0} is not defined by the recurrences")]
    Undefined(String),
    #[error("exact value exceeds the bit budget of {0} bits")]
    BitBudget(u64),
    #[error("{name} takes {expected} arguments, got {got}")]
    Arity {
        name: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("unknown function name {0}")]
    UnknownName(String),
}

/// An exact value, or the cap once a computation has exceeded it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BoundsValue {
    Exact(BigUint),
    Saturated(BigUint),
}

impl BoundsValue {
    pub fn small(v: u64) -> BoundsValue {
        BoundsValue::Exact(BigUint::from(v))
    }

    pub fn exact(&self) -> Option<&BigUint> {
        match self {
            BoundsValue::Exact(v) => Some(v),
            BoundsValue::Saturated(_) => None,
        }
    }

    pub fn is_saturated(&self) -> bool {
        matches!(self, BoundsValue::Saturated(_))
    }

    fn is_zero(&self) -> bool {
        matches!(self, BoundsValue::Exact(v) if v.is_zero())
    }

    fn is_one(&self) -> bool {
        matches!(self, BoundsValue::Exact(v) if v.is_one())
    }

    /// Decimal digits of an exact value.
    pub fn digits(&self) -> Option<usize> {
        self.exact().map(|v| v.to_str_radix(10).len())
    }

    /// Decimal value, or `SAT(cap)`.
    pub fn render(&self) -> String {
        self.to_string()
    }

    /// Clamp to `u64`, saturating.
    pub fn to_u64_saturating(&self) -> u64 {
        match self {
            BoundsValue::Exact(v) => v.to_u64().unwrap_or(u64::MAX),
            BoundsValue::Saturated(_) => u64::MAX,
        }
    }
}

impl fmt::Display for BoundsValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundsValue::Exact(v) => write!(f, "{v}"),
            BoundsValue::Saturated(cap) => write!(f, "SAT({cap})"),
        }
    }
}

impl Serialize for BoundsValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub const DEFAULT_BIT_BUDGET: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Arbitrary precision; results wider than the budget are errors.
    Exact { bit_budget: u64 },
    /// All arithmetic saturates at `cap`.
    Saturated { cap: BigUint },
}

impl Default for Mode {
    fn default() -> Self {
        Mode::Exact {
            bit_budget: DEFAULT_BIT_BUDGET,
        }
    }
}

impl Mode {
    pub fn saturated(cap: impl Into<BigUint>) -> Mode {
        Mode::Saturated { cap: cap.into() }
    }

    fn lift(&self, v: BigUint) -> Result<BoundsValue, BoundsError> {
        match self {
            Mode::Exact { bit_budget } => {
                if v.bits() > *bit_budget {
                    Err(BoundsError::BitBudget(*bit_budget))
                } else {
                    Ok(BoundsValue::Exact(v))
                }
            }
            Mode::Saturated { cap } => Ok(if &v > cap {
                BoundsValue::Saturated(cap.clone())
            } else {
                BoundsValue::Exact(v)
            }),
        }
    }

    fn sat(&self) -> Result<BoundsValue, BoundsError> {
        match self {
            Mode::Saturated { cap } => Ok(BoundsValue::Saturated(cap.clone())),
            Mode::Exact { bit_budget } => Err(BoundsError::BitBudget(*bit_budget)),
        }
    }

    fn limit_bits(&self) -> u64 {
        match self {
            Mode::Exact { bit_budget } => *bit_budget,
            Mode::Saturated { cap } => cap.bits(),
        }
    }

    pub fn add(&self, a: &BoundsValue, b: &BoundsValue) -> Result<BoundsValue, BoundsError> {
        match (a, b) {
            (BoundsValue::Exact(x), BoundsValue::Exact(y)) => self.lift(x + y),
            _ => self.sat(),
        }
    }

    /// Zero annihilates even a saturated operand, so that saturated and
    /// exact evaluation agree whenever the exact value is below the cap.
    pub fn mul(&self, a: &BoundsValue, b: &BoundsValue) -> Result<BoundsValue, BoundsError> {
        if a.is_zero() || b.is_zero() {
            return Ok(BoundsValue::small(0));
        }
        match (a, b) {
            (BoundsValue::Exact(x), BoundsValue::Exact(y)) => {
                if x.bits() + y.bits() > self.limit_bits() + 1 {
                    return self.sat();
                }
                self.lift(x * y)
            }
            _ => self.sat(),
        }
    }

    pub fn pow(&self, a: &BoundsValue, e: &BoundsValue) -> Result<BoundsValue, BoundsError> {
        if e.is_zero() {
            return Ok(BoundsValue::small(1));
        }
        if a.is_zero() || a.is_one() {
            return Ok(a.clone());
        }
        let (BoundsValue::Exact(x), BoundsValue::Exact(ev)) = (a, e) else {
            return self.sat();
        };
        let Some(ev) = ev.to_u64() else {
            return self.sat();
        };
        // x ≥ 2, so the result has more than (bits(x) − 1)·e bits
        if (x.bits() - 1).saturating_mul(ev) > self.limit_bits() {
            return self.sat();
        }
        let mut acc = BigUint::one();
        let mut base = x.clone();
        let mut k = ev;
        while k > 0 {
            if k & 1 == 1 {
                acc *= &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        self.lift(acc)
    }

    /// Product evaluated left to right, stopping at the first exact zero.
    fn product(
        &self,
        factors: &mut [&mut dyn FnMut() -> Result<BoundsValue, BoundsError>],
    ) -> Result<BoundsValue, BoundsError> {
        let mut acc = BoundsValue::small(1);
        let mut vals = Vec::with_capacity(factors.len());
        for f in factors.iter_mut() {
            let v = f()?;
            if v.is_zero() {
                return Ok(v);
            }
            vals.push(v);
        }
        for v in &vals {
            acc = self.mul(&acc, v)?;
        }
        Ok(acc)
    }

    fn from_big(&self, v: BigUint) -> Result<BoundsValue, BoundsError> {
        self.lift(v)
    }
}

/// `Ramsey(k, n) = k^{k·n}`.
pub fn ramsey_bound(k: &BoundsValue, n: u64, mode: &Mode) -> Result<BoundsValue, BoundsError> {
    if n == 0 || k.is_zero() {
        return Err(BoundsError::OutOfRange("Ramsey needs k, n ≥ 1".into()));
    }
    let e = mode.mul(k, &BoundsValue::small(n))?;
    mode.pow(k, &e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Simp,
    Gen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Name {
    Len,
    Cov,
    MaxWt,
    Amp,
    Typ,
}

impl FromStr for Name {
    type Err = BoundsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim_start_matches('G') {
            "Len" => Name::Len,
            "Cov" => Name::Cov,
            "MaxWt" | "MaxW" => Name::MaxWt,
            "Amp" => Name::Amp,
            "Typ" => Name::Typ,
            _ => return Err(BoundsError::UnknownName(s.to_string())),
        })
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Name::Len => "Len",
            Name::Cov => "Cov",
            Name::MaxWt => "MaxWt",
            Name::Amp => "Amp",
            Name::Typ => "Typ",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundsParams {
    pub n: u64,
    pub d: u64,
    pub i: u64,
    pub mode: Mode,
}

/// Memoizing evaluator for one family at fixed `|S|`, base weight and `H`.
#[derive(Debug, Clone)]
pub struct Evaluator {
    family: Family,
    n: u64,
    base_weight: BoundsValue,
    h: BoundsValue,
    m: BoundsValue,
    mode: Mode,
    memo: HashMap<(Name, u64, u64), BoundsValue>,
}

impl Evaluator {
    pub fn simp(n: u64, base_weight: u64, mode: Mode) -> Result<Evaluator, BoundsError> {
        Evaluator::new(Family::Simp, n, base_weight, BoundsValue::small(0), mode)
    }

    /// The general family with `H` supplied by the caller.
    pub fn gen(n: u64, base_weight: u64, h: BoundsValue, mode: Mode) -> Result<Evaluator, BoundsError> {
        Evaluator::new(Family::Gen, n, base_weight, h, mode)
    }

    /// The general family with `H = Amp(|S|, 0)` of the simple family.
    pub fn gen_default(n: u64, base_weight: u64, mode: Mode) -> Result<Evaluator, BoundsError> {
        let h = Evaluator::simp(n, base_weight, mode.clone())?.eval(Name::Amp, n, 0)?;
        Evaluator::gen(n, base_weight, h, mode)
    }

    fn new(family: Family, n: u64, base_weight: u64, h: BoundsValue, mode: Mode) -> Result<Evaluator, BoundsError> {
        if n == 0 {
            return Err(BoundsError::OutOfRange("|S| must be at least 1".into()));
        }
        let m = mode.from_big(stabilisation_constant(&BigUint::from(n)))?;
        Ok(Evaluator {
            family,
            n,
            base_weight: BoundsValue::small(base_weight),
            h,
            m,
            mode,
            memo: HashMap::new(),
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn mode(&self) -> &Mode {
        &self.mode
    }

    pub fn h(&self) -> &BoundsValue {
        &self.h
    }

    fn label(&self, name: Name, d: u64, i: u64) -> String {
        let g = if self.family == Family::Gen { "G" } else { "" };
        format!("{g}{name}({d},{i})")
    }

    /// `L(d) = Len(d, 1)`.
    pub fn length_bound(&mut self, d: u64) -> Result<BoundsValue, BoundsError> {
        self.eval(Name::Len, d, 1)
    }

    pub fn eval(&mut self, name: Name, d: u64, i: u64) -> Result<BoundsValue, BoundsError> {
        let n = self.n;
        if d > n || i > n + 1 {
            return Err(BoundsError::OutOfRange(format!(
                "{} needs 0 ≤ d ≤ {n} and 0 ≤ i ≤ {}",
                self.label(name, d, i),
                n + 1
            )));
        }
        let key = (name, d, if name == Name::MaxWt { 0 } else { i });
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        let v = match name {
            Name::Len => self.len(d, i)?,
            Name::Cov => self.cov(d, i)?,
            Name::MaxWt => self.max_wt(d)?,
            Name::Amp => self.amp(d, i)?,
            Name::Typ => self.typ(d, i)?,
        };
        self.memo.insert(key, v.clone());
        Ok(v)
    }

    fn m2_times(&self, k: u64) -> Result<BoundsValue, BoundsError> {
        let m2 = self.mode.mul(&self.m, &self.m)?;
        self.mode.mul(&BoundsValue::small(k), &m2)
    }

    fn len(&mut self, d: u64, i: u64) -> Result<BoundsValue, BoundsError> {
        if d == 0 {
            return Ok(BoundsValue::small(1));
        }
        if i == self.n + 1 {
            return Ok(BoundsValue::small(0));
        }
        let c = self.m2_times(32)?;
        let mode = self.mode.clone();
        let prev = self.eval(Name::Len, d - 1, 1)?;
        let next = self.eval(Name::Len, d, i + 1)?;
        let mut f0 = || Ok(c.clone());
        let mut f1 = || Ok(prev.clone());
        let mut f2 = || Ok(next.clone());
        let mut f3 = || -> Result<BoundsValue, BoundsError> {
            let typ = self.eval(Name::Typ, d, i)?;
            let r = ramsey_bound(&typ, 3, &mode)?;
            let base = mode.add(&r, &BoundsValue::small(2))?;
            let amp = self.eval(Name::Amp, d, i)?;
            let e = mode.add(&mode.mul(&BoundsValue::small(2), &amp)?, &BoundsValue::small(1))?;
            mode.pow(&base, &e)
        };
        mode.product(&mut [&mut f0, &mut f1, &mut f2, &mut f3])
    }

    fn cov(&mut self, d: u64, i: u64) -> Result<BoundsValue, BoundsError> {
        if i == self.n {
            return Ok(BoundsValue::small(1));
        }
        if d == 0 || i > self.n {
            return Err(BoundsError::Undefined(self.label(Name::Cov, d, i)));
        }
        let mode = self.mode.clone();
        let w = self.eval(Name::MaxWt, d - 1, 0)?;
        let ld = self.eval(Name::Len, d - 1, 1)?;
        let li = self.eval(Name::Len, d, i + 1)?;
        let inner = mode.mul(&mode.mul(&w, &ld)?, &li)?;
        let mut sum = mode.add(&inner, &self.eval(Name::Cov, d, i + 1)?)?;
        if self.family == Family::Gen {
            sum = mode.add(&sum, &self.h)?;
        }
        mode.mul(&self.m2_times(8)?, &sum)
    }

    fn max_wt(&mut self, d: u64) -> Result<BoundsValue, BoundsError> {
        if d == 0 {
            return Ok(self.base_weight.clone());
        }
        let mode = self.mode.clone();
        let two_m = mode.mul(&BoundsValue::small(2), &self.m)?;
        let prev = self.eval(Name::MaxWt, d - 1, 0)?;
        // the general step reads Len(d, 0) where the simple one reads Len(d, 1)
        let len = match self.family {
            Family::Simp => self.eval(Name::Len, d, 1)?,
            Family::Gen => self.eval(Name::Len, d, 0)?,
        };
        mode.mul(&mode.mul(&two_m, &prev)?, &len)
    }

    fn amp(&mut self, d: u64, i: u64) -> Result<BoundsValue, BoundsError> {
        if d == 0 {
            return Err(BoundsError::Undefined(self.label(Name::Amp, d, i)));
        }
        let mode = self.mode.clone();
        let c = self.m2_times(32)?;
        let w = self.eval(Name::MaxWt, d - 1, 0)?;
        let mut weight = mode.mul(&BoundsValue::small(2), &w)?;
        if self.family == Family::Gen {
            weight = mode.add(&self.h, &weight)?;
        }
        let typ = self.eval(Name::Typ, d, i)?;
        let next = self.eval(Name::Len, d, i + 1)?;
        let prev = self.eval(Name::Len, d - 1, 1)?;
        let mut f0 = || Ok(c.clone());
        let mut f1 = || Ok(weight.clone());
        let mut f2 = || -> Result<BoundsValue, BoundsError> {
            let r = ramsey_bound(&typ, 3, &mode)?;
            mode.add(&mode.add(&r, &next)?, &prev)
        };
        mode.product(&mut [&mut f0, &mut f1, &mut f2])
    }

    fn typ(&mut self, d: u64, i: u64) -> Result<BoundsValue, BoundsError> {
        if d == 0 {
            return Err(BoundsError::Undefined(self.label(Name::Typ, d, i)));
        }
        if i == 0 {
            return Ok(BoundsValue::small(1));
        }
        let mode = self.mode.clone();
        let three = mode.pow(&BoundsValue::small(3), &BoundsValue::small(i))?;
        let cov = self.eval(Name::Cov, d, i)?;
        let base = mode.add(&mode.mul(&BoundsValue::small(2), &cov)?, &BoundsValue::small(2))?;
        let e = mode.mul(&BoundsValue::small(2 * self.n), &BoundsValue::small(i))?;
        mode.mul(&three, &mode.pow(&base, &e)?)
    }
}

/// Evaluates one function of a family at `params`.
pub fn simp(name: Name, params: &BoundsParams, base_weight: u64) -> Result<BoundsValue, BoundsError> {
    Evaluator::simp(params.n, base_weight, params.mode.clone())?.eval(name, params.d, params.i)
}

pub fn gen(
    name: Name,
    params: &BoundsParams,
    base_weight: u64,
    h: BoundsValue,
) -> Result<BoundsValue, BoundsError> {
    Evaluator::gen(params.n, base_weight, h, params.mode.clone())?.eval(name, params.d, params.i)
}

/// The gap bound `B = GAmp(|S|, 0)` with `H = Amp(|S|, 0)`.
pub fn main_b(n: u64, base_weight: u64, mode: &Mode) -> Result<BoundsValue, BoundsError> {
    Evaluator::gen_default(n, base_weight, mode.clone())?.eval(Name::Amp, n, 0)
}

/// Fast-growing class label of each function, as metadata.
pub fn hierarchy_class(family: Family) -> &'static str {
    match family {
        Family::Simp => "F4",
        Family::Gen => "F6",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UpperName {
    W,
    C,
    T,
    A,
    L,
    Len1,
    Len2,
}

impl UpperName {
    pub fn arity(self) -> usize {
        match self {
            UpperName::W => 3,
            UpperName::C | UpperName::T | UpperName::A | UpperName::L => 5,
            UpperName::Len1 => 4,
            UpperName::Len2 => 2,
        }
    }

    pub fn class(self) -> &'static str {
        match self {
            UpperName::Len1 => "F3",
            UpperName::Len2 => "F4",
            _ => "F2",
        }
    }

    fn label(self) -> &'static str {
        match self {
            UpperName::W => "W",
            UpperName::C => "C",
            UpperName::T => "T",
            UpperName::A => "A",
            UpperName::L => "L",
            UpperName::Len1 => "Len1",
            UpperName::Len2 => "Len2",
        }
    }
}

impl FromStr for UpperName {
    type Err = BoundsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "W" => UpperName::W,
            "C" => UpperName::C,
            "T" => UpperName::T,
            "A" => UpperName::A,
            "L" => UpperName::L,
            "Len1" => UpperName::Len1,
            "Len2" => UpperName::Len2,
            _ => return Err(BoundsError::UnknownName(s.to_string())),
        })
    }
}

/// The upper-bound functions of the complexity analysis.
pub struct Upper {
    mode: Mode,
}

impl Upper {
    pub fn new(mode: Mode) -> Upper {
        Upper { mode }
    }

    fn two_m(&self, n: u64) -> Result<BoundsValue, BoundsError> {
        self.mode
            .from_big(stabilisation_constant(&BigUint::from(n)) * 2u32)
    }

    fn c32(&self, n: u64) -> Result<BoundsValue, BoundsError> {
        let t = self.two_m(n)?;
        self.mode.mul(&BoundsValue::small(32), &self.mode.mul(&t, &t)?)
    }

    pub fn w(&self, n: u64, d: u64, ld: &BoundsValue) -> Result<BoundsValue, BoundsError> {
        let mut acc = BoundsValue::small(n);
        let t = self.two_m(n)?;
        for _ in 0..d {
            acc = self.mode.mul(&self.mode.mul(&t, &acc)?, ld)?;
        }
        Ok(acc)
    }

    /// `(2n·n!)^n·Ld^n + n`.
    pub fn w_closed_form(&self, n: u64, ld: &BoundsValue) -> Result<BoundsValue, BoundsError> {
        let nn = BoundsValue::small(n);
        let a = self.mode.pow(&self.two_m(n)?, &nn)?;
        let b = self.mode.pow(ld, &nn)?;
        self.mode.add(&self.mode.mul(&a, &b)?, &nn)
    }

    pub fn c(&self, n: u64, d: u64, i: u64, ld: &BoundsValue, li: &BoundsValue) -> Result<BoundsValue, BoundsError> {
        let t = self.two_m(n)?;
        let k = self.mode.mul(&BoundsValue::small(8), &self.mode.mul(&t, &t)?)?;
        let inner = self.mode.mul(&self.mode.mul(&self.w(n, d, ld)?, ld)?, li)?;
        let mut acc = BoundsValue::small(1);
        for _ in 0..i {
            acc = self.mode.mul(&k, &self.mode.add(&inner, &acc)?)?;
        }
        Ok(acc)
    }

    pub fn t(&self, n: u64, d: u64, i: u64, ld: &BoundsValue, li: &BoundsValue) -> Result<BoundsValue, BoundsError> {
        let three = self.mode.pow(&BoundsValue::small(3), &BoundsValue::small(i))?;
        let c = self.c(n, d, i, ld, li)?;
        let base = self.mode.add(&self.mode.mul(&BoundsValue::small(2), &c)?, &BoundsValue::small(2))?;
        let e = self.mode.mul(&BoundsValue::small(2 * n), &BoundsValue::small(i))?;
        self.mode.mul(&three, &self.mode.pow(&base, &e)?)
    }

    pub fn a(&self, n: u64, d: u64, i: u64, ld: &BoundsValue, li: &BoundsValue) -> Result<BoundsValue, BoundsError> {
        if d == 0 {
            return Err(BoundsError::Undefined("A(n,0,…) reads W(n,−1,…)".into()));
        }
        let w = self.w(n, d - 1, ld)?;
        let r = ramsey_bound(&self.t(n, d, i, ld, li)?, 3, &self.mode)?;
        let inner = self.mode.mul(&self.mode.mul(&BoundsValue::small(2), &w)?, &r)?;
        let sum = self.mode.add(&self.mode.add(&inner, li)?, ld)?;
        self.mode.mul(&self.c32(n)?, &sum)
    }

    pub fn l(&self, n: u64, d: u64, i: u64, ld: &BoundsValue, li: &BoundsValue) -> Result<BoundsValue, BoundsError> {
        if i == 0 {
            return Ok(BoundsValue::small(0));
        }
        let r = ramsey_bound(&self.t(n, d, i, ld, li)?, 3, &self.mode)?;
        let base = self.mode.add(&self.mode.mul(&self.mode.mul(ld, li)?, &r)?, &BoundsValue::small(2))?;
        let a = self.a(n, d, i, ld, li)?;
        let e = self.mode.add(&self.mode.mul(&BoundsValue::small(2), &a)?, &BoundsValue::small(1))?;
        self.mode.mul(&self.c32(n)?, &self.mode.pow(&base, &e)?)
    }

    pub fn len1(&self, n: u64, d: u64, i: u64, ld: &BoundsValue) -> Result<BoundsValue, BoundsError> {
        let zero = BoundsValue::small(0);
        let mut acc = self.l(n, d, 0, ld, &zero)?;
        for k in 1..=i {
            acc = self.l(n, d, k, ld, &acc)?;
        }
        Ok(acc)
    }

    pub fn len2(&self, n: u64, d: u64) -> Result<BoundsValue, BoundsError> {
        if d == 0 || n == 0 {
            return Err(BoundsError::OutOfRange("Len2 needs n, d ≥ 1".into()));
        }
        let mut acc = self.len1(n, 1, n - 1, &BoundsValue::small(1))?;
        for k in 2..=d {
            acc = self.len1(n, k, n - 1, &acc)?;
        }
        Ok(acc)
    }

    /// Dispatch by name with `args` in table order (`n, d, [i,] [Ld, [Li]]`).
    pub fn eval(&self, name: UpperName, args: &[BigUint]) -> Result<BoundsValue, BoundsError> {
        if args.len() != name.arity() {
            return Err(BoundsError::Arity {
                name: name.label(),
                expected: name.arity(),
                got: args.len(),
            });
        }
        let int = |k: usize| {
            args[k]
                .to_u64()
                .ok_or_else(|| BoundsError::OutOfRange("integer argument too large".into()))
        };
        let val = |k: usize| self.mode.from_big(args[k].clone());
        match name {
            UpperName::W => self.w(int(0)?, int(1)?, &val(2)?),
            UpperName::C => self.c(int(0)?, int(1)?, int(2)?, &val(3)?, &val(4)?),
            UpperName::T => self.t(int(0)?, int(1)?, int(2)?, &val(3)?, &val(4)?),
            UpperName::A => self.a(int(0)?, int(1)?, int(2)?, &val(3)?, &val(4)?),
            UpperName::L => self.l(int(0)?, int(1)?, int(2)?, &val(3)?, &val(4)?),
            UpperName::Len1 => self.len1(int(0)?, int(1)?, int(2)?, &val(3)?),
            UpperName::Len2 => self.len2(int(0)?, int(1)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn exact() -> Mode {
        Mode::default()
    }

    #[test]
    fn ramsey_examples() {
        let m = exact();
        let r = |k, n| ramsey_bound(&BoundsValue::small(k), n, &m).unwrap();
        assert_eq!(r(1, 3), BoundsValue::small(1));
        assert_eq!(r(2, 3), BoundsValue::small(64));
        assert_eq!(r(3, 2), BoundsValue::small(729));
    }

    #[test]
    fn bases() {
        for n in 1..=3 {
            let mut e = Evaluator::simp(n, 1, exact()).unwrap();
            for i in 0..=n + 1 {
                assert_eq!(e.eval(Name::Len, 0, i).unwrap(), BoundsValue::small(1));
            }
            for d in 0..=n {
                assert_eq!(e.eval(Name::Cov, d, n).unwrap(), BoundsValue::small(1));
                if d > 0 {
                    assert_eq!(e.eval(Name::Len, d, n + 1).unwrap(), BoundsValue::small(0));
                }
            }
        }
        assert!(matches!(
            Evaluator::simp(2, 1, exact()).unwrap().eval(Name::Len, 3, 0),
            Err(BoundsError::OutOfRange(_))
        ));
    }

    #[test]
    fn n1_by_hand() {
        // m = 1, Typ(1,0) = 1, Ramsey(1,3) = 1, Len(1,1) = 0, Len(0,1) = 1
        for w in 0..4u64 {
            let h = Evaluator::simp(1, w, exact()).unwrap().eval(Name::Amp, 1, 0).unwrap();
            assert_eq!(h, BoundsValue::small(32 * 2 * w * 2));
            let b = main_b(1, w, &exact()).unwrap();
            assert_eq!(b, BoundsValue::small(32 * (128 * w + 2 * w) * 2));
        }
    }

    #[test]
    fn upper_examples() {
        let u = Upper::new(exact());
        for n in 1..4 {
            assert_eq!(u.w(n, 0, &BoundsValue::small(7)).unwrap(), BoundsValue::small(n));
            let one = BoundsValue::small(1);
            assert_eq!(u.c(n, 2, 0, &one, &one).unwrap(), one);
        }
        assert!(matches!(
            u.eval(UpperName::W, &[BigUint::from(1u32)]),
            Err(BoundsError::Arity { .. })
        ));
    }

    #[test]
    fn exact_budget_reports() {
        let mut e = Evaluator::simp(2, 1, Mode::Exact { bit_budget: 64 }).unwrap();
        assert_eq!(e.eval(Name::Amp, 1, 1), Err(BoundsError::BitBudget(64)));
        let mut s = Evaluator::simp(2, 1, Mode::saturated(1_000_000u32)).unwrap();
        assert!(s.eval(Name::Amp, 1, 1).unwrap().is_saturated());
    }

    proptest! {
        #[test]
        fn saturated_agrees_below_cap(n in 1u64..=2, d in 0u64..=2, i in 0u64..=3, w in 0u64..5, name in 0usize..5) {
            prop_assume!(d <= n && i <= n + 1);
            let name = [Name::Len, Name::Cov, Name::MaxWt, Name::Amp, Name::Typ][name];
            let cap = BigUint::from(10u32).pow(30);
            let ex = Evaluator::simp(n, w, Mode::Exact { bit_budget: 4096 }).unwrap().eval(name, d, i);
            let sa = Evaluator::simp(n, w, Mode::Saturated { cap: cap.clone() }).unwrap().eval(name, d, i);
            match (ex, sa) {
                (Ok(BoundsValue::Exact(v)), Ok(s)) if v <= cap => prop_assert_eq!(s, BoundsValue::Exact(v)),
                (Ok(_), Ok(s)) => prop_assert!(s.is_saturated()),
                (Err(BoundsError::BitBudget(_)), Ok(s)) => prop_assert!(s.is_saturated()),
                (Err(a), Err(b)) => prop_assert_eq!(a, b),
                (a, b) => prop_assert!(false, "exact {:?} vs saturated {:?}", a, b),
            }
        }

        #[test]
        fn monotone_in_base_weight(n in 1u64..=2, d in 0u64..=2, i in 0u64..=3, w in 0u64..5, name in 0usize..5) {
            prop_assume!(d <= n && i <= n + 1);
            let name = [Name::Len, Name::Cov, Name::MaxWt, Name::Amp, Name::Typ][name];
            let mode = Mode::saturated(BigUint::from(10u32).pow(40));
            let a = Evaluator::simp(n, w, mode.clone()).unwrap().eval(name, d, i);
            let b = Evaluator::simp(n, w + 1, mode).unwrap().eval(name, d, i);
            if let (Ok(BoundsValue::Exact(a)), Ok(BoundsValue::Exact(b))) = (a, b) {
                prop_assert!(a <= b);
            }
        }
    }
}
