//! Extended integers `ℤ ∪ {∞}` with min-plus operations and overflow checks.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeightError {
    #[error("weight overflow in {0}")]
    Overflow(&'static str),
}

/// A tropical weight. `Inf` is the additive identity of `min` and absorbing for `+`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weight {
    Fin(i64),
    Inf,
}

pub use Weight::{Fin, Inf};

impl Weight {
    pub const ZERO: Weight = Fin(0);

    pub fn is_finite(self) -> bool {
        matches!(self, Fin(_))
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            Fin(v) => Some(v),
            Inf => None,
        }
    }

    pub fn min(self, other: Weight) -> Weight {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// Tropical product, i.e. ordinary addition with `∞` absorbing.
    pub fn add(self, other: Weight) -> Result<Weight, WeightError> {
        match (self, other) {
            (Fin(a), Fin(b)) => a
                .checked_add(b)
                .map(Fin)
                .ok_or(WeightError::Overflow("addition")),
            _ => Ok(Inf),
        }
    }

    pub fn add_i64(self, c: i64) -> Result<Weight, WeightError> {
        self.add(Fin(c))
    }

    /// `self - c` for a finite `c`; `∞ - c = ∞`.
    pub fn sub_i64(self, c: i64) -> Result<Weight, WeightError> {
        match self {
            Fin(a) => a
                .checked_sub(c)
                .map(Fin)
                .ok_or(WeightError::Overflow("subtraction")),
            Inf => Ok(Inf),
        }
    }

    /// Multiplication by a non-negative scalar (iterated tropical product).
    pub fn times(self, k: u64) -> Result<Weight, WeightError> {
        match self {
            Fin(a) => {
                let k = i64::try_from(k).map_err(|_| WeightError::Overflow("scalar"))?;
                a.checked_mul(k)
                    .map(Fin)
                    .ok_or(WeightError::Overflow("multiplication"))
            }
            Inf => Ok(Inf),
        }
    }
}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Weight {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Fin(a), Fin(b)) => a.cmp(b),
            (Fin(_), Inf) => Ordering::Less,
            (Inf, Fin(_)) => Ordering::Greater,
            (Inf, Inf) => Ordering::Equal,
        }
    }
}

impl From<i64> for Weight {
    fn from(v: i64) -> Self {
        Fin(v)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fin(v) => write!(f, "{v}"),
            Inf => write!(f, "inf"),
        }
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Fin(v) => s.serialize_i64(*v),
            Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(Fin(v)),
            Raw::Str(s) if s == "inf" || s == "∞" => Ok(Inf),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected integer or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// Sum of finite weights with overflow detection.
pub fn checked_sum(values: impl IntoIterator<Item = i64>) -> Result<i64, WeightError> {
    values.into_iter().try_fold(0i64, |acc, v| {
        acc.checked_add(v).ok_or(WeightError::Overflow("sum"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn weight() -> impl Strategy<Value = Weight> {
        prop_oneof![
            1 => Just(Inf),
            6 => (-1000i64..1000).prop_map(Fin),
        ]
    }

    #[test]
    fn infinity_is_neutral_for_min_and_absorbing_for_plus() {
        assert_eq!(Fin(3).min(Inf), Fin(3));
        assert_eq!(Fin(3).add(Inf).unwrap(), Inf);
        assert_eq!(Inf.add(Fin(-7)).unwrap(), Inf);
    }

    #[test]
    fn overflow_is_reported() {
        assert!(Fin(i64::MAX).add(Fin(1)).is_err());
        assert!(Fin(i64::MIN).sub_i64(1).is_err());
        assert!(Fin(i64::MAX / 2 + 1).times(2).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let v: Vec<Weight> = serde_json::from_str("[1, -4, \"inf\"]").unwrap();
        assert_eq!(v, vec![Fin(1), Fin(-4), Inf]);
        assert_eq!(serde_json::to_string(&v).unwrap(), "[1,-4,\"inf\"]");
    }

    proptest! {
        #[test]
        fn semiring_laws(a in weight(), b in weight(), c in weight()) {
            prop_assert_eq!(a.min(b), b.min(a));
            prop_assert_eq!(a.min(b).min(c), a.min(b.min(c)));
            prop_assert_eq!(a.add(b).unwrap(), b.add(a).unwrap());
            prop_assert_eq!(a.add(b).unwrap().add(c).unwrap(), a.add(b.add(c).unwrap()).unwrap());
            prop_assert_eq!(a.add(b.min(c)).unwrap(), a.add(b).unwrap().min(a.add(c).unwrap()));
            prop_assert_eq!(a.min(Inf), a);
            prop_assert_eq!(a.add(Fin(0)).unwrap(), a);
        }
    }
}
