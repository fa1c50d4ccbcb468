//! Square min-plus matrices with overflow-checked products.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::weight::{Fin, Inf, Weight, WeightError};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TropMatrix {
    n: usize,
    data: Vec<Weight>,
}

impl TropMatrix {
    pub fn infinite(n: usize) -> TropMatrix {
        TropMatrix {
            n,
            data: vec![Inf; n * n],
        }
    }

    pub fn identity(n: usize) -> TropMatrix {
        let mut m = TropMatrix::infinite(n);
        for i in 0..n {
            m.set(i, i, Fin(0));
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Weight {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, w: Weight) {
        self.data[i * self.n + j] = w;
    }

    pub fn mul(&self, other: &TropMatrix) -> Result<TropMatrix, WeightError> {
        assert_eq!(self.n, other.n, "matrix sizes differ");
        let n = self.n;
        let mut out = TropMatrix::infinite(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if !a.is_finite() {
                    continue;
                }
                for j in 0..n {
                    let b = other.get(k, j);
                    if b.is_finite() {
                        let v = a.add(b)?;
                        if v < out.get(i, j) {
                            out.set(i, j, v);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u64) -> Result<TropMatrix, WeightError> {
        self.pow_big(&BigUint::from(k))
    }

    /// Exponentiation by squaring; exponent 0 gives the identity.
    pub fn pow_big(&self, k: &BigUint) -> Result<TropMatrix, WeightError> {
        let mut result = TropMatrix::identity(self.n);
        let mut base = self.clone();
        let mut e = k.clone();
        while !e.is_zero() {
            if e.bit(0) {
                result = result.mul(&base)?;
            }
            e >>= 1u32;
            if !e.is_zero() {
                base = base.mul(&base)?;
            }
        }
        Ok(result)
    }

    /// The Boolean support pattern.
    pub fn support(&self) -> Vec<bool> {
        self.data.iter().map(|w| w.is_finite()).collect()
    }

    pub fn diagonal(&self) -> Vec<Weight> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }
}

/// `n·n!`.
pub fn stabilisation_constant(n: &BigUint) -> BigUint {
    let mut fact = BigUint::one();
    let mut i = BigUint::one();
    while &i <= n {
        fact *= &i;
        i += 1u32;
    }
    n * fact
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(n: usize) -> impl Strategy<Value = TropMatrix> {
        proptest::collection::vec(prop_oneof![1 => Just(Inf), 3 => (-5i64..6).prop_map(Fin)], n * n)
            .prop_map(move |data| TropMatrix { n, data })
    }

    #[test]
    fn constants() {
        let c = |n: u32| stabilisation_constant(&BigUint::from(n));
        assert_eq!(c(1), BigUint::from(1u32));
        assert_eq!(c(2), BigUint::from(4u32));
        assert_eq!(c(3), BigUint::from(18u32));
    }

    proptest! {
        #[test]
        fn power_matches_repeated_product(m in mat(3), k in 0u64..7) {
            let mut slow = TropMatrix::identity(3);
            for _ in 0..k {
                slow = slow.mul(&m).unwrap();
            }
            prop_assert_eq!(m.pow(k).unwrap(), slow);
        }

        #[test]
        fn product_is_associative(a in mat(3), b in mat(3), c in mat(3)) {
            prop_assert_eq!(
                a.mul(&b).unwrap().mul(&c).unwrap(),
                a.mul(&b.mul(&c).unwrap()).unwrap()
            );
        }
    }
}
