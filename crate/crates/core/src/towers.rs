//! Tower heights, spacer-count vectors and products of composition matrices.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{from_biguint, SymbolMatrix, SymbolVector};
use crate::morphisms::{MorphismError, Variant};
use crate::params::Letter;
use crate::words::Subshift;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TowerError {
    #[error("empty level range [{m}, {n})")]
    EmptyRange { m: usize, n: usize },
    #[error("level {m} is below the stabilization level {stable}; use the direct product")]
    BelowStabilization { m: usize, stable: usize },
    #[error(transparent)]
    Morphism(#[from] MorphismError),
}

/// `h_n(a) = |τ_{[0,n)}(a)|` over `A_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeightVector {
    pub level: usize,
    #[serde(with = "crate::linalg::decimal_map")]
    pub values: BTreeMap<Letter, BigUint>,
}

impl HeightVector {
    pub fn as_rational(&self) -> SymbolVector<BigRational> {
        self.values.iter().map(|(&a, h)| (a, from_biguint(h))).collect()
    }
}

impl Subshift {
    /// `Π_{j=m}^{n-1} (q_j + 1)`, equal to 1 when `m >= n`.
    pub fn q_range(&self, m: usize, n: usize) -> BigUint {
        (m..n).fold(BigUint::one(), |acc, j| acc * (self.schedule().cut(j) + 1))
    }

    /// `Q_{m,n}` for `m < n`.
    pub fn q_product(&self, m: usize, n: usize) -> Result<BigUint, TowerError> {
        if m >= n {
            return Err(TowerError::EmptyRange { m, n });
        }
        Ok(self.q_range(m, n))
    }

    pub fn heights(&self, n: usize) -> HeightVector {
        let values = self.alphabets().level(n).into_iter().map(|a| (a, self.image_length(n, a))).collect();
        HeightVector { level: n, values }
    }

    /// `f_n` as exact integers over `A_n`, for `n >= 1`.
    pub fn f_vector(&self, n: usize) -> SymbolVector<BigUint> {
        self.schedule()
            .spacer_counts(n)
            .expect("level at least 1")
            .into_iter()
            .map(|(a, c)| (a, BigUint::from(c)))
            .collect()
    }

    fn require_stable(&self, m: usize, n: usize) -> Result<(), TowerError> {
        if m >= n {
            return Err(TowerError::EmptyRange { m, n });
        }
        let stable = self.alphabets().stabilization;
        if m < stable {
            return Err(TowerError::BelowStabilization { m, stable });
        }
        Ok(())
    }

    /// `f_{m,n} = Σ_{k=m}^{n-1} Q_{k,n-1} f_k` over `A_W`.
    pub fn f_range(&self, m: usize, n: usize) -> Result<SymbolVector<BigUint>, TowerError> {
        self.require_stable(m, n)?;
        let mut out: SymbolVector<BigUint> = BTreeMap::new();
        for k in m..n {
            let weight = self.q_range(k, n - 1);
            for (a, c) in self.f_vector(k) {
                *out.entry(a).or_default() += &weight * c;
            }
        }
        Ok(out)
    }

    /// `M_{τ_n}` for the proper sequence.
    pub fn composition_matrix(&self, n: usize) -> Result<SymbolMatrix, TowerError> {
        Ok(self.morphism(Variant::Proper, n)?.composition_matrix())
    }

    /// `M_{τ_m} ⋯ M_{τ_{n-1}}` by multiplication; the identity on `A_m` when `m = n`.
    pub fn direct_product(&self, m: usize, n: usize) -> Result<SymbolMatrix, TowerError> {
        let mut acc = SymbolMatrix::identity(self.alphabets().level(m));
        for k in m..n {
            acc = &acc * &self.composition_matrix(k)?;
        }
        Ok(acc)
    }

    /// `I + f_{m,n} u`, valid from the stabilization level on.
    pub fn product_closed_form(&self, m: usize, n: usize) -> Result<SymbolMatrix, TowerError> {
        let f = self.f_range(m, n)?;
        Ok(SymbolMatrix::identity_plus_rank_one(&f.iter().map(|(&a, c)| (a, from_biguint(c))).collect()))
    }

    /// `I - f_{m,n} u / Q_{m-1,n-1}`.
    pub fn inverse_closed_form(&self, m: usize, n: usize) -> Result<SymbolMatrix, TowerError> {
        let f = self.f_range(m, n)?;
        let q = from_biguint(&self.q_range(m - 1, n - 1));
        Ok(SymbolMatrix::identity_plus_rank_one(&f.iter().map(|(&a, c)| (a, -from_biguint(c) / &q)).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{int, rat, row_times};
    use crate::params::ParameterSchedule;

    fn chacon() -> Subshift {
        Subshift::new(ParameterSchedule::periodic(vec![], vec![vec![0, 1]]).unwrap())
    }

    fn big(v: &[u32]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn q_products() {
        let s = chacon();
        assert_eq!(s.q_product(0, 2).unwrap(), BigUint::from(9u32));
        assert_eq!(s.q_product(0, 3).unwrap(), BigUint::from(27u32));
        assert_eq!(s.q_product(4, 5).unwrap(), BigUint::from(3u32));
        assert!(s.q_product(2, 2).is_err());
    }

    #[test]
    fn chacon_heights() {
        let s = chacon();
        assert_eq!(s.heights(1).values.into_values().collect::<Vec<_>>(), big(&[1, 2]));
        assert_eq!(s.heights(2).values.into_values().collect::<Vec<_>>(), big(&[4, 5]));
        for n in 0..8 {
            let next = row_times(&s.heights(n).as_rational(), &s.composition_matrix(n).unwrap());
            assert_eq!(next, s.heights(n + 1).as_rational());
        }
    }

    #[test]
    fn chacon_products() {
        let s = chacon();
        assert_eq!(s.f_range(1, 3).unwrap().into_values().collect::<Vec<_>>(), big(&[4, 4]));
        assert_eq!(s.f_range(3, 4).unwrap(), s.f_vector(3));
        let p = s.product_closed_form(1, 3).unwrap();
        assert_eq!(p, s.direct_product(1, 3).unwrap());
        assert_eq!(p.get(0, 0), int(5u32));
        assert_eq!(p.get(0, 1), int(4u32));
        let inv = s.inverse_closed_form(1, 2).unwrap();
        assert_eq!(inv.get(0, 0), rat(2, 3));
        assert_eq!(inv.get(1, 0), rat(-1, 3));
        assert!((&p * &s.inverse_closed_form(1, 3).unwrap()).is_identity());
    }

    #[test]
    fn below_stabilization_is_refused() {
        let s = Subshift::new(ParameterSchedule::periodic(vec![vec![7, 7]], vec![vec![0, 1]]).unwrap());
        assert_eq!(s.alphabets().stabilization, 2);
        assert!(matches!(s.f_range(1, 3), Err(TowerError::BelowStabilization { m: 1, stable: 2 })));
        assert!(s.direct_product(0, 3).is_ok());
        assert_eq!(s.product_closed_form(2, 5).unwrap(), s.direct_product(2, 5).unwrap());
    }
}
