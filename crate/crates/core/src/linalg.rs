//! Exact rational vectors, matrices and intervals indexed by alphabet symbols.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::params::Letter;

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

pub fn from_biguint(n: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(n.clone()))
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod ratio_string {
    use super::*;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter writing big integers as decimal strings.
pub mod decimal {
    use super::*;
    use std::str::FromStr;

    pub fn serialize<T: fmt::Display, S: Serializer>(x: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(x)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: fmt::Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `{letter: "n"}` maps of big integers.
pub mod decimal_map {
    use super::*;
    use std::str::FromStr;

    pub fn serialize<T: fmt::Display, S: Serializer>(v: &BTreeMap<Letter, T>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(v.iter().map(|(k, x)| (k, x.to_string())))
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<BTreeMap<Letter, T>, D::Error>
    where
        T: FromStr,
        T::Err: fmt::Display,
        D: Deserializer<'de>,
    {
        BTreeMap::<Letter, String>::deserialize(d)?
            .into_iter()
            .map(|(k, t)| t.parse().map(|x| (k, x)).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter for an optional list of big integers as decimal strings.
pub mod decimal_opt_list {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Vec<BigInt>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|xs| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<BigInt>>, D::Error> {
        Option::<Vec<String>>::deserialize(d)?
            .map(|xs| xs.iter().map(|t| t.parse().map_err(serde::de::Error::custom)).collect())
            .transpose()
    }
}

/// Serde adapter for `{letter: "p/q"}` maps.
pub mod ratio_map {
    use super::*;

    pub fn serialize<S: Serializer>(v: &SymbolVector<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        vector_strings(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SymbolVector<BigRational>, D::Error> {
        let raw = BTreeMap::<Letter, String>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, t)| t.parse().map(|x| (k, x)).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// A closed interval `[lo, hi]` with rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalInterval {
    lo: BigRational,
    hi: BigRational,
}

impl RationalInterval {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order: {lo} > {hi}");
        RationalInterval { lo, hi }
    }

    pub fn exact(x: BigRational) -> Self {
        RationalInterval { lo: x.clone(), hi: x }
    }

    pub fn zero() -> Self {
        RationalInterval::exact(BigRational::zero())
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn exact_value(&self) -> Option<&BigRational> {
        self.is_exact().then_some(&self.lo)
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        if k.is_negative() {
            RationalInterval::new(&self.hi * k, &self.lo * k)
        } else {
            RationalInterval::new(&self.lo * k, &self.hi * k)
        }
    }

    /// Product of two intervals of nonnegative numbers.
    pub fn mul_nonneg(&self, other: &Self) -> Self {
        assert!(!self.lo.is_negative() && !other.lo.is_negative());
        RationalInterval::new(&self.lo * &other.lo, &self.hi * &other.hi)
    }

    /// Quotient of nonnegative intervals; `other` must be bounded away from 0.
    pub fn div_nonneg(&self, other: &Self) -> Self {
        assert!(other.lo.is_positive(), "divisor interval must be positive");
        RationalInterval::new(&self.lo / &other.hi, &self.hi / &other.lo)
    }
}

impl Add for &RationalInterval {
    type Output = RationalInterval;
    fn add(self, o: &RationalInterval) -> RationalInterval {
        RationalInterval::new(&self.lo + &o.lo, &self.hi + &o.hi)
    }
}

impl fmt::Display for RationalInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

impl Serialize for RationalInterval {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.lo.to_string(), self.hi.to_string()].serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalInterval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [lo, hi] = <[String; 2]>::deserialize(d)?;
        let lo: BigRational = lo.parse().map_err(serde::de::Error::custom)?;
        let hi: BigRational = hi.parse().map_err(serde::de::Error::custom)?;
        if lo > hi {
            return Err(serde::de::Error::custom("interval endpoints out of order"));
        }
        Ok(RationalInterval { lo, hi })
    }
}

/// A vector indexed by letters.
pub type SymbolVector<T> = BTreeMap<Letter, T>;

/// Row vector times matrix: `(v M)(a) = Σ_b v(b) M(b, a)`.
pub fn row_times(v: &SymbolVector<BigRational>, m: &SymbolMatrix) -> SymbolVector<BigRational> {
    m.cols
        .iter()
        .map(|&a| {
            let s = m.rows.iter().fold(BigRational::zero(), |acc, &b| {
                acc + v.get(&b).cloned().unwrap_or_else(BigRational::zero) * m.get(b, a)
            });
            (a, s)
        })
        .collect()
}

/// A rational matrix with rows and columns labeled by sorted letters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolMatrix {
    rows: Vec<Letter>,
    cols: Vec<Letter>,
    entries: Vec<Vec<BigRational>>,
}

impl SymbolMatrix {
    pub fn zeros(rows: impl IntoIterator<Item = Letter>, cols: impl IntoIterator<Item = Letter>) -> Self {
        let mut rows: Vec<_> = rows.into_iter().collect();
        let mut cols: Vec<_> = cols.into_iter().collect();
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        let entries = vec![vec![BigRational::zero(); cols.len()]; rows.len()];
        SymbolMatrix { rows, cols, entries }
    }

    pub fn identity(labels: impl IntoIterator<Item = Letter>) -> Self {
        let labels: Vec<_> = labels.into_iter().collect();
        let mut m = SymbolMatrix::zeros(labels.clone(), labels);
        for i in 0..m.rows.len() {
            m.entries[i][i] = BigRational::one();
        }
        m
    }

    /// `I + f · u` where `u` is the all-ones row vector.
    pub fn identity_plus_rank_one(f: &SymbolVector<BigRational>) -> Self {
        let mut m = SymbolMatrix::identity(f.keys().copied());
        for (i, v) in f.values().enumerate() {
            for e in &mut m.entries[i] {
                *e += v;
            }
        }
        m
    }

    pub fn from_fn(
        rows: impl IntoIterator<Item = Letter>,
        cols: impl IntoIterator<Item = Letter>,
        f: impl Fn(Letter, Letter) -> BigRational,
    ) -> Self {
        let mut m = SymbolMatrix::zeros(rows, cols);
        for (i, &b) in m.rows.iter().enumerate() {
            for (j, &a) in m.cols.iter().enumerate() {
                m.entries[i][j] = f(b, a);
            }
        }
        m
    }

    pub fn rows(&self) -> &[Letter] {
        &self.rows
    }

    pub fn cols(&self) -> &[Letter] {
        &self.cols
    }

    fn row_index(&self, b: Letter) -> Option<usize> {
        self.rows.binary_search(&b).ok()
    }

    fn col_index(&self, a: Letter) -> Option<usize> {
        self.cols.binary_search(&a).ok()
    }

    /// Entry `(b, a)`; zero outside the label sets.
    pub fn get(&self, b: Letter, a: Letter) -> BigRational {
        match (self.row_index(b), self.col_index(a)) {
            (Some(i), Some(j)) => self.entries[i][j].clone(),
            _ => BigRational::zero(),
        }
    }

    pub fn set(&mut self, b: Letter, a: Letter, v: BigRational) {
        let i = self.row_index(b).expect("row label");
        let j = self.col_index(a).expect("column label");
        self.entries[i][j] = v;
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && self.entries.iter().enumerate().all(|(i, row)| {
                row.iter().enumerate().all(|(j, e)| if i == j { e.is_one() } else { e.is_zero() })
            })
    }

    /// Matrix product; the column labels of `self` must equal the row labels of `rhs`.
    pub fn try_mul(&self, rhs: &SymbolMatrix) -> Option<SymbolMatrix> {
        if self.cols != rhs.rows {
            return None;
        }
        let mut out = SymbolMatrix::zeros(self.rows.clone(), rhs.cols.clone());
        for i in 0..self.rows.len() {
            for k in 0..self.cols.len() {
                let x = &self.entries[i][k];
                if x.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols.len() {
                    out.entries[i][j] += x * &rhs.entries[k][j];
                }
            }
        }
        Some(out)
    }

    /// Integer rendering for display; `None` if some entry is not an integer.
    pub fn to_integer_rows(&self) -> Option<Vec<Vec<BigInt>>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|e| e.is_integer().then(|| e.to_integer())).collect())
            .collect()
    }

    pub fn entry_rows(&self) -> &[Vec<BigRational>] {
        &self.entries
    }
}

impl Mul for &SymbolMatrix {
    type Output = SymbolMatrix;
    fn mul(self, rhs: &SymbolMatrix) -> SymbolMatrix {
        self.try_mul(rhs).expect("matrix labels do not match")
    }
}

impl Serialize for SymbolMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<Vec<String>> =
            self.entries.iter().map(|r| r.iter().map(|e| e.to_string()).collect()).collect();
        let mut st = s.serialize_struct("SymbolMatrix", 3)?;
        st.serialize_field("rows", &self.rows)?;
        st.serialize_field("cols", &self.cols)?;
        st.serialize_field("entries", &entries)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for SymbolMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            rows: Vec<Letter>,
            cols: Vec<Letter>,
            entries: Vec<Vec<String>>,
        }
        let raw = Raw::deserialize(d)?;
        if raw.entries.len() != raw.rows.len() || raw.entries.iter().any(|r| r.len() != raw.cols.len()) {
            return Err(serde::de::Error::custom("matrix shape does not match its labels"));
        }
        let entries = raw
            .entries
            .into_iter()
            .map(|r| r.into_iter().map(|e| e.parse::<BigRational>()).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        Ok(SymbolMatrix { rows: raw.rows, cols: raw.cols, entries })
    }
}

impl fmt::Display for SymbolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<Vec<String>> =
            self.entries.iter().map(|r| r.iter().map(|e| e.to_string()).collect()).collect();
        let width = cells.iter().flatten().map(String::len).chain(self.cols.iter().map(|c| c.to_string().len())).max().unwrap_or(1);
        let label = self.rows.iter().map(|r| r.to_string().len()).max().unwrap_or(1);
        write!(f, "{:label$} |", "")?;
        for c in &self.cols {
            write!(f, " {c:>width$}")?;
        }
        writeln!(f)?;
        for (r, row) in self.rows.iter().zip(&cells) {
            write!(f, "{r:>label$} |")?;
            for e in row {
                write!(f, " {e:>width$}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Serializes a symbol-indexed rational vector as `{letter: "p/q"}`.
pub fn vector_strings(v: &SymbolVector<BigRational>) -> BTreeMap<Letter, String> {
    v.iter().map(|(k, x)| (*k, x.to_string())).collect()
}
