//! The unique invariant measure, cylinder brackets and the exact-finite-rank test.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{from_biguint, int, RationalInterval};
use crate::morphisms::MorphismError;
use crate::params::{Letter, Tail};
use crate::towers::TowerError;
use crate::words::{Subshift, WordError};

/// Width below which growth-tail series are considered summed.
pub fn default_width() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(10u32).pow(30))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeasureError {
    #[error("level {m} is below the stabilization level {stable}")]
    BelowStabilization { m: usize, stable: usize },
    #[error("cylinder word may only contain 0 and 1")]
    InvalidSymbol,
    #[error("cylinder word must be nonempty")]
    EmptyWord,
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// `μ_m(a) = μ(B_m(a))` for `a ∈ A_m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureVector {
    pub level: usize,
    pub values: BTreeMap<Letter, RationalInterval>,
}

impl MeasureVector {
    pub fn is_exact(&self) -> bool {
        self.values.values().all(RationalInterval::is_exact)
    }

    /// The exact values, when every entry is exact.
    pub fn exact(&self) -> Option<BTreeMap<Letter, BigRational>> {
        self.values.iter().map(|(&a, v)| v.exact_value().map(|x| (a, x.clone()))).collect()
    }
}

/// A cylinder bracket and the level it was computed at.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderMeasure {
    pub word: String,
    pub bracket: RationalInterval,
    /// `None` when the word is not a factor, in which case the measure is 0.
    pub level: Option<usize>,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    In,
    Out,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Exact,
    NotExact,
    Unknown,
}

/// Why a letter is (or is not) in `A_μ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Evidence {
    /// Periodic tail: the liminf of the series is its minimum over one period.
    PeriodicMinimum {
        #[serde(with = "crate::linalg::ratio_string")]
        liminf: BigRational,
        #[serde(with = "crate::linalg::ratio_string")]
        bound: BigRational,
    },
    /// `f_n(a) >= c q_{n-1}` eventually, so the series stays above `c`.
    Proportional {
        #[serde(with = "crate::linalg::ratio_string")]
        c: BigRational,
    },
    /// `f_n(a) + 1 <= C` while `q_n` is unbounded, so
    /// `μ(T_n(a)) <= CK/(q_{n-1}+1)` with `K = max spacer + 1` bounding height ratios.
    BoundedCount { c: u64, k: u64 },
    /// Neither sufficient condition applies.
    None,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LetterVerdict {
    pub letter: Letter,
    pub membership: Membership,
    pub evidence: Evidence,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankReport {
    pub stable_alphabet: BTreeSet<Letter>,
    /// Letters certified in `A_μ`.
    pub a_mu: BTreeSet<Letter>,
    pub exact_finite_rank: Exactness,
    pub letters: Vec<LetterVerdict>,
}

impl RankReport {
    /// `d_{W_μ}` when every letter is decided.
    pub fn d_mu(&self) -> Option<usize> {
        self.letters
            .iter()
            .all(|l| l.membership != Membership::Undetermined)
            .then_some(self.a_mu.len())
    }

    pub fn membership(&self, a: Letter) -> Option<Membership> {
        self.letters.iter().find(|l| l.letter == a).map(|l| l.membership)
    }
}

impl Subshift {
    fn require_measure_level(&self, m: usize) -> Result<(), MeasureError> {
        let stable = self.alphabets().stabilization;
        if m < stable {
            return Err(MeasureError::BelowStabilization { m, stable });
        }
        Ok(())
    }

    /// `f_k` as rationals over `A_W`, for `k >= n_0`.
    fn f_rational(&self, k: usize) -> BTreeMap<Letter, BigRational> {
        let mut out: BTreeMap<Letter, BigRational> =
            self.alphabets().stable.iter().map(|&a| (a, BigRational::zero())).collect();
        for (a, c) in self.schedule().stage_counts(k - 1) {
            out.insert(a, int(c));
        }
        out
    }

    /// `Σ_{k=from}^{to-1} f_k / Q_{base,k}`.
    fn partial_series(&self, base: usize, from: usize, to: usize) -> BTreeMap<Letter, BigRational> {
        let mut acc: BTreeMap<Letter, BigRational> =
            self.alphabets().stable.iter().map(|&a| (a, BigRational::zero())).collect();
        let mut q = from_biguint(&self.q_range(base, from - 1));
        for k in from..to {
            q *= int(self.schedule().cut(k - 1) + 1);
            for (a, f) in self.f_rational(k) {
                *acc.get_mut(&a).unwrap() += f / &q;
            }
        }
        acc
    }

    /// `v_m = Σ_{k>=m} f_k / Q_{m-1,k}`, exact for periodic tails.
    pub fn v_vector(&self, m: usize) -> Result<BTreeMap<Letter, RationalInterval>, MeasureError> {
        self.v_vector_within(m, &default_width())
    }

    /// As [`v_vector`](Self::v_vector), with growth tails summed until the bracket width is at most `width`.
    pub fn v_vector_within(&self, m: usize, width: &BigRational) -> Result<BTreeMap<Letter, RationalInterval>, MeasureError> {
        self.require_measure_level(m)?;
        match self.schedule().tail() {
            Tail::Periodic(period) => {
                let start = m.max(self.schedule().tail_start() + 1);
                let p = period.len();
                let head = self.partial_series(m - 1, m, start);
                let block = self.partial_series(start - 1, start, start + p);
                let r = from_biguint(&self.q_range(start - 1, start - 1 + p));
                let scale = &r / (&r - BigRational::one()) / from_biguint(&self.q_range(m - 1, start - 1));
                Ok(head
                    .into_iter()
                    .map(|(a, h)| (a, RationalInterval::exact(h + &block[&a] * &scale)))
                    .collect())
            }
            Tail::Growth(_) => {
                let three_halves = BigRational::new(3.into(), 2.into());
                let mut end = m + 1;
                while &three_halves / from_biguint(&self.q_range(m - 1, end - 1)) > *width {
                    end += 1;
                }
                let tail = three_halves / from_biguint(&self.q_range(m - 1, end - 1));
                Ok(self
                    .partial_series(m - 1, m, end)
                    .into_iter()
                    .map(|(a, s)| (a, RationalInterval::new(s.clone(), s + &tail)))
                    .collect())
            }
        }
    }

    /// The measure vector `μ_m`, normalized so that `Σ_a h_m(a) μ_m(a) = 1`.
    pub fn measure_vector(&self, m: usize) -> Result<MeasureVector, MeasureError> {
        self.measure_vector_within(m, &default_width())
    }

    pub fn measure_vector_within(&self, m: usize, width: &BigRational) -> Result<MeasureVector, MeasureError> {
        let stable = self.alphabets().stabilization;
        if m < stable {
            // Push the stable-level vector down through the incidence matrices.
            let top = self.measure_vector_within(stable, width)?;
            let p = self.direct_product(m, stable)?;
            let values = p
                .rows()
                .iter()
                .map(|&b| {
                    let v = top.values.iter().fold(RationalInterval::zero(), |acc, (&a, x)| {
                        &acc + &x.scale(&p.get(b, a))
                    });
                    (b, v)
                })
                .collect();
            return Ok(MeasureVector { level: m, values });
        }
        let v = self.v_vector_within(m, width)?;
        let h = self.heights(m);
        let norm = v.iter().fold(RationalInterval::zero(), |acc, (a, x)| &acc + &x.scale(&from_biguint(&h.values[a])));
        let values = v.into_iter().map(|(a, x)| (a, x.div_nonneg(&norm))).collect();
        Ok(MeasureVector { level: m, values })
    }

    /// `μ(T_n(a)) = h_n(a) μ_n(a)` and their sum.
    pub fn tower_masses(&self, n: usize) -> Result<(BTreeMap<Letter, RationalInterval>, RationalInterval), MeasureError> {
        let mu = self.measure_vector(n)?;
        let h = self.heights(n);
        let masses: BTreeMap<_, _> =
            mu.values.iter().map(|(a, x)| (*a, x.scale(&from_biguint(&h.values[a])))).collect();
        let total = masses.values().fold(RationalInterval::zero(), |acc, x| &acc + x);
        Ok((masses, total))
    }

    /// Bracket on `μ([u])` from the level-`n` towers.
    pub fn cylinder_at(&self, u: &str, n: usize) -> Result<RationalInterval, MeasureError> {
        check_binary(u)?;
        let images = self.level_images(n)?;
        let mu = self.measure_vector(n)?;
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        let overlap = int(u.len() as u64 - 1);
        for (a, img) in &images {
            let occ = int(occurrences(img.as_bytes(), u.as_bytes()));
            let x = &mu.values[a];
            lo += &occ * x.lo();
            hi += (&occ + &overlap) * x.hi();
        }
        Ok(RationalInterval::new(lo, hi))
    }

    /// `μ([u])`, raising the level until the bracket is at most `width` wide or the cap is reached.
    /// Words outside the language have measure 0.
    pub fn cylinder_measure(&self, u: &str, width: &BigRational) -> Result<CylinderMeasure, MeasureError> {
        check_binary(u)?;
        if !self.language(u.len())?.words.contains(u) {
            return Ok(CylinderMeasure {
                word: u.to_string(),
                bracket: RationalInterval::zero(),
                level: None,
                converged: true,
            });
        }
        let start = self.alphabets().stabilization.max(1);
        let mut best: Option<(RationalInterval, usize)> = None;
        for n in start.. {
            let next = match self.cylinder_at(u, n) {
                Ok(b) => b,
                Err(MeasureError::Word(WordError::CapExceeded { .. }))
                | Err(MeasureError::Morphism(MorphismError::Word(WordError::CapExceeded { .. })))
                    if best.is_some() =>
                {
                    let (bracket, level) = best.unwrap();
                    return Ok(CylinderMeasure { word: u.to_string(), bracket, level: Some(level), converged: false });
                }
                Err(e) => return Err(e),
            };
            let merged = match best {
                None => next,
                Some((b, _)) => RationalInterval::new(b.lo().max(next.lo()).clone(), b.hi().min(next.hi()).clone()),
            };
            if &merged.width() <= width {
                return Ok(CylinderMeasure { word: u.to_string(), bracket: merged, level: Some(n), converged: true });
            }
            best = Some((merged, n));
        }
        unreachable!()
    }

    /// Classifies each letter of `A_W` as in or out of `A_μ`.
    pub fn rank_report(&self) -> Result<RankReport, MeasureError> {
        let stable = self.alphabets().stable.clone();
        let letters: Vec<LetterVerdict> = match self.schedule().tail() {
            Tail::Periodic(period) => {
                let p = period.len();
                let first = self.alphabets().stabilization.max(self.schedule().tail_start() + 1);
                let qmax = period.iter().map(|s| s.cut()).max().unwrap();
                let bound = BigRational::new(BigInt::one(), BigInt::from(qmax + 1).pow(p as u32 + 1));
                let phases: Vec<_> = (first..first + p).map(|m| self.v_vector(m)).collect::<Result<_, _>>()?;
                stable
                    .iter()
                    .map(|&a| {
                        let liminf = phases.iter().map(|v| v[&a].lo().clone()).min().unwrap();
                        LetterVerdict {
                            letter: a,
                            membership: Membership::In,
                            evidence: Evidence::PeriodicMinimum { liminf, bound: bound.clone() },
                        }
                    })
                    .collect()
            }
            Tail::Growth(g) => {
                let (total, per) = g.layout.leading_terms();
                let unbounded = total.as_ref().is_some_and(|(k, _)| *k > (1, 0));
                let k = self.max_spacer_value() + 1;
                stable
                    .iter()
                    .map(|&a| {
                        let lead = per.get(&a).cloned().flatten();
                        let (membership, evidence) = match (&total, lead) {
                            (Some((tk, tc)), Some((lk, lc))) if *tk == lk => {
                                (Membership::In, Evidence::Proportional { c: lc / tc / int(2u32) })
                            }
                            (_, Some(((1, 0), lc))) if unbounded => {
                                let c = lc.to_integer().try_into().unwrap_or(u64::MAX).saturating_add(1);
                                (Membership::Out, Evidence::BoundedCount { c, k })
                            }
                            _ => (Membership::Undetermined, Evidence::None),
                        };
                        LetterVerdict { letter: a, membership, evidence }
                    })
                    .collect()
            }
        };
        let a_mu: BTreeSet<Letter> =
            letters.iter().filter(|l| l.membership == Membership::In).map(|l| l.letter).collect();
        let exact_finite_rank = if letters.iter().all(|l| l.membership == Membership::In) {
            Exactness::Exact
        } else if letters.iter().any(|l| l.membership == Membership::Out) {
            Exactness::NotExact
        } else {
            Exactness::Unknown
        };
        Ok(RankReport { stable_alphabet: stable, a_mu, exact_finite_rank, letters })
    }

    fn max_spacer_value(&self) -> u64 {
        self.schedule().max_spacer()
    }
}

fn check_binary(u: &str) -> Result<(), MeasureError> {
    if u.is_empty() {
        return Err(MeasureError::EmptyWord);
    }
    if u.bytes().any(|c| c != b'0' && c != b'1') {
        return Err(MeasureError::InvalidSymbol);
    }
    Ok(())
}

/// Number of (possibly overlapping) occurrences of `u` in `w`.
pub fn occurrences(w: &[u8], u: &[u8]) -> u64 {
    if u.len() > w.len() {
        return 0;
    }
    w.windows(u.len()).filter(|x| *x == u).count() as u64
}

/// Upper bound `CK/(q+1)` on the tower mass of a letter with `f_n + 1 <= C`.
pub fn bounded_count_mass(c: u64, k: u64, q: u64) -> BigRational {
    BigRational::new(BigInt::from(c) * k, BigInt::from(q + 1))
}

/// Convenience for tests and reports: `|w_n|_0 / |w_n|`.
pub fn zero_frequency(s: &Subshift, n: usize) -> BigRational {
    let zeros: BigUint = s.zero_count(n);
    from_biguint(&zeros) / from_biguint(&s.word_length(n))
}
