//! Eigenvalues: continuous ones exactly, measurable ones through necessary and
//! sufficient tests, plus the non-mixing certificate.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{int, RationalInterval};
use crate::measure::{Exactness, MeasureError, RankReport};
use crate::morphisms::MorphismError;
use crate::params::{CountRule, GrowthLayout, Letter, Tail};
use crate::words::{Subshift, WordError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpectraError {
    #[error("cannot parse {0:?} as a rational or as an approximation certificate a/q~eps")]
    BadAlpha(String),
    #[error("only rational phases p/q are supported here")]
    IrrationalPhase,
    #[error("letter {0} does not belong to the alphabet at level {1}")]
    LetterOutside(Letter, usize),
    #[error("need 1 <= m < n, got m = {m}, n = {n}")]
    LevelRange { m: usize, n: usize },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// Residues `|w_n| mod q` for `n >= first`, which are eventually periodic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LengthOrbit {
    pub modulus: u64,
    pub first: usize,
    /// `|w_{first+i}| mod q`.
    pub values: Vec<u64>,
    /// Index into `values` where the repeating part starts.
    pub cycle_start: usize,
}

impl LengthOrbit {
    pub fn at(&self, n: usize) -> u64 {
        assert!(n >= self.first);
        let i = n - self.first;
        if i < self.values.len() {
            return self.values[i];
        }
        let period = self.values.len() - self.cycle_start;
        self.values[self.cycle_start + (i - self.cycle_start) % period]
    }

    pub fn period(&self) -> usize {
        self.values.len() - self.cycle_start
    }

    /// Levels (absolute) of one full cycle.
    pub fn cycle_levels(&self) -> std::ops::Range<usize> {
        self.first + self.cycle_start..self.first + self.values.len()
    }
}

impl Subshift {
    pub fn length_orbit(&self, q: u64, first: usize) -> LengthOrbit {
        assert!(q >= 1);
        let (start, period) = self.schedule().residue_cycle(q);
        let mut x = (self.word_length(first) % q).to_u64().unwrap();
        let mut values = Vec::new();
        let mut seen: HashMap<(u64, usize), usize> = HashMap::new();
        let mut n = first;
        loop {
            if n >= start {
                let key = (x, (n - start) % period);
                if let Some(&i) = seen.get(&key) {
                    return LengthOrbit { modulus: q, first, values, cycle_start: i };
                }
                seen.insert(key, values.len());
            }
            values.push(x);
            let r = self.schedule().residue(n, q);
            x = (((r.cut as u128 + 1) * x as u128 + r.sum as u128) % q as u128) as u64;
            n += 1;
        }
    }
}

pub fn divisors(g: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (1..).take_while(|d| d * d <= g).filter(|d| g % d == 0).flat_map(|d| [d, g / d]).collect();
    out.sort_unstable();
    out.dedup();
    out
}

pub fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|k| k * k <= p).all(|k| p % k != 0)
}

/// `gcd{a - b : a, b ∈ A_W}`.
pub fn spacer_gcd(alphabet: &BTreeSet<Letter>) -> u64 {
    let lo = *alphabet.first().expect("nonempty alphabet");
    alphabet.iter().fold(0u64, |g, &a| g.gcd(&(a - lo)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EigenvalueReport {
    /// `q` such that `exp(2πi p/q)` is a continuous eigenvalue for every `p`.
    pub rational_denominators: BTreeSet<u64>,
    /// For each `q`, a level `n` with `q | h_{n+1}(a)` for every `a`.
    pub witness_levels: BTreeMap<u64, usize>,
    pub irrational_continuous: bool,
    pub spacer_gcd: u64,
    pub q_max: u64,
    pub weakly_mixing: bool,
    pub citations: Vec<String>,
}

/// The maximal equicontinuous factor, a cyclic rotation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquicontinuousFactor {
    pub q_max: u64,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixingSample {
    pub k: usize,
    #[serde(with = "crate::linalg::decimal")]
    pub length: BigUint,
    pub min_zeros: usize,
    pub max_zeros: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixingCertificate {
    pub bound: u64,
    pub samples: Vec<MixingSample>,
    pub truncated: bool,
    pub conclusion: String,
    pub citations: Vec<String>,
}

/// A real `α`: exact rational, or `a/q` with `|α - a/q| <= eps`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Alpha {
    Rational {
        #[serde(with = "crate::linalg::ratio_string")]
        value: BigRational,
    },
    Approximate {
        #[serde(with = "crate::linalg::ratio_string")]
        center: BigRational,
        #[serde(with = "crate::linalg::ratio_string")]
        eps: BigRational,
    },
}

impl FromStr for Alpha {
    type Err = SpectraError;
    fn from_str(s: &str) -> Result<Self, SpectraError> {
        let bad = || SpectraError::BadAlpha(s.to_string());
        match s.split_once('~') {
            Some((c, e)) => {
                let center: BigRational = c.trim().parse().map_err(|_| bad())?;
                let eps: BigRational = e.trim().parse().map_err(|_| bad())?;
                if eps.is_negative() {
                    return Err(bad());
                }
                Ok(Alpha::Approximate { center, eps })
            }
            None => Ok(Alpha::Rational { value: s.trim().parse().map_err(|_| bad())? }),
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Rational { value } => write!(f, "{value}"),
            Alpha::Approximate { center, eps } => write!(f, "{center}~{eps}"),
        }
    }
}

/// `‖x‖`, the distance to the nearest integer.
pub fn dist_to_int(x: &BigRational) -> BigRational {
    let frac = x - x.floor();
    let other = BigRational::one() - &frac;
    frac.min(other)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VeechVerdict {
    /// `exp(2πiα)` is not a measurable eigenvalue.
    Excluded,
    /// The necessary condition holds.
    Consistent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VeechRow {
    pub level: usize,
    pub values: BTreeMap<Letter, RationalInterval>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VeechWitness {
    /// `‖α h_n(a)‖ = value >= 1/q` at `level` and every `period` levels after.
    Recurring {
        level: usize,
        letter: Letter,
        #[serde(with = "crate::linalg::ratio_string")]
        value: BigRational,
        period: usize,
    },
    /// `‖α h_n(b)‖ + ‖α h_n(c)‖ >= ‖α (b - c)‖ >= bound` at every level.
    Difference {
        letters: (Letter, Letter),
        #[serde(with = "crate::linalg::ratio_string")]
        bound: BigRational,
    },
    /// `‖α h_n(a)‖ = 0` for every `a` in `A_μ` from `level` on.
    VanishesFrom { level: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VeechTrace {
    pub alpha: Alpha,
    pub letters: BTreeSet<Letter>,
    pub skipped_letters: BTreeSet<Letter>,
    pub table: Vec<VeechRow>,
    pub verdict: VeechVerdict,
    pub witness: Option<VeechWitness>,
    pub warnings: Vec<String>,
    pub citations: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RationalStatus {
    /// Measurable and continuous rational eigenvalues coincide.
    EqualsContinuous { denominators: BTreeSet<u64> },
    /// Each candidate must be checked with the Veech test.
    ReferToVeech,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrrationalStatus {
    /// There are no irrational measurable eigenvalues.
    None,
    /// Open: not settled by the available criteria when `A_μ` is a single letter.
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnownEigenvalue {
    /// `exp(2πi/p)`.
    pub p: u64,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurableReport {
    pub exact_finite_rank: Exactness,
    pub a_mu: BTreeSet<Letter>,
    pub rational: RationalStatus,
    pub irrational: IrrationalStatus,
    pub known_measurable: Vec<KnownEigenvalue>,
    pub topologically_weakly_mixing: bool,
    pub notes: Vec<String>,
    pub citations: Vec<String>,
}

/// Exact data of `Σ_{w ∈ W_{m,n}(a,b)} λ^{⟨ℓ(w), h_m⟩}` for `λ = exp(2πi p/q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SufficiencySum {
    pub m: usize,
    pub n: usize,
    pub a: Letter,
    pub b: Letter,
    #[serde(with = "crate::linalg::ratio_string")]
    pub phase: BigRational,
    /// `coefficients[j]` counts the terms equal to `exp(2πi j/q)`.
    pub coefficients: Vec<u64>,
    /// `|τ_{[m,n)}(b)|_a`.
    pub occurrences: u64,
    /// `|τ_{[m,n)}(b)|`.
    pub image_length: u64,
    pub magnitude: f64,
    /// Bound on the floating-point error of `magnitude`.
    pub magnitude_error: f64,
    pub ratio: f64,
    /// The ratio in exact form when the sum is real (`q <= 2`).
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_ratio")]
    pub exact_ratio: Option<BigRational>,
}

mod opt_ratio {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&r.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigRational>, D::Error> {
        let v: Option<String> = Option::deserialize(d)?;
        v.map(|t| t.parse().map_err(serde::de::Error::custom)).transpose()
    }
}

const CITE_CONTINUOUS: &str = "continuous rational eigenvalue criterion: q | |w_n| + a for every later spacer a";
const CITE_NO_IRRATIONAL: &str = "minimal Ferenczi subshifts have no irrational continuous eigenvalues";
const CITE_QMAX: &str = "maximal equicontinuous factor is the rotation on Z/q_max Z, q_max | gcd(a - b)";
const CITE_MIXING: &str = "zero-count spread of factors of length |w_k| is at most the largest spacer";
const CITE_VEECH: &str = "Veech necessary condition: ||α h_n(a)|| -> 0 for a in A_mu";
const CITE_EXACT: &str = "exact finite rank: measurable eigenvalues are continuous";
const CITE_TWO_LETTERS: &str = "two letters in A_mu rule out irrational measurable eigenvalues";
const CITE_D1_OPEN: &str = "irrational measurable eigenvalues with a single letter in A_mu: open question";
const CITE_D1_FAMILY: &str = "family a^n b a^n / a^n b a^(n-2) b a: rational measurable eigenvalues are continuous";
const CITE_REALIZATION: &str = "family U^(p g(n)) W^p v^(p-1) a v: exp(2 pi i/p) is measurable, system weakly mixing";

impl Subshift {
    pub fn continuous_eigenvalues(&self) -> EigenvalueReport {
        let alph = self.alphabets();
        let g = spacer_gcd(&alph.stable);
        let lo = *alph.stable.first().unwrap();
        let first = alph.stabilization - 1;
        let mut witness_levels = BTreeMap::new();
        for q in divisors(g) {
            let target = (q - lo % q) % q;
            let orbit = self.length_orbit(q, first);
            if let Some(i) = orbit.values.iter().position(|&x| x == target) {
                witness_levels.insert(q, first + i);
            }
        }
        let rational_denominators: BTreeSet<u64> = witness_levels.keys().copied().collect();
        let q_max = *rational_denominators.last().unwrap();
        EigenvalueReport {
            rational_denominators,
            witness_levels,
            irrational_continuous: false,
            spacer_gcd: g,
            q_max,
            weakly_mixing: q_max == 1,
            citations: vec![CITE_CONTINUOUS.into(), CITE_NO_IRRATIONAL.into(), CITE_QMAX.into()],
        }
    }

    pub fn max_equicontinuous_factor(&self) -> EquicontinuousFactor {
        let q_max = self.continuous_eigenvalues().q_max;
        let description = if q_max == 1 { "trivial (one point)".to_string() } else { format!("rotation x -> x + 1 on Z/{q_max}Z") };
        EquicontinuousFactor { q_max, description }
    }

    /// Zero-count spreads `b(|w_k|) - a(|w_k|)` for `k <= k_max`, stopping at the cap.
    pub fn mixing_certificate(&self, k_max: usize) -> MixingCertificate {
        let mut samples = Vec::new();
        let mut truncated = false;
        for k in 0..=k_max {
            let length = self.word_length(k);
            let Some(len) = length.to_usize() else {
                truncated = true;
                break;
            };
            match self.factor_stats(len) {
                Ok((lo, hi)) => samples.push(MixingSample { k, length, min_zeros: lo, max_zeros: hi }),
                Err(_) => {
                    truncated = true;
                    break;
                }
            }
        }
        MixingCertificate {
            bound: self.schedule().max_spacer(),
            samples,
            truncated,
            conclusion: "not topologically mixing".into(),
            citations: vec![CITE_MIXING.into()],
        }
    }

    /// Tabulates `‖α h_n(a)‖` over `A_μ` for `1 <= n <= max_level` and applies the necessary condition.
    pub fn veech_test(&self, alpha: &Alpha, max_level: usize) -> Result<VeechTrace, SpectraError> {
        let rank = self.rank_report()?;
        self.veech_with_rank(alpha, max_level, &rank)
    }

    pub fn veech_with_rank(&self, alpha: &Alpha, max_level: usize, rank: &RankReport) -> Result<VeechTrace, SpectraError> {
        let letters = rank.a_mu.clone();
        let skipped: BTreeSet<Letter> = rank
            .letters
            .iter()
            .filter(|l| l.membership == crate::measure::Membership::Undetermined)
            .map(|l| l.letter)
            .collect();
        let mut warnings = Vec::new();
        if !skipped.is_empty() {
            warnings.push(format!("letters {skipped:?} have undetermined membership in A_mu and were left out"));
        }
        let first = self.alphabets().stabilization.max(1);
        let table: Vec<VeechRow> = (first..=max_level.max(first))
            .map(|n| {
                let h = self.heights(n);
                let values = letters
                    .iter()
                    .map(|a| (*a, norm_times(alpha, &h.values[a])))
                    .collect();
                VeechRow { level: n, values }
            })
            .collect();
        let (verdict, witness) = match alpha {
            Alpha::Rational { value } => self.rational_verdict(value, &letters, first),
            Alpha::Approximate { center, eps } => approximate_verdict(center, eps, &letters),
        };
        if letters.is_empty() {
            warnings.push("no letter is certified in A_mu".into());
        }
        Ok(VeechTrace {
            alpha: alpha.clone(),
            letters,
            skipped_letters: skipped,
            table,
            verdict,
            witness,
            warnings,
            citations: vec![CITE_VEECH.into()],
        })
    }

    fn rational_verdict(&self, alpha: &BigRational, letters: &BTreeSet<Letter>, first: usize) -> (VeechVerdict, Option<VeechWitness>) {
        if letters.is_empty() {
            return (VeechVerdict::Inconclusive, None);
        }
        let q = alpha.denom().to_u64().expect("denominator fits in u64");
        let p = alpha.numer().mod_floor(&BigInt::from(q)).to_u64().unwrap();
        // h_n(a) = a + |w_{n-1}|, so follow |w_{n-1}| mod q from level `first`.
        let orbit = self.length_orbit(q, first - 1);
        let value = |n: usize, a: Letter| {
            let h = (orbit.at(n - 1) + a % q) % q;
            dist_to_int(&BigRational::new(BigInt::from(p * h % q), BigInt::from(q)))
        };
        let cycle: Vec<usize> = orbit.cycle_levels().map(|k| k + 1).collect();
        for &n in &cycle {
            for &a in letters {
                let v = value(n, a);
                if !v.is_zero() {
                    let period = orbit.period();
                    return (VeechVerdict::Excluded, Some(VeechWitness::Recurring { level: n, letter: a, value: v, period }));
                }
            }
        }
        // Zero on the whole cycle; find the first level from which it stays zero.
        let mut from = cycle[0];
        while from > first && letters.iter().all(|&a| value(from - 1, a).is_zero()) {
            from -= 1;
        }
        (VeechVerdict::Consistent, Some(VeechWitness::VanishesFrom { level: from }))
    }

    pub fn measurable_eigenvalue_report(&self) -> Result<MeasurableReport, SpectraError> {
        let rank = self.rank_report()?;
        let cont = self.continuous_eigenvalues();
        let mut citations = Vec::new();
        let mut notes = Vec::new();
        let mut known = Vec::new();
        let (rational, irrational) = match rank.exact_finite_rank {
            Exactness::Exact => {
                citations.push(CITE_EXACT.into());
                (RationalStatus::EqualsContinuous { denominators: cont.rational_denominators.clone() }, IrrationalStatus::None)
            }
            _ if rank.a_mu.len() >= 2 => {
                citations.push(CITE_TWO_LETTERS.into());
                (RationalStatus::ReferToVeech, IrrationalStatus::None)
            }
            _ if rank.d_mu() == Some(1) => {
                citations.push(CITE_D1_OPEN.into());
                notes.push("irrational measurable eigenvalues are undetermined: open question".into());
                let rational = if self.is_dwmu_family() {
                    citations.push(CITE_D1_FAMILY.into());
                    RationalStatus::EqualsContinuous { denominators: cont.rational_denominators.clone() }
                } else {
                    RationalStatus::ReferToVeech
                };
                (rational, IrrationalStatus::Undetermined)
            }
            _ => {
                notes.push("membership in A_mu is undetermined for some letters".into());
                (RationalStatus::Undetermined, IrrationalStatus::Undetermined)
            }
        };
        if let Some(p) = self.realization_prime() {
            citations.push(CITE_REALIZATION.into());
            known.push(KnownEigenvalue { p, note: format!("exp(2 pi i/{p}) is a measurable eigenvalue that is not continuous") });
        }
        Ok(MeasurableReport {
            exact_finite_rank: rank.exact_finite_rank,
            a_mu: rank.a_mu,
            rational,
            irrational,
            known_measurable: known,
            topologically_weakly_mixing: cont.weakly_mixing,
            notes,
            citations,
        })
    }

    /// Whether the tail is `a a^{k+1} b a^{k-1}` with `a > b > 0`, raw index equal to stage.
    fn is_dwmu_family(&self) -> bool {
        let Tail::Growth(g) = self.schedule().tail() else { return false };
        let GrowthLayout::Runs { runs } = &g.layout else { return false };
        if g.shift != 0 || g.batch != 1 || runs.len() != 4 {
            return false;
        }
        let single = |i: usize| (runs[i].word.len() == 1).then(|| runs[i].word[0]);
        let (Some(a), Some(a2), Some(b), Some(a3)) = (single(0), single(1), single(2), single(3)) else { return false };
        a == a2
            && a == a3
            && a > b
            && b > 0
            && runs[0].repeat == CountRule::constant(1)
            && runs[1].repeat == (CountRule::Affine { base: 1, slope: 1 })
            && runs[2].repeat == CountRule::constant(1)
            && runs[3].repeat == (CountRule::Affine { base: -1, slope: 1 })
    }

    /// `p` when the tail has the shape `v, U^{p g}, W^p, v^{p-1}` meeting the realization hypotheses.
    fn realization_prime(&self) -> Option<u64> {
        let Tail::Growth(g) = self.schedule().tail() else { return None };
        let GrowthLayout::Runs { runs } = &g.layout else { return None };
        let (head, u, w, tail) = match runs.as_slice() {
            [h, u, w, t] => (h, u, Some(w), t),
            [h, u, t] => (h, u, None, t),
            _ => return None,
        };
        let v = match head.word.as_slice() {
            [v] if head.repeat == CountRule::constant(1) => *v,
            _ => return None,
        };
        let CountRule::Exponential { scale, base } = u.repeat else { return None };
        let p = tail.repeat.limit()? + 1;
        if !tail.repeat.is_bounded() || tail.word != [v] || !is_prime(p) || base < 2 || scale % p != 0 {
            return None;
        }
        if let Some(w) = w {
            if w.repeat != CountRule::constant(p) || w.word.contains(&v) {
                return None;
            }
        }
        let w_letters: Vec<Letter> = w.map(|w| w.word.clone()).unwrap_or_default();
        let mut all: Vec<Letter> = u.word.iter().chain(&w_letters).copied().chain([v]).collect();
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        let u_ok = u.word.iter().all(|x| (x + 1) % p == 0);
        let gap = u.word.iter().any(|x| w_letters.iter().chain([&v]).any(|y| *y == x + 1));
        (all.len() == n && u_ok && gap).then_some(p)
    }

    /// `Σ λ^{⟨ℓ(w), h_m⟩}` over suffixes `w` of `τ_{[m,n)}(b)` starting with `a`, with `λ = exp(2πi·phase)`.
    pub fn sufficiency_sum(&self, m: usize, n: usize, a: Letter, b: Letter, phase: &BigRational) -> Result<SufficiencySum, SpectraError> {
        if m == 0 || m >= n {
            return Err(SpectraError::LevelRange { m, n });
        }
        if !self.alphabets().level(m).contains(&a) {
            return Err(SpectraError::LetterOutside(a, m));
        }
        if !self.alphabets().level(n).contains(&b) {
            return Err(SpectraError::LetterOutside(b, n));
        }
        let q = phase.denom().to_u64().ok_or(SpectraError::IrrationalPhase)?;
        let p = phase.numer().mod_floor(&BigInt::from(q)).to_u64().unwrap();
        let tel = self.telescope(crate::morphisms::Variant::Proper, m, n)?;
        let word = tel.image(b).expect("b in the domain");
        let h: BTreeMap<Letter, u64> = self
            .heights(m)
            .values
            .iter()
            .map(|(&c, x)| (c, (x % q).to_u64().unwrap()))
            .collect();
        let mut coefficients = vec![0u64; q as usize];
        let mut s = 0u64;
        for &c in word.iter().rev() {
            s = (s + h[&c]) % q;
            if c == a {
                coefficients[((p as u128 * s as u128) % q as u128) as usize] += 1;
            }
        }
        let occurrences: u64 = coefficients.iter().sum();
        let (re, im) = coefficients.iter().enumerate().fold((0.0f64, 0.0f64), |(re, im), (j, &c)| {
            let t = std::f64::consts::TAU * j as f64 / q as f64;
            (re + c as f64 * t.cos(), im + c as f64 * t.sin())
        });
        let magnitude = re.hypot(im);
        let magnitude_error = 8.0 * f64::EPSILON * (occurrences as f64 + 1.0) * (q as f64).max(1.0);
        // An empty sum has ratio 0 by convention.
        let exact_ratio = match q {
            _ if occurrences == 0 => Some(BigRational::zero()),
            1 => Some(BigRational::one()),
            2 => Some(BigRational::new(
                (BigInt::from(coefficients[0]) - BigInt::from(coefficients[1])).abs(),
                BigInt::from(occurrences),
            )),
            _ => None,
        };
        let ratio = match &exact_ratio {
            Some(r) => r.to_f64().unwrap(),
            None => magnitude / occurrences as f64,
        };
        Ok(SufficiencySum {
            m,
            n,
            a,
            b,
            phase: phase.clone(),
            coefficients,
            occurrences,
            image_length: word.len() as u64,
            magnitude,
            magnitude_error,
            ratio,
            exact_ratio,
        })
    }
}

/// Bracket on `‖α h‖`.
fn norm_times(alpha: &Alpha, h: &BigUint) -> RationalInterval {
    let h = crate::linalg::from_biguint(h);
    match alpha {
        Alpha::Rational { value } => RationalInterval::exact(dist_to_int(&(value * h))),
        Alpha::Approximate { center, eps } => {
            let mid = dist_to_int(&(center * &h));
            let slack = eps * &h;
            let half = BigRational::new(1.into(), 2.into());
            let lo = (&mid - &slack).max(BigRational::zero());
            let hi = (&mid + &slack).min(half);
            RationalInterval::new(lo.clone().min(hi.clone()), hi.max(lo))
        }
    }
}

fn approximate_verdict(center: &BigRational, eps: &BigRational, letters: &BTreeSet<Letter>) -> (VeechVerdict, Option<VeechWitness>) {
    let ls: Vec<Letter> = letters.iter().copied().collect();
    let mut best: Option<(BigRational, (Letter, Letter))> = None;
    for (i, &b) in ls.iter().enumerate() {
        for &c in &ls[i + 1..] {
            let diff = int(c - b);
            let bound = dist_to_int(&(center * &diff)) - eps * &diff;
            if bound.is_positive() && best.as_ref().map_or(true, |(x, _)| &bound > x) {
                best = Some((bound, (b, c)));
            }
        }
    }
    match best {
        Some((bound, letters)) => (VeechVerdict::Excluded, Some(VeechWitness::Difference { letters, bound })),
        None => (VeechVerdict::Inconclusive, None),
    }
}
