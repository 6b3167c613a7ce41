//! Growth rules: stage contents produced from the stage index.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::{Letter, ParamError, SpacerStage};

/// A nonnegative, nondecreasing integer sequence indexed by the raw stage index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountRule {
    /// `base + slope * r`.
    Affine { base: i64, slope: i64 },
    /// `scale * base^r`.
    Exponential { scale: u64, base: u64 },
}

/// Asymptotic size class of a rule: `(exponential base, polynomial degree)`,
/// compared lexicographically.
pub type GrowthKey = (u64, u32);

impl CountRule {
    pub fn constant(c: u64) -> Self {
        CountRule::Affine { base: c as i64, slope: 0 }
    }

    /// Value at raw index `r`.
    ///
    /// # Panics
    /// If the value is negative or does not fit in `u64`; validated schedules never
    /// produce negative values, and stages with more than `u64::MAX` spacers cannot
    /// be processed anyway.
    pub fn value(&self, r: u64) -> u64 {
        match *self {
            CountRule::Affine { base, slope } => {
                let v = base as i128 + slope as i128 * r as i128;
                u64::try_from(v).unwrap_or_else(|_| panic!("count rule {self:?} out of range at {r}"))
            }
            CountRule::Exponential { scale, base } => u32::try_from(r)
                .ok()
                .and_then(|e| base.checked_pow(e))
                .and_then(|p| p.checked_mul(scale))
                .unwrap_or_else(|| panic!("count rule {self:?} overflows u64 at {r}")),
        }
    }

    pub fn value_mod(&self, r: u64, m: u64) -> u64 {
        match *self {
            CountRule::Affine { base, slope } => {
                let v = base as i128 + slope as i128 * r as i128;
                v.rem_euclid(m as i128) as u64
            }
            CountRule::Exponential { scale, base } => {
                (scale as u128 % m as u128 * pow_mod(base, r, m) as u128 % m as u128) as u64
            }
        }
    }

    /// Checks that the rule is nonnegative and nondecreasing from raw index `from` on.
    pub fn validate_from(&self, from: u64) -> Result<(), String> {
        match *self {
            CountRule::Affine { base, slope } => {
                if slope < 0 {
                    return Err(format!("affine slope {slope} is negative"));
                }
                if (base as i128) + (slope as i128) * (from as i128) < 0 {
                    return Err(format!("affine rule is negative at index {from}"));
                }
                Ok(())
            }
            CountRule::Exponential { base, .. } => {
                if base == 0 {
                    Err("exponential base must be at least 1".into())
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.limit().is_some()
    }

    /// The eventual constant value of a bounded rule.
    pub fn limit(&self) -> Option<u64> {
        match *self {
            CountRule::Affine { base, slope: 0 } => Some(base.max(0) as u64),
            CountRule::Affine { .. } => None,
            CountRule::Exponential { scale: 0, .. } => Some(0),
            CountRule::Exponential { scale, base: 1 } => Some(scale),
            CountRule::Exponential { .. } => None,
        }
    }

    /// Smallest `r >= from` with `value(r) >= t`, if any.
    pub fn first_at_least(&self, t: u64, from: u64) -> Option<u64> {
        match *self {
            CountRule::Affine { base, slope } => {
                let t = t as i128;
                let at_from = base as i128 + slope as i128 * from as i128;
                if at_from >= t {
                    return Some(from);
                }
                if slope == 0 {
                    return None;
                }
                let need = t - base as i128;
                let r = Integer::div_ceil(&need, &(slope as i128));
                Some(r.max(from as i128) as u64)
            }
            CountRule::Exponential { scale, base } => {
                if scale == 0 {
                    return (t == 0).then_some(from);
                }
                let mut r = from;
                loop {
                    let v = u32::try_from(r).ok().and_then(|e| base.checked_pow(e)).and_then(|p| p.checked_mul(scale));
                    match v {
                        Some(v) if v >= t => return Some(r),
                        None => return Some(r),
                        _ if base <= 1 => return None,
                        _ => r += 1,
                    }
                }
            }
        }
    }

    /// `(start, period)` such that `value_mod(r, m)` is periodic for `r >= start`.
    fn residue_cycle(&self, m: u64) -> (u64, u64) {
        match *self {
            CountRule::Affine { .. } => (0, m.max(1)),
            CountRule::Exponential { base, .. } => {
                let mut seen = BTreeMap::new();
                let mut x = 1 % m;
                let mut r = 0u64;
                loop {
                    if let Some(&first) = seen.get(&x) {
                        return (first, r - first);
                    }
                    seen.insert(x, r);
                    x = ((x as u128 * base as u128) % m as u128) as u64;
                    r += 1;
                }
            }
        }
    }

    /// Leading asymptotic term, or `None` for the zero sequence.
    pub fn leading(&self) -> Option<(GrowthKey, BigRational)> {
        let int = |v: i64| BigRational::from_integer(BigInt::from(v));
        match *self {
            CountRule::Affine { base, slope } => {
                if slope > 0 {
                    Some(((1, 1), int(slope)))
                } else if base > 0 {
                    Some(((1, 0), int(base)))
                } else {
                    None
                }
            }
            CountRule::Exponential { scale, base } => {
                if scale == 0 || base == 0 {
                    None
                } else {
                    Some(((base, 0), BigRational::from_integer(BigInt::from(scale))))
                }
            }
        }
    }
}

fn pow_mod(b: u64, mut e: u64, m: u64) -> u64 {
    let m = m as u128;
    let mut acc = 1u128 % m;
    let mut b = b as u128 % m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc as u64
}

/// One block of a run layout: `word` repeated `repeat(r)` times.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub word: Vec<Letter>,
    pub repeat: CountRule,
}

/// How a growth rule fills a stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GrowthLayout {
    /// `cut(r)` spacers read cyclically from `spacer_pattern`, restarting at each stage.
    Cyclic { cut: CountRule, spacer_pattern: Vec<Letter> },
    /// Concatenation of repeated words.
    Runs { runs: Vec<Run> },
}

/// Stage data reduced modulo some integer.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StageResidue {
    pub cut: u64,
    pub sum: u64,
    pub counts: BTreeMap<Letter, u64>,
    pub letters: BTreeSet<Letter>,
}

impl StageResidue {
    pub fn of_stage(stage: &SpacerStage, m: u64) -> Self {
        let counts: BTreeMap<_, _> = stage.counts().into_iter().map(|(k, v)| (k, v % m)).collect();
        let sum = stage.spacers().iter().fold(0u128, |s, &a| (s + a as u128) % m as u128) as u64;
        StageResidue {
            cut: stage.cut() % m,
            sum,
            letters: stage.letters(),
            counts,
        }
    }

    /// Residue of the stage obtained by gluing `self`-blocks with the spacers of `next`.
    pub fn merge(&self, next: &StageResidue, m: u64) -> Self {
        let mm = m as u128;
        let k = (next.cut as u128 + 1) % mm;
        let cut = ((self.cut as u128 + 1) * k % mm + mm - 1 % mm) % mm;
        let sum = (k * self.sum as u128 + next.sum as u128) % mm;
        let mut counts = BTreeMap::new();
        for l in self.counts.keys().chain(next.counts.keys()) {
            let a = *self.counts.get(l).unwrap_or(&0) as u128;
            let b = *next.counts.get(l).unwrap_or(&0) as u128;
            counts.insert(*l, ((k * a + b) % mm) as u64);
        }
        StageResidue {
            cut: cut as u64,
            sum: sum as u64,
            counts,
            letters: self.letters.union(&next.letters).copied().collect(),
        }
    }
}

impl GrowthLayout {
    pub fn validate_from(&self, from: u64) -> Result<(), String> {
        match self {
            GrowthLayout::Cyclic { cut, spacer_pattern } => {
                if spacer_pattern.is_empty() {
                    return Err("empty spacer pattern".into());
                }
                cut.validate_from(from)?;
                if cut.value(from) == 0 {
                    return Err(format!("cut rule is zero at index {from}"));
                }
                Ok(())
            }
            GrowthLayout::Runs { runs } => {
                if runs.is_empty() {
                    return Err("no runs".into());
                }
                for (i, run) in runs.iter().enumerate() {
                    if run.word.is_empty() {
                        return Err(format!("run {i} has an empty word"));
                    }
                    run.repeat.validate_from(from).map_err(|e| format!("run {i}: {e}"))?;
                }
                if self.cut(from) == 0 {
                    return Err(format!("runs produce an empty stage at index {from}"));
                }
                Ok(())
            }
        }
    }

    pub fn cut(&self, r: u64) -> u64 {
        match self {
            GrowthLayout::Cyclic { cut, .. } => cut.value(r),
            GrowthLayout::Runs { runs } => runs
                .iter()
                .map(|run| run.repeat.value(r).checked_mul(run.word.len() as u64).expect("stage size overflow"))
                .fold(0u64, |a, b| a.checked_add(b).expect("stage size overflow")),
        }
    }

    pub fn counts(&self, r: u64) -> BTreeMap<Letter, u64> {
        let mut out = BTreeMap::new();
        match self {
            GrowthLayout::Cyclic { cut, spacer_pattern } => {
                let q = cut.value(r);
                let p = spacer_pattern.len() as u64;
                let (full, rem) = (q / p, q % p);
                for (j, &l) in spacer_pattern.iter().enumerate() {
                    *out.entry(l).or_insert(0) += full + u64::from((j as u64) < rem);
                }
            }
            GrowthLayout::Runs { runs } => {
                for run in runs {
                    let k = run.repeat.value(r);
                    for &l in &run.word {
                        *out.entry(l).or_insert(0) += k;
                    }
                }
            }
        }
        out.retain(|_, v| *v > 0);
        out
    }

    pub fn stage(&self, r: u64) -> Vec<Letter> {
        match self {
            GrowthLayout::Cyclic { cut, spacer_pattern } => {
                spacer_pattern.iter().copied().cycle().take(cut.value(r) as usize).collect()
            }
            GrowthLayout::Runs { runs } => {
                let mut out = Vec::new();
                for run in runs {
                    for _ in 0..run.repeat.value(r) {
                        out.extend_from_slice(&run.word);
                    }
                }
                out
            }
        }
    }

    /// Letters present at raw index `r`, without evaluating the (possibly huge) counts.
    pub fn letters(&self, r: u64) -> BTreeSet<Letter> {
        match self {
            GrowthLayout::Cyclic { cut, spacer_pattern } => {
                let q = cut.first_at_least(spacer_pattern.len() as u64, r).filter(|&s| s == r);
                let n = if q.is_some() { spacer_pattern.len() } else { cut.value(r) as usize };
                spacer_pattern[..n].iter().copied().collect()
            }
            GrowthLayout::Runs { runs } => runs
                .iter()
                .filter(|run| run.repeat.first_at_least(1, r) == Some(r))
                .flat_map(|run| run.word.iter().copied())
                .collect(),
        }
    }

    /// Letters present at every sufficiently large raw index.
    pub fn eventual_letters(&self) -> BTreeSet<Letter> {
        match self {
            GrowthLayout::Cyclic { cut, spacer_pattern } => {
                let n = cut.limit().map_or(spacer_pattern.len(), |c| (c as usize).min(spacer_pattern.len()));
                spacer_pattern[..n].iter().copied().collect()
            }
            GrowthLayout::Runs { runs } => runs
                .iter()
                .filter(|run| run.repeat.first_at_least(1, 0).is_some())
                .flat_map(|run| run.word.iter().copied())
                .collect(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            GrowthLayout::Cyclic { cut, .. } => cut.is_bounded(),
            GrowthLayout::Runs { runs } => runs.iter().all(|run| run.repeat.is_bounded()),
        }
    }

    pub fn letter_universe(&self) -> BTreeSet<Letter> {
        match self {
            GrowthLayout::Cyclic { spacer_pattern, .. } => spacer_pattern.iter().copied().collect(),
            GrowthLayout::Runs { runs } => runs.iter().flat_map(|r| r.word.iter().copied()).collect(),
        }
    }

    pub fn residue(&self, r: u64, m: u64) -> StageResidue {
        let mut counts = BTreeMap::new();
        match self {
            GrowthLayout::Cyclic { cut, spacer_pattern } => {
                let p = spacer_pattern.len() as u64;
                let big = p * m;
                let q = cut.value_mod(r, big);
                let (full, rem) = (q / p, q % p);
                for (j, &l) in spacer_pattern.iter().enumerate() {
                    let c = counts.entry(l).or_insert(0u64);
                    *c = (*c + full + u64::from((j as u64) < rem)) % m;
                }
            }
            GrowthLayout::Runs { runs } => {
                for run in runs {
                    let k = run.repeat.value_mod(r, m);
                    for &l in &run.word {
                        let c = counts.entry(l).or_insert(0u64);
                        *c = (*c + k) % m;
                    }
                }
            }
        }
        let cut = match self {
            GrowthLayout::Cyclic { cut, .. } => cut.value_mod(r, m),
            GrowthLayout::Runs { .. } => counts.values().fold(0u64, |a, &b| (a + b) % m),
        };
        let sum = counts
            .iter()
            .fold(0u128, |s, (&l, &c)| (s + (l as u128 % m as u128) * c as u128) % m as u128) as u64;
        let letters = self.letters(r);
        counts.retain(|l, _| letters.contains(l));
        StageResidue { cut, sum, counts, letters }
    }

    /// `(start, period)` such that `residue(r, m)` is periodic in `r >= start`.
    pub fn residue_cycle(&self, m: u64) -> (u64, u64) {
        let mut start = 0u64;
        let mut period = 1u64;
        let mut absorb = |(s, p): (u64, u64)| {
            start = start.max(s);
            period = period.lcm(&p);
        };
        match self {
            GrowthLayout::Cyclic { cut, spacer_pattern } => {
                absorb(cut.residue_cycle(spacer_pattern.len() as u64 * m));
                for t in 1..=spacer_pattern.len() as u64 {
                    if let Some(s) = cut.first_at_least(t, 0) {
                        absorb((s, 1));
                    }
                }
            }
            GrowthLayout::Runs { runs } => {
                for run in runs {
                    absorb(run.repeat.residue_cycle(m));
                    if let Some(s) = run.repeat.first_at_least(1, 0) {
                        absorb((s, 1));
                    }
                }
            }
        }
        (start, period)
    }

    /// Leading asymptotic terms of the stage size and of each letter count.
    pub fn leading_terms(&self) -> (Option<(GrowthKey, BigRational)>, BTreeMap<Letter, Option<(GrowthKey, BigRational)>>) {
        fn add(acc: &mut Option<(GrowthKey, BigRational)>, term: Option<(GrowthKey, BigRational)>) {
            let Some((k, c)) = term else { return };
            match acc {
                Some((ak, ac)) if *ak == k => *ac += c,
                Some((ak, _)) if *ak > k => {}
                _ => *acc = Some((k, c)),
            }
        }
        let mut total = None;
        let mut per = BTreeMap::new();
        match self {
            GrowthLayout::Cyclic { cut, spacer_pattern } => {
                let lead = cut.leading();
                add(&mut total, lead.clone());
                let p = BigRational::from_integer(BigInt::from(spacer_pattern.len()));
                for &l in spacer_pattern {
                    let mult = spacer_pattern.iter().filter(|&&x| x == l).count();
                    let term = if let Some(n) = cut.limit() {
                        let c = spacer_pattern.iter().cycle().take(n as usize).filter(|&&x| x == l).count();
                        (c > 0).then(|| ((1, 0), BigRational::from_integer(BigInt::from(c))))
                    } else {
                        lead.clone().map(|(k, c)| (k, c * BigRational::from_integer(BigInt::from(mult)) / p.clone()))
                    };
                    per.insert(l, term);
                }
            }
            GrowthLayout::Runs { runs } => {
                for run in runs {
                    let lead = run.repeat.leading();
                    add(
                        &mut total,
                        lead.clone().map(|(k, c)| (k, c * BigRational::from_integer(BigInt::from(run.word.len())))),
                    );
                    for &l in &run.word {
                        add(per.entry(l).or_insert(None), lead.clone());
                    }
                }
            }
        }
        (total, per)
    }
}

/// Growth tail: tail stage `n` glues the raw stages `shift + batch*n .. shift + batch*(n+1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthTail {
    #[serde(flatten)]
    pub layout: GrowthLayout,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub shift: i64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub batch: u64,
}

fn is_zero(v: &i64) -> bool {
    *v == 0
}
fn is_one(v: &u64) -> bool {
    *v == 1
}
fn one() -> u64 {
    1
}

impl GrowthTail {
    pub fn new(layout: GrowthLayout) -> Self {
        GrowthTail { layout, shift: 0, batch: 1 }
    }

    pub(crate) fn raw_range(&self, n: usize) -> std::ops::Range<u64> {
        let start = self.shift + (self.batch as i64) * n as i64;
        debug_assert!(start >= 0);
        let start = start as u64;
        start..start + self.batch
    }

    pub(crate) fn validate(&self, first_stage: usize) -> Result<(), ParamError> {
        if self.batch == 0 {
            return Err(ParamError::InvalidRule("batch must be positive".into()));
        }
        let from = self.shift + self.batch as i64 * first_stage as i64;
        if from < 0 {
            return Err(ParamError::InvalidRule(format!(
                "stage {first_stage} maps to negative rule index {from}"
            )));
        }
        self.layout
            .validate_from(from as u64)
            .map_err(|reason| ParamError::InvalidStage { stage: first_stage, reason })
    }

    pub fn stage(&self, n: usize) -> SpacerStage {
        let mut raws = self.raw_range(n).map(|r| SpacerStage::from_vec(self.layout.stage(r)));
        let first = raws.next().expect("batch is positive");
        raws.fold(first, |acc, s| acc.merge(&s))
    }

    pub fn cut(&self, n: usize) -> u64 {
        self.raw_range(n)
            .map(|r| self.layout.cut(r) + 1)
            .fold(1u64, |a, b| a.checked_mul(b).expect("stage size overflow"))
            - 1
    }

    pub fn counts(&self, n: usize) -> BTreeMap<Letter, u64> {
        let mut acc: BTreeMap<Letter, u64> = BTreeMap::new();
        for (i, r) in self.raw_range(n).enumerate() {
            let c = self.layout.counts(r);
            if i == 0 {
                acc = c;
                continue;
            }
            let k = self.layout.cut(r) + 1;
            for v in acc.values_mut() {
                *v = v.checked_mul(k).expect("stage size overflow");
            }
            for (l, v) in c {
                *acc.entry(l).or_insert(0) += v;
            }
        }
        acc
    }

    pub fn letters(&self, n: usize) -> BTreeSet<Letter> {
        self.raw_range(n).flat_map(|r| self.layout.letters(r)).collect()
    }

    pub fn residue(&self, n: usize, m: u64) -> StageResidue {
        let mut it = self.raw_range(n).map(|r| self.layout.residue(r, m));
        let first = it.next().expect("batch is positive");
        it.fold(first, |acc, s| acc.merge(&s, m))
    }
}
