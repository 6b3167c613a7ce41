//! Generating words, the language of the subshift, and positions inside `w_N`.

use std::collections::BTreeSet;
use std::sync::RwLock;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{AlphabetTower, Letter, ParameterSchedule};

/// Default limit on the number of letters any operation may materialize.
pub const DEFAULT_CAP: usize = 10_000_000;

/// Environment variable overriding [`DEFAULT_CAP`].
pub const CAP_ENV: &str = "FERENCZI_CAP";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("materializing {needed} letters exceeds the cap of {cap}")]
    CapExceeded { needed: BigUint, cap: usize },
    #[error("position {position} is outside a word of length {length}")]
    OutOfRange { position: BigUint, length: BigUint },
    #[error("target level {target} is above ambient level {ambient}")]
    LevelOrder { target: usize, ambient: usize },
    #[error("length must be positive")]
    EmptyLength,
}

/// A schedule together with its alphabets and a shared cache of `|w_n|`.
#[derive(Debug)]
pub struct Subshift {
    schedule: ParameterSchedule,
    alphabets: AlphabetTower,
    lengths: RwLock<Vec<BigUint>>,
    cap: usize,
}

impl Clone for Subshift {
    fn clone(&self) -> Self {
        Subshift {
            schedule: self.schedule.clone(),
            alphabets: self.alphabets.clone(),
            lengths: RwLock::new(self.lengths.read().unwrap().clone()),
            cap: self.cap,
        }
    }
}

impl Subshift {
    /// Uses the cap from the environment, falling back to [`DEFAULT_CAP`].
    pub fn new(schedule: ParameterSchedule) -> Self {
        let cap = std::env::var(CAP_ENV).ok().and_then(|v| v.parse().ok()).unwrap_or(DEFAULT_CAP);
        Subshift::with_cap(schedule, cap)
    }

    pub fn with_cap(schedule: ParameterSchedule, cap: usize) -> Self {
        Subshift {
            alphabets: schedule.alphabets(),
            schedule,
            lengths: RwLock::new(vec![BigUint::from(1u32)]),
            cap,
        }
    }

    pub fn schedule(&self) -> &ParameterSchedule {
        &self.schedule
    }

    pub fn alphabets(&self) -> &AlphabetTower {
        &self.alphabets
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Fails unless `len` letters fit under the cap.
    pub fn check_cap(&self, len: &BigUint) -> Result<usize, WordError> {
        match len.to_usize() {
            Some(l) if l <= self.cap => Ok(l),
            _ => Err(WordError::CapExceeded { needed: len.clone(), cap: self.cap }),
        }
    }

    /// `|w_n|`, by the length recursion.
    pub fn word_length(&self, n: usize) -> BigUint {
        if let Some(l) = self.lengths.read().unwrap().get(n) {
            return l.clone();
        }
        let mut cache = self.lengths.write().unwrap();
        while cache.len() <= n {
            let k = cache.len() - 1;
            let next = &cache[k] * (self.schedule.cut(k) + 1) + self.schedule.spacer_sum(k);
            cache.push(next);
        }
        cache[n].clone()
    }

    /// `|w_n|_0 = Q_{0,n}`.
    pub fn zero_count(&self, n: usize) -> BigUint {
        (0..n).fold(BigUint::from(1u32), |acc, k| acc * (self.schedule.cut(k) + 1))
    }

    /// Least `n` with `|w_n| >= len`.
    pub fn level_reaching(&self, len: &BigUint) -> usize {
        (0..).find(|&n| &self.word_length(n) >= len).unwrap()
    }

    /// The word `w_n` over `{0, 1}`.
    pub fn generating_word(&self, n: usize) -> Result<String, WordError> {
        self.check_cap(&self.word_length(n))?;
        let mut w = vec![b'0'];
        for k in 0..n {
            w = expand(&w, self.schedule.stage(k).spacers());
        }
        Ok(String::from_utf8(w).expect("ascii"))
    }

    /// All factors of length `len` of the subshift.
    ///
    /// With `N` least such that `|w_N| >= len`, every factor of a point sits in
    /// some `w_M` (`M > N`), which is a sequence of `w_N` copies separated by
    /// spacers from stages `>= N`. A window no longer than `w_N` meets at most one
    /// separator, so it is a factor of `w_N 1^s w_N` for one of those spacers `s`;
    /// conversely each such block occurs inside `w_{k+1}` for the stage `k` using `s`.
    pub fn language(&self, len: usize) -> Result<FactorSet, WordError> {
        if len == 0 {
            return Err(WordError::EmptyLength);
        }
        let level = self.level_reaching(&BigUint::from(len));
        let spacers = self.alphabets.level(level + 1);
        let w = self.generating_word(level)?;
        let widest = 2 * w.len() + *spacers.iter().max().unwrap() as usize;
        self.check_cap(&BigUint::from(widest))?;
        let mut words = BTreeSet::new();
        for &s in &spacers {
            let block = format!("{w}{}{w}", "1".repeat(s as usize));
            for i in 0..=block.len() - len {
                words.insert(block[i..i + len].to_string());
            }
        }
        Ok(FactorSet { length: len, words, level, spacers })
    }

    /// `(min, max)` number of zeros over factors of length `len`, by sliding a
    /// window over the same blocks [`language`](Self::language) reads.
    pub fn factor_stats(&self, len: usize) -> Result<(usize, usize), WordError> {
        if len == 0 {
            return Err(WordError::EmptyLength);
        }
        let level = self.level_reaching(&BigUint::from(len));
        let spacers = self.alphabets.level(level + 1);
        let w = self.generating_word(level)?;
        let widest = 2 * w.len() + *spacers.iter().max().unwrap() as usize;
        self.check_cap(&BigUint::from(widest))?;
        let (mut lo, mut hi) = (usize::MAX, 0);
        for &s in &spacers {
            let block = [w.as_bytes(), &vec![b'1'; s as usize], w.as_bytes()].concat();
            let mut zeros = block[..len].iter().filter(|&&c| c == b'0').count();
            lo = lo.min(zeros);
            hi = hi.max(zeros);
            for i in len..block.len() {
                zeros = zeros + (block[i] == b'0') as usize - (block[i - len] == b'0') as usize;
                lo = lo.min(zeros);
                hi = hi.max(zeros);
            }
        }
        Ok((lo, hi))
    }

    /// Addresses of position `j` of `w_ambient` in the decompositions
    /// `w_{m+1} = w_m 1^{a_{m,0}} w_m ... w_m` for `m = ambient - 1` down to `target`.
    /// The list stops early at the first level where `j` falls in a spacer block.
    pub fn locate(&self, j: &BigUint, target: usize, ambient: usize) -> Result<Vec<TowerAddress>, WordError> {
        if target > ambient {
            return Err(WordError::LevelOrder { target, ambient });
        }
        let length = self.word_length(ambient);
        if j >= &length {
            return Err(WordError::OutOfRange { position: j.clone(), length });
        }
        let mut out = Vec::with_capacity(ambient - target);
        let mut x = j.clone();
        for m in (target..ambient).rev() {
            let lw = self.word_length(m);
            let stage = self.schedule.stage(m);
            let mut start = BigUint::zero();
            let mut found = None;
            for (i, &a) in std::iter::once(&0).chain(stage.spacers()).enumerate() {
                if i > 0 {
                    // Gap i - 1 precedes copy i.
                    let gap_end = &start + a;
                    if x < gap_end {
                        let offset = (&x - &start).to_u64().unwrap();
                        found = Some(AddressKind::Spacer { gap: i - 1, offset, value: a });
                        break;
                    }
                    start = gap_end;
                }
                let copy_end = &start + &lw;
                if x < copy_end {
                    found = Some(AddressKind::Copy { copy: i, offset: &x - &start });
                    x -= &start;
                    break;
                }
                start = copy_end;
            }
            let kind = found.expect("position inside w_{m+1}");
            let stop = matches!(kind, AddressKind::Spacer { .. });
            out.push(TowerAddress { level: m, kind });
            if stop {
                break;
            }
        }
        Ok(out)
    }

    /// Inverse of [`locate`](Self::locate): the position in `w_{top+1}` of an address chain
    /// whose first entry is at level `top`.
    pub fn encode(&self, chain: &[TowerAddress]) -> BigUint {
        let mut pos = BigUint::zero();
        for (i, addr) in chain.iter().enumerate() {
            let lw = self.word_length(addr.level);
            let spacers = self.schedule.stage(addr.level);
            let before = |k: usize| -> u64 { spacers.spacers()[..k].iter().sum() };
            match &addr.kind {
                AddressKind::Copy { copy, offset } => {
                    if i + 1 == chain.len() {
                        pos += offset;
                    }
                    pos += &lw * *copy + before(*copy);
                }
                AddressKind::Spacer { gap, offset, .. } => {
                    pos += &lw * (*gap + 1) + before(*gap) + *offset;
                }
            }
        }
        pos
    }

    /// The first `len` letters of the common right tail of the asymptotic class.
    pub fn asymptotic_tail(&self, len: usize) -> Result<String, crate::morphisms::MorphismError> {
        if len == 0 {
            return Err(WordError::EmptyLength.into());
        }
        let target = BigUint::from(len);
        let mut n = 1;
        loop {
            let (_, right) = self.lr_lengths(n);
            if right >= target {
                break;
            }
            n += 1;
        }
        let (_, right) = self.lr_words(n)?;
        let mut out = tau0(&right);
        out.truncate(len);
        Ok(out)
    }
}

/// `w 1^{a_0} w ... 1^{a_{q-1}} w` over ASCII `'0'/'1'`.
pub(crate) fn expand(w: &[u8], spacers: &[Letter]) -> Vec<u8> {
    let total = w.len() * (spacers.len() + 1) + spacers.iter().sum::<u64>() as usize;
    let mut out = Vec::with_capacity(total);
    out.extend_from_slice(w);
    for &a in spacers {
        out.extend(std::iter::repeat(b'1').take(a as usize));
        out.extend_from_slice(w);
    }
    out
}

/// `τ_0` applied letterwise: `a ↦ 0 1^a`.
pub fn tau0(word: &[Letter]) -> String {
    let mut s = String::new();
    for &a in word {
        s.push('0');
        s.extend(std::iter::repeat('1').take(a as usize));
    }
    s
}

/// All length-`len` factors, with the level and spacer set used to extract them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorSet {
    pub length: usize,
    pub words: BTreeSet<String>,
    pub level: usize,
    pub spacers: BTreeSet<Letter>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AddressKind {
    Copy {
        copy: usize,
        #[serde(with = "crate::linalg::decimal")]
        offset: BigUint,
    },
    Spacer { gap: usize, offset: u64, value: Letter },
}

/// Where a position sits inside `w_{level+1}` read as copies of `w_level`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerAddress {
    pub level: usize,
    #[serde(flatten)]
    pub kind: AddressKind,
}
