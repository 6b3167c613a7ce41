//! Free-monoid morphisms and the two directive sequences of a schedule.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{int, SymbolMatrix};
use crate::params::Letter;
use crate::words::{tau0, Subshift, WordError};

pub type Word = Vec<Letter>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MorphismError {
    #[error("codomain of the inner morphism does not match the domain of the outer one")]
    AlphabetMismatch,
    #[error("image of {0} is empty")]
    EmptyImage(Letter),
    #[error("image of {letter} uses {stray}, which is outside the codomain")]
    OutsideCodomain { letter: Letter, stray: Letter },
    #[error("letter {0} is outside the domain")]
    OutsideDomain(Letter),
    #[error("stage {stage} has a single copy; standardize the schedule first")]
    NotStandard { stage: usize },
    #[error("morphism is not of constant length")]
    NotConstantLength,
    #[error("level must be at least 1")]
    LevelZero,
    #[error("window too short: at least {required} letters needed")]
    TooShort { required: BigUint },
    #[error("window is not in the language: {0}")]
    NotInLanguage(String),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// A nonerasing morphism from `domain*` to `codomain*`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMorphism")]
pub struct Morphism {
    domain: BTreeSet<Letter>,
    codomain: BTreeSet<Letter>,
    images: BTreeMap<Letter, Word>,
}

#[derive(Deserialize)]
struct RawMorphism {
    codomain: Option<BTreeSet<Letter>>,
    images: BTreeMap<Letter, Word>,
}

impl TryFrom<RawMorphism> for Morphism {
    type Error = MorphismError;
    fn try_from(raw: RawMorphism) -> Result<Self, MorphismError> {
        let codomain = raw.codomain.unwrap_or_else(|| raw.images.values().flatten().copied().collect());
        Morphism::new(raw.images, codomain)
    }
}

impl Morphism {
    pub fn new(images: BTreeMap<Letter, Word>, codomain: BTreeSet<Letter>) -> Result<Self, MorphismError> {
        for (&a, img) in &images {
            if img.is_empty() {
                return Err(MorphismError::EmptyImage(a));
            }
            if let Some(&b) = img.iter().find(|b| !codomain.contains(b)) {
                return Err(MorphismError::OutsideCodomain { letter: a, stray: b });
            }
        }
        Ok(Morphism { domain: images.keys().copied().collect(), codomain, images })
    }

    pub fn identity(alphabet: &BTreeSet<Letter>) -> Self {
        Morphism {
            domain: alphabet.clone(),
            codomain: alphabet.clone(),
            images: alphabet.iter().map(|&a| (a, vec![a])).collect(),
        }
    }

    pub fn domain(&self) -> &BTreeSet<Letter> {
        &self.domain
    }

    pub fn codomain(&self) -> &BTreeSet<Letter> {
        &self.codomain
    }

    pub fn images(&self) -> &BTreeMap<Letter, Word> {
        &self.images
    }

    pub fn image(&self, a: Letter) -> Option<&Word> {
        self.images.get(&a)
    }

    pub fn apply(&self, word: &[Letter]) -> Result<Word, MorphismError> {
        let mut out = Vec::new();
        for &a in word {
            out.extend_from_slice(self.images.get(&a).ok_or(MorphismError::OutsideDomain(a))?);
        }
        Ok(out)
    }

    /// `⟨τ⟩`, the shortest image length.
    pub fn min_length(&self) -> usize {
        self.images.values().map(Vec::len).min().unwrap_or(0)
    }

    /// `|τ|`, the longest image length.
    pub fn max_length(&self) -> usize {
        self.images.values().map(Vec::len).max().unwrap_or(0)
    }

    /// `M(b, a) = |τ(a)|_b`, rows over the codomain and columns over the domain.
    pub fn composition_matrix(&self) -> SymbolMatrix {
        let mut m = SymbolMatrix::zeros(self.codomain.iter().copied(), self.domain.iter().copied());
        for (&a, img) in &self.images {
            let mut counts: BTreeMap<Letter, u64> = BTreeMap::new();
            for &b in img {
                *counts.entry(b).or_default() += 1;
            }
            for (b, c) in counts {
                m.set(b, a, int(c));
            }
        }
        m
    }

    pub fn predicates(&self) -> Predicates {
        let firsts: Vec<_> = self.images.values().map(|w| w[0]).collect();
        let lasts: Vec<_> = self.images.values().map(|w| *w.last().unwrap()).collect();
        let all_equal = |v: &[Letter]| v.windows(2).all(|p| p[0] == p[1]);
        let distinct = |v: &[Letter]| v.iter().collect::<BTreeSet<_>>().len() == v.len();
        Predicates {
            proper: all_equal(&firsts) && all_equal(&lasts),
            constant_length: self.min_length() == self.max_length(),
            left_permutative: distinct(&firsts),
            right_permutative: distinct(&lasts),
            positive: self
                .images
                .values()
                .all(|w| self.codomain.iter().all(|b| w.contains(b))),
        }
    }

    /// Indices where every image carries the same letter.
    pub fn coincidence_indices(&self) -> Result<BTreeSet<usize>, MorphismError> {
        if !self.predicates().constant_length {
            return Err(MorphismError::NotConstantLength);
        }
        let mut imgs = self.images.values();
        let first = imgs.next().cloned().unwrap_or_default();
        let rest: Vec<_> = imgs.collect();
        Ok((0..first.len()).filter(|&i| rest.iter().all(|w| w[i] == first[i])).collect())
    }
}

/// `σ ∘ τ`, defined when the codomain of `τ` is the domain of `σ`.
pub fn compose(sigma: &Morphism, tau: &Morphism) -> Result<Morphism, MorphismError> {
    if tau.codomain != sigma.domain {
        return Err(MorphismError::AlphabetMismatch);
    }
    let images = tau
        .images
        .iter()
        .map(|(&a, w)| Ok((a, sigma.apply(w)?)))
        .collect::<Result<_, MorphismError>>()?;
    Ok(Morphism { domain: tau.domain.clone(), codomain: sigma.codomain.clone(), images })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicates {
    pub proper: bool,
    pub constant_length: bool,
    pub left_permutative: bool,
    pub right_permutative: bool,
    pub positive: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `τ(a) w = w τ'(a)`.
    Forward,
    /// `w τ(a) = τ'(a) w`.
    Backward,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotationWitness {
    pub word: Word,
    pub direction: Direction,
}

/// A shortest `w` conjugating `tau` to `other`, with `|w|` below the longest image.
pub fn rotation_witness(tau: &Morphism, other: &Morphism) -> Option<RotationWitness> {
    if tau.domain != other.domain
        || tau.images.iter().any(|(a, w)| other.images[a].len() != w.len())
    {
        return None;
    }
    let longest = tau.images.values().max_by_key(|w| w.len())?;
    let longest_other = &other.images[&tau.images.iter().max_by_key(|(_, w)| w.len())?.0.clone()];
    let holds = |w: &[Letter], dir: Direction| {
        tau.images.iter().all(|(a, img)| {
            let alt = &other.images[a];
            match dir {
                Direction::Forward => [img.as_slice(), w].concat() == [w, alt.as_slice()].concat(),
                Direction::Backward => [w, img.as_slice()].concat() == [alt.as_slice(), w].concat(),
            }
        })
    };
    (0..longest.len()).find_map(|k| {
        [(Direction::Forward, &longest[..k]), (Direction::Backward, &longest_other[..k])]
            .into_iter()
            .find(|(dir, w)| holds(w, *dir))
            .map(|(direction, w)| RotationWitness { word: w.to_vec(), direction })
    })
}

/// Which directive sequence to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `a ↦ a_{n-1,0} ... a_{n-1,q-1} a`.
    Tilde,
    /// `a ↦ a_{n-1,1} ... a_{n-1,q-1} a a_{n-1,0}`.
    Proper,
    /// The proper sequence started one level later.
    Shifted,
}

/// Result of the common-prefix computation, with the length bound it must meet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CommonPrefix {
    pub word: String,
    #[serde(with = "crate::linalg::ratio_string")]
    pub bound: num_rational::BigRational,
    pub satisfied: bool,
}

/// The decoding of a window at some level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CenteredDecoding {
    /// Index in the window where the first complete level-`n` image starts.
    pub cut: usize,
    /// Letters of the complete level-`n` images, in order.
    pub letters: Word,
}

impl Subshift {
    /// `τ_n` (or `τ̃_n`) with domain `A_{n+1}` and codomain `A_n`.
    pub fn morphism(&self, variant: Variant, n: usize) -> Result<Morphism, MorphismError> {
        if variant == Variant::Shifted {
            return self.morphism(Variant::Proper, n + 1);
        }
        let alph = self.alphabets();
        let domain = alph.level(n + 1);
        let codomain = alph.level(n);
        if n == 0 {
            let images = domain.iter().map(|&a| (a, tau0_word(a))).collect();
            return Morphism::new(images, codomain);
        }
        let stage = self.schedule().stage(n - 1);
        let s = stage.spacers();
        if variant == Variant::Proper && s.len() < 2 {
            return Err(MorphismError::NotStandard { stage: n - 1 });
        }
        let images = domain
            .iter()
            .map(|&a| {
                let img = match variant {
                    Variant::Tilde => [s, &[a]].concat(),
                    _ => [&s[1..], &[a], &s[..1]].concat(),
                };
                (a, img)
            })
            .collect();
        Morphism::new(images, codomain)
    }

    /// `τ_{[m,n)} = τ_m ∘ ... ∘ τ_{n-1}`, the identity on `A_m` when `m = n`.
    pub fn telescope(&self, variant: Variant, m: usize, n: usize) -> Result<Morphism, MorphismError> {
        assert!(m <= n, "telescope needs m <= n");
        let mut acc = Morphism::identity(&self.alphabets().level(n));
        for k in (m..n).rev() {
            let next = self.morphism(variant, k)?;
            let total: usize = acc.images.values().map(|w| {
                w.iter().map(|b| next.images[b].len()).sum::<usize>()
            }).sum();
            self.check_cap(&BigUint::from(total))?;
            acc = compose(&next, &acc)?;
        }
        Ok(acc)
    }

    /// `(L_{1,n}, R_{1,n})` with `τ_{[1,n+1)}(a) = L_{1,n} a R_{1,n}`.
    pub fn lr_words(&self, n: usize) -> Result<(Word, Word), MorphismError> {
        if n == 0 {
            return Err(MorphismError::LevelZero);
        }
        let (l, r) = self.lr_lengths(n);
        self.check_cap(&(l + r))?;
        let s0 = self.schedule().stage(0);
        let mut left = s0.spacers()[1..].to_vec();
        let mut right = vec![s0.spacers()[0]];
        for k in 1..n {
            let s = self.schedule().stage(k);
            let sub = |word: &[Letter], left: &[Letter], right: &[Letter]| -> Word {
                word.iter().flat_map(|&a| left.iter().copied().chain([a]).chain(right.iter().copied())).collect()
            };
            let new_left = [sub(&s.spacers()[1..], &left, &right), left.clone()].concat();
            let new_right = [right.clone(), sub(&s.spacers()[..1], &left, &right)].concat();
            left = new_left;
            right = new_right;
        }
        Ok((left, right))
    }

    /// `(|τ_0(L_{1,n})|, |τ_0(R_{1,n})|)` without building the words.
    pub fn lr_lengths(&self, n: usize) -> (BigUint, BigUint) {
        assert!(n >= 1);
        let s0 = self.schedule().stage(0);
        let mut l: BigUint = s0.spacers()[1..].iter().map(|&a| BigUint::from(a + 1)).sum();
        let mut r = BigUint::from(s0.spacers()[0] + 1);
        for k in 1..n {
            // |τ_{[0,k+1)}(a)| = a + |w_k| = a + l + r + 1.
            let c = &l + &r + 1u32;
            let s = self.schedule().stage(k);
            let sp = s.spacers();
            l += sp[1..].iter().map(|&a| &c + a).sum::<BigUint>();
            r += &c + sp[0];
        }
        (l, r)
    }

    /// The common prefix `p_n` of all `τ_{[0,n)}(a)` together with its length bound.
    pub fn common_prefix(&self, n: usize) -> Result<CommonPrefix, MorphismError> {
        if n == 0 {
            return Err(MorphismError::LevelZero);
        }
        let a1 = self.alphabets().level(1);
        let (lo, hi) = (*a1.first().unwrap(), *a1.last().unwrap());
        let word = if n == 1 {
            tau0(&[lo])
        } else {
            let (left, _) = self.lr_words(n - 1)?;
            tau0(&left)
        };
        let an = self.alphabets().level(n);
        let shortest = if n == 1 {
            BigUint::from(lo + 1)
        } else {
            self.word_length(n - 1) + *an.first().unwrap()
        };
        let bound = crate::linalg::rat(lo as i64 + 1, 3 * (hi as i64 + 1)) * crate::linalg::from_biguint(&shortest);
        let satisfied = crate::linalg::int(word.len() as u64) >= bound;
        Ok(CommonPrefix { word, bound, satisfied })
    }

    /// Cuts a `{0,1}` window into complete `τ_{[0,n)}`-images of the proper sequence.
    pub fn decode_centered(&self, window: &str, n: usize) -> Result<CenteredDecoding, MorphismError> {
        if n == 0 {
            return Err(MorphismError::LevelZero);
        }
        let bytes = window.as_bytes();
        if let Some(c) = bytes.iter().find(|&&c| c != b'0' && c != b'1') {
            return Err(MorphismError::NotInLanguage(format!("symbol {:?} is not 0 or 1", *c as char)));
        }
        let a1 = self.alphabets().level(1);
        let max1 = *a1.last().unwrap() as usize;
        let zeros: Vec<usize> = (0..bytes.len()).filter(|&i| bytes[i] == b'0').collect();
        let lead = zeros.first().copied().unwrap_or(bytes.len());
        let trail = bytes.len() - zeros.last().map_or(0, |z| z + 1);
        if lead > max1 || trail > max1 {
            return Err(MorphismError::NotInLanguage("block of ones longer than any spacer".into()));
        }
        let mut letters: Vec<(Letter, usize)> = Vec::new();
        for p in zeros.windows(2) {
            let run = (p[1] - p[0] - 1) as Letter;
            if !a1.contains(&run) {
                return Err(MorphismError::NotInLanguage(format!("block of {run} ones is not a spacer")));
            }
            letters.push((run, p[0]));
        }

        let prefix = self.common_prefix(n)?.word.len();
        let longest = self.word_length(n - 1) + *self.alphabets().level(n).last().unwrap();
        let required = longest + prefix;
        if BigUint::from(bytes.len()) < required {
            return Err(MorphismError::TooShort { required });
        }

        for k in 1..n {
            let tau = self.morphism(Variant::Proper, k)?;
            let len = tau.max_length();
            let upper = self.alphabets().level(k + 1);
            let shape = tau.images.values().next().unwrap().clone();
            let variable = len - 2;
            let fits = |phase: usize| {
                letters.iter().enumerate().all(|(i, (a, _))| {
                    let slot = (i + phase) % len;
                    if slot == variable {
                        upper.contains(a)
                    } else {
                        shape[slot] == *a
                    }
                })
            };
            let phases: Vec<usize> = (0..len).filter(|&p| fits(p)).collect();
            let phase = match phases.as_slice() {
                [] => return Err(MorphismError::NotInLanguage(format!("no consistent cut at level {}", k + 1))),
                [p] => *p,
                _ => return Err(MorphismError::TooShort { required: BigUint::from(bytes.len() + 1) }),
            };
            let first = (len - phase) % len;
            letters = (first..)
                .step_by(len)
                .take_while(|&i| i + len <= letters.len())
                .map(|i| (letters[i + variable].0, letters[i].1))
                .collect();
        }
        let cut = letters.first().map(|&(_, p)| p).ok_or_else(|| MorphismError::TooShort {
            required: BigUint::from(bytes.len() + 1),
        })?;
        Ok(CenteredDecoding { cut, letters: letters.into_iter().map(|(a, _)| a).collect() })
    }

    /// `h_n(a) = |τ_{[0,n)}(a)|` for the proper sequence, computed from word lengths.
    pub fn image_length(&self, n: usize, a: Letter) -> BigUint {
        if n == 0 {
            BigUint::from(1u32)
        } else {
            self.word_length(n - 1) + a
        }
    }

    /// Materialized `τ_{[0,n)}(a)` for every `a ∈ A_n`, as `{0,1}` strings.
    pub fn level_images(&self, n: usize) -> Result<BTreeMap<Letter, String>, MorphismError> {
        let alph = self.alphabets().level(n);
        let total: BigUint = alph.iter().map(|&a| self.image_length(n, a)).sum();
        self.check_cap(&total)?;
        if n == 0 {
            return Ok(alph.into_iter().map(|a| (a, a.to_string())).collect());
        }
        let mut images: BTreeMap<Letter, String> = self.alphabets().level(1).iter().map(|&a| (a, tau0(&[a]))).collect();
        for k in 1..n {
            let tau = self.morphism(Variant::Proper, k)?;
            images = tau
                .images()
                .iter()
                .map(|(&a, w)| (a, w.iter().map(|b| images[b].as_str()).collect::<String>()))
                .collect();
        }
        Ok(images)
    }
}

fn tau0_word(a: Letter) -> Word {
    std::iter::once(0).chain(std::iter::repeat(1).take(a as usize)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParameterSchedule;

    fn chacon() -> Subshift {
        Subshift::new(ParameterSchedule::periodic(vec![], vec![vec![0, 1]]).unwrap())
    }

    fn word(s: &str) -> Word {
        s.bytes().map(|c| (c - b'0') as Letter).collect()
    }

    #[test]
    fn chacon_levels() {
        let s = chacon();
        let t1 = s.morphism(Variant::Tilde, 1).unwrap();
        assert_eq!(t1.image(5), None);
        assert_eq!(t1.image(0).unwrap(), &word("010"));
        let p1 = s.morphism(Variant::Proper, 1).unwrap();
        assert_eq!(p1.image(0).unwrap(), &word("100"));
        assert_eq!(p1.image(1).unwrap(), &word("110"));
        let t0 = s.morphism(Variant::Proper, 0).unwrap();
        assert_eq!(t0.image(1).unwrap(), &word("01"));
        let tel = s.telescope(Variant::Proper, 0, 2).unwrap();
        assert_eq!(tel.image(0).unwrap(), &word("0100"));
        assert_eq!(tel.image(1).unwrap(), &word("01010"));
        let c = compose(&p1, &s.morphism(Variant::Proper, 2).unwrap()).unwrap();
        assert_eq!(c.max_length(), 9);
        assert!(c.predicates().constant_length);
    }

    #[test]
    fn identity_and_mismatch() {
        let s = chacon();
        let t = s.morphism(Variant::Proper, 3).unwrap();
        let id = Morphism::identity(t.codomain());
        assert_eq!(compose(&id, &t).unwrap(), t);
        assert_eq!(s.telescope(Variant::Proper, 2, 2).unwrap(), Morphism::identity(&[0, 1].into()));
        let wide = Morphism::new([(0, word("012"))].into_iter().collect(), [0, 1, 2].into()).unwrap();
        assert_eq!(compose(&t, &wide), Err(MorphismError::AlphabetMismatch));
    }

    #[test]
    fn matrices() {
        let s = chacon();
        let m = s.morphism(Variant::Proper, 2).unwrap().composition_matrix();
        assert_eq!(m.to_integer_rows().unwrap(), vec![vec![2.into(), 1.into()], vec![1.into(), 2.into()]]);
        let alt = Subshift::new(ParameterSchedule::periodic(vec![], vec![vec![2, 3, 5]]).unwrap());
        let m0 = alt.morphism(Variant::Proper, 0).unwrap().composition_matrix();
        assert_eq!(m0.rows(), &[0, 1]);
        for a in [2, 3, 5] {
            assert_eq!(m0.get(0, a), int(1u32));
            assert_eq!(m0.get(1, a), int(a));
        }
    }

    #[test]
    fn predicates_follow_definitions() {
        let s = chacon();
        let p = s.morphism(Variant::Proper, 1).unwrap().predicates();
        assert!(p.proper && p.constant_length && !p.left_permutative && p.right_permutative == false);
        let t = s.morphism(Variant::Tilde, 1).unwrap().predicates();
        assert!(t.right_permutative && !t.proper);
        // Images "0" and "01": shared first letter, distinct last letters.
        let z = s.morphism(Variant::Tilde, 0).unwrap().predicates();
        assert!(!z.left_permutative && z.right_permutative && !z.constant_length);
    }

    #[test]
    fn rotation() {
        let s = chacon();
        let p = s.morphism(Variant::Proper, 1).unwrap();
        let t = s.morphism(Variant::Tilde, 1).unwrap();
        assert_eq!(
            rotation_witness(&p, &t),
            Some(RotationWitness { word: vec![0], direction: Direction::Backward })
        );
        assert_eq!(rotation_witness(&p, &p), Some(RotationWitness { word: vec![], direction: Direction::Forward }));
        let other = Morphism::new(
            [(0, word("000")), (1, word("111"))].into_iter().collect(),
            [0, 1].into(),
        )
        .unwrap();
        assert_eq!(rotation_witness(&p, &other), None);
    }

    #[test]
    fn coincidences() {
        let s = chacon();
        let c = s.morphism(Variant::Shifted, 0).unwrap().coincidence_indices().unwrap();
        assert_eq!(c, [0, 2].into());
        let flat = Morphism::new([(0, word("01")), (1, word("01"))].into_iter().collect(), [0, 1].into()).unwrap();
        assert_eq!(flat.coincidence_indices().unwrap(), [0, 1].into());
        assert_eq!(
            s.morphism(Variant::Proper, 0).unwrap().coincidence_indices(),
            Err(MorphismError::NotConstantLength)
        );
    }

    #[test]
    fn lr_and_prefix() {
        let s = chacon();
        assert_eq!(s.lr_words(1).unwrap(), (word("1"), word("0")));
        assert_eq!(s.lr_words(2).unwrap().1, word("0100"));
        let p = s.common_prefix(2).unwrap();
        assert_eq!(p.word, "01");
        assert!(p.satisfied);
        assert_eq!(s.common_prefix(1).unwrap().word, "0");
        assert_eq!(s.asymptotic_tail(1).unwrap(), "0");
        assert_eq!(s.asymptotic_tail(5).unwrap(), "00100");
    }

    #[test]
    fn decoding_examples() {
        let s = chacon();
        let d = s.decode_centered("0010001010010", 1).unwrap();
        assert_eq!(d.cut, 0);
        assert_eq!(d.letters, vec![0, 1, 0, 0, 1, 1, 0, 1]);
        assert!(matches!(s.decode_centered("10", 1), Err(MorphismError::TooShort { .. })));
        assert!(matches!(s.decode_centered("11", 1), Err(MorphismError::NotInLanguage(_))));
    }
}
