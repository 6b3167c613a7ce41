//! Cutting and spacer parameters of a Ferenczi subshift.
//!
//! Stage `n` lists the spacers `a_{n,0}, ..., a_{n,q_n - 1}` that glue `q_n + 1`
//! copies of `w_n` into `w_{n+1}`. A schedule is a finite preperiod followed by a
//! tail that is either periodic or produced by a growth rule.

mod contract;
mod rule;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use contract::CutSequence;
pub use rule::{CountRule, GrowthKey, GrowthLayout, GrowthTail, Run, StageResidue};

/// Alphabet symbols are the spacer values themselves.
pub type Letter = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParamError {
    #[error("stage {stage}: {reason}")]
    InvalidStage { stage: usize, reason: String },
    #[error("invalid tail rule: {0}")]
    InvalidRule(String),
    #[error("invalid cut points: {0}")]
    InvalidCuts(String),
    #[error("spacer counts are defined for levels n >= 1")]
    LevelZero,
}

/// The spacer list of one stage; never empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct SpacerStage(Vec<Letter>);

impl SpacerStage {
    pub fn new(spacers: Vec<Letter>) -> Option<Self> {
        (!spacers.is_empty()).then_some(SpacerStage(spacers))
    }

    pub(crate) fn from_vec(spacers: Vec<Letter>) -> Self {
        assert!(!spacers.is_empty(), "stages are nonempty");
        SpacerStage(spacers)
    }

    pub fn spacers(&self) -> &[Letter] {
        &self.0
    }

    /// The cutting parameter `q_n`.
    pub fn cut(&self) -> u64 {
        self.0.len() as u64
    }

    pub fn sum(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn counts(&self) -> BTreeMap<Letter, u64> {
        let mut out = BTreeMap::new();
        for &a in &self.0 {
            *out.entry(a).or_insert(0) += 1;
        }
        out
    }

    pub fn letters(&self) -> BTreeSet<Letter> {
        self.0.iter().copied().collect()
    }

    /// Spacers of the merged stage: `self` is repeated `next.cut() + 1` times,
    /// separated by the spacers of `next`.
    pub fn merge(&self, next: &SpacerStage) -> SpacerStage {
        let mut out = Vec::with_capacity((self.0.len() + 1) * (next.0.len() + 1) - 1);
        out.extend_from_slice(&self.0);
        for &a in &next.0 {
            out.push(a);
            out.extend_from_slice(&self.0);
        }
        SpacerStage(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    Periodic(Vec<SpacerStage>),
    Growth(GrowthTail),
}

/// A finitely described infinite sequence of spacer stages.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule")]
pub struct ParameterSchedule {
    preperiod: Vec<SpacerStage>,
    tail: Tail,
}

#[derive(Deserialize)]
struct RawSchedule {
    #[serde(default)]
    preperiod: Vec<Vec<Letter>>,
    tail: RawTail,
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawTail {
    Periodic(Vec<Vec<Letter>>),
    Growth(GrowthTail),
}

impl TryFrom<RawSchedule> for ParameterSchedule {
    type Error = ParamError;

    fn try_from(raw: RawSchedule) -> Result<Self, ParamError> {
        let preperiod = stages_from(raw.preperiod, 0)?;
        let tail = match raw.tail {
            RawTail::Periodic(p) => {
                if p.is_empty() {
                    return Err(ParamError::InvalidRule("periodic tail is empty".into()));
                }
                Tail::Periodic(stages_from(p, preperiod.len())?)
            }
            RawTail::Growth(g) => Tail::Growth(g),
        };
        ParameterSchedule::new(preperiod, tail)
    }
}

fn stages_from(raw: Vec<Vec<Letter>>, offset: usize) -> Result<Vec<SpacerStage>, ParamError> {
    raw.into_iter()
        .enumerate()
        .map(|(i, s)| {
            SpacerStage::new(s).ok_or(ParamError::InvalidStage {
                stage: offset + i,
                reason: "empty spacer list (q_n = 0)".into(),
            })
        })
        .collect()
}

/// The alphabets `A_n` and their eventual value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlphabetTower {
    /// Letters of the preperiod stages, by stage index.
    stage_letters: Vec<BTreeSet<Letter>>,
    /// The stable alphabet `A_W`.
    pub stable: BTreeSet<Letter>,
    /// `|A_W|`.
    pub rank: usize,
    /// Least `n >= 1` with `A_m = A_W` for all `m >= n`.
    pub stabilization: usize,
}

impl AlphabetTower {
    /// `A_n`: `{0, 1}` for `n = 0`, otherwise the spacers of stages `n - 1` onwards.
    pub fn level(&self, n: usize) -> BTreeSet<Letter> {
        if n == 0 {
            return [0, 1].into_iter().collect();
        }
        let mut out = self.stable.clone();
        for s in self.stage_letters.iter().skip(n - 1) {
            out.extend(s.iter().copied());
        }
        out
    }
}

impl ParameterSchedule {
    pub fn new(preperiod: Vec<SpacerStage>, tail: Tail) -> Result<Self, ParamError> {
        if let Tail::Growth(g) = &tail {
            g.validate(preperiod.len())?;
        }
        if let Tail::Periodic(p) = &tail {
            if p.is_empty() {
                return Err(ParamError::InvalidRule("periodic tail is empty".into()));
            }
        }
        Ok(ParameterSchedule { preperiod, tail })
    }

    /// Eventually periodic schedule from plain spacer lists.
    pub fn periodic(preperiod: Vec<Vec<Letter>>, period: Vec<Vec<Letter>>) -> Result<Self, ParamError> {
        ParameterSchedule::try_from(RawSchedule {
            preperiod,
            tail: RawTail::Periodic(period),
        })
    }

    pub fn growth(preperiod: Vec<Vec<Letter>>, tail: GrowthTail) -> Result<Self, ParamError> {
        ParameterSchedule::try_from(RawSchedule {
            preperiod,
            tail: RawTail::Growth(tail),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("schedules always serialize")
    }

    pub fn preperiod(&self) -> &[SpacerStage] {
        &self.preperiod
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    /// Index of the first tail stage.
    pub fn tail_start(&self) -> usize {
        self.preperiod.len()
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.tail, Tail::Periodic(_))
    }

    /// Materialized spacer list of stage `n`.
    pub fn stage(&self, n: usize) -> SpacerStage {
        match self.split(n) {
            Ok(s) => s.clone(),
            Err(k) => match &self.tail {
                Tail::Periodic(p) => p[k % p.len()].clone(),
                Tail::Growth(g) => g.stage(n),
            },
        }
    }

    /// `Ok(stage)` inside the preperiod or for periodic tails, `Err(tail offset)` otherwise.
    fn split(&self, n: usize) -> Result<&SpacerStage, usize> {
        if n < self.preperiod.len() {
            return Ok(&self.preperiod[n]);
        }
        let k = n - self.preperiod.len();
        match &self.tail {
            Tail::Periodic(p) => Ok(&p[k % p.len()]),
            Tail::Growth(_) => Err(k),
        }
    }

    /// The cutting parameter `q_n`.
    pub fn cut(&self, n: usize) -> u64 {
        match (self.split(n), &self.tail) {
            (Ok(s), _) => s.cut(),
            (Err(_), Tail::Growth(g)) => g.cut(n),
            _ => unreachable!(),
        }
    }

    /// `Σ_i a_{n,i}`.
    pub fn spacer_sum(&self, n: usize) -> u64 {
        match (self.split(n), &self.tail) {
            (Ok(s), _) => s.sum(),
            (Err(_), Tail::Growth(g)) => g.counts(n).iter().map(|(l, c)| l * c).sum(),
            _ => unreachable!(),
        }
    }

    /// Multiplicity of each spacer value at stage `n`.
    pub fn stage_counts(&self, n: usize) -> BTreeMap<Letter, u64> {
        match (self.split(n), &self.tail) {
            (Ok(s), _) => s.counts(),
            (Err(_), Tail::Growth(g)) => g.counts(n),
            _ => unreachable!(),
        }
    }

    pub fn stage_letters(&self, n: usize) -> BTreeSet<Letter> {
        match (self.split(n), &self.tail) {
            (Ok(s), _) => s.letters(),
            (Err(_), Tail::Growth(g)) => g.letters(n),
            _ => unreachable!(),
        }
    }

    /// Stage `n` reduced modulo `m`, computed without materializing the stage.
    pub fn residue(&self, n: usize, m: u64) -> StageResidue {
        assert!(m >= 1, "modulus must be positive");
        match (self.split(n), &self.tail) {
            (Ok(s), _) => StageResidue::of_stage(s, m),
            (Err(_), Tail::Growth(g)) => g.residue(n, m),
            _ => unreachable!(),
        }
    }

    /// `(start, period)` with `residue(n, m) == residue(n + period, m)` for `n >= start`.
    pub fn residue_cycle(&self, m: u64) -> (usize, usize) {
        let t = self.tail_start();
        match &self.tail {
            Tail::Periodic(p) => (t, p.len()),
            Tail::Growth(g) => {
                let (start, period) = g.layout.residue_cycle(m);
                let first = (start as i64 - g.shift).max(0) as u64;
                let n = first.div_ceil(g.batch) as usize;
                (n.max(t), period as usize)
            }
        }
    }

    /// Largest spacer value occurring anywhere.
    pub fn max_spacer(&self) -> Letter {
        self.all_letters().into_iter().max().unwrap_or(0)
    }

    /// Every spacer value occurring at some stage.
    pub fn all_letters(&self) -> BTreeSet<Letter> {
        let mut out: BTreeSet<Letter> = self.preperiod.iter().flat_map(|s| s.letters()).collect();
        out.extend(self.tail_letters());
        out
    }

    /// Letters occurring at infinitely many stages.
    pub fn tail_letters(&self) -> BTreeSet<Letter> {
        match &self.tail {
            Tail::Periodic(p) => p.iter().flat_map(|s| s.letters()).collect(),
            Tail::Growth(g) => {
                let first = self.tail_start();
                let mut out = g.layout.eventual_letters();
                // Letters that appear early in the tail stay present: counts never decrease.
                out.extend(g.letters(first));
                out
            }
        }
    }

    /// Whether `q_n >= 2` at every stage.
    pub fn is_standard(&self) -> bool {
        if self.preperiod.iter().any(|s| s.cut() < 2) {
            return false;
        }
        match &self.tail {
            Tail::Periodic(p) => p.iter().all(|s| s.cut() >= 2),
            Tail::Growth(_) => self.cut(self.tail_start()) >= 2,
        }
    }

    /// The alphabets `A_n`, the stable alphabet `A_W`, `d_W` and `n_0`.
    pub fn alphabets(&self) -> AlphabetTower {
        let stable = self.tail_letters();
        let stage_letters: Vec<_> = self.preperiod.iter().map(|s| s.letters()).collect();
        let last_foreign = stage_letters.iter().rposition(|s| !s.is_subset(&stable));
        AlphabetTower {
            rank: stable.len(),
            stabilization: last_foreign.map_or(1, |k| k + 2),
            stable,
            stage_letters,
        }
    }

    /// The vector `f_n(a) = #{i < q_{n-1} : a_{n-1,i} = a}` indexed by `A_n`.
    pub fn spacer_counts(&self, n: usize) -> Result<BTreeMap<Letter, u64>, ParamError> {
        if n == 0 {
            return Err(ParamError::LevelZero);
        }
        let mut out: BTreeMap<Letter, u64> = self.alphabets().level(n).into_iter().map(|a| (a, 0)).collect();
        for (a, c) in self.stage_counts(n - 1) {
            out.insert(a, c);
        }
        Ok(out)
    }
}
