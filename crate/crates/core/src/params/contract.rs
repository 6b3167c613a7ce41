//! Contraction and standardization of schedules.
//!
//! Contracting at cut points `0 = n_0 < n_1 < ...` keeps only the words
//! `w_{n_k}`; the new stage `k` lists the spacers met when `w_{n_{k+1}}` is read
//! as copies of `w_{n_k}` separated by blocks of ones.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{GrowthTail, ParamError, ParameterSchedule, SpacerStage, Tail};

/// Cut points: an explicit prefix, continued arithmetically with `step`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutSequence {
    pub prefix: Vec<usize>,
    pub step: usize,
}

impl CutSequence {
    pub fn new(prefix: Vec<usize>, step: usize) -> Result<Self, ParamError> {
        if prefix.first() != Some(&0) {
            return Err(ParamError::InvalidCuts("cut points must start at 0".into()));
        }
        if prefix.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ParamError::InvalidCuts("cut points must be strictly increasing".into()));
        }
        if step == 0 {
            return Err(ParamError::InvalidCuts("continuation step must be positive".into()));
        }
        Ok(CutSequence { prefix, step })
    }

    /// `0, s, 2s, ...`
    pub fn every(step: usize) -> Result<Self, ParamError> {
        CutSequence::new(vec![0], step)
    }

    /// The `k`-th cut point.
    pub fn point(&self, k: usize) -> usize {
        match self.prefix.get(k) {
            Some(&p) => p,
            None => self.prefix.last().unwrap() + (k + 1 - self.prefix.len()) * self.step,
        }
    }
}

impl ParameterSchedule {
    /// Spacers of `w_end` read over copies of `w_start`.
    pub fn merged_stage(&self, start: usize, end: usize) -> SpacerStage {
        assert!(start < end, "empty stage range");
        (start + 1..end).fold(self.stage(start), |acc, n| acc.merge(&self.stage(n)))
    }

    /// The contraction along `cuts`.
    pub fn contract(&self, cuts: &CutSequence) -> ParameterSchedule {
        let t = self.tail_start();
        let mut points = cuts.prefix.clone();
        while *points.last().unwrap() < t {
            let last = *points.last().unwrap();
            points.push(last + cuts.step);
        }
        let preperiod: Vec<SpacerStage> = points.windows(2).map(|w| self.merged_stage(w[0], w[1])).collect();
        let last = *points.last().unwrap();
        let s = cuts.step;
        let tail = match self.tail() {
            Tail::Periodic(p) => {
                let len = p.len() / gcd(p.len(), s);
                Tail::Periodic((0..len).map(|j| self.merged_stage(last + j * s, last + (j + 1) * s)).collect())
            }
            Tail::Growth(g) => {
                let t_new = preperiod.len() as i64;
                Tail::Growth(GrowthTail {
                    layout: g.layout.clone(),
                    shift: g.shift + g.batch as i64 * (last as i64 - s as i64 * t_new),
                    batch: g.batch * s as u64,
                })
            }
        };
        ParameterSchedule::new(preperiod, tail).expect("contraction of a valid schedule is valid")
    }

    /// An equivalent schedule with `q_n >= 2` everywhere, merging each stage with
    /// `q_n = 1` into its successor.
    pub fn standardize(&self) -> ParameterSchedule {
        if self.is_standard() {
            return self.clone();
        }
        let t = self.tail_start();
        match self.tail() {
            Tail::Periodic(p) => {
                let period = p.len();
                let mut points = vec![0usize];
                let mut seen: HashMap<usize, usize> = HashMap::new();
                loop {
                    let c = *points.last().unwrap();
                    if c >= t {
                        let phase = (c - t) % period;
                        if let Some(&i) = seen.get(&phase) {
                            let pre = points[..=i].windows(2).map(|w| self.merged_stage(w[0], w[1])).collect();
                            let per = points[i..].windows(2).map(|w| self.merged_stage(w[0], w[1])).collect();
                            return ParameterSchedule::new(pre, Tail::Periodic(per)).expect("valid");
                        }
                        seen.insert(phase, points.len() - 1);
                    }
                    points.push(next_greedy_cut(self, c));
                }
            }
            Tail::Growth(_) => {
                // Tail cuts never decrease, so once q_n >= 2 it stays so.
                let Some(s) = (t..t + 64).find(|&n| self.cut(n) >= 2) else {
                    // q_n = 1 forever: the tail repeats a single one-spacer stage.
                    let periodic = ParameterSchedule::new(
                        self.preperiod().to_vec(),
                        Tail::Periodic(vec![self.stage(t)]),
                    )
                    .expect("valid");
                    return periodic.standardize();
                };
                let mut points = vec![0usize];
                while *points.last().unwrap() < s {
                    let c = *points.last().unwrap();
                    points.push(next_greedy_cut(self, c));
                }
                self.contract(&CutSequence::new(points, 1).expect("greedy cuts increase"))
            }
        }
    }
}

fn next_greedy_cut(s: &ParameterSchedule, c: usize) -> usize {
    if s.cut(c) >= 2 {
        c + 1
    } else {
        c + 2
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{CountRule, GrowthLayout};

    fn chacon() -> ParameterSchedule {
        ParameterSchedule::periodic(vec![], vec![vec![0, 1]]).unwrap()
    }

    #[test]
    fn chacon_pairs() {
        let c = chacon().contract(&CutSequence::every(2).unwrap());
        assert_eq!(c.stage(0).spacers(), &[0, 1, 0, 0, 1, 1, 0, 1]);
        assert_eq!(c.cut(0) + 1, 9);
        assert_eq!(c.stage(5), c.stage(0));
    }

    #[test]
    fn identity_cuts() {
        let s = ParameterSchedule::periodic(vec![vec![3], vec![1, 2]], vec![vec![0, 1], vec![2, 2, 0]]).unwrap();
        let c = s.contract(&CutSequence::every(1).unwrap());
        for n in 0..12 {
            assert_eq!(c.stage(n), s.stage(n));
        }
    }

    #[test]
    fn standardize_merges_single_spacer_stage() {
        let s = ParameterSchedule::periodic(vec![vec![5]], vec![vec![0, 1]]).unwrap();
        let st = s.standardize();
        assert_eq!(st.preperiod().len(), 1);
        assert_eq!(st.stage(0).spacers(), &[5, 0, 5, 1, 5]);
        assert_eq!(st.stage(0).cut(), 5);
        assert_eq!(st.stage(1).spacers(), &[0, 1]);
        assert!(st.is_standard());
        assert_eq!(st.standardize(), st);
    }

    #[test]
    fn standardize_leaves_standard_schedules_alone() {
        assert_eq!(chacon().standardize(), chacon());
        let g = ParameterSchedule::growth(
            vec![],
            GrowthTail::new(GrowthLayout::Cyclic {
                cut: CountRule::Affine { base: 2, slope: 1 },
                spacer_pattern: vec![0, 1],
            }),
        )
        .unwrap();
        assert_eq!(g.standardize(), g);
    }

    #[test]
    fn standardize_periodic_ones() {
        let s = ParameterSchedule::periodic(vec![], vec![vec![2], vec![0, 1], vec![3]]).unwrap();
        let st = s.standardize();
        assert!(st.is_standard());
        for k in 0..10 {
            assert!(st.cut(k) >= 2);
        }
    }

    #[test]
    fn growth_contraction_composes() {
        let g = ParameterSchedule::growth(
            vec![vec![1, 1]],
            GrowthTail::new(GrowthLayout::Runs {
                runs: vec![
                    crate::params::Run { word: vec![0], repeat: CountRule::Affine { base: 1, slope: 1 } },
                    crate::params::Run { word: vec![2], repeat: CountRule::constant(1) },
                ],
            }),
        )
        .unwrap();
        let a = CutSequence::new(vec![0, 1, 3], 2).unwrap();
        let b = CutSequence::new(vec![0, 2], 3).unwrap();
        let ab = g.contract(&a).contract(&b);
        let composed = CutSequence::new((0..4).map(|k| a.point(b.point(k))).collect(), a.step * b.step).unwrap();
        let direct = g.contract(&composed);
        for n in 0..3 {
            assert_eq!(ab.stage(n), direct.stage(n), "stage {n}");
        }
    }
}
