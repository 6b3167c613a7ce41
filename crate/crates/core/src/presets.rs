//! Named schedules for the standard worked examples.

use serde::Serialize;

use crate::params::{CountRule, GrowthLayout, GrowthTail, Letter, ParamError, ParameterSchedule, Run};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PresetInfo {
    pub name: &'static str,
    pub description: &'static str,
}

pub const PRESETS: &[PresetInfo] = &[
    PresetInfo { name: "chacon", description: "Chacon subshift: w_{n+1} = w_n w_n 1 w_n" },
    PresetInfo { name: "four-letter", description: "stages alternate (a,b) = (1,2) and (c,d) = (3,4)" },
    PresetInfo {
        name: "non-exact-rank",
        description: "stage k = 0 1^{k+1}: the letter 0 keeps a bounded count while q_k grows",
    },
    PresetInfo {
        name: "exact-not-lr",
        description: "tau_n(a) = a^n b^{2n-1} a b, tau_n(b) = a^n b^{2n-1} b b with a = 1, b = 2",
    },
    PresetInfo {
        name: "dwmu-one",
        description: "tau_n(a) = a^n b a^n, tau_n(b) = a^n b a^{n-2} b a with a = 2, b = 1",
    },
    PresetInfo {
        name: "measurable-realization",
        description: "tau_n(a) = U^{p g(n)} W^p v^{p-1} a v with g(n) = g_base^n",
    },
];

pub fn chacon() -> ParameterSchedule {
    ParameterSchedule::periodic(vec![], vec![vec![0, 1]]).expect("valid")
}

pub fn four_letter() -> ParameterSchedule {
    ParameterSchedule::periodic(vec![], vec![vec![1, 2], vec![3, 4]]).expect("valid")
}

fn run(word: Vec<Letter>, repeat: CountRule) -> Run {
    Run { word, repeat }
}

fn affine(base: i64, slope: i64) -> CountRule {
    CountRule::Affine { base, slope }
}

pub fn non_exact_rank() -> ParameterSchedule {
    let layout = GrowthLayout::Runs { runs: vec![run(vec![0], CountRule::constant(1)), run(vec![1], affine(1, 1))] };
    ParameterSchedule::growth(vec![], GrowthTail::new(layout)).expect("valid")
}

/// Letter of `exact-not-lr` playing the role of `a`.
pub const EXACT_NOT_LR_A: Letter = 1;
/// Letter of `exact-not-lr` playing the role of `b`.
pub const EXACT_NOT_LR_B: Letter = 2;

pub fn exact_not_lr() -> ParameterSchedule {
    let (a, b) = (EXACT_NOT_LR_A, EXACT_NOT_LR_B);
    let layout = GrowthLayout::Runs {
        runs: vec![run(vec![b], CountRule::constant(1)), run(vec![a], affine(1, 1)), run(vec![b], affine(1, 2))],
    };
    ParameterSchedule::growth(vec![], GrowthTail::new(layout)).expect("valid")
}

/// Letter of `dwmu-one` playing the role of `a`.
pub const DWMU_A: Letter = 2;
/// Letter of `dwmu-one` playing the role of `b`.
pub const DWMU_B: Letter = 1;

/// Stage `k >= 1` is `a a^{k+1} b a^{k-1}`; stage 0 is `a b`, giving `τ_1` length 3.
pub fn dwmu_one() -> ParameterSchedule {
    let (a, b) = (DWMU_A, DWMU_B);
    let layout = GrowthLayout::Runs {
        runs: vec![
            run(vec![a], CountRule::constant(1)),
            run(vec![a], affine(1, 1)),
            run(vec![b], CountRule::constant(1)),
            run(vec![a], affine(-1, 1)),
        ],
    };
    ParameterSchedule::growth(vec![vec![a, b]], GrowthTail::new(layout)).expect("valid")
}

/// Letters used by [`measurable_realization`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RealizationLetters {
    /// `a_1 .. a_{d'}`, each one less than a multiple of `p`.
    pub u: Vec<Letter>,
    /// The remaining letters other than `v`.
    pub w: Vec<Letter>,
    /// `a_d = a_{d'} + 1`.
    pub v: Letter,
}

pub fn realization_letters(p: u64, d: usize, d_prime: usize) -> RealizationLetters {
    let u: Vec<Letter> = (1..=d_prime as u64).map(|i| p * i - 1).collect();
    let v = p * d_prime as u64;
    let w = (1..(d - d_prime) as u64).map(|j| v + j).collect();
    RealizationLetters { u, w, v }
}

/// `τ_n(a) = U^{p g(n)} W^p v^{p-1} a v` with `g(n) = g_base^n`.
pub fn measurable_realization(p: u64, d: usize, d_prime: usize, g_base: u64) -> Result<ParameterSchedule, ParamError> {
    if p < 2 || !(2..p).take_while(|k| k * k <= p).all(|k| p % k != 0) {
        return Err(ParamError::InvalidRule(format!("p = {p} is not prime")));
    }
    if d_prime == 0 || d_prime >= d {
        return Err(ParamError::InvalidRule("need 1 <= d' < d".into()));
    }
    if g_base < 2 {
        return Err(ParamError::InvalidRule("g_base must be at least 2 so that Σ 1/g(n) converges".into()));
    }
    let RealizationLetters { u, w, v } = realization_letters(p, d, d_prime);
    let mut runs = vec![
        run(vec![v], CountRule::constant(1)),
        run(u, CountRule::Exponential { scale: p * g_base, base: g_base }),
    ];
    if !w.is_empty() {
        runs.push(run(w, CountRule::constant(p)));
    }
    runs.push(run(vec![v], CountRule::constant(p - 1)));
    ParameterSchedule::growth(vec![], GrowthTail::new(GrowthLayout::Runs { runs }))
}

/// Looks up a preset; `measurable-realization` uses `p = 2, d = 3, d' = 1, g_base = 2`.
pub fn preset(name: &str) -> Option<ParameterSchedule> {
    Some(match name {
        "chacon" => chacon(),
        "four-letter" => four_letter(),
        "non-exact-rank" => non_exact_rank(),
        "exact-not-lr" => exact_not_lr(),
        "dwmu-one" => dwmu_one(),
        "measurable-realization" => measurable_realization(2, 3, 1, 2).expect("valid defaults"),
        _ => return None,
    })
}
