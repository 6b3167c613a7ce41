#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ferenczi_core::linalg::SymbolMatrix;
use ferenczi_core::params::{Letter, ParameterSchedule};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random standard periodic schedule whose tail uses at least two letters.
pub fn random_periodic(rng: &mut ChaCha8Rng, max_cut: usize, max_letter: Letter) -> ParameterSchedule {
    loop {
        let stage = |rng: &mut ChaCha8Rng| -> Vec<Letter> {
            let q = rng.gen_range(2..=max_cut);
            (0..q).map(|_| rng.gen_range(0..=max_letter)).collect()
        };
        let pre: Vec<Vec<Letter>> = (0..rng.gen_range(0..=2)).map(|_| stage(rng)).collect();
        let period: Vec<Vec<Letter>> = (0..rng.gen_range(1..=3)).map(|_| stage(rng)).collect();
        let letters: BTreeSet<Letter> = period.iter().flatten().copied().collect();
        if letters.len() >= 2 {
            return ParameterSchedule::periodic(pre, period).unwrap();
        }
    }
}

/// Direct expansion `w_{n+1} = w_n 1^{a_0} w_n ... 1^{a_{q-1}} w_n`.
pub fn naive_word(s: &ParameterSchedule, n: usize) -> String {
    let mut w = "0".to_string();
    for k in 0..n {
        let mut next = w.clone();
        for &a in s.stage(k).spacers() {
            next.push_str(&"1".repeat(a as usize));
            next.push_str(&w);
        }
        w = next;
    }
    w
}

/// `(min, max)` zeros over all windows of length `len`, by sliding count.
pub fn window_zero_range(w: &str, len: usize) -> (usize, usize) {
    let b = w.as_bytes();
    let mut z = b[..len].iter().filter(|&&c| c == b'0').count();
    let (mut lo, mut hi) = (z, z);
    for i in len..b.len() {
        z = z + (b[i] == b'0') as usize - (b[i - len] == b'0') as usize;
        lo = lo.min(z);
        hi = hi.max(z);
    }
    (lo, hi)
}

pub fn factors(w: &str, len: usize) -> BTreeSet<String> {
    (0..=w.len().saturating_sub(len)).map(|i| w[i..i + len].to_string()).collect()
}

/// A level whose word contains every factor of length `len`: past the
/// preperiod, past one full period, and long enough.
pub fn deep_level(s: &ParameterSchedule, len: usize) -> usize {
    let mut n = 0;
    while naive_len(s, n) < len as u64 {
        n += 1;
    }
    let period = match s.tail() {
        ferenczi_core::params::Tail::Periodic(p) => p.len(),
        _ => 4,
    };
    n.max(s.tail_start()) + period + 1
}

pub fn naive_len(s: &ParameterSchedule, n: usize) -> u64 {
    (0..n).fold(1u64, |l, k| l * (s.cut(k) + 1) + s.spacer_sum(k))
}

/// Letter counts of a word, as a column of a composition matrix.
pub fn counts(word: &[Letter]) -> BTreeMap<Letter, u64> {
    let mut out = BTreeMap::new();
    for &a in word {
        *out.entry(a).or_insert(0) += 1;
    }
    out
}

/// Gauss-Jordan inverse over the rationals, with rows/cols in label order.
pub fn gauss_jordan_inverse(m: &SymbolMatrix) -> Option<Vec<Vec<BigRational>>> {
    let n = m.rows().len();
    let mut a: Vec<Vec<BigRational>> = m
        .rows()
        .iter()
        .map(|&r| {
            let mut row: Vec<BigRational> = m.cols().iter().map(|&c| m.get(r, c)).collect();
            row.extend((0..n).map(|j| if m.rows()[j] == r { BigRational::one() } else { BigRational::zero() }));
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x /= &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (x, y) in a[r].iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

pub fn matrix_rows(m: &SymbolMatrix) -> Vec<Vec<BigRational>> {
    m.rows().iter().map(|&r| m.cols().iter().map(|&c| m.get(r, c)).collect()).collect()
}

pub fn naive_product(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let n = b[0].len();
    a.iter()
        .map(|row| (0..n).map(|j| row.iter().zip(b).fold(BigRational::zero(), |s, (x, r)| s + x * &r[j])).collect())
        .collect()
}
