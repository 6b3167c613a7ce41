//! Dimension group, orbit-equivalence invariant, and realization of
//! Ferenczi-type data as a schedule.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{from_biguint, RationalInterval, SymbolVector};
use crate::measure::MeasureError;
use crate::params::{Letter, ParamError, ParameterSchedule, SpacerStage, Tail};
use crate::spectra::is_prime;
use crate::words::Subshift;

/// Positions of lookahead allowed when choosing the next contraction cut in [`realize`].
pub const DEFAULT_LOOKAHEAD: usize = 64;
/// Largest stage (number of spacers) [`realize`] will write out.
pub const MAX_STAGE: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DimGroupError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("base sequence terms must be positive")]
    ZeroTerm,
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("the expansion of z({letter}) terminates at position {position}; the letter would not recur")]
    Terminating { letter: Letter, position: usize },
    #[error("no admissible joint digit block within {lookahead} positions after position {position}")]
    Infeasible { position: usize, lookahead: usize },
    #[error("a merged stage at position {position} would need more than {max} spacers")]
    StageTooLarge { position: usize, max: u64 },
    #[error("vector has {got} coordinates, expected {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("denominator {0} is too large to factor")]
    Factor(BigInt),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// An eventually periodic sequence of positive integers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventuallyPeriodic {
    pub preperiod: Vec<u64>,
    pub period: Vec<u64>,
}

impl EventuallyPeriodic {
    pub fn constant(x: u64) -> Self {
        EventuallyPeriodic { preperiod: vec![], period: vec![x] }
    }

    pub fn get(&self, n: usize) -> u64 {
        match self.preperiod.get(n) {
            Some(&x) => x,
            None => self.period[(n - self.preperiod.len()) % self.period.len()],
        }
    }

    fn phase(&self, n: usize) -> Option<usize> {
        (n >= self.preperiod.len()).then(|| (n - self.preperiod.len()) % self.period.len())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Valuation {
    Finite(u64),
    Infinite,
}

/// Eventual `p`-adic valuation of the partial products `a_0 ⋯ a_n`.
pub fn valuation_profile(base: &EventuallyPeriodic, p: u64) -> Result<Valuation, DimGroupError> {
    if !is_prime(p) {
        return Err(DimGroupError::NotPrime(p));
    }
    if base.period.is_empty() {
        return Err(DimGroupError::InvalidData("empty period".into()));
    }
    if base.preperiod.iter().chain(&base.period).any(|&x| x == 0) {
        return Err(DimGroupError::ZeroTerm);
    }
    if base.period.iter().any(|x| x % p == 0) {
        return Ok(Valuation::Infinite);
    }
    let v = base.preperiod.iter().map(|&x| valuation(x, p)).sum();
    Ok(Valuation::Finite(v))
}

fn valuation(mut x: u64, p: u64) -> u64 {
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

fn prime_factors(n: &BigInt) -> Result<BTreeSet<u64>, DimGroupError> {
    let mut x = n.abs().to_u64().ok_or_else(|| DimGroupError::Factor(n.clone()))?;
    let mut out = BTreeSet::new();
    let mut d = 2u64;
    while d * d <= x {
        while x % d == 0 {
            out.insert(d);
            x /= d;
        }
        d += 1;
    }
    if x > 1 {
        out.insert(x);
    }
    Ok(out)
}

/// The base `(q_n + 1)_{n >= n_0 - 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailBase {
    pub preperiod: Vec<u64>,
    /// Empty when the cuts grow without bound.
    pub period: Vec<u64>,
    pub growing: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionGroupDescriptor {
    /// `a′ = min A_W`.
    pub a_prime: Letter,
    pub b_w: BTreeSet<Letter>,
    pub stabilization: usize,
    pub tail_base: TailBase,
    /// Primes `p` with `Z[1/p]` inside the tail ring; `None` for growing cuts.
    pub ring_primes: Option<BTreeSet<u64>>,
    /// `z(b) = μ̂(b)` on `B_W` and `z(a′) = 1`.
    pub z: BTreeMap<Letter, RationalInterval>,
    #[serde(with = "crate::linalg::decimal_map")]
    pub u: BTreeMap<Letter, BigUint>,
    /// Primitive integer normal of the cone `{x : x·z > 0}`, in [`coordinates`](Self::coordinates) order.
    #[serde(with = "crate::linalg::decimal_opt_list")]
    pub cone_normal: Option<Vec<BigInt>>,
    pub topological_rank: usize,
    pub group: String,
}

impl DimensionGroupDescriptor {
    /// `B_W` in increasing order, then `a′`.
    pub fn coordinates(&self) -> Vec<Letter> {
        self.b_w.iter().copied().chain([self.a_prime]).collect()
    }

    pub fn unit(&self) -> Vec<BigUint> {
        self.coordinates().iter().map(|a| self.u[a].clone()).collect()
    }

    pub fn exact_z(&self) -> Option<SymbolVector<BigRational>> {
        self.z.iter().map(|(&a, v)| v.exact_value().map(|x| (a, x.clone()))).collect()
    }

    fn dot(&self, x: &[BigRational], weights: &BTreeMap<Letter, RationalInterval>) -> Result<RationalInterval, DimGroupError> {
        let coords = self.coordinates();
        if x.len() != coords.len() {
            return Err(DimGroupError::Dimension { got: x.len(), expected: coords.len() });
        }
        Ok(coords.iter().zip(x).fold(RationalInterval::zero(), |acc, (a, xi)| &acc + &weights[a].scale(xi)))
    }

    /// Positive-cone membership: `x = 0` or `x·z > 0`; `None` when the bracket on `z` cannot decide.
    pub fn is_positive(&self, x: &[BigRational]) -> Result<Option<bool>, DimGroupError> {
        if x.iter().all(Zero::is_zero) {
            return Ok(Some(true));
        }
        let d = self.dot(x, &self.z)?;
        Ok(if d.lo().is_positive() {
            Some(true)
        } else if !d.hi().is_positive() {
            Some(false)
        } else {
            None
        })
    }

    /// Group membership for the given schedule: integer `B_W` coordinates and a last
    /// coordinate whose denominator only has primes dividing infinitely many `q_n + 1`.
    pub fn contains(&self, schedule: &ParameterSchedule, x: &[BigRational]) -> Result<bool, DimGroupError> {
        let coords = self.coordinates();
        if x.len() != coords.len() {
            return Err(DimGroupError::Dimension { got: x.len(), expected: coords.len() });
        }
        let (last, head) = x.split_last().unwrap();
        if head.iter().any(|v| !v.is_integer()) {
            return Ok(false);
        }
        for p in prime_factors(last.denom())? {
            if !divides_infinitely_often(schedule, p) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The data `(B, r, z, u)` this descriptor encodes, labeled by the letters of `B_W`.
    pub fn ferenczi_data(&self) -> Option<FerencziTypeData> {
        let z = self.exact_z()?;
        if self.tail_base.growing {
            return None;
        }
        let minus_one = |v: &[u64]| v.iter().map(|x| x - 1).collect();
        Some(FerencziTypeData {
            z: self.b_w.iter().map(|b| (*b, z[b].clone())).collect(),
            v: self.b_w.iter().map(|b| (*b, self.u[b].to_u64().unwrap())).collect(),
            w: self.u[&self.a_prime].to_u64()?,
            r: EventuallyPeriodic { preperiod: minus_one(&self.tail_base.preperiod), period: minus_one(&self.tail_base.period) },
        })
    }
}

fn divides_infinitely_often(schedule: &ParameterSchedule, p: u64) -> bool {
    let (start, period) = schedule.residue_cycle(p);
    (start..start + period).any(|n| (schedule.residue(n, p).cut + 1) % p == 0)
}

fn ring_name(primes: &Option<BTreeSet<u64>>) -> String {
    match primes {
        None => "Z[(q_n + 1)]".into(),
        Some(ps) if ps.is_empty() => "Z".into(),
        Some(ps) => {
            let inv: Vec<String> = ps.iter().map(|p| format!("1/{p}")).collect();
            format!("Z[{}]", inv.join(", "))
        }
    }
}

fn primitive_normal(z: &SymbolVector<BigRational>, coords: &[Letter]) -> Vec<BigInt> {
    let l = coords.iter().fold(BigInt::one(), |acc, a| acc.lcm(z[a].denom()));
    let scaled: Vec<BigInt> = coords.iter().map(|a| (&z[a] * BigRational::from_integer(l.clone())).to_integer()).collect();
    let g = scaled.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    scaled.into_iter().map(|x| x / &g).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitEquivalenceDescriptor {
    /// `c = 1/(u·z)`.
    pub c: RationalInterval,
    pub z_tilde: BTreeMap<Letter, RationalInterval>,
    /// `z̃(b)` for `b ∈ B_W`.
    pub generators: Vec<RationalInterval>,
    /// `z̃(a′)`, to be multiplied by the tail ring.
    pub coset_generator: RationalInterval,
    pub ring: String,
    pub rationally_independent: Option<bool>,
    /// Integer relations `n·z̃(b) = m·z̃(a′)` when everything is rational.
    pub relations: Vec<String>,
    pub warnings: Vec<String>,
}

impl OrbitEquivalenceDescriptor {
    /// `x·z̃ > 0` or `x = 0`.
    pub fn is_positive(&self, dg: &DimensionGroupDescriptor, x: &[BigRational]) -> Result<Option<bool>, DimGroupError> {
        if x.iter().all(Zero::is_zero) {
            return Ok(Some(true));
        }
        let d = dg.dot(x, &self.z_tilde)?;
        Ok(if d.lo().is_positive() {
            Some(true)
        } else if !d.hi().is_positive() {
            Some(false)
        } else {
            None
        })
    }
}

/// Ferenczi-type data: `z` and `v` on the labels of `B`, `w`, and the cut sequence `r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FerencziTypeData {
    #[serde(with = "crate::linalg::ratio_map")]
    pub z: SymbolVector<BigRational>,
    pub v: BTreeMap<Letter, u64>,
    pub w: u64,
    pub r: EventuallyPeriodic,
}

impl FerencziTypeData {
    pub fn validate(&self) -> Result<(), DimGroupError> {
        let bad = |m: &str| Err(DimGroupError::InvalidData(m.into()));
        if self.z.is_empty() {
            return bad("B must be nonempty");
        }
        if !self.z.keys().eq(self.v.keys()) {
            return bad("z and v must be indexed by the same letters");
        }
        if self.z.values().any(|x| !x.is_positive() || *x >= BigRational::one()) {
            return bad("each z(b) must lie in (0, 1)");
        }
        if self.z.values().sum::<BigRational>() >= BigRational::one() {
            return bad("the entries of z must sum to less than 1");
        }
        let vs: BTreeSet<u64> = self.v.values().copied().collect();
        if vs.len() != self.v.len() || vs.contains(&0) {
            return bad("v entries must be positive and pairwise distinct");
        }
        if self.w == 0 {
            return bad("w must be positive");
        }
        if self.r.period.is_empty() {
            return bad("r needs a nonempty period");
        }
        if self.r.preperiod.iter().chain(&self.r.period).any(|&x| x < 2) {
            return bad("r_n must be at least 2");
        }
        Ok(())
    }
}

impl Subshift {
    pub fn dimension_group(&self) -> Result<DimensionGroupDescriptor, DimGroupError> {
        let alph = self.alphabets();
        let n0 = alph.stabilization;
        let a_prime = *alph.stable.first().unwrap();
        let b_w: BTreeSet<Letter> = alph.stable.iter().copied().filter(|&b| b != a_prime).collect();
        let v = self.v_vector(n0)?;
        let mut z: BTreeMap<Letter, RationalInterval> = b_w.iter().map(|b| (*b, v[b].clone())).collect();
        z.insert(a_prime, RationalInterval::exact(BigRational::one()));
        let mut u: BTreeMap<Letter, BigUint> = b_w.iter().map(|&b| (b, BigUint::from(b - a_prime))).collect();
        u.insert(a_prime, BigUint::from(a_prime) + self.word_length(n0 - 1));

        let schedule = self.schedule();
        let t = schedule.tail_start().max(n0 - 1);
        let preperiod: Vec<u64> = (n0 - 1..t).map(|n| schedule.cut(n) + 1).collect();
        let (period, growing) = match schedule.tail() {
            Tail::Periodic(p) => ((t..t + p.len()).map(|n| schedule.cut(n) + 1).collect(), false),
            Tail::Growth(_) => (vec![], true),
        };
        let ring_primes = (!growing).then(|| {
            period.iter().flat_map(|&x| prime_factors(&BigInt::from(x)).expect("small")).collect::<BTreeSet<u64>>()
        });
        let exact: Option<SymbolVector<BigRational>> =
            z.iter().map(|(&a, x)| x.exact_value().map(|y| (a, y.clone()))).collect();
        let coords: Vec<Letter> = b_w.iter().copied().chain([a_prime]).collect();
        let cone_normal = exact.map(|e| primitive_normal(&e, &coords));
        let group = match b_w.len() {
            1 => format!("Z × {}", ring_name(&ring_primes)),
            k => format!("Z^{k} × {}", ring_name(&ring_primes)),
        };
        Ok(DimensionGroupDescriptor {
            a_prime,
            b_w,
            stabilization: n0,
            tail_base: TailBase { preperiod, period, growing },
            ring_primes,
            z,
            u,
            cone_normal,
            topological_rank: alph.rank,
            group,
        })
    }

    pub fn orbit_equivalence(&self) -> Result<OrbitEquivalenceDescriptor, DimGroupError> {
        Ok(orbit_equivalence_of(&self.dimension_group()?))
    }
}

pub fn orbit_equivalence_of(dg: &DimensionGroupDescriptor) -> OrbitEquivalenceDescriptor {
    let uz = dg.z.iter().fold(RationalInterval::zero(), |acc, (a, x)| &acc + &x.scale(&from_biguint(&dg.u[a])));
    let c = RationalInterval::new(BigRational::one() / uz.hi(), BigRational::one() / uz.lo());
    let z_tilde: BTreeMap<Letter, RationalInterval> = dg.z.iter().map(|(&a, x)| (a, x.mul_nonneg(&c))).collect();
    let generators = dg.b_w.iter().map(|b| z_tilde[b].clone()).collect();
    let coset_generator = z_tilde[&dg.a_prime].clone();
    let mut warnings = Vec::new();
    let (rationally_independent, relations) = match dg.exact_z() {
        Some(z) => {
            let rel = dg
                .b_w
                .iter()
                .map(|b| format!("{}·z̃({b}) = {}·z̃({})", z[b].denom(), z[b].numer(), dg.a_prime))
                .collect();
            (Some(false), rel)
        }
        None => {
            warnings.push("z is only known as an interval; generators are brackets".into());
            (None, vec![])
        }
    };
    OrbitEquivalenceDescriptor {
        c,
        z_tilde,
        generators,
        coset_generator,
        ring: ring_name(&dg.ring_primes),
        rationally_independent,
        relations,
        warnings,
    }
}

/// Builds a schedule with `n_0 = 1` whose dimension group carries `data`.
///
/// Stage digits are the joint mixed-radix expansion of `z` in base `(r_n + 1)`.
/// Consecutive positions are merged whenever the digits at a single position
/// would leave no room for `a′`; a cut is placed at the first position where the
/// remainders `y_b` sum to less than 1 and `a′` keeps at least one slot.
pub fn realize(data: &FerencziTypeData) -> Result<ParameterSchedule, DimGroupError> {
    realize_with(data, DEFAULT_LOOKAHEAD)
}

pub fn realize_with(data: &FerencziTypeData, lookahead: usize) -> Result<ParameterSchedule, DimGroupError> {
    data.validate()?;
    let a_prime = data.w - 1;
    let labels: Vec<Letter> = data.z.keys().copied().collect();
    let spacer: Vec<Letter> = labels.iter().map(|b| a_prime + data.v[b]).collect();
    let one = BigRational::one();

    let mut y: Vec<BigRational> = labels.iter().map(|b| data.z[b].clone()).collect();
    let mut pos = 0usize;
    let mut stages: Vec<SpacerStage> = Vec::new();
    let mut seen: HashMap<(Vec<BigRational>, Option<usize>, usize), usize> = HashMap::new();
    let cycle_start = loop {
        // Positions in the preperiod never repeat; tag them by index.
        let key = match data.r.phase(pos) {
            Some(ph) => (y.clone(), Some(ph), 0),
            None => (y.clone(), None, pos),
        };
        if let Some(&i) = seen.get(&key) {
            break i;
        }
        seen.insert(key, stages.len());

        let mut base = BigInt::one();
        let mut next = y.clone();
        let mut chosen = None;
        for step in 1..=lookahead {
            let radix = BigInt::from(data.r.get(pos + step - 1) + 1);
            base *= &radix;
            for (i, yi) in next.iter_mut().enumerate() {
                let t = &*yi * BigRational::from_integer(radix.clone());
                *yi = &t - t.floor();
                if yi.is_zero() {
                    return Err(DimGroupError::Terminating { letter: labels[i], position: pos + step });
                }
            }
            let b = BigRational::from_integer(base.clone());
            let digits: Vec<BigInt> = y.iter().zip(&next).map(|(a, c)| (a * &b - c).to_integer()).collect();
            let spent: BigInt = digits.iter().sum();
            let free: BigInt = &base - 1 - &spent;
            if next.iter().sum::<BigRational>() < one && free >= BigInt::one() {
                chosen = Some((step, digits, free, base.clone()));
                break;
            }
        }
        let Some((step, digits, free, base)) = chosen else {
            return Err(DimGroupError::Infeasible { position: pos, lookahead });
        };
        if base > BigInt::from(MAX_STAGE) {
            return Err(DimGroupError::StageTooLarge { position: pos, max: MAX_STAGE });
        }
        let mut stage = vec![a_prime; free.to_usize().unwrap()];
        for (s, d) in spacer.iter().zip(&digits) {
            stage.extend(std::iter::repeat(*s).take(d.to_usize().unwrap()));
        }
        stages.push(SpacerStage::new(stage).expect("base >= 3"));
        y = next;
        pos += step;
    };
    let period = stages.split_off(cycle_start);
    Ok(ParameterSchedule::new(stages, Tail::Periodic(period))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{int, rat};
    use crate::presets;

    fn chacon() -> Subshift {
        Subshift::new(presets::chacon())
    }

    fn r(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn chacon_descriptor() {
        let dg = chacon().dimension_group().unwrap();
        assert_eq!(dg.a_prime, 0);
        assert_eq!(dg.coordinates(), vec![1, 0]);
        assert_eq!(dg.z[&1], RationalInterval::exact(rat(1, 2)));
        assert_eq!(dg.z[&0], RationalInterval::exact(int(1)));
        assert_eq!(dg.unit(), vec![BigUint::one(), BigUint::one()]);
        assert_eq!(dg.cone_normal, Some(vec![BigInt::from(1), BigInt::from(2)]));
        assert_eq!(dg.group, "Z × Z[1/3]");
        assert_eq!(dg.tail_base, TailBase { preperiod: vec![], period: vec![3], growing: false });
        assert_eq!(dg.is_positive(&r(&[1, 0])).unwrap(), Some(true));
        assert_eq!(dg.is_positive(&r(&[-2, 1])).unwrap(), Some(false));
        assert_eq!(dg.is_positive(&r(&[0, 0])).unwrap(), Some(true));
        let s = presets::chacon();
        assert!(dg.contains(&s, &[int(3), rat(5, 27)]).unwrap());
        assert!(!dg.contains(&s, &[int(3), rat(1, 2)]).unwrap());
        assert!(!dg.contains(&s, &[rat(1, 3), int(0)]).unwrap());
    }

    #[test]
    fn four_letter_rank() {
        let dg = Subshift::new(presets::four_letter()).dimension_group().unwrap();
        assert_eq!(dg.topological_rank, 4);
    }

    #[test]
    fn chacon_orbit_equivalence() {
        let oe = chacon().orbit_equivalence().unwrap();
        assert_eq!(oe.c, RationalInterval::exact(rat(2, 3)));
        assert_eq!(oe.generators, vec![RationalInterval::exact(rat(1, 3))]);
        assert_eq!(oe.coset_generator, RationalInterval::exact(rat(2, 3)));
        assert_eq!(oe.ring, "Z[1/3]");
        assert_eq!(oe.rationally_independent, Some(false));
    }

    #[test]
    fn valuations() {
        let three = EventuallyPeriodic::constant(3);
        assert_eq!(valuation_profile(&three, 3).unwrap(), Valuation::Infinite);
        assert_eq!(valuation_profile(&three, 2).unwrap(), Valuation::Finite(0));
        let mixed = EventuallyPeriodic { preperiod: vec![4], period: vec![3] };
        assert_eq!(valuation_profile(&mixed, 2).unwrap(), Valuation::Finite(2));
        assert_eq!(valuation_profile(&three, 4), Err(DimGroupError::NotPrime(4)));
    }

    #[test]
    fn realize_chacon() {
        let data = FerencziTypeData {
            z: [(7, rat(1, 2))].into(),
            v: [(7, 1)].into(),
            w: 1,
            r: EventuallyPeriodic::constant(2),
        };
        let s = realize(&data).unwrap();
        assert_eq!(s, presets::chacon());
    }

    #[test]
    fn terminating_expansion_is_reported() {
        let data = FerencziTypeData {
            z: [(1, rat(1, 3))].into(),
            v: [(1, 1)].into(),
            w: 1,
            r: EventuallyPeriodic::constant(2),
        };
        assert!(matches!(realize(&data), Err(DimGroupError::Terminating { letter: 1, .. })));
        let bad = FerencziTypeData { z: BTreeMap::from([(1, rat(3, 2))]), ..data };
        assert!(matches!(realize(&bad), Err(DimGroupError::InvalidData(_))));
    }

    #[test]
    fn data_json_round_trip() {
        let data = FerencziTypeData {
            z: [(1, rat(1, 5)), (2, rat(2, 7))].into(),
            v: [(1, 1), (2, 3)].into(),
            w: 2,
            r: EventuallyPeriodic { preperiod: vec![4], period: vec![2, 3] },
        };
        let text = serde_json::to_string(&data).unwrap();
        assert_eq!(serde_json::from_str::<FerencziTypeData>(&text).unwrap(), data);
    }
}
