//! Circle arithmetic: 128-bit fixed-point fractional parts, the torus
//! distance `⟨x⟩`, continued fractions and Diophantine classification.

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArithmeticError {
    #[error("continued fraction precision exhausted after {trustworthy} trustworthy quotients")]
    PrecisionExhausted { trustworthy: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot parse `{0}` as a point of the circle")]
    Parse(String),
}

const TWO_POW_128: f64 = 340_282_366_920_938_463_463_374_607_431_768_211_456.0;

/// A point of the circle `ℝ/ℤ` stored as `value / 2^128`.
///
/// Addition and subtraction wrap modulo one exactly, so orbits of a rotation
/// never accumulate drift.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FixedPointFrac(u128);

impl FixedPointFrac {
    pub const ZERO: Self = Self(0);
    pub const HALF: Self = Self(1 << 127);
    /// Smallest positive representable value, `2^-128`.
    pub const ULP: Self = Self(1);

    pub const fn from_raw(raw: u128) -> Self {
        Self(raw)
    }

    pub const fn raw(self) -> u128 {
        self.0
    }

    /// Reduces `x` modulo one. The result is exact: every double in `[0, 1)`
    /// has at most 53 significant bits.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite circle coordinate {x}");
        let r = x.rem_euclid(1.0);
        if r >= 1.0 {
            return Self::ZERO;
        }
        Self((r * TWO_POW_128) as u128)
    }

    /// Truncates to 53 significant bits, so the map is monotone, lands in
    /// `[0, 1)`, and keeps full relative precision for small values.
    pub fn to_f64(self) -> f64 {
        let shift = (128 - self.0.leading_zeros()).saturating_sub(53);
        ((self.0 >> shift) << shift) as f64 / TWO_POW_128
    }

    /// `num / den` reduced modulo one, rounded down to the grid.
    pub fn from_ratio(num: i128, den: u128) -> Self {
        assert!(den > 0, "zero denominator");
        let r = num.rem_euclid(den as i128) as u128;
        let scaled: BigUint = (BigUint::from(r) << 128u32) / BigUint::from(den);
        Self(low_u128(&scaled))
    }

    /// `n · self` modulo one, exact for every integer `n`.
    pub fn mul_int(self, n: i128) -> Self {
        Self(self.0.wrapping_mul(n as u128))
    }

    /// `⟨self⟩`, the distance to the nearest integer, as a fixed-point value in `[0, 1/2]`.
    pub fn norm(self) -> Self {
        Self(self.0.min(self.0.wrapping_neg()))
    }

    /// Signed representative in `[-1/2, 1/2)` as a double.
    pub fn to_signed_f64(self) -> f64 {
        if self.0 >= 1 << 127 {
            -(self.0.wrapping_neg().min(1 << 127) as f64 / TWO_POW_128)
        } else {
            self.0 as f64 / TWO_POW_128
        }
    }

    /// Torus distance as an exact fixed-point value.
    pub fn dist(self, other: Self) -> Self {
        (self - other).norm()
    }
}

fn low_u128(x: &BigUint) -> u128 {
    let digits = x.to_u64_digits();
    let lo = digits.first().copied().unwrap_or(0) as u128;
    let hi = digits.get(1).copied().unwrap_or(0) as u128;
    lo | (hi << 64)
}

impl Add for FixedPointFrac {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0.wrapping_add(rhs.0))
    }
}

impl AddAssign for FixedPointFrac {
    fn add_assign(&mut self, rhs: Self) {
        self.0 = self.0.wrapping_add(rhs.0);
    }
}

impl Sub for FixedPointFrac {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0.wrapping_sub(rhs.0))
    }
}

impl SubAssign for FixedPointFrac {
    fn sub_assign(&mut self, rhs: Self) {
        self.0 = self.0.wrapping_sub(rhs.0);
    }
}

impl Neg for FixedPointFrac {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.wrapping_neg())
    }
}

impl fmt::Debug for FixedPointFrac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Frac({:.17} = {:#034x})", self.to_f64(), self.0)
    }
}

impl fmt::Display for FixedPointFrac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.17}", self.to_f64())
    }
}

/// Accepts a preset name, a `0x`-prefixed raw value, `p/q`, or a decimal.
impl FromStr for FixedPointFrac {
    type Err = ArithmeticError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(preset) = s.parse::<AlphaPreset>() {
            return Ok(preset.value());
        }
        let bad = || ArithmeticError::Parse(s.to_string());
        if let Some(hex) = s.strip_prefix("0x") {
            return u128::from_str_radix(hex, 16).map(Self).map_err(|_| bad());
        }
        if let Some((p, q)) = s.split_once('/') {
            let p: i128 = p.trim().parse().map_err(|_| bad())?;
            let q: u128 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            return Ok(Self::from_ratio(p, q));
        }
        let x: f64 = s.parse().map_err(|_| bad())?;
        if !x.is_finite() {
            return Err(bad());
        }
        Ok(Self::from_f64(x))
    }
}

// Serialized as the raw hex so configs round-trip bit-exactly.
impl Serialize for FixedPointFrac {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format!("{:#x}", self.0))
    }
}

impl<'de> Deserialize<'de> for FixedPointFrac {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `⟨x − y⟩`: distance on the circle, in `[0, 1/2]`.
pub fn frac_dist(x: FixedPointFrac, y: FixedPointFrac) -> f64 {
    x.dist(y).to_f64()
}

/// Named rotation numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaPreset {
    /// `(√5 − 1)/2`
    Golden,
    /// `√2 − 1`
    Sqrt2,
    /// `Σ_{k≥1} 10^(−k!)`
    Liouville10,
}

impl AlphaPreset {
    pub const ALL: [AlphaPreset; 3] = [Self::Golden, Self::Sqrt2, Self::Liouville10];

    pub fn name(self) -> &'static str {
        match self {
            Self::Golden => "golden",
            Self::Sqrt2 => "sqrt2",
            Self::Liouville10 => "liouville10",
        }
    }

    /// Value rounded to the nearest grid point.
    pub fn value(self) -> FixedPointFrac {
        let one = BigUint::from(1u32);
        // Work with 2^256 scaling and round once at the end.
        let scaled: BigUint = match self {
            Self::Golden => (BigUint::from(5u32) << 512u32).sqrt() - (&one << 256u32),
            Self::Sqrt2 => (BigUint::from(2u32) << 512u32).sqrt() - (&one << 256u32),
            Self::Liouville10 => {
                // Terms beyond 5! = 120 digits are far below 2^-256.
                let digits = 120u32;
                let num = (1..=5u32)
                    .map(|k| (1..=k).product::<u32>())
                    .map(|f| BigUint::from(10u32).pow(digits - f))
                    .fold(BigUint::from(0u32), |acc, t| acc + t);
                (num << 256u32) / BigUint::from(10u32).pow(digits)
            }
        };
        let scaled = match self {
            Self::Golden => scaled >> 1u32,
            _ => scaled,
        };
        let rounded: BigUint = (scaled + (&one << 127u32)) >> 128u32;
        FixedPointFrac(low_u128(&rounded))
    }
}

impl FromStr for AlphaPreset {
    type Err = ArithmeticError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "golden" => Ok(Self::Golden),
            "sqrt2" => Ok(Self::Sqrt2),
            "liouville10" => Ok(Self::Liouville10),
            _ => Err(ArithmeticError::Parse(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergent {
    pub p: u128,
    pub q: u128,
}

/// Partial quotients `a_1, a_2, …` of `α ∈ [0, 1)` and the convergents
/// `p_k/q_k`, seeded by `(p_{-1}, q_{-1}) = (1, 0)` and `(p_0, q_0) = (0, 1)`.
///
/// Only quotients shared by every real number within one grid step of the
/// stored value are kept. A remainder below `2^-100` also ends the expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    pub alpha: FixedPointFrac,
    pub partial_quotients: Vec<u128>,
    pub convergents: Vec<Convergent>,
    /// True when fewer quotients than requested could be trusted.
    pub precision_exhausted: bool,
}

const REMAINDER_FLOOR_BITS: u32 = 100;

/// Quotients of `num / 2^128`. The Euclidean remainders are the scaled
/// distances `2^128 ⟨q_k α⟩`; the expansion ends once one drops below `floor`.
/// Returns the quotients and whether the floor ended them.
fn euclid_quotients(num: u128, floor: u128) -> (Vec<u128>, bool) {
    if num == 0 {
        return (Vec::new(), true);
    }
    let mut out = Vec::new();
    let mut a = u128::MAX / num;
    let mut rem = u128::MAX - a * num;
    if rem + 1 == num {
        match a.checked_add(1) {
            Some(v) => a = v,
            None => return (out, true),
        }
        rem = 0;
    } else {
        rem += 1;
    }
    out.push(a);
    let (mut x, mut y) = (num, rem);
    while y >= floor.max(1) {
        out.push(x / y);
        let r = x % y;
        x = y;
        y = r;
    }
    (out, y != 0 || floor <= 1)
}

impl ContinuedFraction {
    /// Expands as far as precision allows, up to `depth` quotients.
    pub fn expand_trusted(alpha: FixedPointFrac, depth: usize) -> Self {
        let v = alpha.raw();
        let (exact, hit_floor) = euclid_quotients(v, 1 << (128 - REMAINDER_FLOOR_BITS));
        let (lo, _) = euclid_quotients(v.saturating_sub(1), 0);
        let (hi, _) = euclid_quotients(v.saturating_add(1), 0);
        let common = if v == 0 || v == u128::MAX {
            0
        } else {
            lo.iter().zip(&hi).take_while(|(a, b)| a == b).count()
        };
        // A remainder below the floor shortly after the neighbours disagree
        // means the value is a rational to working precision; its expansion
        // is taken in the canonical form with last quotient > 1.
        let trusted: Vec<u128> = if hit_floor && exact.len() <= common + 2 {
            let mut e = exact;
            if e.len() >= 2 && *e.last().unwrap() == 1 {
                e.pop();
                *e.last_mut().unwrap() += 1;
            }
            e
        } else {
            exact.into_iter().take(common).collect()
        };

        let mut quotients = Vec::new();
        let mut convergents = Vec::new();
        let (mut p_prev, mut q_prev) = (1u128, 0u128);
        let (mut p, mut q) = (0u128, 1u128);
        for &a in trusted.iter().take(depth) {
            let next = a
                .checked_mul(q)
                .and_then(|x| x.checked_add(q_prev))
                .zip(a.checked_mul(p).and_then(|x| x.checked_add(p_prev)));
            let Some((q_next, p_next)) = next else { break };
            quotients.push(a);
            convergents.push(Convergent {
                p: p_next,
                q: q_next,
            });
            (p_prev, q_prev, p, q) = (p, q, p_next, q_next);
        }
        let precision_exhausted = quotients.len() < depth;
        Self {
            alpha,
            partial_quotients: quotients,
            convergents,
            precision_exhausted,
        }
    }

    pub fn denominators(&self) -> Vec<u128> {
        self.convergents.iter().map(|c| c.q).collect()
    }

    pub fn len(&self) -> usize {
        self.partial_quotients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partial_quotients.is_empty()
    }
}

/// Expansion to exactly `depth` quotients, or `PrecisionExhausted` with
/// the number of quotients that could be trusted.
pub fn cf_expand(alpha: FixedPointFrac, depth: usize) -> Result<ContinuedFraction, ArithmeticError> {
    let cf = ContinuedFraction::expand_trusted(alpha, depth);
    if cf.precision_exhausted {
        Err(ArithmeticError::PrecisionExhausted {
            trustworthy: cf.len(),
        })
    } else {
        Ok(cf)
    }
}

pub fn convergent_denominators(cf: &ContinuedFraction) -> Vec<u128> {
    cf.denominators()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    BadlyApproximableUpToBound,
    NotBadlyApproximableWitness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifyMethod {
    /// Scan every `q ≤ q_max`.
    ExhaustiveScan,
    /// Scan convergent denominators only. Any `q` with `q⟨qα⟩ ≤ c` is preceded
    /// by a convergent `q_k ≤ q` with the same property, so both methods
    /// return the same first witness.
    Convergents,
}

/// Bounded-horizon verdict. It names `q_max` and never claims more.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineVerdict {
    pub alpha: FixedPointFrac,
    pub c: f64,
    pub q_max: u128,
    pub verdict: Verdict,
    pub witness_q: Option<u128>,
    pub method: ClassifyMethod,
    /// Largest partial quotient among convergents with `q_k ≤ q_max`.
    pub max_partial_quotient: Option<u128>,
}

fn witnesses(alpha: FixedPointFrac, q: u128, c: f64) -> bool {
    (q as f64) * alpha.mul_int(q as i128).norm().to_f64() <= c
}

pub fn classify_badly_approximable(
    alpha: FixedPointFrac,
    c: f64,
    q_max: u128,
    method: ClassifyMethod,
) -> Result<DiophantineVerdict, ArithmeticError> {
    if c.is_nan() || c <= 0.0 {
        return Err(ArithmeticError::InvalidParameter(format!("c must be positive, got {c}")));
    }
    if q_max == 0 {
        return Err(ArithmeticError::InvalidParameter("q_max must be at least 1".into()));
    }
    let cf = ContinuedFraction::expand_trusted(alpha, 256);
    let max_partial_quotient = cf
        .partial_quotients
        .iter()
        .zip(&cf.convergents)
        .filter(|(_, conv)| conv.q <= q_max)
        .map(|(a, _)| *a)
        .max();

    let witness_q = match method {
        ClassifyMethod::ExhaustiveScan => {
            let mut x = FixedPointFrac::ZERO;
            let mut found = None;
            for q in 1..=q_max {
                x += alpha;
                if (q as f64) * x.norm().to_f64() <= c {
                    found = Some(q);
                    break;
                }
            }
            found
        }
        ClassifyMethod::Convergents => std::iter::once(1u128)
            .chain(cf.denominators())
            .take_while(|&q| q <= q_max)
            .find(|&q| witnesses(alpha, q, c)),
    };
    Ok(DiophantineVerdict {
        alpha,
        c,
        q_max,
        verdict: if witness_q.is_some() {
            Verdict::NotBadlyApproximableWitness
        } else {
            Verdict::BadlyApproximableUpToBound
        },
        witness_q,
        method,
        max_partial_quotient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(x: f64) -> FixedPointFrac {
        FixedPointFrac::from_f64(x)
    }

    #[test]
    fn frac_dist_examples() {
        assert!((frac_dist(f(0.9), f(0.2)) - 0.3).abs() < 1e-15);
        assert_eq!(frac_dist(f(0.37), f(0.37)), 0.0);
        assert_eq!(frac_dist(f(0.0), f(0.5)), 0.5);
    }

    #[test]
    fn f64_edges() {
        assert_eq!(f(-1e-30), FixedPointFrac::ZERO);
        assert_eq!(f(1.0), FixedPointFrac::ZERO);
        assert!(FixedPointFrac::from_raw(u128::MAX).to_f64() < 1.0);
        assert!((f(-0.25).to_f64() - 0.75).abs() < 1e-16);
        assert_eq!(f(0.75).to_signed_f64(), -0.25);
    }

    #[test]
    fn mul_int_wraps_for_negative_multipliers() {
        let a = f(0.25);
        assert_eq!(a.mul_int(-1), f(0.75));
        assert_eq!(a.mul_int(4), FixedPointFrac::ZERO);
        assert_eq!(a.mul_int(-7), f(0.25));
    }

    #[test]
    fn presets_match_doubles() {
        let g = AlphaPreset::Golden.value().to_f64();
        assert!((g - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        let s = AlphaPreset::Sqrt2.value().to_f64();
        assert!((s - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        let l = AlphaPreset::Liouville10.value().to_f64();
        assert!((l - 0.110_001).abs() < 1e-16);
    }

    #[test]
    fn golden_and_sqrt2_expansions() {
        let cf = cf_expand(AlphaPreset::Golden.value(), 6).unwrap();
        assert_eq!(cf.partial_quotients, vec![1; 6]);
        assert_eq!(convergent_denominators(&cf), vec![1, 2, 3, 5, 8, 13]);

        let cf = cf_expand(AlphaPreset::Sqrt2.value(), 5).unwrap();
        assert_eq!(cf.partial_quotients, vec![2; 5]);
        let cf4 = cf_expand(AlphaPreset::Sqrt2.value(), 4).unwrap();
        assert_eq!(cf4.denominators(), vec![2, 5, 12, 29]);
    }

    #[test]
    fn depth_zero_is_empty() {
        let cf = cf_expand(AlphaPreset::Golden.value(), 0).unwrap();
        assert!(cf.is_empty());
        assert!(convergent_denominators(&cf).is_empty());
    }

    #[test]
    fn rational_expansion_stops() {
        // 3/10 = [3, 3]; the grid value is within 2^-128 of 3/10, so no third
        // quotient can be trusted.
        let alpha: FixedPointFrac = "3/10".parse().unwrap();
        match cf_expand(alpha, 10) {
            Err(ArithmeticError::PrecisionExhausted { trustworthy }) => assert_eq!(trustworthy, 2),
            other => panic!("unexpected {other:?}"),
        }
        let cf = ContinuedFraction::expand_trusted(alpha, 10);
        assert_eq!(cf.partial_quotients, vec![3, 3]);
        assert_eq!(cf.denominators(), vec![3, 10]);

        // The double nearest 0.3 is a different number, 0.3 − 1.1e-17, and
        // sits just below 3/10 = [3, 2, 1].
        let cf = ContinuedFraction::expand_trusted("0.3".parse().unwrap(), 10);
        assert_eq!(&cf.partial_quotients[..3], &[3, 2, 1]);
        assert!(cf.partial_quotients[3] > 1_000_000_000_000);
    }

    #[test]
    fn zero_has_no_expansion() {
        let cf = ContinuedFraction::expand_trusted(FixedPointFrac::ZERO, 5);
        assert!(cf.is_empty());
        assert!(cf.precision_exhausted);
    }

    #[test]
    fn golden_expansion_is_long_and_all_ones() {
        let cf = ContinuedFraction::expand_trusted(AlphaPreset::Golden.value(), 500);
        assert!(cf.len() > 80, "only {} quotients", cf.len());
        assert!(cf.partial_quotients.iter().all(|&a| a == 1));
    }

    #[test]
    fn parse_forms() {
        assert_eq!("1/4".parse::<FixedPointFrac>().unwrap(), f(0.25));
        assert_eq!("-1/4".parse::<FixedPointFrac>().unwrap(), f(0.75));
        assert_eq!("golden".parse::<FixedPointFrac>().unwrap(), AlphaPreset::Golden.value());
        assert_eq!("0x80000000000000000000000000000000".parse::<FixedPointFrac>().unwrap(), FixedPointFrac::HALF);
        assert!("nope".parse::<FixedPointFrac>().is_err());
        assert!("1/0".parse::<FixedPointFrac>().is_err());
    }

    #[test]
    fn classify_rejects_bad_parameters() {
        let a = AlphaPreset::Golden.value();
        assert!(classify_badly_approximable(a, 0.2, 0, ClassifyMethod::ExhaustiveScan).is_err());
        assert!(classify_badly_approximable(a, 0.0, 10, ClassifyMethod::Convergents).is_err());
    }

    #[test]
    fn classify_golden_and_liouville() {
        for method in [ClassifyMethod::ExhaustiveScan, ClassifyMethod::Convergents] {
            let v = classify_badly_approximable(AlphaPreset::Golden.value(), 0.2, 10_000, method).unwrap();
            assert_eq!(v.verdict, Verdict::BadlyApproximableUpToBound);
            assert_eq!(v.max_partial_quotient, Some(1));

            let v = classify_badly_approximable(AlphaPreset::Liouville10.value(), 0.2, 10_000, method).unwrap();
            assert_eq!(v.verdict, Verdict::NotBadlyApproximableWitness);
            // Already q = 1 gives ⟨α⟩ ≈ 0.110001.
            assert_eq!(v.witness_q, Some(1));
            let v = classify_badly_approximable(AlphaPreset::Liouville10.value(), 0.05, 10_000, method).unwrap();
            // q = 100 gives 100 · 10^-4 = 0.01.
            assert_eq!(v.witness_q, Some(100));
        }
    }
}
