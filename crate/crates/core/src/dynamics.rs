//! Dynamical systems on the torus and on an interval: shifts, the skew-shift,
//! cumulative-sum skew-products and interval exchange transformations.

use std::fmt;

use num_bigint::BigInt;
use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::arithmetic::FixedPointFrac;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("point {0} lies outside [0, {1})")]
    OutOfDomain(f64, f64),
    #[error("{0} has no closed-form iterate")]
    UnsupportedSystem(&'static str),
    #[error("expected a point of dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("empty orbit range {0}..={1}")]
    EmptyRange(i64, i64),
}

pub type Coords = SmallVec<[FixedPointFrac; 4]>;

/// A point of `𝕋^d`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusPoint {
    pub coords: Coords,
}

impl TorusPoint {
    pub fn new(coords: impl IntoIterator<Item = FixedPointFrac>) -> Self {
        Self {
            coords: coords.into_iter().collect(),
        }
    }

    pub fn from_f64s(xs: &[f64]) -> Self {
        Self::new(xs.iter().map(|&x| FixedPointFrac::from_f64(x)))
    }

    pub fn zero(d: usize) -> Self {
        Self::new(std::iter::repeat_n(FixedPointFrac::ZERO, d))
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Max over coordinates of the circle distance, exact.
    pub fn max_dist(&self, other: &Self) -> FixedPointFrac {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a.dist(*b))
            .max()
            .unwrap_or(FixedPointFrac::ZERO)
    }

    pub fn to_f64s(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.to_f64()).collect()
    }
}

impl fmt::Debug for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords.iter().map(|c| c.to_f64())).finish()
    }
}

/// A point of whichever space a system acts on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Torus(TorusPoint),
    Interval(f64),
}

impl Point {
    pub fn torus(&self) -> Option<&TorusPoint> {
        match self {
            Point::Torus(p) => Some(p),
            Point::Interval(_) => None,
        }
    }

    pub fn interval(&self) -> Option<f64> {
        match self {
            Point::Interval(x) => Some(*x),
            Point::Torus(_) => None,
        }
    }

    /// Coordinates as doubles, for output.
    pub fn to_f64s(&self) -> Vec<f64> {
        match self {
            Point::Torus(p) => p.to_f64s(),
            Point::Interval(x) => vec![*x],
        }
    }
}

impl From<TorusPoint> for Point {
    fn from(p: TorusPoint) -> Self {
        Point::Torus(p)
    }
}

/// A bijection of `{1, …, m}`, stored zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    images: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    /// `images[i]` is `π(i + 1)`, one-based as written in cycle notation tables.
    pub fn from_one_based(images: &[usize]) -> Result<Self, DynamicsError> {
        let m = images.len();
        let mut inverse = vec![usize::MAX; m];
        for (i, &img) in images.iter().enumerate() {
            if img == 0 || img > m || inverse[img - 1] != usize::MAX {
                return Err(DynamicsError::InvalidSystem(format!(
                    "{images:?} is not a permutation of 1..={m}"
                )));
            }
            inverse[img - 1] = i;
        }
        Ok(Self {
            images: images.iter().map(|i| i - 1).collect(),
            inverse,
        })
    }

    /// The flip `π(j) = m + 1 − j`.
    pub fn reversal(m: usize) -> Self {
        Self::from_one_based(&(1..=m).rev().collect::<Vec<_>>()).expect("reversal is a bijection")
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Zero-based image of zero-based `j`.
    pub fn apply(&self, j: usize) -> usize {
        self.images[j]
    }

    pub fn apply_inverse(&self, j: usize) -> usize {
        self.inverse[j]
    }

    /// `π({1..k}) = {1..k}` only for `k = m`.
    pub fn is_irreducible(&self) -> bool {
        let m = self.len();
        let mut max_image = 0;
        for (k, &img) in self.images.iter().enumerate().take(m.saturating_sub(1)) {
            max_image = max_image.max(img);
            if max_image == k {
                return false;
            }
        }
        true
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.images.iter().map(|i| i + 1).collect()
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = DynamicsError;
    fn try_from(v: Vec<usize>) -> Result<Self, Self::Error> {
        Self::from_one_based(&v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.one_based()
    }
}

/// Breakpoints of the source partition `β_j(λ)` and of the image
/// partition `β_j(λ^π)`, where `λ^π_j = λ_{π^{-1}(j)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IetTables {
    pub beta: Vec<f64>,
    pub beta_pi: Vec<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct IetParams {
    lambda: Vec<f64>,
    pi: Permutation,
}

/// The `(λ, π)` interval exchange on `[0, |λ|)`.
///
/// Lengths are doubles. Dyadic lengths such as `1/2` or `3/8` keep every
/// breakpoint and translation exact, which is what the tests rely on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IetParams", into = "IetParams")]
pub struct Iet {
    lambda: Vec<f64>,
    pi: Permutation,
    tables: IetTables,
}

impl TryFrom<IetParams> for Iet {
    type Error = DynamicsError;
    fn try_from(p: IetParams) -> Result<Self, Self::Error> {
        Iet::new(p.lambda, p.pi)
    }
}

impl From<Iet> for IetParams {
    fn from(iet: Iet) -> Self {
        IetParams {
            lambda: iet.lambda,
            pi: iet.pi,
        }
    }
}

impl Iet {
    pub fn new(lambda: Vec<f64>, pi: Permutation) -> Result<Self, DynamicsError> {
        let m = lambda.len();
        if m < 2 {
            return Err(DynamicsError::InvalidSystem("an exchange needs at least two intervals".into()));
        }
        if pi.len() != m {
            return Err(DynamicsError::InvalidSystem(format!(
                "{m} lengths but a permutation of {} symbols",
                pi.len()
            )));
        }
        if let Some(bad) = lambda.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(DynamicsError::InvalidSystem(format!("length {bad} is not positive")));
        }
        let mut beta = Vec::with_capacity(m + 1);
        beta.push(0.0);
        for l in &lambda {
            beta.push(beta.last().unwrap() + l);
        }
        let mut beta_pi = Vec::with_capacity(m + 1);
        beta_pi.push(0.0);
        for j in 0..m {
            beta_pi.push(beta_pi.last().unwrap() + lambda[pi.apply_inverse(j)]);
        }
        let total = beta[m];
        // Both partitions must end at the same point.
        beta_pi[m] = total;
        Ok(Self {
            lambda,
            pi,
            tables: IetTables { beta, beta_pi, total },
        })
    }

    /// Rotation by `alpha` written as a two-interval exchange.
    pub fn rotation(alpha: f64) -> Result<Self, DynamicsError> {
        Self::new(vec![1.0 - alpha, alpha], Permutation::reversal(2))
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn permutation(&self) -> &Permutation {
        &self.pi
    }

    pub fn tables(&self) -> &IetTables {
        &self.tables
    }

    pub fn total(&self) -> f64 {
        self.tables.total
    }

    pub fn m(&self) -> usize {
        self.lambda.len()
    }

    fn check(&self, x: f64) -> Result<(), DynamicsError> {
        if (0.0..self.total()).contains(&x) {
            Ok(())
        } else {
            Err(DynamicsError::OutOfDomain(x, self.total()))
        }
    }

    /// Zero-based index of the source interval containing `x`.
    pub fn interval_of(&self, x: f64) -> usize {
        let beta = &self.tables.beta;
        (beta[1..].partition_point(|&b| b <= x)).min(self.m() - 1)
    }

    /// Translation applied on source interval `j` (zero-based).
    pub fn offset(&self, j: usize) -> f64 {
        self.tables.beta_pi[self.pi.apply(j)] - self.tables.beta[j]
    }

    fn clamp(&self, y: f64) -> f64 {
        if y < 0.0 {
            0.0
        } else if y >= self.total() {
            f64::from_bits(self.total().to_bits() - 1)
        } else {
            y
        }
    }

    pub fn step(&self, x: f64) -> Result<f64, DynamicsError> {
        self.check(x)?;
        let j = self.interval_of(x);
        Ok(self.clamp(x + self.offset(j)))
    }

    pub fn step_inverse(&self, y: f64) -> Result<f64, DynamicsError> {
        self.check(y)?;
        let bp = &self.tables.beta_pi;
        let pos = (bp[1..].partition_point(|&b| b <= y)).min(self.m() - 1);
        let j = self.pi.apply_inverse(pos);
        Ok(self.clamp(y - self.offset(j)))
    }

    /// Finest partition of `[0, |λ|)` on which `T, T², …, T^q` are all
    /// translations.
    pub fn continuity_pieces(&self, q: usize) -> Vec<Piece> {
        let mut pieces = self.identity_piece();
        for stage in 0..q {
            pieces = self.advance(&pieces, stage == 0);
        }
        pieces
    }

    pub(crate) fn identity_piece(&self) -> Vec<Piece> {
        vec![Piece {
            lo: 0.0,
            hi: self.total(),
            translation: 0.0,
            min_abs_translation: f64::INFINITY,
        }]
    }

    /// Applies one more step of `T` to every piece, splitting where the
    /// current image straddles a source breakpoint.
    pub(crate) fn advance(&self, pieces: &[Piece], from_identity: bool) -> Vec<Piece> {
        let tol = 1e-12 * self.total();
        let beta = &self.tables.beta;
        let mut out = Vec::with_capacity(pieces.len() + self.m());
        for p in pieces {
            let min_abs_translation = if from_identity {
                f64::INFINITY
            } else {
                p.min_abs_translation.min(p.translation.abs())
            };
            let (a, b) = (p.lo + p.translation, p.hi + p.translation);
            let mut cuts = vec![a];
            cuts.extend(beta[1..self.m()].iter().copied().filter(|&x| x > a + tol && x < b - tol));
            cuts.push(b);
            for w in cuts.windows(2) {
                let j = self.interval_of(self.clamp(0.5 * (w[0] + w[1])));
                out.push(Piece {
                    lo: w[0] - p.translation,
                    hi: w[1] - p.translation,
                    translation: p.translation + self.offset(j),
                    min_abs_translation,
                });
            }
        }
        // Snap shared endpoints so the pieces tile exactly.
        for i in 1..out.len() {
            out[i].lo = out[i - 1].hi;
        }
        if let Some(last) = out.last_mut() {
            last.hi = self.total();
        }
        out
    }
}

/// An interval `[lo, hi)` on which the current iterate acts as `x ↦ x + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub translation: f64,
    /// Minimum of `|translation|` over the strictly earlier positive iterates.
    pub min_abs_translation: f64,
}

impl Piece {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }
}

/// A maximal interval on which `T^q` is a translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityInterval {
    pub lo: f64,
    pub hi: f64,
    pub translation: f64,
}

pub fn iet_refine_continuity(iet: &Iet, q: usize) -> Vec<ContinuityInterval> {
    let tol = 1e-12 * iet.total();
    let mut out: Vec<ContinuityInterval> = Vec::new();
    for p in iet.continuity_pieces(q) {
        match out.last_mut() {
            Some(last) if (last.translation - p.translation).abs() <= tol => last.hi = p.hi,
            _ => out.push(ContinuityInterval {
                lo: p.lo,
                hi: p.hi,
                translation: p.translation,
            }),
        }
    }
    out
}

/// A dynamical system `(Ω, T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    /// `T ω = ω + α` on `𝕋^d`.
    Shift { alpha: Vec<FixedPointFrac> },
    /// `T(ω₁, ω₂) = (ω₁ + 2α, ω₁ + ω₂)`.
    SkewShift { alpha: FixedPointFrac },
    /// `T(ω₁, …, ω_d) = (ω₁ + α, ω₁ + ω₂, …, ω₁ + ⋯ + ω_d)`.
    SkewProduct { d: usize, alpha: FixedPointFrac },
    Iet(Iet),
}

impl SystemSpec {
    pub fn shift1(alpha: FixedPointFrac) -> Self {
        SystemSpec::Shift { alpha: vec![alpha] }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SystemSpec::Shift { .. } => "shift",
            SystemSpec::SkewShift { .. } => "skew_shift",
            SystemSpec::SkewProduct { .. } => "skew_product",
            SystemSpec::Iet(_) => "iet",
        }
    }

    /// Dimension of the torus, or 1 for an interval exchange.
    pub fn dim(&self) -> usize {
        match self {
            SystemSpec::Shift { alpha } => alpha.len(),
            SystemSpec::SkewShift { .. } => 2,
            SystemSpec::SkewProduct { d, .. } => *d,
            SystemSpec::Iet(_) => 1,
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        match self {
            SystemSpec::Shift { alpha } if alpha.is_empty() => {
                Err(DynamicsError::InvalidSystem("shift needs d ≥ 1".into()))
            }
            SystemSpec::SkewProduct { d, .. } if *d < 1 => {
                Err(DynamicsError::InvalidSystem("skew-product needs d ≥ 1".into()))
            }
            _ => Ok(()),
        }
    }

    fn torus<'a>(&self, p: &'a Point) -> Result<&'a TorusPoint, DynamicsError> {
        match p {
            Point::Torus(t) if t.dim() == self.dim() => Ok(t),
            Point::Torus(t) => Err(DynamicsError::DimensionMismatch {
                expected: self.dim(),
                got: t.dim(),
            }),
            Point::Interval(_) => Err(DynamicsError::DimensionMismatch {
                expected: self.dim(),
                got: 1,
            }),
        }
    }

    pub fn step(&self, p: &Point) -> Result<Point, DynamicsError> {
        match self {
            SystemSpec::Iet(iet) => match p {
                Point::Interval(x) => iet.step(*x).map(Point::Interval),
                Point::Torus(_) => Err(DynamicsError::DimensionMismatch { expected: 1, got: 0 }),
            },
            _ => {
                let mut t = self.torus(p)?.clone();
                self.step_torus_in_place(&mut t.coords);
                Ok(Point::Torus(t))
            }
        }
    }

    /// One step on raw coordinates; torus systems only.
    pub fn step_torus_in_place(&self, c: &mut [FixedPointFrac]) {
        match self {
            SystemSpec::Shift { alpha } => {
                for (x, a) in c.iter_mut().zip(alpha) {
                    *x += *a;
                }
            }
            SystemSpec::SkewShift { alpha } => {
                let w1 = c[0];
                c[0] += alpha.mul_int(2);
                c[1] += w1;
            }
            SystemSpec::SkewProduct { alpha, .. } => {
                // New coordinate i is the old prefix sum up to i.
                let mut acc = FixedPointFrac::ZERO;
                for x in c.iter_mut() {
                    acc += *x;
                    *x = acc;
                }
                c[0] += *alpha;
            }
            SystemSpec::Iet(_) => unreachable!("interval exchange on torus coordinates"),
        }
    }

    pub fn step_inverse(&self, p: &Point) -> Result<Point, DynamicsError> {
        match self {
            SystemSpec::Iet(iet) => match p {
                Point::Interval(x) => iet.step_inverse(*x).map(Point::Interval),
                Point::Torus(_) => Err(DynamicsError::DimensionMismatch { expected: 1, got: 0 }),
            },
            _ => self.iterate_closed_form(p, -1),
        }
    }

    /// `T^n ω` by closed form, for any integer `n`.
    pub fn iterate_closed_form(&self, p: &Point, n: i64) -> Result<Point, DynamicsError> {
        let n = n as i128;
        let c = &self.torus_for_closed_form(p)?.coords;
        let out: Coords = match self {
            SystemSpec::Shift { alpha } => c.iter().zip(alpha).map(|(x, a)| *x + a.mul_int(n)).collect(),
            SystemSpec::SkewShift { alpha } => {
                let first = c[0] + alpha.mul_int(2 * n);
                let second = c[1] + c[0].mul_int(n) + alpha.mul_int(n.wrapping_mul(n - 1));
                [first, second].into_iter().collect()
            }
            SystemSpec::SkewProduct { d, alpha } => skew_product_closed_form(*d, *alpha, c, n),
            SystemSpec::Iet(_) => unreachable!(),
        };
        Ok(Point::Torus(TorusPoint { coords: out }))
    }

    fn torus_for_closed_form<'a>(&self, p: &'a Point) -> Result<&'a TorusPoint, DynamicsError> {
        if let SystemSpec::Iet(_) = self {
            return Err(DynamicsError::UnsupportedSystem("an interval exchange"));
        }
        self.torus(p)
    }

    /// `T^n ω` for any system: closed form on the torus, stepping for exchanges.
    pub fn iterate(&self, p: &Point, n: i64) -> Result<Point, DynamicsError> {
        match self {
            SystemSpec::Iet(_) => {
                let mut x = p.clone();
                for _ in 0..n.unsigned_abs() {
                    x = if n > 0 { self.step(&x)? } else { self.step_inverse(&x)? };
                }
                Ok(x)
            }
            _ => self.iterate_closed_form(p, n),
        }
    }

    /// `[T^n ω for n in n_min..=n_max]`.
    pub fn orbit(&self, p: &Point, n_min: i64, n_max: i64) -> Result<Vec<Point>, DynamicsError> {
        if n_min > n_max {
            return Err(DynamicsError::EmptyRange(n_min, n_max));
        }
        let mut out = Vec::with_capacity((n_max - n_min + 1) as usize);
        let start = self.iterate(p, n_min)?;
        out.push(start);
        for _ in n_min..n_max {
            let next = self.step(out.last().unwrap())?;
            out.push(next);
        }
        Ok(out)
    }

    /// Max metric on the torus, absolute value on the interval.
    pub fn dist(&self, a: &Point, b: &Point) -> f64 {
        match (a, b) {
            (Point::Torus(x), Point::Torus(y)) => x.max_dist(y).to_f64(),
            (Point::Interval(x), Point::Interval(y)) => (x - y).abs(),
            _ => f64::INFINITY,
        }
    }

    /// Largest distance between two points of the space.
    pub fn diameter(&self) -> f64 {
        match self {
            SystemSpec::Iet(iet) => iet.total(),
            _ => 0.5,
        }
    }

    /// Lebesgue-uniform sample.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            SystemSpec::Iet(iet) => Point::Interval(rng.random::<f64>() * iet.total()),
            _ => Point::Torus(TorusPoint::new(
                (0..self.dim()).map(|_| FixedPointFrac::from_raw(rng.random::<u128>())),
            )),
        }
    }

    /// Scans integer relations `k₀ + k·α` with `|k_i| ≤ max_coeff`. Returns
    /// `false` if one lies within `tol` of an integer. Advisory only: a finite
    /// scan cannot establish rational independence.
    pub fn minimality_advisory(&self, max_coeff: i64, tol: f64) -> bool {
        let alpha: Vec<FixedPointFrac> = match self {
            SystemSpec::Shift { alpha } => alpha.clone(),
            SystemSpec::SkewShift { alpha } | SystemSpec::SkewProduct { alpha, .. } => vec![*alpha],
            SystemSpec::Iet(iet) => return iet.permutation().is_irreducible(),
        };
        let d = alpha.len();
        let span = (2 * max_coeff + 1) as usize;
        let total = span.pow(d as u32);
        (0..total).all(|mut idx| {
            let mut sum = FixedPointFrac::ZERO;
            let mut nonzero = false;
            for a in &alpha {
                let k = (idx % span) as i64 - max_coeff;
                idx /= span;
                nonzero |= k != 0;
                sum += a.mul_int(k as i128);
            }
            !nonzero || sum.norm().to_f64() > tol
        })
    }
}

fn binomial_mod(n: i128, k: usize) -> i128 {
    // C(n + k − 1, k) = n (n+1) ⋯ (n+k−1) / k!, valid for negative n too,
    // reduced modulo 2^128.
    let mut num = BigInt::from(1);
    for j in 0..k {
        num *= BigInt::from(n + j as i128);
    }
    let den: BigInt = (1..=k).map(|j| BigInt::from(j as u64)).product();
    let v: BigInt = num / den;
    let modulus = BigInt::from(1) << 128u32;
    let r: BigInt = ((v % &modulus) + &modulus) % &modulus;
    let (_, digits) = r.to_u64_digits();
    let lo = digits.first().copied().unwrap_or(0) as u128;
    let hi = digits.get(1).copied().unwrap_or(0) as u128;
    (lo | (hi << 64)) as i128
}

fn skew_product_closed_form(d: usize, alpha: FixedPointFrac, c: &[FixedPointFrac], n: i128) -> Coords {
    // T ω = L ω + α e₁ with L lower-triangular all ones, L = (I − S)^{-1}.
    // (L^n ω)_i = Σ_{k ≤ i} C(n+k−1, k) ω_{i−k};
    // drift_i = Σ_{j<n} (L^j e₁)_i = n for i = 0 and C(n+i−1, i+1) otherwise.
    // Both are polynomials in n, so negative n needs no special case.
    let coeff: Vec<i128> = (0..=d).map(|k| binomial_mod(n, k)).collect();
    (0..d)
        .map(|i| {
            let mut x = FixedPointFrac::ZERO;
            for k in 0..=i {
                x += c[i - k].mul_int(coeff[k]);
            }
            let drift = if i == 0 { n } else { binomial_mod(n - 1, i + 1) };
            x + alpha.mul_int(drift)
        })
        .collect()
}

/// `T^{n+q} ω − T^n ω` for the skew-shift; independent of `ω₂`.
pub fn skewshift_pair_difference(
    alpha: FixedPointFrac,
    omega1: FixedPointFrac,
    n: i64,
    q: i64,
) -> (FixedPointFrac, FixedPointFrac) {
    let (n, q) = (n as i128, q as i128);
    let first = alpha.mul_int(2 * q);
    let coeff = q.wrapping_mul(q) + 2 * n * q - q;
    let second = omega1.mul_int(q) + alpha.mul_int(coeff);
    (first, second)
}
