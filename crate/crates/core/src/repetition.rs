//! Repetition times of orbits: certificate search, the constructive
//! skew-shift times `m·q_k`, the badly-approximable obstruction, Monte Carlo
//! estimates of the repeating set, and Veech towers for interval exchanges.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arithmetic::{ContinuedFraction, FixedPointFrac};
use crate::dynamics::{DynamicsError, Iet, Point, SystemSpec, TorusPoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RepetitionError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("no constructive repetition time: {0}")]
    NotAvailable(String),
    #[error("inconsistent certificate: {0}")]
    InconsistentCertificate(String),
}

/// `dist(T^k ω, T^{k+q} ω) < ε` for `k = 0, …, ⌊rq⌋`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionCertificate {
    pub epsilon: f64,
    pub r: f64,
    pub q: u64,
    pub k_max: u64,
    /// Achieved maximum over `k` of the distance.
    pub max_dist: f64,
    pub omega: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SearchOutcome {
    Found(RepetitionCertificate),
    /// `best_q` certified the longest prefix `0..best_prefix` of its range
    /// before a distance of `best_dist` broke it.
    NotFound {
        best_q: u64,
        best_prefix: u64,
        best_dist: f64,
    },
}

impl SearchOutcome {
    pub fn certificate(&self) -> Option<&RepetitionCertificate> {
        match self {
            SearchOutcome::Found(c) => Some(c),
            SearchOutcome::NotFound { .. } => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, SearchOutcome::Found(_))
    }
}

pub fn k_max(r: f64, q: u64) -> u64 {
    (r * q as f64).floor() as u64
}

fn check_params(epsilon: f64, r: f64, q_max: u64) -> Result<(), RepetitionError> {
    if !(epsilon.is_finite() && epsilon > 0.0 && r.is_finite() && r > 0.0) {
        return Err(RepetitionError::InvalidParameter(format!(
            "need ε > 0 and r > 0, got ε = {epsilon}, r = {r}"
        )));
    }
    if q_max == 0 {
        return Err(RepetitionError::InvalidParameter("q_max must be at least 1".into()));
    }
    Ok(())
}

/// Strict distance test done exactly on the torus.
#[derive(Clone, Copy)]
struct Threshold {
    eps: f64,
    eps_fixed: Option<FixedPointFrac>,
}

impl Threshold {
    fn new(eps: f64) -> Self {
        let eps_fixed = (eps <= 0.5).then(|| FixedPointFrac::from_f64(eps));
        Self { eps, eps_fixed }
    }

    /// Returns the distance and whether it is below the threshold.
    fn test(&self, a: &Point, b: &Point) -> (f64, bool) {
        match (a, b) {
            (Point::Torus(x), Point::Torus(y)) => {
                let d = x.max_dist(y);
                let below = match self.eps_fixed {
                    Some(e) => d < e,
                    None => true,
                };
                (d.to_f64(), below)
            }
            (Point::Interval(x), Point::Interval(y)) => {
                let d = (x - y).abs();
                (d, d < self.eps)
            }
            _ => (f64::INFINITY, false),
        }
    }
}

/// A precomputed forward orbit `T^0 ω, …, T^len ω` searched for repetitions.
pub struct OrbitSearch<'a> {
    system: &'a SystemSpec,
    points: Vec<Point>,
}

impl<'a> OrbitSearch<'a> {
    /// Orbit long enough for every `q ≤ q_max` at ratio `r`.
    pub fn new(system: &'a SystemSpec, omega: &Point, r: f64, q_max: u64) -> Result<Self, RepetitionError> {
        let horizon = k_max(r, q_max) + q_max;
        let points = system.orbit(omega, 0, horizon as i64)?;
        Ok(Self { system, points })
    }

    pub fn horizon(&self) -> u64 {
        self.points.len() as u64 - 1
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Smallest `q ≤ q_max` with a valid certificate.
    pub fn find(&self, epsilon: f64, r: f64, q_max: u64) -> Result<SearchOutcome, RepetitionError> {
        check_params(epsilon, r, q_max)?;
        if k_max(r, q_max) + q_max > self.horizon() {
            return Err(RepetitionError::InvalidParameter(format!(
                "orbit horizon {} too short for r = {r}, q_max = {q_max}",
                self.horizon()
            )));
        }
        let thr = Threshold::new(epsilon);
        let mut best = (0u64, 0u64, f64::INFINITY);
        for q in 1..=q_max {
            let km = k_max(r, q);
            let mut max_dist = 0.0f64;
            let mut broke = None;
            for k in 0..=km {
                let (d, ok) = thr.test(&self.points[k as usize], &self.points[(k + q) as usize]);
                if !ok {
                    broke = Some((k, d));
                    break;
                }
                max_dist = max_dist.max(d);
            }
            match broke {
                None => {
                    return Ok(SearchOutcome::Found(RepetitionCertificate {
                        epsilon,
                        r,
                        q,
                        k_max: km,
                        max_dist,
                        omega: self.points[0].clone(),
                    }));
                }
                Some((k, d)) => {
                    if q == 1 || k > best.1 || (k == best.1 && d < best.2) {
                        best = (q, k, d);
                    }
                }
            }
        }
        let _ = self.system;
        Ok(SearchOutcome::NotFound {
            best_q: best.0,
            best_prefix: best.1,
            best_dist: best.2,
        })
    }
}

pub fn find_repetition_time(
    system: &SystemSpec,
    omega: &Point,
    epsilon: f64,
    r: f64,
    q_max: u64,
) -> Result<SearchOutcome, RepetitionError> {
    check_params(epsilon, r, q_max)?;
    OrbitSearch::new(system, omega, r, q_max)?.find(epsilon, r, q_max)
}

/// Recomputes every distance by stepping both points forward, independent of
/// the closed forms used elsewhere.
pub fn verify_certificate_against_definition(cert: &RepetitionCertificate, system: &SystemSpec) -> bool {
    if cert.q == 0 || cert.epsilon.is_nan() || cert.epsilon <= 0.0 {
        return false;
    }
    let km = k_max(cert.r, cert.q);
    let thr = Threshold::new(cert.epsilon);
    match (&cert.omega, system) {
        (Point::Torus(p), SystemSpec::SkewShift { alpha }) if p.dim() == 2 => {
            let two_alpha = alpha.mul_int(2);
            let (mut a0, mut a1) = (p.coords[0], p.coords[1]);
            let (mut b0, mut b1) = (a0, a1);
            for _ in 0..cert.q {
                b1 += b0;
                b0 += two_alpha;
            }
            let Some(eps) = thr.eps_fixed else { return true };
            for _ in 0..=km {
                if a0.dist(b0).max(a1.dist(b1)) >= eps {
                    return false;
                }
                a1 += a0;
                a0 += two_alpha;
                b1 += b0;
                b0 += two_alpha;
            }
            true
        }
        (Point::Torus(p), SystemSpec::Shift { .. } | SystemSpec::SkewShift { .. } | SystemSpec::SkewProduct { .. }) => {
            if p.dim() != system.dim() {
                return false;
            }
            let mut a = p.coords.clone();
            let mut b = p.coords.clone();
            for _ in 0..cert.q {
                system.step_torus_in_place(&mut b);
            }
            let eps = thr.eps_fixed;
            for k in 0..=km {
                if let Some(e) = eps {
                    let d = a.iter().zip(&b).map(|(x, y)| x.dist(*y)).max().unwrap_or_default();
                    if d >= e {
                        return false;
                    }
                }
                if k < km {
                    system.step_torus_in_place(&mut a);
                    system.step_torus_in_place(&mut b);
                }
            }
            true
        }
        (Point::Interval(x), SystemSpec::Iet(iet)) => {
            let mut a = *x;
            let mut b = *x;
            for _ in 0..cert.q {
                match iet.step(b) {
                    Ok(v) => b = v,
                    Err(_) => return false,
                }
            }
            for k in 0..=km {
                if (a - b).abs() >= cert.epsilon {
                    return false;
                }
                if k < km {
                    match (iet.step(a), iet.step(b)) {
                        (Ok(u), Ok(v)) => (a, b) = (u, v),
                        _ => return false,
                    }
                }
            }
            true
        }
        _ => false,
    }
}

/// One row of the empirical repetition grid `ε = 2^-j`, `r ∈ r_list`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub j: u32,
    pub epsilon: f64,
    pub r: f64,
    pub outcome: SearchOutcome,
}

/// Empirical repetition verdict: certified on every grid point up to `q_max`.
/// A finite grid never proves the property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionGrid {
    pub q_max: u64,
    pub entries: Vec<GridEntry>,
}

impl RepetitionGrid {
    pub fn all_certified(&self) -> bool {
        self.entries.iter().all(|e| e.outcome.is_found())
    }
}

pub fn repetition_grid(
    system: &SystemSpec,
    omega: &Point,
    j_max: u32,
    r_list: &[f64],
    q_max: u64,
) -> Result<RepetitionGrid, RepetitionError> {
    let r_top = r_list.iter().copied().fold(0.0, f64::max);
    let search = OrbitSearch::new(system, omega, r_top, q_max)?;
    let mut entries = Vec::new();
    for j in 1..=j_max {
        let epsilon = 0.5f64.powi(j as i32);
        for &r in r_list {
            entries.push(GridEntry {
                j,
                epsilon,
                r,
                outcome: search.find(epsilon, r, q_max)?,
            });
        }
    }
    Ok(RepetitionGrid { q_max, entries })
}

/// Sizes of the terms in `T^{n+q̃}ω − T^n ω = (2q̃α, q̃ω₁ + (q̃² − q̃)α + 2nq̃α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceTerms {
    /// `⟨2q̃α⟩`, the first coordinate.
    pub first: f64,
    /// `⟨q̃ω₁⟩`
    pub omega_term: f64,
    /// `⟨(q̃² − q̃)α⟩`
    pub quadratic_term: f64,
    /// `⌊rq̃⌋ · ⟨2q̃α⟩`, bounding `⟨2nq̃α⟩` over the range.
    pub linear_term: f64,
}

impl DifferenceTerms {
    /// Triangle-inequality bound on the max-metric difference.
    pub fn bound(&self) -> f64 {
        self.first.max(self.omega_term + self.quadratic_term + self.linear_term)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructiveQ {
    pub q_k: u128,
    pub m: u64,
    pub q_tilde: u64,
    pub terms: DifferenceTerms,
    pub certificate: RepetitionCertificate,
}

fn signed(x: FixedPointFrac) -> i128 {
    x.raw() as i128
}

/// Exact `max_{0≤n≤N} ⟨c + n s⟩` if the real path `c' + n s'` of signed
/// representatives stays inside `(-1/2, 1/2)`; otherwise `None`.
fn progression_max(c: FixedPointFrac, s: FixedPointFrac, n_max: u64) -> Option<FixedPointFrac> {
    let c0 = signed(c);
    let end = signed(s).checked_mul(n_max as i128).and_then(|v| v.checked_add(c0))?;
    if end == i128::MIN || c0 == i128::MIN {
        return None;
    }
    let m = c0.unsigned_abs().max(end.unsigned_abs());
    Some(FixedPointFrac::from_raw(m))
}

/// The repetition time `q̃ = m·q_k` for the skew-shift orbit through
/// `(ω₁, ·)`: the first convergent denominator (including `q_0 = 1`) with
/// `q_k⟨q_kα⟩ < ε·min(1, 1/r)`, and the first `m ∈ {1, …, ⌊1/ε⌋ + 1}`
/// making the whole difference smaller than `ε` over `0 ≤ n ≤ ⌊rq̃⌋`.
/// The distance is computed exactly, so the certificate is canonical.
pub fn skewshift_constructive_q(
    alpha: FixedPointFrac,
    omega1: FixedPointFrac,
    epsilon: f64,
    r: f64,
    cf: &ContinuedFraction,
) -> Result<ConstructiveQ, RepetitionError> {
    check_params(epsilon, r, 1)?;
    if epsilon >= 0.5 {
        return Err(RepetitionError::InvalidParameter(format!("ε = {epsilon} exceeds the torus radius")));
    }
    let threshold = epsilon * r.recip().min(1.0);
    let eps_fixed = FixedPointFrac::from_f64(epsilon);
    let m_top = (1.0 / epsilon).floor() as u64 + 1;
    let mut any_available = false;
    let candidates = std::iter::once(1u128).chain(cf.denominators());
    for q_k in candidates {
        let Ok(q_k_i) = i64::try_from(q_k) else { break };
        let dist = alpha.mul_int(q_k as i128).norm().to_f64();
        if q_k as f64 * dist >= threshold {
            continue;
        }
        any_available = true;
        for m in 1..=m_top {
            let Some(q_tilde) = q_k_i.checked_mul(m as i64) else { break };
            let qt = q_tilde as i128;
            let n_max = k_max(r, q_tilde as u64);
            let first = alpha.mul_int(2 * qt);
            let omega_part = omega1.mul_int(qt);
            let quad = alpha.mul_int(qt.wrapping_mul(qt) - qt);
            let Some(second_max) = progression_max(omega_part + quad, first, n_max) else {
                continue;
            };
            let worst = first.norm().max(second_max);
            if worst < eps_fixed {
                let terms = DifferenceTerms {
                    first: first.norm().to_f64(),
                    omega_term: omega_part.norm().to_f64(),
                    quadratic_term: quad.norm().to_f64(),
                    linear_term: n_max as f64 * first.norm().to_f64(),
                };
                let certificate = RepetitionCertificate {
                    epsilon,
                    r,
                    q: q_tilde as u64,
                    k_max: n_max,
                    max_dist: worst.to_f64(),
                    omega: Point::Torus(TorusPoint::new([omega1, FixedPointFrac::ZERO])),
                };
                return Ok(ConstructiveQ {
                    q_k,
                    m,
                    q_tilde: q_tilde as u64,
                    terms,
                    certificate,
                });
            }
        }
    }
    Err(RepetitionError::NotAvailable(if any_available {
        format!("no multiplier m ≤ {m_top} brings the difference below ε = {epsilon}")
    } else {
        format!(
            "no convergent among {} has q⟨qα⟩ < {threshold}; α behaves badly approximably at this depth",
            cf.len() + 1
        )
    }))
}

/// What a skew-shift certificate forces on `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub q: u64,
    /// The `n` range `0..=n_max` over which the progression was checked.
    pub n_max: u64,
    /// `⟨2qα⟩`
    pub step: f64,
    /// `q⟨2qα⟩`, forced below `2ε`.
    pub q_times_step: f64,
    pub bound: f64,
    /// `q' = 2q` with `q'⟨q'α⟩ < 4ε`: evidence against bad approximability at `c = 4ε`.
    pub witness_q: u64,
    pub witness_value: f64,
}

/// The no-wrap argument: along `0 ≤ n ≤ q` the second-coordinate
/// differences are an arithmetic progression with step `2qα` that stays
/// within `ε` of zero. With `ε < 1/3` each step is the signed representative
/// itself, so `q⟨2qα⟩ < 2ε`.
pub fn badly_approximable_obstruction(
    alpha: FixedPointFrac,
    epsilon: f64,
    cert: &RepetitionCertificate,
) -> Result<ObstructionReport, RepetitionError> {
    if epsilon >= 1.0 / 3.0 {
        return Err(RepetitionError::InconsistentCertificate(format!(
            "ε = {epsilon} is at or above the wrap threshold 1/3"
        )));
    }
    if cert.r < 1.0 || cert.k_max < cert.q {
        return Err(RepetitionError::InconsistentCertificate(format!(
            "certificate covers k ≤ {} but the argument needs k ≤ q = {}",
            cert.k_max, cert.q
        )));
    }
    let Point::Torus(p) = &cert.omega else {
        return Err(RepetitionError::InconsistentCertificate("not a skew-shift point".into()));
    };
    if p.dim() != 2 {
        return Err(RepetitionError::InconsistentCertificate("not a skew-shift point".into()));
    }
    let eps = FixedPointFrac::from_f64(epsilon);
    let q = cert.q as i64;
    let (first, d0) = crate::dynamics::skewshift_pair_difference(alpha, p.coords[0], 0, q);
    if first.norm() >= eps {
        return Err(RepetitionError::InconsistentCertificate(format!(
            "first coordinate ⟨2qα⟩ = {} is not below ε",
            first.norm()
        )));
    }
    let step = signed(first);
    let mut expected = Some(signed(d0));
    let mut d = d0;
    for n in 0..=q {
        if d.norm() >= eps {
            return Err(RepetitionError::InconsistentCertificate(format!(
                "difference at n = {n} is {}, not below ε",
                d.norm()
            )));
        }
        // Exact progression: representative at n equals base + n·step.
        if expected != Some(signed(d)) {
            return Err(RepetitionError::InconsistentCertificate(format!(
                "progression wraps at n = {n}"
            )));
        }
        d += first;
        expected = expected.and_then(|v| v.checked_add(step));
    }
    let (_, d_end) = crate::dynamics::skewshift_pair_difference(alpha, p.coords[0], q, q);
    if d_end != d - first {
        return Err(RepetitionError::InconsistentCertificate("closed form disagrees with the progression".into()));
    }
    let step_norm = first.norm().to_f64();
    let witness_q = 2 * cert.q;
    Ok(ObstructionReport {
        q: cert.q,
        n_max: cert.q,
        step: step_norm,
        q_times_step: cert.q as f64 * step_norm,
        bound: 2.0 * epsilon,
        witness_q,
        witness_value: witness_q as f64 * alpha.mul_int(witness_q as i128).norm().to_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrpEstimate {
    pub system: SystemSpec,
    pub epsilon: f64,
    pub r: f64,
    pub q_max: u64,
    pub n_samples: u64,
    pub n_hits: u64,
    pub fraction: f64,
    pub wilson_ci: (f64, f64),
    pub seed: u64,
}

/// 95% Wilson score interval.
pub fn wilson_interval(hits: u64, n: u64) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = hits as f64 / n_f;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

/// Generator for sample `index`: the seed picks the key, the index the stream.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Fraction of Lebesgue-random starting points with a certificate at
/// `(ε, r)` within `q_max`. Bit-for-bit reproducible for a fixed seed,
/// whatever the thread pool.
pub fn estimate_prp_fraction(
    system: &SystemSpec,
    epsilon: f64,
    r: f64,
    q_max: u64,
    n_samples: u64,
    seed: u64,
) -> Result<PrpEstimate, RepetitionError> {
    check_params(epsilon, r, q_max)?;
    if n_samples == 0 {
        return Err(RepetitionError::InvalidParameter("n_samples must be at least 1".into()));
    }
    let hits: Vec<bool> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let omega = system.sample_uniform(&mut sample_rng(seed, i));
            find_repetition_time(system, &omega, epsilon, r, q_max).map(|o| o.is_found())
        })
        .collect::<Result<_, _>>()?;
    let n_hits = hits.iter().filter(|h| **h).count() as u64;
    Ok(PrpEstimate {
        system: system.clone(),
        epsilon,
        r,
        q_max,
        n_samples,
        n_hits,
        fraction: n_hits as f64 / n_samples as f64,
        wilson_ci: wilson_interval(n_hits, n_samples),
        seed,
    })
}

/// An interval `J` whose first `q` images are disjoint, nearly fill the
/// space, and return onto `J` with large overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VeechTower {
    pub q: u64,
    pub j_lo: f64,
    pub j_hi: f64,
    /// `Leb(⋃_{l<q} T^l J) / |λ|`
    pub coverage: f64,
    /// `Leb(J ∩ T^q J)`, in the units of `J`.
    pub return_overlap: f64,
}

impl VeechTower {
    pub fn len(&self) -> f64 {
        self.j_hi - self.j_lo
    }

    pub fn is_empty(&self) -> bool {
        self.j_hi <= self.j_lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerMiss {
    pub q_max: u64,
    /// Best candidate by `min(coverage, overlap / len(J))`.
    pub best: Option<VeechTower>,
}

/// The best tower of height `q` inside a continuity piece of `T^q`.
/// Inside a piece, `T^l` translates by `d_l`, so `J ∩ T^l J = ∅` exactly when
/// `len(J) ≤ |d_l|`; the longest admissible `J` maximises both coverage and
/// return overlap.
fn tower_in_piece(piece: &crate::dynamics::Piece, q: u64, total: f64) -> VeechTower {
    let len = piece.len().min(piece.min_abs_translation);
    VeechTower {
        q,
        j_lo: piece.lo,
        j_hi: piece.lo + len,
        coverage: q as f64 * len / total,
        return_overlap: (len - piece.translation.abs()).max(0.0),
    }
}

fn tower_ok(t: &VeechTower, epsilon: f64) -> bool {
    t.len() > 0.0 && t.coverage > 1.0 - epsilon && t.return_overlap > (1.0 - epsilon) * t.len()
}

fn tower_score(t: &VeechTower) -> f64 {
    if t.len() <= 0.0 {
        return 0.0;
    }
    t.coverage.min(t.return_overlap / t.len())
}

/// Per-height best candidates, `q = 1..=q_max`.
pub fn tower_candidates(iet: &Iet, q_max: u64) -> Vec<VeechTower> {
    let mut pieces = iet.identity_piece();
    let mut out = Vec::with_capacity(q_max as usize);
    for q in 1..=q_max {
        pieces = iet.advance(&pieces, q == 1);
        let best = pieces
            .iter()
            .map(|p| tower_in_piece(p, q, iet.total()))
            .max_by(|a, b| tower_score(a).total_cmp(&tower_score(b)));
        if let Some(t) = best {
            out.push(t);
        }
    }
    out
}

/// First `(q, J)` in order of `q`, then position, satisfying the disjointness,
/// coverage `> 1 − ε` and return-overlap `> (1 − ε) len(J)` conditions.
/// Linearity of `T` on each floor holds because `J` lies in a continuity piece.
pub fn veech_tower_search(iet: &Iet, epsilon: f64, q_max: u64) -> Result<VeechTower, TowerMiss> {
    let mut pieces = iet.identity_piece();
    let mut best: Option<VeechTower> = None;
    for q in 1..=q_max {
        pieces = iet.advance(&pieces, q == 1);
        for p in &pieces {
            let t = tower_in_piece(p, q, iet.total());
            if tower_ok(&t, epsilon) {
                return Ok(t);
            }
            if best.is_none_or(|b| tower_score(&t) > tower_score(&b)) {
                best = Some(t);
            }
        }
    }
    Err(TowerMiss { q_max, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::AlphaPreset;
    use crate::dynamics::Permutation;

    fn f(x: f64) -> FixedPointFrac {
        FixedPointFrac::from_f64(x)
    }

    fn tp(xs: &[f64]) -> Point {
        Point::Torus(TorusPoint::from_f64s(xs))
    }

    /// Independent brute force: smallest q whose full range certifies.
    fn brute_force_q(sys: &SystemSpec, omega: &Point, eps: f64, r: f64, q_max: u64) -> Option<(u64, f64)> {
        (1..=q_max).find_map(|q| {
            let km = k_max(r, q);
            let d = (0..=km)
                .map(|k| {
                    let a = sys.iterate(omega, k as i64).unwrap();
                    let b = sys.iterate(omega, (k + q) as i64).unwrap();
                    sys.dist(&a, &b)
                })
                .fold(0.0, f64::max);
            (d < eps).then_some((q, d))
        })
    }

    #[test]
    fn golden_shift_repeats_at_eight() {
        let g = AlphaPreset::Golden.value();
        let sys = SystemSpec::shift1(g);
        for w in [0.0, 0.123, 0.77] {
            let out = find_repetition_time(&sys, &tp(&[w]), 0.06, 3.0, 100).unwrap();
            let cert = out.certificate().expect("found");
            assert_eq!(cert.q, 8);
            assert_eq!(cert.k_max, 24);
            assert!((cert.max_dist - 0.055_728_090_000_841).abs() < 1e-12);
            assert_eq!(brute_force_q(&sys, &tp(&[w]), 0.06, 3.0, 100), Some((8, cert.max_dist)));
            assert!(verify_certificate_against_definition(cert, &sys));
        }
    }

    #[test]
    fn golden_skew_shift_has_no_short_repetition() {
        let sys = SystemSpec::SkewShift { alpha: AlphaPreset::Golden.value() };
        let out = find_repetition_time(&sys, &tp(&[0.0, 0.0]), 0.05, 1.0, 2000).unwrap();
        assert!(!out.is_found(), "{out:?}");
    }

    #[test]
    fn vacuous_epsilon_certifies_at_one() {
        let systems = [
            SystemSpec::SkewShift { alpha: AlphaPreset::Golden.value() },
            SystemSpec::Shift { alpha: vec![f(0.3), f(0.1)] },
        ];
        for sys in &systems {
            let c = find_repetition_time(sys, &tp(&[0.4, 0.2]), 1.01, 2.0, 10).unwrap();
            assert_eq!(c.certificate().unwrap().q, 1);
        }
        let iet = SystemSpec::Iet(Iet::new(vec![0.3, 0.7], Permutation::reversal(2)).unwrap());
        let c = find_repetition_time(&iet, &Point::Interval(0.1), 1.01, 2.0, 10).unwrap();
        assert_eq!(c.certificate().unwrap().q, 1);
    }

    #[test]
    fn rejects_bad_parameters() {
        let sys = SystemSpec::shift1(f(0.3));
        assert!(find_repetition_time(&sys, &tp(&[0.0]), 0.0, 1.0, 10).is_err());
        assert!(find_repetition_time(&sys, &tp(&[0.0]), 0.1, -1.0, 10).is_err());
        assert!(find_repetition_time(&sys, &tp(&[0.0]), 0.1, 1.0, 0).is_err());
        assert!(estimate_prp_fraction(&sys, 0.1, 1.0, 10, 0, 1).is_err());
    }

    #[test]
    fn tampered_certificate_fails() {
        let sys = SystemSpec::shift1(AlphaPreset::Golden.value());
        let out = find_repetition_time(&sys, &tp(&[0.2]), 0.06, 1.0, 100).unwrap();
        let cert = out.certificate().unwrap().clone();
        let mut bad = cert.clone();
        bad.q += 1;
        assert!(!verify_certificate_against_definition(&bad, &sys));
        let mut smaller_r = cert.clone();
        smaller_r.r = 0.25;
        assert!(verify_certificate_against_definition(&smaller_r, &sys));
        let mut looser = cert;
        looser.epsilon = 0.2;
        assert!(verify_certificate_against_definition(&looser, &sys));
    }

    #[test]
    fn iet_search_and_verify() {
        let iet = SystemSpec::Iet(Iet::new(vec![0.5, 0.5], Permutation::reversal(2)).unwrap());
        let out = find_repetition_time(&iet, &Point::Interval(0.3), 0.01, 3.0, 10).unwrap();
        let cert = out.certificate().unwrap();
        assert_eq!(cert.q, 2);
        assert!(cert.max_dist < 1e-15);
        assert!(verify_certificate_against_definition(cert, &iet));
    }

    #[test]
    fn constructive_liouville_examples() {
        let a = AlphaPreset::Liouville10.value();
        let cf = ContinuedFraction::expand_trusted(a, 64);
        let c = skewshift_constructive_q(a, f(0.0), 0.3, 1.0, &cf).unwrap();
        assert_eq!(c.m, 1);
        assert_eq!(c.q_tilde as u128, c.q_k);

        let third = FixedPointFrac::from_ratio(1, 3);
        let c = skewshift_constructive_q(a, third, 0.3, 1.0, &cf).unwrap();
        assert!((1..=4).contains(&c.m));
        // Exact rational oracle for ⟨q̃/3⟩.
        let r = (c.q_tilde % 3) as f64 / 3.0;
        assert!(r.min(1.0 - r) < 0.3);
        let sys = SystemSpec::SkewShift { alpha: a };
        assert!(verify_certificate_against_definition(&c.certificate, &sys));
    }

    #[test]
    fn constructive_golden_not_available() {
        let a = AlphaPreset::Golden.value();
        let cf = ContinuedFraction::expand_trusted(a, 80);
        assert!(matches!(
            skewshift_constructive_q(a, f(0.3), 0.01, 1.0, &cf),
            Err(RepetitionError::NotAvailable(_))
        ));
    }

    #[test]
    fn constructive_bound_certifies() {
        let a = AlphaPreset::Liouville10.value();
        let cf = ContinuedFraction::expand_trusted(a, 64);
        let sys = SystemSpec::SkewShift { alpha: a };
        for w in [0.05, 0.37, 0.81] {
            let c = skewshift_constructive_q(a, f(w), 0.1, 1.0, &cf).unwrap();
            let mut cert = c.certificate.clone();
            assert!(c.terms.bound() >= cert.max_dist - 1e-15, "{c:?}");
            cert.epsilon = c.terms.bound() * (1.0 + 1e-12) + 1e-300;
            assert!(verify_certificate_against_definition(&cert, &sys));
        }
    }

    #[test]
    fn obstruction_examples() {
        let a = AlphaPreset::Liouville10.value();
        let cf = ContinuedFraction::expand_trusted(a, 64);
        let c = skewshift_constructive_q(a, f(0.41), 0.1, 1.0, &cf).unwrap();
        let rep = badly_approximable_obstruction(a, 0.1, &c.certificate).unwrap();
        assert!(rep.q_times_step < 0.2);
        let direct = c.q_tilde as f64 * a.mul_int(2 * c.q_tilde as i128).norm().to_f64();
        assert_eq!(rep.q_times_step, direct);
        assert!(rep.witness_value < 0.4);

        assert!(matches!(
            badly_approximable_obstruction(a, 0.4, &c.certificate),
            Err(RepetitionError::InconsistentCertificate(_))
        ));

        // q = 1 from the vacuous threshold.
        let sys = SystemSpec::SkewShift { alpha: f(0.01) };
        let out = find_repetition_time(&sys, &tp(&[0.0, 0.0]), 0.3, 1.0, 5).unwrap();
        let cert = out.certificate().unwrap();
        assert_eq!(cert.q, 1);
        let rep = badly_approximable_obstruction(f(0.01), 0.3, cert).unwrap();
        assert_eq!(rep.n_max, 1);
    }

    #[test]
    fn prp_single_sample_and_reproducible() {
        let sys = SystemSpec::shift1(AlphaPreset::Sqrt2.value());
        let e = estimate_prp_fraction(&sys, 0.1, 1.0, 50, 1, 9).unwrap();
        assert!(e.fraction == 0.0 || e.fraction == 1.0);
        let a = estimate_prp_fraction(&sys, 0.1, 3.0, 50, 40, 5).unwrap();
        let b = estimate_prp_fraction(&sys, 0.1, 3.0, 50, 40, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fraction, 1.0);
        assert!(a.wilson_ci.0 <= a.fraction && a.fraction <= a.wilson_ci.1);
    }

    #[test]
    fn wilson_brackets() {
        for (h, n) in [(0, 10), (10, 10), (3, 7), (0, 500)] {
            let (lo, hi) = wilson_interval(h, n);
            let p = h as f64 / n as f64;
            assert!(lo <= p && p <= hi && (0.0..=1.0).contains(&lo) && hi <= 1.0);
        }
        let (lo, hi) = wilson_interval(0, 500);
        assert_eq!(lo, 0.0);
        assert!(hi < 0.01);
    }

    #[test]
    fn veech_examples() {
        let halves = Iet::new(vec![0.5, 0.5], Permutation::reversal(2)).unwrap();
        let t = veech_tower_search(&halves, 0.1, 10).unwrap();
        assert_eq!(t.q, 2);
        assert_eq!(t.coverage, 1.0);
        assert_eq!(t.return_overlap, t.len());
        assert!(veech_tower_search(&halves, 0.0, 10).is_err());
    }

    #[test]
    fn empirical_grid_for_shift() {
        let sys = SystemSpec::shift1(AlphaPreset::Golden.value());
        let grid = repetition_grid(&sys, &tp(&[0.3]), 6, &[1.0, 2.0, 3.0], 200).unwrap();
        assert_eq!(grid.entries.len(), 18);
        assert!(grid.all_certified());
    }
}
