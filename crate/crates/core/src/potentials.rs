//! Sampling functions, potentials `V(n) = λ f(Tⁿω)` along orbits, and the
//! Gordon defect
//!
//! ```text
//! γ(q) = max_{1≤n≤q} max(|V(n) − V(n+q)|, |V(n) − V(n−q)|).
//! ```

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arithmetic::FixedPointFrac;
use crate::dynamics::{DynamicsError, Point, SystemSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("function expects dimension {expected}, system has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("window [{have_lo}, {have_hi}] does not cover [{need_lo}, {need_hi}]")]
    WindowTooSmall {
        need_lo: i64,
        need_hi: i64,
        have_lo: i64,
        have_hi: i64,
    },
    #[error("invalid sampling function: {0}")]
    InvalidFunction(String),
    #[error("no modulus of continuity: the function jumps by {oscillation}")]
    Unbounded { oscillation: f64 },
    #[error("q list must be positive and strictly increasing")]
    UnsortedQ,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// One term `amplitude · cos(2π k·x + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub k: Vec<i64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplingFunction {
    /// `cos(2π k·x + phase)`
    Cosine {
        k: Vec<i64>,
        #[serde(default)]
        phase: f64,
    },
    TrigPoly { modes: Vec<Mode> },
    /// Step function of the first coordinate: `values[i]` on
    /// `[breakpoints[i-1], breakpoints[i])`, with 0 and the period as outer ends.
    PiecewiseConstant { breakpoints: Vec<f64>, values: Vec<f64> },
    /// `cos(2π x₂)` on the skew-shift, which produces
    /// `cos(2π(ω₁ + ω₂n + αn(n−1)))` from the start point `(ω₂, ω₁)`.
    BourgainQuadratic,
}

impl SamplingFunction {
    pub fn cosine(d: usize) -> Self {
        let mut k = vec![0; d];
        k[0] = 1;
        SamplingFunction::Cosine { k, phase: 0.0 }
    }

    pub fn constant(c: f64, d: usize) -> Self {
        SamplingFunction::TrigPoly {
            modes: vec![Mode { k: vec![0; d], amplitude: c, phase: 0.0 }],
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, SamplingFunction::PiecewiseConstant { .. })
    }

    /// Discontinuities of the piecewise-constant variant, in `[0, 1)`
    /// (the wrap point 0 counts when the outer pieces differ).
    pub fn discontinuities(&self) -> Vec<f64> {
        match self {
            SamplingFunction::PiecewiseConstant { breakpoints, values } => {
                let mut out = Vec::new();
                if values.first() != values.last() {
                    out.push(0.0);
                }
                for (i, b) in breakpoints.iter().enumerate() {
                    if values[i] != values[i + 1] {
                        out.push(*b);
                    }
                }
                out
            }
            _ => Vec::new(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), PotentialError> {
        let check = |k: &[i64]| {
            if k.len() == dim {
                Ok(())
            } else {
                Err(PotentialError::DimensionMismatch { expected: k.len(), got: dim })
            }
        };
        match self {
            SamplingFunction::Cosine { k, phase } => {
                if !phase.is_finite() {
                    return Err(PotentialError::InvalidFunction("non-finite phase".into()));
                }
                check(k)
            }
            SamplingFunction::TrigPoly { modes } => {
                for m in modes {
                    if !(m.amplitude.is_finite() && m.phase.is_finite()) {
                        return Err(PotentialError::InvalidFunction("non-finite mode".into()));
                    }
                    check(&m.k)?;
                }
                Ok(())
            }
            SamplingFunction::PiecewiseConstant { breakpoints, values } => {
                if values.len() != breakpoints.len() + 1 {
                    return Err(PotentialError::InvalidFunction(format!(
                        "{} breakpoints need {} values, got {}",
                        breakpoints.len(),
                        breakpoints.len() + 1,
                        values.len()
                    )));
                }
                if breakpoints.windows(2).any(|w| w[0] >= w[1]) || breakpoints.iter().any(|b| !b.is_finite()) {
                    return Err(PotentialError::InvalidFunction("breakpoints must increase".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(PotentialError::InvalidFunction("non-finite value".into()));
                }
                Ok(())
            }
            SamplingFunction::BourgainQuadratic => {
                if dim == 2 {
                    Ok(())
                } else {
                    Err(PotentialError::DimensionMismatch { expected: 2, got: dim })
                }
            }
        }
    }

    /// Evaluates `f` at a point; the phase `k·x` is reduced exactly on the torus.
    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            SamplingFunction::Cosine { k, phase } => (TAU * phase_of(k, p) + phase).cos(),
            SamplingFunction::TrigPoly { modes } => modes
                .iter()
                .map(|m| m.amplitude * (TAU * phase_of(&m.k, p) + m.phase).cos())
                .sum(),
            SamplingFunction::PiecewiseConstant { breakpoints, values } => {
                let x = match p {
                    Point::Torus(t) => t.coords[0].to_f64(),
                    Point::Interval(x) => *x,
                };
                values[breakpoints.partition_point(|b| *b <= x)]
            }
            SamplingFunction::BourgainQuadratic => match p {
                Point::Torus(t) => (TAU * t.coords[1].to_f64()).cos(),
                Point::Interval(_) => f64::NAN,
            },
        }
    }

    /// `sup |f|`, bounded from the analytic data.
    pub fn sup_bound(&self) -> f64 {
        match self {
            SamplingFunction::Cosine { .. } | SamplingFunction::BourgainQuadratic => 1.0,
            SamplingFunction::TrigPoly { modes } => modes.iter().map(|m| m.amplitude.abs()).sum(),
            SamplingFunction::PiecewiseConstant { values, .. } => values.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        }
    }
}

fn phase_of(k: &[i64], p: &Point) -> f64 {
    match p {
        Point::Torus(t) => k
            .iter()
            .zip(&t.coords)
            .fold(FixedPointFrac::ZERO, |acc, (ki, x)| acc + x.mul_int(*ki as i128))
            .to_f64(),
        Point::Interval(x) => k[0] as f64 * x,
    }
}

/// Start point on the skew-shift whose `cos(2π x₂)` potential is
/// `cos(2π(ω₁ + ω₂n + αn(n−1)))`.
pub fn bourgain_start(omega1: FixedPointFrac, omega2: FixedPointFrac) -> Point {
    Point::Torus(crate::dynamics::TorusPoint::new([omega2, omega1]))
}

/// Upper bound on `sup{|f(x) − f(y)| : dist(x, y) ≤ delta}` in the max
/// metric, including the rounding of double-precision evaluation.
pub fn modulus_bound(f: &SamplingFunction, delta: f64) -> Result<f64, PotentialError> {
    let delta = delta.max(0.0);
    let per_mode = |k_l1: f64, amp: f64| {
        let amp = amp.abs();
        (TAU * k_l1 * amp * delta).min(2.0 * amp) + 16.0 * f64::EPSILON * amp * (1.0 + k_l1)
    };
    let l1 = |k: &[i64]| k.iter().map(|x| x.unsigned_abs() as f64).sum::<f64>();
    match f {
        SamplingFunction::Cosine { k, .. } => Ok(per_mode(l1(k), 1.0)),
        SamplingFunction::BourgainQuadratic => Ok(per_mode(1.0, 1.0)),
        SamplingFunction::TrigPoly { modes } => {
            Ok(modes.iter().filter(|m| m.k.iter().any(|&x| x != 0)).map(|m| per_mode(l1(&m.k), m.amplitude)).sum())
        }
        SamplingFunction::PiecewiseConstant { values, .. } => {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                Err(PotentialError::Unbounded { oscillation: hi - lo })
            } else {
                Ok(0.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowOrigin {
    pub system: SystemSpec,
    pub f: SamplingFunction,
    pub omega: Point,
}

/// Potential values on `n_min..=n_max`. The coupling is kept apart from the
/// sampled values, so rescaling is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialWindow {
    pub origin: Option<WindowOrigin>,
    pub lambda: f64,
    pub n_min: i64,
    pub n_max: i64,
    base: Vec<f64>,
}

impl PotentialWindow {
    /// A window of explicit values `V(n_min), V(n_min+1), …` with `λ = 1`.
    pub fn from_values(n_min: i64, values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "empty potential window");
        Self {
            origin: None,
            lambda: 1.0,
            n_min,
            n_max: n_min + values.len() as i64 - 1,
            base: values,
        }
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// `f(Tⁿω)` without the coupling.
    pub fn unscaled(&self) -> &[f64] {
        &self.base
    }

    pub fn values(&self) -> Vec<f64> {
        self.base.iter().map(|v| self.lambda * v).collect()
    }

    pub fn value(&self, n: i64) -> Option<f64> {
        self.base_at(n).map(|v| self.lambda * v)
    }

    fn base_at(&self, n: i64) -> Option<f64> {
        if n < self.n_min || n > self.n_max {
            return None;
        }
        Some(self.base[(n - self.n_min) as usize])
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    pub fn covers(&self, lo: i64, hi: i64) -> Result<(), PotentialError> {
        if lo >= self.n_min && hi <= self.n_max {
            Ok(())
        } else {
            Err(PotentialError::WindowTooSmall {
                need_lo: lo,
                need_hi: hi,
                have_lo: self.n_min,
                have_hi: self.n_max,
            })
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.lambda.abs() * self.base.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

pub fn sample_potential(
    system: &SystemSpec,
    f: &SamplingFunction,
    lambda: f64,
    omega: &Point,
    n_min: i64,
    n_max: i64,
) -> Result<PotentialWindow, PotentialError> {
    if n_max < n_min {
        return Err(DynamicsError::EmptyRange(n_min, n_max).into());
    }
    f.validate(system.dim())?;
    let base = system.orbit(omega, n_min, n_max)?.iter().map(|p| f.eval(p)).collect();
    Ok(PotentialWindow {
        origin: Some(WindowOrigin {
            system: system.clone(),
            f: f.clone(),
            omega: omega.clone(),
        }),
        lambda,
        n_min,
        n_max,
        base,
    })
}

/// The Gordon defect at period `q`; needs the window to cover `[1−q, 2q]`.
pub fn gordon_gamma(window: &PotentialWindow, q: u64) -> Result<f64, PotentialError> {
    if q == 0 {
        return Err(PotentialError::UnsortedQ);
    }
    let qi = q as i64;
    window.covers(1 - qi, 2 * qi)?;
    let at = |n: i64| window.base[(n - window.n_min) as usize];
    let mut g = 0.0f64;
    for n in 1..=qi {
        let v = at(n);
        g = g.max((v - at(n + qi)).abs()).max((v - at(n - qi)).abs());
    }
    Ok(window.lambda.abs() * g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GordonEntry {
    pub q: u64,
    pub gamma: f64,
}

impl GordonEntry {
    /// `log γ(q) + q log C`, with `−∞` for an exact repetition.
    pub fn log_weighted(&self, c: f64) -> f64 {
        self.gamma.ln() + self.q as f64 * c.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GordonVerdict {
    DecayConsistent { c_max: f64 },
    NoDecayAtHorizon,
}

/// Finite-horizon evidence only: a decay pattern on the tested `q` says
/// nothing about the limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GordonProfile {
    pub entries: Vec<GordonEntry>,
    pub verdict: GordonVerdict,
    pub horizon: u64,
}

/// Whether `γ(q)·C^q` strictly decreases along the entries (equal exact zeros allowed).
pub fn decays_at(entries: &[GordonEntry], c: f64) -> bool {
    entries.windows(2).all(|w| {
        let (a, b) = (w[0].log_weighted(c), w[1].log_weighted(c));
        b < a || (a == f64::NEG_INFINITY && b == f64::NEG_INFINITY)
    })
}

pub fn profile_from_entries(entries: Vec<GordonEntry>, c_list: &[f64]) -> GordonProfile {
    let c_max = c_list
        .iter()
        .copied()
        .filter(|&c| c > 0.0 && decays_at(&entries, c))
        .fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.max(c))));
    GordonProfile {
        horizon: entries.last().map_or(0, |e| e.q),
        verdict: match c_max {
            Some(c_max) => GordonVerdict::DecayConsistent { c_max },
            None => GordonVerdict::NoDecayAtHorizon,
        },
        entries,
    }
}

pub fn gordon_profile(
    system: &SystemSpec,
    f: &SamplingFunction,
    lambda: f64,
    omega: &Point,
    q_list: &[u64],
    c_list: &[f64],
) -> Result<GordonProfile, PotentialError> {
    if q_list.is_empty() || q_list[0] == 0 || q_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PotentialError::UnsortedQ);
    }
    let q_top = *q_list.last().unwrap() as i64;
    let window = sample_potential(system, f, lambda, omega, 1 - q_top, 2 * q_top)?;
    let entries = q_list
        .par_iter()
        .map(|&q| gordon_gamma(&window, q).map(|gamma| GordonEntry { q, gamma }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(profile_from_entries(entries, c_list))
}
