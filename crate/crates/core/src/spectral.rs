//! Transfer matrices of `u(n+1) + u(n−1) + V(n)u(n) = E u(n)`, the
//! three-block Gordon inequality, and spectra of Dirichlet truncations.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::potentials::{PotentialError, PotentialWindow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Window(#[from] PotentialError),
    #[error("empty block [{0}, {1}]")]
    EmptyBlock(i64, i64),
    #[error("initial vector must be nonzero and finite")]
    DegenerateVector,
    #[error("eigensolver did not converge for the {size}x{size} truncation")]
    ConvergenceFailure { size: usize },
    #[error("report carries no eigenvectors")]
    MissingVectors,
    #[error("truncation size must be at least 1")]
    EmptyTruncation,
}

pub type Mat2 = [[f64; 2]; 2];

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn apply(a: &Mat2, u: [f64; 2]) -> [f64; 2] {
    [a[0][0] * u[0] + a[0][1] * u[1], a[1][0] * u[0] + a[1][1] * u[1]]
}

fn frobenius(a: &Mat2) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm2(u: [f64; 2]) -> f64 {
    u[0].hypot(u[1])
}

/// `exp(log_scale) · entries`, kept normalised so long products never overflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferProduct {
    pub entries: Mat2,
    pub log_scale: f64,
    pub energy: f64,
    pub n_lo: i64,
    pub n_hi: i64,
}

impl TransferProduct {
    fn from_parts(m: Mat2, log_scale: f64, energy: f64, n_lo: i64, n_hi: i64) -> Self {
        let s = frobenius(&m);
        let entries = m.map(|row| row.map(|x| x / s));
        Self {
            entries,
            log_scale: log_scale + s.ln(),
            energy,
            n_lo,
            n_hi,
        }
    }

    pub fn matrix(&self) -> Mat2 {
        let s = self.log_scale.exp();
        self.entries.map(|row| row.map(|x| x * s))
    }

    pub fn log_norm(&self) -> f64 {
        self.log_scale
    }

    pub fn det(&self) -> f64 {
        let e = &self.entries;
        (e[0][0] * e[1][1] - e[0][1] * e[1][0]) * (2.0 * self.log_scale).exp()
    }

    /// `|det − 1| / ‖A‖_F²`, the determinant error at the scale the entries carry.
    pub fn det_drift(&self) -> f64 {
        let e = &self.entries;
        (e[0][0] * e[1][1] - e[0][1] * e[1][0] - (-2.0 * self.log_scale).exp()).abs()
    }

    pub fn apply(&self, u: [f64; 2]) -> [f64; 2] {
        apply(&self.matrix(), u)
    }

    /// `A⁻¹` from the adjugate, using `det A = 1`.
    pub fn inverse_matrix(&self) -> Mat2 {
        let m = self.matrix();
        [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]
    }

    /// `later · self` for adjacent blocks.
    pub fn then(&self, later: &TransferProduct) -> TransferProduct {
        debug_assert_eq!(later.n_lo, self.n_hi + 1);
        TransferProduct::from_parts(
            mul(&later.entries, &self.entries),
            self.log_scale + later.log_scale,
            self.energy,
            self.n_lo,
            later.n_hi,
        )
    }
}

pub fn one_step(energy: f64, v: f64) -> Mat2 {
    [[energy - v, -1.0], [1.0, 0.0]]
}

/// Ordered product of one-step matrices over `n_lo..=n_hi`, mapping
/// `(u(n_lo), u(n_lo−1))` to `(u(n_hi+1), u(n_hi))`.
pub fn transfer_block(window: &PotentialWindow, energy: f64, n_lo: i64, n_hi: i64) -> Result<TransferProduct, SpectralError> {
    if n_hi < n_lo {
        return Err(SpectralError::EmptyBlock(n_lo, n_hi));
    }
    window.covers(n_lo, n_hi)?;
    let mut m: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
    let mut log_scale = 0.0;
    for j in n_lo..=n_hi {
        let v = window.value(j).expect("covered");
        m = mul(&one_step(energy, v), &m);
        let s = frobenius(&m);
        if !(1e-100..=1e100).contains(&s) {
            m = m.map(|row| row.map(|x| x / s));
            log_scale += s.ln();
        }
    }
    Ok(TransferProduct::from_parts(m, log_scale, energy, n_lo, n_hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub q: u64,
    pub energy: f64,
    /// `‖(u(q+1), u(q))‖`
    pub norm_plus_q: f64,
    /// `‖(u(2q+1), u(2q))‖`
    pub norm_plus_2q: f64,
    /// `‖(u(1−q), u(−q))‖`
    pub norm_minus_q: f64,
    /// `max` of the three norms over `‖u0‖`; at least ½ when `V` is `q`-periodic.
    pub min_ratio: f64,
    /// Gordon defect of the window at `q`.
    pub gamma: f64,
    /// `‖A²u0 − tr(A)·Au0 + u0‖ / ‖u0‖` for `A` the block over `[1, q]`.
    pub cayley_hamilton_residual: f64,
}

/// Propagates `u0 = (u(1), u(0))` over the blocks `[1, q]`, `[1, 2q]` and
/// backwards over `[1−q, 0]`.
pub fn gordon_three_block_check(
    window: &PotentialWindow,
    energy: f64,
    q: u64,
    u0: [f64; 2],
) -> Result<CheckReport, SpectralError> {
    let u_norm = norm2(u0);
    if !(u_norm > 0.0 && u_norm.is_finite()) {
        return Err(SpectralError::DegenerateVector);
    }
    let qi = q as i64;
    window.covers(1 - qi, 2 * qi)?;
    let a = transfer_block(window, energy, 1, qi)?;
    let second = transfer_block(window, energy, qi + 1, 2 * qi)?;
    let before = transfer_block(window, energy, 1 - qi, 0)?;
    let au = a.apply(u0);
    let a2u = second.apply(au);
    let a_inv_u = apply(&before.inverse_matrix(), u0);
    let (np, n2, nm) = (norm2(au), norm2(a2u), norm2(a_inv_u));

    let am = a.matrix();
    let tr = am[0][0] + am[1][1];
    let aau = apply(&am, au);
    let residual = norm2([aau[0] - tr * au[0] + u0[0], aau[1] - tr * au[1] + u0[1]]) / u_norm;
    Ok(CheckReport {
        q,
        energy,
        norm_plus_q: np,
        norm_plus_2q: n2,
        norm_minus_q: nm,
        min_ratio: np.max(n2).max(nm) / u_norm,
        gamma: crate::potentials::gordon_gamma(window, q)?,
        cayley_hamilton_residual: residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub size: usize,
    pub boundary: Boundary,
    pub eigenvalues: Vec<f64>,
    /// `Σu⁴ / (Σu²)²` per eigenvector, matching `eigenvalues`.
    pub ipr: Vec<f64>,
    /// Mass of each eigenvector on the outer 10% of sites.
    pub edge_mass: Vec<f64>,
    /// Columns matching `eigenvalues`, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
}

pub fn hamiltonian(diagonal: &[f64]) -> DMatrix<f64> {
    let n = diagonal.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diagonal[i]
        } else if i.abs_diff(j) == 1 {
            1.0
        } else {
            0.0
        }
    })
}

pub fn inverse_participation(u: &[f64]) -> f64 {
    let s2: f64 = u.iter().map(|x| x * x).sum();
    let s4: f64 = u.iter().map(|x| x.powi(4)).sum();
    s4 / (s2 * s2)
}

/// Sites within `⌈N/20⌉` of either end, so the two ends together hold 10%.
pub fn edge_width(n: usize) -> usize {
    n.div_ceil(20)
}

pub fn edge_fraction(u: &[f64]) -> f64 {
    let n = u.len();
    let w = edge_width(n);
    let total: f64 = u.iter().map(|x| x * x).sum();
    let edge: f64 = u
        .iter()
        .enumerate()
        .filter(|(i, _)| *i < w || *i >= n - w)
        .map(|(_, x)| x * x)
        .sum();
    edge / total
}

/// Eigen-decomposition of `H` restricted to the first `n` sites of the
/// window with Dirichlet ends. The IPR and edge mass are always filled;
/// eigenvectors are kept only when asked for.
pub fn truncated_spectrum(window: &PotentialWindow, n: usize, report_vectors: bool) -> Result<SpectralReport, SpectralError> {
    if n == 0 {
        return Err(SpectralError::EmptyTruncation);
    }
    window.covers(window.n_min, window.n_min + n as i64 - 1)?;
    let diag: Vec<f64> = (0..n as i64).map(|i| window.value(window.n_min + i).expect("covered")).collect();
    spectrum_of(&diag, report_vectors)
}

/// Same as [`truncated_spectrum`] for an explicit diagonal.
pub fn spectrum_of(diagonal: &[f64], report_vectors: bool) -> Result<SpectralReport, SpectralError> {
    let n = diagonal.len();
    if n == 0 {
        return Err(SpectralError::EmptyTruncation);
    }
    let eig = SymmetricEigen::try_new(hamiltonian(diagonal), f64::EPSILON, 0).ok_or(SpectralError::ConvergenceFailure { size: n })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vectors: Vec<Vec<f64>> = order.iter().map(|&k| eig.eigenvectors.column(k).iter().copied().collect()).collect();
    Ok(SpectralReport {
        size: n,
        boundary: Boundary::Dirichlet,
        eigenvalues: order.iter().map(|&k| eig.eigenvalues[k]).collect(),
        ipr: vectors.iter().map(|u| inverse_participation(u)).collect(),
        edge_mass: vectors.iter().map(|u| edge_fraction(u)).collect(),
        eigenvectors: report_vectors.then_some(vectors),
    })
}

/// Descriptive statistics only; a finite truncation decides no spectral type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationSummary {
    pub size: usize,
    pub median_ipr: f64,
    pub max_ipr: f64,
    pub max_edge_mass: f64,
    /// Counts of `ipr` over ten equal bins of `[0, 1]`.
    pub ipr_histogram: [u64; 10],
}

pub fn localization_diagnostics(report: &SpectralReport) -> Result<LocalizationSummary, SpectralError> {
    let vectors = report.eigenvectors.as_ref().ok_or(SpectralError::MissingVectors)?;
    let ipr: Vec<f64> = vectors.iter().map(|u| inverse_participation(u)).collect();
    let mut sorted = ipr.clone();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 { sorted[m / 2] } else { 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]) };
    let mut hist = [0u64; 10];
    for x in &ipr {
        hist[((x * 10.0) as usize).min(9)] += 1;
    }
    Ok(LocalizationSummary {
        size: report.size,
        median_ipr: median,
        max_ipr: sorted[m - 1],
        max_edge_mass: vectors.iter().map(|u| edge_fraction(u)).fold(0.0, f64::max),
        ipr_histogram: hist,
    })
}
