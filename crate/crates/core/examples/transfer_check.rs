//! Transfer-matrix products over three adjacent blocks, checked against
//! the one-half lower bound for a periodic potential and for a sampled
//! quasi-periodic one.

use ergolab::arithmetic::AlphaPreset;
use ergolab::dynamics::{Point, SystemSpec, TorusPoint};
use ergolab::potentials::{sample_potential, PotentialWindow, SamplingFunction};
use ergolab::spectral::{gordon_three_block_check, transfer_block};

fn main() {
    let period = [0.7, -1.3, 2.1, 0.0, -0.4];
    let q = period.len() as i64;
    let w = PotentialWindow::from_values(1 - q, (1 - q..=2 * q).map(|n| period[n.rem_euclid(q) as usize]).collect());
    for e in [-2.5, 0.0, 1.1, 3.9] {
        let r = gordon_three_block_check(&w, e, q as u64, [1.0, 0.0]).unwrap();
        println!(
            "periodic q = {q}, E = {e:>4}: |u(q)| {:.3}, |u(2q)| {:.3}, |u(-q)| {:.3}, max ratio {:.3}, CH residual {:.1e}",
            r.norm_plus_q, r.norm_plus_2q, r.norm_minus_q, r.min_ratio, r.cayley_hamilton_residual
        );
    }

    // Near-periodic: the golden cosine at the convergent q = 89.
    let sys = SystemSpec::shift1(AlphaPreset::Golden.value());
    let omega = Point::Torus(TorusPoint::zero(1));
    let w = sample_potential(&sys, &SamplingFunction::cosine(1), 2.0, &omega, -88, 1000).unwrap();
    let r = gordon_three_block_check(&w, 0.3, 89, [0.6, 0.8]).unwrap();
    println!("golden cosine, λ = 2, q = 89: max ratio {:.3}, γ = {:.3e}", r.min_ratio, r.gamma);
    let long = transfer_block(&w, 0.3, 1, 1000).unwrap();
    println!("1000-step product: log‖A‖ = {:.2}, determinant drift {:.1e}", long.log_norm(), long.det_drift());
}
