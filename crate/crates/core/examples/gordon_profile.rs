//! Gordon defects γ(q) of sampled potentials along convergent denominators,
//! and the decay verdict against a list of rates C.

use ergolab::arithmetic::{AlphaPreset, ContinuedFraction};
use ergolab::dynamics::{Point, SystemSpec, TorusPoint};
use ergolab::potentials::{gordon_profile, modulus_bound, SamplingFunction};

fn main() {
    let omega = Point::Torus(TorusPoint::from_f64s(&[0.2]));
    let coding = SamplingFunction::PiecewiseConstant { breakpoints: vec![0.5], values: vec![1.0, 0.0] };
    for preset in [AlphaPreset::Golden, AlphaPreset::Liouville10] {
        let alpha = preset.value();
        let sys = SystemSpec::shift1(alpha);
        let q_list: Vec<u64> = ContinuedFraction::expand_trusted(alpha, 64)
            .denominators()
            .into_iter()
            .take_while(|&q| q <= 20_000)
            .map(|q| q as u64)
            .collect();
        for (label, f) in [("cosine", SamplingFunction::cosine(1)), ("coding", coding.clone())] {
            let profile = gordon_profile(&sys, &f, 1.0, &omega, &q_list, &[1.0, 1.5, 2.0]).unwrap();
            println!("{} / {label}: {:?}", preset.name(), profile.verdict);
            for e in &profile.entries {
                // Discontinuous functions have no modulus-of-continuity bound.
                match modulus_bound(&f, alpha.mul_int(e.q as i128).norm().to_f64()) {
                    Ok(b) => println!("  q = {:<6} γ = {:.3e}  ω_f(⟨qα⟩) bound {b:.3e}", e.q, e.gamma),
                    Err(_) => println!("  q = {:<6} γ = {:.3e}", e.q, e.gamma),
                }
            }
        }
    }
}
