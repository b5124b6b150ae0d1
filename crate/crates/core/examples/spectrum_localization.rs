//! Dirichlet truncations of the discrete Schrödinger operator: eigenvalues,
//! inverse participation ratios and edge mass.

use ergolab::arithmetic::AlphaPreset;
use ergolab::dynamics::{Point, SystemSpec, TorusPoint};
use ergolab::potentials::{sample_potential, SamplingFunction};
use ergolab::spectral::{localization_diagnostics, spectrum_of, truncated_spectrum};

fn main() {
    let free = spectrum_of(&[0.0; 8], false).unwrap();
    println!("free N = 8: {:.4?}", free.eigenvalues);

    let sys = SystemSpec::shift1(AlphaPreset::Golden.value());
    let omega = Point::Torus(TorusPoint::zero(1));
    let base = sample_potential(&sys, &SamplingFunction::cosine(1), 1.0, &omega, 0, 399).unwrap();
    // With V = λ cos, the transition sits at λ = 2.
    for lambda in [0.5, 1.5, 2.0, 3.0] {
        let report = truncated_spectrum(&base.with_lambda(lambda), 400, true).unwrap();
        let s = localization_diagnostics(&report).unwrap();
        println!(
            "λ = {lambda:<3}: median IPR {:.4}, max IPR {:.4}, max edge mass {:.3}, histogram {:?}",
            s.median_ipr, s.max_ipr, s.max_edge_mass, s.ipr_histogram
        );
    }
}
