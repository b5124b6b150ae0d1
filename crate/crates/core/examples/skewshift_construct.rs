//! Repetition times m·q_k for the skew-shift built from convergents, and
//! the arithmetic consequence extracted from a certificate.

use ergolab::arithmetic::{AlphaPreset, ContinuedFraction, FixedPointFrac};
use ergolab::dynamics::SystemSpec;
use ergolab::repetition::{badly_approximable_obstruction, skewshift_constructive_q, verify_certificate_against_definition};

fn main() {
    for preset in [AlphaPreset::Liouville10, AlphaPreset::Golden] {
        let alpha = preset.value();
        let cf = ContinuedFraction::expand_trusted(alpha, 64);
        let omega1 = FixedPointFrac::from_f64(0.123);
        for eps in [0.3, 0.1, 0.03] {
            match skewshift_constructive_q(alpha, omega1, eps, 1.0, &cf) {
                Ok(c) => {
                    let sys = SystemSpec::SkewShift { alpha };
                    let ok = verify_certificate_against_definition(&c.certificate, &sys);
                    println!(
                        "{} ε = {eps}: q_k = {}, m = {}, q̃ = {}, bound {:.3e}, measured {:.3e}, verified {ok}",
                        preset.name(),
                        c.q_k,
                        c.m,
                        c.q_tilde,
                        c.terms.bound(),
                        c.certificate.max_dist
                    );
                    if let Ok(obs) = badly_approximable_obstruction(alpha, eps, &c.certificate) {
                        println!("    q⟨2qα⟩ = {:.3e} < {}; q' = {} gives q'⟨q'α⟩ = {:.3e}", obs.q_times_step, obs.bound, obs.witness_q, obs.witness_value);
                    }
                }
                Err(e) => println!("{} ε = {eps}: {e}", preset.name()),
            }
        }
    }
}
