//! Fraction of Lebesgue-random starting points that repeat, with a Wilson
//! interval. The result is a pure function of the seed.

use ergolab::arithmetic::AlphaPreset;
use ergolab::dynamics::SystemSpec;
use ergolab::repetition::estimate_prp_fraction;

fn main() {
    let seed = 2024;
    for (label, sys) in [
        ("golden skew-shift", SystemSpec::SkewShift { alpha: AlphaPreset::Golden.value() }),
        ("liouville10 skew-shift", SystemSpec::SkewShift { alpha: AlphaPreset::Liouville10.value() }),
        ("golden rotation", SystemSpec::shift1(AlphaPreset::Golden.value())),
    ] {
        for eps in [0.2, 0.05] {
            let e = estimate_prp_fraction(&sys, eps, 1.0, 2000, 300, seed).unwrap();
            println!(
                "{label:<24} ε = {eps:<5} hits {:>3}/{}  fraction {:.3}  95% CI [{:.3}, {:.3}]",
                e.n_hits, e.n_samples, e.fraction, e.wilson_ci.0, e.wilson_ci.1
            );
        }
    }
}
