//! Continued-fraction expansions of the built-in rotation numbers and the
//! bounded-horizon badly-approximable test.
//!
//! ```text
//! cargo run --example continued_fractions
//! ```

use ergolab::arithmetic::{classify_badly_approximable, AlphaPreset, ClassifyMethod, ContinuedFraction};

fn main() {
    for preset in AlphaPreset::ALL {
        let alpha = preset.value();
        let cf = ContinuedFraction::expand_trusted(alpha, 64);
        println!("{} = {alpha}", preset.name());
        println!("  trusted quotients: {}{}", cf.len(), if cf.precision_exhausted { " (precision exhausted)" } else { "" });
        for (a, c) in cf.partial_quotients.iter().zip(&cf.convergents).take(8) {
            let norm = alpha.mul_int(c.q as i128).norm().to_f64();
            println!("  a = {a:<6} p/q = {}/{}  q·⟨qα⟩ = {:.5}", c.p, c.q, c.q as f64 * norm);
        }
        let v = classify_badly_approximable(alpha, 0.3, 100_000, ClassifyMethod::Convergents).expect("valid c");
        println!("  c = 0.3, q ≤ 1e5: {:?} (witness {:?})\n", v.verdict, v.witness_q);
    }
}
