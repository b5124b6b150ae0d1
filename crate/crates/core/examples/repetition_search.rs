//! Smallest repetition times q for a few systems and the empirical
//! (ε, r) grid. Every certificate is re-checked by stepping.

use ergolab::arithmetic::AlphaPreset;
use ergolab::dynamics::{Point, SystemSpec, TorusPoint};
use ergolab::repetition::{find_repetition_time, repetition_grid, verify_certificate_against_definition, SearchOutcome};

fn main() {
    let golden = SystemSpec::shift1(AlphaPreset::Golden.value());
    let origin = Point::Torus(TorusPoint::zero(1));
    match find_repetition_time(&golden, &origin, 0.06, 3.0, 100).unwrap() {
        SearchOutcome::Found(c) => {
            println!("golden rotation, ε = 0.06, r = 3: q = {}, k ≤ {}, max distance {:.15}", c.q, c.k_max, c.max_dist);
            println!("  verified by stepping: {}", verify_certificate_against_definition(&c, &golden));
        }
        SearchOutcome::NotFound { best_q, best_prefix, .. } => println!("not found (best q = {best_q}, prefix {best_prefix})"),
    }

    // The golden skew-shift is not expected to repeat at small ε.
    let skew = SystemSpec::SkewShift { alpha: AlphaPreset::Golden.value() };
    let w = Point::Torus(TorusPoint::from_f64s(&[0.3, 0.7]));
    println!("golden skew-shift, ε = 0.02: {:?}", find_repetition_time(&skew, &w, 0.02, 1.0, 2000).unwrap());

    let grid = repetition_grid(&SystemSpec::shift1(AlphaPreset::Sqrt2.value()), &origin, 8, &[1.0, 2.0, 4.0], 5000).unwrap();
    println!("√2 rotation grid, ε = 2^-j:");
    for e in &grid.entries {
        println!("  ε = {:<10} r = {}  {:?}", e.epsilon, e.r, e.outcome.certificate().map(|c| c.q));
    }
    println!("all certified: {}", grid.all_certified());
}
