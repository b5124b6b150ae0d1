//! Orbit segments for each kind of system, in exact circle arithmetic
//! (or doubles for interval exchanges).

use ergolab::arithmetic::AlphaPreset;
use ergolab::dynamics::{Iet, Permutation, Point, SystemSpec, TorusPoint};

fn main() {
    let golden = AlphaPreset::Golden.value();
    let systems = [
        SystemSpec::shift1(golden),
        SystemSpec::SkewShift { alpha: golden },
        SystemSpec::SkewProduct { d: 3, alpha: AlphaPreset::Sqrt2.value() },
        SystemSpec::Iet(Iet::new(vec![0.5, 0.25, 0.25], Permutation::reversal(3)).unwrap()),
    ];
    for sys in &systems {
        let start = match sys {
            SystemSpec::Iet(_) => Point::Interval(0.1),
            _ => Point::Torus(TorusPoint::from_f64s(&vec![0.1; sys.dim()])),
        };
        println!("{}:", sys.name());
        for (n, p) in (-2..).zip(sys.orbit(&start, -2, 5).unwrap()) {
            let coords: Vec<String> = p.to_f64s().iter().map(|x| format!("{x:.6}")).collect();
            println!("  T^{n:<2} ω = ({})", coords.join(", "));
        }
    }
}
