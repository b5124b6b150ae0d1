//! Tower search for interval exchanges: an interval whose first q images
//! are disjoint, nearly fill the space, and come back with large overlap.

use ergolab::arithmetic::AlphaPreset;
use ergolab::cli::random_iet;
use ergolab::dynamics::{Iet, Permutation};
use ergolab::repetition::{sample_rng, veech_tower_search};

fn report(label: &str, iet: &Iet, eps: f64) {
    match veech_tower_search(iet, eps, 2000) {
        Ok(t) => println!(
            "{label}: q = {}, J = [{:.5}, {:.5}), coverage {:.4}, overlap/|J| {:.4}",
            t.q, t.j_lo, t.j_hi, t.coverage, t.return_overlap / t.len()
        ),
        Err(miss) => match miss.best {
            Some(b) => println!(
                "{label}: none up to q = {}; best q = {} with coverage {:.4}, overlap/|J| {:.4}",
                miss.q_max, b.q, b.coverage, b.return_overlap / b.len()
            ),
            None => println!("{label}: no candidate"),
        },
    }
}

fn main() {
    report("halves swap, ε = 0.1", &Iet::new(vec![0.5, 0.5], Permutation::reversal(2)).unwrap(), 0.1);
    let golden = Iet::rotation(AlphaPreset::Golden.value().to_f64()).unwrap();
    for eps in [0.3, 0.5, 0.65] {
        report(&format!("golden rotation, ε = {eps}"), &golden, eps);
    }
    for seed in 0..5 {
        let iet = random_iet(3, &mut sample_rng(seed, 0));
        report(&format!("random 3-IET #{seed} {:?} {:?}", iet.permutation().one_based(), iet.lambda()), &iet, 0.5);
    }
}
