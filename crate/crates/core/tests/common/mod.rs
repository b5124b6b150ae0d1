#![allow(dead_code)]

/// Number of eigenvalues below `x` of the Dirichlet tridiagonal matrix
/// (off-diagonals 1), from the signs of the LDLᵀ pivots.
pub fn sturm_count(diag: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0f64;
    for (i, v) in diag.iter().enumerate() {
        d = (v - x) - if i == 0 { 0.0 } else { 1.0 / d };
        if d == 0.0 {
            d = -f64::EPSILON;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k`-th smallest eigenvalue by bisection on the Sturm count.
pub fn sturm_eigenvalue(diag: &[f64], k: usize) -> f64 {
    let bound = 2.0 + diag.iter().fold(0.0f64, |a, v| a.max(v.abs())) + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(diag, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Writes to the raw stderr handle, which the test harness does not capture.
pub fn verdict(id: &str, pass: bool, detail: impl std::fmt::Display) {
    use std::io::Write;
    let line = format!("CRITERION {id}: {} | {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}
