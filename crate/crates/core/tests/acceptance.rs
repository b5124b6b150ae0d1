//! Acceptance suite. Each test prints one `CRITERION n: PASS|FAIL` line
//! before asserting, so the report survives a failing assertion.

mod common;

use std::time::Instant;

use common::{sturm_eigenvalue, verdict};
use ergolab::arithmetic::{AlphaPreset, ContinuedFraction, FixedPointFrac};
use ergolab::dynamics::{Iet, Point, SystemSpec, TorusPoint};
use ergolab::potentials::{gordon_gamma, modulus_bound, sample_potential, GordonVerdict, Mode, PotentialWindow, SamplingFunction};
use ergolab::repetition::{
    badly_approximable_obstruction, estimate_prp_fraction, sample_rng, skewshift_constructive_q,
    verify_certificate_against_definition, veech_tower_search, OrbitSearch, RepetitionCertificate,
};
use ergolab::spectral::{gordon_three_block_check, spectrum_of, transfer_block};
use rand::Rng;

const PRESETS: [AlphaPreset; 3] = [AlphaPreset::Golden, AlphaPreset::Sqrt2, AlphaPreset::Liouville10];

/// First convergent denominator (including `q₀ = 1`) with `⟨qα⟩ < ε`.
fn first_denominator_below(alpha: FixedPointFrac, eps: f64) -> u64 {
    let cf = ContinuedFraction::expand_trusted(alpha, 64);
    std::iter::once(1u128)
        .chain(cf.denominators())
        .find(|&q| alpha.mul_int(q as i128).norm().to_f64() < eps)
        .expect("deep enough") as u64
}

fn shift_systems() -> Vec<(String, SystemSpec)> {
    let mut out = Vec::new();
    for p in PRESETS {
        let a = p.value();
        out.push((format!("{} on T1", p.name()), SystemSpec::shift1(a)));
        out.push((format!("{} on T2", p.name()), SystemSpec::Shift { alpha: vec![a, -a] }));
    }
    out
}

/// Certificates of criterion 1, with the shift they belong to.
fn criterion1_certificates() -> (Vec<(SystemSpec, RepetitionCertificate)>, Vec<String>) {
    let mut certs = Vec::new();
    let mut failures = Vec::new();
    let r_list = [1.0, 2.0, 3.0];
    for (si, (name, sys)) in shift_systems().into_iter().enumerate() {
        let SystemSpec::Shift { alpha } = &sys else { unreachable!() };
        let bounds: Vec<u64> = (1..=10)
            .map(|j| {
                let eps = 0.5f64.powi(j);
                alpha.iter().map(|a| first_denominator_below(*a, eps)).max().unwrap()
            })
            .collect();
        let q_max = *bounds.iter().max().unwrap();
        for i in 0..100u64 {
            let omega = sys.sample_uniform(&mut sample_rng(2024, ((si as u64) << 32) + i));
            let search = OrbitSearch::new(&sys, &omega, 3.0, q_max).unwrap();
            for j in 1..=10 {
                let eps = 0.5f64.powi(j);
                for r in r_list {
                    let out = search.find(eps, r, q_max).unwrap();
                    let Some(c) = out.certificate() else {
                        failures.push(format!("{name}: no certificate at j={j}, r={r}"));
                        continue;
                    };
                    if c.q > bounds[j as usize - 1] {
                        failures.push(format!("{name}: q={} exceeds bound {} at j={j}", c.q, bounds[j as usize - 1]));
                    }
                    let pts = search.points();
                    let dists: Vec<FixedPointFrac> = (0..=c.k_max as usize)
                        .map(|k| pts[k].torus().unwrap().max_dist(pts[k + c.q as usize].torus().unwrap()))
                        .collect();
                    if dists.iter().any(|d| *d != dists[0]) {
                        failures.push(format!("{name}: distance varies in k at q={}", c.q));
                    }
                    certs.push((sys.clone(), c.clone()));
                }
            }
        }
    }
    (certs, failures)
}

#[test]
fn criterion_1_shift_isometry_repetition() {
    let t0 = Instant::now();
    let (certs, failures) = criterion1_certificates();
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = failures.is_empty() && certs.len() == 6 * 100 * 30 && elapsed < 10.0;
    verdict(
        "1",
        pass,
        format!("{} certificates, {} failures, {elapsed:.2}s (limit 10s)", certs.len(), failures.len()),
    );
    assert!(failures.is_empty(), "{:?}", &failures[..failures.len().min(5)]);
    assert_eq!(certs.len(), 18_000);
    assert!(elapsed < 10.0);
}

#[test]
fn criterion_2_skew_shift_dichotomy() {
    let t0 = Instant::now();
    let golden = SystemSpec::SkewShift { alpha: AlphaPreset::Golden.value() };
    let prp = estimate_prp_fraction(&golden, 0.05, 1.0, 2000, 500, 77).unwrap();
    let a_ok = prp.fraction == 0.0 && prp.n_samples == 500;

    let alpha = AlphaPreset::Liouville10.value();
    let cf = ContinuedFraction::expand_trusted(alpha, 64);
    let sys = SystemSpec::SkewShift { alpha };
    let mut constructed = 0;
    let mut b_fail = Vec::new();
    let mut c_fail = Vec::new();
    for eps in [0.3, 0.1, 0.03] {
        for i in 0..200u64 {
            let w1 = FixedPointFrac::from_raw(sample_rng(91, i).random());
            match skewshift_constructive_q(alpha, w1, eps, 1.0, &cf) {
                Ok(c) => {
                    constructed += 1;
                    if !verify_certificate_against_definition(&c.certificate, &sys) {
                        b_fail.push(format!("ε={eps}, ω₁={w1}: q̃={} did not verify", c.q_tilde));
                    }
                    match badly_approximable_obstruction(alpha, eps, &c.certificate) {
                        Ok(rep) => {
                            let bare = c.q_tilde as f64 * alpha.mul_int(2 * c.q_tilde as i128).norm().to_f64();
                            if !(rep.q_times_step < 2.0 * eps && bare < 2.0 * eps) {
                                c_fail.push(format!("ε={eps}: q⟨2qα⟩ = {bare}"));
                            }
                        }
                        Err(e) => c_fail.push(format!("ε={eps}: {e}")),
                    }
                }
                Err(e) => b_fail.push(format!("ε={eps}, ω₁={w1}: {e}")),
            }
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = a_ok && b_fail.is_empty() && c_fail.is_empty() && constructed == 600 && elapsed < 60.0;
    verdict(
        "2",
        pass,
        format!(
            "(a) golden fraction {} of {}; (b) {constructed}/600 constructed, {} failures; (c) {} failures; {elapsed:.2}s (limit 60s)",
            prp.fraction,
            prp.n_samples,
            b_fail.len(),
            c_fail.len()
        ),
    );
    assert!(a_ok, "{prp:?}");
    assert!(b_fail.is_empty(), "{:?}", &b_fail[..b_fail.len().min(5)]);
    assert!(c_fail.is_empty(), "{:?}", &c_fail[..c_fail.len().min(5)]);
    assert!(elapsed < 60.0);
}

fn trig3(d: usize) -> SamplingFunction {
    let k = |a: i64, b: i64| if d == 1 { vec![a] } else { vec![a, b] };
    SamplingFunction::TrigPoly {
        modes: vec![
            Mode { k: k(1, 0), amplitude: 1.0, phase: 0.0 },
            Mode { k: k(2, 1), amplitude: 0.5, phase: 0.7 },
            Mode { k: k(-3, 2), amplitude: 0.25, phase: 2.1 },
        ],
    }
}

#[test]
fn criterion_3_gordon_defect_mechanism() {
    let t0 = Instant::now();
    let (certs, _) = criterion1_certificates();
    let mut triples = 0u64;
    let mut violations = Vec::new();
    // One certificate per (system, q, ω) is enough; the grid repeats many.
    let mut seen = std::collections::HashSet::new();
    for (sys, cert) in certs.iter().filter(|(_, c)| c.r == 2.0) {
        let key = (format!("{sys:?}"), cert.q, format!("{:?}", cert.omega));
        if !seen.insert(key) {
            continue;
        }
        let q = cert.q as i64;
        for f in [SamplingFunction::cosine(sys.dim()), trig3(sys.dim())] {
            let w = sample_potential(sys, &f, 1.0, &cert.omega, 1 - q, 2 * q).unwrap();
            let g = gordon_gamma(&w, cert.q).unwrap();
            let b = modulus_bound(&f, cert.max_dist).unwrap();
            triples += 1;
            if g > b {
                violations.push(format!("q={} γ={g} > bound {b}", cert.q));
            }
        }
    }
    let a_ok = violations.is_empty() && triples >= 1000;

    let alpha = AlphaPreset::Liouville10.value();
    let sys = SystemSpec::shift1(alpha);
    let qs: Vec<u64> = ContinuedFraction::expand_trusted(alpha, 64).denominators().into_iter().take(4).map(|q| q as u64).collect();
    let q_top = *qs.last().unwrap() as i64;
    let w = sample_potential(&sys, &SamplingFunction::cosine(1), 1.0, &Point::Torus(TorusPoint::from_f64s(&[0.2])), 1 - q_top, 2 * q_top)
        .unwrap();
    let series: Vec<f64> = qs.iter().map(|&q| gordon_gamma(&w, q).unwrap().ln() + q as f64 * 2f64.ln()).collect();
    let b_ok = series.windows(2).all(|s| s[1] < s[0]);
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = a_ok && b_ok && elapsed < 30.0;
    verdict(
        "3",
        pass,
        format!(
            "(a) {triples} triples, {} violations; (b) q_k = {qs:?}, log γ + q log 2 = {series:.3?} {}; {elapsed:.2}s (limit 30s)",
            violations.len(),
            if b_ok { "decreasing" } else { "NOT decreasing" }
        ),
    );
    assert!(a_ok, "{:?}", &violations[..violations.len().min(5)]);
    assert!(b_ok, "log γ(q_k) + q_k log 2 over {qs:?}: {series:?}");
    assert!(elapsed < 30.0);
}

#[test]
fn criterion_4_coupling_invariance() {
    let mut rng = sample_rng(4, 0);
    let mut worst = 0.0f64;
    let mut zero_exact = true;
    let mut cases = 0;
    for (_, sys) in shift_systems() {
        for f in [SamplingFunction::cosine(sys.dim()), trig3(sys.dim())] {
            let omega = sys.sample_uniform(&mut rng);
            let q_list = [3u64, 8, 13, 29, 100];
            let base = sample_potential(&sys, &f, 1.0, &omega, -99, 200).unwrap();
            let mut lambdas: Vec<f64> = (0..40).map(|_| rng.random_range(-1e3..=1e3)).collect();
            lambdas.push(0.0);
            for lam in lambdas {
                // Independent path: values scaled before the defect is taken.
                let scaled = PotentialWindow::from_values(base.n_min, base.values().iter().map(|v| lam * v).collect());
                for &q in &q_list {
                    let g1 = gordon_gamma(&base, q).unwrap();
                    let g = gordon_gamma(&base.with_lambda(lam), q).unwrap();
                    let g_scaled = gordon_gamma(&scaled, q).unwrap();
                    cases += 1;
                    if lam == 0.0 {
                        zero_exact &= g == 0.0 && g_scaled == 0.0;
                        continue;
                    }
                    let target = lam.abs() * g1;
                    for got in [g, g_scaled] {
                        worst = worst.max((got - target).abs() / target);
                    }
                }
            }
        }
    }
    let pass = worst <= 1e-12 && zero_exact;
    verdict("4", pass, format!("{cases} cases, worst relative error {worst:.2e} (limit 1e-12), λ=0 exact: {zero_exact}"));
    assert!(worst <= 1e-12);
    assert!(zero_exact);
}

#[test]
fn criterion_5_three_block_gordon_inequality() {
    let t0 = Instant::now();
    let mut violations = 0;
    let mut min_ratio = f64::INFINITY;
    let mut worst_drift = 0.0f64;
    for i in 0..10_000u64 {
        let mut rng = sample_rng(55, i);
        let q = rng.random_range(1..=20i64);
        let period: Vec<f64> = (0..q).map(|_| rng.random_range(-4.0..=4.0)).collect();
        let energy = rng.random_range(-6.0..=6.0);
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let vals = (1 - q..=2 * q).map(|n| period[n.rem_euclid(q) as usize]).collect();
        let w = PotentialWindow::from_values(1 - q, vals);
        let rep = gordon_three_block_check(&w, energy, q as u64, [theta.cos(), theta.sin()]).unwrap();
        min_ratio = min_ratio.min(rep.min_ratio);
        if rep.min_ratio < 0.5 {
            violations += 1;
        }
        if i < 200 {
            let long = PotentialWindow::from_values(1, (0..1000).map(|n| period[(n % q) as usize]).collect());
            worst_drift = worst_drift.max(transfer_block(&long, energy, 1, 1000).unwrap().det_drift());
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = violations == 0 && worst_drift <= 1e-10 && elapsed < 20.0;
    verdict(
        "5",
        pass,
        format!(
            "10000 instances, {violations} violations, min ratio {min_ratio:.4}, worst det drift over 1000 factors {worst_drift:.2e}; {elapsed:.2}s (limit 20s)"
        ),
    );
    assert_eq!(violations, 0);
    assert!(worst_drift <= 1e-10);
    assert!(elapsed < 20.0);
}

#[test]
fn criterion_6_piecewise_constant_contrast() {
    let alpha = AlphaPreset::Golden.value();
    let sys = SystemSpec::shift1(alpha);
    let coding = SamplingFunction::PiecewiseConstant { breakpoints: vec![0.5], values: vec![1.0, 0.0] };
    let gap = 1.0;
    let omega = Point::Torus(TorusPoint::from_f64s(&[0.1]));
    let w = sample_potential(&sys, &coding, 1.0, &omega, 1 - 10_000, 20_000).unwrap();
    let below: Vec<u64> = (1..=10_000).filter(|&q| gordon_gamma(&w, q).unwrap() < gap).collect();
    let entries = (1..=10_000u64).map(|q| ergolab::potentials::GordonEntry { q, gamma: gordon_gamma(&w, q).unwrap() }).collect();
    let profile = ergolab::potentials::profile_from_entries(entries, &[1.0, 1.5, 2.0]);
    let coding_ok = below.is_empty() && profile.verdict == GordonVerdict::NoDecayAtHorizon;

    // Continuous contrast: γ(q_k)/⟨q_kα⟩ pinned to [π, 2π] at the convergents q_k ≥ 5.
    let qs: Vec<u64> = ContinuedFraction::expand_trusted(alpha, 64)
        .denominators()
        .into_iter()
        .filter(|&q| (5..=10_000).contains(&q))
        .map(|q| q as u64)
        .collect();
    let wc = sample_potential(&sys, &SamplingFunction::cosine(1), 1.0, &omega, 1 - 10_000, 20_000).unwrap();
    let ratios: Vec<f64> = qs
        .iter()
        .map(|&q| gordon_gamma(&wc, q).unwrap() / alpha.mul_int(q as i128).norm().to_f64())
        .collect();
    use std::f64::consts::PI;
    let cos_ok = ratios.iter().all(|r| (PI..=2.0 * PI * (1.0 + 1e-9)).contains(r));
    let pass = coding_ok && cos_ok;
    verdict(
        "6",
        pass,
        format!(
            "coding: {} of 10000 q below the gap, verdict {:?}; cosine: γ(q_k)/⟨q_kα⟩ in [{:.4}, {:.4}] over {} convergents",
            below.len(),
            profile.verdict,
            ratios.iter().copied().fold(f64::INFINITY, f64::min),
            ratios.iter().copied().fold(0.0, f64::max),
            ratios.len()
        ),
    );
    assert!(coding_ok, "{:?}", &below[..below.len().min(10)]);
    assert!(cos_ok, "{ratios:?}");
}

fn fibonacci(n: u64) -> bool {
    let (mut a, mut b) = (1u64, 1u64);
    while b < n {
        (a, b) = (b, a + b);
    }
    b == n
}

#[test]
fn criterion_7_veech_towers() {
    let t0 = Instant::now();
    let golden = Iet::rotation(AlphaPreset::Golden.value().to_f64()).unwrap();
    let (a_ok, a_detail) = match veech_tower_search(&golden, 0.3, 2000) {
        Ok(t) => {
            let ok = fibonacci(t.q) && t.coverage > 0.7 && t.return_overlap > 0.7 * t.len();
            (ok, format!("tower q={} coverage {:.4} overlap ratio {:.4}", t.q, t.coverage, t.return_overlap / t.len()))
        }
        Err(miss) => (
            false,
            match miss.best {
                Some(b) => format!(
                    "no tower up to q=2000; best q={} coverage {:.4} overlap ratio {:.4}",
                    b.q,
                    b.coverage,
                    b.return_overlap / b.len()
                ),
                None => "no candidate".into(),
            },
        ),
    };
    let mut found = 0;
    let mut misses = Vec::new();
    for seed in 0..10u64 {
        let iet = ergolab::cli::random_iet(3, &mut sample_rng(seed, 0));
        match veech_tower_search(&iet, 0.5, 500) {
            Ok(_) => found += 1,
            Err(m) => misses.push(format!("seed {seed}: {:?}", m.best)),
        }
    }
    for m in &misses {
        println!("  random 3-IET without tower: {m}");
    }
    let b_ok = found >= 8;
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = a_ok && b_ok && elapsed < 60.0;
    verdict("7", pass, format!("(a) golden ε=0.3: {a_detail}; (b) random 3-IETs: {found}/10 towers; {elapsed:.2}s (limit 60s)"));
    assert!(a_ok, "{a_detail}");
    assert!(b_ok);
    assert!(elapsed < 60.0);
}

#[test]
fn criterion_8_spectral_sanity() {
    use std::f64::consts::PI;
    let n = 100;
    let free = spectrum_of(&vec![0.0; n], false).unwrap();
    let mut exact: Vec<f64> = (1..=n).map(|k| 2.0 * (k as f64 * PI / (n + 1) as f64).cos()).collect();
    exact.sort_by(f64::total_cmp);
    let free_err = free.eigenvalues.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let mut interlace_fail = 0;
    let mut sturm_err = 0.0f64;
    for i in 0..100u64 {
        let mut rng = sample_rng(88, i);
        let v: Vec<f64> = (0..51).map(|_| rng.random_range(-3.0..3.0)).collect();
        let small = spectrum_of(&v[..50], false).unwrap().eigenvalues;
        let big = spectrum_of(&v, false).unwrap().eigenvalues;
        let tol = 1e-12;
        if !(0..50).all(|k| big[k] <= small[k] + tol && small[k] <= big[k + 1] + tol) {
            interlace_fail += 1;
        }
        for (k, ev) in small.iter().enumerate() {
            sturm_err = sturm_err.max((ev - sturm_eigenvalue(&v[..50], k)).abs());
        }
    }
    let pass = free_err <= 1e-10 && interlace_fail == 0 && sturm_err <= 1e-8;
    verdict(
        "8",
        pass,
        format!("free N=100 error {free_err:.2e}; interlacing failures {interlace_fail}/100; Sturm agreement {sturm_err:.2e}"),
    );
    assert!(free_err <= 1e-10);
    assert_eq!(interlace_fail, 0);
    assert!(sturm_err <= 1e-8);
}

#[test]
fn criterion_9_determinism_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_ergolab");
    let recipes = concat!(env!("CARGO_MANIFEST_DIR"), "/recipes");
    let stochastic = ["c9_prp_shift.toml", "c9_repeat_random.toml", "c9_construct_random.toml", "c9_veech_random.toml", "c9_transfer_random.toml"];
    let mut mismatches = Vec::new();
    for recipe in stochastic {
        let mut outputs = Vec::new();
        for threads in [1usize, 2, 4] {
            let out = dir.path().join(format!("{recipe}.{threads}.out"));
            let status = std::process::Command::new(bin)
                .args(["run", &format!("{recipes}/{recipe}"), "--threads", &threads.to_string(), "--output"])
                .arg(&out)
                .status()
                .unwrap();
            assert!(status.success(), "{recipe} with {threads} threads");
            outputs.push(std::fs::read(&out).unwrap());
        }
        if outputs.iter().any(|o| *o != outputs[0]) || outputs[0].is_empty() {
            mismatches.push(recipe);
        }
    }
    let pass = mismatches.is_empty();
    verdict("9", pass, format!("{} stochastic recipes x threads {{1,2,4}}, mismatches {mismatches:?}", stochastic.len()));
    assert!(pass);
}
