//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Expected values come from oracles written
//! here, independently of the library code paths they check.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use isofield::estimators::analyze_field;
use isofield::harmonics::{build_grid, sph_harm_all, unit_vector};
use isofield::model::{kernel_reconstruct, make_powerlaw_model, power_spectrum_operator, SpectrumNorms};
use isofield::operators::clt_covariance;
use isofield::sampler::synthesize_field;
use isofield::verify::{d2_bound_exact, d2_bound_simplified, run_mc, McOptions};
use isofield::{CoefficientSet, DMatrix, FrameMode, SpectralModel, TruncatedSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SE_K: f64 = 4.0;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

/// Default experiment: A = 1, alpha = 3, beta = 2, d = 6.
fn powerlaw(l_max: usize) -> SpectralModel {
    make_powerlaw_model(l_max, 6, 1.0, 3.0, 2.0, FrameMode::Canonical).unwrap()
}

fn powerlaw_lambda(ell: usize) -> Vec<f64> {
    (1..=6)
        .map(|j| (1.0 + ell as f64).powf(-3.0) * (1.0 + j as f64).powf(-2.0))
        .collect()
}

/// `(Σλ², Σλ⁴, Σλ)`.
fn oracle_norms(lambda: &[f64]) -> (f64, f64, f64) {
    let s2 = lambda.iter().map(|x| x * x).sum();
    let s4 = lambda.iter().map(|x| x * x * x * x).sum();
    let c = lambda.iter().sum();
    (s2, s4, c)
}

fn oracle_legendre(l_max: usize, z: f64) -> Vec<f64> {
    let mut p = vec![1.0; l_max + 1];
    if l_max >= 1 {
        p[1] = z;
    }
    for n in 2..=l_max {
        p[n] = ((2 * n - 1) as f64 * z * p[n - 1] - (n - 1) as f64 * p[n - 2]) / n as f64;
    }
    p
}

fn oracle_d2(lambda: &[f64], ell: usize) -> f64 {
    let (s2, s4, c) = oracle_norms(lambda);
    let n = s2 + c * c;
    let rho = (3.0 * s4 + s2 * s2) / (n * n);
    let r = 12.0 / (2 * ell + 1) as f64;
    let pref = (1.0 + 3f64.sqrt()) / (2.0 * 3f64.sqrt());
    pref * ((r * rho + 1.0 + 4.0 * (s4 + s2 * s2) / (n * n)) * r * rho).sqrt()
}

fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let z: f64 = rng.random_range(-1.0..=1.0);
    unit_vector(z.acos(), rng.random_range(0.0..2.0 * PI))
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let l_max = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut add_err = 0.0f64;
    for _ in 0..100 {
        let x = random_unit(&mut rng);
        let y = random_unit(&mut rng);
        let t: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let p = oracle_legendre(l_max, t.clamp(-1.0, 1.0));
        let yx = sph_harm_all(l_max, &x).unwrap();
        let yy = sph_harm_all(l_max, &y).unwrap();
        for (ell, p_ell) in p.iter().enumerate() {
            let r = ell * ell..(ell + 1) * (ell + 1);
            let lhs: f64 = yx[r.clone()].iter().zip(&yy[r]).map(|(a, b)| a * b).sum();
            add_err = add_err.max((lhs - (2 * ell + 1) as f64 / (4.0 * PI) * p_ell).abs());
        }
    }

    let (band, d) = (16, 4);
    let values: Vec<f64> = (0..(band + 1) * (band + 1) * d)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let coeffs = CoefficientSet::from_vec(band, d, values).unwrap();
    let field = synthesize_field(&coeffs, Arc::new(build_grid(band).unwrap())).unwrap();
    let back = analyze_field(&field, band).unwrap();
    let rt_err = back
        .as_slice()
        .iter()
        .zip(coeffs.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    Verdict::new(
        add_err <= 1e-10 && rt_err <= 1e-10 && elapsed < Duration::from_secs(10),
        format!("addition err {add_err:.2e}, round-trip err {rt_err:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let model = powerlaw(64);
    let ells = [4, 16, 64];
    let reports = run_mc(&model, &ells, &McOptions::new(20_000, 20_240_917)).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (ell, r) in ells.iter().zip(&reports) {
        let (s2, _, c) = oracle_norms(&powerlaw_lambda(*ell));
        let theo = (s2 + c * c) / (2 * ell + 1) as f64;
        let z = (r.emp_mse.value - theo).abs() / r.emp_mse.se;
        let ratio = r.emp_mse.value / theo;
        pass &= z <= SE_K && (ratio - 1.0).abs() <= 0.05;
        parts.push(format!("l={ell}: {z:.2} SE, ratio {ratio:.4}"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    Verdict::new(pass, format!("{}; {elapsed:.2?}", parts.join(", ")))
}

fn criterion_3() -> Verdict {
    let ell = 8;
    let model = powerlaw(ell);
    let r = &run_mc(&model, &[ell], &McOptions::new(50_000, 3)).unwrap()[0];
    let (s2, _, c) = oracle_norms(&powerlaw_lambda(ell));
    let theo = 2.0 * s2 + c * c;
    let z = (r.emp_fourth_moment.value - theo).abs() / r.emp_fourth_moment.se;
    Verdict::new(
        z <= SE_K,
        format!("E||a||^4 = {:.6e} vs {theo:.6e} ({z:.2} SE)", r.emp_fourth_moment.value),
    )
}

fn criterion_4() -> Verdict {
    let model = powerlaw(8);
    let ells = [2, 8];
    let reports = run_mc(&model, &ells, &McOptions::new(50_000, 4)).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (ell, r) in ells.iter().zip(&reports) {
        let (s2, s4, _) = oracle_norms(&powerlaw_lambda(*ell));
        let cum_theo = 12.0 / (2 * ell + 1) as f64 * s4 / (s2 * s2);
        let var_ok = (r.emp_scalar_var.value - 1.0).abs() <= 0.05;
        let cum_z = (r.emp_cum4.value - cum_theo).abs() / r.emp_cum4.se;
        let tv = (8.0 / (2 * ell + 1) as f64).sqrt();
        let ks_ok = *ell < 4 || r.ks_distance <= tv;
        pass &= var_ok && cum_z <= SE_K && ks_ok;
        parts.push(format!(
            "l={ell}: var {:.4}, cum4 {:.4} vs {cum_theo:.4} ({cum_z:.2} SE), KS {:.4}{}",
            r.emp_scalar_var.value,
            r.emp_cum4.value,
            r.ks_distance,
            if *ell >= 4 { format!(" <= {tv:.4}") } else { String::new() }
        ));
    }
    Verdict::new(pass, parts.join("; "))
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ordered = true;
    let mut oracle_gap = 0.0f64;
    let mut rank_one_gap = 0.0f64;
    for _ in 0..1000 {
        let d = rng.random_range(1..=10);
        let lambda: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..5.0)).collect();
        let ell = rng.random_range(0..=1000);
        if lambda.iter().all(|&x| x == 0.0) {
            continue;
        }
        let exact = d2_bound_exact(&SpectrumNorms::from_eigenvalues(&lambda), ell);
        ordered &= exact <= d2_bound_simplified(ell) * (1.0 + 1e-12);
        oracle_gap = oracle_gap.max((exact - oracle_d2(&lambda, ell)).abs());

        let mut one = vec![0.0; d];
        one[rng.random_range(0..d)] = rng.random_range(0.01..5.0);
        let e1 = d2_bound_exact(&SpectrumNorms::from_eigenvalues(&one), ell);
        rank_one_gap = rank_one_gap.max((e1 - d2_bound_simplified(ell)).abs());
    }

    let model = powerlaw(16);
    let ells = [4, 16];
    let reports = run_mc(&model, &ells, &McOptions::new(20_000, 55)).unwrap();
    let mut proxy_ok = true;
    let mut parts = Vec::new();
    for (ell, r) in ells.iter().zip(&reports) {
        let bound = oracle_d2(&powerlaw_lambda(*ell), *ell);
        proxy_ok &= r.d2_proxy.value <= bound;
        parts.push(format!("l={ell}: proxy {:.2e} <= {bound:.4}", r.d2_proxy.value));
    }

    let b1 = d2_bound_simplified(1);
    let b100 = d2_bound_simplified(100);
    let values_ok = (b1 - 4.1733).abs() <= 1e-3 && (b100 - 0.33708).abs() <= 1e-3;
    Verdict::new(
        ordered && oracle_gap <= 1e-12 && rank_one_gap <= 1e-12 && proxy_ok && values_ok,
        format!(
            "exact<=simplified {ordered}, rank-1 gap {rank_one_gap:.1e}, {}, l=1 {b1:.5}, l=100 {b100:.5}",
            parts.join(", ")
        ),
    )
}

fn nuclear(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().map(|v| v.abs()).sum()
}

fn criterion_6() -> Verdict {
    let model = make_powerlaw_model(64, 6, 1.0, 3.0, 2.0, FrameMode::RandomOrthogonal { seed: 6 }).unwrap();
    let l = model.band_limit();
    let l_trunc = 16;
    let tail: f64 = (l_trunc + 1..=l)
        .map(|ell| oracle_norms(model.eigenvalues(ell).unwrap()).2 * (2 * ell + 1) as f64 / (4.0 * PI))
        .sum();
    let north = sph_harm_all(l, &unit_vector(0.0, 0.0)).unwrap();
    let ops: Vec<DMatrix<f64>> = (0..=l)
        .map(|ell| power_spectrum_operator(&model, ell).unwrap().into_entries())
        .collect();
    let r1 = nuclear(kernel_reconstruct(&model, 1.0, l).unwrap().entries());
    let (mut exact_err, mut tail_ok, mut peak_ok) = (0.0f64, true, true);
    for k in 0..201 {
        let t = if k == 200 { 1.0 } else { -1.0 + k as f64 / 100.0 };
        let other = sph_harm_all(l, &unit_vector(t.acos(), 2.5)).unwrap();
        let mut by_harmonics = DMatrix::zeros(6, 6);
        for (ell, f) in ops.iter().enumerate() {
            let r = ell * ell..(ell + 1) * (ell + 1);
            let kernel: f64 = north[r.clone()].iter().zip(&other[r]).map(|(a, b)| a * b).sum();
            by_harmonics += f * kernel;
        }
        let full = kernel_reconstruct(&model, t, l).unwrap();
        let part = kernel_reconstruct(&model, t, l_trunc).unwrap();
        exact_err = exact_err.max(nuclear(&(full.entries() - by_harmonics)));
        tail_ok &= nuclear(&(full.entries() - part.entries())) <= tail * (1.0 + 1e-12);
        peak_ok &= nuclear(full.entries()) <= r1 * (1.0 + 1e-13);
    }
    let tail_matches = (model.tail_bound(l_trunc) - tail).abs() <= 1e-15 * (1.0 + tail);
    Verdict::new(
        exact_err <= 1e-12 && tail_ok && tail_matches && peak_ok,
        format!("sup exactness {exact_err:.2e}, tail dominated {tail_ok}, ||R_t||_1 <= ||R_1||_1 {peak_ok}"),
    )
}

/// Trace and squared HS norm of `Cov(vec(a aᵀ))`, `a ~ N(0, diag λ)`, by Isserlis.
fn isserlis(lambda: &[f64]) -> (f64, f64) {
    let d = lambda.len();
    let f = |i: usize, k: usize| if i == k { lambda[i] } else { 0.0 };
    let (mut tr, mut hs) = (0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            for p in 0..d {
                for q in 0..d {
                    let v = f(i, p) * f(k, q) + f(i, q) * f(k, p);
                    if (i, k) == (p, q) {
                        tr += v;
                    }
                    hs += v * v;
                }
            }
        }
    }
    (tr, hs)
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut cases: Vec<Vec<f64>> = vec![vec![1.0, 0.5]];
    for _ in 0..1000 {
        let d = rng.random_range(1..=8);
        cases.push((0..d).map(|_| rng.random_range(0.0..2.0)).collect());
    }
    for lambda in &cases {
        let d = lambda.len();
        let cov = clt_covariance(0, &TruncatedSpace::new(d).unwrap(), lambda, &DMatrix::identity(d, d)).unwrap();
        let (s2, s4, c) = oracle_norms(lambda);
        let (tr, hs) = isserlis(lambda);
        worst = worst
            .max((cov.trace() - (s2 + c * c)).abs())
            .max((cov.hs_norm_sq() - 2.0 * (s4 + s2 * s2)).abs())
            .max((cov.trace() - tr).abs())
            .max((cov.hs_norm_sq() - hs).abs());
    }
    let worked = clt_covariance(0, &TruncatedSpace::new(2).unwrap(), &[1.0, 0.5], &DMatrix::identity(2, 2)).unwrap();
    let worked_ok = (worked.trace() - 3.5).abs() <= 1e-10 && (worked.hs_norm_sq() - 5.25).abs() <= 1e-10;
    Verdict::new(
        worst <= 1e-10 && worked_ok,
        format!("max deviation {worst:.2e} over {} spectra; (1, 0.5) -> ({}, {})", cases.len(), worked.trace(), worked.hs_norm_sq()),
    )
}

fn run_cli(out: &Path, threads: usize, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_isofield"))
        .args(args)
        .args(["--seed", "424242", "--threads", &threads.to_string(), "--out"])
        .arg(out)
        .output()
        .expect("run isofield")
        .status
        .code()
        .unwrap_or(-1)
}

fn criterion_8() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let serial = tmp.path().join("serial");
    let parallel = tmp.path().join("parallel");
    let commands: [&[&str]; 4] = [
        &["verify", "ergodicity"],
        &["verify", "clt"],
        &["verify", "schoenberg"],
        &["simulate"],
    ];
    let mut codes = Vec::new();
    for cmd in commands {
        codes.push(run_cli(&serial, 1, cmd));
        codes.push(run_cli(&parallel, 8, cmd));
    }
    let mut compared = 0;
    let mut mismatched = Vec::new();
    let mut names: Vec<_> = std::fs::read_dir(&serial)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv") || n.ends_with(".json") || n.ends_with(".svg"))
        .filter(|n| n != "run_manifest.json")
        .collect();
    names.sort();
    for name in &names {
        compared += 1;
        let a = std::fs::read(serial.join(name)).unwrap();
        if std::fs::read(parallel.join(name)).ok().as_deref() != Some(&a[..]) {
            mismatched.push(name.clone());
        }
    }
    let all_zero = codes.iter().all(|&c| c == 0);
    Verdict::new(
        mismatched.is_empty() && compared >= 10 && all_zero,
        format!("{compared} artifacts compared, 1 vs 8 threads, mismatches {mismatched:?}, exit codes {codes:?}"),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Verdict);
    let criteria: [Criterion; 8] = [
        ("addition formula and transforms", criterion_1),
        ("ergodicity rate", criterion_2),
        ("fourth-moment identity", criterion_3),
        ("reduced-spectrum CLT", criterion_4),
        ("functional CLT bounds", criterion_5),
        ("Schoenberg reconstruction", criterion_6),
        ("CLT covariance identities", criterion_7),
        ("reproducibility", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {} [PRIMARY] {name}: {} ({}) [{:.2?}]",
            k + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
