//! Command bodies. Each one computes everything first, then writes its
//! artifacts once, then reports whether every check passed.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use isofield::estimators::analyze_field;
use isofield::harmonics::{build_grid, flat_index, legendre_all, sph_harm_all, unit_vector};
use isofield::model::{kernel_reconstruct, power_spectrum_operator};
use isofield::operators::clt_covariance;
use isofield::sampler::synthesize_field;
use isofield::verify::{run_mc, theoretical, McOptions, MonteCarloReport, TheoreticalQuantities};
use isofield::{
    CoefficientSet, DMatrix, FieldRealization, FrameMode, OperatorOnH, Sampler, SpectralModel, StreamKey,
    TruncatedSpace,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, Format};
use crate::error::{CliError, EXIT_CHECK_FAILED, EXIT_OK};
use crate::report::{
    ensure_dir, to_json, unix_ms, update_run_manifest, write_text, Cell, Csv, ReportManifest,
    SCHEMA_VERSION,
};
use crate::svg::{Chart, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyKind {
    Ergodicity,
    Clt,
    Schoenberg,
}

impl VerifyKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ergodicity => "ergodicity",
            Self::Clt => "clt",
            Self::Schoenberg => "schoenberg",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

fn manifest(cfg: &ExperimentConfig, command: &str, pass: bool) -> ReportManifest {
    ReportManifest {
        config_hash: cfg.hash(),
        version: env!("CARGO_PKG_VERSION").into(),
        master_seed: cfg.mc.master_seed,
        command: command.into(),
        exit_status: if pass { EXIT_OK } else { EXIT_CHECK_FAILED },
    }
}

/// One deterministic invariant checked by `selftest`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub identity: String,
    pub observed_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &'static str, identity: String, observed_error: f64, tolerance: f64) -> Self {
        Self {
            name,
            identity,
            observed_error,
            tolerance,
            pass: observed_error <= tolerance,
        }
    }
}

#[derive(Serialize)]
struct SelftestReport<'a> {
    schema_version: u32,
    manifest: ReportManifest,
    checks: &'a [Check],
    pass: bool,
}

/// Seeded unit vector from keyed normal deviates.
fn seeded_point(seed: u64, index: u64) -> [f64; 3] {
    let g: Vec<f64> = (1..=3)
        .map(|j| StreamKey { master_seed: seed, replicate: index, ell: 0, m: 0, j }.normal())
        .collect();
    let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
    [g[0] / n, g[1] / n, g[2] / n]
}

fn seeded_matrix(seed: u64, index: u64, d: usize) -> Vec<f64> {
    (0..d * d)
        .map(|k| {
            StreamKey { master_seed: seed, replicate: index, ell: 1, m: 0, j: k + 1 }.normal()
        })
        .collect()
}

fn addition_formula_error(l_max: usize, pairs: usize, seed: u64) -> Result<f64, CliError> {
    let mut worst = 0.0f64;
    for k in 0..pairs as u64 {
        let x = seeded_point(seed, 2 * k);
        let y = seeded_point(seed, 2 * k + 1);
        let t = (x[0] * y[0] + x[1] * y[1] + x[2] * y[2]).clamp(-1.0, 1.0);
        let yx = sph_harm_all(l_max, &x)?;
        let yy = sph_harm_all(l_max, &y)?;
        let p = legendre_all(l_max, t)?;
        for ell in 0..=l_max {
            let block = ell * ell..(ell + 1) * (ell + 1);
            let lhs: f64 = yx[block.clone()].iter().zip(&yy[block]).map(|(a, b)| a * b).sum();
            worst = worst.max((lhs - (2 * ell + 1) as f64 / (4.0 * PI) * p.get(ell)).abs());
        }
    }
    Ok(worst)
}

/// Synthesizes seeded coefficients pointwise on a grid of band `grid_band`
/// and analyzes them back. Coefficients the grid cannot resolve count as
/// recovered zeros, so an undersized grid shows up as a large error.
fn round_trip_error(band: usize, dim: usize, grid_band: usize, seed: u64) -> Result<f64, CliError> {
    let flat = SpectralModel::from_table(vec![vec![1.0; dim]; band + 1], FrameMode::Canonical)?;
    let coeffs = Sampler::new(&flat, seed).draw(0);
    let grid = Arc::new(build_grid(grid_band)?);
    let mut values = Vec::with_capacity(grid.len() * dim);
    for x in grid.nodes() {
        let y = sph_harm_all(band, x)?;
        for j in 0..dim {
            values.push(
                y.iter()
                    .zip(coeffs.as_slice().chunks_exact(dim))
                    .map(|(y, a)| y * a[j])
                    .sum(),
            );
        }
    }
    let field = FieldRealization::new(grid, dim, values)?;
    let back = analyze_field(&field, band.min(grid_band))?;
    let mut worst = 0.0f64;
    for ell in 0..=band {
        for m in -(ell as i64)..=ell as i64 {
            for j in 0..dim {
                let got = if ell <= back.band_limit() { back.get(ell, m)[j] } else { 0.0 };
                worst = worst.max((got - coeffs.get(ell, m)[j]).abs());
            }
        }
    }
    Ok(worst)
}

fn grid_orthonormality_error(band: usize) -> Result<f64, CliError> {
    let grid = build_grid(band)?;
    let tables = grid
        .nodes()
        .iter()
        .map(|x| sph_harm_all(band, x))
        .collect::<Result<Vec<_>, _>>()?;
    let n = (band + 1) * (band + 1);
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in 0..=a {
            let s: Vec<f64> = tables.iter().map(|t| t[a] * t[b]).collect();
            let expected = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((grid.integrate(&s)? - expected).abs());
        }
    }
    Ok(worst)
}

fn schatten_checks(seed: u64) -> Result<(f64, f64), CliError> {
    let d = 5;
    let space = TruncatedSpace::new(d)?;
    let mut ordering = 0.0f64;
    let mut trace_gap = 0.0f64;
    for k in 0..50 {
        let raw = seeded_matrix(seed, k, d);
        let a = OperatorOnH::new(space.clone(), DMatrix::from_row_slice(d, d, &raw))?;
        let s1 = a.schatten_norm(1.0)?;
        let s2 = a.schatten_norm(2.0)?;
        let sinf = a.schatten_norm(f64::INFINITY)?;
        ordering = ordering.max(sinf - s2).max(s2 - s1);
        let psd = a.adjoint().entries() * a.entries();
        let p = OperatorOnH::new_self_adjoint(space.clone(), psd)?;
        trace_gap = trace_gap.max((p.trace() - p.schatten_norm(1.0)?).abs() / (1.0 + p.trace()));
    }
    Ok((ordering.max(0.0), trace_gap))
}

pub fn selftest(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let st = &cfg.selftest;
    let mut checks = Vec::new();

    checks.push(Check::new(
        "addition_formula",
        format!(
            "sum_m Y_lm(x) Y_lm(y) = (2l+1)/(4pi) P_l(<x,y>) for l <= {}, {} pairs",
            st.addition_band_limit, st.addition_pairs
        ),
        addition_formula_error(st.addition_band_limit, st.addition_pairs, st.seed)?,
        1e-10,
    ));

    let p = legendre_all(st.legendre_max_degree, 1.0)?;
    let at_one = (0..=st.legendre_max_degree)
        .map(|l| (p.get(l) - 1.0).abs())
        .fold(0.0, f64::max);
    checks.push(Check::new(
        "legendre_at_one",
        format!("P_l(1) = 1 for l <= {}", st.legendre_max_degree),
        at_one,
        1e-13,
    ));

    let grid_band = st.grid_band_limit.unwrap_or(st.round_trip_band_limit);
    checks.push(Check::new(
        "round_trip",
        format!(
            "analyze(synthesize(a)) = a at L = {}, d = {} on a grid of band {grid_band}",
            st.round_trip_band_limit, st.round_trip_dim
        ),
        round_trip_error(st.round_trip_band_limit, st.round_trip_dim, grid_band, st.seed)?,
        1e-10,
    ));

    let grid = build_grid(grid_band)?;
    checks.push(Check::new(
        "quadrature_weights",
        format!("sum of grid weights = 4pi at band {grid_band}"),
        (grid.weights().iter().sum::<f64>() - 4.0 * PI).abs(),
        1e-12,
    ));

    checks.push(Check::new(
        "grid_orthonormality",
        "quadrature Gram matrix of Y_lm = I at band 8".into(),
        grid_orthonormality_error(8)?,
        1e-12,
    ));

    let (ordering, trace_gap) = schatten_checks(st.seed)?;
    checks.push(Check::new(
        "schatten_ordering",
        "||A||_inf <= ||A||_2 <= ||A||_1 on 50 seeded operators".into(),
        ordering,
        1e-12,
    ));
    checks.push(Check::new(
        "psd_trace",
        "Tr A = ||A||_1 for A = B*B (relative)".into(),
        trace_gap,
        1e-12,
    ));

    let space = TruncatedSpace::new(2)?;
    let eye = DMatrix::identity(2, 2);
    let cov = clt_covariance(1, &space, &[1.0, 0.5], &eye)?;
    checks.push(Check::new(
        "clt_covariance_norms",
        "lambda = (1, 0.5): trace = 3.5, HS^2 = 5.25".into(),
        (cov.trace() - 3.5).abs().max((cov.hs_norm_sq() - 5.25).abs()),
        1e-12,
    ));

    let pass = checks.iter().all(|c| c.pass);
    for c in &checks {
        if c.pass {
            println!("PASS {}: {:e} <= {:e}", c.name, c.observed_error, c.tolerance);
        } else {
            eprintln!(
                "FAIL {}: {} violated, observed error {:e} > {:e}",
                c.name, c.identity, c.observed_error, c.tolerance
            );
        }
    }

    let dir = &cfg.output.directory;
    ensure_dir(dir)?;
    let mut files = Vec::new();
    if cfg.output.formats.contains(&Format::Json) {
        let report = SelftestReport {
            schema_version: SCHEMA_VERSION,
            manifest: manifest(cfg, "selftest", pass),
            checks: &checks,
            pass,
        };
        files.push(write_text(dir, "selftest.json", &to_json(&report))?);
    }
    Ok(Outcome { pass, files })
}

pub fn realization_csv(field: &FieldRealization) -> String {
    let d = field.dim();
    let mut header = vec!["node_index".to_string(), "theta".into(), "phi".into()];
    header.extend((1..=d).map(|j| format!("v_{j}")));
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&refs);
    let grid = field.grid();
    for node in 0..grid.len() {
        let (theta, phi) = grid.angles(node);
        let mut row: Vec<Cell> = vec![node.into(), theta.into(), phi.into()];
        row.extend(field.value(node).iter().map(|&v| Cell::Float(v)));
        csv.row(&row);
    }
    csv.as_str().to_owned()
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let model = cfg.build_model()?;
    let coeffs: CoefficientSet = Sampler::new(&model, cfg.mc.master_seed).draw(0);
    let grid = Arc::new(build_grid(model.band_limit())?);
    let field = synthesize_field(&coeffs, grid)?;

    let dir = &cfg.output.directory;
    ensure_dir(dir)?;
    let mut files = vec![write_text(dir, "realization.csv", &realization_csv(&field))?];
    if cfg.output.formats.contains(&Format::Json) {
        files.push(write_text(dir, "model.json", &to_json(&model.export()))?);
    }
    Ok(Outcome { pass: true, files })
}

#[derive(Debug, Clone, Serialize)]
pub struct SchoenbergRow {
    pub t: f64,
    pub trace_rt: f64,
    pub nuclear_rt: f64,
    pub tail_bound: f64,
    /// `‖R_t − R_t^{(L_trunc)}‖₁`
    pub truncation_error: f64,
    /// `‖R_t − Σ_l F_l Σ_m Y_lm(x) Y_lm(y)‖₁`
    pub exactness_error: f64,
    pub pass: bool,
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    schema_version: u32,
    manifest: ReportManifest,
    config: &'a ExperimentConfig,
    theoretical: &'a [TheoreticalQuantities],
    montecarlo: &'a [MonteCarloReport],
    schoenberg: &'a [SchoenbergRow],
    pass: bool,
}

/// Covariance `E[T(x) ⊗ T(y)]` summed from pointwise harmonics, independent
/// of the Legendre route used by `kernel_reconstruct`.
fn covariance_by_harmonics(model: &SpectralModel, t: f64) -> Result<OperatorOnH, CliError> {
    let l = model.band_limit();
    let yx = sph_harm_all(l, &unit_vector(0.0, 0.0))?;
    let yy = sph_harm_all(l, &unit_vector(t.clamp(-1.0, 1.0).acos(), 0.9))?;
    let mut acc = OperatorOnH::zeros(model.space().clone());
    for ell in 0..=l {
        let range = flat_index(ell, -(ell as i64))..=flat_index(ell, ell as i64);
        let k: f64 = yx[range.clone()].iter().zip(&yy[range]).map(|(a, b)| a * b).sum();
        acc = acc.add_scaled(&power_spectrum_operator(model, ell)?, k)?;
    }
    Ok(acc)
}

pub fn t_grid(points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![1.0],
        n => (0..n)
            .map(|k| if k == n - 1 { 1.0 } else { -1.0 + 2.0 * k as f64 / (n - 1) as f64 })
            .collect(),
    }
}

pub fn schoenberg_rows(cfg: &ExperimentConfig, model: &SpectralModel) -> Result<Vec<SchoenbergRow>, CliError> {
    let l_trunc = cfg.l_trunc();
    if l_trunc > model.band_limit() {
        return Err(CliError::Usage(format!(
            "schoenberg.l_trunc {l_trunc} exceeds L_max {}",
            model.band_limit()
        )));
    }
    if cfg.schoenberg.t_points < 2 {
        return Err(CliError::Usage("schoenberg.t_points must be >= 2".into()));
    }
    let tail = model.tail_bound(l_trunc);
    let r1 = kernel_reconstruct(model, 1.0, model.band_limit())?.schatten_norm(1.0)?;
    t_grid(cfg.schoenberg.t_points)
        .into_iter()
        .map(|t| {
            let full = kernel_reconstruct(model, t, model.band_limit())?;
            let part = kernel_reconstruct(model, t, l_trunc)?;
            let nuclear = full.schatten_norm(1.0)?;
            let truncation_error = full.sub(&part)?.schatten_norm(1.0)?;
            let exactness_error = full.sub(&covariance_by_harmonics(model, t)?)?.schatten_norm(1.0)?;
            let pass = exactness_error <= 1e-12
                && truncation_error <= tail * (1.0 + 1e-12) + 1e-15
                && nuclear <= r1 * (1.0 + 1e-12);
            Ok(SchoenbergRow {
                t,
                trace_rt: full.trace(),
                nuclear_rt: nuclear,
                tail_bound: tail,
                truncation_error,
                exactness_error,
                pass,
            })
        })
        .collect()
}

fn ergodicity_pass(r: &MonteCarloReport) -> bool {
    r.pass.mse
}

fn clt_pass(r: &MonteCarloReport) -> bool {
    r.pass.cum4 && r.pass.ks && r.pass.d2
}

fn ergodicity_outputs(theory: &[TheoreticalQuantities], mc: &[MonteCarloReport]) -> (String, String) {
    let mut csv = Csv::new(&["ell", "theo_mse", "emp_mse", "mc_se", "replicates", "pass"]);
    for (t, r) in theory.iter().zip(mc) {
        csv.row(&[
            r.ell.into(),
            t.mse.into(),
            r.emp_mse.value.into(),
            r.emp_mse.se.into(),
            r.replicates.into(),
            ergodicity_pass(r).into(),
        ]);
    }
    let chart = Chart {
        title: "Sample power spectrum MSE".into(),
        x_label: "degree l".into(),
        y_label: "E ||F_hat - F||_2^2".into(),
        log_x: true,
        log_y: true,
        series: vec![
            Series::new("theoretical", "#1f77b4", theory.iter().map(|t| (t.ell as f64, t.mse)).collect()),
            Series::new("empirical", "#d62728", mc.iter().map(|r| (r.ell as f64, r.emp_mse.value)).collect())
                .dashed(),
        ],
    };
    (csv.as_str().to_owned(), chart.render())
}

fn clt_outputs(theory: &[TheoreticalQuantities], mc: &[MonteCarloReport]) -> (String, String) {
    let mut csv = Csv::new(&[
        "ell",
        "d2_bound_exact",
        "d2_bound_simplified",
        "d2_proxy",
        "tv_bound",
        "ks_emp",
        "cum4_theo",
        "cum4_emp",
        "cum4_se",
        "pass",
    ]);
    for (t, r) in theory.iter().zip(mc) {
        csv.row(&[
            r.ell.into(),
            t.d2_bound_exact.into(),
            t.d2_bound_simplified.into(),
            r.d2_proxy.value.into(),
            t.tv_bound.into(),
            r.ks_distance.into(),
            t.cum4_reduced.into(),
            r.emp_cum4.value.into(),
            r.emp_cum4.se.into(),
            clt_pass(r).into(),
        ]);
    }
    let pts = |f: &dyn Fn(&TheoreticalQuantities) -> f64| -> Vec<(f64, f64)> {
        theory.iter().map(|t| (t.ell as f64, f(t))).collect()
    };
    let chart = Chart {
        title: "CLT bounds and lower proxies".into(),
        x_label: "degree l".into(),
        y_label: "distance".into(),
        log_x: true,
        log_y: true,
        series: vec![
            Series::new("d2 bound (norms)", "#1f77b4", pts(&|t| t.d2_bound_exact)),
            Series::new("d2 bound (simple)", "#17becf", pts(&|t| t.d2_bound_simplified)).dashed(),
            Series::new("TV bound", "#2ca02c", pts(&|t| t.tv_bound)),
            Series::new("d2 proxy", "#d62728", mc.iter().map(|r| (r.ell as f64, r.d2_proxy.value)).collect()),
            Series::new("KS distance", "#ff7f0e", mc.iter().map(|r| (r.ell as f64, r.ks_distance)).collect()),
        ],
    };
    (csv.as_str().to_owned(), chart.render())
}

fn schoenberg_outputs(rows: &[SchoenbergRow]) -> (String, String) {
    let mut csv = Csv::new(&["t", "trace_Rt", "nuclear_Rt", "tail_bound", "pass"]);
    for r in rows {
        csv.row(&[r.t.into(), r.trace_rt.into(), r.nuclear_rt.into(), r.tail_bound.into(), r.pass.into()]);
    }
    let chart = Chart {
        title: "Covariance kernel".into(),
        x_label: "t = <x, y>".into(),
        y_label: "value".into(),
        log_x: false,
        log_y: false,
        series: vec![
            Series::new("||R_t||_1", "#1f77b4", rows.iter().map(|r| (r.t, r.nuclear_rt)).collect()),
            Series::new("Tr R_t", "#d62728", rows.iter().map(|r| (r.t, r.trace_rt)).collect()).dashed(),
        ],
    };
    (csv.as_str().to_owned(), chart.render())
}

pub fn verify(cfg: &ExperimentConfig, kind: VerifyKind) -> Result<Outcome, CliError> {
    let model = cfg.build_model()?;
    let mut theory = Vec::new();
    let mut mc = Vec::new();
    let mut schoenberg = Vec::new();
    let pass;
    let (csv, svg) = match kind {
        VerifyKind::Ergodicity | VerifyKind::Clt => {
            cfg.validate_mc()?;
            theory = cfg
                .mc
                .ells
                .iter()
                .map(|&l| theoretical(&model, l))
                .collect::<Result<_, _>>()?;
            let options = McOptions {
                probes: cfg.mc.probes,
                sampler_lambda_scale: cfg.mc.sampler_lambda_scale,
                ..McOptions::new(cfg.mc.replicates, cfg.mc.master_seed)
            };
            mc = run_mc(&model, &cfg.mc.ells, &options)?;
            if kind == VerifyKind::Ergodicity {
                pass = mc.iter().all(ergodicity_pass);
                ergodicity_outputs(&theory, &mc)
            } else {
                pass = mc.iter().all(clt_pass);
                clt_outputs(&theory, &mc)
            }
        }
        VerifyKind::Schoenberg => {
            schoenberg = schoenberg_rows(cfg, &model)?;
            pass = schoenberg.iter().all(|r| r.pass);
            schoenberg_outputs(&schoenberg)
        }
    };

    let name = kind.name();
    let dir = &cfg.output.directory;
    ensure_dir(dir)?;
    let mut files = Vec::new();
    let formats = &cfg.output.formats;
    if formats.contains(&Format::Csv) {
        files.push(write_text(dir, &format!("{name}.csv"), &csv)?);
    }
    if formats.contains(&Format::Json) {
        let report = VerifyReport {
            schema_version: SCHEMA_VERSION,
            manifest: manifest(cfg, &format!("verify {name}"), pass),
            config: cfg,
            theoretical: &theory,
            montecarlo: &mc,
            schoenberg: &schoenberg,
            pass,
        };
        files.push(write_text(dir, &format!("{name}_report.json"), &to_json(&report))?);
    }
    if formats.contains(&Format::Svg) {
        files.push(write_text(dir, &format!("{name}.svg"), &svg)?);
    }
    Ok(Outcome { pass, files })
}

/// Runs a command and records it in the run manifest of the output directory.
pub fn execute(
    cfg: &ExperimentConfig,
    command: &str,
    body: impl FnOnce(&ExperimentConfig) -> Result<Outcome, CliError>,
) -> Result<Outcome, CliError> {
    let started = unix_ms();
    let outcome = body(cfg)?;
    update_run_manifest(&cfg.output.directory, &manifest(cfg, command, outcome.pass), started)?;
    Ok(outcome)
}
