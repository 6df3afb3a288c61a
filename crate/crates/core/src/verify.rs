//! Closed-form moments, cumulants and CLT bounds for the sample power
//! spectrum, and the Monte Carlo harness that checks them.
//!
//! Exact `d₂` and total-variation distances are not computable, so the harness
//! checks necessary consequences with lower proxies: the Kolmogorov–Smirnov
//! distance for total variation, and a finite dictionary of test functions
//! `h_B(A) = cos⟨A, B⟩₂` (unit Hilbert–Schmidt probes `B`, so `|h|`, `‖Dh‖` and
//! `‖D²h‖` are all at most 1) for `d₂`.

use nalgebra::DMatrix;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::StatisticScales;
use crate::model::{SpectralModel, SpectrumNorms};
use crate::operators::sym_pairs;
use crate::sampler::{keyed_rng, Sampler};
use crate::stats::{
    batch_mean, empirical_cumulant4, ks_to_standard_normal, mean, normal_from_bits,
    sample_variance, Estimate,
};

/// Seed domain of the Gaussian reference samples `Z_l`.
const DOMAIN_REFERENCE: u64 = 1;
/// Seed domain of the `d₂` probe dictionary.
const DOMAIN_PROBES: u64 = 2;

pub const DEFAULT_BATCHES: usize = 100;
pub const DEFAULT_PROBES: usize = 16;
pub const DEFAULT_SE_TOLERANCE: f64 = 4.0;
pub const MIN_REPLICATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalQuantities {
    pub ell: usize,
    /// `‖F_l‖₂²`
    pub hs_norm_sq: f64,
    /// `C_l²`
    pub trace_sq: f64,
    /// `‖F_l‖₄⁴`
    pub s4_norm4: f64,
    /// `E‖F̂_l − F_l‖₂² = (‖F‖₂² + C²)/(2l+1)`
    pub mse: f64,
    /// `E‖a_{l,m}‖⁴ = 2‖F‖₂² + C²`
    pub fourth_moment_a: f64,
    pub d2_bound_exact: f64,
    pub d2_bound_simplified: f64,
    /// `√(8/(2l+1))`
    pub tv_bound: f64,
    /// Fourth cumulant of the normalized reduced estimator.
    pub cum4_reduced: f64,
}

fn d2_prefactor() -> f64 {
    (1.0 + 3f64.sqrt()) / (2.0 * 3f64.sqrt())
}

/// `(1+√3)/(2√3) · √((12/(2l+1) + 3) · 12/(2l+1))`, the norm-free `d₂` bound.
pub fn d2_bound_simplified(ell: usize) -> f64 {
    let r = 12.0 / (2 * ell + 1) as f64;
    d2_prefactor() * ((r + 3.0) * r).sqrt()
}

/// The `d₂` bound in terms of the Schatten norms of `F_l`.
///
/// With `N = ‖F‖₂² + C²` and `ρ = (3‖F‖₄⁴ + ‖F‖₂⁴)/N²` the bound is
/// `(1+√3)/(2√3) · √((12ρ/(2l+1) + 1 + 4(‖F‖₄⁴ + ‖F‖₂⁴)/N²) · 12ρ/(2l+1))`.
pub fn d2_bound_exact(norms: &SpectrumNorms, ell: usize) -> f64 {
    let n = norms.hs_sq + norms.trace * norms.trace;
    let n2 = n * n;
    let hs4 = norms.hs_sq * norms.hs_sq;
    let rho = (3.0 * norms.s4_pow4 + hs4) / n2;
    let cum = 12.0 / (2 * ell + 1) as f64 * rho;
    let bracket = cum + 1.0 + 4.0 * (norms.s4_pow4 + hs4) / n2;
    d2_prefactor() * (bracket * cum).sqrt()
}

pub fn tv_bound(ell: usize) -> f64 {
    (8.0 / (2 * ell + 1) as f64).sqrt()
}

pub fn theoretical(model: &SpectralModel, ell: usize) -> Result<TheoreticalQuantities> {
    let norms = model.norms(ell)?;
    if norms.is_degenerate() {
        return Err(Error::Degenerate(ell));
    }
    let dof = (2 * ell + 1) as f64;
    let trace_sq = norms.trace * norms.trace;
    Ok(TheoreticalQuantities {
        ell,
        hs_norm_sq: norms.hs_sq,
        trace_sq,
        s4_norm4: norms.s4_pow4,
        mse: (norms.hs_sq + trace_sq) / dof,
        fourth_moment_a: 2.0 * norms.hs_sq + trace_sq,
        d2_bound_exact: d2_bound_exact(&norms, ell),
        d2_bound_simplified: d2_bound_simplified(ell),
        tv_bound: tv_bound(ell),
        cum4_reduced: 12.0 / dof * norms.s4_pow4 / (norms.hs_sq * norms.hs_sq),
    })
}

/// `(‖F_l‖₂² + C_l²)/(2l+1)`.
pub fn mse_theoretical(model: &SpectralModel, ell: usize) -> Result<f64> {
    let norms = model.norms(ell)?;
    Ok((norms.hs_sq + norms.trace * norms.trace) / (2 * ell + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassFlags {
    pub mse: bool,
    pub fourth_moment: bool,
    pub cum4: bool,
    pub ks: bool,
    pub d2: bool,
}

impl PassFlags {
    pub fn all(&self) -> bool {
        self.mse && self.fourth_moment && self.cum4 && self.ks && self.d2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub ell: usize,
    pub replicates: usize,
    /// `‖F̂_l − F_l‖₂²`
    pub emp_mse: Estimate,
    /// `‖a_{l,m}‖⁴`, averaged over `m` within each replicate.
    pub emp_fourth_moment: Estimate,
    /// Sample variance of the normalized reduced statistic.
    pub emp_scalar_var: Estimate,
    /// Fourth cumulant of the normalized reduced statistic.
    pub emp_cum4: Estimate,
    pub ks_distance: f64,
    pub d2_proxy: Estimate,
    pub pass: PassFlags,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub replicates: usize,
    pub master_seed: u64,
    pub probes: usize,
    pub batches: usize,
    pub se_tolerance: f64,
    /// Eigenvalue multiplier applied inside the sampler only (fault injection).
    pub sampler_lambda_scale: f64,
}

impl McOptions {
    pub fn new(replicates: usize, master_seed: u64) -> Self {
        Self {
            replicates,
            master_seed,
            probes: DEFAULT_PROBES,
            batches: DEFAULT_BATCHES,
            se_tolerance: DEFAULT_SE_TOLERANCE,
            sampler_lambda_scale: 1.0,
        }
    }
}

/// Per-replicate values gathered at one degree.
#[derive(Debug, Clone)]
pub struct ReplicateSamples {
    pub ell: usize,
    pub operator_stats: Vec<DMatrix<f64>>,
    pub scalar_stats: Vec<f64>,
    pub sq_errors: Vec<f64>,
    pub fourth_powers: Vec<f64>,
}

/// Draws `replicates` independent degree blocks and evaluates every statistic.
pub fn collect_samples(
    model: &SpectralModel,
    sampler: &Sampler,
    ell: usize,
    replicates: usize,
) -> Result<ReplicateSamples> {
    let scales = StatisticScales::new(model, ell)?;
    let d = model.dim();
    let dof = (2 * ell + 1) as f64;
    let records: Vec<(DMatrix<f64>, f64, f64, f64)> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let block = sampler.draw_degree(r, ell).expect("degree checked above");
            let (op, scalar) = scales.evaluate(&block, d);
            let sq_error = op.iter().map(|x| x * x).sum::<f64>() / (scales.operator_scale * scales.operator_scale);
            let fourth = block
                .chunks_exact(d)
                .map(|a| a.iter().map(|x| x * x).sum::<f64>().powi(2))
                .sum::<f64>()
                / dof;
            (op, scalar, sq_error, fourth)
        })
        .collect();
    let mut out = ReplicateSamples {
        ell,
        operator_stats: Vec::with_capacity(replicates),
        scalar_stats: Vec::with_capacity(replicates),
        sq_errors: Vec::with_capacity(replicates),
        fourth_powers: Vec::with_capacity(replicates),
    };
    for (op, scalar, sq, fourth) in records {
        out.operator_stats.push(op);
        out.scalar_stats.push(scalar);
        out.sq_errors.push(sq);
        out.fourth_powers.push(fourth);
    }
    Ok(out)
}

/// Runs the moment, cumulant, KS and `d₂` checks at each degree.
pub fn run_mc(
    model: &SpectralModel,
    ells: &[usize],
    options: &McOptions,
) -> Result<Vec<MonteCarloReport>> {
    if options.replicates < MIN_REPLICATES {
        return Err(Error::TooFewSamples {
            required: MIN_REPLICATES,
            actual: options.replicates,
        });
    }
    if options.probes == 0 {
        return Err(Error::InvalidArgument("probe count must be >= 1".into()));
    }
    let theory = ells
        .iter()
        .map(|&ell| theoretical(model, ell))
        .collect::<Result<Vec<_>>>()?;
    let sampler =
        Sampler::with_lambda_scale(model, options.master_seed, options.sampler_lambda_scale);
    let k = options.se_tolerance;

    ells.iter()
        .zip(&theory)
        .map(|(&ell, theo)| {
            let samples = collect_samples(model, &sampler, ell, options.replicates)?;
            let emp_mse = batch_mean(&samples.sq_errors, options.batches)?;
            let emp_fourth_moment = batch_mean(&samples.fourth_powers, options.batches)?;
            let centre = mean(&samples.scalar_stats);
            let centred_sq: Vec<f64> = samples
                .scalar_stats
                .iter()
                .map(|z| (z - centre) * (z - centre))
                .collect();
            let emp_scalar_var = Estimate {
                value: sample_variance(&samples.scalar_stats),
                se: batch_mean(&centred_sq, options.batches)?.se,
            };
            let emp_cum4 = empirical_cumulant4(&samples.scalar_stats)?;
            let ks_distance = ks_to_standard_normal(&samples.scalar_stats)?;
            let d2 = d2_proxy(
                &samples.operator_stats,
                model,
                ell,
                options.probes,
                options.master_seed,
            )?;
            let pass = PassFlags {
                mse: emp_mse.within(theo.mse, k),
                fourth_moment: emp_fourth_moment.within(theo.fourth_moment_a, k),
                cum4: emp_cum4.within(theo.cum4_reduced, k),
                ks: ks_distance <= theo.tv_bound.min(1.0),
                d2: d2.value <= theo.d2_bound_exact,
            };
            Ok(MonteCarloReport {
                ell,
                replicates: options.replicates,
                emp_mse,
                emp_fourth_moment,
                emp_scalar_var,
                emp_cum4,
                ks_distance,
                d2_proxy: d2,
                pass,
            })
        })
        .collect()
}

/// Samples of `Z_l`, the centered Gaussian with covariance
/// `S_l / (‖F‖₂² + C²)`, drawn in the `E_{j,j'}` eigenbasis. `stream`
/// selects an independent sample set.
pub fn reference_samples(
    model: &SpectralModel,
    ell: usize,
    count: usize,
    master_seed: u64,
    stream: u64,
) -> Result<Vec<DMatrix<f64>>> {
    let norms = model.norms(ell)?;
    if norms.is_degenerate() {
        return Err(Error::Degenerate(ell));
    }
    let lambda = model.eigenvalues(ell)?;
    let frame = model.frame(ell)?;
    let d = model.dim();
    let normalizer = norms.hs_sq + norms.trace * norms.trace;
    let pairs: Vec<(usize, usize, f64)> = sym_pairs(d)
        .map(|(j, jp)| {
            let sd = (2.0 * lambda[j - 1] * lambda[jp - 1] / normalizer).sqrt();
            // E_{j,j'} puts 1/√2 on both off-diagonal entries
            let entry = if j == jp { sd } else { sd * std::f64::consts::FRAC_1_SQRT_2 };
            (j - 1, jp - 1, entry)
        })
        .collect();
    let mut rng = keyed_rng(master_seed, DOMAIN_REFERENCE, ((ell as u64) << 32) | stream);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut s = DMatrix::zeros(d, d);
        for &(j, jp, entry) in &pairs {
            let v = entry * normal_from_bits(rng.next_u64());
            s[(j, jp)] = v;
            s[(jp, j)] = v;
        }
        out.push(frame * s * frame.transpose());
    }
    Ok(out)
}

/// Seeded symmetric probes with unit Hilbert–Schmidt norm.
pub fn probe_dictionary(dim: usize, probes: usize, master_seed: u64, ell: usize) -> Vec<DMatrix<f64>> {
    let mut rng = keyed_rng(master_seed, DOMAIN_PROBES, ell as u64);
    (0..probes)
        .map(|_| {
            let mut b = DMatrix::zeros(dim, dim);
            for i in 0..dim {
                for k in 0..=i {
                    let v = normal_from_bits(rng.next_u64());
                    b[(i, k)] = v;
                    b[(k, i)] = v;
                }
            }
            let norm = b.norm();
            b / norm
        })
        .collect()
}

/// `max_B |mean h_B(a) − mean h_B(b)|` over a probe dictionary. The standard
/// error reported is the one of the maximizing probe.
pub fn probe_distance(
    a: &[DMatrix<f64>],
    b: &[DMatrix<f64>],
    probes: &[DMatrix<f64>],
) -> Result<Estimate> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            actual: a.len().min(b.len()),
        });
    }
    if probes.is_empty() {
        return Err(Error::InvalidArgument("probe count must be >= 1".into()));
    }
    let eval = |samples: &[DMatrix<f64>], probe: &DMatrix<f64>| -> Vec<f64> {
        samples.iter().map(|s| s.dot(probe).cos()).collect()
    };
    let mut best = Estimate { value: -1.0, se: 0.0 };
    for probe in probes {
        let ha = eval(a, probe);
        let hb = eval(b, probe);
        let diff = (mean(&ha) - mean(&hb)).abs();
        let se = (sample_variance(&ha) / ha.len() as f64 + sample_variance(&hb) / hb.len() as f64)
            .sqrt();
        if diff > best.value {
            best = Estimate { value: diff, se };
        }
    }
    Ok(best)
}

/// Lower proxy for `d₂(F_l, Z_l)` from samples of the normalized operator
/// statistic, compared against as many fresh `Z_l` samples.
pub fn d2_proxy(
    operator_samples: &[DMatrix<f64>],
    model: &SpectralModel,
    ell: usize,
    probes: usize,
    master_seed: u64,
) -> Result<Estimate> {
    if probes == 0 {
        return Err(Error::InvalidArgument("probe count must be >= 1".into()));
    }
    let reference = reference_samples(model, ell, operator_samples.len(), master_seed, 0)?;
    let dictionary = probe_dictionary(model.dim(), probes, master_seed, ell);
    probe_distance(operator_samples, &reference, &dictionary)
}
