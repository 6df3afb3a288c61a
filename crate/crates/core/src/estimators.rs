//! Sample power spectrum operators, the reduced estimator and the normalized
//! statistics whose laws the CLT checks compare against Gaussians.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{power_spectrum_operator, SpectralModel};
use crate::operators::{OperatorOnH, TruncatedSpace};
use crate::sampler::{CoefficientSet, FieldRealization};
use crate::harmonics::analyze_columns;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePowerSpectrum {
    pub ell: usize,
    pub operator: OperatorOnH,
    pub dof: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedStatistic {
    pub ell: usize,
    /// `√((2l+1)/(‖F‖₂² + C²)) (F̂ − F)`
    pub operator_stat: OperatorOnH,
    /// `√((2l+1)/(2‖F‖₂²)) (Ĉ − C)`
    pub scalar_stat: f64,
}

/// Quadrature analysis of every coordinate of a gridded field.
pub fn analyze_field(realization: &FieldRealization, band_limit: usize) -> Result<CoefficientSet> {
    let grid = realization.grid();
    let values = analyze_columns(realization.as_slice(), realization.dim(), grid, band_limit)?;
    CoefficientSet::from_vec(band_limit, realization.dim(), values)
}

/// `(2l+1)^{-1} Σ_m a_m a_mᵀ` from the contiguous degree block.
pub fn sample_power_spectrum_matrix(block: &[f64], dim: usize, ell: usize) -> DMatrix<f64> {
    let dof = 2 * ell + 1;
    debug_assert_eq!(block.len(), dof * dim);
    let mut acc = DMatrix::zeros(dim, dim);
    for a in block.chunks_exact(dim) {
        for i in 0..dim {
            for k in 0..=i {
                acc[(i, k)] += a[i] * a[k];
            }
        }
    }
    let inv = 1.0 / dof as f64;
    for i in 0..dim {
        for k in 0..=i {
            let v = acc[(i, k)] * inv;
            acc[(i, k)] = v;
            acc[(k, i)] = v;
        }
    }
    acc
}

/// `(2l+1)^{-1} Σ_m ‖a_m‖²` from the contiguous degree block.
pub fn reduced_estimator_block(block: &[f64], ell: usize) -> f64 {
    block.iter().map(|x| x * x).sum::<f64>() / (2 * ell + 1) as f64
}

pub fn sample_power_spectrum(coeffs: &CoefficientSet, ell: usize) -> Result<SamplePowerSpectrum> {
    let block = coeffs.degree(ell)?;
    let space = TruncatedSpace::new(coeffs.dim())?;
    let operator =
        OperatorOnH::new_self_adjoint(space, sample_power_spectrum_matrix(block, coeffs.dim(), ell))?;
    Ok(SamplePowerSpectrum {
        ell,
        operator,
        dof: 2 * ell + 1,
    })
}

pub fn reduced_estimator(coeffs: &CoefficientSet, ell: usize) -> Result<f64> {
    Ok(reduced_estimator_block(coeffs.degree(ell)?, ell))
}

/// Precomputed truth at one degree, shared by all replicates of a Monte Carlo run.
#[derive(Debug, Clone)]
pub struct StatisticScales {
    pub ell: usize,
    pub truth: DMatrix<f64>,
    pub reduced: f64,
    pub operator_scale: f64,
    pub scalar_scale: f64,
}

impl StatisticScales {
    pub fn new(model: &SpectralModel, ell: usize) -> Result<Self> {
        let norms = model.norms(ell)?;
        if norms.is_degenerate() {
            return Err(Error::Degenerate(ell));
        }
        let dof = (2 * ell + 1) as f64;
        Ok(Self {
            ell,
            truth: power_spectrum_operator(model, ell)?.into_entries(),
            reduced: norms.trace,
            operator_scale: (dof / (norms.hs_sq + norms.trace * norms.trace)).sqrt(),
            scalar_scale: (dof / (2.0 * norms.hs_sq)).sqrt(),
        })
    }

    /// `(operator_stat, scalar_stat)` for a degree block.
    pub fn evaluate(&self, block: &[f64], dim: usize) -> (DMatrix<f64>, f64) {
        let f_hat = sample_power_spectrum_matrix(block, dim, self.ell);
        let c_hat = reduced_estimator_block(block, self.ell);
        (
            (f_hat - &self.truth) * self.operator_scale,
            (c_hat - self.reduced) * self.scalar_scale,
        )
    }
}

pub fn normalized_statistic(
    coeffs: &CoefficientSet,
    model: &SpectralModel,
    ell: usize,
) -> Result<NormalizedStatistic> {
    if coeffs.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            left: model.dim(),
            right: coeffs.dim(),
        });
    }
    let scales = StatisticScales::new(model, ell)?;
    let (op, scalar) = scales.evaluate(coeffs.degree(ell)?, coeffs.dim());
    Ok(NormalizedStatistic {
        ell,
        operator_stat: OperatorOnH::new_self_adjoint(model.space().clone(), op)?,
        scalar_stat: scalar,
    })
}
