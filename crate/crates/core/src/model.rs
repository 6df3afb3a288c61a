//! Ground-truth power spectrum operator sequences `{F_l}` for `l <= L_max`.
//!
//! A model is band-limited: `F_l = 0` above `L_max`, so every series in the
//! covariance expansion is a finite sum. Each `F_l` is stored through its
//! eigen-decomposition `Σ_j λ_{j;l} e_{j;l} ⊗ e_{j;l}`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::fill_legendre;
use crate::operators::{orthonormality_defect, OperatorOnH, TruncatedSpace};
use crate::stats::normal_from_bits;

const FRAME_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FrameMode {
    Canonical,
    RandomOrthogonal { seed: u64 },
}

/// Scalar summaries of `F_l` used throughout the moment formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumNorms {
    /// `‖F_l‖₂² = Σ λ²`
    pub hs_sq: f64,
    /// `‖F_l‖₄⁴ = Σ λ⁴`
    pub s4_pow4: f64,
    /// `C_l = ‖F_l‖₁ = Σ λ`
    pub trace: f64,
}

impl SpectrumNorms {
    pub fn from_eigenvalues(lambda: &[f64]) -> Self {
        Self {
            hs_sq: lambda.iter().map(|x| x * x).sum(),
            s4_pow4: lambda.iter().map(|x| x.powi(4)).sum(),
            trace: lambda.iter().sum(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.hs_sq > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    band_limit: usize,
    space: TruncatedSpace,
    lambda: Vec<Vec<f64>>,
    frames: Vec<DMatrix<f64>>,
}

/// `C_l = Σ_j λ_{j;l}` for every degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSpectrum {
    pub values: Vec<f64>,
}

/// Canonical JSON form of a model: eigenvalue table and frames (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelExport {
    pub band_limit: usize,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_labels: Option<Vec<String>>,
    pub lambda: Vec<Vec<f64>>,
    pub frames: Vec<Vec<Vec<f64>>>,
}

fn build_frames(band_limit: usize, d: usize, mode: FrameMode) -> Vec<DMatrix<f64>> {
    match mode {
        FrameMode::Canonical => vec![DMatrix::identity(d, d); band_limit + 1],
        FrameMode::RandomOrthogonal { seed } => (0..=band_limit)
            .map(|ell| random_orthogonal(d, seed, ell as u64))
            .collect(),
    }
}

/// Seeded Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `diag(R)` folded into `Q`.
pub fn random_orthogonal(d: usize, seed: u64, stream: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let g = DMatrix::from_fn(d, d, |_, _| normal_from_bits(rng.next_u64()));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..d {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

impl SpectralModel {
    /// Builds a model from `lambda[l][j-1]` and explicit frames (columns `e_{j;l}`).
    pub fn new(
        space: TruncatedSpace,
        lambda: Vec<Vec<f64>>,
        frames: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::InvalidModel("eigenvalue table is empty".into()));
        }
        if frames.len() != lambda.len() {
            return Err(Error::InvalidModel(format!(
                "{} frames for {} degrees",
                frames.len(),
                lambda.len()
            )));
        }
        let d = space.dim();
        for (ell, (row, frame)) in lambda.iter().zip(&frames).enumerate() {
            if row.len() != d {
                return Err(Error::InvalidModel(format!(
                    "degree {ell}: {} eigenvalues for dimension {d}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "degree {ell}: eigenvalue {v} is not a finite nonnegative number"
                )));
            }
            if frame.nrows() != d || frame.ncols() != d {
                return Err(Error::InvalidModel(format!("degree {ell}: frame is not {d}x{d}")));
            }
            let deviation = orthonormality_defect(frame);
            if !(deviation <= FRAME_TOLERANCE) {
                return Err(Error::NotOrthonormal { deviation });
            }
        }
        Ok(Self {
            band_limit: lambda.len() - 1,
            space,
            lambda,
            frames,
        })
    }

    pub fn from_table(lambda: Vec<Vec<f64>>, frame_mode: FrameMode) -> Result<Self> {
        let d = lambda.first().map(Vec::len).unwrap_or(0);
        let space = TruncatedSpace::shifted_legendre(d)?;
        let frames = build_frames(lambda.len().saturating_sub(1), d, frame_mode);
        Self::new(space, lambda, frames)
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn space(&self) -> &TruncatedSpace {
        &self.space
    }

    /// `λ_{·;l}`, indexed by `j - 1`.
    pub fn eigenvalues(&self, ell: usize) -> Result<&[f64]> {
        self.check_ell(ell)?;
        Ok(&self.lambda[ell])
    }

    /// Frame whose columns are `e_{1;l}..e_{d;l}`.
    pub fn frame(&self, ell: usize) -> Result<&DMatrix<f64>> {
        self.check_ell(ell)?;
        Ok(&self.frames[ell])
    }

    pub fn norms(&self, ell: usize) -> Result<SpectrumNorms> {
        Ok(SpectrumNorms::from_eigenvalues(self.eigenvalues(ell)?))
    }

    fn check_ell(&self, ell: usize) -> Result<()> {
        if ell > self.band_limit {
            return Err(Error::EllOutOfRange {
                ell,
                band_limit: self.band_limit,
            });
        }
        Ok(())
    }

    /// Same frames, all eigenvalues multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let lambda = self
            .lambda
            .iter()
            .map(|row| row.iter().map(|v| v * factor).collect())
            .collect();
        Self::new(self.space.clone(), lambda, self.frames.clone())
    }

    /// `Σ_l C_l (2l+1)/(4π)`, the pointwise variance `E‖T(x)‖²`.
    pub fn field_variance(&self) -> f64 {
        self.lambda
            .iter()
            .enumerate()
            .map(|(ell, row)| row.iter().sum::<f64>() * degree_weight(ell))
            .sum()
    }

    /// `Σ_{l > l_trunc} C_l (2l+1)/(4π)`: nuclear-norm bound on the truncation
    /// error of the kernel expansion.
    pub fn tail_bound(&self, l_trunc: usize) -> f64 {
        self.lambda
            .iter()
            .enumerate()
            .skip(l_trunc + 1)
            .map(|(ell, row)| row.iter().sum::<f64>() * degree_weight(ell))
            .sum()
    }

    pub fn export(&self) -> ModelExport {
        ModelExport {
            band_limit: self.band_limit,
            dim: self.dim(),
            basis_labels: self.space.basis_labels().map(|l| l.to_vec()),
            lambda: self.lambda.clone(),
            frames: self
                .frames
                .iter()
                .map(|f| f.row_iter().map(|r| r.iter().copied().collect()).collect())
                .collect(),
        }
    }

    pub fn from_export(export: &ModelExport) -> Result<Self> {
        let space = match &export.basis_labels {
            Some(labels) => TruncatedSpace::with_labels(labels.clone())?,
            None => TruncatedSpace::new(export.dim)?,
        };
        let d = space.dim();
        let frames = export
            .frames
            .iter()
            .map(|rows| {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::InvalidModel("frame shape mismatch".into()));
                }
                Ok(DMatrix::from_fn(d, d, |i, k| rows[i][k]))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, export.lambda.clone(), frames)
    }
}

#[inline]
pub(crate) fn degree_weight(ell: usize) -> f64 {
    (2 * ell + 1) as f64 / (4.0 * PI)
}

/// `λ_{j;l} = A (1+l)^{-α} (1+j)^{-β}`, `j = 1..d`.
pub fn make_powerlaw_model(
    l_max: usize,
    d: usize,
    amplitude: f64,
    alpha: f64,
    beta: f64,
    frame_mode: FrameMode,
) -> Result<SpectralModel> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidModel(format!("amplitude must be > 0, got {amplitude}")));
    }
    if !(alpha > 2.0 && alpha.is_finite()) {
        return Err(Error::InvalidModel(format!("alpha must be > 2, got {alpha}")));
    }
    if !(beta > 1.0 && beta.is_finite()) {
        return Err(Error::InvalidModel(format!("beta must be > 1, got {beta}")));
    }
    if d == 0 {
        return Err(Error::InvalidModel("dimension must be >= 1".into()));
    }
    let lambda = (0..=l_max)
        .map(|ell| {
            let radial = amplitude * (1.0 + ell as f64).powf(-alpha);
            (1..=d).map(|j| radial * (1.0 + j as f64).powf(-beta)).collect()
        })
        .collect();
    SpectralModel::from_table(lambda, frame_mode)
}

/// `F_l = Σ_j λ_{j;l} e_{j;l} ⊗ e_{j;l}`.
pub fn power_spectrum_operator(model: &SpectralModel, ell: usize) -> Result<OperatorOnH> {
    let lambda = model.eigenvalues(ell)?;
    let q = model.frame(ell)?;
    let scaled = q * DMatrix::from_diagonal(&DVector::from_column_slice(lambda));
    OperatorOnH::new_self_adjoint(model.space().clone(), scaled * q.transpose())
}

pub fn reduced_spectrum(model: &SpectralModel) -> ReducedSpectrum {
    ReducedSpectrum {
        values: model.lambda.iter().map(|row| row.iter().sum()).collect(),
    }
}

/// `R_t = Σ_{l <= l_trunc} F_l (2l+1)/(4π) P_l(t)`.
pub fn kernel_reconstruct(model: &SpectralModel, t: f64, l_trunc: usize) -> Result<OperatorOnH> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::ArgumentOutOfDomain { value: t });
    }
    if l_trunc > model.band_limit() {
        return Err(Error::EllOutOfRange {
            ell: l_trunc,
            band_limit: model.band_limit(),
        });
    }
    let mut p = vec![0.0; l_trunc + 1];
    fill_legendre(t, &mut p);
    let d = model.dim();
    let mut acc = DMatrix::zeros(d, d);
    for (ell, p_ell) in p.iter().enumerate() {
        let f = power_spectrum_operator(model, ell)?;
        acc += f.entries() * (degree_weight(ell) * p_ell);
    }
    OperatorOnH::new_self_adjoint(model.space().clone(), acc)
}

/// `E‖T(x) − T(y)‖² = 2‖R_1‖₁ − 2 Tr R_t` for `⟨x, y⟩ = t`.
pub fn mean_square_continuity_modulus(model: &SpectralModel, t: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::ArgumentOutOfDomain { value: t });
    }
    let mut p = vec![0.0; model.band_limit() + 1];
    fill_legendre(t, &mut p);
    let reduced = reduced_spectrum(model);
    let modulus: f64 = reduced
        .values
        .iter()
        .zip(&p)
        .enumerate()
        .map(|(ell, (c, p_ell))| 2.0 * c * degree_weight(ell) * (1.0 - p_ell))
        .sum();
    Ok(modulus.max(0.0))
}
