//! Reproducible Gaussian sampling of harmonic coefficients and field realizations.
//!
//! Every standard normal is a pure function of `(master_seed, replicate, l, m, j)`:
//! the ChaCha8 key is derived from the master seed, the ChaCha stream id is the
//! replicate, and the word position encodes `(l, m, j)`. Replicates and degrees
//! can therefore be generated in any order or in parallel with identical output.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harmonics::{flat_index, num_harmonics, synthesize_columns, SphericalGrid};
use crate::model::SpectralModel;
use crate::stats::normal_from_bits;

/// Identifies one standard normal variate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub replicate: u64,
    pub ell: usize,
    pub m: i64,
    /// 1-based coordinate index.
    pub j: usize,
}

#[inline]
fn word_position(ell: usize, m: i64, j: usize) -> u128 {
    (((flat_index(ell, m) as u128) << 32) | (j as u128 - 1)) * 2
}

impl StreamKey {
    pub fn normal(&self) -> f64 {
        let mut rng = keyed_rng(self.master_seed, 0, self.replicate);
        rng.set_word_pos(word_position(self.ell, self.m, self.j));
        normal_from_bits(rng.next_u64())
    }
}

/// SplitMix64 finalizer, used to separate seed domains.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// ChaCha8 generator for `(master_seed, domain)` positioned at stream `stream`.
/// Domain 0 is reserved for the coefficient draws.
pub fn keyed_rng(master_seed: u64, domain: u64, stream: u64) -> ChaCha8Rng {
    let seed = if domain == 0 {
        master_seed
    } else {
        mix64(master_seed ^ mix64(domain))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Coefficients `a_{l,m} ∈ R^d` for all `l <= band_limit`, stored row-major
/// with row `l² + l + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    band_limit: usize,
    dim: usize,
    values: Vec<f64>,
}

impl CoefficientSet {
    pub fn zeros(band_limit: usize, dim: usize) -> Self {
        Self {
            band_limit,
            dim,
            values: vec![0.0; num_harmonics(band_limit) * dim],
        }
    }

    pub fn from_vec(band_limit: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        let expected = num_harmonics(band_limit) * dim;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            band_limit,
            dim,
            values,
        })
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, ell: usize, m: i64) -> &[f64] {
        let row = flat_index(ell, m);
        &self.values[row * self.dim..(row + 1) * self.dim]
    }

    pub fn get_mut(&mut self, ell: usize, m: i64) -> &mut [f64] {
        let row = flat_index(ell, m);
        &mut self.values[row * self.dim..(row + 1) * self.dim]
    }

    /// The `2l + 1` vectors of degree `l`, contiguous, `m = -l..=l`.
    pub fn degree(&self, ell: usize) -> Result<&[f64]> {
        if ell > self.band_limit {
            return Err(Error::EllOutOfRange {
                ell,
                band_limit: self.band_limit,
            });
        }
        let start = ell * ell * self.dim;
        Ok(&self.values[start..start + (2 * ell + 1) * self.dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// `T(x_i)` on the nodes of a grid; `values[node * d + j]`.
#[derive(Debug, Clone)]
pub struct FieldRealization {
    grid: Arc<SphericalGrid>,
    dim: usize,
    values: Vec<f64>,
}

impl FieldRealization {
    pub fn new(grid: Arc<SphericalGrid>, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() * dim {
            return Err(Error::LengthMismatch {
                expected: grid.len() * dim,
                actual: values.len(),
            });
        }
        Ok(Self { grid, dim, values })
    }

    pub fn grid(&self) -> &Arc<SphericalGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, node: usize) -> &[f64] {
        &self.values[node * self.dim..(node + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Draws coefficient sets `a_{l,m} = Σ_j √λ_{j;l} ξ_{j,l,m} e_{j;l}` for a model.
///
/// `lambda_scale` multiplies every eigenvalue used for sampling; it exists to
/// inject a known fault and is `1` otherwise.
#[derive(Debug, Clone)]
pub struct Sampler {
    band_limit: usize,
    dim: usize,
    master_seed: u64,
    /// `Q_l diag(√λ_l)` per degree.
    factors: Vec<DMatrix<f64>>,
}

impl Sampler {
    pub fn new(model: &SpectralModel, master_seed: u64) -> Self {
        Self::with_lambda_scale(model, master_seed, 1.0)
    }

    pub fn with_lambda_scale(model: &SpectralModel, master_seed: u64, lambda_scale: f64) -> Self {
        let factors = (0..=model.band_limit())
            .map(|ell| {
                let sqrt_lambda: Vec<f64> = model
                    .eigenvalues(ell)
                    .expect("degree within band limit")
                    .iter()
                    .map(|v| (v * lambda_scale).sqrt())
                    .collect();
                model.frame(ell).expect("degree within band limit")
                    * DMatrix::from_diagonal(&DVector::from_vec(sqrt_lambda))
            })
            .collect();
        Self {
            band_limit: model.band_limit(),
            dim: model.dim(),
            master_seed,
            factors,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    fn fill_degree(&self, rng: &mut ChaCha8Rng, ell: usize, out: &mut [f64]) {
        let d = self.dim;
        let factor = &self.factors[ell];
        let mut xi = vec![0.0; d];
        for (row, m) in (-(ell as i64)..=ell as i64).enumerate() {
            rng.set_word_pos(word_position(ell, m, 1));
            for x in xi.iter_mut() {
                *x = normal_from_bits(rng.next_u64());
            }
            let a = &mut out[row * d..(row + 1) * d];
            for (i, ai) in a.iter_mut().enumerate() {
                *ai = (0..d).map(|k| factor[(i, k)] * xi[k]).sum();
            }
        }
    }

    /// The `2l + 1` coefficient vectors of one degree; identical to the
    /// corresponding block of [`Sampler::draw`].
    pub fn draw_degree(&self, replicate: u64, ell: usize) -> Result<Vec<f64>> {
        if ell > self.band_limit {
            return Err(Error::EllOutOfRange {
                ell,
                band_limit: self.band_limit,
            });
        }
        let mut rng = keyed_rng(self.master_seed, 0, replicate);
        let mut out = vec![0.0; (2 * ell + 1) * self.dim];
        self.fill_degree(&mut rng, ell, &mut out);
        Ok(out)
    }

    pub fn draw(&self, replicate: u64) -> CoefficientSet {
        let mut rng = keyed_rng(self.master_seed, 0, replicate);
        let mut set = CoefficientSet::zeros(self.band_limit, self.dim);
        for ell in 0..=self.band_limit {
            let start = ell * ell * self.dim;
            let end = start + (2 * ell + 1) * self.dim;
            self.fill_degree(&mut rng, ell, &mut set.values[start..end]);
        }
        set
    }
}

pub fn draw_coefficients(model: &SpectralModel, master_seed: u64, replicate: u64) -> CoefficientSet {
    Sampler::new(model, master_seed).draw(replicate)
}

/// `count` independent coefficient sets, replicate `k` keyed by index `k`.
pub fn replicate_stream(
    model: &SpectralModel,
    master_seed: u64,
    count: usize,
) -> Result<Vec<CoefficientSet>> {
    if count == 0 {
        return Err(Error::InvalidArgument("replicate count must be >= 1".into()));
    }
    let sampler = Sampler::new(model, master_seed);
    Ok((0..count as u64)
        .into_par_iter()
        .map(|r| sampler.draw(r))
        .collect())
}

/// `T(x_i) = Σ_{l,m} a_{l,m} Y_{l,m}(x_i)`, each coordinate of `R^d` separately.
pub fn synthesize_field(
    coeffs: &CoefficientSet,
    grid: Arc<SphericalGrid>,
) -> Result<FieldRealization> {
    if grid.band_limit() < coeffs.band_limit {
        return Err(Error::BandLimitMismatch {
            required: coeffs.band_limit,
            available: grid.band_limit(),
        });
    }
    let values = synthesize_columns(&coeffs.values, coeffs.dim, coeffs.band_limit, &grid)?;
    FieldRealization::new(grid, coeffs.dim, values)
}
