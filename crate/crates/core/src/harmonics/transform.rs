//! Analysis and synthesis between grid samples and harmonic coefficients.
//!
//! The column variants work on `d` interleaved coordinates at once
//! (row-major, `values[node * d + j]`); every coordinate is transformed
//! independently, they only share the per-ring Legendre tables.

use std::f64::consts::{PI, SQRT_2};

use super::grid::SphericalGrid;
use super::ylm::{
    fill_normalized_alf, flat_index, num_harmonics, sph_harm_all, tri_index, tri_len,
    HarmonicIndex,
};
use crate::error::{Error, Result};

/// Real coefficients `c_{l,m}` for every `l <= band_limit`, flat layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarCoefficients {
    band_limit: usize,
    values: Vec<f64>,
}

impl ScalarCoefficients {
    pub fn zeros(band_limit: usize) -> Self {
        Self {
            band_limit,
            values: vec![0.0; num_harmonics(band_limit)],
        }
    }

    pub fn from_vec(band_limit: usize, values: Vec<f64>) -> Result<Self> {
        let expected = num_harmonics(band_limit);
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: values.len(),
            });
        }
        Ok(Self { band_limit, values })
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn get(&self, index: HarmonicIndex) -> f64 {
        if index.ell() > self.band_limit {
            0.0
        } else {
            self.values[index.flat()]
        }
    }

    pub fn set(&mut self, index: HarmonicIndex, value: f64) {
        self.values[index.flat()] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// `cos(m φ_k)` and `sin(m φ_k)` for `m <= mmax`, computed from the exact
/// residue `m k mod n_phi`.
struct TrigTable {
    n_phi: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigTable {
    fn new(mmax: usize, n_phi: usize) -> Self {
        let base: Vec<(f64, f64)> = (0..n_phi)
            .map(|r| (2.0 * PI * r as f64 / n_phi as f64).sin_cos())
            .collect();
        let mut cos = vec![0.0; (mmax + 1) * n_phi];
        let mut sin = vec![0.0; (mmax + 1) * n_phi];
        for m in 0..=mmax {
            for k in 0..n_phi {
                let (s, c) = base[(m * k) % n_phi];
                cos[m * n_phi + k] = c;
                sin[m * n_phi + k] = s;
            }
        }
        Self { n_phi, cos, sin }
    }

    #[inline]
    fn cos_row(&self, m: usize) -> &[f64] {
        &self.cos[m * self.n_phi..(m + 1) * self.n_phi]
    }

    #[inline]
    fn sin_row(&self, m: usize) -> &[f64] {
        &self.sin[m * self.n_phi..(m + 1) * self.n_phi]
    }
}

/// Quadrature analysis of `d` interleaved columns up to degree `band_limit`.
pub(crate) fn analyze_columns(
    samples: &[f64],
    d: usize,
    grid: &SphericalGrid,
    band_limit: usize,
) -> Result<Vec<f64>> {
    if band_limit > grid.band_limit() {
        return Err(Error::BandLimitMismatch {
            required: band_limit,
            available: grid.band_limit(),
        });
    }
    let expected = grid.len() * d;
    if samples.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: samples.len(),
        });
    }
    let n_phi = grid.n_phi();
    let trig = TrigTable::new(band_limit, n_phi);
    let mut out = vec![0.0; num_harmonics(band_limit) * d];
    let mut alf = vec![0.0; tri_len(band_limit)];
    let mut cos_sum = vec![0.0; (band_limit + 1) * d];
    let mut sin_sum = vec![0.0; (band_limit + 1) * d];

    for ring in 0..grid.n_rings() {
        let ring_samples = &samples[ring * n_phi * d..(ring + 1) * n_phi * d];
        cos_sum.iter_mut().for_each(|v| *v = 0.0);
        sin_sum.iter_mut().for_each(|v| *v = 0.0);
        for m in 0..=band_limit {
            let (cr, sr) = (trig.cos_row(m), trig.sin_row(m));
            let cs = &mut cos_sum[m * d..(m + 1) * d];
            let ss = &mut sin_sum[m * d..(m + 1) * d];
            for k in 0..n_phi {
                let row = &ring_samples[k * d..(k + 1) * d];
                for j in 0..d {
                    cs[j] += row[j] * cr[k];
                    ss[j] += row[j] * sr[k];
                }
            }
        }
        fill_normalized_alf(
            band_limit,
            grid.cos_theta()[ring],
            grid.sin_theta()[ring],
            &mut alf,
        );
        let w = grid.ring_weight(ring);
        for m in 0..=band_limit {
            let scale = if m == 0 { w } else { w * SQRT_2 };
            for ell in m..=band_limit {
                let p = scale * alf[tri_index(ell, m)];
                let pos = flat_index(ell, m as i64) * d;
                for j in 0..d {
                    out[pos + j] += p * cos_sum[m * d + j];
                }
                if m > 0 {
                    let neg = flat_index(ell, -(m as i64)) * d;
                    for j in 0..d {
                        out[neg + j] += p * sin_sum[m * d + j];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Ring-wise synthesis of `d` interleaved coefficient columns onto the grid.
pub(crate) fn synthesize_columns(
    coeffs: &[f64],
    d: usize,
    band_limit: usize,
    grid: &SphericalGrid,
) -> Result<Vec<f64>> {
    let expected = num_harmonics(band_limit) * d;
    if coeffs.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: coeffs.len(),
        });
    }
    let n_phi = grid.n_phi();
    let trig = TrigTable::new(band_limit, n_phi);
    let mut out = vec![0.0; grid.len() * d];
    let mut alf = vec![0.0; tri_len(band_limit)];
    let mut a = vec![0.0; (band_limit + 1) * d];
    let mut b = vec![0.0; (band_limit + 1) * d];

    for ring in 0..grid.n_rings() {
        fill_normalized_alf(
            band_limit,
            grid.cos_theta()[ring],
            grid.sin_theta()[ring],
            &mut alf,
        );
        a.iter_mut().for_each(|v| *v = 0.0);
        b.iter_mut().for_each(|v| *v = 0.0);
        for m in 0..=band_limit {
            let scale = if m == 0 { 1.0 } else { SQRT_2 };
            for ell in m..=band_limit {
                let p = scale * alf[tri_index(ell, m)];
                let pos = flat_index(ell, m as i64) * d;
                for j in 0..d {
                    a[m * d + j] += p * coeffs[pos + j];
                }
                if m > 0 {
                    let neg = flat_index(ell, -(m as i64)) * d;
                    for j in 0..d {
                        b[m * d + j] += p * coeffs[neg + j];
                    }
                }
            }
        }
        let ring_out = &mut out[ring * n_phi * d..(ring + 1) * n_phi * d];
        for m in 0..=band_limit {
            let (cr, sr) = (trig.cos_row(m), trig.sin_row(m));
            for k in 0..n_phi {
                let row = &mut ring_out[k * d..(k + 1) * d];
                for j in 0..d {
                    row[j] += a[m * d + j] * cr[k] + b[m * d + j] * sr[k];
                }
            }
        }
    }
    Ok(out)
}

/// `c_{l,m} = Σ_i w_i f(x_i) Y_{l,m}(x_i)` for `l <= band_limit`.
pub fn analyze_scalar(
    samples: &[f64],
    grid: &SphericalGrid,
    band_limit: usize,
) -> Result<ScalarCoefficients> {
    let values = analyze_columns(samples, 1, grid, band_limit)?;
    Ok(ScalarCoefficients { band_limit, values })
}

/// `f(x) = Σ c_{l,m} Y_{l,m}(x)` at arbitrary unit vectors.
pub fn synthesize_scalar(coeffs: &ScalarCoefficients, points: &[[f64; 3]]) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|p| {
            let y = sph_harm_all(coeffs.band_limit, p)?;
            Ok(y.iter().zip(&coeffs.values).map(|(a, b)| a * b).sum())
        })
        .collect()
}

/// Same as [`synthesize_scalar`] on the grid nodes, but ring-wise.
pub fn synthesize_scalar_on_grid(
    coeffs: &ScalarCoefficients,
    grid: &SphericalGrid,
) -> Result<Vec<f64>> {
    synthesize_columns(&coeffs.values, 1, coeffs.band_limit, grid)
}
