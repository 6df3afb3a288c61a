//! Real, fully normalized spherical harmonics.
//!
//! Convention: `Y_{l,0} = Pbar_l^0(cos θ)`, `Y_{l,m} = √2 Pbar_l^m(cos θ) cos(mφ)` for
//! `m > 0` and `Y_{l,m} = √2 Pbar_l^{|m|}(cos θ) sin(|m|φ)` for `m < 0`, where `Pbar`
//! is the associated Legendre function scaled so that `∫_{S²} Y² = 1`. No
//! Condon–Shortley phase.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-10;

/// A degree/order pair with `|m| <= ell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HarmonicIndex {
    ell: usize,
    m: i64,
}

impl HarmonicIndex {
    pub fn new(ell: usize, m: i64) -> Result<Self> {
        if m.unsigned_abs() as usize > ell {
            return Err(Error::InvalidIndex { ell, m });
        }
        Ok(Self { ell, m })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    /// Position in the flat `(l, m)` layout `l² + l + m`.
    pub fn flat(&self) -> usize {
        flat_index(self.ell, self.m)
    }

    pub fn from_flat(idx: usize) -> Self {
        let ell = idx.isqrt();
        let m = idx as i64 - (ell * ell + ell) as i64;
        Self { ell, m }
    }
}

#[inline]
pub fn flat_index(ell: usize, m: i64) -> usize {
    ((ell * ell + ell) as i64 + m) as usize
}

/// Number of `(l, m)` pairs with `l <= band_limit`.
#[inline]
pub fn num_harmonics(band_limit: usize) -> usize {
    (band_limit + 1) * (band_limit + 1)
}

#[inline]
pub(crate) fn tri_index(ell: usize, m: usize) -> usize {
    ell * (ell + 1) / 2 + m
}

pub(crate) fn tri_len(band_limit: usize) -> usize {
    (band_limit + 1) * (band_limit + 2) / 2
}

/// Normalized associated Legendre values `Pbar_l^m(cos θ)`, `0 <= m <= l <= lmax`,
/// written in triangular layout. Uses the fully normalized recurrences so no
/// factorials appear.
pub(crate) fn fill_normalized_alf(lmax: usize, cos_t: f64, sin_t: f64, out: &mut [f64]) {
    debug_assert!(out.len() >= tri_len(lmax));
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            let mf = m as f64;
            pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_t;
        }
        out[tri_index(m, m)] = pmm;
        if m == lmax {
            break;
        }
        let mf = m as f64;
        let mut p_prev = pmm;
        let mut p = (2.0 * mf + 3.0).sqrt() * cos_t * pmm;
        out[tri_index(m + 1, m)] = p;
        let mut a_prev = (2.0 * mf + 3.0).sqrt();
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let next = a * (cos_t * p - p_prev / a_prev);
            p_prev = p;
            p = next;
            a_prev = a;
            out[tri_index(l, m)] = p;
        }
    }
}

fn check_unit(point: &[f64; 3]) -> Result<()> {
    let norm = (point[0] * point[0] + point[1] * point[1] + point[2] * point[2]).sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::NotUnitVector { norm });
    }
    Ok(())
}

/// `(cos θ, sin θ, φ)` of a unit vector.
pub(crate) fn polar_coords(point: &[f64; 3]) -> (f64, f64, f64) {
    let rho = point[0].hypot(point[1]);
    let cos_t = point[2].clamp(-1.0, 1.0);
    let phi = if rho == 0.0 {
        0.0
    } else {
        point[1].atan2(point[0])
    };
    (cos_t, rho, phi)
}

/// Evaluates `Y_{l,m}` at a point of the unit sphere.
pub fn sph_harm(index: HarmonicIndex, point: &[f64; 3]) -> Result<f64> {
    check_unit(point)?;
    let (cos_t, sin_t, phi) = polar_coords(point);
    let ell = index.ell;
    let am = index.m.unsigned_abs() as usize;
    let mut column = vec![0.0; tri_len(ell)];
    fill_normalized_alf(ell, cos_t, sin_t, &mut column);
    let p = column[tri_index(ell, am)];
    Ok(match index.m {
        0 => p,
        m if m > 0 => SQRT_2 * p * (m as f64 * phi).cos(),
        m => SQRT_2 * p * ((-m) as f64 * phi).sin(),
    })
}

/// All `Y_{l,m}(point)` for `l <= band_limit`, in flat layout.
pub fn sph_harm_all(band_limit: usize, point: &[f64; 3]) -> Result<Vec<f64>> {
    check_unit(point)?;
    let (cos_t, sin_t, phi) = polar_coords(point);
    let mut alf = vec![0.0; tri_len(band_limit)];
    fill_normalized_alf(band_limit, cos_t, sin_t, &mut alf);
    let mut out = vec![0.0; num_harmonics(band_limit)];
    for m in 0..=band_limit {
        let (s, c) = (m as f64 * phi).sin_cos();
        for ell in m..=band_limit {
            let p = alf[tri_index(ell, m)];
            if m == 0 {
                out[flat_index(ell, 0)] = p;
            } else {
                out[flat_index(ell, m as i64)] = SQRT_2 * p * c;
                out[flat_index(ell, -(m as i64))] = SQRT_2 * p * s;
            }
        }
    }
    Ok(out)
}

/// Unit vector for colatitude `theta` and longitude `phi`.
pub fn unit_vector(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}
