use std::f64::consts::PI;

use super::legendre::gauss_legendre;
use super::ylm::unit_vector;
use crate::error::{Error, Result};

/// Largest band limit `build_grid` accepts.
pub const DEFAULT_MAX_BAND_LIMIT: usize = 2048;

/// Gauss–Legendre rings in `cos θ` times equispaced longitudes.
///
/// Nodes are stored ring-major: node `i * n_phi + k` sits on ring `i` at
/// longitude `phi[k]`. Integrates every product `Y_{l,m} Y_{l',m'}` with
/// `l, l' <= band_limit` exactly.
#[derive(Debug, Clone)]
pub struct SphericalGrid {
    band_limit: usize,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    theta: Vec<f64>,
    ring_weights: Vec<f64>,
    phi: Vec<f64>,
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl SphericalGrid {
    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn n_rings(&self) -> usize {
        self.cos_theta.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phi.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    pub fn sin_theta(&self) -> &[f64] {
        &self.sin_theta
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Gauss weight of ring `i` times the longitude spacing.
    pub fn ring_weight(&self, ring: usize) -> f64 {
        self.ring_weights[ring]
    }

    /// `(θ, φ)` of node `i`.
    pub fn angles(&self, node: usize) -> (f64, f64) {
        let n_phi = self.n_phi();
        (self.theta[node / n_phi], self.phi[node % n_phi])
    }

    /// Quadrature of a sampled integrand.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: samples.len(),
            });
        }
        Ok(self.weights.iter().zip(samples).map(|(w, f)| w * f).sum())
    }
}

pub fn build_grid(band_limit: usize) -> Result<SphericalGrid> {
    build_grid_with_limit(band_limit, DEFAULT_MAX_BAND_LIMIT)
}

pub fn build_grid_with_limit(band_limit: usize, max_band_limit: usize) -> Result<SphericalGrid> {
    if band_limit > max_band_limit {
        return Err(Error::BandLimitTooLarge {
            requested: band_limit,
            max: max_band_limit,
        });
    }
    let n_theta = band_limit + 1;
    let n_phi = 2 * band_limit + 1;
    let (cos_theta, gl_weights) = gauss_legendre(n_theta);
    let sin_theta: Vec<f64> = cos_theta.iter().map(|c| (1.0 - c * c).sqrt()).collect();
    let theta: Vec<f64> = cos_theta.iter().map(|c| c.acos()).collect();
    let dphi = 2.0 * PI / n_phi as f64;
    let phi: Vec<f64> = (0..n_phi).map(|k| k as f64 * dphi).collect();
    let ring_weights: Vec<f64> = gl_weights.iter().map(|w| w * dphi).collect();

    let mut nodes = Vec::with_capacity(n_theta * n_phi);
    let mut weights = Vec::with_capacity(n_theta * n_phi);
    for (i, &t) in theta.iter().enumerate() {
        for &p in &phi {
            let mut v = unit_vector(t, p);
            // keep the exact Gauss abscissa as z
            v[2] = cos_theta[i];
            nodes.push(v);
            weights.push(ring_weights[i]);
        }
    }
    Ok(SphericalGrid {
        band_limit,
        cos_theta,
        sin_theta,
        theta,
        ring_weights,
        phi,
        nodes,
        weights,
    })
}
