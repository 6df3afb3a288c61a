//! Simulation and verification engine for isotropic Gaussian random fields on
//! the 2-sphere taking values in a (truncated) separable Hilbert space.
//!
//! The crate is organised bottom-up:
//!
//! * [`harmonics`]: Legendre polynomials, real spherical harmonics, the
//!   Gauss–Legendre sphere grid and scalar transforms.
//! * [`operators`]: operators on the truncated space, Schatten norms, tensor
//!   products and the covariance of the sample power spectrum fluctuation.
//! * [`model`]: ground-truth power spectrum operator sequences.
//! * [`sampler`]: keyed, reproducible Gaussian sampling of coefficients and fields.
//! * [`estimators`]: sample power spectrum operators and normalized statistics.
//! * [`verify`]: closed-form moments and bounds, plus the Monte Carlo harness.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod harmonics;
pub mod model;
pub mod operators;
pub mod sampler;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use nalgebra::DMatrix;
pub use estimators::{NormalizedStatistic, SamplePowerSpectrum};
pub use harmonics::{HarmonicIndex, SphericalGrid};
pub use model::{FrameMode, ReducedSpectrum, SpectralModel};
pub use operators::{CltCovariance, OperatorOnH, SymBasisElement, TruncatedSpace};
pub use sampler::{CoefficientSet, FieldRealization, Sampler, StreamKey};
pub use verify::{MonteCarloReport, TheoreticalQuantities};
