//! Real spherical harmonics, Legendre polynomials and an exact quadrature
//! grid with scalar transforms.

mod grid;
mod legendre;
mod transform;
mod ylm;

pub use grid::{build_grid, build_grid_with_limit, SphericalGrid, DEFAULT_MAX_BAND_LIMIT};
pub use legendre::{gauss_legendre, legendre_all, LegendreValues};
pub use transform::{analyze_scalar, synthesize_scalar, synthesize_scalar_on_grid, ScalarCoefficients};
pub use ylm::{flat_index, num_harmonics, sph_harm, sph_harm_all, unit_vector, HarmonicIndex};

pub(crate) use legendre::fill_legendre;
pub(crate) use transform::{analyze_columns, synthesize_columns};
