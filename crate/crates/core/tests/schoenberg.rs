use std::f64::consts::PI;

use isofield::harmonics::{sph_harm_all, unit_vector};
use isofield::model::{
    kernel_reconstruct, make_powerlaw_model, mean_square_continuity_modulus,
    power_spectrum_operator,
};
use isofield::{FrameMode, SpectralModel};
use nalgebra::DMatrix;

fn model() -> SpectralModel {
    make_powerlaw_model(24, 4, 1.0, 3.0, 2.0, FrameMode::RandomOrthogonal { seed: 9 }).unwrap()
}

fn t_grid() -> impl Iterator<Item = f64> {
    (0..201).map(|k| -1.0 + 2.0 * k as f64 / 200.0)
}

fn nuclear(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().map(|v| v.abs()).sum()
}

/// `E[T(x) ⊗ T(y)] = Σ_l F_l Σ_m Y_{l,m}(x) Y_{l,m}(y)` evaluated pointwise,
/// with `x` the north pole and `y` at polar angle `arccos t`.
fn covariance_by_harmonics(model: &SpectralModel, t: f64) -> DMatrix<f64> {
    let l = model.band_limit();
    let x = unit_vector(0.0, 0.0);
    let y = unit_vector(t.acos(), 1.3);
    let yx = sph_harm_all(l, &x).unwrap();
    let yy = sph_harm_all(l, &y).unwrap();
    let d = model.dim();
    let mut acc = DMatrix::zeros(d, d);
    for ell in 0..=l {
        let block = ell * ell..(ell + 1) * (ell + 1);
        let k: f64 = yx[block.clone()].iter().zip(&yy[block]).map(|(a, b)| a * b).sum();
        acc += power_spectrum_operator(model, ell).unwrap().entries() * k;
    }
    acc
}

#[test]
fn band_limited_reconstruction_is_exact() {
    let m = model();
    let worst = t_grid()
        .map(|t| {
            let r = kernel_reconstruct(&m, t, m.band_limit()).unwrap();
            nuclear(&(r.entries() - covariance_by_harmonics(&m, t)))
        })
        .fold(0.0, f64::max);
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn truncation_error_is_dominated_by_tail() {
    let m = model();
    for l_trunc in [0, 3, 10, 23] {
        let bound = m.tail_bound(l_trunc);
        let expected: f64 = (l_trunc + 1..=m.band_limit())
            .map(|ell| {
                let c: f64 = m.eigenvalues(ell).unwrap().iter().sum();
                c * (2 * ell + 1) as f64 / (4.0 * PI)
            })
            .sum();
        assert!((bound - expected).abs() <= 1e-15 * (1.0 + expected));
        for t in t_grid() {
            let full = kernel_reconstruct(&m, t, m.band_limit()).unwrap();
            let part = kernel_reconstruct(&m, t, l_trunc).unwrap();
            let err = nuclear(&(full.entries() - part.entries()));
            assert!(err <= bound * (1.0 + 1e-12), "L={l_trunc} t={t}: {err} > {bound}");
        }
    }
}

#[test]
fn nuclear_norm_peaks_at_zero_distance() {
    let m = model();
    let r1 = nuclear(kernel_reconstruct(&m, 1.0, m.band_limit()).unwrap().entries());
    for t in t_grid() {
        let rt = nuclear(kernel_reconstruct(&m, t, m.band_limit()).unwrap().entries());
        assert!(rt <= r1 * (1.0 + 1e-13), "t={t}");
    }
    assert!((r1 - m.field_variance()).abs() < 1e-12 * r1);
}

#[test]
fn continuity_modulus_from_kernel_trace() {
    let m = model();
    let r1 = kernel_reconstruct(&m, 1.0, m.band_limit()).unwrap().trace();
    for t in t_grid() {
        let rt = kernel_reconstruct(&m, t, m.band_limit()).unwrap().trace();
        let got = mean_square_continuity_modulus(&m, t).unwrap();
        assert!(got >= 0.0);
        assert!((got - (2.0 * r1 - 2.0 * rt)).abs() < 1e-12, "t={t}");
    }
    assert_eq!(mean_square_continuity_modulus(&m, 1.0).unwrap(), 0.0);
}
