use std::f64::consts::PI;
use std::sync::Arc;

use isofield::harmonics::{
    build_grid, gauss_legendre, legendre_all, sph_harm, sph_harm_all, unit_vector, HarmonicIndex,
};
use isofield::sampler::synthesize_field;
use isofield::estimators::analyze_field;
use isofield::CoefficientSet;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let z: f64 = rng.random_range(-1.0..1.0);
    unit_vector(z.acos(), rng.random_range(0.0..2.0 * PI))
}

fn dot(x: &[f64; 3], y: &[f64; 3]) -> f64 {
    (x[0] * y[0] + x[1] * y[1] + x[2] * y[2]).clamp(-1.0, 1.0)
}

#[test]
fn addition_formula_up_to_degree_64() {
    let l_max = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = random_point(&mut rng);
        let y = random_point(&mut rng);
        let yx = sph_harm_all(l_max, &x).unwrap();
        let yy = sph_harm_all(l_max, &y).unwrap();
        let p = legendre_all(l_max, dot(&x, &y)).unwrap();
        for ell in 0..=l_max {
            let block = ell * ell..(ell + 1) * (ell + 1);
            let lhs: f64 = yx[block.clone()].iter().zip(&yy[block]).map(|(a, b)| a * b).sum();
            let rhs = (2 * ell + 1) as f64 / (4.0 * PI) * p.get(ell);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    assert!(worst <= 1e-10, "max error {worst:e}");
}

#[test]
fn low_degree_closed_forms() {
    let (theta, phi) = (0.7, 2.1);
    let x = unit_vector(theta, phi);
    let c = (3.0 / (4.0 * PI)).sqrt();
    let q = 0.25 * (15.0 / PI).sqrt();
    let cases = [
        (1, 0, c * theta.cos()),
        (1, 1, c * theta.sin() * phi.cos()),
        (1, -1, c * theta.sin() * phi.sin()),
        (2, 2, q * theta.sin().powi(2) * (2.0 * phi).cos()),
        (2, -2, q * theta.sin().powi(2) * (2.0 * phi).sin()),
        (2, 0, 0.25 * (5.0 / PI).sqrt() * (3.0 * theta.cos().powi(2) - 1.0)),
    ];
    for (ell, m, expected) in cases {
        let got = sph_harm(HarmonicIndex::new(ell, m).unwrap(), &x).unwrap();
        assert!((got - expected).abs() < 1e-14, "({ell},{m}): {got} vs {expected}");
    }
}

/// Composite Simpson in θ against a uniform rule in φ, which is exact for the
/// trigonometric polynomials of degree < n_phi arising here.
#[test]
fn unit_norm_by_independent_quadrature() {
    let idx = HarmonicIndex::new(3, 2).unwrap();
    let n_theta = 2000;
    let n_phi = 16;
    let h = PI / n_theta as f64;
    let mut total = 0.0;
    for i in 0..=n_theta {
        let theta = i as f64 * h;
        let w = if i == 0 || i == n_theta {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let ring: f64 = (0..n_phi)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / n_phi as f64;
                sph_harm(idx, &unit_vector(theta, phi)).unwrap().powi(2)
            })
            .sum::<f64>()
            * 2.0
            * PI
            / n_phi as f64;
        total += w * ring * theta.sin();
    }
    total *= h / 3.0;
    assert!((total - 1.0).abs() < 1e-10, "{total}");
}

#[test]
fn legendre_orthogonality_by_gauss_rule() {
    let l_max = 40;
    let (nodes, weights) = gauss_legendre(l_max + 1);
    let tables: Vec<_> = nodes.iter().map(|&z| legendre_all(l_max, z).unwrap()).collect();
    for a in 0..=l_max {
        for b in 0..=a {
            let s: f64 = tables
                .iter()
                .zip(&weights)
                .map(|(t, w)| w * t.get(a) * t.get(b))
                .sum();
            let expected = if a == b { 2.0 / (2 * a + 1) as f64 } else { 0.0 };
            assert!((s - expected).abs() < 1e-12, "({a},{b}) {s}");
        }
    }
}

#[test]
fn vector_round_trip_band_16_dim_4() {
    let (band, d) = (16, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let values: Vec<f64> = (0..(band + 1) * (band + 1) * d)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let coeffs = CoefficientSet::from_vec(band, d, values).unwrap();
    let grid = Arc::new(build_grid(band).unwrap());
    let field = synthesize_field(&coeffs, grid).unwrap();
    assert_eq!(field.as_slice().len(), (band + 1) * (2 * band + 1) * d);
    let back = analyze_field(&field, band).unwrap();
    let err = back
        .as_slice()
        .iter()
        .zip(coeffs.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-10, "{err:e}");
}

#[test]
fn quadrature_integrates_products_exactly() {
    // Y_a · Y_b has degree <= 2L, inside the exactness range of the grid.
    let band = 6;
    let grid = build_grid(band).unwrap();
    let tables: Vec<Vec<f64>> = grid
        .nodes()
        .iter()
        .map(|x| sph_harm_all(band, x).unwrap())
        .collect();
    let n = (band + 1) * (band + 1);
    for a in 0..n {
        for b in 0..n {
            let s: Vec<f64> = tables.iter().map(|t| t[a] * t[b]).collect();
            let got = grid.integrate(&s).unwrap();
            let expected = if a == b { 1.0 } else { 0.0 };
            assert!((got - expected).abs() < 1e-12, "({a},{b}) {got}");
        }
    }
}

proptest! {
    #[test]
    fn legendre_bounded(z in -1.0f64..=1.0, l_max in 0usize..300) {
        let p = legendre_all(l_max, z).unwrap();
        for ell in 0..=l_max {
            prop_assert!(p.get(ell).abs() <= 1.0 + 1e-13);
        }
        prop_assert!((legendre_all(l_max, 1.0).unwrap().get(l_max) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn degree_sum_is_constant(theta in 0.0f64..PI, phi in 0.0f64..(2.0 * PI), ell in 0usize..80) {
        // Unsöld: Σ_m Y_{l,m}(x)² = (2l+1)/(4π) at every point.
        let y = sph_harm_all(ell, &unit_vector(theta, phi)).unwrap();
        let s: f64 = y[ell * ell..].iter().map(|v| v * v).sum();
        prop_assert!((s - (2 * ell + 1) as f64 / (4.0 * PI)).abs() < 1e-11);
    }
}
