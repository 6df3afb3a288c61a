//! Legendre polynomials and Gauss–Legendre nodes.

use crate::error::{Error, Result};

/// `P_0(z), ..., P_degree_max(z)` at a single argument.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreValues {
    pub degree_max: usize,
    pub argument: f64,
    pub values: Vec<f64>,
}

impl LegendreValues {
    pub fn get(&self, ell: usize) -> f64 {
        self.values[ell]
    }
}

/// Evaluates every Legendre polynomial up to `degree_max` at `z` with the
/// Bonnet recurrence `(n+1) P_{n+1} = (2n+1) z P_n - n P_{n-1}`.
pub fn legendre_all(degree_max: usize, z: f64) -> Result<LegendreValues> {
    if !(-1.0..=1.0).contains(&z) {
        return Err(Error::ArgumentOutOfDomain { value: z });
    }
    let mut values = vec![0.0; degree_max + 1];
    fill_legendre(z, &mut values);
    Ok(LegendreValues {
        degree_max,
        argument: z,
        values,
    })
}

/// Writes `P_0(z)..P_{n-1}(z)` into `out`. No domain check.
pub(crate) fn fill_legendre(z: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    out[1] = z;
    for n in 1..out.len() - 1 {
        let nf = n as f64;
        out[n + 1] = ((2.0 * nf + 1.0) * z * out[n] - nf * out[n - 1]) / (nf + 1.0);
    }
}

/// `P_n(z)` and `P'_n(z)` for the Newton iteration below.
fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * z * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    let nf = n as f64;
    let dp = nf * (z * p - p_prev) / (z * z - 1.0);
    (p, dp)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes in increasing order.
///
/// Newton iteration from Tricomi's initial guess; weights from
/// `2 / ((1 - x^2) P'_n(x)^2)`. Symmetry is enforced exactly.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    if n == 0 {
        return (nodes, weights);
    }
    let nf = n as f64;
    let half = n.div_ceil(2);
    for i in 0..half {
        // i-th largest root
        let theta = std::f64::consts::PI * (4.0 * i as f64 + 3.0) / (4.0 * nf + 2.0);
        let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}
