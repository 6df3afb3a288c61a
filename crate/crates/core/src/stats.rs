//! Small statistics toolkit for the Monte Carlo checks.

use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

/// Standard normal deviate from 64 random bits via the inverse CDF.
///
/// The top 52 bits give `u = (k + 1/2) / 2^52`, exactly representable and
/// strictly inside `(0, 1)`, so the result is always finite.
#[inline]
pub fn normal_from_bits(bits: u64) -> f64 {
    let u = ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64);
    std_normal_quantile(u)
}

/// Inverse of the standard normal CDF on `(0, 1)`, evaluated on the tail
/// closest to `u` so both tails keep full relative resolution.
#[inline]
pub fn std_normal_quantile(u: f64) -> f64 {
    if u < 0.5 {
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
    } else {
        std::f64::consts::SQRT_2 * erfc_inv(2.0 * (1.0 - u))
    }
}

/// Standard normal CDF.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Neumaier-compensated sum; order of the input is the only thing that
/// affects the result.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(values: &[f64]) -> f64 {
    let mu = mean(values);
    compensated_sum(values.iter().map(|x| (x - mu) * (x - mu))) / (values.len() as f64 - 1.0)
}

/// Point estimate with a batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// `|value − target| <= k · se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.se
    }
}

/// Contiguous split of `n` items into `batches` near-equal ranges.
pub fn batch_ranges(n: usize, batches: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    (0..batches).map(move |b| (b * n / batches)..((b + 1) * n / batches))
}

/// Mean of `values` with the standard error taken from the spread of
/// `batches` contiguous batch means.
pub fn batch_mean(values: &[f64], batches: usize) -> Result<Estimate> {
    if batches < 2 || values.len() < batches {
        return Err(Error::TooFewSamples {
            required: batches.max(2),
            actual: values.len(),
        });
    }
    let means: Vec<f64> = batch_ranges(values.len(), batches)
        .map(|r| mean(&values[r]))
        .collect();
    Ok(Estimate {
        value: mean(values),
        se: (sample_variance(&means) / batches as f64).sqrt(),
    })
}

/// Population-form fourth cumulant `m₄ − 3m₂²` of centered samples.
fn cumulant4_point(samples: &[f64]) -> (f64, f64) {
    let mu = mean(samples);
    let n = samples.len() as f64;
    let m2 = compensated_sum(samples.iter().map(|x| (x - mu).powi(2))) / n;
    let m4 = compensated_sum(samples.iter().map(|x| (x - mu).powi(4))) / n;
    (m4 - 3.0 * m2 * m2, m2)
}

/// Fourth cumulant estimate `m₄ − 3m₂²` with a standard error from `⌊√n⌋`
/// batches. The standard error is NaN when fewer than 16 samples are given.
pub fn empirical_cumulant4(samples: &[f64]) -> Result<Estimate> {
    if samples.len() < 4 {
        return Err(Error::TooFewSamples {
            required: 4,
            actual: samples.len(),
        });
    }
    let (value, m2) = cumulant4_point(samples);
    if !(m2 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let batches = samples.len().isqrt();
    let se = if batches >= 4 {
        let per_batch: Vec<f64> = batch_ranges(samples.len(), batches)
            .map(|r| cumulant4_point(&samples[r]).0)
            .collect();
        (sample_variance(&per_batch) / batches as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(Estimate { value, se })
}

/// Two-sided Kolmogorov–Smirnov distance between the empirical CDF of the
/// samples and the standard normal CDF.
pub fn ks_to_standard_normal(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            actual: samples.len(),
        });
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("NaN sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = std_normal_cdf(x);
            let above = (i + 1) as f64 / n - cdf;
            let below = cdf - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max);
    Ok(d.clamp(0.0, 1.0))
}
