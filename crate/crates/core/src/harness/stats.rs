//! Descriptive statistics used to confront empirical samples with limit laws.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, DiscreteCDF, Normal, Poisson};

pub const MIN_SAMPLES: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    /// Variance over mean; zero when the mean is zero.
    pub dispersion: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ks_poisson: f64,
    pub ks_normal: f64,
    /// All samples equal.
    pub degenerate: bool,
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Large-sample standard error of the sample variance, `sqrt((m4 - s^4) / n)`.
pub fn variance_std_error(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    ((m4 - m2 * m2).max(0.0) / n).sqrt()
}

/// Sample covariance of paired observations, with a large-sample SE.
pub fn sample_covariance(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert_eq!(n, ys.len());
    if n < 2 {
        return (0.0, 0.0);
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let cov = prods.iter().sum::<f64>() / (nf - 1.0);
    let mp = prods.iter().sum::<f64>() / nf;
    let var_p = prods.iter().map(|p| (p - mp).powi(2)).sum::<f64>() / nf;
    (cov, (var_p / nf).sqrt())
}

pub fn distribution_tests(samples: &[f64]) -> Result<DistributionSummary> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("samples must be finite".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = sample_variance(samples);
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = samples.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let degenerate = m2 == 0.0;
    let (skewness, excess_kurtosis) = if degenerate {
        (0.0, 0.0)
    } else {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    };
    let dispersion = if mean == 0.0 { 0.0 } else { variance / mean };

    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(DistributionSummary {
        count: samples.len(),
        mean,
        variance,
        dispersion,
        skewness,
        excess_kurtosis,
        ks_poisson: ks_poisson(&sorted, mean),
        ks_normal: ks_normal(&sorted, mean, variance.sqrt()),
        degenerate,
    })
}

/// Kolmogorov distance between the empirical law of the (floored) sample and
/// Poisson(mean), taken over the integers.
fn ks_poisson(sorted: &[f64], mean: f64) -> f64 {
    let n = sorted.len() as f64;
    let counts: Vec<i64> = sorted.iter().map(|x| x.floor() as i64).collect();
    let cdf = |x: i64| -> f64 {
        if x < 0 {
            0.0
        } else if mean <= 0.0 {
            1.0
        } else {
            Poisson::new(mean).map(|p| p.cdf(x as u64)).unwrap_or(1.0)
        }
    };
    let lo = counts[0].min(0);
    let hi = *counts.last().unwrap();
    let mut worst: f64 = 0.0;
    let mut idx = 0;
    for x in lo..=hi {
        while idx < counts.len() && counts[idx] <= x {
            idx += 1;
        }
        worst = worst.max((idx as f64 / n - cdf(x)).abs());
    }
    // Beyond the sample maximum the empirical CDF is one.
    worst.max(1.0 - cdf(hi))
}

fn ks_normal(sorted: &[f64], mean: f64, sd: f64) -> f64 {
    let n = sorted.len() as f64;
    let normal = (sd > 0.0).then(|| Normal::new(mean, sd).expect("positive scale"));
    // Reference CDF and its left limit; a zero scale degenerates to a point mass.
    let cdf = |x: f64| match &normal {
        Some(law) => (law.cdf(x), law.cdf(x)),
        None => ((x >= mean) as u8 as f64, (x > mean) as u8 as f64),
    };
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let (right, left) = cdf(x);
        worst = worst.max((j as f64 / n - right).abs()).max((i as f64 / n - left).abs());
        i = j;
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedRecord;
    use rand_distr::{Distribution, Poisson as PoissonSampler, StandardNormal};

    #[test]
    fn poisson_samples_have_unit_dispersion() {
        let mut rng = SeedRecord::new(1).rng();
        let law = PoissonSampler::new(5.0).unwrap();
        let xs: Vec<f64> = (0..10_000).map(|_| law.sample(&mut rng)).collect();
        let s = distribution_tests(&xs).unwrap();
        assert!((0.95..=1.05).contains(&s.dispersion), "{s:?}");
        assert!(s.ks_poisson < 0.03);
    }

    #[test]
    fn constant_samples_are_degenerate() {
        let s = distribution_tests(&[3.0; 40]).unwrap();
        assert_eq!(s.dispersion, 0.0);
        assert!(s.degenerate);
        assert_eq!(s.ks_normal, 0.0);
        assert!(distribution_tests(&[0.0; 40]).unwrap().degenerate);
    }

    #[test]
    fn normal_samples_have_small_higher_moments() {
        let mut rng = SeedRecord::new(2).rng();
        let xs: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let s = distribution_tests(&xs).unwrap();
        assert!(s.skewness.abs() <= 0.08, "{s:?}");
        assert!(s.excess_kurtosis.abs() <= 0.15, "{s:?}");
        assert!(s.ks_normal < 0.02);
    }

    #[test]
    fn too_few_samples() {
        assert!(distribution_tests(&[1.0; 29]).is_err());
    }

    #[test]
    fn covariance_of_a_variable_with_itself() {
        let xs: Vec<f64> = (0..100).map(|i| (i % 7) as f64).collect();
        let (c, se) = sample_covariance(&xs, &xs);
        assert!((c - sample_variance(&xs)).abs() < 1e-12);
        assert!(se > 0.0 && (se - variance_std_error(&xs)).abs() < 1e-12);
    }
}
