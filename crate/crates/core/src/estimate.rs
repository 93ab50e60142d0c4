//! Numeric estimates with attached standard errors, and a deterministic
//! block-parallel Monte Carlo driver.

use crate::seed::SeedRecord;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: Method,
    pub samples: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<SeedRecord>,
}

impl LimitEstimate {
    pub fn exact(value: f64, method: Method) -> Self {
        LimitEstimate {
            value,
            std_error: 0.0,
            method,
            samples: 0,
            seed: None,
        }
    }

    pub fn monte_carlo(value: f64, std_error: f64, samples: u64, seed: SeedRecord) -> Self {
        LimitEstimate {
            value,
            std_error,
            method: Method::MonteCarlo,
            samples,
            seed: Some(seed),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        LimitEstimate {
            value: self.value * factor,
            std_error: self.std_error * factor.abs(),
            ..self.clone()
        }
    }

    /// `|self - other|` in units of the combined standard error.
    pub fn z_against(&self, other: &LimitEstimate) -> f64 {
        let se = self.std_error.hypot(other.std_error);
        let diff = (self.value - other.value).abs();
        if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn agrees_with(&self, other: &LimitEstimate, sigmas: f64) -> bool {
        (self.value - other.value).abs() <= sigmas * self.std_error.hypot(other.std_error)
    }
}

/// First and second moments of a vector-valued sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: Vec<f64>,
    /// Row-major `dim x dim` sums of products.
    pub cross: Vec<f64>,
}

impl Moments {
    pub fn new(dim: usize) -> Self {
        Moments {
            count: 0,
            sum: vec![0.0; dim],
            cross: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.sum.len()
    }

    pub fn push(&mut self, x: &[f64]) {
        let d = self.dim();
        self.count += 1;
        for a in 0..d {
            self.sum[a] += x[a];
            if x[a] != 0.0 {
                for b in 0..d {
                    self.cross[a * d + b] += x[a] * x[b];
                }
            }
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum.iter_mut().zip(&other.sum).for_each(|(a, b)| *a += b);
        self.cross.iter_mut().zip(&other.cross).for_each(|(a, b)| *a += b);
    }

    pub fn mean(&self, a: usize) -> f64 {
        self.sum[a] / self.count as f64
    }

    /// `E[x_a x_b]`.
    pub fn second(&self, a: usize, b: usize) -> f64 {
        self.cross[a * self.dim() + b] / self.count as f64
    }

    /// Unbiased sample covariance.
    pub fn covariance(&self, a: usize, b: usize) -> f64 {
        let n = self.count as f64;
        (self.cross[a * self.dim() + b] - self.sum[a] * self.sum[b] / n) / (n - 1.0)
    }

    /// Standard error of the mean of component `a`.
    pub fn std_error(&self, a: usize) -> f64 {
        (self.covariance(a, a).max(0.0) / self.count as f64).sqrt()
    }
}

/// Samples per independently seeded block.
pub const BLOCK: u64 = 4096;

/// Runs `samples` draws of a vector-valued estimator in fixed-size blocks,
/// each with its own child seed, and reduces the blocks in index order.
/// The result does not depend on the number of worker threads.
pub fn monte_carlo<F>(samples: u64, dim: usize, seed: SeedRecord, draw: F) -> Moments
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let blocks = samples.div_ceil(BLOCK);
    let partial: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed.child(b).rng();
            let n = BLOCK.min(samples - b * BLOCK);
            let mut m = Moments::new(dim);
            let mut x = vec![0.0; dim];
            for _ in 0..n {
                x.iter_mut().for_each(|v| *v = 0.0);
                draw(&mut rng, &mut x);
                m.push(&x);
            }
            m
        })
        .collect();
    let mut total = Moments::new(dim);
    for m in &partial {
        total.merge(m);
    }
    total
}

/// Scalar convenience wrapper around [`monte_carlo`]: returns (mean, SE).
pub fn monte_carlo_mean<F>(samples: u64, seed: SeedRecord, draw: F) -> (f64, f64)
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let m = monte_carlo(samples, 1, seed, |rng, x| x[0] = draw(rng));
    (m.mean(0), m.std_error(0))
}

/// Radical inverse of `index` in the given prime base (Halton coordinate).
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let inv = 1.0 / base as f64;
    while index > 0 {
        f *= inv;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

pub const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
