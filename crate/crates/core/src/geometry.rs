//! Small Euclidean helpers shared by the sampler, the filtration and the
//! Monte Carlo integrators.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Surface area of the unit sphere S^{d-1} in R^d.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

/// Volume of the unit ball in R^d.
pub fn ball_volume(d: usize) -> f64 {
    sphere_area(d) / d as f64
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Writes a uniformly distributed unit vector into `out`.
pub fn uniform_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut s = 0.0;
        for x in out.iter_mut() {
            *x = StandardNormal.sample(rng);
            s += *x * *x;
        }
        if s > 1e-300 {
            let inv = 1.0 / s.sqrt();
            out.iter_mut().for_each(|x| *x *= inv);
            return;
        }
    }
}

/// Writes a point uniform in the ball `B(center; radius)` into `out`.
pub fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, center: &[f64], radius: f64, out: &mut [f64]) {
    let d = out.len();
    uniform_direction(rng, out);
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / d as f64);
    for (o, c) in out.iter_mut().zip(center) {
        *o = c + r * *o;
    }
}

/// Flat, borrowed view of `len` points in R^dim.
#[derive(Clone, Copy, Debug)]
pub struct PointsView<'a> {
    pub dim: usize,
    pub coords: &'a [f64],
}

impl<'a> PointsView<'a> {
    pub fn new(dim: usize, coords: &'a [f64]) -> Self {
        debug_assert!(dim > 0 && coords.len() % dim == 0);
        PointsView { dim, coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &'a [f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &'a [f64]> + 'a {
        self.coords.chunks_exact(self.dim)
    }
}
