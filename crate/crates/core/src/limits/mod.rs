//! Limit-law constants, integrals over configuration space, and simulators
//! for the limiting processes.

mod cluster;
mod process;
mod series;

pub use cluster::{sample_tree, tree_density};
pub use process::{simulate_v, simulate_v_family, simulate_v_pm, simulate_y, PathKind, ProcessPath, VPaths, YSimulator};
pub use series::{
    mu_integral, mu_tail_bound, xi_integral, xi_tail_bound, z_covariance, z_mean, SeriesEstimate, SeriesParams,
};

use crate::error::{Error, Result};
use crate::estimate::{halton, monte_carlo_mean, LimitEstimate, Method, PRIMES};
use crate::geometry::{ball_volume, sphere_area, uniform_in_ball};
use crate::oracles::hole_thresholds;
use crate::seed::SeedRecord;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::factorial;

/// Dimension, homological degree and tail exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub k: usize,
    pub alpha: f64,
}

impl ModelParams {
    pub fn new(d: usize, k: usize, alpha: f64) -> Result<Self> {
        if d < 1 || k < 1 {
            return Err(Error::InvalidArgument(format!("need d >= 1 and k >= 1, got d = {d}, k = {k}")));
        }
        if !(alpha * (k + 2) as f64 > d as f64) {
            return Err(Error::InvalidArgument(format!(
                "alpha (k+2) = {} must exceed d = {d}",
                alpha * (k + 2) as f64
            )));
        }
        Ok(ModelParams { d, k, alpha })
    }

    /// Number of free points in a minimal hole configuration.
    pub fn free_points(&self) -> usize {
        self.k + 1
    }

    /// Exponent of `t` in the time change of the regime-I and II limits.
    pub fn time_exponent(&self) -> i32 {
        (self.d * (self.k + 1)) as i32
    }
}

/// `s_{d-1} / ((k+2)! (alpha (k+2) - d))`.
pub fn c_k(d: usize, k: usize, alpha: f64) -> Result<f64> {
    let p = ModelParams::new(d, k, alpha)?;
    Ok(sphere_area(d) / (factorial((k + 2) as u64) * (p.alpha * (k + 2) as f64 - d as f64)))
}

/// Which integrand over `(y_1, ..., y_{k+1})` with the first point at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum IntegralKind {
    Hole,
    HolePlus,
    HoleMinus,
    /// `h_t h_s`.
    HolePair { s: f64 },
}

impl IntegralKind {
    /// Radius of a ball around the origin containing every free point on the
    /// support of the integrand.
    fn support_radius(&self, t: f64) -> f64 {
        match *self {
            IntegralKind::HolePair { s } => t.min(s),
            _ => t,
        }
    }

    fn eval(&self, plus: f64, minus: f64, t: f64) -> bool {
        let h = |t: f64| plus <= t && t < minus;
        match *self {
            IntegralKind::Hole => h(t),
            IntegralKind::HolePlus => plus <= t,
            IntegralKind::HoleMinus => minus <= t,
            IntegralKind::HolePair { s } => h(t) && h(s),
        }
    }
}

fn configuration_thresholds(params: &ModelParams, coords: &[f64]) -> (f64, f64) {
    let d = params.d;
    let origin = vec![0.0; d];
    let mut pts: Vec<&[f64]> = Vec::with_capacity(params.k + 2);
    pts.push(&origin);
    pts.extend(coords.chunks_exact(d));
    let th = hole_thresholds(&pts, params.k).expect("arity fixed by construction");
    (th.plus, th.minus)
}

/// Monte Carlo estimate of `int h(0, y) dy` over `(R^d)^{k+1}`.
pub fn indicator_integral(
    kind: IntegralKind,
    params: &ModelParams,
    t: f64,
    mc_samples: u64,
    seed: SeedRecord,
) -> Result<LimitEstimate> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t = {t} must be non-negative")));
    }
    if let IntegralKind::HolePair { s } = kind {
        if !(s >= 0.0) {
            return Err(Error::InvalidArgument(format!("s = {s} must be non-negative")));
        }
    }
    let radius = kind.support_radius(t);
    if radius == 0.0 {
        return Ok(LimitEstimate::exact(0.0, Method::ClosedForm));
    }
    if mc_samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let d = params.d;
    let m = params.free_points();
    let volume = (ball_volume(d) * radius.powi(d as i32)).powi(m as i32);
    let origin = vec![0.0; d];
    let (mean, se) = monte_carlo_mean(mc_samples, seed, |rng| {
        let mut coords = vec![0.0; m * d];
        for c in coords.chunks_exact_mut(d) {
            uniform_in_ball(rng, &origin, radius, c);
        }
        let (plus, minus) = configuration_thresholds(params, &coords);
        kind.eval(plus, minus, t) as u8 as f64
    });
    Ok(LimitEstimate::monte_carlo(volume * mean, volume * se, mc_samples, seed))
}

/// Quasi-random (Halton) estimate of the same integral over the cube
/// `[-L, L]^{d (k+1)}` enclosing the support. Deterministic; no error bar.
pub fn indicator_integral_qmc(kind: IntegralKind, params: &ModelParams, t: f64, points: u64) -> Result<f64> {
    let radius = kind.support_radius(t);
    if radius == 0.0 {
        return Ok(0.0);
    }
    let d = params.d;
    let m = params.free_points();
    let dims = m * d;
    if dims > PRIMES.len() {
        return Err(Error::InvalidArgument(format!("quasi-random rule supports at most {} dimensions", PRIMES.len())));
    }
    let mut coords = vec![0.0; dims];
    let mut hits = 0u64;
    for idx in 1..=points {
        for (a, c) in coords.iter_mut().enumerate() {
            *c = radius * (2.0 * halton(idx, PRIMES[a]) - 1.0);
        }
        let inside = coords.chunks_exact(d).all(|p| p.iter().map(|x| x * x).sum::<f64>() <= radius * radius);
        if inside {
            let (plus, minus) = configuration_thresholds(params, &coords);
            hits += kind.eval(plus, minus, t) as u64;
        }
    }
    Ok((2.0 * radius).powi(dims as i32) * hits as f64 / points as f64)
}

/// Monte Carlo estimate of `int l_t(0, y) l_s(0, y) dy`, or of `int l_t(0, y) dy`
/// when `s` is `None`, where `l_t = (min(h-threshold, t) - h+threshold)_+` is the
/// time a configuration spends carrying its hole before `t`.
pub fn lifetime_integral(
    params: &ModelParams,
    t: f64,
    s: Option<f64>,
    mc_samples: u64,
    seed: SeedRecord,
) -> Result<LimitEstimate> {
    if !(t >= 0.0) || s.is_some_and(|s| !(s >= 0.0)) {
        return Err(Error::InvalidArgument("times must be non-negative".into()));
    }
    let radius = s.map_or(t, |s| t.min(s));
    if radius == 0.0 {
        return Ok(LimitEstimate::exact(0.0, Method::ClosedForm));
    }
    if mc_samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let d = params.d;
    let m = params.free_points();
    let volume = (ball_volume(d) * radius.powi(d as i32)).powi(m as i32);
    let origin = vec![0.0; d];
    let (mean, se) = monte_carlo_mean(mc_samples, seed, |rng| {
        let mut coords = vec![0.0; m * d];
        for c in coords.chunks_exact_mut(d) {
            uniform_in_ball(rng, &origin, radius, c);
        }
        let (plus, minus) = configuration_thresholds(params, &coords);
        let held = |u: f64| (minus.min(u) - plus).max(0.0);
        match s {
            Some(s) => held(t) * held(s),
            None => held(t),
        }
    });
    Ok(LimitEstimate::monte_carlo(volume * mean, volume * se, mc_samples, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn plane() -> ModelParams {
        ModelParams::new(2, 1, 4.0).unwrap()
    }

    #[test]
    fn c_k_values() {
        assert!((c_k(2, 1, 4.0).unwrap() - PI / 30.0).abs() < 1e-15);
        assert!((c_k(3, 1, 5.0).unwrap() - PI / 18.0).abs() < 1e-15);
        assert!(c_k(2, 1, 2.0 / 3.0).is_err());
    }

    #[test]
    fn zero_time_is_exact_zero() {
        let e = indicator_integral(IntegralKind::Hole, &plane(), 0.0, 1000, SeedRecord::new(1)).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.method, Method::ClosedForm);
    }

    #[test]
    fn decomposition_holds_in_expectation() {
        let p = plane();
        let seed = SeedRecord::new(5);
        // Common random numbers make the decomposition exact sample by sample.
        let h = indicator_integral(IntegralKind::Hole, &p, 1.0, 50_000, seed).unwrap();
        let hp = indicator_integral(IntegralKind::HolePlus, &p, 1.0, 50_000, seed).unwrap();
        let hm = indicator_integral(IntegralKind::HoleMinus, &p, 1.0, 50_000, seed).unwrap();
        assert!((h.value - (hp.value - hm.value)).abs() < 1e-9);
        let pair = indicator_integral(IntegralKind::HolePair { s: 1.0 }, &p, 1.0, 50_000, seed).unwrap();
        assert!((pair.value - h.value).abs() < 1e-9);
    }

    #[test]
    fn plus_part_in_closed_form() {
        // For k = 1, h+ at t = 1 is |y1|, |y2|, |y1 - y2| <= 1:
        // pi * (pi - 3 sqrt(3) / 4) from the unit-disk overlap area integrated over y1.
        let exact = PI * (PI - 3.0 * 3f64.sqrt() / 4.0);
        let e = indicator_integral(IntegralKind::HolePlus, &plane(), 1.0, 200_000, SeedRecord::new(9)).unwrap();
        assert!((e.value - exact).abs() <= 3.0 * e.std_error, "{} vs {exact}", e.value);
    }

    #[test]
    fn qmc_matches_monte_carlo() {
        let p = plane();
        let mc = indicator_integral(IntegralKind::HoleMinus, &p, 1.0, 50_000, SeedRecord::new(3)).unwrap();
        let qmc = indicator_integral_qmc(IntegralKind::HoleMinus, &p, 1.0, 200_000).unwrap();
        assert!((mc.value - qmc).abs() <= 3.0 * mc.std_error);
    }

    #[test]
    fn lifetime_kernel_integrates_the_indicator() {
        // int_0^t h_u du = l_t, so int l_t dy = int_0^t int h_u dy du = int h_1 dy * t^5 / 5 at t = 1.
        let p = plane();
        let l = lifetime_integral(&p, 1.0, None, 100_000, SeedRecord::new(21)).unwrap();
        let h = indicator_integral(IntegralKind::Hole, &p, 1.0, 100_000, SeedRecord::new(22)).unwrap();
        let target = h.scaled(1.0 / (p.time_exponent() + 1) as f64);
        assert!(l.agrees_with(&target, 3.0), "{l:?} vs {target:?}");
        let sq = lifetime_integral(&p, 1.0, Some(1.0), 50_000, SeedRecord::new(23)).unwrap();
        assert!(sq.value <= l.value);
    }

    #[test]
    fn independent_seeds_agree() {
        let p = plane();
        let a = indicator_integral(IntegralKind::Hole, &p, 1.0, 40_000, SeedRecord::new(1)).unwrap();
        let b = indicator_integral(IntegralKind::Hole, &p, 1.0, 40_000, SeedRecord::new(2)).unwrap();
        assert!(a.agrees_with(&b, 3.0));
    }
}
