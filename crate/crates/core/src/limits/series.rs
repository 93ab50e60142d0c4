//! Component-size series of the weak-core regime: the `mu` and `xi`
//! integrals, the truncated mean and covariance series, and explicit bounds
//! on the discarded tail.

use super::cluster::{sample_tree, tree_density};
use super::ModelParams;
use crate::error::{Error, Result};
use crate::estimate::{monte_carlo_mean, LimitEstimate, Method};
use crate::geometry::{ball_volume, dist2, sphere_area, uniform_in_ball};
use crate::oracles::{balls_union_volume_mc, component_status, disk_union_area, ComponentStatus};
use crate::seed::SeedRecord;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesParams {
    pub model: ModelParams,
    pub lambda: f64,
    /// Outer radius multiplier of the localization annulus; `inf` allowed.
    pub k_loc: f64,
    /// Inner Monte Carlo samples per `mu` term.
    pub samples: u64,
    /// Inner Monte Carlo samples per `xi` term.
    pub xi_samples: u64,
    /// Hit-count samples per union volume outside the plane.
    pub volume_samples: u64,
    pub seed: SeedRecord,
}

impl SeriesParams {
    pub fn new(model: ModelParams, lambda: f64, k_loc: f64, seed: SeedRecord) -> Self {
        SeriesParams {
            model,
            lambda,
            k_loc,
            samples: 20_000,
            xi_samples: 5_000,
            volume_samples: 4_000,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda = {} must be finite and >= 0", self.lambda)));
        }
        if !(self.k_loc >= 1.0) {
            return Err(Error::InvalidArgument(format!("K = {} must be at least 1", self.k_loc)));
        }
        if self.samples < 2 || self.xi_samples < 2 {
            return Err(Error::InvalidArgument("need at least two inner samples".into()));
        }
        Ok(())
    }
}

/// `int_1^K rho^{-e-1} exp(-a rho^{-alpha}) d rho` with `e = exponent`.
/// With `v = rho^{-alpha}` this is a difference of incomplete gamma functions.
fn radial_factor(a: f64, exponent: f64, alpha: f64, k_loc: f64) -> f64 {
    let c = exponent / alpha;
    let lower = if k_loc.is_infinite() { 0.0 } else { k_loc.powf(-alpha) };
    if a < 1e-150 {
        return (1.0 - lower.powf(c)) / exponent;
    }
    let al = a * lower;
    let diff = if al > c {
        gamma_ur(c, al) - gamma_ur(c, a)
    } else {
        gamma_lr(c, a) - if al > 0.0 { gamma_lr(c, al) } else { 0.0 }
    };
    (ln_gamma(c) - c * a.ln()).exp() * diff.max(0.0) / alpha
}

fn union_volume_of<R: Rng + ?Sized>(centers: &[&[f64]], radii: &[f64], samples: u64, rng: &mut R) -> f64 {
    if centers[0].len() == 2 {
        disk_union_area(centers, radii)
    } else {
        balls_union_volume_mc(centers, radii, samples, rng).0
    }
}

fn check_indices(model: &ModelParams, sizes: &[usize], t: f64, s: f64) -> Result<()> {
    for &i in sizes {
        if i < model.k + 2 {
            return Err(Error::InvalidArgument(format!("component size {i} is below k+2 = {}", model.k + 2)));
        }
        if i > 12 {
            return Err(Error::InvalidArgument(format!("component size {i} exceeds the supported cap of 12")));
        }
    }
    let total: usize = sizes.iter().sum();
    if !(model.alpha * total as f64 > model.d as f64) {
        return Err(Error::InvalidArgument("radial integral diverges: alpha i <= d".into()));
    }
    if !(t >= 0.0 && s >= 0.0) {
        return Err(Error::InvalidArgument("t and s must be non-negative".into()));
    }
    Ok(())
}

fn flat_points(coords: &[f64], d: usize) -> Vec<&[f64]> {
    coords.chunks_exact(d).collect()
}

/// `mu` with a general weight on the pair of component statuses at `t` and `s`.
fn mu_weighted<W>(i: usize, t: f64, s: f64, params: &SeriesParams, seed: SeedRecord, weight: W) -> Result<LimitEstimate>
where
    W: Fn(&ComponentStatus, &ComponentStatus) -> f64 + Sync,
{
    params.validate()?;
    let model = &params.model;
    check_indices(model, &[i], t, s)?;
    let r = t.min(s);
    if r == 0.0 || params.k_loc == 1.0 {
        return Ok(LimitEstimate::exact(0.0, Method::ClosedForm));
    }
    let d = model.d;
    let k = model.k;
    let exponent = model.alpha * i as f64 - d as f64;
    let surface = sphere_area(d);
    let big = t.max(s);
    let origin = vec![0.0; d];
    let (mean, se) = monte_carlo_mean(params.samples, seed, |rng: &mut ChaCha8Rng| {
        let mut coords = vec![0.0; i * d];
        sample_tree(rng, &origin, i - 1, r, &mut coords[d..]);
        let q = tree_density(&origin, &coords[d..], r);
        let pts = flat_points(&coords, d);
        let st_t = component_status(&pts, t, k);
        if !st_t.connected {
            return 0.0;
        }
        let st_s = if s == t { st_t } else { component_status(&pts, s, k) };
        let w = weight(&st_t, &st_s);
        if w == 0.0 {
            return 0.0;
        }
        let a = if params.lambda == 0.0 {
            0.0
        } else {
            params.lambda * union_volume_of(&pts, &vec![big; i], params.volume_samples, rng)
        };
        surface * w * radial_factor(a, exponent, model.alpha, params.k_loc) / q
    });
    Ok(LimitEstimate::monte_carlo(mean, se, params.samples, seed))
}

/// `mu^{(i, j, j')}_k(t, s, lambda; K)`.
pub fn mu_integral(i: usize, j: usize, jp: usize, t: f64, s: f64, params: &SeriesParams) -> Result<LimitEstimate> {
    let seed = params.seed.named(&format!("mu/{i}/{j}/{jp}"));
    mu_weighted(i, t, s, params, seed, |a, b| (a.indicator(j) && b.indicator(jp)) as u8 as f64)
}

/// Draws the second cluster: one of its points uniformly in the ball of
/// radius `reach` around a uniformly chosen point of the first cluster, the
/// rest as a tree of step `s` around it. Returns the proposal density.
fn sample_second_cluster<R: Rng + ?Sized>(
    rng: &mut R,
    first: &[f64],
    ip: usize,
    reach: f64,
    s: f64,
    d: usize,
    out: &mut [f64],
) {
    let i = first.len() / d;
    let anchor = rng.random_range(0..i);
    let root = rng.random_range(0..ip);
    let mut root_point = vec![0.0; d];
    uniform_in_ball(rng, &first[anchor * d..(anchor + 1) * d], reach, &mut root_point);
    let mut rest = vec![0.0; (ip - 1) * d];
    sample_tree(rng, &root_point, ip - 1, s, &mut rest);
    let mut src = rest.chunks_exact(d);
    for v in 0..ip {
        let dst = &mut out[v * d..(v + 1) * d];
        if v == root {
            dst.copy_from_slice(&root_point);
        } else {
            dst.copy_from_slice(src.next().unwrap());
        }
    }
}

fn second_cluster_density(first: &[f64], second: &[f64], reach: f64, s: f64, d: usize) -> f64 {
    let i = first.len() / d;
    let ip = second.len() / d;
    let cell = ball_volume(d) * reach.powi(d as i32);
    let mut total = 0.0;
    let mut rest = Vec::with_capacity((ip - 1) * d);
    for root in 0..ip {
        let rp = &second[root * d..(root + 1) * d];
        let near = first.chunks_exact(d).filter(|a| dist2(a, rp) <= reach * reach).count();
        if near == 0 {
            continue;
        }
        rest.clear();
        for v in (0..ip).filter(|&v| v != root) {
            rest.extend_from_slice(&second[v * d..(v + 1) * d]);
        }
        total += near as f64 / (i as f64 * cell) * tree_density(rp, &rest, s);
    }
    total / ip as f64
}

fn xi_weighted<W>(i: usize, ip: usize, t: f64, s: f64, params: &SeriesParams, seed: SeedRecord, weight: W) -> Result<LimitEstimate>
where
    W: Fn(&ComponentStatus, &ComponentStatus) -> f64 + Sync,
{
    params.validate()?;
    let model = &params.model;
    check_indices(model, &[i, ip], t, s)?;
    if t == 0.0 || s == 0.0 || params.k_loc == 1.0 {
        return Ok(LimitEstimate::exact(0.0, Method::ClosedForm));
    }
    let d = model.d;
    let k = model.k;
    let exponent = model.alpha * (i + ip) as f64 - d as f64;
    let surface = sphere_area(d);
    let reach = (t + s) + (ip - 1) as f64 * s;
    let near = t.max(s);
    let origin = vec![0.0; d];
    let (mean, se) = monte_carlo_mean(params.xi_samples, seed, |rng: &mut ChaCha8Rng| {
        let mut c1 = vec![0.0; i * d];
        sample_tree(rng, &origin, i - 1, t, &mut c1[d..]);
        let mut c2 = vec![0.0; ip * d];
        sample_second_cluster(rng, &c1, ip, reach, s, d, &mut c2);
        let q = tree_density(&origin, &c1[d..], t) * second_cluster_density(&c1, &c2, reach, s, d);
        let p1 = flat_points(&c1, d);
        let p2 = flat_points(&c2, d);
        let touch = (t + s) * (t + s);
        let close = near * near;
        let mut overlap = false;
        let mut very_close = false;
        for a in &p1 {
            for b in &p2 {
                let dd = dist2(a, b);
                overlap |= dd <= touch;
                very_close |= dd <= close;
            }
        }
        if !overlap {
            return 0.0;
        }
        let st1 = component_status(&p1, t, k);
        if !st1.connected {
            return 0.0;
        }
        let st2 = component_status(&p2, s, k);
        let w = weight(&st1, &st2);
        if w == 0.0 {
            return 0.0;
        }
        let lam = params.lambda;
        let (joint, separate) = if lam == 0.0 {
            (0.0, 0.0)
        } else {
            let mut all = p1.clone();
            all.extend(p2.iter().copied());
            let mut radii = vec![t; i];
            radii.extend(std::iter::repeat_n(s, ip));
            let u = union_volume_of(&all, &radii, params.volume_samples, rng);
            let v1 = union_volume_of(&p1, &vec![t; i], params.volume_samples, rng);
            let v2 = union_volume_of(&p2, &vec![s; ip], params.volume_samples, rng);
            (lam * u, lam * (v1 + v2))
        };
        let mut bracket = -radial_factor(separate, exponent, model.alpha, params.k_loc);
        if !very_close {
            bracket += radial_factor(joint, exponent, model.alpha, params.k_loc);
        }
        surface * w * bracket / q
    });
    Ok(LimitEstimate::monte_carlo(mean, se, params.xi_samples, seed))
}

/// `xi^{(i, j, i', j')}_k(t, s, lambda; K)`.
pub fn xi_integral(
    i: usize,
    j: usize,
    ip: usize,
    jp: usize,
    t: f64,
    s: f64,
    params: &SeriesParams,
) -> Result<LimitEstimate> {
    let seed = params.seed.named(&format!("xi/{i}/{j}/{ip}/{jp}"));
    xi_weighted(i, ip, t, s, params, seed, |a, b| (a.indicator(j) && b.indicator(jp)) as u8 as f64)
}

/// One term of a truncated series, with its prefactor already applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub sizes: Vec<usize>,
    pub estimate: LimitEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesEstimate {
    pub value: LimitEstimate,
    /// Explicit upper bound on the absolute value of the discarded tail.
    pub remainder_bound: f64,
    pub terms: Vec<SeriesTerm>,
}

fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

fn combine(terms: Vec<SeriesTerm>, remainder_bound: f64, seed: SeedRecord) -> SeriesEstimate {
    let value: f64 = terms.iter().map(|t| t.estimate.value).sum();
    let var: f64 = terms.iter().map(|t| t.estimate.std_error.powi(2)).sum();
    let samples = terms.iter().map(|t| t.estimate.samples).sum();
    SeriesEstimate {
        value: LimitEstimate {
            value,
            std_error: var.sqrt(),
            method: Method::MonteCarlo,
            samples,
            seed: Some(seed),
        },
        remainder_bound,
        terms,
    }
}

fn check_truncation(model: &ModelParams, m: usize) -> Result<()> {
    if m < model.k + 2 {
        return Err(Error::InvalidArgument(format!("truncation M = {m} is below k+2 = {}", model.k + 2)));
    }
    Ok(())
}

/// Truncated limit of `R^{-d} Cov(beta(t; K), beta(s; K))`: components of up
/// to `m` points, hole counts weighted by `j j'`.
pub fn z_covariance(t: f64, s: f64, m: usize, params: &SeriesParams) -> Result<SeriesEstimate> {
    params.validate()?;
    let model = params.model;
    check_truncation(&model, m)?;
    let lam = params.lambda;
    let mut terms = Vec::new();
    for i in model.k + 2..=m {
        let pref = (i as f64 * lam.ln() - ln_factorial(i)).exp();
        let seed = params.seed.named(&format!("cov-mu/{i}"));
        let e = mu_weighted(i, t, s, params, seed, |a, b| (a.weight() * b.weight()) as f64)?;
        terms.push(SeriesTerm {
            sizes: vec![i],
            estimate: e.scaled(pref),
        });
    }
    for i in model.k + 2..=m {
        for ip in model.k + 2..=m {
            let pref = ((i + ip) as f64 * lam.ln() - ln_factorial(i) - ln_factorial(ip)).exp();
            if pref == 0.0 {
                terms.push(SeriesTerm {
                    sizes: vec![i, ip],
                    estimate: LimitEstimate::exact(0.0, Method::ClosedForm),
                });
                continue;
            }
            let seed = params.seed.named(&format!("cov-xi/{i}/{ip}"));
            let e = xi_weighted(i, ip, t, s, params, seed, |a, b| (a.weight() * b.weight()) as f64)?;
            terms.push(SeriesTerm {
                sizes: vec![i, ip],
                estimate: e.scaled(pref),
            });
        }
    }
    let bound = mu_tail_bound(&model, lam, t, s, m, true) + xi_tail_bound(&model, lam, t, s, m);
    Ok(combine(terms, bound, params.seed))
}

/// Truncated limit of `R^{-d} E beta(t; K)`.
pub fn z_mean(t: f64, m: usize, params: &SeriesParams) -> Result<SeriesEstimate> {
    params.validate()?;
    let model = params.model;
    check_truncation(&model, m)?;
    let lam = params.lambda;
    let mut terms = Vec::new();
    for i in model.k + 2..=m {
        let pref = (i as f64 * lam.ln() - ln_factorial(i)).exp();
        let seed = params.seed.named(&format!("mean-mu/{i}"));
        let e = mu_weighted(i, t, t, params, seed, |a, _| a.weight() as f64)?;
        terms.push(SeriesTerm {
            sizes: vec![i],
            estimate: e.scaled(pref),
        });
    }
    let bound = mu_tail_bound(&model, lam, t, t, m, false);
    Ok(combine(terms, bound, params.seed))
}

/// Log of the bound on `int 1{connected at r} dy` over `i - 1` free points:
/// `i^{i-2} (omega_d r^d)^{i-1}` (labeled spanning trees).
fn ln_tree_volume(i: usize, r: f64, d: usize) -> f64 {
    (i as f64 - 2.0) * (i as f64).ln() + (i as f64 - 1.0) * (ball_volume(d) * r.powi(d as i32)).ln()
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

const TAIL_CAP: usize = 4000;

/// Bound on `sum_{i > m} lambda^i / i! * sum_{j, j'} j j' |mu^{(i,j,j')}|`
/// (or with weight `j` only when `squared` is false).
pub fn mu_tail_bound(model: &ModelParams, lambda: f64, t: f64, s: f64, m: usize, squared: bool) -> f64 {
    let (d, k) = (model.d, model.k);
    let r = t.min(s);
    if lambda == 0.0 || r == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut prev = f64::INFINITY;
    for i in (m + 1).max(k + 2)..TAIL_CAP {
        let holes = ln_binomial(i, k + 2) * if squared { 2.0 } else { 1.0 };
        let ln_term = i as f64 * lambda.ln() - ln_factorial(i) + (sphere_area(d) / (model.alpha * i as f64 - d as f64)).ln()
            + holes
            + ln_tree_volume(i, r, d);
        let term = ln_term.exp();
        total += term;
        if term < 1e-18 * total && term < prev {
            return total;
        }
        prev = term;
    }
    f64::INFINITY
}

/// Bound on the `xi` part of the covariance series over index pairs with
/// `max(i, i') > m`.
pub fn xi_tail_bound(model: &ModelParams, lambda: f64, t: f64, s: f64, m: usize) -> f64 {
    let (d, k) = (model.d, model.k);
    if lambda == 0.0 || t == 0.0 || s == 0.0 {
        return 0.0;
    }
    let omega = ball_volume(d);
    let ln_contact = (omega * (t + s).powi(d as i32)).ln();
    let lo = k + 2;
    let single = |i: usize, r: f64| -> f64 {
        i as f64 * lambda.ln() - ln_factorial(i) + ln_binomial(i, k + 2) + (i as f64).ln() + ln_tree_volume(i, r, d)
    };
    // Rows decay geometrically; stop once a whole row is negligible.
    let mut total = 0.0;
    for i in lo..TAIL_CAP {
        let mut row = 0.0;
        let mut prev = f64::INFINITY;
        for ip in lo..TAIL_CAP {
            if i <= m && ip <= m {
                continue;
            }
            let ln_term = single(i, t) + single(ip, s) + ln_contact
                + (sphere_area(d) / (model.alpha * (i + ip) as f64 - d as f64)).ln();
            let term = ln_term.exp();
            row += term;
            if ip > m && term < 1e-18 * (row + total) && term < prev {
                break;
            }
            prev = term;
            if ip == TAIL_CAP - 1 {
                return f64::INFINITY;
            }
        }
        total += row;
        if i > m && row < 1e-18 * total {
            return total;
        }
    }
    f64::INFINITY
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::{c_k, indicator_integral, IntegralKind};
    use statrs::function::factorial::factorial;

    fn params(lambda: f64, k_loc: f64, seed: u64) -> SeriesParams {
        let mut p = SeriesParams::new(ModelParams::new(2, 1, 4.0).unwrap(), lambda, k_loc, SeedRecord::new(seed));
        p.samples = 40_000;
        p.xi_samples = 4_000;
        p
    }

    #[test]
    fn radial_factor_closed_forms() {
        // a = 0: int_1^inf rho^{-e-1} d rho = 1/e.
        assert!((radial_factor(0.0, 10.0, 4.0, f64::INFINITY) - 0.1).abs() < 1e-15);
        assert_eq!(radial_factor(3.0, 10.0, 4.0, 1.0), 0.0);
        // Direct quadrature in rho for a > 0.
        let direct = crate::quadrature::adaptive(|r: f64| r.powf(-11.0) * (-0.7 * r.powf(-4.0)).exp(), 1.0, 10.0, 1e-14);
        let got = radial_factor(0.7, 10.0, 4.0, 10.0);
        assert!((got - direct).abs() < 1e-12, "{got} vs {direct}");
    }

    #[test]
    fn mu_at_zero_intensity_matches_hole_constant() {
        let p = params(0.0, f64::INFINITY, 11);
        let mu = mu_integral(3, 1, 1, 1.0, 1.0, &p).unwrap();
        let h = indicator_integral(IntegralKind::Hole, &p.model, 1.0, 100_000, SeedRecord::new(12)).unwrap();
        let target = h.scaled(c_k(2, 1, 4.0).unwrap() * factorial(3));
        assert!(mu.agrees_with(&target, 3.0), "{mu:?} vs {target:?}");
    }

    #[test]
    fn mu_vanishes_on_empty_annulus_and_decreases_in_lambda() {
        let p = params(0.1, 1.0, 1);
        assert_eq!(mu_integral(3, 1, 1, 1.0, 1.0, &p).unwrap().value, 0.0);
        let lo = mu_integral(3, 1, 1, 1.0, 1.0, &params(0.1, f64::INFINITY, 2)).unwrap();
        let hi = mu_integral(3, 1, 1, 1.0, 1.0, &params(0.0, f64::INFINITY, 3)).unwrap();
        assert!(lo.value <= hi.value + 3.0 * lo.std_error.hypot(hi.std_error));
    }

    #[test]
    fn xi_is_symmetric_under_cluster_swap() {
        let p = params(0.05, 10.0, 5);
        let a = xi_integral(3, 1, 4, 1, 1.0, 0.5, &p).unwrap();
        let b = xi_integral(4, 1, 3, 1, 0.5, 1.0, &params(0.05, 10.0, 6)).unwrap();
        assert!(a.agrees_with(&b, 3.0), "{a:?} vs {b:?}");
    }

    #[test]
    fn xi_relative_error_and_seed_consistency() {
        let mut p = params(0.05, 10.0, 7);
        p.xi_samples = 1_000_000;
        let a = xi_integral(3, 1, 3, 1, 1.0, 1.0, &p).unwrap();
        p.seed = SeedRecord::new(8);
        let b = xi_integral(3, 1, 3, 1, 1.0, 1.0, &p).unwrap();
        assert!(a.std_error / a.value.abs() <= 0.1, "{a:?}");
        assert!(a.agrees_with(&b, 3.0));
    }

    #[test]
    fn xi_without_overlap_is_zero() {
        let p = params(0.0, 10.0, 9);
        assert_eq!(xi_integral(3, 1, 3, 1, 0.0, 1.0, &p).unwrap().value, 0.0);
    }

    #[test]
    fn variance_is_nonnegative_and_tails_shrink() {
        let p = params(0.05, 10.0, 10);
        let v = z_covariance(1.0, 1.0, 4, &p).unwrap();
        assert!(v.value.value >= -3.0 * v.value.std_error);
        let model = p.model;
        let mut prev = f64::INFINITY;
        for m in 3..12 {
            let b = mu_tail_bound(&model, 0.05, 1.0, 1.0, m, true) + xi_tail_bound(&model, 0.05, 1.0, 1.0, m);
            assert!(b.is_finite() && b < prev);
            prev = b;
        }
        assert!(z_covariance(1.0, 1.0, 2, &p).is_err());
    }

    #[test]
    fn lowest_order_at_small_intensity() {
        // As lambda -> 0 the covariance is dominated by lambda^{k+2}/(k+2)! mu.
        let lam = 1e-4;
        let p = params(lam, f64::INFINITY, 13);
        let v = z_covariance(1.0, 1.0, 3, &p).unwrap();
        let h = indicator_integral(IntegralKind::Hole, &p.model, 1.0, 100_000, SeedRecord::new(14)).unwrap();
        let target = h.scaled(c_k(2, 1, 4.0).unwrap() * lam.powi(3));
        let scaled = v.value.clone();
        assert!(scaled.agrees_with(&target, 3.0), "{scaled:?} vs {target:?}");
    }
}
