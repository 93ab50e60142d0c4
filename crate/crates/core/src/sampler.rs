//! Heavy-tailed Poisson point clouds and the three regime radii.
//!
//! The random model is an inhomogeneous Poisson process on R^d with intensity
//! `n f`, where `f` is spherically symmetric with a regularly varying tail.
//! Only the power-law family `f(x) = C / (1 + |x|^alpha)` is provided, but the
//! sampler and the regime solver only talk to the [`RadialDensity`] trait.

use crate::error::{Error, Result};
use crate::geometry::{norm, sphere_area, uniform_direction, PointsView};
use crate::quadrature;
use crate::seed::SeedRecord;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

/// A spherically symmetric density on R^d, described through its radial profile.
pub trait RadialDensity: Send + Sync {
    fn dim(&self) -> usize;

    /// Tail exponent: `f(r t e1) / f(r e1) -> t^{-alpha}`.
    fn tail_exponent(&self) -> f64;

    /// `f(r e1)`.
    fn density_at_radius(&self, r: f64) -> f64;

    /// `P(|X| > r)`.
    fn radial_survival(&self, r: f64) -> f64;

    /// `P(|X| <= r)`.
    fn radial_cdf(&self, r: f64) -> f64 {
        1.0 - self.radial_survival(r)
    }

    /// Density of `|X|`.
    fn radial_pdf(&self, r: f64) -> f64 {
        sphere_area(self.dim()) * r.powi(self.dim() as i32 - 1) * self.density_at_radius(r)
    }

    /// Radius `r` with `P(|X| > r) = p`, for `p` in (0, 1].
    fn radius_with_survival(&self, p: f64) -> f64;
}

/// The power-law density `f(x) = C / (1 + |x|^alpha)` on R^d.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "DensitySpecRaw", into = "DensitySpecRaw")]
pub struct DensitySpec {
    d: usize,
    alpha: f64,
    c: f64,
    #[serde(skip)]
    table: RadialTable,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct DensitySpecRaw {
    d: usize,
    alpha: f64,
    #[serde(default, rename = "C", skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
}

impl TryFrom<DensitySpecRaw> for DensitySpec {
    type Error = Error;
    fn try_from(raw: DensitySpecRaw) -> Result<Self> {
        match raw.c {
            Some(c) => DensitySpec::with_normalizer(raw.d, raw.alpha, c),
            None => DensitySpec::power_law(raw.d, raw.alpha),
        }
    }
}

impl From<DensitySpec> for DensitySpecRaw {
    fn from(s: DensitySpec) -> Self {
        DensitySpecRaw {
            d: s.d,
            alpha: s.alpha,
            c: Some(s.c),
        }
    }
}

impl PartialEq for DensitySpec {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.alpha == other.alpha && self.c == other.c
    }
}

/// Normalizing constant of `C / (1 + |x|^alpha)` on R^d.
///
/// Uses `int_0^inf r^{d-1} / (1 + r^alpha) dr = (pi / alpha) / sin(pi d / alpha)`.
pub fn power_law_normalizer(d: usize, alpha: f64) -> f64 {
    alpha * (PI * d as f64 / alpha).sin() / (PI * sphere_area(d))
}

impl DensitySpec {
    /// Normalized power-law density.
    pub fn power_law(d: usize, alpha: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidSpec(format!("dimension must be at least 2, got {d}")));
        }
        if !(alpha > d as f64) || !alpha.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "tail exponent alpha = {alpha} must exceed d = {d}"
            )));
        }
        Self::with_normalizer(d, alpha, power_law_normalizer(d, alpha))
    }

    /// Power-law density with an explicit normalizer, checked by quadrature.
    pub fn with_normalizer(d: usize, alpha: f64, c: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidSpec(format!("dimension must be at least 2, got {d}")));
        }
        if !(alpha > d as f64) || !alpha.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "tail exponent alpha = {alpha} must exceed d = {d}"
            )));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidSpec(format!("normalizer C = {c} must be positive")));
        }
        let mut spec = DensitySpec {
            d,
            alpha,
            c,
            table: RadialTable::default(),
        };
        let mass = spec.total_mass_by_quadrature();
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidSpec(format!(
                "radial density integrates to {mass}, not 1 (C = {c})"
            )));
        }
        spec.table = RadialTable::build(&spec);
        Ok(spec)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn normalizer(&self) -> f64 {
        self.c
    }

    /// `int_0^inf s_{d-1} C r^{d-1} / (1 + r^alpha) dr`, evaluated numerically.
    pub fn total_mass_by_quadrature(&self) -> f64 {
        let s = sphere_area(self.d);
        let (d, a, c) = (self.d as f64, self.alpha, self.c);
        let inner = quadrature::adaptive(|r| s * c * r.powf(d - 1.0) / (1.0 + r.powf(a)), 0.0, 1.0, 1e-13);
        // r = x^{-1}, x = y^{1/(alpha-d)} turns the tail into a smooth integrand on [0, 1].
        let e = 1.0 / (a - d);
        let outer = quadrature::adaptive(
            |y| {
                let x = y.powf(e);
                s * c * e / (1.0 + x.powf(a))
            },
            0.0,
            1.0,
            1e-13,
        );
        inner + outer
    }

    /// Asymptotic weak-core radius `(C n)^{1/alpha}`.
    pub fn weak_core_radius(&self, n: f64) -> f64 {
        (self.c * n).powf(1.0 / self.alpha)
    }

    fn beta_shape(&self) -> f64 {
        self.d as f64 / self.alpha
    }
}

impl RadialDensity for DensitySpec {
    fn dim(&self) -> usize {
        self.d
    }

    fn tail_exponent(&self) -> f64 {
        self.alpha
    }

    fn density_at_radius(&self, r: f64) -> f64 {
        self.c / (1.0 + r.abs().powf(self.alpha))
    }

    fn radial_survival(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 1.0;
        }
        // v = r^a / (1 + r^a) maps |X| to a Beta(d/a, 1 - d/a) variable.
        let a = self.beta_shape();
        let ra = r.powf(self.alpha);
        if !ra.is_finite() {
            return 0.0;
        }
        let w = 1.0 / (1.0 + ra);
        if w <= 0.0 {
            return 0.0;
        }
        beta_reg(1.0 - a, a, w)
    }

    fn radial_cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let a = self.beta_shape();
        let ra = r.powf(self.alpha);
        if ra > 1.0 {
            return 1.0 - self.radial_survival(r);
        }
        beta_reg(a, 1.0 - a, ra / (1.0 + ra))
    }

    fn radius_with_survival(&self, p: f64) -> f64 {
        self.table.invert(self, p)
    }
}

/// Monotone table of `(log S(r), log r)` used as the starting point for Newton
/// inversion of the radial survival function.
#[derive(Clone, Debug, Default)]
struct RadialTable {
    log_s: Vec<f64>,
    log_r: Vec<f64>,
    /// Constant of the tail asymptote `S(r) ~ tail_coef r^{d-alpha}`.
    tail_coef: f64,
}

const TABLE_NODES: usize = 2048;
const TABLE_TAIL_SURVIVAL: f64 = 1e-6;

impl RadialTable {
    fn build(spec: &DensitySpec) -> Self {
        let (d, a) = (spec.d as f64, spec.alpha);
        let tail_coef = sphere_area(spec.d) * spec.c / (a - d);
        let r_hi = (tail_coef / (0.5 * TABLE_TAIL_SURVIVAL)).powf(1.0 / (a - d));
        let r_lo = 1e-6f64;
        let (lo, hi) = (r_lo.ln(), r_hi.ln());
        let mut log_s = Vec::with_capacity(TABLE_NODES);
        let mut log_r = Vec::with_capacity(TABLE_NODES);
        for i in 0..TABLE_NODES {
            let lr = lo + (hi - lo) * i as f64 / (TABLE_NODES - 1) as f64;
            let s = spec.radial_survival(lr.exp());
            if s <= 0.0 {
                break;
            }
            log_s.push(s.ln());
            log_r.push(lr);
        }
        RadialTable {
            log_s,
            log_r,
            tail_coef,
        }
    }

    fn invert(&self, spec: &DensitySpec, p: f64) -> f64 {
        if p >= 1.0 {
            return 0.0;
        }
        if p <= 0.0 {
            return f64::INFINITY;
        }
        let lp = p.ln();
        let (d, a) = (spec.d as f64, spec.alpha);
        let n = self.log_s.len();
        let start = if n >= 2 && lp <= self.log_s[0] && lp >= self.log_s[n - 1] {
            // log_s is decreasing.
            let idx = self.log_s.partition_point(|&s| s > lp).clamp(1, n - 1);
            let (s0, s1) = (self.log_s[idx - 1], self.log_s[idx]);
            let (r0, r1) = (self.log_r[idx - 1], self.log_r[idx]);
            let w = if s1 != s0 { (lp - s0) / (s1 - s0) } else { 0.0 };
            (r0 + w * (r1 - r0)).exp()
        } else if n >= 1 && lp > self.log_s[0] {
            // Near the origin S(r) ~ 1 - C omega_d r^d.
            let omega = sphere_area(spec.d) / d;
            ((1.0 - p) / (spec.c * omega)).powf(1.0 / d).max(1e-300)
        } else {
            (self.tail_coef / p).powf(1.0 / (a - d))
        };
        newton_survival(spec, p, start)
    }
}

/// Solves `S(r) = p` by safeguarded Newton iteration on `log S`.
fn newton_survival(spec: &DensitySpec, p: f64, start: f64) -> f64 {
    let target = p.ln();
    let mut lo = 0.0f64;
    let mut hi = f64::INFINITY;
    let mut r = start;
    for _ in 0..200 {
        let s = spec.radial_survival(r);
        if s > p {
            lo = lo.max(r);
        } else {
            hi = hi.min(r);
        }
        if s <= 0.0 {
            r = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * r.max(1.0) };
            continue;
        }
        // d log S / dr = -pdf(r) / S(r)
        let slope = -spec.radial_pdf(r) / s;
        let step = (s.ln() - target) / slope;
        let mut next = r - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * r.max(1e-300) };
        }
        if (next - r).abs() <= 1e-15 * r.max(1e-300) {
            return next;
        }
        r = next;
    }
    r
}

/// Reproducible realization of the Poisson process (or a restriction of it).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub dim: usize,
    pub coords: Vec<f64>,
    /// Intensity scale `n` of the generating process.
    pub n: f64,
    /// Realized Poisson count that produced this cloud, before any restriction.
    pub poisson_count: usize,
    pub seed: SeedRecord,
}

impl PointCloud {
    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Self {
        let coords: Vec<f64> = points.iter().flat_map(|p| p.iter().copied()).collect();
        assert!(points.iter().all(|p| p.len() == dim));
        PointCloud {
            dim,
            coords,
            n: points.len() as f64,
            poisson_count: points.len(),
            seed: SeedRecord::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn view(&self) -> PointsView<'_> {
        PointsView::new(self.dim, &self.coords)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let header: Vec<String> = (1..=self.dim).map(|i| format!("x{i}")).collect();
        wr.write_record(&header)?;
        for p in self.coords.chunks_exact(self.dim) {
            wr.write_record(p.iter().map(|x| format!("{x:.17e}")))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads a cloud written by [`write_csv`](Self::write_csv): a header row
    /// followed by one point per row.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let dim = rd.headers()?.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("cloud CSV has no columns".into()));
        }
        let mut coords = Vec::new();
        for (row, rec) in rd.records().enumerate() {
            let rec = rec?;
            if rec.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "row {} has {} columns, expected {dim}",
                    row + 2,
                    rec.len()
                )));
            }
            for field in rec.iter() {
                let x: f64 = field.trim().parse().map_err(|_| {
                    Error::InvalidArgument(format!("row {}: cannot parse '{field}'", row + 2))
                })?;
                if !x.is_finite() {
                    return Err(Error::InvalidArgument(format!("row {}: non-finite coordinate", row + 2)));
                }
                coords.push(x);
            }
        }
        let count = coords.len() / dim;
        Ok(PointCloud {
            dim,
            coords,
            n: count as f64,
            poisson_count: count,
            seed: SeedRecord::default(),
        })
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

fn check_intensity(n: f64) -> Result<()> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument(format!("intensity n = {n} must be positive")));
    }
    Ok(())
}

fn push_radial_point<R: Rng + ?Sized, D: RadialDensity + ?Sized>(
    rng: &mut R,
    density: &D,
    survival_scale: f64,
    dir: &mut [f64],
    coords: &mut Vec<f64>,
) {
    // 1 - U lies in (0, 1], so p never hits zero.
    let u: f64 = rng.random();
    let p = survival_scale * (1.0 - u);
    let r = density.radius_with_survival(p);
    uniform_direction(rng, dir);
    coords.extend(dir.iter().map(|x| r * x));
}

/// One point drawn from the density, written into `out`.
pub fn sample_point<R: Rng + ?Sized, D: RadialDensity + ?Sized>(rng: &mut R, density: &D, out: &mut [f64]) {
    let u: f64 = rng.random();
    let r = density.radius_with_survival(1.0 - u);
    uniform_direction(rng, out);
    out.iter_mut().for_each(|x| *x *= r);
}

/// Draws `N ~ Poisson(n)` and then `N` iid points from the density.
pub fn sample_cloud<D: RadialDensity + ?Sized>(density: &D, n: f64, seed: SeedRecord) -> Result<PointCloud> {
    check_intensity(n)?;
    let mut rng = seed.rng();
    let count = Poisson::new(n)
        .map_err(|e| Error::InvalidArgument(format!("Poisson({n}): {e}")))?
        .sample(&mut rng) as usize;
    let d = density.dim();
    let mut coords = Vec::with_capacity(count * d);
    let mut dir = vec![0.0; d];
    for _ in 0..count {
        push_radial_point(&mut rng, density, 1.0, &mut dir, &mut coords);
    }
    Ok(PointCloud {
        dim: d,
        coords,
        n,
        poisson_count: count,
        seed,
    })
}

/// Samples the restriction of the process to `{|x| >= radius}` directly.
///
/// Equal in law to `restrict_outside(sample_cloud(..), radius)`, but costs
/// time proportional to the expected number of surviving points.
pub fn sample_cloud_outside<D: RadialDensity + ?Sized>(
    density: &D,
    n: f64,
    radius: f64,
    seed: SeedRecord,
) -> Result<PointCloud> {
    check_intensity(n)?;
    if !(radius >= 0.0) {
        return Err(Error::InvalidArgument(format!("radius {radius} must be non-negative")));
    }
    let tail = density.radial_survival(radius);
    let mut rng = seed.rng();
    let mean = n * tail;
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::InvalidArgument(format!("Poisson({mean}): {e}")))?
            .sample(&mut rng) as usize
    } else {
        0
    };
    let d = density.dim();
    let mut coords = Vec::with_capacity(count * d);
    let mut dir = vec![0.0; d];
    for _ in 0..count {
        push_radial_point(&mut rng, density, tail, &mut dir, &mut coords);
    }
    Ok(PointCloud {
        dim: d,
        coords,
        n,
        poisson_count: count,
        seed,
    })
}

/// Keeps exactly the points with Euclidean norm at least `radius`, in order.
pub fn restrict_outside(cloud: &PointCloud, radius: f64) -> PointCloud {
    let coords = cloud
        .coords
        .chunks_exact(cloud.dim)
        .filter(|p| norm(p) >= radius)
        .flatten()
        .copied()
        .collect();
    PointCloud {
        dim: cloud.dim,
        coords,
        n: cloud.n,
        poisson_count: cloud.poisson_count,
        seed: cloud.seed,
    }
}

/// Growth class of the cutoff radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "I")]
    Sparse,
    #[serde(rename = "II")]
    Intermediate,
    #[serde(rename = "III")]
    WeakCore,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Sparse => "I",
            Regime::Intermediate => "II",
            Regime::WeakCore => "III",
        })
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" | "1" => Ok(Regime::Sparse),
            "II" | "ii" | "2" => Ok(Regime::Intermediate),
            "III" | "iii" | "3" => Ok(Regime::WeakCore),
            _ => Err(Error::InvalidArgument(format!("unknown regime '{s}'"))),
        }
    }
}

/// Upper end of the admissible interpolation exponents for regime II:
/// `n f(R e1) = n^{-gamma}` keeps `n^{k+2} R^d f(R e1)^{k+2} -> inf` only for
/// `gamma < d / (alpha (k+2) - d)`.
pub fn regime_two_gamma_limit(d: usize, alpha: f64, k: usize) -> f64 {
    d as f64 / (alpha * (k + 2) as f64 - d as f64)
}

/// Default regime-II exponent: the midpoint of the admissible interval.
pub fn default_regime_two_gamma(d: usize, alpha: f64, k: usize) -> f64 {
    0.5 * regime_two_gamma_limit(d, alpha, k)
}

/// Resolved regime: its tag, parameters and cutoff radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub regime: Regime,
    pub n: f64,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub radius: f64,
}

impl RegimeSpec {
    pub fn resolve<D: RadialDensity + ?Sized>(
        density: &D,
        regime: Regime,
        n: f64,
        k: usize,
        lambda: Option<f64>,
        gamma: Option<f64>,
    ) -> Result<Self> {
        let gamma = match regime {
            Regime::Intermediate => Some(gamma.unwrap_or_else(|| {
                default_regime_two_gamma(density.dim(), density.tail_exponent(), k)
            })),
            _ => None,
        };
        let lambda = match regime {
            Regime::WeakCore => lambda,
            _ => None,
        };
        let radius = regime_radius(density, regime, n, k, lambda, gamma)?;
        Ok(RegimeSpec {
            regime,
            n,
            k,
            lambda,
            gamma,
            radius,
        })
    }

    /// `rho_n = n^{k+2} R^d f(R e1)^{k+2}`, the expected number of minimal
    /// hole configurations outside the cutoff ball (up to constants).
    pub fn rho<D: RadialDensity + ?Sized>(&self, density: &D) -> f64 {
        sparse_scale(density, self.n, self.k, self.radius)
    }
}

/// `n^{k+2} R^d f(R e1)^{k+2}`.
pub fn sparse_scale<D: RadialDensity + ?Sized>(density: &D, n: f64, k: usize, radius: f64) -> f64 {
    let kk = (k + 2) as f64;
    (kk * n.ln() + density.dim() as f64 * radius.ln() + kk * density.density_at_radius(radius).ln()).exp()
}

/// Solves the defining equation of the regime exactly at the given `n` by
/// bisection on `[1, n]`.
///
/// * I: `n^{k+2} R^d f(R e1)^{k+2} = 1`
/// * II: `n f(R e1) = n^{-gamma}`
/// * III: `n f(R e1) = lambda`
pub fn regime_radius<D: RadialDensity + ?Sized>(
    density: &D,
    regime: Regime,
    n: f64,
    k: usize,
    lambda: Option<f64>,
    gamma: Option<f64>,
) -> Result<f64> {
    check_intensity(n)?;
    let d = density.dim() as f64;
    let kk = (k + 2) as f64;
    let ln_n = n.ln();
    let g: Box<dyn Fn(f64) -> f64 + '_> = match regime {
        Regime::Sparse => {
            if k < 1 {
                return Err(Error::InvalidArgument("degree k must be at least 1".into()));
            }
            Box::new(move |r: f64| kk * ln_n + d * r.ln() + kk * density.density_at_radius(r).ln())
        }
        Regime::Intermediate => {
            let gamma = gamma.ok_or_else(|| Error::InvalidArgument("regime II needs gamma".into()))?;
            let limit = regime_two_gamma_limit(density.dim(), density.tail_exponent(), k);
            if !(gamma > 0.0 && gamma < limit) {
                return Err(Error::InvalidArgument(format!(
                    "regime II exponent gamma = {gamma} must lie in (0, {limit})"
                )));
            }
            Box::new(move |r: f64| (1.0 + gamma) * ln_n + density.density_at_radius(r).ln())
        }
        Regime::WeakCore => {
            let lambda = lambda.ok_or_else(|| Error::InvalidArgument("regime III needs lambda".into()))?;
            if !(lambda > 0.0) {
                return Err(Error::InvalidArgument(format!("lambda = {lambda} must be positive")));
            }
            let ln_l = lambda.ln();
            Box::new(move |r: f64| ln_n + density.density_at_radius(r).ln() - ln_l)
        }
    };
    let (mut lo, mut hi) = (1.0f64, n.max(1.0));
    let (g_lo, g_hi) = (g(lo), g(hi));
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(Error::NoBracket {
            regime: regime.to_string(),
            n,
            reason: format!("defining function is {g_lo:.3e} at R = 1 and {g_hi:.3e} at R = n"),
        });
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = if g(lo).abs() <= g(hi).abs() { lo } else { hi };
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ball_volume;

    fn spec() -> DensitySpec {
        DensitySpec::power_law(2, 4.0).unwrap()
    }

    #[test]
    fn normalizer_matches_closed_form() {
        let s = spec();
        assert!((s.normalizer() - 2.0 / (PI * PI)).abs() < 1e-15);
        assert!((s.total_mass_by_quadrature() - 1.0).abs() < 1e-10);
        for (d, a) in [(2, 2.5), (3, 4.0), (3, 7.5), (5, 6.0)] {
            let s = DensitySpec::power_law(d, a).unwrap();
            assert!((s.total_mass_by_quadrature() - 1.0).abs() < 1e-8, "d={d} a={a}");
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(DensitySpec::power_law(2, 2.0).is_err());
        assert!(DensitySpec::power_law(3, 1.0).is_err());
        assert!(DensitySpec::with_normalizer(2, 4.0, -1.0).is_err());
        assert!(DensitySpec::with_normalizer(2, 4.0, 0.3).is_err());
    }

    #[test]
    fn zero_intensity_rejected() {
        assert!(sample_cloud(&spec(), 0.0, SeedRecord::new(1)).is_err());
        assert!(sample_cloud(&spec(), -3.0, SeedRecord::new(1)).is_err());
    }

    #[test]
    fn survival_matches_closed_form_in_the_plane() {
        // d = 2, alpha = 4: S(r) = pi C (pi/2 - atan r^2).
        let s = spec();
        for r in [0.1, 0.7, 1.0, 3.0, 25.0, 1e3] {
            let exact = PI * s.normalizer() * (PI / 2.0 - (r * r as f64).atan());
            assert!((s.radial_survival(r) - exact).abs() < 1e-13 * exact.max(1e-300) + 1e-15, "r={r}");
            let sum = s.radial_cdf(r) + s.radial_survival(r);
            assert!((sum - 1.0).abs() < 1e-13, "r={r} sum-1={:e}", sum - 1.0);
        }
    }

    #[test]
    fn inverse_survival_round_trips() {
        for s in [spec(), DensitySpec::power_law(3, 5.0).unwrap()] {
            for p in [1.0 - 1e-12, 0.9, 0.5, 0.1, 1e-3, 1e-6, 1e-9, 1e-14] {
                let r = s.radius_with_survival(p);
                let back = s.radial_survival(r);
                assert!(((back - p) / p).abs() < 1e-9, "p={p} r={r} back={back}");
            }
        }
    }

    #[test]
    fn regular_variation_of_the_tail() {
        let s = spec();
        let r = 1e6;
        for t in [0.5, 2.0, 5.0] {
            let ratio = s.density_at_radius(r * t) / s.density_at_radius(r);
            assert!((ratio / t.powf(-4.0) - 1.0).abs() <= 1e-3);
        }
    }

    #[test]
    fn regime_three_matches_algebraic_root() {
        let s = spec();
        let (n, lambda) = (1e4, 0.05);
        let r = regime_radius(&s, Regime::WeakCore, n, 1, Some(lambda), None).unwrap();
        let exact = (s.normalizer() * n / lambda - 1.0).powf(0.25);
        assert!((r - exact).abs() < 1e-10 * exact);
        assert!((n * s.density_at_radius(r) / lambda - 1.0).abs() < 1e-10);
    }

    #[test]
    fn regime_one_residual_and_asymptote() {
        let s = spec();
        let n = 1e4;
        let r = regime_radius(&s, Regime::Sparse, n, 1, None, None).unwrap();
        assert!((sparse_scale(&s, n, 1, r) - 1.0).abs() < 1e-10);
        let asym = ((2.0 / (PI * PI)).powi(3) * 1e12).powf(0.1);
        assert!((r / asym - 1.0).abs() < 0.05, "{r} vs {asym}");
    }

    #[test]
    fn regime_two_sits_between_the_others() {
        let s = spec();
        for n in [1e8, 1e10, 1e12] {
            let r1 = regime_radius(&s, Regime::Sparse, n, 1, None, None).unwrap();
            let r3 = regime_radius(&s, Regime::WeakCore, n, 1, Some(1.0), None).unwrap();
            let g = default_regime_two_gamma(2, 4.0, 1);
            let r2 = regime_radius(&s, Regime::Intermediate, n, 1, None, Some(g)).unwrap();
            assert!(r3 < r2 && r2 < r1, "n={n}: {r3} {r2} {r1}");
            let resid = n * s.density_at_radius(r2) / n.powf(-g) - 1.0;
            assert!(resid.abs() < 1e-10);
        }
    }

    #[test]
    fn regime_two_rejects_gamma_outside_band() {
        let s = spec();
        assert!(regime_radius(&s, Regime::Intermediate, 1e6, 1, None, Some(0.5)).is_err());
        assert!(regime_radius(&s, Regime::Intermediate, 1e6, 1, None, None).is_err());
    }

    #[test]
    fn weak_core_is_lambda_one() {
        let s = spec();
        let n = 1e8;
        let r = regime_radius(&s, Regime::WeakCore, n, 1, Some(1.0), None).unwrap();
        assert!((r / s.weak_core_radius(n) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn tiny_n_has_no_bracket() {
        let s = spec();
        let err = regime_radius(&s, Regime::WeakCore, 1.0, 1, Some(0.05), None).unwrap_err();
        assert!(matches!(err, Error::NoBracket { .. }));
    }

    #[test]
    fn restrict_outside_filters_by_norm() {
        let c = PointCloud::from_points(2, &[vec![0.5, 0.0], vec![0.0, 1.5], vec![2.0, 0.0]]);
        let r = restrict_outside(&c, 1.0);
        assert_eq!(r.coords, vec![0.0, 1.5, 2.0, 0.0]);
        assert_eq!(restrict_outside(&c, 0.0), c);
        let e = PointCloud::from_points(2, &[]);
        assert!(restrict_outside(&e, 1.0).is_empty());
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = spec();
        let a = sample_cloud(&s, 300.0, SeedRecord::new(9)).unwrap();
        let b = sample_cloud(&s, 300.0, SeedRecord::new(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.coords.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn mean_count_is_n() {
        let s = spec();
        let master = SeedRecord::new(2024);
        let total: usize = (0..200)
            .map(|i| sample_cloud(&s, 1000.0, master.child(i)).unwrap().len())
            .sum();
        let mean = total as f64 / 200.0;
        assert!((mean - 1000.0).abs() <= 3.0 * (1000.0f64 / 200.0).sqrt(), "{mean}");
    }

    #[test]
    fn radial_kolmogorov_distance() {
        let s = spec();
        let mut rng = SeedRecord::new(5).rng();
        let radii: Vec<f64> = (0..10_000)
            .map(|_| s.radius_with_survival(1.0 - rng.random::<f64>()))
            .collect();
        for r in [0.3, 1.0, 4.0] {
            let emp = radii.iter().filter(|&&x| x > r).count() as f64 / radii.len() as f64;
            assert!((emp - s.radial_survival(r)).abs() <= 0.02);
        }
    }

    #[test]
    fn outside_sampler_matches_restriction_in_mean() {
        let s = spec();
        let (n, r) = (2000.0, 3.0);
        let expected = n * s.radial_survival(r);
        let master = SeedRecord::new(77);
        let reps = 300;
        let (mut direct, mut restricted) = (0usize, 0usize);
        for i in 0..reps {
            let o = sample_cloud_outside(&s, n, r, master.child(i)).unwrap();
            assert!(o.view().iter().all(|p| norm(p) >= r));
            direct += o.len();
            restricted += restrict_outside(&sample_cloud(&s, n, master.named("full").child(i)).unwrap(), r).len();
        }
        let se = (expected / reps as f64).sqrt();
        assert!((direct as f64 / reps as f64 - expected).abs() < 4.0 * se);
        assert!((restricted as f64 / reps as f64 - expected).abs() < 4.0 * se);
    }

    #[test]
    fn unit_ball_mass_small_radius() {
        let s = spec();
        let r = 1e-3;
        let approx = s.normalizer() * ball_volume(2) * r * r;
        assert!((s.radial_cdf(r) / approx - 1.0).abs() < 1e-6);
    }

    #[test]
    fn csv_round_trip() {
        let s = spec();
        let c = sample_cloud(&s, 20.0, SeedRecord::new(3)).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let back = PointCloud::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.coords, c.coords);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x1,x2\n"));
    }
}
