//! Indicator functions on small point configurations, and volumes of unions
//! of balls.

use crate::error::{Error, Result};
use crate::estimate::LimitEstimate;
use crate::geometry::{ball_volume, dist2};
use crate::homology::cech_betti;
use crate::miniball::simplex_value;
use crate::seed::SeedRecord;
use crate::union_find::UnionFind;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorKind {
    Hole,
    HolePlus,
    HoleMinus,
    Component,
    Overlap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorResult {
    pub kind: IndicatorKind,
    pub value: u8,
}

/// Parameters at which the `k+2` points switch on: every `(k+1)`-subset is a
/// simplex from `plus` on, and the full set from `minus` on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoleThresholds {
    pub plus: f64,
    pub minus: f64,
}

impl HoleThresholds {
    pub fn h_plus(&self, t: f64) -> bool {
        self.plus <= t
    }

    pub fn h_minus(&self, t: f64) -> bool {
        self.minus <= t
    }

    pub fn h(&self, t: f64) -> bool {
        self.plus <= t && t < self.minus
    }
}

fn check_arity(points: &[&[f64]], k: usize) -> Result<()> {
    if points.len() != k + 2 {
        return Err(Error::InvalidArgument(format!(
            "degree-{k} hole indicators take exactly {} points, got {}",
            k + 2,
            points.len()
        )));
    }
    Ok(())
}

pub fn hole_thresholds(points: &[&[f64]], k: usize) -> Result<HoleThresholds> {
    check_arity(points, k)?;
    let m = points.len();
    let plus = if k == 1 {
        let mut best = 0.0f64;
        for a in 0..m {
            for b in a + 1..m {
                best = best.max(dist2(points[a], points[b]));
            }
        }
        best.sqrt()
    } else {
        let mut best = 0.0f64;
        let mut subset: Vec<&[f64]> = Vec::with_capacity(m - 1);
        for skip in 0..m {
            subset.clear();
            subset.extend(points.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, p)| *p));
            best = best.max(simplex_value(&subset)?);
        }
        best
    };
    let minus = simplex_value(points)?.max(plus);
    Ok(HoleThresholds { plus, minus })
}

pub fn h_plus(points: &[&[f64]], k: usize, t: f64) -> Result<bool> {
    Ok(hole_thresholds(points, k)?.h_plus(t))
}

pub fn h_minus(points: &[&[f64]], k: usize, t: f64) -> Result<bool> {
    Ok(hole_thresholds(points, k)?.h_minus(t))
}

/// 1 iff the `k+2` points form an empty `(k+1)`-simplex at parameter `t`.
pub fn h(points: &[&[f64]], k: usize, t: f64) -> Result<bool> {
    Ok(hole_thresholds(points, k)?.h(t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentStatus {
    pub connected: bool,
    pub betti: usize,
}

impl ComponentStatus {
    /// The component indicator for hole count `j`.
    pub fn indicator(&self, j: usize) -> bool {
        self.connected && self.betti == j
    }

    /// `betti` on connected configurations, zero otherwise.
    pub fn weight(&self) -> usize {
        if self.connected {
            self.betti
        } else {
            0
        }
    }
}

/// Whether the graph joining points at distance at most `t` is connected.
pub fn is_connected(points: &[&[f64]], t: f64) -> bool {
    let n = points.len();
    if n <= 1 {
        return true;
    }
    let t2 = t * t;
    let mut uf = UnionFind::new(n);
    for a in 0..n {
        for b in a + 1..n {
            if dist2(points[a], points[b]) <= t2 && uf.union(a, b) && uf.components() == 1 {
                return true;
            }
        }
    }
    uf.components() == 1
}

/// Connectivity of the Čech complex at `t` and its degree-`k` Betti number.
/// The Betti number is only computed for connected configurations.
pub fn component_status(points: &[&[f64]], t: f64, k: usize) -> ComponentStatus {
    let connected = is_connected(points, t);
    let betti = if connected && points.len() >= k + 2 {
        cech_betti(points, t, k)
    } else {
        0
    };
    ComponentStatus { connected, betti }
}

/// Connectivity and `beta_k` of an `i`-point configuration, `i >= k+2`.
pub fn h_component(points: &[&[f64]], t: f64, k: usize) -> Result<ComponentStatus> {
    if points.len() < k + 2 {
        return Err(Error::InvalidArgument(format!(
            "component indicators need at least {} points, got {}",
            k + 2,
            points.len()
        )));
    }
    if points.len() > 64 {
        return Err(Error::InvalidArgument("component indicators support at most 64 points".into()));
    }
    let connected = is_connected(points, t);
    Ok(ComponentStatus {
        connected,
        betti: cech_betti(points, t, k),
    })
}

/// 1 iff some ball of radius `t` around `a` meets some ball of radius `s`
/// around `b`.
pub fn d_overlap(a: &[&[f64]], b: &[&[f64]], t: f64, s: f64) -> bool {
    let r2 = (t + s) * (t + s);
    a.iter().any(|p| b.iter().any(|q| dist2(p, q) <= r2))
}

/// Exact area of a union of disks in the plane (Green's theorem over the
/// uncovered boundary arcs).
pub fn disk_union_area(centers: &[&[f64]], radii: &[f64]) -> f64 {
    let n = centers.len();
    let mut area = 0.0;
    let mut arcs: Vec<(f64, f64)> = Vec::with_capacity(2 * n);
    for i in 0..n {
        let ri = radii[i];
        if ri <= 0.0 {
            continue;
        }
        let (xi, yi) = (centers[i][0], centers[i][1]);
        let mut hidden = false;
        arcs.clear();
        for j in 0..n {
            if i == j || radii[j] <= 0.0 {
                continue;
            }
            let rj = radii[j];
            let (dx, dy) = (centers[j][0] - xi, centers[j][1] - yi);
            let d = (dx * dx + dy * dy).sqrt();
            if d + ri <= rj {
                // Circle i lies inside disk j; for identical disks keep the first.
                if d == 0.0 && ri == rj && j > i {
                    continue;
                }
                hidden = true;
                break;
            }
            if d >= ri + rj || d + rj <= ri {
                continue;
            }
            let phi = dy.atan2(dx);
            let c = ((ri * ri + d * d - rj * rj) / (2.0 * ri * d)).clamp(-1.0, 1.0);
            let half = c.acos();
            // Normalize into [0, 2pi), splitting if needed.
            let lo = (phi - half).rem_euclid(2.0 * PI);
            let hi = lo + 2.0 * half;
            if hi > 2.0 * PI {
                arcs.push((lo, 2.0 * PI));
                arcs.push((0.0, hi - 2.0 * PI));
            } else {
                arcs.push((lo, hi));
            }
        }
        if hidden {
            continue;
        }
        arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Integrate over the complement of the covered arcs.
        let mut cursor = 0.0;
        let mut add = |a: f64, b: f64| {
            if b > a {
                area += 0.5 * (ri * ri * (b - a) + ri * (xi * (b.sin() - a.sin()) - yi * (b.cos() - a.cos())));
            }
        };
        for &(lo, hi) in arcs.iter() {
            if lo > cursor {
                add(cursor, lo);
            }
            cursor = cursor.max(hi);
        }
        add(cursor, 2.0 * PI);
    }
    area
}

/// Monte Carlo volume of a union of balls with individual radii, by hit
/// counting in the bounding box. Returns (estimate, standard error).
pub fn balls_union_volume_mc<R: Rng + ?Sized>(centers: &[&[f64]], radii: &[f64], samples: u64, rng: &mut R) -> (f64, f64) {
    let d = centers[0].len();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for (c, &r) in centers.iter().zip(radii) {
        for a in 0..d {
            lo[a] = lo[a].min(c[a] - r);
            hi[a] = hi[a].max(c[a] + r);
        }
    }
    let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let mut x = vec![0.0; d];
    let mut hits = 0u64;
    for _ in 0..samples {
        for a in 0..d {
            x[a] = rng.random_range(lo[a]..=hi[a]);
        }
        if centers.iter().zip(radii).any(|(c, &r)| dist2(c, &x) <= r * r) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    (box_vol * p, box_vol * (p * (1.0 - p) / samples as f64).sqrt())
}

/// Volume of the union of balls of equal radius, exact for d = 2 or fewer
/// than two balls, Monte Carlo otherwise.
pub fn union_volume(points: &[&[f64]], radius: f64, mc_samples: u64, seed: SeedRecord) -> Result<LimitEstimate> {
    use crate::estimate::Method;
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius {radius} must be positive")));
    }
    if mc_samples < 1000 {
        return Err(Error::InvalidArgument(format!("mc_samples = {mc_samples} is below 1000")));
    }
    if points.is_empty() {
        return Ok(LimitEstimate::exact(0.0, Method::ClosedForm));
    }
    let d = points[0].len();
    if points.len() == 1 {
        return Ok(LimitEstimate::exact(ball_volume(d) * radius.powi(d as i32), Method::ClosedForm));
    }
    if d == 2 {
        let radii = vec![radius; points.len()];
        return Ok(LimitEstimate::exact(disk_union_area(points, &radii), Method::ClosedForm));
    }
    union_volume_mc(points, radius, mc_samples, seed)
}

/// Monte Carlo branch of [`union_volume`], available in every dimension.
pub fn union_volume_mc(points: &[&[f64]], radius: f64, mc_samples: u64, seed: SeedRecord) -> Result<LimitEstimate> {
    if mc_samples < 1000 {
        return Err(Error::InvalidArgument(format!("mc_samples = {mc_samples} is below 1000")));
    }
    let radii = vec![radius; points.len()];
    let (v, se) = balls_union_volume_mc(points, &radii, mc_samples, &mut seed.rng());
    Ok(LimitEstimate::monte_carlo(v, se, mc_samples, seed))
}
