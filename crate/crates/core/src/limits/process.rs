//! Simulators for the Poisson-driven process `V` and the Gaussian process `Y`.

use super::{c_k, ModelParams};
use crate::error::{Error, Result};
use crate::estimate::monte_carlo;
use crate::geometry::{ball_volume, uniform_in_ball};
use crate::oracles::hole_thresholds;
use crate::seed::SeedRecord;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathKind {
    V,
    VPlus,
    VMinus,
    Y,
    YPlus,
    YMinus,
    ZTruncated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessPath {
    pub kind: PathKind,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl ProcessPath {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "value"])?;
        for (t, v) in self.grid.iter().zip(&self.values) {
            wr.write_record([format!("{t:.17e}"), format!("{v:.17e}")])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("time grid is empty".into()));
    }
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidArgument("time grid must hold finite non-negative values".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VPaths {
    pub v: ProcessPath,
    pub v_plus: ProcessPath,
    pub v_minus: ProcessPath,
}

/// One joint realization of `V`, `V+` and `V-` on the grid.
///
/// The driving Poisson random measure is simulated on the product of balls of
/// radius `window_radius` around the origin; every free point of a
/// configuration with `h+ = 1` at time `t` lies within distance `t` of the
/// origin, so any window radius at least `max(grid)` is exact.
pub fn simulate_v_family(grid: &[f64], params: &ModelParams, window_radius: f64, seed: SeedRecord) -> Result<VPaths> {
    check_grid(grid)?;
    let t_max = *grid.last().unwrap();
    if !(window_radius >= t_max) {
        return Err(Error::InvalidArgument(format!(
            "window radius {window_radius} is below the support radius {t_max}"
        )));
    }
    let d = params.d;
    let m = params.free_points();
    let intensity = c_k(d, params.k, params.alpha)?;
    let mean = intensity * (ball_volume(d) * window_radius.powi(d as i32)).powi(m as i32);
    let mut rng = seed.rng();
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::InvalidArgument(format!("Poisson({mean}): {e}")))?
            .sample(&mut rng) as u64
    } else {
        0
    };
    let origin = vec![0.0; d];
    let mut coords = vec![0.0; (m + 1) * d];
    let mut plus = vec![0.0; grid.len()];
    let mut minus = vec![0.0; grid.len()];
    for _ in 0..count {
        let mut inside = true;
        for c in coords[d..].chunks_exact_mut(d) {
            uniform_in_ball(&mut rng, &origin, window_radius, c);
            inside &= c.iter().map(|x| x * x).sum::<f64>() <= t_max * t_max;
        }
        if !inside {
            continue;
        }
        let pts: Vec<&[f64]> = coords.chunks_exact(d).collect();
        let th = hole_thresholds(&pts, params.k)?;
        for (a, &t) in grid.iter().enumerate() {
            plus[a] += th.h_plus(t) as u8 as f64;
            minus[a] += th.h_minus(t) as u8 as f64;
        }
    }
    let v = plus.iter().zip(&minus).map(|(p, q)| p - q).collect();
    let path = |kind, values| ProcessPath {
        kind,
        grid: grid.to_vec(),
        values,
    };
    Ok(VPaths {
        v: path(PathKind::V, v),
        v_plus: path(PathKind::VPlus, plus),
        v_minus: path(PathKind::VMinus, minus),
    })
}

pub fn simulate_v(grid: &[f64], params: &ModelParams, window_radius: f64, seed: SeedRecord) -> Result<ProcessPath> {
    Ok(simulate_v_family(grid, params, window_radius, seed)?.v)
}

pub fn simulate_v_pm(
    grid: &[f64],
    params: &ModelParams,
    window_radius: f64,
    seed: SeedRecord,
) -> Result<(ProcessPath, ProcessPath)> {
    let f = simulate_v_family(grid, params, window_radius, seed)?;
    Ok((f.v_plus, f.v_minus))
}

/// Gaussian sampler for `(Y+(t_a), Y-(t_a))_a` with covariance
/// `C_k int g g'` over the indicators `g` in `{h+_{t_a}, h-_{t_a}}`.
#[derive(Clone, Debug)]
pub struct YSimulator {
    grid: Vec<f64>,
    /// Joint covariance of `(Y+(t_1..t_G), Y-(t_1..t_G))`.
    pub covariance: DMatrix<f64>,
    /// Standard error of each covariance entry.
    pub covariance_se: DMatrix<f64>,
    root: DMatrix<f64>,
}

const CLIP_TOL: f64 = 1e-10;

impl YSimulator {
    pub fn new(grid: &[f64], params: &ModelParams, mc_samples: u64, seed: SeedRecord) -> Result<Self> {
        check_grid(grid)?;
        if mc_samples < 2 {
            return Err(Error::InvalidArgument("need at least two samples".into()));
        }
        let g = grid.len();
        let d = params.d;
        let m = params.free_points();
        let t_max = *grid.last().unwrap();
        let intensity = c_k(d, params.k, params.alpha)?;
        let volume = if t_max > 0.0 {
            (ball_volume(d) * t_max.powi(d as i32)).powi(m as i32)
        } else {
            0.0
        };
        let origin = vec![0.0; d];
        let moments = monte_carlo(mc_samples, 2 * g, seed, |rng, x| {
            if t_max == 0.0 {
                return;
            }
            let mut coords = vec![0.0; (m + 1) * d];
            for c in coords[d..].chunks_exact_mut(d) {
                uniform_in_ball(rng, &origin, t_max, c);
            }
            let pts: Vec<&[f64]> = coords.chunks_exact(d).collect();
            let th = hole_thresholds(&pts, params.k).expect("arity fixed by construction");
            for (a, &t) in grid.iter().enumerate() {
                x[a] = th.h_plus(t) as u8 as f64;
                x[g + a] = th.h_minus(t) as u8 as f64;
            }
        });
        let scale = intensity * volume;
        let n = moments.count as f64;
        let covariance = DMatrix::from_fn(2 * g, 2 * g, |a, b| scale * moments.second(a, b));
        let covariance_se = DMatrix::from_fn(2 * g, 2 * g, |a, b| {
            let p = moments.second(a, b);
            scale * (p * (1.0 - p) / n).max(0.0).sqrt()
        });
        let mut root = symmetric_sqrt(&covariance)?;
        for a in 0..2 * g {
            if covariance[(a, a)] == 0.0 {
                root.row_mut(a).fill(0.0);
            }
        }
        Ok(YSimulator {
            grid: grid.to_vec(),
            covariance,
            covariance_se,
            root,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// One joint draw; returns `(Y, Y+, Y-)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (ProcessPath, ProcessPath, ProcessPath) {
        let n = self.root.nrows();
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let x = &self.root * z;
        let g = self.grid.len();
        let plus: Vec<f64> = (0..g).map(|a| x[a]).collect();
        let minus: Vec<f64> = (0..g).map(|a| x[g + a]).collect();
        let y = plus.iter().zip(&minus).map(|(p, q)| p - q).collect();
        let path = |kind, values| ProcessPath {
            kind,
            grid: self.grid.clone(),
            values,
        };
        (path(PathKind::Y, y), path(PathKind::YPlus, plus), path(PathKind::YMinus, minus))
    }
}

/// Symmetric square root with eigenvalues in `[-CLIP_TOL, 0)` clipped to zero.
fn symmetric_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -CLIP_TOL {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue: min });
    }
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
}

/// A single path of `Y`.
pub fn simulate_y(grid: &[f64], params: &ModelParams, mc_samples: u64, seed: SeedRecord) -> Result<ProcessPath> {
    let sim = YSimulator::new(grid, params, mc_samples, seed.named("covariance"))?;
    Ok(sim.sample(&mut seed.named("path").rng()).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::Moments;
    use crate::limits::{indicator_integral, IntegralKind};

    fn plane() -> ModelParams {
        ModelParams::new(2, 1, 4.0).unwrap()
    }

    #[test]
    fn v_paths_are_consistent() {
        let grid = [0.5, 1.0, 2.0, 3.0];
        for rep in 0..50 {
            let f = simulate_v_family(&grid, &plane(), 3.0, SeedRecord::new(rep)).unwrap();
            for a in 0..grid.len() {
                assert_eq!(f.v.values[a], f.v_plus.values[a] - f.v_minus.values[a]);
                assert!(f.v.values[a] >= 0.0);
                if a > 0 {
                    assert!(f.v_plus.values[a] >= f.v_plus.values[a - 1]);
                    assert!(f.v_minus.values[a] >= f.v_minus.values[a - 1]);
                }
            }
        }
        assert!(simulate_v(&grid, &plane(), 2.0, SeedRecord::new(1)).is_err());
        assert!(simulate_v(&[2.0, 1.0], &plane(), 3.0, SeedRecord::new(1)).is_err());
    }

    #[test]
    fn v_mean_matches_constant() {
        let p = plane();
        let reps = 2000;
        let mut m = Moments::new(1);
        for r in 0..reps {
            m.push(&[simulate_v(&[1.5], &p, 1.5, SeedRecord::new(99).child(r)).unwrap().values[0]]);
        }
        let h = indicator_integral(IntegralKind::Hole, &p, 1.5, 100_000, SeedRecord::new(7)).unwrap();
        let target = h.scaled(c_k(2, 1, 4.0).unwrap());
        let z = (m.mean(0) - target.value).abs() / m.std_error(0).hypot(target.std_error);
        assert!(z < 3.0, "mean {} target {:?}", m.mean(0), target);
    }

    #[test]
    fn y_starts_at_zero_and_has_psd_covariance() {
        let sim = YSimulator::new(&[0.0, 0.5, 1.0], &plane(), 20_000, SeedRecord::new(3)).unwrap();
        let mut rng = SeedRecord::new(4).rng();
        for _ in 0..10 {
            let (y, yp, ym) = sim.sample(&mut rng);
            assert_eq!(y.values[0], 0.0);
            assert_eq!(yp.values[0], 0.0);
            assert_eq!(ym.values[0], 0.0);
        }
        let eig = SymmetricEigen::new(sim.covariance.clone());
        assert!(eig.eigenvalues.iter().all(|&v| v >= -1e-10));
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(symmetric_sqrt(&m), Err(Error::NotPositiveSemidefinite { .. })));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 - 1e-12]);
        assert!(symmetric_sqrt(&m).is_ok());
    }

    #[test]
    fn path_csv() {
        let p = simulate_y(&[0.5, 1.0], &plane(), 5000, SeedRecord::new(1)).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,value\n"));
    }
}
