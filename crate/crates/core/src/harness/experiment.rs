//! Replicated end-to-end runs: sample, filter, compute barcodes, aggregate,
//! and confront the aggregates with limit constants.

use super::config::{ExperimentConfig, SamplingMode};
use super::stats::{distribution_tests, sample_covariance, sample_variance, variance_std_error, DistributionSummary};
use crate::error::{Error, Result};
use crate::estimate::LimitEstimate;
use crate::filtration::{build_filtered_complex, neighbor_graph, FilteredComplex};
use crate::geometry::{ball_volume, norm, PointsView};
use crate::homology::betti_from_simplices;
use crate::limits::{
    c_k, indicator_integral, lifetime_integral, z_covariance, z_mean, IntegralKind, ModelParams, SeriesParams,
};
use crate::persistence::{barcode, lifetime_sum};
use crate::sampler::{
    restrict_outside, sample_cloud, sample_cloud_outside, RadialDensity, Regime, RegimeSpec,
};
use crate::seed::SeedRecord;
use crate::union_find::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

pub const DEFAULT_TRUNCATION: usize = 6;

/// Per-replication observations on the time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub points: usize,
    pub betti: Vec<f64>,
    pub lifetime: Vec<f64>,
    /// Betti number restricted to components whose farthest point lies in the localization annulus.
    pub localized: Vec<f64>,
    /// Same, additionally dropping components with more than the truncation size.
    pub truncated: Vec<f64>,
    /// Connected `(k+3)`-subsets at the largest grid time.
    pub connected_subsets: u64,
}

/// An empirical value set against a limit target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub empirical: f64,
    pub empirical_se: f64,
    pub target: LimitEstimate,
    /// Bound on the part of the target discarded by series truncation.
    pub remainder_bound: f64,
    pub gap: f64,
    /// Three combined standard errors plus the remainder bound.
    pub tolerance: f64,
    pub z: f64,
    pub within: bool,
}

impl Comparison {
    pub fn new(empirical: f64, empirical_se: f64, target: LimitEstimate, remainder_bound: f64) -> Self {
        let se = empirical_se.hypot(target.std_error);
        let gap = (empirical - target.value).abs();
        let tolerance = 3.0 * se + remainder_bound;
        let z = if se > 0.0 {
            gap / se
        } else if gap == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Comparison {
            empirical,
            empirical_se,
            target,
            remainder_bound,
            gap,
            tolerance,
            z,
            within: gap <= tolerance,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeTargets {
    pub mean: Option<Comparison>,
    pub variance: Option<Comparison>,
}

/// Aggregates of one statistic over replications, per grid time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatBlock {
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    pub variance: Vec<f64>,
    pub variance_se: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub scaled_mean: Vec<f64>,
    pub scaled_variance: Vec<f64>,
    pub scaled_covariance: Vec<Vec<f64>>,
    pub distribution: Vec<Option<DistributionSummary>>,
    pub targets: Vec<TimeTargets>,
}

impl StatBlock {
    fn from_columns(columns: &[Vec<f64>], scale: f64) -> Self {
        let g = columns.len();
        let reps = columns.first().map_or(0, |c| c.len()) as f64;
        let mean: Vec<f64> = columns.iter().map(|c| c.iter().sum::<f64>() / reps).collect();
        let variance: Vec<f64> = columns.iter().map(|c| sample_variance(c)).collect();
        let mean_se = variance.iter().map(|v| (v / reps).sqrt()).collect();
        let variance_se = columns.iter().map(|c| variance_std_error(c)).collect();
        let covariance: Vec<Vec<f64>> = (0..g)
            .map(|a| (0..g).map(|b| sample_covariance(&columns[a], &columns[b]).0).collect())
            .collect();
        let inv = if scale > 0.0 { 1.0 / scale } else { 0.0 };
        StatBlock {
            scaled_mean: mean.iter().map(|m| m * inv).collect(),
            scaled_variance: variance.iter().map(|v| v * inv).collect(),
            scaled_covariance: covariance.iter().map(|row| row.iter().map(|c| c * inv).collect()).collect(),
            distribution: columns.iter().map(|c| distribution_tests(c).ok()).collect(),
            targets: vec![TimeTargets::default(); g],
            mean,
            mean_se,
            variance,
            variance_se,
            covariance,
        }
    }

    fn scaled_mean_se(&self, a: usize, scale: f64) -> f64 {
        self.mean_se[a] / scale
    }

    fn scaled_variance_se(&self, a: usize, scale: f64) -> f64 {
        self.variance_se[a] / scale
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleKind {
    /// No normalization.
    Unit,
    /// `n^{k+2} R^d f(R e1)^{k+2}`.
    Rho,
    /// `R^d`.
    RadiusPower,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarStat {
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub regime: RegimeSpec,
    pub rho: f64,
    pub scale_kind: ScaleKind,
    pub scale: f64,
    pub expected_points: f64,
    pub mean_points: f64,
    pub t_grid: Vec<f64>,
    pub betti: StatBlock,
    pub lifetime: StatBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub localized: Option<StatBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated: Option<StatBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connected_subsets: Option<ScalarStat>,
    pub warnings: Vec<String>,
}

fn resolve_regime(config: &ExperimentConfig) -> Result<RegimeSpec> {
    match config.radius {
        Some(radius) => Ok(RegimeSpec {
            regime: config.regime,
            n: config.n,
            k: config.k,
            lambda: config.lambda,
            gamma: config.gamma,
            radius,
        }),
        None => RegimeSpec::resolve(&config.density, config.regime, config.n, config.k, config.lambda, config.gamma),
    }
}

/// Components of the complex at `t` as vertex lists with their degree-`k` Betti numbers.
pub fn component_bettis(complex: &FilteredComplex, vertices: usize, t: f64, k: usize) -> Vec<(Vec<usize>, usize)> {
    let by_dim = complex.static_at(t);
    let mut uf = UnionFind::new(vertices);
    if let Some(edges) = by_dim.get(1) {
        for e in edges {
            uf.union(e[0], e[1]);
        }
    }
    let groups = uf.groups();
    let mut slot = vec![usize::MAX; vertices];
    let mut out: Vec<(Vec<usize>, usize)> = Vec::new();
    let mut parts: Vec<Vec<Vec<Vec<usize>>>> = Vec::new();
    for g in groups.into_iter().filter(|g| g.len() >= k + 2) {
        for &v in &g {
            slot[v] = out.len();
        }
        out.push((g, 0));
        parts.push(vec![Vec::new(); by_dim.len()]);
    }
    for (p, simplices) in by_dim.into_iter().enumerate() {
        for s in simplices {
            let c = slot[s[0]];
            if c != usize::MAX {
                parts[c][p].push(s);
            }
        }
    }
    for (entry, part) in out.iter_mut().zip(&parts) {
        entry.1 = betti_from_simplices(part, k);
    }
    out
}

/// Index of the point with the largest norm; ties go to the smallest index.
pub fn farthest_point(points: &PointsView<'_>, members: &[usize]) -> usize {
    let mut best = members[0];
    let mut best_norm = norm(points.point(best));
    for &m in &members[1..] {
        let r = norm(points.point(m));
        if r > best_norm || (r == best_norm && m < best) {
            best = m;
            best_norm = r;
        }
    }
    best
}

/// Number of vertex subsets of the given size inducing a connected subgraph.
pub fn count_connected_subsets(adjacency: &[Vec<usize>], size: usize) -> u64 {
    fn extend(adj: &[Vec<usize>], size: usize, root: usize, sub: &mut Vec<usize>, ext: Vec<usize>, count: &mut u64) {
        if sub.len() == size {
            *count += 1;
            return;
        }
        let mut ext = ext;
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            for &u in &adj[w] {
                if u > root
                    && !sub.contains(&u)
                    && u != w
                    && !next.contains(&u)
                    && !sub.iter().any(|&s| adj[s].contains(&u))
                {
                    next.push(u);
                }
            }
            sub.push(w);
            extend(adj, size, root, sub, next, count);
            sub.pop();
        }
    }
    if size == 0 {
        return 0;
    }
    let mut count = 0;
    for v in 0..adjacency.len() {
        let ext: Vec<usize> = adjacency[v].iter().copied().filter(|&u| u > v).collect();
        let mut sub = vec![v];
        extend(adjacency, size, v, &mut sub, ext, &mut count);
    }
    count
}

fn symmetric_adjacency(up: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); up.len()];
    for (a, list) in up.iter().enumerate() {
        for &b in list {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    adj
}

pub fn run_replication(config: &ExperimentConfig, regime: &RegimeSpec, index: usize) -> Result<Replication> {
    let seed = SeedRecord::new(config.seed).named("replication").child(index as u64);
    let cloud = match config.sampling {
        SamplingMode::Outside => sample_cloud_outside(&config.density, config.n, regime.radius, seed)?,
        SamplingMode::Full => restrict_outside(&sample_cloud(&config.density, config.n, seed)?, regime.radius),
    };
    let view = cloud.view();
    let k = config.k;
    let t_max = config.t_max();
    let complex = build_filtered_complex(view, k + 1, t_max)?;
    let bc = barcode(&complex, k)?;
    let betti = config.t_grid.iter().map(|&t| bc.betti_at(t) as f64).collect();
    let lifetime = config.t_grid.iter().map(|&t| lifetime_sum(&bc, t)).collect();

    let outer = config.localization.map_or(f64::INFINITY, |kl| kl * regime.radius);
    let cap = config.truncation.unwrap_or(DEFAULT_TRUNCATION);
    let mut localized = Vec::with_capacity(config.t_grid.len());
    let mut truncated = Vec::with_capacity(config.t_grid.len());
    for &t in &config.t_grid {
        let (mut loc, mut tr) = (0.0, 0.0);
        for (members, b) in component_bettis(&complex, cloud.len(), t, k) {
            if b == 0 {
                continue;
            }
            let far = norm(view.point(farthest_point(&view, &members)));
            if far < outer {
                loc += b as f64;
                if members.len() <= cap {
                    tr += b as f64;
                }
            }
        }
        localized.push(loc);
        truncated.push(tr);
    }

    let connected_subsets = if regime.regime == Regime::Sparse {
        let adj = symmetric_adjacency(&neighbor_graph(view, t_max));
        count_connected_subsets(&adj, k + 3)
    } else {
        0
    };
    Ok(Replication {
        points: cloud.len(),
        betti,
        lifetime,
        localized,
        truncated,
        connected_subsets,
    })
}

fn columns(reps: &[Replication], grid: usize, pick: impl Fn(&Replication) -> &Vec<f64>) -> Vec<Vec<f64>> {
    (0..grid).map(|a| reps.iter().map(|r| pick(r)[a]).collect()).collect()
}

/// Runs every replication on the current rayon pool and aggregates in index order.
pub fn run_regime_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    Ok(run_with_replications(config)?.0)
}

pub fn run_with_replications(config: &ExperimentConfig) -> Result<(ExperimentReport, Vec<Replication>)> {
    config.validate()?;
    let regime = resolve_regime(config)?;
    let density = &config.density;
    let d = density.d();
    let k = config.k;
    let mut warnings = Vec::new();
    if let (Regime::WeakCore, Some(lambda)) = (config.regime, config.lambda) {
        let limit = 1.0 / (std::f64::consts::E * ball_volume(d));
        if lambda >= limit {
            warnings.push(format!("lambda = {lambda} is not below 1/(e omega_d) = {limit:.6}"));
        }
    }
    let reps: Vec<Replication> = (0..config.replications)
        .into_par_iter()
        .map(|i| {
            run_replication(config, &regime, i).map_err(|e| Error::Replication {
                index: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let rho = regime.rho(density);
    let (scale_kind, scale) = match config.regime {
        Regime::Sparse => (ScaleKind::Unit, 1.0),
        Regime::Intermediate => (ScaleKind::Rho, rho),
        Regime::WeakCore => (ScaleKind::RadiusPower, regime.radius.powi(d as i32)),
    };
    let g = config.t_grid.len();
    let mut betti = StatBlock::from_columns(&columns(&reps, g, |r| &r.betti), scale);
    let mut lifetime = StatBlock::from_columns(&columns(&reps, g, |r| &r.lifetime), scale);
    let (mut localized, truncated) = if config.regime == Regime::WeakCore {
        (
            Some(StatBlock::from_columns(&columns(&reps, g, |r| &r.localized), scale)),
            Some(StatBlock::from_columns(&columns(&reps, g, |r| &r.truncated), scale)),
        )
    } else {
        (None, None)
    };
    let connected_subsets = (config.regime == Regime::Sparse).then(|| {
        let xs: Vec<f64> = reps.iter().map(|r| r.connected_subsets as f64).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        ScalarStat {
            mean,
            std_error: (sample_variance(&xs) / xs.len() as f64).sqrt(),
        }
    });

    if scale > 0.0 {
        let model = ModelParams::new(d, k, density.alpha())?;
        let root = SeedRecord::new(config.seed).named("targets");
        attach_targets(config, &model, root, scale, &mut betti, &mut lifetime, localized.as_mut())?;
    } else {
        warnings.push("normalizing scale is zero; targets skipped".into());
    }

    let points: f64 = reps.iter().map(|r| r.points as f64).sum::<f64>() / reps.len() as f64;
    let report = ExperimentReport {
        config: config.clone(),
        rho,
        scale_kind,
        scale,
        expected_points: config.n * density.radial_survival(regime.radius),
        mean_points: points,
        t_grid: config.t_grid.clone(),
        regime,
        betti,
        lifetime,
        localized,
        truncated,
        connected_subsets,
        warnings,
    };
    Ok((report, reps))
}

fn attach_targets(
    config: &ExperimentConfig,
    model: &ModelParams,
    root: SeedRecord,
    scale: f64,
    betti: &mut StatBlock,
    lifetime: &mut StatBlock,
    localized: Option<&mut StatBlock>,
) -> Result<()> {
    let samples = config.target_samples;
    let ck = c_k(model.d, model.k, model.alpha)?;
    match config.regime {
        Regime::Sparse | Regime::Intermediate => {
            for (a, &t) in config.t_grid.iter().enumerate() {
                let seed = root.child(a as u64);
                let h = indicator_integral(IntegralKind::Hole, model, t, samples, seed.named("hole"))?.scaled(ck);
                betti.targets[a] = TimeTargets {
                    mean: Some(Comparison::new(betti.scaled_mean[a], betti.scaled_mean_se(a, scale), h.clone(), 0.0)),
                    variance: Some(Comparison::new(
                        betti.scaled_variance[a],
                        betti.scaled_variance_se(a, scale),
                        h,
                        0.0,
                    )),
                };
                let held = lifetime_integral(model, t, None, samples, seed.named("lifetime"))?.scaled(ck);
                let held2 = lifetime_integral(model, t, Some(t), samples, seed.named("lifetime-square"))?.scaled(ck);
                lifetime.targets[a] = TimeTargets {
                    mean: Some(Comparison::new(lifetime.scaled_mean[a], lifetime.scaled_mean_se(a, scale), held, 0.0)),
                    variance: Some(Comparison::new(
                        lifetime.scaled_variance[a],
                        lifetime.scaled_variance_se(a, scale),
                        held2,
                        0.0,
                    )),
                };
            }
        }
        Regime::WeakCore => {
            let Some(block) = localized else { return Ok(()) };
            let Some(lambda) = config.lambda else { return Ok(()) };
            let m = config.truncation.unwrap_or(DEFAULT_TRUNCATION);
            for (a, &t) in config.t_grid.iter().enumerate() {
                let mut params = SeriesParams::new(
                    *model,
                    lambda,
                    config.localization.unwrap_or(f64::INFINITY),
                    root.child(a as u64),
                );
                params.samples = (samples / 10).max(2);
                params.xi_samples = (samples / 40).max(2);
                let mean = z_mean(t, m, &params)?;
                let var = z_covariance(t, t, m, &params)?;
                block.targets[a] = TimeTargets {
                    mean: Some(Comparison::new(
                        block.scaled_mean[a],
                        block.scaled_mean_se(a, scale),
                        mean.value,
                        mean.remainder_bound,
                    )),
                    variance: Some(Comparison::new(
                        block.scaled_variance[a],
                        block.scaled_variance_se(a, scale),
                        var.value,
                        var.remainder_bound,
                    )),
                };
            }
        }
    }
    Ok(())
}

fn write_stats_csv<W: Write>(grid: &[f64], block: &StatBlock, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "t",
        "mean",
        "mean_se",
        "variance",
        "variance_se",
        "scaled_mean",
        "scaled_variance",
        "target_mean",
        "target_mean_se",
        "target_variance",
        "target_variance_se",
        "dispersion",
        "skewness",
        "excess_kurtosis",
        "ks_poisson",
        "ks_normal",
    ])?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.12e}"));
    for (a, t) in grid.iter().enumerate() {
        let tg = &block.targets[a];
        let ds = block.distribution[a].as_ref();
        wr.write_record([
            format!("{t}"),
            format!("{:.12e}", block.mean[a]),
            format!("{:.12e}", block.mean_se[a]),
            format!("{:.12e}", block.variance[a]),
            format!("{:.12e}", block.variance_se[a]),
            format!("{:.12e}", block.scaled_mean[a]),
            format!("{:.12e}", block.scaled_variance[a]),
            opt(tg.mean.as_ref().map(|c| c.target.value)),
            opt(tg.mean.as_ref().map(|c| c.target.std_error)),
            opt(tg.variance.as_ref().map(|c| c.target.value)),
            opt(tg.variance.as_ref().map(|c| c.target.std_error)),
            opt(ds.map(|s| s.dispersion)),
            opt(ds.map(|s| s.skewness)),
            opt(ds.map(|s| s.excess_kurtosis)),
            opt(ds.map(|s| s.ks_poisson)),
            opt(ds.map(|s| s.ks_normal)),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

fn write_path<W: Write>(grid: &[f64], values: &[f64], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["t", "value"])?;
    for (t, v) in grid.iter().zip(values) {
        wr.write_record([format!("{t}"), format!("{v}")])?;
    }
    wr.flush()?;
    Ok(())
}

/// Writes `report.json`, `betti_stats.csv`, `lifetime_stats.csv` and `paths/*.csv`.
pub fn write_outputs(report: &ExperimentReport, reps: &[Replication], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir.join("paths"))?;
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(dir.join("report.json"), json + "\n")?;
    write_stats_csv(&report.t_grid, &report.betti, std::fs::File::create(dir.join("betti_stats.csv"))?)?;
    write_stats_csv(&report.t_grid, &report.lifetime, std::fs::File::create(dir.join("lifetime_stats.csv"))?)?;
    for (i, r) in reps.iter().take(report.config.path_count).enumerate() {
        write_path(&report.t_grid, &r.betti, std::fs::File::create(dir.join(format!("paths/betti_{i}.csv")))?)?;
        write_path(
            &report.t_grid,
            &r.lifetime,
            std::fs::File::create(dir.join(format!("paths/lifetime_{i}.csv")))?,
        )?;
    }
    Ok(())
}

/// Rayon pool with the requested worker count, falling back to `BARSUM_WORKERS`.
pub fn worker_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let from_env = || std::env::var("BARSUM_WORKERS").ok().and_then(|v| v.parse::<usize>().ok());
    let n = workers.or_else(from_env).unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::DensitySpec;
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::Rng;

    fn config(regime: &str, extra: &str) -> ExperimentConfig {
        config_n(regime, 2000.0, extra)
    }

    fn config_n(regime: &str, n: f64, extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"density": {{"d": 2, "alpha": 4}}, "regime": "{regime}", "n": {n},
                "t_grid": [0.5, 1.0], "replications": 40, "seed": 11, "target_samples": 20000 {extra}}}"#
        ))
        .unwrap()
    }

    fn brute_connected_subsets(adj: &[Vec<usize>], size: usize) -> u64 {
        let n = adj.len();
        let mut count = 0;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != size {
                continue;
            }
            let verts: Vec<usize> = (0..n).filter(|v| mask >> v & 1 == 1).collect();
            let mut seen = 1u32 << verts[0];
            let mut stack = vec![verts[0]];
            while let Some(v) = stack.pop() {
                for &u in &adj[v] {
                    if mask >> u & 1 == 1 && seen >> u & 1 == 0 {
                        seen |= 1 << u;
                        stack.push(u);
                    }
                }
            }
            count += (seen == mask) as u64;
        }
        count
    }

    #[test]
    fn connected_subset_count_matches_brute_force() {
        let mut rng = SeedRecord::new(3).rng();
        for _ in 0..200 {
            let n = rng.random_range(1..11);
            let p: f64 = rng.random_range(0.1..0.7);
            let mut adj = vec![Vec::new(); n];
            for a in 0..n {
                for b in a + 1..n {
                    if rng.random::<f64>() < p {
                        adj[a].push(b);
                        adj[b].push(a);
                    }
                }
            }
            for size in 1..=5 {
                assert_eq!(count_connected_subsets(&adj, size), brute_connected_subsets(&adj, size));
            }
        }
    }

    #[test]
    fn component_bettis_sum_to_the_global_betti() {
        let density = DensitySpec::power_law(2, 4.0).unwrap();
        for rep in 0..20 {
            let cloud = sample_cloud_outside(&density, 3000.0, 6.0, SeedRecord::new(rep)).unwrap();
            let complex = build_filtered_complex(cloud.view(), 2, 2.0).unwrap();
            let bc = barcode(&complex, 1).unwrap();
            for t in [0.5, 1.0, 1.5, 2.0] {
                let total: usize = component_bettis(&complex, cloud.len(), t, 1).iter().map(|c| c.1).sum();
                assert_eq!(total, bc.betti_at(t));
            }
        }
    }

    #[test]
    fn farthest_point_prefers_the_smallest_index() {
        let coords = [1.0, 0.0, 0.0, 2.0, -2.0, 0.0, 0.5, 0.5];
        let view = PointsView::new(2, &coords);
        assert_eq!(farthest_point(&view, &[0, 1, 2, 3]), 1);
        assert_eq!(farthest_point(&view, &[2, 1]), 1);
        assert_eq!(farthest_point(&view, &[0, 3]), 0);
    }

    #[test]
    fn empty_exterior_gives_zero_statistics() {
        let c = config("I", r#", "radius": 1e12"#);
        let r = run_regime_experiment(&c).unwrap();
        assert!(r.betti.mean.iter().chain(&r.betti.variance).chain(&r.lifetime.mean).all(|&x| x == 0.0));
        assert_eq!(r.mean_points, 0.0);
        assert!(r.betti.distribution[0].as_ref().unwrap().degenerate);
    }

    #[test]
    fn report_is_independent_of_worker_count() {
        let c = config("I", "");
        let one = worker_pool(Some(1)).unwrap().install(|| run_regime_experiment(&c)).unwrap();
        let three = worker_pool(Some(3)).unwrap().install(|| run_regime_experiment(&c)).unwrap();
        assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&three).unwrap());
    }

    #[test]
    fn scaled_statistics_are_sane() {
        let c = config("II", "");
        let r = run_regime_experiment(&c).unwrap();
        assert_eq!(r.scale_kind, ScaleKind::Rho);
        for block in [&r.betti, &r.lifetime] {
            assert!(block.scaled_mean.iter().chain(&block.scaled_variance).all(|&x| x >= 0.0));
            let g = block.covariance.len();
            let m = DMatrix::from_fn(g, g, |a, b| 0.5 * (block.covariance[a][b] + block.covariance[b][a]));
            assert!(SymmetricEigen::new(m).eigenvalues.iter().all(|&v| v >= -1e-9));
            assert!(block.targets.iter().all(|t| t.mean.is_some() && t.variance.is_some()));
        }
    }

    #[test]
    fn weak_core_localization_and_truncation_are_nested() {
        let c = config_n("III", 2e6, r#", "lambda": 0.05, "localization": 10, "truncation": 4"#);
        let (r, reps) = run_with_replications(&c).unwrap();
        for rep in &reps {
            for a in 0..2 {
                assert!(rep.truncated[a] <= rep.localized[a] && rep.localized[a] <= rep.betti[a]);
            }
        }
        assert_eq!(r.scale_kind, ScaleKind::RadiusPower);
        assert!(r.localized.unwrap().targets.iter().all(|t| t.mean.as_ref().unwrap().remainder_bound > 0.0));
    }

    #[test]
    fn outputs_are_written() {
        let c = config("I", "");
        let (r, reps) = run_with_replications(&c).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&r, &reps, dir.path()).unwrap();
        for f in ["report.json", "betti_stats.csv", "lifetime_stats.csv", "paths/betti_0.csv", "paths/lifetime_3.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let back: ExperimentReport =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(back.betti.mean, r.betti.mean);
    }
}
