//! The acceptance suite: twelve end-to-end criteria, each reduced to a
//! pass/fail verdict with a one-line account of the numbers behind it.

use crate::error::{Error, Result};
use crate::estimate::{monte_carlo_mean, LimitEstimate};
use crate::filtration::build_filtered_complex;
use crate::geometry::{ball_volume, uniform_in_ball, PointsView};
use crate::harness::{
    palm_identity_check, run_regime_experiment, run_with_replications, sample_covariance, worker_pool, write_outputs,
    ExperimentConfig, ExperimentReport, PalmFunctional, SamplingMode,
};
use crate::homology::cech_betti;
use crate::limits::{c_k, indicator_integral, simulate_v, IntegralKind, ModelParams, YSimulator};
use crate::oracles::{h, hole_thresholds, is_connected};
use crate::persistence::{barcode, betti_curve, lifetime_sum, lifetime_sum_by_integration};
use crate::sampler::{default_regime_two_gamma, DensitySpec, Regime, RegimeSpec};
use crate::seed::SeedRecord;
use rand::Rng;
use std::sync::OnceLock;
use std::time::Instant;

const D: usize = 2;
const K: usize = 1;
const ALPHA: f64 = 4.0;

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} criterion {:>2} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

pub const CRITERIA: [(u8, &str); 12] = [
    (1, "identity"),
    (2, "rank"),
    (3, "indicator"),
    (4, "scaling"),
    (5, "regime-one"),
    (6, "sparsity"),
    (7, "regime-two"),
    (8, "regime-three"),
    (9, "processes"),
    (10, "geometry"),
    (11, "palm"),
    (12, "determinism"),
];

/// Criterion ids selected by a suite name: `all`, `quick`, a criterion name, or its number.
pub fn suite(name: &str) -> Result<Vec<u8>> {
    match name {
        "all" => Ok(CRITERIA.iter().map(|c| c.0).collect()),
        "quick" => Ok(vec![1, 2, 3, 4, 10, 11]),
        _ => CRITERIA
            .iter()
            .find(|(id, n)| *n == name || id.to_string() == name)
            .map(|(id, _)| vec![*id])
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite '{name}'"))),
    }
}

pub fn run_criterion(id: u8) -> CriterionOutcome {
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|c| c.1)
        .unwrap_or("unknown");
    let start = Instant::now();
    let result = match id {
        1 => lifetime_identity(),
        2 => rank_oracle(),
        3 => indicator_agreement(),
        4 => scaling_law(),
        5 => regime_one_poisson(),
        6 => regime_one_sparsity(),
        7 => regime_two_variance(),
        8 => regime_three_covariance(),
        9 => limit_processes(),
        10 => geometric_bound(),
        11 => palm_identity(),
        12 => determinism(),
        _ => Err(Error::InvalidArgument(format!("no criterion {id}"))),
    };
    let secs = start.elapsed().as_secs_f64();
    match result {
        Ok((passed, detail)) => CriterionOutcome {
            id,
            name,
            passed,
            detail: format!("{detail} [{secs:.1}s]"),
        },
        Err(e) => CriterionOutcome {
            id,
            name,
            passed: false,
            detail: format!("error: {e} [{secs:.1}s]"),
        },
    }
}

type Verdict = Result<(bool, String)>;

fn density() -> DensitySpec {
    DensitySpec::power_law(D, ALPHA).expect("valid power law")
}

fn model() -> ModelParams {
    ModelParams::new(D, K, ALPHA).expect("valid model")
}

fn uniform_cloud<R: Rng>(rng: &mut R, n: usize, side: f64) -> Vec<f64> {
    (0..n * D).map(|_| rng.random_range(0.0..side)).collect()
}

fn lifetime_identity() -> Verdict {
    let mut rng = SeedRecord::new(101).rng();
    let mut worst: f64 = 0.0;
    let t_max = 1.5;
    for _ in 0..200 {
        let n = rng.random_range(5..=60);
        let coords = uniform_cloud(&mut rng, n, 3.0);
        let complex = build_filtered_complex(PointsView::new(D, &coords), K + 1, t_max)?;
        for k in 0..=K {
            let bc = barcode(&complex, k)?;
            let curve = betti_curve(&bc);
            for _ in 0..10 {
                let t = rng.random_range(0.0..t_max);
                worst = worst.max((lifetime_sum(&bc, t) - lifetime_sum_by_integration(&curve, t)).abs());
            }
        }
    }
    Ok((worst <= 1e-9, format!("200 clouds, max |sum - integral| = {worst:.3e} (tolerance 1e-9)")))
}

fn rank_oracle() -> Verdict {
    let mut rng = SeedRecord::new(102).rng();
    let mut mismatches = 0;
    let mut checked = 0;
    for _ in 0..100 {
        let n = rng.random_range(3..=8);
        let coords = uniform_cloud(&mut rng, n, 1.0);
        let view = PointsView::new(D, &coords);
        let pts: Vec<&[f64]> = view.iter().collect();
        let complex = build_filtered_complex(view, K + 1, f64::INFINITY)?;
        for k in 0..=K {
            let curve = betti_curve(&barcode(&complex, k)?);
            for v in complex.values() {
                checked += 1;
                if curve.at(v) != cech_betti(&pts, v, k) {
                    mismatches += 1;
                }
            }
        }
    }
    Ok((
        mismatches == 0,
        format!("{checked} filtration values on 100 clouds, {mismatches} mismatches"),
    ))
}

fn indicator_agreement() -> Verdict {
    let mut rng = SeedRecord::new(103).rng();
    let mut disagree = 0;
    let mut non_monotone = 0;
    let grid: Vec<f64> = (0..=60).map(|i| i as f64 * 0.025).collect();
    for _ in 0..1000 {
        let coords = uniform_cloud(&mut rng, 3, 1.0);
        let pts: Vec<&[f64]> = coords.chunks_exact(D).collect();
        let t = rng.random_range(0.0..1.5);
        if h(&pts, K, t)? != (cech_betti(&pts, t, K) == 1) {
            disagree += 1;
        }
        let th = hole_thresholds(&pts, K)?;
        let plus: Vec<bool> = grid.iter().map(|&s| th.h_plus(s)).collect();
        let minus: Vec<bool> = grid.iter().map(|&s| th.h_minus(s)).collect();
        if plus.windows(2).any(|w| w[0] && !w[1]) || minus.windows(2).any(|w| w[0] && !w[1]) {
            non_monotone += 1;
        }
    }
    Ok((
        disagree == 0 && non_monotone == 0,
        format!("1000 triangles, {disagree} disagreements with homology, {non_monotone} non-monotone"),
    ))
}

fn scaling_law() -> Verdict {
    let m = model();
    let one = indicator_integral(IntegralKind::Hole, &m, 1.0, 400_000, SeedRecord::new(104).named("t1"))?;
    let two = indicator_integral(IntegralKind::Hole, &m, 2.0, 400_000, SeedRecord::new(104).named("t2"))?;
    let ratio = two.value / one.value;
    let se = ratio * ((one.std_error / one.value).powi(2) + (two.std_error / two.value).powi(2)).sqrt();
    let expected = 2f64.powi(m.time_exponent());
    let gap = (ratio - expected).abs();
    Ok((
        gap <= 3.0 * se,
        format!("ratio {ratio:.4} ± {se:.4} vs {expected} (|gap| = {gap:.4}, 3 SE = {:.4})", 3.0 * se),
    ))
}

const REGIME_ONE_N: [f64; 3] = [500.0, 1500.0, 5000.0];
/// Replications per grid point for the trend checks; the fixed-n checks use 500.
const REGIME_ONE_TREND_REPS: usize = 20_000;

fn regime_one_config(n: f64, index: u64) -> ExperimentConfig {
    ExperimentConfig {
        density: density(),
        regime: Regime::Sparse,
        n,
        k: K,
        lambda: None,
        gamma: None,
        radius: None,
        t_grid: vec![1.0],
        replications: 500,
        seed: 500 + index,
        truncation: None,
        localization: None,
        sampling: SamplingMode::Outside,
        target_samples: 400_000,
        path_count: 0,
        output_dir: None,
    }
}

fn regime_one_trend() -> std::result::Result<&'static Vec<ExperimentReport>, String> {
    static RUNS: OnceLock<std::result::Result<Vec<ExperimentReport>, String>> = OnceLock::new();
    RUNS.get_or_init(|| {
        REGIME_ONE_N
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let config = ExperimentConfig {
                    replications: REGIME_ONE_TREND_REPS,
                    seed: 550 + i as u64,
                    ..regime_one_config(n, 0)
                };
                run_regime_experiment(&config).map_err(|e| e.to_string())
            })
            .collect()
    })
    .as_ref()
    .map_err(|e| e.clone())
}

fn regime_one_poisson() -> Verdict {
    let report = run_regime_experiment(&regime_one_config(5000.0, 2))?;
    let dist = report.betti.distribution[0]
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("too few replications".into()))?;
    let cmp = report.betti.targets[0].mean.clone().unwrap();
    let target = cmp.target.clone();
    let trend = regime_one_trend().map_err(Error::InvalidArgument)?;
    let gaps: Vec<f64> = trend.iter().map(|r| (r.betti.mean[0] - target.value).abs()).collect();
    let dispersion_ok = (0.8..=1.2).contains(&dist.dispersion);
    let mean_ok = cmp.gap <= 3.0 * cmp.empirical_se.hypot(target.std_error);
    let trend_ok = gaps.windows(2).all(|w| w[1] <= w[0]);
    Ok((
        dispersion_ok && mean_ok && trend_ok,
        format!(
            "n = 5000 over 500 reps: dispersion {:.3}, mean {:.4} ± {:.4} vs target {:.4} ± {:.4}; \
             gaps over n = {:?} ({} reps each): {}",
            dist.dispersion,
            cmp.empirical,
            cmp.empirical_se,
            target.value,
            target.std_error,
            REGIME_ONE_N,
            REGIME_ONE_TREND_REPS,
            fmt_list(&gaps)
        ),
    ))
}

fn regime_one_sparsity() -> Verdict {
    let trend = regime_one_trend().map_err(Error::InvalidArgument)?;
    let means: Vec<f64> = trend.iter().map(|r| r.connected_subsets.as_ref().map_or(0.0, |c| c.mean)).collect();
    let last = *means.last().unwrap();
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    Ok((
        decreasing && last < 0.05,
        format!(
            "mean connected 4-subsets over n = {:?}: {} (need decreasing and < 0.05 at n = 5000)",
            REGIME_ONE_N,
            fmt_list(&means)
        ),
    ))
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn regime_two_config(n: f64, gamma: Option<f64>, index: u64) -> ExperimentConfig {
    ExperimentConfig {
        regime: Regime::Intermediate,
        gamma,
        t_grid: vec![1.0],
        seed: 700 + index,
        ..regime_one_config(n, 0)
    }
}

/// Ratios of the rho-scaled variance to its target over the grid, and whether
/// the last one is within 25%.
fn regime_two_trend(grid: &[f64], gamma: f64, radius: impl Fn(f64) -> Option<f64>, seed: u64) -> Result<(Vec<f64>, f64, bool)> {
    let mut ratios = Vec::new();
    let mut last = None;
    for (i, &n) in grid.iter().enumerate() {
        let config = ExperimentConfig {
            radius: radius(n),
            ..regime_two_config(n, Some(gamma), seed + i as u64)
        };
        let report = run_regime_experiment(&config)?;
        let cmp = report.betti.targets[0].variance.clone().unwrap();
        ratios.push(cmp.empirical / cmp.target.value);
        last = Some((report.rho, cmp));
    }
    let (rho, cmp) = last.unwrap();
    Ok((ratios, rho, (cmp.empirical - cmp.target.value).abs() <= 0.25 * cmp.target.value))
}

fn regime_two_variance() -> Verdict {
    let density = density();
    let grid = [1e5, 1e7, 1e9];
    let stated_gamma = 0.5;
    let mut detail = match RegimeSpec::resolve(&density, Regime::Intermediate, grid[0], K, None, Some(stated_gamma)) {
        Ok(_) => String::new(),
        Err(e) => format!("{e}; "),
    };
    // The stated exponent, run anyway with the cutoff solved from n f(R) = n^{-gamma}.
    let c = density.normalizer();
    let cutoff = |n: f64| Some((c * n.powf(1.0 + stated_gamma) - 1.0).max(0.0).powf(0.25));
    let (ratios, rho, within) = regime_two_trend(&grid, stated_gamma, cutoff, 700)?;
    detail.push_str(&format!(
        "gamma = 1/2: variance/target over n = {grid:?}: {}, rho = {rho:.2e}, {} 25%",
        fmt_list(&ratios),
        if within { "within" } else { "outside" }
    ));
    // Diagnostic only: the admissible default exponent.
    let gamma = default_regime_two_gamma(D, ALPHA, K);
    let (ratios, rho, inside) = regime_two_trend(&grid, gamma, |_| None, 710)?;
    detail.push_str(&format!(
        "; diagnostic gamma = {gamma}: {}, rho = {rho:.1}, {} 25%",
        fmt_list(&ratios),
        if inside { "within" } else { "outside" }
    ));
    Ok((within, detail))
}

fn regime_three_config(n: f64, index: u64) -> ExperimentConfig {
    ExperimentConfig {
        regime: Regime::WeakCore,
        lambda: Some(0.05),
        truncation: Some(6),
        localization: Some(10.0),
        t_grid: vec![0.5, 1.0],
        seed: 800 + index,
        ..regime_one_config(n, 0)
    }
}

const REGIME_THREE_RADII: [f64; 3] = [50.0, 100.0, 200.0];

fn regime_three_covariance() -> Verdict {
    let density = density();
    let mut reports = Vec::new();
    for (i, &r) in REGIME_THREE_RADII.iter().enumerate() {
        // Intensity placing the weak-core radius at r.
        let n = 0.05 * (1.0 + r.powi(4)) / density.normalizer();
        reports.push(run_regime_experiment(&regime_three_config(n, i as u64))?);
    }
    let first = reports.first().unwrap().localized.clone().unwrap();
    let last_report = reports.last().unwrap();
    let last = last_report.localized.clone().unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (a, t) in last_report.t_grid.iter().enumerate() {
        for (label, pick) in [("mean", 0usize), ("variance", 1)] {
            let get = |b: &crate::harness::StatBlock| {
                let tg = &b.targets[a];
                if pick == 0 {
                    tg.mean.clone().unwrap()
                } else {
                    tg.variance.clone().unwrap()
                }
            };
            let end = get(&last);
            let start = get(&first);
            let trend = end.gap <= start.gap;
            ok &= end.within && trend;
            parts.push(format!(
                "t = {t} {label}: {:.3e} ± {:.1e} vs {:.3e} ± {:.1e} + bound {:.1e} (z = {:.2}, gap {:.2e} -> {:.2e})",
                end.empirical,
                end.empirical_se,
                end.target.value,
                end.target.std_error,
                end.remainder_bound,
                end.z,
                start.gap,
                end.gap
            ));
        }
    }
    Ok((ok, format!("R = {:.1}: {}", last_report.regime.radius, parts.join("; "))))
}

fn limit_processes() -> Verdict {
    let m = model();
    let ck = c_k(D, K, ALPHA)?;
    let seed = SeedRecord::new(109);
    let hole = indicator_integral(IntegralKind::Hole, &m, 1.0, 400_000, seed.named("hole"))?.scaled(ck);
    let grid = [1.0, 1.5, 2.0];
    let paths = 2000;
    let mut values = vec![Vec::with_capacity(paths); grid.len()];
    for p in 0..paths {
        let path = simulate_v(&grid, &m, 2.0, seed.named("v").child(p as u64))?;
        for (a, v) in path.values.iter().enumerate() {
            values[a].push(*v);
        }
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for (a, &t) in grid.iter().enumerate() {
        let xs = &values[a];
        let mean = xs.iter().sum::<f64>() / paths as f64;
        let var = crate::harness::sample_variance(xs);
        let dispersion = var / mean;
        let target = hole.scaled(t.powi(m.time_exponent()));
        let emp = LimitEstimate::monte_carlo(mean, (var / paths as f64).sqrt(), paths as u64, seed);
        let good = (0.85..=1.15).contains(&dispersion) && emp.agrees_with(&target, 3.0);
        ok &= good;
        parts.push(format!("V({t}) mean {mean:.3} vs {:.3}, dispersion {dispersion:.3}", target.value));
    }

    let y_grid = [0.5, 1.0];
    let sim = YSimulator::new(&y_grid, &m, 200_000, seed.named("y-covariance"))?;
    let plus = indicator_integral(IntegralKind::HolePlus, &m, 1.0, 400_000, seed.named("plus"))?.scaled(ck);
    let minus = indicator_integral(IntegralKind::HoleMinus, &m, 1.0, 400_000, seed.named("minus"))?.scaled(ck);
    let draws = 4000;
    let mut rng = seed.named("y-paths").rng();
    let mut yp = vec![Vec::with_capacity(draws); y_grid.len()];
    let mut ym = vec![Vec::with_capacity(draws); y_grid.len()];
    for _ in 0..draws {
        let (_, p, q) = sim.sample(&mut rng);
        for a in 0..y_grid.len() {
            yp[a].push(p.values[a]);
            ym[a].push(q.values[a]);
        }
    }
    let mut worst_z: f64 = 0.0;
    for (series, d_const) in [(&yp, &plus), (&ym, &minus)] {
        for a in 0..y_grid.len() {
            for b in a..y_grid.len() {
                let (cov, se) = sample_covariance(&series[a], &series[b]);
                let target = d_const.scaled(y_grid[a].min(y_grid[b]).powi(m.time_exponent()));
                let z = (cov - target.value).abs() / se.hypot(target.std_error);
                worst_z = worst_z.max(z);
                ok &= z <= 3.0;
            }
        }
    }
    parts.push(format!("Y covariance worst z = {worst_z:.2} over {draws} paths"));
    Ok((ok, parts.join("; ")))
}

fn geometric_bound() -> Verdict {
    let omega = ball_volume(D);
    let mut ok = true;
    let mut parts = Vec::new();
    for i in [3usize, 4] {
        let free = i - 1;
        let radius = (i - 1) as f64;
        let volume = (omega * radius.powi(D as i32)).powi(free as i32);
        let origin = [0.0; D];
        let (p, se) = monte_carlo_mean(1_000_000, SeedRecord::new(110).child(i as u64), |rng| {
            let mut coords = vec![0.0; i * D];
            for c in coords[D..].chunks_exact_mut(D) {
                uniform_in_ball(rng, &origin, radius, c);
            }
            let pts: Vec<&[f64]> = coords.chunks_exact(D).collect();
            is_connected(&pts, 1.0) as u8 as f64
        });
        let (est, se) = (p * volume, se * volume);
        let bound = (i as f64).powi(i as i32 - 2) * omega.powi(free as i32);
        ok &= est + 3.0 * se <= bound;
        parts.push(format!("i = {i}: {est:.3} ± {se:.3} <= {bound:.3}"));
    }
    Ok((ok, parts.join("; ")))
}

fn palm_identity() -> Verdict {
    let density = density();
    let one = palm_identity_check(PalmFunctional::InBall { radius: 1.0 }, 30.0, &density, 4000, SeedRecord::new(111))?;
    let two = palm_identity_check(PalmFunctional::PairWithin { r: 0.5 }, 30.0, &density, 4000, SeedRecord::new(112))?;
    let quad = one.quadrature.clone().unwrap();
    let ok = one.lhs.agrees_with(&one.rhs, 3.0)
        && one.lhs.agrees_with(&quad, 3.0)
        && one.rhs.agrees_with(&quad, 3.0)
        && two.lhs.agrees_with(&two.rhs, 3.0);
    Ok((
        ok,
        format!(
            "l = 1: {:.3} ± {:.3} / {:.3} ± {:.3} / quadrature {:.3}; l = 2: {:.3} ± {:.3} / {:.3} ± {:.3}",
            one.lhs.value,
            one.lhs.std_error,
            one.rhs.value,
            one.rhs.std_error,
            quad.value,
            two.lhs.value,
            two.lhs.std_error,
            two.rhs.value,
            two.rhs.std_error
        ),
    ))
}

fn determinism() -> Verdict {
    let config = ExperimentConfig {
        replications: 100,
        target_samples: 50_000,
        path_count: 2,
        ..regime_one_config(1500.0, 12)
    };
    let dir = std::env::temp_dir().join(format!("barsum-determinism-{}", std::process::id()));
    let mut bytes = Vec::new();
    for workers in [1, 2, 8] {
        let (report, reps) = worker_pool(Some(workers))?.install(|| run_with_replications(&config))?;
        let out = dir.join(format!("w{workers}"));
        write_outputs(&report, &reps, &out)?;
        bytes.push(std::fs::read(out.join("report.json"))?);
    }
    let _ = std::fs::remove_dir_all(&dir);
    let same = bytes.windows(2).all(|w| w[0] == w[1]);
    Ok((same, format!("report.json under 1, 2 and 8 workers: {} bytes, identical = {same}", bytes[0].len())))
}
