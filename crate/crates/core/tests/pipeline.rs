use barsum::filtration::build_filtered_complex;
use barsum::harness::{run_regime_experiment, ExperimentConfig};
use barsum::homology::cech_betti;
use barsum::persistence::{barcode, betti_curve, lifetime_sum};
use barsum::sampler::{restrict_outside, sample_cloud, DensitySpec, Regime, RegimeSpec};
use barsum::seed::SeedRecord;

fn config(replications: usize) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{"density": {{"d": 2, "alpha": 4}}, "regime": "I", "n": 1500, "t_grid": [0.5, 1.0],
            "replications": {replications}, "seed": 42, "target_samples": 20000}}"#
    ))
    .unwrap()
}

#[test]
fn restricted_cloud_barcode_matches_direct_homology() {
    let density = DensitySpec::power_law(2, 4.0).unwrap();
    let regime = RegimeSpec::resolve(&density, Regime::Sparse, 3000.0, 1, None, None).unwrap();
    let cloud = restrict_outside(&sample_cloud(&density, 3000.0, SeedRecord::new(9)).unwrap(), regime.radius * 0.8);
    assert!(!cloud.is_empty() && cloud.len() <= 64, "{}", cloud.len());
    let complex = build_filtered_complex(cloud.view(), 2, 2.0).unwrap();
    let bc = barcode(&complex, 1).unwrap();
    let curve = betti_curve(&bc);
    let pts: Vec<&[f64]> = cloud.view().iter().collect();
    for t in [0.25, 0.5, 1.0, 1.5] {
        assert_eq!(curve.at(t), cech_betti(&pts, t, 1));
    }
    assert!(lifetime_sum(&bc, 2.0) >= 0.0);
}

#[test]
fn reports_are_reproducible_and_seed_sensitive() {
    let a = run_regime_experiment(&config(40)).unwrap();
    let b = run_regime_experiment(&config(40)).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let mut other = config(40);
    other.seed = 43;
    let c = run_regime_experiment(&other).unwrap();
    assert_ne!(a.mean_points, c.mean_points);
}

#[test]
fn regime_one_mean_has_the_right_order() {
    let report = run_regime_experiment(&config(400)).unwrap();
    let cmp = report.betti.targets[1].mean.as_ref().unwrap();
    // Finite-n boundary effects keep the mean below the limit, but not by an order of magnitude.
    assert!(cmp.empirical > 0.1 * cmp.target.value && cmp.empirical < 2.0 * cmp.target.value, "{cmp:?}");
    assert!((report.mean_points - report.expected_points).abs() < 0.1 * report.expected_points);
}
