//! Replicated experiments, statistical confrontation with limit targets, and
//! the Palm identity check.

mod config;
mod experiment;
mod palm;
mod stats;

pub use config::{ExperimentConfig, SamplingMode};
pub use experiment::{
    component_bettis, count_connected_subsets, farthest_point, run_regime_experiment, run_replication,
    run_with_replications, worker_pool, write_outputs, Comparison, ExperimentReport, Replication, ScalarStat,
    ScaleKind, StatBlock, TimeTargets, DEFAULT_TRUNCATION,
};
pub use palm::{palm_identity_check, PalmCheck, PalmFunctional};
pub use stats::{
    distribution_tests, sample_covariance, sample_variance, variance_std_error, DistributionSummary, MIN_SAMPLES,
};
