use crate::error::{Error, Result};
use crate::sampler::{DensitySpec, Regime};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

fn default_k() -> usize {
    1
}

fn default_target_samples() -> u64 {
    200_000
}

fn default_path_count() -> usize {
    4
}

/// How each replication's point cloud outside the cutoff is produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Draw only the points beyond the cutoff radius.
    #[default]
    Outside,
    /// Draw the whole process, then discard points inside the cutoff.
    Full,
}

/// One end-to-end experiment, read from a single JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub density: DensitySpec,
    pub regime: Regime,
    pub n: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Overrides the cutoff radius solved from the regime equation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub t_grid: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
    /// Largest component size kept in the truncated statistics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    /// Outer radius of the localization annulus in units of the cutoff; absent means unbounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub localization: Option<f64>,
    #[serde(default)]
    pub sampling: SamplingMode,
    #[serde(default = "default_target_samples")]
    pub target_samples: u64,
    /// Replications whose per-time paths are written under `paths/`.
    #[serde(default = "default_path_count")]
    pub path_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| {
            Err(Error::Config {
                line: 0,
                column: 0,
                message,
            })
        };
        if self.replications < 2 {
            return fail(format!("replications = {} must be at least 2", self.replications));
        }
        if self.t_grid.is_empty() {
            return fail("t_grid is empty".into());
        }
        if self.t_grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return fail("t_grid values must be finite and positive".into());
        }
        if self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return fail("t_grid must be strictly increasing".into());
        }
        if self.k < 1 {
            return fail("k must be at least 1".into());
        }
        if self.density.d() < 1 {
            return fail("dimension must be positive".into());
        }
        if self.regime == Regime::WeakCore {
            if self.t_grid.last().is_some_and(|&t| t > 1.0) {
                return fail("regime III experiments need t_grid within (0, 1]".into());
            }
            if self.lambda.is_none() && self.radius.is_none() {
                return fail("regime III needs lambda".into());
            }
            if self.truncation.is_some_and(|m| m < self.k + 2) {
                return fail(format!("truncation must be at least k + 2 = {}", self.k + 2));
            }
        }
        if let Some(k_loc) = self.localization {
            if !(k_loc >= 1.0) {
                return fail(format!("localization = {k_loc} must be at least 1"));
            }
        }
        if self.radius.is_some_and(|r| !(r >= 0.0)) {
            return fail("radius must be non-negative".into());
        }
        if self.target_samples < 2 {
            return fail("target_samples must be at least 2".into());
        }
        Ok(())
    }

    pub fn t_max(&self) -> f64 {
        *self.t_grid.last().unwrap()
    }
}
