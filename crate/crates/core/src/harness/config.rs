//! JSON experiment configuration.
//!
//! Schema:
//! ```json
//! {
//!   "N": 100, "L": 3.0, "seed": 7,
//!   "Q": {"coeffs": [0.0, 0.0, 1.0]},
//!   "h": {"terms": [{"c": -0.1, "sigma": 1.0}]},
//!   "mcmc": {"chains": 4, "steps": 20000, "burnin": 2000, "thin": 10},
//!   "experiment": {"type": "tail", "grid": [1.5, 1.6, 1.7]}
//! }
//! ```
//! `L` may be omitted; it then defaults to one unit past the upper support
//! endpoint of the solved equilibrium measure.

use crate::fields::{ConfiningField, InteractionSpec};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L", default)]
    pub l: Option<f64>,
    pub seed: u64,
    #[serde(rename = "Q")]
    pub q: ConfiningField,
    pub h: InteractionSpec,
    #[serde(default)]
    pub mcmc: McmcParams,
    #[serde(default)]
    pub experiment: Option<ExperimentSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcParams {
    pub chains: usize,
    /// sweeps per chain after burn-in (one sweep = N single-site proposals)
    pub steps: u64,
    pub burnin: u64,
    pub thin: u64,
}

impl Default for McmcParams {
    fn default() -> Self {
        McmcParams { chains: 4, steps: 20_000, burnin: 2_000, thin: 10 }
    }
}

/// Value grid for scan-type experiments: either explicit values or an
/// equispaced range.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
}

impl GridSpec {
    pub fn values(&self, default_min: f64, default_max: f64, default_points: usize) -> Vec<f64> {
        if let Some(g) = &self.grid {
            return g.clone();
        }
        let lo = self.min.unwrap_or(default_min);
        let hi = self.max.unwrap_or(default_max);
        let k = self.points.unwrap_or(default_points).max(2);
        (0..k)
            .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
            .collect()
    }

    pub fn explicit(&self) -> Result<Vec<f64>> {
        match (&self.grid, self.min, self.max, self.points) {
            (Some(g), ..) if !g.is_empty() => Ok(g.clone()),
            (Some(_), ..) => Ok(Vec::new()),
            (None, Some(lo), Some(hi), Some(k)) if k >= 2 => Ok((0..k)
                .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
                .collect()),
            _ => Err(Error::InvalidConfig(
                "experiment grid needs either `grid` or `min`/`max`/`points`".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentSpec {
    /// rescaled largest-particle law against the Tracy-Widom distribution
    EdgeScan {},
    /// tail frequencies on a grid of thresholds
    Tail {
        #[serde(flatten)]
        grid: GridSpec,
    },
    /// kernel diagonal scan
    Kernel {
        #[serde(flatten)]
        grid: GridSpec,
    },
    /// gap probabilities on a grid of thresholds
    Gap {
        #[serde(flatten)]
        grid: GridSpec,
    },
    /// Tracy-Widom table on a grid of rescaled coordinates
    Tw {
        #[serde(flatten)]
        grid: GridSpec,
    },
    /// tail predictions against the Tracy-Widom tail on a grid of rescaled
    /// coordinates
    Deviations {
        #[serde(flatten)]
        grid: GridSpec,
    },
    /// linearization identity report on random configurations
    LinearizeCheck {
        #[serde(default = "default_check_configs")]
        configurations: usize,
        #[serde(default = "default_check_particles")]
        particles: usize,
        #[serde(default = "default_mc_samples")]
        mc_samples: usize,
    },
    /// raw largest-particle samples
    Sample {},
}

fn default_check_configs() -> usize {
    50
}

fn default_check_particles() -> usize {
    20
}

fn default_mc_samples() -> usize {
    20_000
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig("N must be at least 2".into()));
        }
        if let Some(l) = self.l {
            if !(l > 0.0) {
                return Err(Error::InvalidConfig("L must be positive".into()));
            }
        }
        if self.mcmc.chains == 0 || self.mcmc.thin == 0 {
            return Err(Error::InvalidConfig("chains and thin must be positive".into()));
        }
        if self.mcmc.burnin >= self.mcmc.steps {
            return Err(Error::InvalidConfig("burn-in must be shorter than steps".into()));
        }
        Ok(())
    }
}
