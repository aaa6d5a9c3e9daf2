//! Experiment harness: Metropolis sampling of the interacting ensemble,
//! largest-particle experiments, configuration and reporting.

mod config;
mod experiment;
mod mcmc;
mod report;

pub use config::{ExperimentConfig, ExperimentSpec, GridSpec, McmcParams};
pub use experiment::{
    bulk_density_estimate, edge_fluctuation_experiment, edge_law_determinantal, tail_experiment,
    EdgeScanSummary, TailPoint,
};
pub use mcmc::{ks_distance, log_density, run_chains, two_sample_ks, EnsembleConfig, McmcRun};
pub use report::{format_float, ExperimentReport, Table};
