//! Largest-particle experiments: edge-law scans and tail frequencies.

use super::mcmc::{ks_distance, run_chains, EnsembleConfig, McmcRun};
use super::report::{ExperimentReport, Table};
use crate::airy;
use crate::cdkernel::CdKernel;
use crate::cheb::Chebyshev;
use crate::deviations::{self, Regime};
use crate::equilibrium::{DeviationProfile, EquilibriumSolution};
use crate::Result;
use serde_json::json;

/// Chebyshev interpolant of the Tracy-Widom CDF on `[-8, 5]`, clamped
/// outside (where `F_2` is 2e-19 resp. 1 - 5e-10).
pub(crate) fn f2_interpolant() -> Result<Chebyshev> {
    // fit through exact Fredholm values; analytic, so 96 nodes suffice
    let mut vals: Vec<(f64, f64)> = Vec::new();
    let cheb = Chebyshev::fit(-8.0, 5.0, 96, |s| {
        let v = airy::tracy_widom_cdf(s).expect("F2 in range");
        vals.push((s, v));
        v
    });
    Ok(cheb)
}

fn f2_clamped(cheb: &Chebyshev, s: f64) -> f64 {
    if s <= -8.0 {
        0.0
    } else if s >= 5.0 {
        1.0
    } else {
        cheb.eval(s).clamp(0.0, 1.0)
    }
}

/// Summary statistics of an edge-fluctuation scan.
#[derive(Debug, Clone, Copy)]
pub struct EdgeScanSummary {
    pub ks: f64,
    pub effective_samples: f64,
    pub acceptance: f64,
    pub mixing_warning: bool,
}

/// Sample `(x_max - b) c* N^{2/3}` by MCMC and compare its empirical law
/// to the Tracy-Widom distribution.
pub fn edge_fluctuation_experiment(
    cfg: &EnsembleConfig,
    sol: &EquilibriumSolution,
) -> Result<(ExperimentReport, EdgeScanSummary)> {
    let run = run_chains(cfg)?;
    let (_, b) = sol.support();
    let c_star = sol.edge_constants().c_star;
    let scale = c_star * (cfg.n as f64).powf(2.0 / 3.0);
    let mut rescaled: Vec<f64> = run
        .pooled_xmax()
        .iter()
        .map(|&x| (x - b) * scale)
        .collect();
    let cheb = f2_interpolant()?;
    let ks = ks_distance(&mut rescaled, |s| f2_clamped(&cheb, s));
    let summary = EdgeScanSummary {
        ks,
        effective_samples: run.effective_samples(),
        acceptance: run.acceptance,
        mixing_warning: run.mixing_warning,
    };
    let mut table = Table::new("edge_scan", "s,empirical_cdf,F2");
    let m = rescaled.len();
    let rows = m.min(512);
    for r in 0..rows {
        let idx = ((r as f64 + 0.5) / rows as f64 * m as f64) as usize;
        let s = rescaled[idx.min(m - 1)];
        table.push_floats(&[s, (idx + 1) as f64 / m as f64, f2_clamped(&cheb, s)]);
    }
    let mut report = ExperimentReport::new(json!({
        "experiment": "edge-scan",
        "N": cfg.n,
        "seed": cfg.seed,
        "chains": cfg.chains,
        "b": b,
        "c_star": c_star,
        "ks_distance": ks,
        "effective_samples": summary.effective_samples,
        "acceptance": summary.acceptance,
        "iact_thinned": run.iact_thinned,
        "mixing_warning": run.mixing_warning,
    }));
    report.push_table(table);
    Ok((report, summary))
}

/// Deterministal cross-check of the edge law: exact gap probabilities of
/// the kernel against `F_2` on a grid of rescaled coordinates. Returns the
/// rows `(s, gap, F2)` and their sup distance.
pub fn edge_law_determinantal(
    kernel: &CdKernel,
    sol: &EquilibriumSolution,
    s_grid: &[f64],
) -> Result<(Vec<(f64, f64, f64)>, f64)> {
    let n = kernel.weight().n_particles() as f64;
    let (_, b) = sol.support();
    let scale = sol.edge_constants().c_star * n.powf(2.0 / 3.0);
    let mut rows = Vec::with_capacity(s_grid.len());
    let mut sup = 0.0f64;
    for &s in s_grid {
        let gap = kernel.gap_probability(b + s / scale)?;
        let f2 = airy::tracy_widom_cdf(s)?;
        sup = sup.max((gap - f2).abs());
        rows.push((s, gap, f2));
    }
    Ok((rows, sup))
}

/// One threshold of a tail scan.
#[derive(Debug, Clone, Copy)]
pub struct TailPoint {
    pub t: f64,
    /// rescaled coordinate `(t - b) c* N^{2/3}`
    pub s: f64,
    pub empirical: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// leading-order prediction
    pub predicted: f64,
    /// exact Fredholm complement for determinantal references
    pub fredholm: Option<f64>,
    pub regime: Regime,
    /// expected tail count below 10: frequencies reported but not reliable
    pub censored: bool,
}

fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054; // 97.5% normal quantile
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Empirical tail frequencies of `x_max` against the leading-order
/// prediction, with Wilson intervals and regime flags; determinantal runs
/// may pass a kernel for the exact Fredholm reference.
pub fn tail_experiment(
    cfg: &EnsembleConfig,
    profile: &DeviationProfile,
    grid: &[f64],
    reference: Option<&CdKernel>,
) -> Result<(ExperimentReport, Vec<TailPoint>)> {
    let b = profile.upper_endpoint();
    let scale = profile.c_star() * (cfg.n as f64).powf(2.0 / 3.0);
    let run: Option<McmcRun> = if grid.is_empty() { None } else { Some(run_chains(cfg)?) };
    let pooled = run.as_ref().map(McmcRun::pooled_xmax).unwrap_or_default();
    let mut points = Vec::with_capacity(grid.len());
    for &t in grid {
        let hits = pooled.iter().filter(|&&x| x > t).count() as u64;
        let trials = pooled.len() as u64;
        let (lo, hi) = wilson_interval(hits, trials);
        let predicted = deviations::tail_probability(profile, cfg.n, t)?;
        let fredholm = match reference {
            Some(kernel) => Some(1.0 - kernel.gap_probability(t)?),
            None => None,
        };
        points.push(TailPoint {
            t,
            s: (t - b) * scale,
            empirical: hits as f64 / (trials.max(1)) as f64,
            wilson_low: lo,
            wilson_high: hi,
            predicted: predicted.value,
            fredholm,
            regime: predicted.regime,
            censored: trials as f64 * predicted.value < 10.0,
        });
    }
    let mut table = Table::new(
        "tail",
        "t,s,empirical,wilson_low,wilson_high,F_NV,fredholm,regime,censored",
    );
    for p in &points {
        table.push_row(format!(
            "{},{},{},{},{},{},{},{},{}",
            super::report::format_float(p.t),
            super::report::format_float(p.s),
            super::report::format_float(p.empirical),
            super::report::format_float(p.wilson_low),
            super::report::format_float(p.wilson_high),
            super::report::format_float(p.predicted),
            p.fredholm.map(super::report::format_float).unwrap_or_default(),
            p.regime.as_str(),
            p.censored,
        ));
    }
    let mut report = ExperimentReport::new(json!({
        "experiment": "tail",
        "N": cfg.n,
        "seed": cfg.seed,
        "samples": pooled.len(),
        "effective_samples": run.as_ref().map(McmcRun::effective_samples).unwrap_or(0.0),
        "b": b,
        "c_star": profile.c_star(),
    }));
    report.push_table(table);
    Ok((report, points))
}

/// One-point density estimate from kept configurations: the mean fraction
/// of particles in `[center - w, center + w]` over `2 w N`, with a
/// between-chain standard error.
pub fn bulk_density_estimate(
    run: &McmcRun,
    n_particles: usize,
    center: f64,
    half_window: f64,
) -> Option<(f64, f64)> {
    let configs = run.configs.as_ref()?;
    let mut chain_means = Vec::with_capacity(configs.len());
    for chain in configs {
        if chain.is_empty() {
            continue;
        }
        let mut acc = 0.0;
        for x in chain {
            let count = x.iter().filter(|&&v| (v - center).abs() <= half_window).count();
            acc += count as f64;
        }
        let denom = chain.len() as f64 * n_particles as f64 * 2.0 * half_window;
        chain_means.push(acc / denom);
    }
    let c = chain_means.len();
    if c == 0 {
        return None;
    }
    let mean = chain_means.iter().sum::<f64>() / c as f64;
    if c == 1 {
        return Some((mean, f64::INFINITY));
    }
    let var = chain_means
        .iter()
        .map(|&m| (m - mean) * (m - mean))
        .sum::<f64>()
        / (c as f64 - 1.0);
    Some((mean, (var / c as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdkernel::WeightSpec;
    use crate::equilibrium::SmoothField;
    use crate::fields::{ConfiningField, InteractionSpec};

    #[test]
    fn wilson_interval_behaves() {
        let (lo, hi) = wilson_interval(0, 100);
        assert!(lo <= 1e-12);
        assert!(hi > 0.0 && hi < 0.06);
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5);
        assert!(hi - lo < 0.25);
    }

    #[test]
    fn empty_grid_gives_empty_report() {
        let q = ConfiningField::quadratic(1.0);
        let f = SmoothField::from_confining(&q, 3.0).unwrap();
        let sol = EquilibriumSolution::solve(f).unwrap();
        let profile = DeviationProfile::new(&sol, 1).unwrap();
        let cfg = EnsembleConfig {
            n: 8,
            q,
            h: InteractionSpec::zero(),
            half_width: 3.0,
            seed: 1,
            chains: 1,
            steps: 100,
            burnin: 10,
            thin: 1,
            init_span: (-1.0, 1.0),
            keep_configs: false,
        };
        let (report, points) = tail_experiment(&cfg, &profile, &[], None).unwrap();
        assert!(points.is_empty());
        assert_eq!(report.table("tail").unwrap().rows.len(), 0);
    }

    #[test]
    fn determinantal_edge_law_is_close_at_moderate_n() {
        let q = ConfiningField::quadratic(1.0);
        let l = 2.6;
        let f = SmoothField::from_confining(&q, l).unwrap();
        let sol = EquilibriumSolution::solve(f.clone()).unwrap();
        let w = WeightSpec::new(60, f, l).unwrap();
        let kernel = CdKernel::new(w).unwrap();
        let grid = [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0];
        let (rows, sup) = edge_law_determinantal(&kernel, &sol, &grid).unwrap();
        assert_eq!(rows.len(), grid.len());
        assert!(sup < 0.12, "edge-law sup distance {sup} at N = 60");
        // gaps increase along the grid like a CDF
        for w in rows.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-9);
        }
    }

    #[test]
    fn f2_interpolant_matches_exact_values() {
        let cheb = f2_interpolant().unwrap();
        for &s in &[-6.0, -3.3, -1.0, 0.0, 2.2, 4.0] {
            let exact = airy::tracy_widom_cdf(s).unwrap();
            assert!((f2_clamped(&cheb, s) - exact).abs() < 1e-8);
        }
        assert_eq!(f2_clamped(&cheb, -9.0), 0.0);
        assert_eq!(f2_clamped(&cheb, 6.0), 1.0);
    }
}
