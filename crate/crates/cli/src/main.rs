//! Experiment CLI: equilibrium measures, kernels, Tracy-Widom tables,
//! deviation scans and MCMC experiments, driven by a JSON config.
//!
//! Exit codes: 0 success, 1 configuration/validation error, 2 numerical
//! failure.

use clap::{Parser, Subcommand};
use loggas::cdkernel::{CdKernel, WeightSpec};
use loggas::deviations::{self, Regime};
use loggas::equilibrium::{
    self, DeviationProfile, EquilibriumSolution, FixedPointOptions,
};
use loggas::harness::{
    edge_fluctuation_experiment, format_float, run_chains, tail_experiment, EnsembleConfig,
    ExperimentConfig, ExperimentReport, ExperimentSpec, Table,
};
use loggas::linearize::{
    variance_identity_check, HoeffdingStatistic, SpectralSampler,
};
use loggas::{airy, Error};
use serde_json::json;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "loggas", version, about = "repulsive particle system experiments")]
struct Cli {
    /// JSON experiment configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV tables and meta.json
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Suppress the stdout summary
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equilibrium measure and print its constants
    Equilibrium,
    /// Kernel diagonal and one-point function scan
    Kernel,
    /// Gap probabilities on a threshold grid
    Gap,
    /// Tracy-Widom distribution table
    Tw,
    /// MCMC edge-fluctuation experiment against the Tracy-Widom law
    EdgeScan,
    /// Tail predictions against the Tracy-Widom tail
    Deviations,
    /// Linearization identity report
    LinearizeCheck,
    /// Raw largest-particle samples
    Sample,
    /// Empirical tail frequencies against predictions
    Tail,
}

fn main() {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(&cli) {
        Ok(summary) => {
            if !cli.quiet {
                println!("{summary}");
                println!("done in {:.1?}, outputs in {}", started.elapsed(), cli.out.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) | Error::Json(_) | Error::Io(_) | Error::DomainError(_) => 1,
        _ => 2,
    }
}

/// Solved pipeline shared by the subcommands.
struct Pipeline {
    cfg: ExperimentConfig,
    sol: EquilibriumSolution,
    half_width: f64,
    fixed_point_residual: f64,
}

impl Pipeline {
    fn solve(mut cfg: ExperimentConfig, seed_override: Option<u64>) -> Result<Self, Error> {
        if let Some(seed) = seed_override {
            cfg.seed = seed;
        }
        let provisional = cfg.l.unwrap_or(6.0);
        let first = equilibrium::self_consistent_field(
            &cfg.q,
            &cfg.h,
            provisional,
            FixedPointOptions::default(),
        )?;
        let (r, half_width) = match cfg.l {
            Some(l) => (first, l),
            None => {
                // default box: one unit past the upper endpoint
                let (_, b) = first.solution.support();
                let l = b + 1.0;
                let again = equilibrium::self_consistent_field(
                    &cfg.q,
                    &cfg.h,
                    l,
                    FixedPointOptions::default(),
                )?;
                (again, l)
            }
        };
        let (_, b) = r.solution.support();
        if half_width < b + 0.5 {
            return Err(Error::InvalidConfig(format!(
                "L = {half_width} is too close to the support endpoint b = {b:.4}; need L > b + 0.5"
            )));
        }
        Ok(Pipeline { cfg, sol: r.solution, half_width, fixed_point_residual: r.residual })
    }

    fn meta(&self, experiment: &str) -> serde_json::Value {
        let (a, b) = self.sol.support();
        let edge = self.sol.edge_constants();
        json!({
            "experiment": experiment,
            "version": env!("CARGO_PKG_VERSION"),
            "config": serde_json::to_value(&self.cfg).unwrap_or(serde_json::Value::Null),
            "seed": self.cfg.seed,
            "L": self.half_width,
            "support": [a, b],
            "c_star": edge.c_star,
            "gamma": edge.gamma,
            "fixed_point_residual": self.fixed_point_residual,
        })
    }

    fn ensemble(&self, keep_configs: bool) -> EnsembleConfig {
        let (a, b) = self.sol.support();
        let w = b - a;
        EnsembleConfig {
            n: self.cfg.n,
            q: self.cfg.q.clone(),
            h: self.cfg.h.clone(),
            half_width: self.half_width,
            seed: self.cfg.seed,
            chains: self.cfg.mcmc.chains,
            steps: self.cfg.mcmc.steps,
            burnin: self.cfg.mcmc.burnin,
            thin: self.cfg.mcmc.thin,
            init_span: (a + 0.02 * w, b - 0.02 * w),
            keep_configs,
        }
    }

    fn kernel(&self) -> Result<CdKernel, Error> {
        let weight = WeightSpec::new(self.cfg.n, self.sol.field().clone(), self.half_width)?;
        CdKernel::new(weight)
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let path = cli.config.as_ref().ok_or_else(|| {
        Error::InvalidConfig("a --config file is required for this subcommand".into())
    })?;
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_json(&text)
}

fn run(cli: &Cli) -> Result<String, Error> {
    match cli.command {
        Command::Tw => run_tw(cli),
        Command::Equilibrium => run_equilibrium(cli),
        Command::Kernel => run_kernel(cli),
        Command::Gap => run_gap(cli),
        Command::EdgeScan => run_edge_scan(cli),
        Command::Deviations => run_deviations(cli),
        Command::LinearizeCheck => run_linearize_check(cli),
        Command::Sample => run_sample(cli),
        Command::Tail => run_tail(cli),
    }
}

/// The Tracy-Widom table needs no field configuration; a config only
/// supplies the grid when present.
fn run_tw(cli: &Cli) -> Result<String, Error> {
    let grid: Vec<f64> = match cli.config.as_ref() {
        Some(_) => {
            let cfg = load_config(cli)?;
            match cfg.experiment {
                Some(ExperimentSpec::Tw { grid }) => grid.values(-8.0, 8.0, 65),
                None => default_s_grid(),
                Some(other) => {
                    return Err(Error::InvalidConfig(format!(
                        "subcommand `tw` cannot run experiment {other:?}"
                    )))
                }
            }
        }
        None => default_s_grid(),
    };
    let mut table = Table::new("tw", "s,F2,one_minus_F2,tail_asymptotic");
    for &s in &grid {
        let f2 = airy::tracy_widom_cdf(s)?;
        let tail = airy::tracy_widom_tail(s)?;
        let asym = if s > 0.0 { airy::tail_asymptotic(s) } else { f64::NAN };
        table.push_floats(&[s, f2, tail, asym]);
    }
    let mut report = ExperimentReport::new(json!({
        "experiment": "tw",
        "version": env!("CARGO_PKG_VERSION"),
        "grid_points": grid.len(),
    }));
    report.push_table(table);
    report.write_to_dir(&cli.out)?;
    Ok(format!("tracy-widom table over {} points", grid.len()))
}

fn default_s_grid() -> Vec<f64> {
    (0..65).map(|i| -8.0 + 0.25 * i as f64).collect()
}

fn run_equilibrium(cli: &Cli) -> Result<String, Error> {
    let p = Pipeline::solve(load_config(cli)?, cli.seed)?;
    let (a, b) = p.sol.support();
    let edge = p.sol.edge_constants();
    let mut table = Table::new("equilibrium", "t,density");
    let margin = 0.1 * (b - a);
    for i in 0..=400 {
        let t = a - margin + (b - a + 2.0 * margin) * i as f64 / 400.0;
        table.push_floats(&[t, p.sol.density(t)]);
    }
    let mut report = ExperimentReport::new(p.meta("equilibrium"));
    report.push_table(table);
    report.write_to_dir(&cli.out)?;
    Ok(format!(
        "a = {}, b = {}, c* = {}, gamma = {}, G(1) = {}",
        format_float(a),
        format_float(b),
        format_float(edge.c_star),
        format_float(edge.gamma),
        format_float(p.sol.density_factor(1.0)),
    ))
}

fn run_kernel(cli: &Cli) -> Result<String, Error> {
    let p = Pipeline::solve(load_config(cli)?, cli.seed)?;
    let kernel = p.kernel()?;
    let (a, b) = p.sol.support();
    let grid = match &p.cfg.experiment {
        Some(ExperimentSpec::Kernel { grid }) => grid.values(a - 0.3, b + 0.3, 201),
        None => (0..201)
            .map(|i| a - 0.3 + (b - a + 0.6) * i as f64 / 200.0)
            .collect(),
        Some(other) => {
            return Err(Error::InvalidConfig(format!(
                "subcommand `kernel` cannot run experiment {other:?}"
            )))
        }
    };
    let n = p.cfg.n as f64;
    let mut table = Table::new("kernel", "t,K_diag,rho1");
    for &t in &grid {
        let k = kernel.eval_diag(t);
        table.push_floats(&[t, k, k / n]);
    }
    let mut report = ExperimentReport::new(p.meta("kernel"));
    report.push_table(table);
    report.write_to_dir(&cli.out)?;
    Ok(format!("kernel diagonal over {} points at N = {}", grid.len(), p.cfg.n))
}

fn run_gap(cli: &Cli) -> Result<String, Error> {
    let p = Pipeline::solve(load_config(cli)?, cli.seed)?;
    let kernel = p.kernel()?;
    let (_, b) = p.sol.support();
    let grid = match &p.cfg.experiment {
        Some(ExperimentSpec::Gap { grid }) => {
            grid.values(b - 0.3, (b + 0.5).min(p.half_width), 21)
        }
        None => (0..21)
            .map(|i| b - 0.3 + 0.8 * i as f64 / 20.0)
            .collect(),
        Some(other) => {
            return Err(Error::InvalidConfig(format!(
                "subcommand `gap` cannot run experiment {other:?}"
            )))
        }
    };
    let mut table = Table::new("gap", "t,gap_probability");
    for &t in &grid {
        table.push_floats(&[t, kernel.gap_probability(t)?]);
    }
    let mut report = ExperimentReport::new(p.meta("gap"));
    report.push_table(table);
    report.write_to_dir(&cli.out)?;
    Ok(format!("gap probabilities over {} thresholds at N = {}", grid.len(), p.cfg.n))
}

fn run_edge_scan(cli: &Cli) -> Result<String, Error> {
    let p = Pipeline::solve(load_config(cli)?, cli.seed)?;
    match &p.cfg.experiment {
        Some(ExperimentSpec::EdgeScan {}) | None => {}
        Some(other) => {
            return Err(Error::InvalidConfig(format!(
                "subcommand `edge-scan` cannot run experiment {other:?}"
            )))
        }
    }
    let (mut report, summary) = edge_fluctuation_experiment(&p.ensemble(false), &p.sol)?;
    report.set_meta("config", serde_json::to_value(&p.cfg)?);
    report.set_meta("version", json!(env!("CARGO_PKG_VERSION")));
    report.write_to_dir(&cli.out)?;
    Ok(format!(
        "KS distance to F2 = {:.4} with {:.0} effective samples (acceptance {:.2})",
        summary.ks, summary.effective_samples, summary.acceptance
    ))
}

fn run_deviations(cli: &Cli) -> Result<String, Error> {
    let p = Pipeline::solve(load_config(cli)?, cli.seed)?;
    let profile = DeviationProfile::new(&p.sol, 2)?;
    let s_grid = match &p.cfg.experiment {
        Some(ExperimentSpec::Deviations { grid }) => grid.values(2.0, 10.0, 17),
        None => (0..17).map(|i| 2.0 + 0.5 * i as f64).collect(),
        Some(other) => {
            return Err(Error::InvalidConfig(format!(
                "subcommand `deviations` cannot run experiment {other:?}"
            )))
        }
    };
    let n = p.cfg.n;
    let mut table = Table::new("deviations", "t,s,F_NV,one_minus_F2,ratio,regime");
    for &s in &s_grid {
        let t = deviations::location_of(&profile, n, s);
        let pred = deviations::tail_probability(&profile, n, t)?;
        let tw = airy::tracy_widom_tail(s)?;
        let ratio = (pred.log_value - tw.ln()).exp();
        table.push_row(format!(
            "{},{},{},{},{},{}",
            format_float(t),
            format_float(s),
            format_float(pred.value),
            format_float(tw),
            format_float(ratio),
            pred.regime.as_str(),
        ));
    }
    let mut report = ExperimentReport::new(p.meta("deviations"));
    report.push_table(table);
    report.write_to_dir(&cli.out)?;
    Ok(format!("deviation scan over {} rescaled coordinates at N = {n}", s_grid.len()))
}

fn run_linearize_check(cli: &Cli) -> Result<String, Error> {
    let p = Pipeline::solve(load_config(cli)?, cli.seed)?;
    let (configurations, particles, mc_samples) = match &p.cfg.experiment {
        Some(ExperimentSpec::LinearizeCheck { configurations, particles, mc_samples }) => {
            (*configurations, *particles, *mc_samples)
        }
        None => (10, 20, 20_000),
        Some(other) => {
            return Err(Error::InvalidConfig(format!(
                "subcommand `linearize-check` cannot run experiment {other:?}"
            )))
        }
    };
    let stat = HoeffdingStatistic::new(&p.cfg.h, &p.sol)?;
    let sampler = if p.cfg.h.is_negative_definite() && !p.cfg.h.is_zero() {
        Some(SpectralSampler::new(&p.cfg.h, &p.sol, 256)?)
    } else {
        None
    };
    let (a, b) = p.sol.support();
    let mut table = Table::new("linearize_check", "quantity,lhs,rhs,tolerance,pass");
    let mut state = p.cfg.seed | 1;
    let mut all_pass = true;
    let push = |table: &mut Table, what: &str, lhs: f64, rhs: f64, tol: f64| -> bool {
        let pass = (lhs - rhs).abs() <= tol;
        table.push_row(format!(
            "{what},{},{},{},{}",
            format_float(lhs),
            format_float(rhs),
            format_float(tol),
            pass
        ));
        pass
    };
    for c in 0..configurations {
        let x: Vec<f64> = (0..particles)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                a + (b - a) * ((state >> 11) as f64 / (1u64 << 53) as f64)
            })
            .collect();
        let direct = stat.remainder(&x);
        let fourier = stat.remainder_fourier(&x)?;
        all_pass &= push(
            &mut table,
            &format!("dual_route_u_{c}"),
            direct,
            fourier,
            1e-6 * (1.0 + direct.abs()),
        );
        if let Some(sampler) = &sampler {
            let report = variance_identity_check(&x, sampler, &stat, 0, p.cfg.seed)?;
            all_pass &= push(
                &mut table,
                &format!("variance_identity_{c}"),
                report.var_discrete,
                report.two_u,
                1e-6,
            );
        }
    }
    if let Some(sampler) = &sampler {
        let x: Vec<f64> = (0..particles)
            .map(|i| a + (b - a) * (i as f64 + 0.5) / particles as f64)
            .collect();
        let report = variance_identity_check(&x, sampler, &stat, mc_samples, p.cfg.seed)?;
        all_pass &= push(
            &mut table,
            "mc_exp_u",
            report.mc_mean,
            report.exp_u,
            3.0 * report.mc_std_error,
        );
    }
    let mut report = ExperimentReport::new(p.meta("linearize-check"));
    report.set_meta("all_pass", json!(all_pass));
    report.push_table(table);
    report.write_to_dir(&cli.out)?;
    Ok(format!(
        "linearization identities over {configurations} configurations: {}",
        if all_pass { "all pass" } else { "FAILURES present" }
    ))
}

fn run_sample(cli: &Cli) -> Result<String, Error> {
    let p = Pipeline::solve(load_config(cli)?, cli.seed)?;
    match &p.cfg.experiment {
        Some(ExperimentSpec::Sample {}) | None => {}
        Some(other) => {
            return Err(Error::InvalidConfig(format!(
                "subcommand `sample` cannot run experiment {other:?}"
            )))
        }
    }
    let run = run_chains(&p.ensemble(false))?;
    let mut table = Table::new("sample", "chain,index,x_max");
    for (c, chain) in run.xmax.iter().enumerate() {
        for (i, &x) in chain.iter().enumerate() {
            table.push_row(format!("{c},{i},{}", format_float(x)));
        }
    }
    let mut report = ExperimentReport::new(p.meta("sample"));
    report.set_meta("acceptance", json!(run.acceptance));
    report.set_meta("iact_thinned", json!(run.iact_thinned));
    report.set_meta("effective_samples", json!(run.effective_samples()));
    report.set_meta("mixing_warning", json!(run.mixing_warning));
    report.push_table(table);
    report.write_to_dir(&cli.out)?;
    Ok(format!(
        "{} thinned samples over {} chains (acceptance {:.2}, iact {:.1})",
        run.xmax.iter().map(Vec::len).sum::<usize>(),
        run.xmax.len(),
        run.acceptance,
        run.iact_thinned
    ))
}

fn run_tail(cli: &Cli) -> Result<String, Error> {
    let p = Pipeline::solve(load_config(cli)?, cli.seed)?;
    let grid = match &p.cfg.experiment {
        Some(ExperimentSpec::Tail { grid }) => grid.explicit()?,
        _ => {
            return Err(Error::InvalidConfig(
                "subcommand `tail` needs an experiment block of type `tail` with a grid".into(),
            ))
        }
    };
    let profile = DeviationProfile::new(&p.sol, 2)?;
    // exact determinantal reference is available whenever h = 0
    let kernel = if p.cfg.h.is_zero() { Some(p.kernel()?) } else { None };
    let (mut report, points) = tail_experiment(&p.ensemble(false), &profile, &grid, kernel.as_ref())?;
    report.set_meta("config", serde_json::to_value(&p.cfg)?);
    report.set_meta("version", json!(env!("CARGO_PKG_VERSION")));
    report.write_to_dir(&cli.out)?;
    let censored = points.iter().filter(|p| p.censored).count();
    let moderate = points.iter().filter(|p| p.regime == Regime::Moderate).count();
    Ok(format!(
        "tail scan over {} thresholds ({censored} censored, {moderate} moderate-regime)",
        points.len()
    ))
}
