//! Stochastic linearization: Gaussian-field averaging of determinantal
//! ensembles.
//!
//! For a negative-definite interaction `h`, a centered stationary Gaussian
//! field with covariance `-h` is sampled exactly in distribution through a
//! quadrature discretization of its spectral representation
//! `f~(t) = (2/pi)^{1/4} int [cos(ts) xi + sin(ts) eta] sqrt(-h_hat(s)) dB`.
//! The Hoeffding pair statistic `U` of a configuration is evaluated both as
//! a direct double sum and through its Fourier form, and the linearization
//! identity `Var(sum_j f(x_j)) = 2 U(x)` holds exactly for the discretized
//! field up to spectral-quadrature error. Averaging determinantal
//! statistics over field samples with partition-ratio weights turns the
//! interacting ensemble into a weighted mixture of determinantal ones.

use crate::cdkernel::{log_partition_ratio, CdKernel, Perturbation, RecurrenceTable, WeightSpec};
use crate::cheb::Chebyshev;
use crate::equilibrium::EquilibriumSolution;
use crate::fields::{InteractionSpec, SplitInteraction};
use crate::quad::{adaptive_gauss_legendre, gauss_legendre, KahanSum};
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::sync::Arc;

/// Spectral sampler of the centered Gaussian field with covariance `-h`.
#[derive(Debug, Clone)]
pub struct SpectralSampler {
    h: InteractionSpec,
    freqs: Arc<Vec<f64>>,
    amps: Vec<f64>,
    char_cos: Vec<f64>,
    char_sin: Vec<f64>,
    half_width: f64,
}

impl SpectralSampler {
    /// Discretize the spectral measure with `modes` Gauss-Legendre nodes on
    /// `[0, S]`, `S` chosen so `-h_hat(S) < 1e-16`.
    pub fn new(h: &InteractionSpec, sol: &EquilibriumSolution, modes: usize) -> Result<Self> {
        if !h.is_negative_definite() {
            return Err(Error::DefinitenessViolation);
        }
        let s_max = h.fourier_support(1e-16);
        let rule = gauss_legendre(modes);
        let (freqs, weights) = rule.mapped(0.0, s_max);
        let mut amps = Vec::with_capacity(modes);
        for (&s, &w) in freqs.iter().zip(&weights) {
            let dens = -h.fourier(s);
            if dens < -1e-14 {
                return Err(Error::DefinitenessViolation);
            }
            amps.push((2.0 / std::f64::consts::PI).powf(0.25) * (dens.max(0.0) * w).sqrt());
        }
        // discretized variance must reproduce -h(0)
        let var: f64 = amps.iter().map(|&a| a * a).sum();
        if (var + h.eval(0.0)).abs() > 1e-8 {
            return Err(Error::QuadratureFailure(format!(
                "spectral variance {var} vs -h(0) = {}",
                -h.eval(0.0)
            )));
        }
        let nodes = sol.measure_nodes(256);
        let char_cos = freqs
            .iter()
            .map(|&s| nodes.iter().map(|&(p, m)| m * (s * p).cos()).sum())
            .collect();
        let char_sin = freqs
            .iter()
            .map(|&s| nodes.iter().map(|&(p, m)| m * (s * p).sin()).sum())
            .collect();
        Ok(SpectralSampler {
            h: h.clone(),
            freqs: Arc::new(freqs),
            amps,
            char_cos,
            char_sin,
            half_width: sol.field().half_width(),
        })
    }

    pub fn modes(&self) -> usize {
        self.amps.len()
    }

    pub fn interaction(&self) -> &InteractionSpec {
        &self.h
    }

    /// Draw one field realization from the stream `(seed, index)`;
    /// reproducible and independent across indices.
    pub fn sample_indexed(&self, seed: u64, index: u64) -> FieldSample {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(index);
        self.sample(&mut rng)
    }

    /// Draw one field realization.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldSample {
        let m = self.amps.len();
        let mut cos_w = Vec::with_capacity(m);
        let mut sin_w = Vec::with_capacity(m);
        for &a in &self.amps {
            let xi: f64 = rng.sample(StandardNormal);
            let eta: f64 = rng.sample(StandardNormal);
            cos_w.push(a * xi);
            sin_w.push(a * eta);
        }
        // exact centering against the (discretized) equilibrium measure
        let centering: f64 = cos_w
            .iter()
            .zip(&self.char_cos)
            .map(|(&w, &c)| w * c)
            .sum::<f64>()
            + sin_w
                .iter()
                .zip(&self.char_sin)
                .map(|(&w, &c)| w * c)
                .sum::<f64>();
        let mut sample = FieldSample {
            freqs: Arc::clone(&self.freqs),
            cos_w,
            sin_w,
            centering,
            sup_norm: 0.0,
        };
        // sup-norm estimate on a uniform grid; the per-mode angles advance
        // by a fixed rotation, so no trig calls in the inner loop
        let grid = 512usize;
        let step = 2.0 * self.half_width / grid as f64;
        let mut vals = vec![-sample.centering; grid + 1];
        for (k, &s) in sample.freqs.iter().enumerate() {
            let (dsin, dcos) = (s * step).sin_cos();
            let (mut sin_t, mut cos_t) = (s * -self.half_width).sin_cos();
            let (wc, ws) = (sample.cos_w[k], sample.sin_w[k]);
            for v in vals.iter_mut() {
                *v += wc * cos_t + ws * sin_t;
                let c = cos_t * dcos - sin_t * dsin;
                sin_t = sin_t * dcos + cos_t * dsin;
                cos_t = c;
            }
        }
        sample.sup_norm = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        sample
    }

    /// Exact variance of `sum_j f(x_j)` under the discretized field.
    pub fn linear_statistic_variance(&self, x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mut var = KahanSum::new();
        for (k, &s) in self.freqs.iter().enumerate() {
            let mut re = -n * self.char_cos[k];
            let mut im = -n * self.char_sin[k];
            for &xi in x {
                re += (s * xi).cos();
                im += (s * xi).sin();
            }
            var.add(self.amps[k] * self.amps[k] * (re * re + im * im));
        }
        var.value()
    }
}

/// One realization of the centered Gaussian field, in closed finite-sum
/// form `f(t) = sum_k [wc_k cos(t s_k) + ws_k sin(t s_k)] - m`.
#[derive(Debug, Clone)]
pub struct FieldSample {
    freqs: Arc<Vec<f64>>,
    cos_w: Vec<f64>,
    sin_w: Vec<f64>,
    centering: f64,
    sup_norm: f64,
}

impl FieldSample {
    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for ((&s, &wc), &ws) in self.freqs.iter().zip(&self.cos_w).zip(&self.sin_w) {
            let (sin, cos) = (s * t).sin_cos();
            acc += wc * cos + ws * sin;
        }
        acc - self.centering
    }

    /// Estimated sup-norm over the working interval.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// Wrap as a log-weight perturbation for kernel construction.
    pub fn as_perturbation(&self) -> Perturbation {
        let s = self.clone();
        Arc::new(move |t| s.eval(t))
    }
}

/// The Hoeffding pair statistic of an interaction against a measure:
/// caches `h_mu` and `h_mumu`, evaluates `U` by direct double sum or via
/// the Fourier form.
#[derive(Debug, Clone)]
pub struct HoeffdingStatistic {
    h: InteractionSpec,
    h_mu: Chebyshev,
    h_mumu: f64,
    char_cos: Chebyshev,
    char_sin: Chebyshev,
    freq_max: f64,
}

impl HoeffdingStatistic {
    pub fn new(h: &InteractionSpec, sol: &EquilibriumSolution) -> Result<Self> {
        let l = sol.field().half_width();
        let nodes = sol.measure_nodes(256);
        let h_mu = Chebyshev::fit(-l, l, 256, |t| {
            nodes.iter().map(|&(p, m)| m * h.eval(t - p)).sum()
        });
        let h_mumu: f64 = nodes
            .iter()
            .map(|&(p, m)| m * h_mu.eval(p))
            .sum();
        // direct double-sum value for the cached-interpolant consistency
        let direct: f64 = nodes
            .iter()
            .map(|&(p1, m1)| -> f64 {
                m1 * nodes.iter().map(|&(p2, m2)| m2 * h.eval(p1 - p2)).sum::<f64>()
            })
            .sum();
        if (h_mumu - direct).abs() > 1e-10 {
            return Err(Error::QuadratureFailure(format!(
                "h_mumu interpolant off by {:e}",
                (h_mumu - direct).abs()
            )));
        }
        let freq_max = h.fourier_support(1e-18).max(1.0);
        let char_cos = Chebyshev::fit(0.0, freq_max, 256, |s| {
            nodes.iter().map(|&(p, m)| m * (s * p).cos()).sum()
        });
        let char_sin = Chebyshev::fit(0.0, freq_max, 256, |s| {
            nodes.iter().map(|&(p, m)| m * (s * p).sin()).sum()
        });
        Ok(HoeffdingStatistic { h: h.clone(), h_mu, h_mumu, char_cos, char_sin, freq_max })
    }

    pub fn interaction(&self) -> &InteractionSpec {
        &self.h
    }

    pub fn h_mu(&self, t: f64) -> f64 {
        self.h_mu.eval(t)
    }

    pub fn h_mumu(&self) -> f64 {
        self.h_mumu
    }

    /// `U(x) = -1/2 sum_{i,j} [h(x_i-x_j) - h_mu(x_i) - h_mu(x_j) + h_mumu]`
    /// by direct double sum.
    pub fn remainder(&self, x: &[f64]) -> f64 {
        let mut acc = KahanSum::new();
        for &xi in x {
            let hi = self.h_mu.eval(xi);
            for &xj in x {
                acc.add(self.h.eval(xi - xj) - hi - self.h_mu.eval(xj) + self.h_mumu);
            }
        }
        -0.5 * acc.value()
    }

    /// The same statistic through the Fourier form
    /// `-(1/(2 sqrt(2 pi))) int |sum_j e^{itx_j} - N c(t)|^2 h_hat(t) dt`.
    pub fn remainder_fourier(&self, x: &[f64]) -> Result<f64> {
        let n = x.len() as f64;
        let integrand = |t: f64| {
            let mut re = -n * self.char_cos.eval(t);
            let mut im = -n * self.char_sin.eval(t);
            for &xi in x {
                let (s, c) = (t * xi).sin_cos();
                re += c;
                im += s;
            }
            (re * re + im * im) * self.h.fourier(t)
        };
        // evenness of the integrand folds the line integral onto [0, S]
        let half = adaptive_gauss_legendre(&integrand, 0.0, self.freq_max, 1e-11 * (1.0 + n * n))?;
        Ok(-half / (2.0 * std::f64::consts::PI).sqrt())
    }
}

/// The interpolation family `U_z` built on an exact positive-definite
/// split `h = h^+ - h^-`; `U_{-1}` is the original statistic and every
/// `z >= 0` corresponds to an honest covariance `z h^+ + h^-`.
#[derive(Debug, Clone)]
pub struct RemainderFamily {
    plus: HoeffdingStatistic,
    minus: HoeffdingStatistic,
}

impl RemainderFamily {
    pub fn new(split: &SplitInteraction, sol: &EquilibriumSolution) -> Result<Self> {
        Ok(RemainderFamily {
            plus: HoeffdingStatistic::new(&split.plus, sol)?,
            minus: HoeffdingStatistic::new(&split.minus, sol)?,
        })
    }

    /// `U_z(x)`; affine in `z`, with `U_{-1} = U`.
    pub fn eval(&self, x: &[f64], z: f64) -> f64 {
        -z * self.plus.remainder(x) - self.minus.remainder(x)
    }
}

/// Report of the linearization identity checks at one configuration.
#[derive(Debug, Clone, Copy)]
pub struct IdentityReport {
    /// closed-form variance of the linear statistic under the field
    pub var_discrete: f64,
    /// twice the Hoeffding statistic
    pub two_u: f64,
    /// Monte-Carlo mean of `exp(sum_j f(x_j))`
    pub mc_mean: f64,
    pub mc_std_error: f64,
    /// `exp(U(x))`, the target of the Monte-Carlo average
    pub exp_u: f64,
}

/// Verify `Var(sum_j f(x_j)) = 2 U(x)` exactly (spectral-quadrature
/// tolerance 1e-6) and report the Monte-Carlo check of
/// `E exp(sum f(x_j)) = exp(U(x))`.
pub fn variance_identity_check(
    x: &[f64],
    sampler: &SpectralSampler,
    stat: &HoeffdingStatistic,
    mc_samples: usize,
    seed: u64,
) -> Result<IdentityReport> {
    let var = sampler.linear_statistic_variance(x);
    let two_u = 2.0 * stat.remainder(x);
    let gap = (var - two_u).abs();
    if gap > 1e-6 {
        return Err(Error::ToleranceExceeded {
            what: "linearization variance identity".into(),
            gap,
            tol: 1e-6,
        });
    }
    let mut mean = KahanSum::new();
    let mut sq = KahanSum::new();
    for idx in 0..mc_samples {
        let f = sampler.sample_indexed(seed, idx as u64);
        let s: f64 = x.iter().map(|&xi| f.eval(xi)).sum();
        let w = s.exp();
        mean.add(w);
        sq.add(w * w);
    }
    let m = mc_samples.max(1) as f64;
    let mc_mean = mean.value() / m;
    let var_w = (sq.value() / m - mc_mean * mc_mean).max(0.0);
    Ok(IdentityReport {
        var_discrete: var,
        two_u,
        mc_mean,
        mc_std_error: (var_w / m).sqrt(),
        exp_u: (0.5 * two_u).exp(),
    })
}

/// Importance-weighted average of a determinantal statistic over field
/// samples.
#[derive(Debug, Clone, Copy)]
pub struct WeightedEstimate {
    pub estimate: f64,
    /// delete-one jackknife standard error of the ratio estimator
    pub std_error: f64,
    /// effective sample size of the self-normalized weights
    pub ess: f64,
    /// plain mean of the weights; estimates `E exp(U)`
    pub mean_weight: f64,
}

/// Self-normalized average of `statistic` over `samples` field draws.
///
/// Each draw re-solves the orthogonal-polynomial recurrence for the
/// perturbed weight `exp(-N V + f)` and weighs the statistic by the
/// partition ratio `Z_{V - f/N} / Z_V = E exp(sum f(x_j))`. Deterministic
/// for fixed `(seed, samples)` with an order-independent reduction.
pub fn average_determinantal<F>(
    base: &WeightSpec,
    sampler: &SpectralSampler,
    samples: usize,
    seed: u64,
    statistic: F,
) -> Result<WeightedEstimate>
where
    F: Fn(&CdKernel) -> f64 + Sync,
{
    if samples < 2 {
        return Err(Error::InvalidConfig("need at least two field samples".into()));
    }
    let n = base.n_particles();
    let base_table = RecurrenceTable::build(base, n)?;
    let per_sample: Vec<Result<(f64, f64)>> = (0..samples)
        .into_par_iter()
        .map(|idx| {
            let field = sampler.sample_indexed(seed, idx as u64);
            let weight = base.clone().with_perturbation(field.as_perturbation());
            let table = RecurrenceTable::build(&weight, n)?;
            let (logw, _) = log_partition_ratio(&table, &base_table)?;
            let kernel = CdKernel::from_parts(weight, table);
            Ok((logw, statistic(&kernel)))
        })
        .collect();
    let mut logw = Vec::with_capacity(samples);
    let mut values = Vec::with_capacity(samples);
    for r in per_sample {
        let (lw, v) = r?;
        logw.push(lw);
        values.push(v);
    }
    let shift = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logw.iter().map(|&lw| (lw - shift).exp()).collect();
    let wsum: f64 = weights.iter().sum();
    let wsq: f64 = weights.iter().map(|&w| w * w).sum();
    let ess = wsum * wsum / wsq;
    if ess < samples as f64 / 10.0 {
        return Err(Error::EffectiveSampleSizeTooSmall { ess, min: samples as f64 / 10.0 });
    }
    let wv: f64 = weights.iter().zip(&values).map(|(&w, &v)| w * v).sum();
    let estimate = wv / wsum;
    // delete-one jackknife of the ratio estimator
    let mut jack = KahanSum::new();
    let mut jack_sq = KahanSum::new();
    for i in 0..samples {
        let theta = (wv - weights[i] * values[i]) / (wsum - weights[i]);
        jack.add(theta);
        jack_sq.add(theta * theta);
    }
    let m = samples as f64;
    let jbar = jack.value() / m;
    let jvar = ((jack_sq.value() / m - jbar * jbar).max(0.0)) * (m - 1.0);
    let mean_weight = logw.iter().map(|&lw| lw.exp()).sum::<f64>() / m;
    Ok(WeightedEstimate {
        estimate,
        std_error: jvar.sqrt(),
        ess,
        mean_weight,
    })
}
