//! Confining fields and pair interactions.
//!
//! The admissible class is deliberately small: even polynomials of degree at
//! most 12 for the confinement, finite Gaussian mixtures for the interaction.
//! Both have exact derivatives of every order, the mixture has a closed-form
//! Fourier transform, and the positive/negative-definite split is exact.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Maximum polynomial degree for the confining field.
pub const MAX_DEGREE: usize = 12;

/// An even real polynomial `Q(x) = sum_k coeffs[k] x^k` with positive leading
/// coefficient; the confining field of the ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PolyCoeffs", into = "PolyCoeffs")]
pub struct ConfiningField {
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PolyCoeffs {
    coeffs: Vec<f64>,
}

impl TryFrom<PolyCoeffs> for ConfiningField {
    type Error = Error;
    fn try_from(p: PolyCoeffs) -> Result<Self> {
        ConfiningField::new(p.coeffs)
    }
}

impl From<ConfiningField> for PolyCoeffs {
    fn from(f: ConfiningField) -> Self {
        PolyCoeffs { coeffs: f.coeffs }
    }
}

impl ConfiningField {
    /// Build from a dense coefficient list (constant term first).
    ///
    /// Rejects odd-degree terms, degree > 12 and non-positive leading
    /// coefficients.
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidConfig("empty coefficient list for Q".into()));
        }
        if coeffs.len() - 1 > MAX_DEGREE {
            return Err(Error::InvalidConfig(format!(
                "degree {} of Q exceeds {}",
                coeffs.len() - 1,
                MAX_DEGREE
            )));
        }
        if coeffs.iter().skip(1).step_by(2).any(|&c| c != 0.0) {
            return Err(Error::InvalidConfig(
                "Q must be even: odd-degree coefficients must be exactly zero".into(),
            ));
        }
        if coeffs.len() == 1 || *coeffs.last().unwrap() <= 0.0 {
            return Err(Error::InvalidConfig(
                "Q must have a positive leading coefficient".into(),
            ));
        }
        Ok(ConfiningField { coeffs })
    }

    /// Convenience constructor for `c x^2`.
    pub fn quadratic(c: f64) -> Self {
        ConfiningField::new(vec![0.0, 0.0, c]).expect("quadratic field")
    }

    /// Convenience constructor for `x^4`.
    pub fn quartic() -> Self {
        ConfiningField::new(vec![0.0, 0.0, 0.0, 0.0, 1.0]).expect("quartic field")
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.coeffs, x)
    }

    /// `m`-th derivative at `x`, exact.
    pub fn deriv(&self, m: usize, x: f64) -> f64 {
        if m == 0 {
            return self.eval(x);
        }
        if m >= self.coeffs.len() {
            return 0.0;
        }
        horner(&derivative_coeffs(&self.coeffs, m), x)
    }

    /// Global minimum of `Q''` over `[-half_width, half_width]`, located by
    /// root-finding on `Q'''`.
    ///
    /// Returns `NonConvex` if the minimum is not strictly positive. The
    /// `covers_critical_points` flag records whether every real critical
    /// point of `Q''` can lie inside the interval (via the Cauchy root
    /// bound), i.e. whether the interval minimum is certified global.
    pub fn strong_convexity(&self, half_width: f64) -> Result<ConvexityReport> {
        let d2 = derivative_coeffs(&self.coeffs, 2);
        let d3 = derivative_coeffs(&self.coeffs, 3);
        let mut candidates = vec![-half_width, 0.0, half_width];
        // Bracket sign changes of Q''' on a fine grid, then bisect.
        let grid = 4096;
        let mut prev_x = -half_width;
        let mut prev_v = horner(&d3, prev_x);
        for i in 1..=grid {
            let x = -half_width + 2.0 * half_width * i as f64 / grid as f64;
            let v = horner(&d3, x);
            if prev_v == 0.0 {
                candidates.push(prev_x);
            } else if prev_v * v < 0.0 {
                candidates.push(bisect(&d3, prev_x, x, prev_v));
            }
            prev_x = x;
            prev_v = v;
        }
        let alpha = candidates
            .iter()
            .map(|&x| horner(&d2, x))
            .fold(f64::INFINITY, f64::min);
        let covers = cauchy_root_bound(&d3).map_or(true, |r| r <= half_width);
        if alpha <= 0.0 {
            return Err(Error::NonConvex(alpha));
        }
        Ok(ConvexityReport { alpha, covers_critical_points: covers })
    }
}

/// Result of the convexity scan of a confining field.
#[derive(Debug, Clone, Copy)]
pub struct ConvexityReport {
    /// `inf Q''` over the scanned interval.
    pub alpha: f64,
    /// Whether the interval provably contains all critical points of `Q''`.
    pub covers_critical_points: bool,
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn derivative_coeffs(coeffs: &[f64], m: usize) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    for _ in 0..m {
        if c.len() <= 1 {
            return vec![0.0];
        }
        c = c
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &v)| k as f64 * v)
            .collect();
    }
    c
}

fn bisect(coeffs: &[f64], mut lo: f64, mut hi: f64, v_lo: f64) -> f64 {
    let mut sign_lo = v_lo.signum();
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let v = horner(coeffs, mid);
        if v == 0.0 {
            return mid;
        }
        if v.signum() == sign_lo {
            lo = mid;
            sign_lo = v.signum();
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Upper bound on the modulus of all real roots (Cauchy bound); `None` for
/// constants.
fn cauchy_root_bound(coeffs: &[f64]) -> Option<f64> {
    let lead = *coeffs.last()?;
    if coeffs.len() <= 1 || lead == 0.0 {
        return None;
    }
    let m = coeffs[..coeffs.len() - 1]
        .iter()
        .fold(0.0f64, |m, &c| m.max((c / lead).abs()));
    Some(1.0 + m)
}

/// One Gaussian term `c exp(-t^2 / (2 sigma^2))` of an interaction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GaussianTerm {
    pub c: f64,
    pub sigma: f64,
}

/// A pair interaction `h(t) = sum_j c_j exp(-t^2/(2 sigma_j^2))`.
///
/// Even, real-analytic, bounded, with Fourier transform
/// `h_hat(t) = sum_j c_j sigma_j exp(-sigma_j^2 t^2 / 2)` under the
/// convention `h_hat(t) = (2 pi)^{-1/2} int e^{-its} h(s) ds`, which decays
/// at least as fast as a Gaussian.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MixTerms", into = "MixTerms")]
pub struct InteractionSpec {
    terms: Vec<GaussianTerm>,
}

#[derive(Serialize, Deserialize)]
struct MixTerms {
    terms: Vec<GaussianTerm>,
}

impl TryFrom<MixTerms> for InteractionSpec {
    type Error = Error;
    fn try_from(m: MixTerms) -> Result<Self> {
        InteractionSpec::new(m.terms)
    }
}

impl From<InteractionSpec> for MixTerms {
    fn from(h: InteractionSpec) -> Self {
        MixTerms { terms: h.terms }
    }
}

impl InteractionSpec {
    pub fn new(terms: Vec<GaussianTerm>) -> Result<Self> {
        if terms.iter().any(|t| !(t.sigma > 0.0) || !t.c.is_finite()) {
            return Err(Error::InvalidConfig(
                "interaction terms need finite amplitude and positive width".into(),
            ));
        }
        Ok(InteractionSpec { terms })
    }

    /// The zero interaction (determinantal case).
    pub fn zero() -> Self {
        InteractionSpec { terms: Vec::new() }
    }

    /// Single-term mixture `c exp(-t^2/(2 sigma^2))`.
    pub fn gaussian(c: f64, sigma: f64) -> Self {
        InteractionSpec::new(vec![GaussianTerm { c, sigma }]).expect("gaussian term")
    }

    pub fn terms(&self) -> &[GaussianTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.c == 0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|g| g.c * (-t * t / (2.0 * g.sigma * g.sigma)).exp())
            .sum()
    }

    /// `m`-th derivative at `t`, via the Hermite-polynomial form of Gaussian
    /// derivatives; exact up to rounding.
    pub fn deriv(&self, m: usize, t: f64) -> f64 {
        if m == 0 {
            return self.eval(t);
        }
        self.terms
            .iter()
            .map(|g| {
                let s = g.sigma * std::f64::consts::SQRT_2;
                let u = t / s;
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                g.c * sign * hermite(m, u) * (-u * u).exp() / s.powi(m as i32)
            })
            .sum()
    }

    /// Closed-form Fourier transform; no quadrature.
    pub fn fourier(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|g| g.c * g.sigma * (-g.sigma * g.sigma * t * t / 2.0).exp())
            .sum()
    }

    /// All amplitudes nonnegative, i.e. `h_hat >= 0`.
    pub fn is_positive_definite(&self) -> bool {
        self.terms.iter().all(|g| g.c >= 0.0)
    }

    /// All amplitudes nonpositive, i.e. `h_hat <= 0`.
    pub fn is_negative_definite(&self) -> bool {
        self.terms.iter().all(|g| g.c <= 0.0)
    }

    /// Partition the mixture terms by amplitude sign into positive-definite
    /// parts with `h = plus - minus`.
    pub fn split(&self) -> SplitInteraction {
        let plus = self
            .terms
            .iter()
            .filter(|g| g.c > 0.0)
            .copied()
            .collect::<Vec<_>>();
        let minus = self
            .terms
            .iter()
            .filter(|g| g.c < 0.0)
            .map(|g| GaussianTerm { c: -g.c, sigma: g.sigma })
            .collect::<Vec<_>>();
        SplitInteraction {
            plus: InteractionSpec { terms: plus },
            minus: InteractionSpec { terms: minus },
        }
    }

    /// Frequency beyond which `|h_hat|` stays below `threshold`.
    pub fn fourier_support(&self, threshold: f64) -> f64 {
        self.terms
            .iter()
            .map(|g| {
                let amp = (g.c * g.sigma).abs().max(threshold);
                (2.0 * (amp / threshold).ln() / (g.sigma * g.sigma)).sqrt()
            })
            .fold(1.0f64, f64::max)
    }

    /// `sup_t -h''(t)`, located numerically; the sufficient convexity margin
    /// for positive-definite interactions.
    pub fn sup_neg_second_derivative(&self) -> f64 {
        let reach = self.terms.iter().map(|g| 4.0 * g.sigma).fold(1.0, f64::max);
        let mut best = f64::NEG_INFINITY;
        let grid = 2048;
        for i in 0..=grid {
            let t = -reach + 2.0 * reach * i as f64 / grid as f64;
            best = best.max(-self.deriv(2, t));
        }
        best
    }
}

/// Physicists' Hermite polynomial `H_m(u)`.
fn hermite(m: usize, u: f64) -> f64 {
    let mut h0 = 1.0;
    if m == 0 {
        return h0;
    }
    let mut h1 = 2.0 * u;
    for k in 1..m {
        let h2 = 2.0 * u * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// An exact decomposition `h = plus - minus` into positive-definite parts.
#[derive(Debug, Clone)]
pub struct SplitInteraction {
    pub plus: InteractionSpec,
    pub minus: InteractionSpec,
}

impl SplitInteraction {
    /// `z h_plus + h_minus`, the covariance family used for linearization at
    /// nonnegative `z`.
    pub fn covariance_mix(&self, z: f64) -> InteractionSpec {
        let mut terms: Vec<GaussianTerm> = self
            .plus
            .terms
            .iter()
            .map(|g| GaussianTerm { c: z * g.c, sigma: g.sigma })
            .collect();
        terms.extend(self.minus.terms.iter().copied());
        InteractionSpec { terms }
    }
}
