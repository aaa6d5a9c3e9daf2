//! Closed-form tail predictions for the largest particle.
//!
//! The leading-order upper tail is
//! `b^2 e^{-N eta(t/b)} / (4 pi N (t^2 - b^2) eta'(t/b))`; in the moderate
//! regime it matches the Tracy-Widom tail after the edge rescaling, and the
//! Cramer-type coefficients quantify how that match degrades as the
//! deviation grows. All quantities are computed in log space and
//! exponentiated last.

use crate::airy;
use crate::equilibrium::DeviationProfile;
use crate::{Error, Result};

/// Deviation regime of a tail point, by the reporting thresholds
/// `N^{2/3}(t - b) >= 5` (past the edge window) and `t - b <= 0.1 b`
/// (still a vanishing fraction of the support).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Edge,
    Moderate,
    Large,
}

impl Regime {
    pub fn classify(n: usize, b: f64, t: f64) -> Regime {
        let gap = t - b;
        if gap > 0.1 * b {
            Regime::Large
        } else if (n as f64).powf(2.0 / 3.0) * gap >= 5.0 {
            Regime::Moderate
        } else {
            Regime::Edge
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Edge => "edge",
            Regime::Moderate => "moderate",
            Regime::Large => "large",
        }
    }
}

/// A tail prediction at one location.
#[derive(Debug, Clone, Copy)]
pub struct TailPrediction {
    pub t: f64,
    /// predicted `P(x_max > t)`
    pub value: f64,
    /// `log` of the prediction (authoritative; `value` may underflow)
    pub log_value: f64,
    pub regime: Regime,
    /// error scale `1/(N (t-b)^{3/2})` of the kernel expansion
    pub kernel_error_scale: f64,
    /// error scale `sqrt(t-b)` of the field-averaging expansion
    pub field_error_scale: f64,
}

/// Leading-order tail prediction at `t > b`.
pub fn tail_probability(profile: &DeviationProfile, n: usize, t: f64) -> Result<TailPrediction> {
    let b = profile.upper_endpoint();
    if t <= b {
        return Err(Error::DomainError(format!(
            "tail prediction needs t > b = {b}, got {t}"
        )));
    }
    let x = t / b;
    let eta = profile.rate_at(x)?;
    let slope = profile.rate_slope(x);
    let nf = n as f64;
    let log_value = -nf * eta + 2.0 * b.ln()
        - (4.0 * std::f64::consts::PI * nf * (t * t - b * b) * slope).ln();
    Ok(TailPrediction {
        t,
        value: log_value.exp(),
        log_value,
        regime: Regime::classify(n, b, t),
        kernel_error_scale: 1.0 / (nf * (t - b).powf(1.5)),
        field_error_scale: (t - b).sqrt(),
    })
}

/// Location of the rescaled coordinate `s`: `t(s) = b + s / (c* N^{2/3})`.
pub fn location_of(profile: &DeviationProfile, n: usize, s: f64) -> f64 {
    profile.upper_endpoint() + s / (profile.c_star() * (n as f64).powf(2.0 / 3.0))
}

/// Ratio of the tail prediction to the Tracy-Widom tail `1 - F_2(s)`;
/// approaches 1 for `1 << s << N^{4/15}`.
pub fn tw_comparison(profile: &DeviationProfile, n: usize, s: f64) -> Result<f64> {
    if s <= 0.0 {
        return Err(Error::DomainError(format!("rescaled coordinate must be positive, got {s}")));
    }
    let t = location_of(profile, n, s);
    let pred = tail_probability(profile, n, t)?;
    let tw_tail = airy::tracy_widom_tail(s)?;
    Ok((pred.log_value - tw_tail.ln()).exp())
}

/// Large-deviation rate `eta(t/b)` at speed `N`; infinite below the
/// endpoint by convention.
pub fn large_deviation_rate(profile: &DeviationProfile, t: f64) -> Result<f64> {
    let b = profile.upper_endpoint();
    if t < b {
        return Ok(f64::INFINITY);
    }
    profile.rate_at(t / b)
}

/// Moderate-deviation residual
/// `log F(t(s)) / s^{3/2} + 4/3 + log(16 pi s^{3/2}) / s^{3/2}`,
/// which is `O(s^{-3}) + O(s / N^{2/3})` inside the moderate window; its
/// leading content is `-d_1 s / N^{2/3}`.
pub fn moderate_log_residual(profile: &DeviationProfile, n: usize, s: f64) -> Result<f64> {
    let t = location_of(profile, n, s);
    let pred = tail_probability(profile, n, t)?;
    let s32 = s.powf(1.5);
    Ok(pred.log_value / s32 + 4.0 / 3.0 + (16.0 * std::f64::consts::PI * s32).ln() / s32)
}
