//! Numerical toolkit for log-gas particle ensembles with pairwise interactions.
//!
//! The crate solves the self-consistent equilibrium measure of a convex
//! external field, builds Christoffel-Darboux kernels for the associated
//! determinantal ensembles, evaluates Airy-kernel/Tracy-Widom edge laws and
//! moderate/large-deviation tail predictions, and implements the
//! Gaussian-field averaging that represents an interacting ensemble as an
//! average of determinantal ones.
//!
//! Modules roughly correspond to the stages of that pipeline:
//!
//! * [`fields`] — confining polynomials and Gaussian-mixture interactions,
//!   with exact derivatives and Fourier transforms.
//! * [`equilibrium`] — support endpoints, equilibrium density, effective
//!   field fixed point, edge constants and deviation rate functions.
//! * [`cdkernel`] — orthogonal-polynomial recurrences, kernel evaluation,
//!   correlation functions, gap probabilities, partition-ratio identities.
//! * [`airy`] — Airy function/kernel and the Tracy-Widom distribution via
//!   Fredholm determinants.
//! * [`linearize`] — spectral sampling of the Gaussian field, the Hoeffding
//!   pair statistic by two routes, and importance-weighted averaging of
//!   determinantal statistics.
//! * [`deviations`] — closed-form tail predictions and their comparison to
//!   the Tracy-Widom tail.
//! * [`harness`] — Metropolis sampling of the interacting ensemble,
//!   experiments, configuration and CSV/JSON reporting.

pub mod airy;
pub mod cdkernel;
pub mod cheb;
pub mod deviations;
pub mod equilibrium;
pub mod fields;
pub mod harness;
pub mod linearize;
pub mod quad;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("field is not strongly convex: inf Q'' = {0}")]
    NonConvex(f64),
    #[error("iteration failed to converge: {0}")]
    NoConvergence(String),
    #[error("support [{a}, {b}] not contained in (-{l}, {l})")]
    EndpointsOutsideDomain { a: f64, b: f64, l: f64 },
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("recurrence grid too coarse: max coefficient shift {delta:e} under refinement")]
    GridTooCoarse { delta: f64 },
    #[error("all quadrature weights underflowed")]
    Underflow,
    #[error("Nystrom discretization unstable: {0}")]
    QuadratureUnstable(String),
    #[error("interaction is not negative-definite; spectral density would be negative")]
    DefinitenessViolation,
    #[error("identity check failed: {what} off by {gap:e} (tolerance {tol:e})")]
    ToleranceExceeded { what: String, gap: f64, tol: f64 },
    #[error("importance weights degenerate: ESS {ess:.1} below minimum {min:.1}")]
    EffectiveSampleSizeTooSmall { ess: f64, min: f64 },
    #[error("argument {value} outside supported range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("series expansion unstable: leading coefficient {got} should be 4/3")]
    SeriesInstability { got: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
