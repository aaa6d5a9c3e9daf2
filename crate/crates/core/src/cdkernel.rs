//! Christoffel-Darboux kernels for exponential weights on a box.
//!
//! The weight is `w(x) = exp(-N V(x) + f(x))` on `[-L, L]`. Recurrence
//! coefficients of its orthonormal polynomials come from the discretized
//! Stieltjes procedure in Lanczos form (full reorthogonalization) on a
//! Gauss-Legendre grid; the kernel is then evaluated through the
//! half-weighted recurrence `q_j = p_j sqrt(w)` so that the huge polynomial
//! values and the tiny weight never meet in raw form. A shared running
//! exponent keeps the propagation representable far outside the support,
//! where `q_0 ~ e^{-N V/2}` underflows but the kernel itself does not.

use crate::equilibrium::{EquilibriumSolution, SmoothField};
use crate::quad::{adaptive_gauss_legendre, gauss_legendre, KahanSum};
use crate::{Error, Result};
use std::sync::Arc;

/// Hard ceiling on the particle number; beyond this the discretized
/// Stieltjes procedure is not certified in double precision.
pub const MAX_PARTICLES: usize = 500;

/// Shared evaluator type for the additive log-weight perturbation `f`.
pub type Perturbation = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Specification of the weight `exp(-N V(x) + f(x))` on `[-L, L]`.
#[derive(Clone)]
pub struct WeightSpec {
    n_particles: usize,
    field: SmoothField,
    perturbation: Option<Perturbation>,
    half_width: f64,
}

impl std::fmt::Debug for WeightSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightSpec")
            .field("n_particles", &self.n_particles)
            .field("half_width", &self.half_width)
            .field("perturbed", &self.perturbation.is_some())
            .finish()
    }
}

impl WeightSpec {
    pub fn new(n_particles: usize, field: SmoothField, half_width: f64) -> Result<Self> {
        if n_particles < 2 {
            return Err(Error::InvalidConfig("particle number must be at least 2".into()));
        }
        if half_width > field.half_width() + 1e-12 {
            return Err(Error::InvalidConfig(
                "weight box exceeds the field's interpolation range".into(),
            ));
        }
        Ok(WeightSpec { n_particles, field, perturbation: None, half_width })
    }

    /// Attach an additive perturbation `f` of the log-weight.
    pub fn with_perturbation(mut self, f: Perturbation) -> Self {
        self.perturbation = Some(f);
        self
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn field(&self) -> &SmoothField {
        &self.field
    }

    /// `log w(x) = -N V(x) + f(x)`.
    pub fn log_weight(&self, x: f64) -> f64 {
        let base = -(self.n_particles as f64) * self.field.value(x);
        match &self.perturbation {
            Some(f) => base + f(x),
            None => base,
        }
    }
}

/// Jacobi coefficients of the weight's orthonormal polynomials.
///
/// `beta[0]` is the zeroth moment (Gautschi's convention); `log_moment0`
/// carries it in log space, which is the authoritative value for partition
/// ratios. `refinement_delta` records the largest coefficient shift when
/// the construction grid is doubled.
#[derive(Debug, Clone)]
pub struct RecurrenceTable {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    log_moment0: f64,
    refinement_delta: f64,
}

impl RecurrenceTable {
    /// Discretized Stieltjes procedure: Lanczos with full
    /// reorthogonalization against `max(8n + 200, 1000)` Gauss-Legendre
    /// nodes, with a doubled-grid consistency check.
    pub fn build(weight: &WeightSpec, n: usize) -> Result<Self> {
        if n > weight.n_particles {
            return Err(Error::InvalidConfig(format!(
                "requested {n} recurrence coefficients for {} particles",
                weight.n_particles
            )));
        }
        if weight.n_particles > MAX_PARTICLES {
            return Err(Error::InvalidConfig(format!(
                "N = {} beyond the stability envelope {MAX_PARTICLES}",
                weight.n_particles
            )));
        }
        // Start from the standard grid size and escalate on refinement
        // failure; the doubling check certifies whichever level settles.
        let mut m = (8 * n + 200).max(1000);
        let mut worst = f64::INFINITY;
        for _ in 0..4 {
            let coarse = lanczos_on_grid(weight, n, m)?;
            let mut fine = lanczos_on_grid(weight, n, 2 * m)?;
            let mut delta = (coarse.log_moment0 - fine.log_moment0).abs();
            for k in 0..n {
                delta = delta.max((coarse.alpha[k] - fine.alpha[k]).abs());
                if k >= 1 {
                    delta = delta.max((coarse.beta[k] - fine.beta[k]).abs());
                }
            }
            if delta <= 1e-7 {
                fine.refinement_delta = delta;
                return Ok(fine);
            }
            worst = delta;
            m *= 2;
        }
        Err(Error::GridTooCoarse { delta: worst })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `beta[0]` is the zeroth moment; `beta[k]`, `k >= 1` the recurrence
    /// coefficients (squares of the Jacobi off-diagonals).
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn log_moment0(&self) -> f64 {
        self.log_moment0
    }

    pub fn refinement_delta(&self) -> f64 {
        self.refinement_delta
    }
}

#[doc(hidden)]
pub fn debug_lanczos(weight: &WeightSpec, n: usize, m: usize) -> Result<RecurrenceTable> {
    lanczos_on_grid(weight, n, m)
}

fn lanczos_on_grid(weight: &WeightSpec, n: usize, m: usize) -> Result<RecurrenceTable> {
    let rule = gauss_legendre(m);
    let l = weight.half_width;
    let (nodes, gl_weights) = rule.mapped(-l, l);
    // log-space weights, shifted by the maximum to avoid underflow
    let logw: Vec<f64> = nodes
        .iter()
        .zip(&gl_weights)
        .map(|(&x, &gw)| gw.ln() + weight.log_weight(x))
        .collect();
    let shift = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::Underflow);
    }
    // Half-log weights: sqrt(w) stays representable down to relative
    // weights of e^{-1416}, and the far tail still matters because the
    // orthonormal polynomials are exponentially large exactly there.
    let sqrt_w: Vec<f64> = logw.iter().map(|&lw| (0.5 * (lw - shift)).exp()).collect();
    let total: f64 = sqrt_w.iter().map(|&u| u * u).sum();
    if total <= 0.0 {
        return Err(Error::Underflow);
    }
    let log_moment0 = shift + total.ln();

    // Lanczos on diag(nodes) with starting vector sqrt(w)
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let inv = 1.0 / total.sqrt();
    basis.push(sqrt_w.iter().map(|&u| u * inv).collect());
    let mut alpha = Vec::with_capacity(n);
    let mut beta = vec![0.0; n.max(1)];
    beta[0] = log_moment0.exp();
    let mut off_prev = 0.0;
    for k in 0..n {
        let vk = &basis[k];
        let mut r: Vec<f64> = vk.iter().zip(&nodes).map(|(&v, &x)| x * v).collect();
        let a: f64 = r.iter().zip(vk).map(|(&ri, &vi)| ri * vi).sum();
        alpha.push(a);
        if k + 1 > n {
            break;
        }
        for (ri, vi) in r.iter_mut().zip(vk) {
            *ri -= a * vi;
        }
        if k > 0 {
            let vp = &basis[k - 1];
            for (ri, vi) in r.iter_mut().zip(vp) {
                *ri -= off_prev * vi;
            }
        }
        // two passes of full reorthogonalization
        for _ in 0..2 {
            for vj in basis.iter() {
                let c: f64 = r.iter().zip(vj).map(|(&ri, &vi)| ri * vi).sum();
                for (ri, vi) in r.iter_mut().zip(vj) {
                    *ri -= c * vi;
                }
            }
        }
        let norm = r.iter().map(|&x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::GridTooCoarse { delta: f64::INFINITY });
        }
        if k + 1 < n {
            beta[k + 1] = norm * norm;
        }
        off_prev = norm;
        for ri in r.iter_mut() {
            *ri /= norm;
        }
        basis.push(r);
    }
    Ok(RecurrenceTable { alpha, beta, log_moment0, refinement_delta: 0.0 })
}

/// Half-weighted orthonormal values at one point, normalized to unit
/// maximum with the true scale kept in logs.
struct WeightedValues {
    u: Vec<f64>,
    log_scale: f64,
}

/// The Christoffel-Darboux kernel of a weight.
#[derive(Debug, Clone)]
pub struct CdKernel {
    weight: WeightSpec,
    table: RecurrenceTable,
}

impl CdKernel {
    /// Build the kernel of degree `N` (the particle number of `weight`).
    pub fn new(weight: WeightSpec) -> Result<Self> {
        let n = weight.n_particles;
        let table = RecurrenceTable::build(&weight, n)?;
        Ok(CdKernel { weight, table })
    }

    pub fn from_parts(weight: WeightSpec, table: RecurrenceTable) -> Self {
        CdKernel { weight, table }
    }

    pub fn weight(&self) -> &WeightSpec {
        &self.weight
    }

    pub fn table(&self) -> &RecurrenceTable {
        &self.table
    }

    /// Propagate `q_j(t) = p_j(t) sqrt(w(t))` through the recurrence with a
    /// shared running exponent.
    fn weighted_values(&self, t: f64) -> WeightedValues {
        let n = self.table.len();
        let alpha = &self.table.alpha;
        let beta = &self.table.beta;
        let e0 = 0.5 * self.weight.log_weight(t) - 0.5 * self.table.log_moment0;
        let mut mant = Vec::with_capacity(n);
        let mut expo = Vec::with_capacity(n);
        let mut q_prev = 0.0f64;
        let mut q_cur = 1.0f64;
        let mut e = e0;
        mant.push(q_cur);
        expo.push(e);
        for j in 0..n.saturating_sub(1) {
            let sb_next = beta[j + 1].sqrt();
            let sb_cur = if j >= 1 { beta[j].sqrt() } else { 0.0 };
            let q_next = ((t - alpha[j]) * q_cur - sb_cur * q_prev) / sb_next;
            q_prev = q_cur;
            q_cur = q_next;
            let mag = q_cur.abs().max(q_prev.abs());
            if mag > 1e150 {
                q_cur *= 1e-300;
                q_prev *= 1e-300;
                e += 300.0 * std::f64::consts::LN_10;
            } else if mag > 0.0 && mag < 1e-150 {
                q_cur *= 1e300;
                q_prev *= 1e300;
                e -= 300.0 * std::f64::consts::LN_10;
            }
            mant.push(q_cur);
            expo.push(e);
        }
        // normalize to the largest magnitude
        let mut log_scale = f64::NEG_INFINITY;
        for (m, ex) in mant.iter().zip(&expo) {
            if *m != 0.0 {
                log_scale = log_scale.max(m.abs().ln() + ex);
            }
        }
        if !log_scale.is_finite() {
            return WeightedValues { u: vec![0.0; n], log_scale: f64::NEG_INFINITY };
        }
        let u = mant
            .iter()
            .zip(&expo)
            .map(|(&m, &ex)| {
                if m == 0.0 {
                    0.0
                } else {
                    let le = ex - log_scale;
                    if le < -700.0 {
                        0.0
                    } else {
                        m * le.exp()
                    }
                }
            })
            .collect();
        WeightedValues { u, log_scale }
    }

    /// Kernel value `K_N(s, t)`.
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        let vs = self.weighted_values(s);
        let vt = self.weighted_values(t);
        kernel_dot(&vs, &vt)
    }

    /// Diagonal value `K_N(t, t)`.
    pub fn eval_diag(&self, t: f64) -> f64 {
        let v = self.weighted_values(t);
        let dot: f64 = v.u.iter().map(|&x| x * x).sum();
        scaled_exp(dot, 2.0 * v.log_scale)
    }

    /// `log K_N(t, t)`, finite even where the value underflows.
    pub fn eval_diag_log(&self, t: f64) -> f64 {
        let v = self.weighted_values(t);
        let dot: f64 = v.u.iter().map(|&x| x * x).sum();
        dot.ln() + 2.0 * v.log_scale
    }

    /// Kernel matrix on a set of points, one propagation per point.
    pub fn eval_matrix(&self, pts: &[f64]) -> nalgebra::DMatrix<f64> {
        let vals: Vec<WeightedValues> = pts.iter().map(|&p| self.weighted_values(p)).collect();
        let k = pts.len();
        let mut a = nalgebra::DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..=i {
                let v = kernel_dot(&vals[i], &vals[j]);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        a
    }

    /// `k`-point correlation function
    /// `rho^k(t) = ((N-k)!/N!) det[K(t_i, t_j)]`.
    pub fn correlation(&self, pts: &[f64]) -> Result<f64> {
        let k = pts.len();
        if k == 0 || k > 6 {
            return Err(Error::InvalidConfig(
                "correlation order must be between 1 and 6".into(),
            ));
        }
        let a = self.eval_matrix(pts);
        let det = a.lu().determinant();
        let mut prefactor = 1.0;
        let n = self.weight.n_particles as f64;
        for j in 0..k {
            prefactor /= n - j as f64;
        }
        Ok(prefactor * det)
    }

    /// Christoffel function `lambda_N(w, t) = w(t) / K_N(t, t)`: the minimal
    /// weighted L^2 mass of a degree-(N-1) polynomial normalized at `t`.
    pub fn christoffel(&self, t: f64) -> f64 {
        (self.weight.log_weight(t) - self.eval_diag_log(t)).exp()
    }

    /// Gap probability `P(x_max <= t) = det(I - K_N)` on `L^2((t, L))` by
    /// Nystrom discretization; `m` and `2m` nodes must agree to 1e-6.
    pub fn gap_probability(&self, t: f64) -> Result<f64> {
        let l = self.weight.half_width;
        if t >= l {
            return Ok(1.0);
        }
        let coarse = self.gap_logdet(t, 60)?;
        let fine = self.gap_logdet(t, 120)?;
        if (coarse.exp() - fine.exp()).abs() > 1e-6 {
            return Err(Error::QuadratureUnstable(format!(
                "gap probability moved by {:e} under node doubling at t = {t}",
                (coarse.exp() - fine.exp()).abs()
            )));
        }
        Ok(fine.exp().clamp(0.0, 1.0))
    }

    /// `log det(I - K_N)` on `(t, L)`, through Nystrom eigenvalues.
    pub fn gap_logdet(&self, t: f64, m: usize) -> Result<f64> {
        let l = self.weight.half_width;
        if t >= l {
            return Ok(0.0);
        }
        let rule = gauss_legendre(m);
        let (nodes, weights) = rule.mapped(t, l);
        let vals: Vec<WeightedValues> = nodes.iter().map(|&p| self.weighted_values(p)).collect();
        let mut a = nalgebra::DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = kernel_dot(&vals[i], &vals[j]) * (weights[i] * weights[j]).sqrt();
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let eig = symmetric_eigenvalues_flushed(a);
        let mut logdet = KahanSum::new();
        let mut saturated = false;
        for &lam in eig.iter() {
            if lam >= 1.001 {
                return Err(Error::QuadratureUnstable(format!(
                    "kernel Nystrom eigenvalue {lam} >= 1 at t = {t}"
                )));
            }
            if lam >= 1.0 - 1e-12 {
                // an eigenvalue at 1 within resolution: a full particle sits
                // right of t and the determinant has underflowed
                saturated = true;
            } else {
                logdet.add((-lam).ln_1p());
            }
        }
        if saturated {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(logdet.value())
    }

    /// Complement `1 - det(I - K_N)` on `(t, L)` in relative precision:
    /// assembled as `-expm1(log det)`, which stays meaningful long after
    /// the determinant itself rounds to 1. Doubled nodes must agree to a
    /// relative 1e-4.
    pub fn gap_complement(&self, t: f64) -> Result<f64> {
        if t >= self.weight.half_width {
            return Ok(0.0);
        }
        let coarse = -self.gap_logdet(t, 60)?.exp_m1();
        let fine = -self.gap_logdet(t, 120)?.exp_m1();
        if (coarse - fine).abs() > 1e-4 * fine.abs().max(1e-300) {
            return Err(Error::QuadratureUnstable(format!(
                "gap complement moved relatively by {:e} under node doubling at t = {t}",
                ((coarse - fine) / fine).abs()
            )));
        }
        Ok(fine)
    }

    /// Edge-rescaled kernel
    /// `(N^{2/3} gamma)^{-1} K_N(b + s/(N^{2/3} gamma), b + t/(N^{2/3} gamma))`.
    pub fn edge_rescaled(&self, sol: &EquilibriumSolution, s: f64, t: f64) -> f64 {
        let n23 = (self.weight.n_particles as f64).powf(2.0 / 3.0);
        let gamma = sol.edge_constants().gamma;
        let scale = n23 * gamma;
        let (_, b) = sol.support();
        self.eval(b + s / scale, b + t / scale) / scale
    }

    /// Tail mass of the kernel diagonal, `int_t^L K_N(y, y) dy`.
    pub fn diagonal_tail_mass(&self, t: f64) -> Result<f64> {
        let l = self.weight.half_width;
        if t >= l {
            return Ok(0.0);
        }
        let scale = self.eval_diag(t).max(1e-280);
        adaptive_gauss_legendre(&|y: f64| self.eval_diag(y), t, l, 1e-10 * scale)
    }
}

/// Symmetric eigenvalues with entries tiny relative to the matrix norm
/// flushed to zero first: the tridiagonalization NaNs when the dynamic
/// range of the entries approaches the full exponent range of f64, and
/// entries below 1e-40 of the norm move eigenvalues by less than 1e-38
/// relative.
pub(crate) fn symmetric_eigenvalues_flushed(mut a: nalgebra::DMatrix<f64>) -> Vec<f64> {
    let norm = a.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if norm > 0.0 {
        let floor = 1e-40 * norm;
        for v in a.iter_mut() {
            if v.abs() < floor {
                *v = 0.0;
            }
        }
    }
    a.symmetric_eigenvalues().iter().cloned().collect()
}

fn kernel_dot(a: &WeightedValues, b: &WeightedValues) -> f64 {
    let dot: f64 = a.u.iter().zip(&b.u).map(|(&x, &y)| x * y).sum();
    scaled_exp(dot, a.log_scale + b.log_scale)
}

fn scaled_exp(mant: f64, log_scale: f64) -> f64 {
    if mant == 0.0 || log_scale == f64::NEG_INFINITY {
        return 0.0;
    }
    let lm = mant.abs().ln() + log_scale;
    if lm < -740.0 {
        0.0
    } else {
        mant.signum() * lm.exp()
    }
}

/// Log of the partition-function ratio `Z_{w1} / Z_{w2}` via the Hankel
/// product formula `log D_{N-1} = N log m_0 + sum_{k=1}^{N-1} (N-k) log beta_k`;
/// the `N!` factors cancel. Returns the value and a crude tolerance
/// propagated from the grid-refinement deltas.
pub fn log_partition_ratio(t1: &RecurrenceTable, t2: &RecurrenceTable) -> Result<(f64, f64)> {
    if t1.len() != t2.len() {
        return Err(Error::InvalidConfig(
            "partition ratio needs tables of equal degree".into(),
        ));
    }
    let n = t1.len();
    let mut sum = KahanSum::new();
    sum.add(n as f64 * (t1.log_moment0 - t2.log_moment0));
    let mut tol = n as f64 * (t1.refinement_delta + t2.refinement_delta);
    for k in 1..n {
        let w = (n - k) as f64;
        sum.add(w * (t1.beta[k].ln() - t2.beta[k].ln()));
        tol += w * (t1.refinement_delta / t1.beta[k] + t2.refinement_delta / t2.beta[k]);
    }
    Ok((sum.value(), tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::EquilibriumSolution;
    use crate::fields::ConfiningField;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn gaussian_weight(n: usize, l: f64) -> WeightSpec {
        let q = ConfiningField::quadratic(1.0);
        let f = SmoothField::from_confining(&q, l).unwrap();
        WeightSpec::new(n, f, l).unwrap()
    }

    #[test]
    fn scaled_hermite_recurrence_coefficients() {
        // w = e^{-N x^2} on [-6, 6]: beta_k = k/(2N) up to truncation
        let n = 50;
        let w = gaussian_weight(n, 6.0);
        let table = RecurrenceTable::build(&w, n).unwrap();
        for k in 1..=20 {
            let expected = k as f64 / (2.0 * n as f64);
            assert_relative_eq!(table.beta()[k], expected, max_relative = 1e-6);
        }
        for k in 0..n {
            assert!(table.alpha()[k].abs() <= 1e-10, "alpha[{k}] = {}", table.alpha()[k]);
            assert!(k == 0 || table.beta()[k] > 0.0);
        }
        // zeroth moment: int e^{-50 x^2} = sqrt(pi/50)
        assert_relative_eq!(
            table.log_moment0(),
            (std::f64::consts::PI / 50.0).sqrt().ln(),
            max_relative = 1e-10
        );
        assert!(table.refinement_delta() <= 1e-9);
    }

    #[test]
    fn orthonormality_against_independent_quadrature() {
        let n = 40;
        let w = gaussian_weight(n, 6.0);
        let kernel = CdKernel::new(w).unwrap();
        // independent rule: 3000-node Gauss-Legendre, not the 520-node
        // construction grid
        let rule = gauss_legendre(3000);
        let (nodes, gw) = rule.mapped(-6.0, 6.0);
        let vals: Vec<_> = nodes.iter().map(|&x| kernel.weighted_values(x)).collect();
        for i in (0..30).step_by(7) {
            for j in (0..30).step_by(5) {
                let mut acc = KahanSum::new();
                for (v, &g) in vals.iter().zip(&gw) {
                    let qi = scaled_exp(v.u[i], v.log_scale);
                    let qj = scaled_exp(v.u[j], v.log_scale);
                    acc.add(g * qi * qj);
                }
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(acc.value(), expected, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn kernel_symmetry_and_trace() {
        let n = 60;
        let w = gaussian_weight(n, 6.0);
        let kernel = CdKernel::new(w).unwrap();
        let mut state = 0x853c49e6748fea9bu64;
        let mut rnd = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let s = -2.0 + 4.0 * rnd();
            let t = -2.0 + 4.0 * rnd();
            let a = kernel.eval(s, t);
            let b = kernel.eval(t, s);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300), "asymmetry at ({s}, {t})");
        }
        // int K(t,t) dt = N
        let trace = adaptive_gauss_legendre(&|t: f64| kernel.eval_diag(t), -6.0, 6.0, 1e-7)
            .unwrap();
        assert_abs_diff_eq!(trace, n as f64, epsilon = 1e-6 * n as f64);
    }

    #[test]
    fn kernel_diagonal_tracks_equilibrium_density() {
        let n = 100;
        let l = 3.0;
        let w = gaussian_weight(n, l);
        let kernel = CdKernel::new(w).unwrap();
        let q = ConfiningField::quadratic(1.0);
        let f = SmoothField::from_confining(&q, l).unwrap();
        let sol = EquilibriumSolution::solve(f).unwrap();
        let k0 = kernel.eval_diag(0.0) / n as f64;
        assert_relative_eq!(k0, sol.density(0.0), max_relative = 0.02);
    }

    #[test]
    fn correlation_low_order_identities() {
        let n = 30;
        let w = gaussian_weight(n, 6.0);
        let kernel = CdKernel::new(w).unwrap();
        // k = 1 is the kernel diagonal over N
        let r1 = kernel.correlation(&[0.3]).unwrap();
        assert_relative_eq!(r1, kernel.eval_diag(0.3) / n as f64, max_relative = 1e-12);
        // coincident points collapse the determinant
        let r2 = kernel.correlation(&[0.3, 0.3]).unwrap();
        assert!(r2.abs() <= 1e-12 * r1 * r1, "rho2 at coincident points = {r2}");
        // Hadamard bound rho^k <= e^k prod rho^1
        let mut state = 0xda3e39cb94b95bdbu64;
        let mut rnd = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..25 {
            let pts: Vec<f64> = (0..4).map(|_| -1.5 + 3.0 * rnd()).collect();
            let rk = kernel.correlation(&pts).unwrap();
            let bound: f64 = pts
                .iter()
                .map(|&t| kernel.correlation(&[t]).unwrap())
                .product::<f64>()
                * (4.0f64).exp();
            assert!(rk <= bound * (1.0 + 1e-9), "Hadamard violated: {rk} > {bound}");
        }
    }

    #[test]
    fn two_particle_density_from_first_principles() {
        // rho^2 must match the normalized density (x-y)^2 w(x) w(y)
        let n = 2;
        let w = gaussian_weight(n, 4.0);
        let kernel = CdKernel::new(w.clone()).unwrap();
        let rule = gauss_legendre(400);
        let (nodes, gw) = rule.mapped(-4.0, 4.0);
        // normalization by tensor quadrature
        let mut z = KahanSum::new();
        for (&x, &wx) in nodes.iter().zip(&gw) {
            for (&y, &wy) in nodes.iter().zip(&gw) {
                z.add(
                    wx * wy
                        * (x - y).powi(2)
                        * (w.log_weight(x) + w.log_weight(y)).exp(),
                );
            }
        }
        let z = z.value();
        for &(x, y) in &[(0.1, -0.4), (0.8, 0.3), (-1.0, 1.0)] {
            let direct = (x - y) * (x - y) * (w.log_weight(x) + w.log_weight(y)).exp() / z;
            let fromdet = kernel.correlation(&[x, y]).unwrap();
            assert_abs_diff_eq!(direct, fromdet, epsilon = 1e-8);
        }
    }

    #[test]
    fn christoffel_against_normal_equations() {
        // N = 3, w = e^{-3x^2}: the constrained minimum over quadratics
        // P(t) = 1 solves a 3x3 moment system; lambda = 1/(v^T M^{-1} v).
        let q = ConfiningField::quadratic(1.0);
        let f = SmoothField::from_confining(&q, 6.0).unwrap();
        let w = WeightSpec::new(3, f, 6.0).unwrap();
        let kernel = CdKernel::new(w.clone()).unwrap();
        let rule = gauss_legendre(2000);
        let (nodes, gw) = rule.mapped(-6.0, 6.0);
        let mut moments = [0.0f64; 5];
        for (&x, &g) in nodes.iter().zip(&gw) {
            let wx = w.log_weight(x).exp();
            let mut p = 1.0;
            for m in moments.iter_mut() {
                *m += g * wx * p;
                p *= x;
            }
        }
        let m = nalgebra::Matrix3::new(
            moments[0], moments[1], moments[2],
            moments[1], moments[2], moments[3],
            moments[2], moments[3], moments[4],
        );
        let inv = m.try_inverse().unwrap();
        for &t in &[0.0, 0.5, -1.1] {
            let v = nalgebra::Vector3::new(1.0, t, t * t);
            let lambda_oracle = 1.0 / (v.transpose() * inv * v)[(0, 0)];
            assert_abs_diff_eq!(kernel.christoffel(t), lambda_oracle, epsilon = 1e-10);
        }
    }

    #[test]
    fn christoffel_positive_and_decreasing_in_n() {
        let k5 = CdKernel::new(gaussian_weight(5, 6.0)).unwrap();
        let k12 = CdKernel::new(gaussian_weight(12, 6.0)).unwrap();
        for &t in &[-0.8, 0.0, 0.5] {
            let a = k5.christoffel(t);
            let b = k12.christoffel(t);
            assert!(a > 0.0 && b > 0.0);
            // the minimum over a larger polynomial space is smaller, and the
            // weight e^{-N x^2} itself shrinks with N
            assert!(b < a, "lambda not decreasing at {t}: {b} >= {a}");
        }
    }

    #[test]
    fn partition_ratio_trivial_and_constant_shift() {
        let n = 12;
        let w0 = gaussian_weight(n, 5.0);
        let t0 = RecurrenceTable::build(&w0, n).unwrap();
        let (zero, _) = log_partition_ratio(&t0, &t0).unwrap();
        assert_abs_diff_eq!(zero, 0.0, epsilon = 1e-12);
        // f = const c multiplies the weight by e^c and Z by e^{Nc}
        let c = 0.37;
        let w1 = w0.clone().with_perturbation(Arc::new(move |_| c));
        let t1 = RecurrenceTable::build(&w1, n).unwrap();
        let (shift, tol) = log_partition_ratio(&t1, &t0).unwrap();
        assert_abs_diff_eq!(shift, n as f64 * c, epsilon = 1e-9 + tol);
    }

    #[test]
    fn gap_probability_limits_and_monotonicity() {
        let n = 20;
        let w = gaussian_weight(n, 4.0);
        let kernel = CdKernel::new(w).unwrap();
        assert_eq!(kernel.gap_probability(4.0).unwrap(), 1.0);
        assert_eq!(kernel.gap_probability(4.5).unwrap(), 1.0);
        let mut prev = 0.0;
        for i in 0..=10 {
            let t = -0.5 + i as f64 * 0.45;
            let g = kernel.gap_probability(t).unwrap();
            assert!(g >= prev - 1e-9, "gap probability dropped at t = {t}");
            assert!((0.0..=1.0).contains(&g));
            prev = g;
        }
    }

    #[test]
    fn first_bonferroni_bound_brackets_the_gap() {
        let n = 30;
        let w = gaussian_weight(n, 4.0);
        let kernel = CdKernel::new(w).unwrap();
        for &t in &[1.3, 1.5, 1.8] {
            let miss = 1.0 - kernel.gap_probability(t).unwrap();
            let tail = kernel.diagonal_tail_mass(t).unwrap();
            assert!(miss <= tail + 1e-12, "Bonferroni violated at {t}: {miss} > {tail}");
            assert!(tail >= 0.0);
        }
        // tail mass decreasing, vanishing at the box edge
        let a = kernel.diagonal_tail_mass(1.4).unwrap();
        let b = kernel.diagonal_tail_mass(1.9).unwrap();
        assert!(b < a);
        assert_eq!(kernel.diagonal_tail_mass(4.0).unwrap(), 0.0);
    }

    #[test]
    fn gram_matrices_are_positive_semidefinite() {
        let n = 25;
        let w = gaussian_weight(n, 4.0);
        let kernel = CdKernel::new(w).unwrap();
        let pts = [-1.2, -0.4, 0.1, 0.9, 1.3];
        let mut a = kernel.eval_matrix(&pts);
        for i in 0..pts.len() {
            a[(i, i)] += 1e-10;
        }
        assert!(nalgebra::Cholesky::new(a).is_some());
    }

    #[test]
    fn underflow_and_envelope_are_reported() {
        let q = ConfiningField::quadratic(1.0);
        let f = SmoothField::from_confining(&q, 6.0).unwrap();
        assert!(WeightSpec::new(1, f.clone(), 6.0).is_err());
        let w = WeightSpec::new(501, f, 6.0).unwrap();
        assert!(matches!(RecurrenceTable::build(&w, 501), Err(Error::InvalidConfig(_))));
    }
}
