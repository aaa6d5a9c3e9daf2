//! Equilibrium measures of convex analytic fields.
//!
//! For a convex field `V` the equilibrium measure is supported on a single
//! interval `[a, b]` fixed by two integral equations; its density is
//! `(2/((b-a)^2 pi)) sqrt((t-a)(b-t)) G(m(t))` where `m` maps the support
//! back to `[-1, 1]` and the analytic factor `G` is a double integral of
//! `V''`. Everything downstream (edge constants, tail rate functions,
//! Cramer corrections) is read off `a`, `b` and `G`.
//!
//! The self-consistent field `V = Q + h_mu` of an interacting ensemble is
//! found by fixed-point iteration over the measure.

use crate::cheb::Chebyshev;
use crate::fields::{ConfiningField, InteractionSpec};
use crate::quad::{adaptive_gauss_legendre, gauss_chebyshev_first, gauss_chebyshev_second, gauss_legendre};
use crate::{Error, Result};

/// Default Chebyshev degree for field and profile interpolants.
pub const DEFAULT_DEGREE: usize = 128;

#[derive(Debug, Clone)]
enum FieldExpr {
    /// a bare confining polynomial
    Polynomial(ConfiningField),
    /// `Q + h_mu` with the measure frozen as quadrature nodes
    Composite {
        q: ConfiningField,
        h: InteractionSpec,
        nodes: Vec<(f64, f64)>,
    },
    /// `Q` plus an interpolated interaction field; used mid-iteration where
    /// exact high derivatives are not needed
    Blended { q: ConfiningField, hmu: Chebyshev },
}

impl FieldExpr {
    fn deriv(&self, m: usize, t: f64) -> f64 {
        match self {
            FieldExpr::Polynomial(q) => q.deriv(m, t),
            FieldExpr::Composite { q, h, nodes } => {
                let conv: f64 = nodes.iter().map(|&(p, w)| w * h.deriv(m, t - p)).sum();
                q.deriv(m, t) + conv
            }
            FieldExpr::Blended { q, hmu } => {
                let mut c = hmu.clone();
                for _ in 0..m {
                    c = c.derivative();
                }
                q.deriv(m, t) + c.eval(t)
            }
        }
    }
}

/// An even (unless built otherwise), real-analytic external field on
/// `[-L, L]`, held as Chebyshev interpolants of `V`, `V'`, `V''` plus an
/// exact-derivative expression for higher orders.
#[derive(Debug, Clone)]
pub struct SmoothField {
    expr: FieldExpr,
    half_width: f64,
    v: Chebyshev,
    v1: Chebyshev,
    v2: Chebyshev,
    even: bool,
}

impl SmoothField {
    fn build(expr: FieldExpr, half_width: f64, even: bool, degree: usize) -> Result<Self> {
        let l = half_width;
        let v = Chebyshev::fit(-l, l, degree, |t| expr.deriv(0, t));
        let v1 = Chebyshev::fit(-l, l, degree, |t| expr.deriv(1, t));
        let v2 = Chebyshev::fit(-l, l, degree, |t| expr.deriv(2, t));
        let field = SmoothField { expr, half_width, v, v1, v2, even };
        let res = field.v.residual(|t| field.expr.deriv(0, t), 53);
        if res > 1e-10 {
            return Err(Error::QuadratureFailure(format!(
                "field interpolant residual {res:e} exceeds 1e-10"
            )));
        }
        Ok(field)
    }

    /// Interpolate a bare confining polynomial on `[-L, L]`.
    pub fn from_confining(q: &ConfiningField, half_width: f64) -> Result<Self> {
        Self::build(FieldExpr::Polynomial(q.clone()), half_width, true, DEFAULT_DEGREE)
    }

    /// `Q + h_mu` for a measure given as `(position, mass)` nodes.
    pub fn composite(
        q: &ConfiningField,
        h: &InteractionSpec,
        nodes: Vec<(f64, f64)>,
        half_width: f64,
    ) -> Result<Self> {
        Self::build(
            FieldExpr::Composite { q: q.clone(), h: h.clone(), nodes },
            half_width,
            true,
            DEFAULT_DEGREE,
        )
    }

    /// `Q` plus an arbitrary interpolated perturbation field. The result is
    /// not assumed even and higher derivatives come from repeated Chebyshev
    /// differentiation, so this is for iteration internals and tests.
    pub fn blended(q: &ConfiningField, hmu: Chebyshev, half_width: f64, even: bool) -> Result<Self> {
        Self::build(FieldExpr::Blended { q: q.clone(), hmu }, half_width, even, DEFAULT_DEGREE)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn value(&self, t: f64) -> f64 {
        self.v.eval(t)
    }

    pub fn deriv1(&self, t: f64) -> f64 {
        self.v1.eval(t)
    }

    pub fn deriv2(&self, t: f64) -> f64 {
        self.v2.eval(t)
    }

    /// Exact `m`-th derivative (quadrature against the frozen measure for
    /// composite fields); falls back to the interpolants' accuracy only for
    /// blended fields.
    pub fn exact_deriv(&self, m: usize, t: f64) -> f64 {
        self.expr.deriv(m, t)
    }

    fn has_exact_derivatives(&self) -> bool {
        !matches!(self.expr, FieldExpr::Blended { .. })
    }

    /// Minimum of `V''` over the interpolation grid.
    pub fn min_convexity(&self) -> f64 {
        let n = 257;
        let mut min = f64::INFINITY;
        for i in 0..n {
            let t = -self.half_width + 2.0 * self.half_width * i as f64 / (n - 1) as f64;
            min = min.min(self.v2.eval(t));
        }
        min
    }
}

/// Support endpoints, rescaling and density of an equilibrium measure.
#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    field: SmoothField,
    a: f64,
    b: f64,
    /// analytic density factor on `[-x_range, x_range]` in rescaled units
    g: Chebyshev,
    x_range: f64,
    endpoint_residuals: (f64, f64),
    mass_error: f64,
}

/// Edge constants of the rescaling `t = b + s/(c N^{2/3})`.
#[derive(Debug, Clone, Copy)]
pub struct EdgeConstants {
    /// `2^{-1/3} G(1)^{2/3} / b`
    pub c_star: f64,
    /// `(2 G(1))^{2/3} / (b - a)`
    pub gamma: f64,
}

impl EquilibriumSolution {
    /// Solve for the equilibrium measure of `field`.
    pub fn solve(field: SmoothField) -> Result<Self> {
        let (a, b, residuals) = if field.even {
            let (b, res) = solve_endpoint_even(&field)?;
            (-b, b, res)
        } else {
            solve_endpoints_general(&field)?
        };
        let l = field.half_width;
        if !(a > -l && b < l) {
            return Err(Error::EndpointsOutsideDomain { a, b, l });
        }
        // The density factor is needed out to the truncation edge in
        // rescaled units for the tail formulas.
        let x_range = ((2.0 * l - a - b) / (b - a)).min(((2.0 * l + a + b) / (b - a)).abs()).min(6.0) * 0.999;
        let g = fit_density_factor(&field, a, b, x_range)?;
        let mut sol = EquilibriumSolution {
            field,
            a,
            b,
            g,
            x_range,
            endpoint_residuals: residuals,
            mass_error: 0.0,
        };
        // positivity of the analytic factor
        let mut gmin = f64::INFINITY;
        for i in 0..=200 {
            let x = -1.0 + 2.0 * i as f64 / 200.0;
            gmin = gmin.min(sol.g.eval(x));
        }
        if gmin <= 0.0 {
            return Err(Error::NonConvex(gmin));
        }
        // normalization
        let rule = gauss_chebyshev_second(256);
        let mass: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&s, &w)| w * sol.g.eval(s))
            .sum::<f64>()
            / (2.0 * std::f64::consts::PI);
        sol.mass_error = (mass - 1.0).abs();
        if sol.mass_error > 1e-8 {
            return Err(Error::QuadratureFailure(format!(
                "equilibrium mass off by {:e}",
                sol.mass_error
            )));
        }
        Ok(sol)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn field(&self) -> &SmoothField {
        &self.field
    }

    /// Map a point of the support to rescaled coordinates in `[-1, 1]`.
    pub fn rescale_inv(&self, t: f64) -> f64 {
        (2.0 * t - self.a - self.b) / (self.b - self.a)
    }

    /// Inverse map from `[-1, 1]` to the support.
    pub fn rescale(&self, x: f64) -> f64 {
        0.5 * (self.b - self.a) * x + 0.5 * (self.a + self.b)
    }

    /// The analytic factor `G` at rescaled coordinate `x`.
    pub fn density_factor(&self, x: f64) -> f64 {
        self.g.eval(x)
    }

    /// Range of rescaled coordinates covered by the `G` interpolant.
    pub fn factor_range(&self) -> f64 {
        self.x_range
    }

    /// Equilibrium density at `t` (zero off the support).
    pub fn density(&self, t: f64) -> f64 {
        if t <= self.a || t >= self.b {
            return 0.0;
        }
        let width = self.b - self.a;
        2.0 / (width * width * std::f64::consts::PI)
            * ((t - self.a) * (self.b - t)).sqrt()
            * self.g.eval(self.rescale_inv(t))
    }

    pub fn edge_constants(&self) -> EdgeConstants {
        let g1 = self.g.eval(1.0);
        EdgeConstants {
            c_star: 2f64.powf(-1.0 / 3.0) * g1.powf(2.0 / 3.0) / self.b,
            gamma: (2.0 * g1).powf(2.0 / 3.0) / (self.b - self.a),
        }
    }

    /// Residuals of the two endpoint equations after convergence.
    pub fn endpoint_residuals(&self) -> (f64, f64) {
        self.endpoint_residuals
    }

    pub fn mass_error(&self) -> f64 {
        self.mass_error
    }

    /// The measure as `n` Gauss-Chebyshev(2nd) quadrature nodes
    /// `(position, mass)`, normalized to unit total mass.
    pub fn measure_nodes(&self, n: usize) -> Vec<(f64, f64)> {
        let rule = gauss_chebyshev_second(n);
        let mut nodes: Vec<(f64, f64)> = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&s, &w)| {
                (self.rescale(s), w * self.g.eval(s) / (2.0 * std::f64::consts::PI))
            })
            .collect();
        let total: f64 = nodes.iter().map(|&(_, w)| w).sum();
        for nw in nodes.iter_mut() {
            nw.1 /= total;
        }
        nodes
    }

    /// Integrate `f` against the equilibrium measure.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, n: usize, mut f: F) -> f64 {
        let rule = gauss_chebyshev_second(n);
        let s: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| w * self.g.eval(x) * f(self.rescale(x)))
            .sum();
        s / (2.0 * std::f64::consts::PI)
    }
}

/// Solve the second endpoint equation for an even field (`a = -b` by
/// symmetry): bisection bracket plus Newton polish.
fn solve_endpoint_even(field: &SmoothField) -> Result<(f64, (f64, f64))> {
    let rule = gauss_chebyshev_first(256);
    let l = field.half_width;
    let target = 2.0 * std::f64::consts::PI;
    let eval = |b: f64| -> (f64, f64) {
        let mut e = 0.0;
        let mut de = 0.0;
        for &s in &rule.nodes {
            let t = b * s;
            e += s * field.deriv1(t) * b;
            de += s * field.deriv1(t) + b * s * s * field.deriv2(t);
        }
        let w = rule.weights[0];
        (w * e - target, w * de)
    };
    // bracket the root
    let mut lo = 1e-3;
    let mut hi = 0.98 * l;
    if eval(lo).0 > 0.0 {
        return Err(Error::NoConvergence("endpoint equation positive at b ~ 0".into()));
    }
    if eval(hi).0 < 0.0 {
        return Err(Error::EndpointsOutsideDomain { a: -hi, b: hi, l });
    }
    let mut b = 1.0f64.clamp(lo, hi);
    let mut converged = false;
    for _ in 0..100 {
        let (e, de) = eval(b);
        if e > 0.0 {
            hi = b;
        } else {
            lo = b;
        }
        let step = e / de;
        let mut next = b - step;
        if !(lo..=hi).contains(&next) {
            next = 0.5 * (lo + hi);
        }
        let shift = (next - b).abs();
        b = next;
        if shift < 1e-14 * b.max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("endpoint Newton exceeded 100 iterations".into()));
    }
    // residuals with a finer rule
    let fine = gauss_chebyshev_first(512);
    let r1: f64 = fine.nodes.iter().map(|&s| field.deriv1(b * s)).sum::<f64>() * fine.weights[0];
    let r2: f64 = fine
        .nodes
        .iter()
        .map(|&s| b * s * field.deriv1(b * s))
        .sum::<f64>()
        * fine.weights[0]
        - target;
    if r1.abs() > 1e-9 || r2.abs() > 1e-9 {
        return Err(Error::NoConvergence(format!(
            "endpoint residuals ({r1:e}, {r2:e}) exceed 1e-9"
        )));
    }
    Ok((b, (r1.abs(), r2.abs())))
}

/// General two-endpoint Newton iteration.
fn solve_endpoints_general(field: &SmoothField) -> Result<(f64, f64, (f64, f64))> {
    let rule = gauss_chebyshev_first(256);
    let l = field.half_width;
    let target = 2.0 * std::f64::consts::PI;
    let w = rule.weights[0];
    let sys = |a: f64, b: f64| -> ([f64; 2], [[f64; 2]; 2]) {
        let mut e = [0.0f64; 2];
        let mut j = [[0.0f64; 2]; 2];
        for &s in &rule.nodes {
            let t = 0.5 * (b - a) * s + 0.5 * (a + b);
            let da = 0.5 * (1.0 - s);
            let db = 0.5 * (1.0 + s);
            let v1 = field.deriv1(t);
            let v2 = field.deriv2(t);
            e[0] += v1;
            e[1] += t * v1;
            j[0][0] += v2 * da;
            j[0][1] += v2 * db;
            j[1][0] += da * v1 + t * v2 * da;
            j[1][1] += db * v1 + t * v2 * db;
        }
        (
            [w * e[0], w * e[1] - target],
            [[w * j[0][0], w * j[0][1]], [w * j[1][0], w * j[1][1]]],
        )
    };
    let mut a = -1.0;
    let mut b = 1.0;
    let mut converged = false;
    for _ in 0..100 {
        let (e, j) = sys(a, b);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-14 {
            return Err(Error::NoConvergence("singular endpoint Jacobian".into()));
        }
        let da = (e[0] * j[1][1] - e[1] * j[0][1]) / det;
        let db = (j[0][0] * e[1] - j[1][0] * e[0]) / det;
        // keep the iterate ordered and inside the box
        let limit = 0.25 * (b - a).max(0.2);
        let da = da.clamp(-limit, limit);
        let db = db.clamp(-limit, limit);
        a -= da;
        b -= db;
        a = a.clamp(-0.99 * l, b - 1e-3);
        b = b.clamp(a + 1e-3, 0.99 * l);
        if da.abs().max(db.abs()) < 1e-14 * (b - a).max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("2d endpoint Newton exceeded 100 iterations".into()));
    }
    let fine = gauss_chebyshev_first(512);
    let wf = fine.weights[0];
    let mut r1 = 0.0;
    let mut r2 = 0.0;
    for &s in &fine.nodes {
        let t = 0.5 * (b - a) * s + 0.5 * (a + b);
        r1 += field.deriv1(t);
        r2 += t * field.deriv1(t);
    }
    r1 *= wf;
    r2 = wf * r2 - target;
    if r1.abs() > 1e-9 || r2.abs() > 1e-9 {
        return Err(Error::NoConvergence(format!(
            "endpoint residuals ({r1:e}, {r2:e}) exceed 1e-9"
        )));
    }
    Ok((a, b, (r1.abs(), r2.abs())))
}

/// Tensor-quadrature evaluation of the density factor
/// `G(t) = (1/pi) int int (V o m)''(t + u(s - t)) / sqrt(1 - s^2) du ds`.
fn density_factor_at(field: &SmoothField, a: f64, b: f64, t: f64, ns: usize, nu: usize) -> f64 {
    let h = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let s_rule = gauss_chebyshev_first(ns);
    let u_rule = gauss_legendre(nu);
    let mut outer = 0.0;
    for &s in &s_rule.nodes {
        let mut inner = 0.0;
        for (&xu, &wu) in u_rule.nodes.iter().zip(&u_rule.weights) {
            let u = 0.5 * (xu + 1.0);
            let y = t + u * (s - t);
            inner += 0.5 * wu * field.deriv2(h * y + mid);
        }
        outer += inner;
    }
    h * h * s_rule.weights[0] * outer / std::f64::consts::PI
}

fn fit_density_factor(field: &SmoothField, a: f64, b: f64, x_range: f64) -> Result<Chebyshev> {
    let (ns, nu) = (64, 24);
    let g = Chebyshev::fit(-x_range, x_range, DEFAULT_DEGREE, |x| {
        density_factor_at(field, a, b, x, ns, nu)
    });
    // nested refinement check at probe points
    let mut worst = 0.0f64;
    for i in 0..9 {
        let x = -x_range + 2.0 * x_range * i as f64 / 8.0;
        let refined = density_factor_at(field, a, b, x, 2 * ns, 2 * nu);
        worst = worst.max((g.eval(x) - refined).abs());
    }
    if worst > 1e-8 {
        return Err(Error::QuadratureFailure(format!(
            "density factor refinement disagreement {worst:e}"
        )));
    }
    Ok(g)
}

/// Result of the self-consistent field iteration.
#[derive(Debug, Clone)]
pub struct SelfConsistentSolution {
    pub solution: EquilibriumSolution,
    /// sup-norm of `V - (Q + h_mu)` over the box at the fixed point
    pub residual: f64,
    pub iterations: usize,
}

/// Options for [`self_consistent_field`].
#[derive(Debug, Clone, Copy)]
pub struct FixedPointOptions {
    pub max_iterations: usize,
    /// iteration count after which 0.5-damping engages
    pub damping_after: usize,
    pub tolerance: f64,
    pub measure_nodes: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            max_iterations: 200,
            damping_after: 50,
            tolerance: 1e-10,
            measure_nodes: 256,
        }
    }
}

/// Iterate `mu_{k+1} = equilibrium measure of Q + h_{mu_k}` to the
/// self-consistent pair `(mu, V)`.
pub fn self_consistent_field(
    q: &ConfiningField,
    h: &InteractionSpec,
    half_width: f64,
    opts: FixedPointOptions,
) -> Result<SelfConsistentSolution> {
    let base = SmoothField::from_confining(q, half_width)?;
    if h.is_zero() {
        let solution = EquilibriumSolution::solve(base)?;
        return Ok(SelfConsistentSolution { solution, residual: 0.0, iterations: 1 });
    }
    let mut sol = EquilibriumSolution::solve(base)?;
    let mut hmu: Option<Chebyshev> = None;
    let probe: Vec<f64> = (0..257)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / 256.0)
        .collect();
    let mut prev_density: Vec<f64> = probe.iter().map(|&t| sol.density(t)).collect();
    let mut prev_b = sol.b;
    for iter in 1..=opts.max_iterations {
        let nodes = sol.measure_nodes(opts.measure_nodes);
        let fresh = Chebyshev::fit(-half_width, half_width, DEFAULT_DEGREE, |t| {
            nodes.iter().map(|&(p, w)| w * h.eval(t - p)).sum()
        });
        let blended = match &hmu {
            Some(old) if iter > opts.damping_after => {
                let mixed: Vec<f64> = fresh
                    .coeffs()
                    .iter()
                    .zip(old.coeffs())
                    .map(|(&f, &o)| 0.5 * f + 0.5 * o)
                    .collect();
                Chebyshev::from_coeffs(-half_width, half_width, mixed)
            }
            _ => fresh,
        };
        let field = SmoothField::blended(q, blended.clone(), half_width, true)?;
        sol = EquilibriumSolution::solve(field)?;
        hmu = Some(blended);
        let density: Vec<f64> = probe.iter().map(|&t| sol.density(t)).collect();
        let sup_shift = density
            .iter()
            .zip(&prev_density)
            .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()));
        let b_shift = (sol.b - prev_b).abs();
        prev_density = density;
        prev_b = sol.b;
        if sup_shift <= opts.tolerance && b_shift <= opts.tolerance {
            // freeze the measure and rebuild the field with exact derivatives
            let nodes = sol.measure_nodes(opts.measure_nodes);
            let final_field = SmoothField::composite(q, h, nodes, half_width)?;
            let solution = EquilibriumSolution::solve(final_field)?;
            // self-consistency: V against Q + h_{mu(final)}
            let final_nodes = solution.measure_nodes(opts.measure_nodes);
            let residual = probe.iter().fold(0.0f64, |m, &t| {
                let hmu_t: f64 = final_nodes.iter().map(|&(p, w)| w * h.eval(t - p)).sum();
                m.max((solution.field.value(t) - q.eval(t) - hmu_t).abs())
            });
            if residual > 1e-9 {
                return Err(Error::NoConvergence(format!(
                    "self-consistency residual {residual:e} exceeds 1e-9"
                )));
            }
            return Ok(SelfConsistentSolution { solution, residual, iterations: iter });
        }
    }
    Err(Error::NoConvergence(format!(
        "field fixed point not converged in {} iterations",
        opts.max_iterations
    )))
}

/// Deviation rate functions and Cramer-type corrections at the upper edge.
#[derive(Debug, Clone)]
pub struct DeviationProfile {
    sol: EquilibriumSolution,
    b: f64,
    c_star: f64,
    /// Cramer coefficients `d_1 .. d_J`
    cramer: Vec<f64>,
}

impl DeviationProfile {
    /// Compute edge constants and the first `j_max <= 6` Cramer
    /// coefficients.
    ///
    /// The expansion coefficients come from Taylor derivatives of the
    /// density factor at the edge (by exact quadrature); the leading
    /// coefficient of the rescaled rate series is independently recovered
    /// from quadrature values of the rate integral and must equal 4/3
    /// within 1e-6.
    pub fn new(sol: &EquilibriumSolution, j_max: usize) -> Result<Self> {
        assert!(j_max <= 6, "at most six Cramer coefficients are supported");
        if j_max >= 1 && !sol.field.has_exact_derivatives() {
            return Err(Error::DomainError(
                "Cramer coefficients need a field with exact derivatives".into(),
            ));
        }
        let b = sol.b;
        let edge = sol.edge_constants();
        let c_star = edge.c_star;
        let bc = b * c_star;
        // Taylor coefficients g_k of G at the edge x = 1
        let taylor = edge_taylor(sol, j_max)?;
        // psi(e) = sqrt(2 + e) G(1 + e) = sum psi_k e^k
        let mut sqrt_series = vec![0.0; j_max + 1];
        let mut binom = 1.0; // binomial(1/2, k)
        for (k, c) in sqrt_series.iter_mut().enumerate() {
            *c = 2f64.sqrt() * binom / 2f64.powi(k as i32);
            binom *= (0.5 - k as f64) / (k as f64 + 1.0);
        }
        let mut psi = vec![0.0; j_max + 1];
        for j in 0..=j_max {
            for k in 0..=j {
                psi[j] += sqrt_series[k] * taylor[j - k];
            }
        }
        let profile = DeviationProfile {
            sol: sol.clone(),
            b,
            c_star,
            cramer: (1..=j_max)
                .map(|j| psi[j] / ((j as f64 + 1.5) * bc.powf(j as f64 + 1.5)))
                .collect(),
        };
        // Independent recovery of the leading coefficient from the rate
        // integral itself.
        let lead = profile.leading_series_coefficient()?;
        if (lead - 4.0 / 3.0).abs() > 1e-6 {
            return Err(Error::SeriesInstability { got: lead });
        }
        Ok(profile)
    }

    pub fn solution(&self) -> &EquilibriumSolution {
        &self.sol
    }

    pub fn upper_endpoint(&self) -> f64 {
        self.b
    }

    pub fn c_star(&self) -> f64 {
        self.c_star
    }

    pub fn cramer(&self) -> &[f64] {
        &self.cramer
    }

    /// Largest rescaled coordinate the rate integral can reach.
    pub fn x_range(&self) -> f64 {
        self.sol.x_range
    }

    /// Rate integral `eta(x) = int_1^x sqrt(s^2 - 1) G(s) ds` for `x >= 1`,
    /// via the substitution `s = 1 + u^2` that removes the square-root
    /// singularity.
    pub fn rate_at(&self, x: f64) -> Result<f64> {
        if x < 1.0 {
            return Err(Error::DomainError(format!("rate integral needs x >= 1, got {x}")));
        }
        if x > self.sol.x_range {
            return Err(Error::DomainError(format!(
                "rate integral reaches only x <= {:.3}, got {x}",
                self.sol.x_range
            )));
        }
        if x == 1.0 {
            return Ok(0.0);
        }
        let g = &self.sol.g;
        let umax = (x - 1.0).sqrt();
        adaptive_gauss_legendre(
            &|u: f64| {
                let s = 1.0 + u * u;
                2.0 * u * u * (s + 1.0).sqrt() * g.eval(s)
            },
            0.0,
            umax,
            1e-13 * umax.max(1.0),
        )
    }

    /// Derivative of the rate integral, `sqrt(x^2 - 1) G(x)`.
    pub fn rate_slope(&self, x: f64) -> f64 {
        if x <= 1.0 {
            return 0.0;
        }
        (x * x - 1.0).sqrt() * self.sol.g.eval(x)
    }

    /// Coefficient of `s^{3/2}` in `N eta(t(s)/b)` recovered from plain
    /// quadrature values of the rate integral; equals 4/3 for every
    /// admissible field.
    pub fn leading_series_coefficient(&self) -> Result<f64> {
        let bc = self.b * self.c_star;
        // eta(1+e)/e^{3/2} extrapolated to e = 0 by Neville's scheme
        let mut eps = 0.02;
        let mut xs = [0.0; 5];
        let mut ys = [0.0; 5];
        for i in 0..5 {
            xs[i] = eps;
            ys[i] = self.rate_at(1.0 + eps)? / eps.powf(1.5);
            eps *= 0.5;
        }
        for level in 1..5 {
            for i in (level..5).rev() {
                ys[i] = ys[i] + (ys[i] - ys[i - 1]) * xs[i] / (xs[i - level] - xs[i]);
            }
        }
        Ok(ys[4] / bc.powf(1.5))
    }
}

/// Taylor coefficients `G^{(k)}(1)/k!` for `k = 0..=j_max` by the
/// differentiated tensor quadrature
/// `G^{(k)}(1) = (1/pi) int int (1-u)^k (V o m)^{(k+2)}(1 + u(s-1)) / sqrt(1-s^2)`.
fn edge_taylor(sol: &EquilibriumSolution, j_max: usize) -> Result<Vec<f64>> {
    let field = &sol.field;
    let h = 0.5 * (sol.b - sol.a);
    let mid = 0.5 * (sol.a + sol.b);
    let s_rule = gauss_chebyshev_first(96);
    let u_rule = gauss_legendre(32);
    let mut out = Vec::with_capacity(j_max + 1);
    let mut factorial = 1.0;
    for k in 0..=j_max {
        if k > 0 {
            factorial *= k as f64;
        }
        let mut outer = 0.0;
        for &s in &s_rule.nodes {
            let mut inner = 0.0;
            for (&xu, &wu) in u_rule.nodes.iter().zip(&u_rule.weights) {
                let u = 0.5 * (xu + 1.0);
                let y = 1.0 + u * (s - 1.0);
                inner += 0.5
                    * wu
                    * (1.0 - u).powi(k as i32)
                    * field.exact_deriv(k + 2, h * y + mid)
                    * h.powi(k as i32 + 2);
            }
            outer += inner;
        }
        out.push(s_rule.weights[0] * outer / std::f64::consts::PI / factorial);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn quadratic_solution() -> EquilibriumSolution {
        let q = ConfiningField::quadratic(1.0);
        let f = SmoothField::from_confining(&q, 4.0).unwrap();
        EquilibriumSolution::solve(f).unwrap()
    }

    #[test]
    fn quadratic_field_gives_semicircle() {
        let sol = quadratic_solution();
        let (a, b) = sol.support();
        assert_relative_eq!(b, 2f64.sqrt(), max_relative = 1e-11);
        assert_abs_diff_eq!(a + b, 0.0, epsilon = 1e-12);
        // G is identically 4
        for &x in &[-1.0, -0.3, 0.0, 0.8, 1.0] {
            assert_relative_eq!(sol.density_factor(x), 4.0, max_relative = 1e-10);
        }
        // density(0) = sqrt(2)/pi
        assert_relative_eq!(
            sol.density(0.0),
            2f64.sqrt() / std::f64::consts::PI,
            max_relative = 1e-10
        );
        // square-root vanishing at the edge
        assert_eq!(sol.density(b), 0.0);
        assert!(sol.density(b - 1e-6) > 0.0);
        assert!(sol.mass_error() < 1e-8);
    }

    #[test]
    fn quartic_field_matches_closed_forms() {
        let q = ConfiningField::quartic();
        let f = SmoothField::from_confining(&q, 3.0).unwrap();
        let sol = EquilibriumSolution::solve(f).unwrap();
        let (a, b) = sol.support();
        assert_relative_eq!(b, (4.0f64 / 3.0).powf(0.25), max_relative = 1e-11);
        assert_abs_diff_eq!(a + b, 0.0, epsilon = 1e-12);
        // G(t) = (16 t^2 + 8)/3
        for &x in &[0.0, 0.5, 1.0] {
            assert_relative_eq!(
                sol.density_factor(x),
                (16.0 * x * x + 8.0) / 3.0,
                max_relative = 1e-9
            );
        }
        let (r1, r2) = sol.endpoint_residuals();
        assert!(r1 <= 1e-9 && r2 <= 1e-9);
    }

    #[test]
    fn asymmetric_field_solves_both_equations() {
        // V = x^2 + 0.3 x: semicircle of radius sqrt(2) centered at -0.15
        let q = ConfiningField::quadratic(1.0);
        let lin = Chebyshev::fit(-4.0, 4.0, 16, |t| 0.3 * t);
        let f = SmoothField::blended(&q, lin, 4.0, false).unwrap();
        let sol = EquilibriumSolution::solve(f).unwrap();
        let (a, b) = sol.support();
        assert_relative_eq!(b, -0.15 + 2f64.sqrt(), max_relative = 1e-9);
        assert_relative_eq!(a, -0.15 - 2f64.sqrt(), max_relative = 1e-9);
        let (r1, r2) = sol.endpoint_residuals();
        assert!(r1 <= 1e-9 && r2 <= 1e-9);
    }

    #[test]
    fn edge_constants_for_quadratic() {
        let sol = quadratic_solution();
        let e = sol.edge_constants();
        assert_relative_eq!(e.c_star, 2f64.sqrt(), max_relative = 1e-10);
        assert_relative_eq!(e.gamma, e.c_star, max_relative = 1e-10);
        assert!(sol.density_factor(1.0) > 0.0 && e.c_star > 0.0);
    }

    #[test]
    fn rate_integral_closed_form_for_quadratic() {
        // eta(x) = 2x sqrt(x^2-1) - 2 log(x + sqrt(x^2-1)) when G = 4
        let sol = quadratic_solution();
        let p = DeviationProfile::new(&sol, 2).unwrap();
        assert_eq!(p.rate_at(1.0).unwrap(), 0.0);
        for &x in &[1.1, 1.5, 2.0] {
            let r = (x * x - 1.0f64).sqrt();
            let exact = 2.0 * x * r - 2.0 * (x + r).ln();
            assert_relative_eq!(p.rate_at(x).unwrap(), exact, max_relative = 1e-10);
        }
        let eta2 = p.rate_at(2.0).unwrap();
        assert_relative_eq!(
            eta2,
            4.0 * 3f64.sqrt() - 2.0 * (2.0 + 3f64.sqrt()).ln(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn rate_slope_matches_finite_differences() {
        let sol = quadratic_solution();
        let p = DeviationProfile::new(&sol, 1).unwrap();
        let h = 1e-5;
        for &x in &[1.2, 1.6, 2.1] {
            let fd = (p.rate_at(x + h).unwrap() - p.rate_at(x - h).unwrap()) / (2.0 * h);
            assert_abs_diff_eq!(fd, p.rate_slope(x), epsilon = 1e-7);
        }
    }

    #[test]
    fn rate_integral_is_convex_near_edge() {
        let sol = quadratic_solution();
        let p = DeviationProfile::new(&sol, 1).unwrap();
        let xs: Vec<f64> = (0..=20).map(|i| 1.0 + 0.5 * i as f64 / 20.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| p.rate_at(x).unwrap()).collect();
        for i in 1..xs.len() - 1 {
            let second = ys[i + 1] - 2.0 * ys[i] + ys[i - 1];
            assert!(second >= -1e-12, "second difference {second} at {}", xs[i]);
        }
    }

    #[test]
    fn cramer_coefficients_for_quadratic() {
        let sol = quadratic_solution();
        let p = DeviationProfile::new(&sol, 3).unwrap();
        // d_1 = 1/10 for the quadratic field
        assert_abs_diff_eq!(p.cramer()[0], 0.1, epsilon = 1e-9);
        let lead = p.leading_series_coefficient().unwrap();
        assert_abs_diff_eq!(lead, 4.0 / 3.0, epsilon = 1e-8);
    }

    #[test]
    fn fixed_point_trivial_for_zero_interaction() {
        let q = ConfiningField::quadratic(1.0);
        let h = InteractionSpec::zero();
        let r = self_consistent_field(&q, &h, 4.0, FixedPointOptions::default()).unwrap();
        assert_eq!(r.iterations, 1);
        let (_, b) = r.solution.support();
        assert_relative_eq!(b, 2f64.sqrt(), max_relative = 1e-11);
    }

    #[test]
    fn fixed_point_small_interaction_is_self_consistent() {
        let q = ConfiningField::quadratic(1.0);
        let h = InteractionSpec::gaussian(0.05, 1.0);
        let r = self_consistent_field(&q, &h, 4.0, FixedPointOptions::default()).unwrap();
        assert!(r.residual <= 1e-9, "residual {}", r.residual);
        // evenness of the output density
        let sol = &r.solution;
        for &t in &[0.2, 0.7, 1.1] {
            assert_abs_diff_eq!(sol.density(t), sol.density(-t), epsilon = 1e-12);
        }
        // independence of initialization: restart from the perturbed field
        let mut opts = FixedPointOptions::default();
        opts.measure_nodes = 200;
        let r2 = self_consistent_field(&q, &h, 4.0, opts).unwrap();
        let (_, b1) = r.solution.support();
        let (_, b2) = r2.solution.support();
        assert_abs_diff_eq!(b1, b2, epsilon = 1e-8);
    }

    #[test]
    fn profile_rejects_out_of_range_arguments() {
        let sol = quadratic_solution();
        let p = DeviationProfile::new(&sol, 1).unwrap();
        assert!(p.rate_at(0.5).is_err());
        assert!(p.rate_at(100.0).is_err());
    }
}
