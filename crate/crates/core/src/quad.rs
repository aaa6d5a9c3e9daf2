//! Gaussian quadrature rules and adaptive integration.
//!
//! Three fixed rules cover the singularity structure of the formulas in this
//! crate: Gauss-Legendre for smooth integrands, Gauss-Chebyshev of the first
//! kind for 1/sqrt(1-x^2) weights (endpoint equations, edge profile) and of
//! the second kind for sqrt(1-x^2) weights (integrals against the
//! equilibrium density).

use std::f64::consts::PI;

/// Nodes and weights of a quadrature rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Apply the rule to `f` on `[a, b]` (affine map from `[-1, 1]`).
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = KahanSum::new();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            sum.add(w * f(mid + half * x));
        }
        half * sum.value()
    }

    /// Nodes mapped to `[a, b]` with correspondingly scaled weights.
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let nodes = self.nodes.iter().map(|&x| mid + half * x).collect();
        let weights = self.weights.iter().map(|&w| w * half).collect();
        (nodes, weights)
    }
}

/// Gauss-Legendre rule with `n` nodes, exact for polynomials of degree `2n-1`.
///
/// Nodes are found by Newton iteration on `P_n` from Chebyshev initial
/// guesses; this is accurate to machine precision for the sizes used here.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        // One final refinement to polish.
        let (p, d) = legendre_with_deriv(n, x);
        x -= p / d;
        let dp = d;
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_with_deriv(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    Rule { nodes, weights }
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Chebyshev rule of the first kind: integrates `f(x)/sqrt(1-x^2)`.
pub fn gauss_chebyshev_first(n: usize) -> Rule {
    let w = PI / n as f64;
    let nodes = (1..=n)
        .map(|i| (PI * (2.0 * i as f64 - 1.0) / (2.0 * n as f64)).cos())
        .collect();
    Rule { nodes, weights: vec![w; n] }
}

/// Gauss-Chebyshev rule of the second kind: integrates `f(x)*sqrt(1-x^2)`.
pub fn gauss_chebyshev_second(n: usize) -> Rule {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 1..=n {
        let theta = PI * i as f64 / (n as f64 + 1.0);
        nodes.push(theta.cos());
        weights.push(PI / (n as f64 + 1.0) * theta.sin().powi(2));
    }
    Rule { nodes, weights }
}

/// Adaptive Gauss-Legendre integration of `f` on `[a, b]`.
///
/// Compares a 15-point estimate against the sum of two half-interval
/// estimates and recurses where they disagree.
pub fn adaptive_gauss_legendre<F>(f: &F, a: f64, b: f64, tol: f64) -> crate::Result<f64>
where
    F: Fn(f64) -> f64,
{
    let rule = gauss_legendre(15);
    let whole = rule.integrate(a, b, f);
    let mut total = KahanSum::new();
    adapt(f, &rule, a, b, whole, tol, 0, &mut total)?;
    Ok(total.value())
}

fn adapt<F>(
    f: &F,
    rule: &Rule,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    out: &mut KahanSum,
) -> crate::Result<()>
where
    F: Fn(f64) -> f64,
{
    let mid = 0.5 * (a + b);
    let left = rule.integrate(a, mid, f);
    let right = rule.integrate(mid, b, f);
    let err = (left + right - whole).abs();
    if err <= tol || b - a < 1e-14 {
        out.add(left);
        out.add(right);
        return Ok(());
    }
    if depth >= 60 {
        return Err(crate::Error::QuadratureFailure(format!(
            "adaptive refinement stalled on [{a}, {b}] with error {err:e}"
        )));
    }
    adapt(f, rule, a, mid, left, 0.5 * tol, depth + 1, out)?;
    adapt(f, rule, mid, b, right, 0.5 * tol, depth + 1, out)
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
