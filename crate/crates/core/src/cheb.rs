//! Chebyshev interpolants on arbitrary intervals.
//!
//! Fields, densities and edge profiles in this crate are analytic, so
//! Chebyshev expansions converge geometrically; degree 128 is enough for
//! everything we interpolate. Evaluation uses Clenshaw recurrence,
//! differentiation the standard coefficient recurrence.

/// A Chebyshev series `sum_k c_k T_k(m(x))` on `[a, b]`,
/// where `m` maps `[a, b]` affinely onto `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Interpolate `f` on `[a, b]` through `n + 1` Chebyshev-Lobatto points.
    pub fn fit<F: FnMut(f64) -> f64>(a: f64, b: f64, n: usize, mut f: F) -> Self {
        assert!(n >= 1 && b > a);
        let nf = n as f64;
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let values: Vec<f64> = (0..=n)
            .map(|j| f(mid + half * (std::f64::consts::PI * j as f64 / nf).cos()))
            .collect();
        // DCT-I, direct O(n^2) sum; n <= a few hundred everywhere in this crate.
        let mut coeffs = vec![0.0; n + 1];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.5 * (values[0] + if k % 2 == 0 { values[n] } else { -values[n] });
            for (j, &v) in values.iter().enumerate().take(n).skip(1) {
                acc += v * (std::f64::consts::PI * (j * k) as f64 / nf).cos();
            }
            *c = 2.0 * acc / nf;
        }
        coeffs[0] *= 0.5;
        coeffs[n] *= 0.5;
        Chebyshev { a, b, coeffs }
    }

    /// Assemble from explicit coefficients (used to blend interpolants).
    pub fn from_coeffs(a: f64, b: f64, coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty() && b > a);
        Chebyshev { a, b, coeffs }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Clenshaw evaluation. Arguments slightly outside `[a, b]` are allowed
    /// (the series extrapolates); callers are expected to stay close.
    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().skip(1).rev() {
            let tmp = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = tmp;
        }
        t * b1 - b2 + self.coeffs[0]
    }

    /// Series for the derivative.
    pub fn derivative(&self) -> Chebyshev {
        let n = self.coeffs.len() - 1;
        let mut d = vec![0.0; n.max(1)];
        if n >= 1 {
            let mut dk2 = 0.0;
            let mut dk1 = 0.0;
            for k in (1..=n).rev() {
                let dk = if k + 2 <= n { dk2 } else { 0.0 } + 2.0 * k as f64 * self.coeffs[k];
                if k >= 2 {
                    d[k - 1] = dk;
                } else {
                    d[0] = 0.5 * dk;
                }
                dk2 = dk1;
                dk1 = dk;
            }
        }
        let scale = 2.0 / (self.b - self.a);
        for c in d.iter_mut() {
            *c *= scale;
        }
        Chebyshev { a: self.a, b: self.b, coeffs: d }
    }

    /// Largest magnitude among coefficients of odd-index terms; for an even
    /// function on a symmetric interval this is pure rounding noise.
    pub fn max_odd_coeff(&self) -> f64 {
        self.coeffs
            .iter()
            .skip(1)
            .step_by(2)
            .fold(0.0f64, |m, c| m.max(c.abs()))
    }

    /// Max interpolation residual against `f` at `m` equispaced off-grid points.
    pub fn residual<F: FnMut(f64) -> f64>(&self, mut f: F, m: usize) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..m {
            let x = self.a + (self.b - self.a) * (i as f64 + 0.617) / m as f64;
            if x <= self.b {
                worst = worst.max((self.eval(x) - f(x)).abs());
            }
        }
        worst
    }
}
