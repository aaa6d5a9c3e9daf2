//! Property tests for the algebraic invariants of the public API.

use loggas::cdkernel::{CdKernel, WeightSpec};
use loggas::deviations;
use loggas::equilibrium::{DeviationProfile, EquilibriumSolution, SmoothField};
use loggas::fields::{ConfiningField, GaussianTerm, InteractionSpec};
use loggas::linearize::RemainderFamily;
use proptest::prelude::*;
use std::sync::OnceLock;

fn term_strategy() -> impl Strategy<Value = GaussianTerm> {
    (-1.0f64..1.0, 0.3f64..2.5).prop_map(|(c, sigma)| GaussianTerm { c, sigma })
}

fn mixture_strategy() -> impl Strategy<Value = InteractionSpec> {
    prop::collection::vec(term_strategy(), 0..4)
        .prop_map(|terms| InteractionSpec::new(terms).unwrap())
}

fn quadratic_solution() -> &'static EquilibriumSolution {
    static SOL: OnceLock<EquilibriumSolution> = OnceLock::new();
    SOL.get_or_init(|| {
        let q = ConfiningField::quadratic(1.0);
        let f = SmoothField::from_confining(&q, 4.0).unwrap();
        EquilibriumSolution::solve(f).unwrap()
    })
}

fn small_kernel() -> &'static CdKernel {
    static KERNEL: OnceLock<CdKernel> = OnceLock::new();
    KERNEL.get_or_init(|| {
        let q = ConfiningField::quadratic(1.0);
        let f = SmoothField::from_confining(&q, 3.0).unwrap();
        CdKernel::new(WeightSpec::new(12, f, 3.0).unwrap()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interactions_are_exactly_even(h in mixture_strategy(), t in -8.0f64..8.0) {
        prop_assert_eq!(h.eval(t).to_bits(), h.eval(-t).to_bits());
        prop_assert_eq!(h.fourier(t).to_bits(), h.fourier(-t).to_bits());
    }

    #[test]
    fn confining_fields_are_exactly_even(
        c2 in 0.1f64..2.0,
        c4 in 0.0f64..1.0,
        t in -6.0f64..6.0,
    ) {
        let q = ConfiningField::new(vec![0.0, 0.0, c2, 0.0, c4]).unwrap();
        prop_assert_eq!(q.eval(t).to_bits(), q.eval(-t).to_bits());
    }

    #[test]
    fn split_recombines_pointwise(h in mixture_strategy(), t in -8.0f64..8.0) {
        let s = h.split();
        let scale: f64 = h.terms().iter().map(|g| g.c.abs()).sum::<f64>() + 1.0;
        prop_assert!((s.plus.eval(t) - s.minus.eval(t) - h.eval(t)).abs() <= 1e-14 * scale);
        // amplitude lists recombine up to ordering
        let mut original: Vec<(f64, f64)> =
            h.terms().iter().filter(|g| g.c != 0.0).map(|g| (g.c, g.sigma)).collect();
        let mut rebuilt: Vec<(f64, f64)> = s
            .plus
            .terms()
            .iter()
            .map(|g| (g.c, g.sigma))
            .chain(s.minus.terms().iter().map(|g| (-g.c, g.sigma)))
            .collect();
        original.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rebuilt.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assert_eq!(original, rebuilt);
    }

    #[test]
    fn transform_is_bounded_by_total_amplitude(h in mixture_strategy(), t in -10.0f64..10.0) {
        let bound: f64 = h.terms().iter().map(|g| (g.c * g.sigma).abs()).sum();
        prop_assert!(h.fourier(t).abs() <= bound + 1e-12);
    }

    #[test]
    fn interpolated_remainder_is_affine_in_z(
        h in mixture_strategy(),
        xs in prop::collection::vec(-1.3f64..1.3, 1..8),
        z in -2.0f64..2.0,
    ) {
        let sol = quadratic_solution();
        let family = RemainderFamily::new(&h.split(), sol).unwrap();
        let u0 = family.eval(&xs, 0.0);
        let u1 = family.eval(&xs, 1.0);
        let uz = family.eval(&xs, z);
        let interpolated = u0 + z * (u1 - u0);
        let scale = 1.0 + u0.abs() + u1.abs();
        prop_assert!((uz - interpolated).abs() <= 1e-12 * scale);
    }

    #[test]
    fn tail_prediction_log_identity(n in 10usize..400, gap in 0.02f64..0.8) {
        static PROFILE: OnceLock<DeviationProfile> = OnceLock::new();
        let p = PROFILE.get_or_init(|| DeviationProfile::new(quadratic_solution(), 1).unwrap());
        let b = p.upper_endpoint();
        let t = b + gap;
        let pred = deviations::tail_probability(p, n, t).unwrap();
        let x = t / b;
        let manual = -(n as f64) * p.rate_at(x).unwrap() + 2.0 * b.ln()
            - (4.0 * std::f64::consts::PI * n as f64 * (t * t - b * b) * p.rate_slope(x)).ln();
        prop_assert!((pred.log_value - manual).abs() <= 1e-10 * (1.0 + manual.abs()));
    }

    #[test]
    fn kernel_evaluation_is_exactly_symmetric(s in -1.2f64..1.2, t in -1.2f64..1.2) {
        let k = small_kernel();
        prop_assert_eq!(k.eval(s, t).to_bits(), k.eval(t, s).to_bits());
    }
}
