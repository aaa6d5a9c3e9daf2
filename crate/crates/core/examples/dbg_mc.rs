use loggas::equilibrium::*;
use loggas::fields::*;
use loggas::harness::*;
fn main() {
    let q = ConfiningField::quadratic(1.0);
    let h = InteractionSpec::gaussian(-0.1, 1.0);
    let r = self_consistent_field(&q, &h, 2.6, FixedPointOptions::default()).unwrap();
    let sol = r.solution;
    let (a, b) = sol.support();
    let cfg = EnsembleConfig {
        n: 100, q, h, half_width: 2.6, seed: 20260810,
        chains: 4, steps: 45_000, burnin: 5_000, thin: 10,
        init_span: (a + 0.05, b - 0.05), keep_configs: false,
    };
    let t0 = std::time::Instant::now();
    let (_, summary) = edge_fluctuation_experiment(&cfg, &sol).unwrap();
    println!("KS = {:.4}, eff samples = {:.0}, acceptance = {:.3}, elapsed {:.1?}",
        summary.ks, summary.effective_samples, summary.acceptance, t0.elapsed());
}
