//! Scratch: random-initialization convergence on the benchmark.

use hpf_core::network::benchmark_network;
use hpf_core::resources::ResourceRegistry;
use hpf_core::solver::{build_problem, solve, InitStrategy, SolverConfig};
use hpf_core::spectral::SpectralParams;

#[test]
#[ignore]
fn random_init_probe() {
    let net = benchmark_network();
    let registry = ResourceRegistry::with_builtin();
    let problem = build_problem(&net, SpectralParams::new(50.0, 25), &registry).unwrap();
    let reference = solve(&problem, &SolverConfig::default()).unwrap();
    for seed in 0..5u64 {
        let cfg = SolverConfig {
            init: InitStrategy::random(seed),
            ..SolverConfig::default()
        };
        let t0 = std::time::Instant::now();
        match solve(&problem, &cfg) {
            Ok(s) => eprintln!(
                "seed {seed}: {} iterations in {:.2?}, residual {:.2e}, diff vs ref {:.2e}",
                s.iterations,
                t0.elapsed(),
                s.verified_residual,
                s.max_unknown_diff(&reference)
            ),
            Err(e) => eprintln!("seed {seed}: FAILED: {e}"),
        }
    }
}
