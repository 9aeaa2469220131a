//! Scratch diagnostics for the simulation engine (ignored by default).

use hpf_core::network::validation_network;
use hpf_core::resources::{CiderSpec, ResourceRegistry};
use hpf_core::spectral::SpectralParams;
use hpf_core::tds::{simulate, TdsConfig};

#[test]
#[ignore]
fn trace_forming_validation() {
    let net = validation_network(CiderSpec::forming_100kva(241.5, 50.0));
    let registry = ResourceRegistry::with_builtin();
    let cfg = TdsConfig {
        dt: 1e-6,
        t_end: 1.0,
        trace: true,
        ..TdsConfig::default()
    };
    let r = simulate(&net, &registry, SpectralParams::new(50.0, 25), &cfg).unwrap();
    eprintln!("steady: {} at t = {}", r.reached_steady, r.t_steady);
}
