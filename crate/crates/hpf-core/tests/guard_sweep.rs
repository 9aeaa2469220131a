//! Scratch: sensitivity of the following-resource validation errors to the
//! internal guard band (ignored by default).

use std::sync::Arc;

use hpf_core::network::validation_network;
use hpf_core::resources::{CiderSpec, HarmonicResponse, LiftedCider, ResourceRegistry};
use hpf_core::solver::{build_problem, solve, SolverConfig};
use hpf_core::spectral::SpectralParams;
use hpf_core::tds::{compute_kpis, simulate, TdsConfig};

#[test]
#[ignore]
fn guard_band_sweep() {
    let sp = SpectralParams::new(50.0, 25);
    let net = validation_network(CiderSpec::following_60kva(50e3, 16.4e3));
    let registry = ResourceRegistry::with_builtin();

    let cfg = TdsConfig {
        dt: 2e-6,
        t_end: 8.0,
        ..TdsConfig::default()
    };
    let tds = simulate(&net, &registry, sp, &cfg).unwrap();
    let spectra = tds.port_spectra().unwrap();
    let (_, _v_tds, i_tds) = &spectra[0];

    for (guard, exact) in [(6u32, false), (6, true), (12, true)] {
        let mut problem = build_problem(&net, sp, &registry).unwrap();
        // Swap in a response with the requested reciprocal treatment.
        let spec_pu = CiderSpec::following_60kva(50e3, 16.4e3)
            .to_per_unit(&hpf_core::pu::PerUnit::new(230.0, 10e3));
        let lifted = if exact {
            LiftedCider::with_exact_reciprocal(&spec_pu, sp, guard).unwrap()
        } else {
            LiftedCider::with_guard(&spec_pu, sp, guard).unwrap()
        };
        problem.ports[0].response = Arc::new(lifted) as Arc<dyn HarmonicResponse>;
        let solution = solve(&problem, &SolverConfig::default()).unwrap();
        let port = &solution.ports[0];
        let kpi = compute_kpis(&port.current, i_tds).unwrap();
        eprintln!(
            "guard {guard:2} exact {exact}: e_abs max {:.3e}, e_arg max {:.3}",
            kpi.max_e_abs(),
            kpi.max_e_arg_deg()
        );
        for e in &kpi.entries {
            if e.e_abs > 4e-4 || e.e_arg_deg > 0.5 {
                eprintln!(
                    "    h={:2} |I|={:.4e} e_abs={:.3e} e_arg={:.3}",
                    e.h,
                    port.current.phase(hpf_core::spectral::Phase::A).mag_rms(e.h as i32),
                    e.e_abs,
                    e.e_arg_deg
                );
            }
        }
    }
}
