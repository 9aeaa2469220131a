//! Scratch: benchmark simulation stability and settling probe.

use hpf_core::network::benchmark_network;
use hpf_core::resources::ResourceRegistry;
use hpf_core::spectral::SpectralParams;
use hpf_core::tds::{simulate, TdsConfig};

#[test]
#[ignore]
fn probe_benchmark_simulation() {
    let net = benchmark_network();
    let registry = ResourceRegistry::with_builtin();
    let cfg = TdsConfig {
        dt: 0.5e-6,
        t_end: 0.3,
        min_time: 0.1,
        trace: true,
        ..TdsConfig::default()
    };
    let t0 = std::time::Instant::now();
    let r = simulate(&net, &registry, SpectralParams::new(50.0, 25), &cfg).unwrap();
    eprintln!(
        "wall {:.1?} for 0.3 s sim; steady {} at {:.3}; window wall {:.2?}",
        t0.elapsed(),
        r.reached_steady,
        r.t_steady,
        r.window_wall
    );
}

#[test]
#[ignore]
fn full_system_validation_probe() {
    use hpf_core::solver::{build_problem, solve, SolverConfig};
    use hpf_core::tds::compute_kpis;

    let net = benchmark_network();
    let registry = ResourceRegistry::with_builtin();
    let sp = SpectralParams::new(50.0, 25);
    let problem = build_problem(&net, sp, &registry).unwrap();
    let solution = solve(&problem, &SolverConfig::default()).unwrap();

    let cfg = TdsConfig {
        dt: 0.5e-6,
        t_end: 25.0,
        steady_tol: 1e-8,
        trace: false,
        ..TdsConfig::default()
    };
    let t0 = std::time::Instant::now();
    let tds = simulate(&net, &registry, sp, &cfg).unwrap();
    eprintln!(
        "TDS wall {:.1?}; steady {} at {:.3}; window wall {:.2?}",
        t0.elapsed(),
        tds.reached_steady,
        tds.t_steady,
        tds.window_wall
    );
    let spectra = tds.port_spectra().unwrap();
    for (name, v_tds, i_tds) in &spectra {
        let port = solution.port_by_name(name).unwrap();
        let kv = compute_kpis(&port.voltage, v_tds).unwrap();
        let ki = compute_kpis(&port.current, i_tds).unwrap();
        eprintln!(
            "{name}: e_abs(V) {:.3e} e_arg(V) {:.3} | e_abs(I) {:.3e} e_arg(I) {:.3}",
            kv.max_e_abs(),
            kv.max_e_arg_deg(),
            ki.max_e_abs(),
            ki.max_e_arg_deg()
        );
        for e in &ki.entries {
            if e.e_abs > 1.5e-3 || e.e_arg_deg > 0.8 {
                eprintln!(
                    "    I h={:2} |I|={:.4e} e_abs={:.3e} e_arg={:.3}",
                    e.h,
                    port.current
                        .phase(hpf_core::spectral::Phase::A)
                        .mag_rms(e.h as i32),
                    e.e_abs,
                    e.e_arg_deg
                );
            }
        }
        for e in &kv.entries {
            if e.e_abs > 2e-4 || e.e_arg_deg > 0.8 {
                eprintln!(
                    "    V h={:2} |V|={:.4e} e_abs={:.3e} e_arg={:.3}",
                    e.h,
                    port.voltage
                        .phase(hpf_core::spectral::Phase::A)
                        .mag_rms(e.h as i32),
                    e.e_abs,
                    e.e_arg_deg
                );
            }
        }
    }
}
