//! System-level checks on the 22-node benchmark network: solver
//! convergence, unbalance reproduction, and agreement with the time-domain
//! reference.

use hpf_core::network::benchmark_network;
use hpf_core::resources::ResourceRegistry;
use hpf_core::solver::{build_problem, solve, SolverConfig};
use hpf_core::spectral::{sequence_decompose, SpectralParams};

fn sp() -> SpectralParams {
    SpectralParams::new(50.0, 25)
}

#[test]
fn benchmark_power_flow_converges_and_reproduces_unbalance() {
    let net = benchmark_network();
    let registry = ResourceRegistry::with_builtin();
    let t0 = std::time::Instant::now();
    let problem = build_problem(&net, sp(), &registry).unwrap();
    let t_build = t0.elapsed();
    let t1 = std::time::Instant::now();
    let solution = solve(&problem, &SolverConfig::default()).unwrap();
    let t_solve = t1.elapsed();
    println!(
        "benchmark: build {:.2?}, solve {:.2?}, {} iterations, residual {:.3e}",
        t_build, t_solve, solution.iterations, solution.verified_residual
    );
    println!("residual history: {:?}", solution.residual_history);
    assert!(solution.converged);
    assert!(solution.verified_residual <= 1e-8);

    for port in &solution.ports {
        let (vp, vn, v0) = sequence_decompose(port.voltage.at_order(1));
        let (ip, in_, i0) = sequence_decompose(port.current.at_order(1));
        println!(
            "{}: |V-|/|V+| = {:.2}%  |V0|/|V+| = {:.2}%  |I-|/|I+| = {:.2}%  |I0|/|I+| = {:.2}%",
            port.node_name,
            100.0 * vn.norm() / vp.norm(),
            100.0 * v0.norm() / vp.norm(),
            100.0 * in_.norm() / ip.norm(),
            100.0 * i0.norm() / ip.norm(),
        );
    }

    // Three-leg (following) resources inject no homopolar current at all.
    for port in &solution.ports {
        if port.role == hpf_core::resources::PortRole::CurrentInjector {
            let (ip, _, i0) = sequence_decompose(port.current.at_order(1));
            assert!(
                i0.norm() < 1e-12 * ip.norm(),
                "{}: homopolar current ratio {:.3e}",
                port.node_name,
                i0.norm() / ip.norm()
            );
        }
    }

    // Voltage unbalance at resource nodes stays small (regulated grid).
    for port in &solution.ports {
        let (vp, vn, _) = sequence_decompose(port.voltage.at_order(1));
        assert!(vn.norm() / vp.norm() < 0.05);
    }

    // Load nodes: reconstruct internal voltages and branch currents, then
    // check the unbalance they introduce.
    let port_currents: Vec<_> = solution.ports.iter().map(|p| p.current.clone()).collect();
    let nodes = hpf_core::network::recover_node_spectra(&net, sp(), &port_currents).unwrap();
    let load_currents = hpf_core::network::load_current_spectra(&net, sp(), &nodes).unwrap();
    let source_current = hpf_core::network::source_current_spectrum(&net, sp(), &nodes).unwrap();
    for (li, load) in net.loads.iter().enumerate() {
        let (vp, vn, v0) = sequence_decompose(nodes[load.node].at_order(1));
        let (ip, in_, i0) = sequence_decompose(load_currents[li].at_order(1));
        println!(
            "{} (load): |V-|/|V+| = {:.2}%  |V0|/|V+| = {:.2}%  |I-|/|I+| = {:.2}%  |I0|/|I+| = {:.2}%",
            net.node_name(load.node),
            100.0 * vn.norm() / vp.norm(),
            100.0 * v0.norm() / vp.norm(),
            100.0 * in_.norm() / ip.norm(),
            100.0 * i0.norm() / ip.norm(),
        );
        // Unbalanced loads draw visibly unbalanced current.
        let (ipn, inn, i0n) = (ip.norm(), in_.norm(), i0.norm());
        assert!(
            inn / ipn > 0.10 || i0n / ipn > 0.10,
            "load at {} shows no current unbalance",
            net.node_name(load.node)
        );
    }
    let (ip, in_, i0) = sequence_decompose(source_current.at_order(1));
    let (vp, vn, v0) = sequence_decompose(nodes[net.thevenin.node].at_order(1));
    println!(
        "N1 (source): |V-|/|V+| = {:.2}%  |V0|/|V+| = {:.2}%  |I-|/|I+| = {:.2}%  |I0|/|I+| = {:.2}%",
        100.0 * vn.norm() / vp.norm(),
        100.0 * v0.norm() / vp.norm(),
        100.0 * in_.norm() / ip.norm(),
        100.0 * i0.norm() / ip.norm(),
    );
    // Port voltages from the reduced model agree with the full nodal
    // reconstruction.
    for port in &solution.ports {
        let dev = port.voltage.max_diff(&nodes[port.node]);
        assert!(dev < 1e-10, "{}: reconstruction deviates {dev:.2e}", port.node_name);
    }

    // Fundamental power balance: everything injected is consumed.
    let p_of = |v: &hpf_core::spectral::PolyphaseSpectrum,
                i: &hpf_core::spectral::PolyphaseSpectrum| {
        let mut p = 0.0;
        for ph in 0..3 {
            for h in 1..=25 {
                p += 2.0 / 3.0 * (v.phases()[ph].get(h) * i.phases()[ph].get(h).conj()).re;
            }
        }
        p
    };
    let p_te = p_of(&nodes[net.thevenin.node], &source_current);
    let mut p_res = 0.0;
    for port in &solution.ports {
        let p = p_of(&port.voltage, &port.current);
        let (ip, _, _) = sequence_decompose(port.current.at_order(1));
        println!(
            "{}: P = {:.3} pu, |I+| = {:.3} pu",
            port.node_name,
            p,
            ip.norm() * std::f64::consts::SQRT_2
        );
        p_res += p;
    }
    let mut p_load = 0.0;
    for (li, load) in net.loads.iter().enumerate() {
        p_load += p_of(&nodes[load.node], &load_currents[li]);
    }
    let (i_te_p, _, _) = sequence_decompose(source_current.at_order(1));
    println!(
        "source: P = {:.3} pu, |I+| = {:.3} pu; loads consume {:.3} pu",
        p_te,
        i_te_p.norm() * std::f64::consts::SQRT_2,
        p_load
    );
    let p_gen = p_te + p_res.max(0.0)
        + solution
            .ports
            .iter()
            .map(|p| p_of(&p.voltage, &p.current).max(0.0))
            .sum::<f64>()
        - p_res.max(0.0);
    let p_consumed = p_load
        + solution
            .ports
            .iter()
            .map(|p| (-p_of(&p.voltage, &p.current)).max(0.0))
            .sum::<f64>();
    let losses = p_gen - p_consumed;
    println!(
        "generation {p_gen:.3} pu, consumption {p_consumed:.3} pu, network losses {losses:.4} pu"
    );
    assert!(losses > 0.0 && losses < 0.1 * p_gen);
}
