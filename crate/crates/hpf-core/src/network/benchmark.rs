use crate::pu::PerUnit;
use crate::resources::CiderSpec;

use super::{
    HarmonicEntry, LineSpec, LoadSpec, NetworkSpec, ResourceAttachment, SequenceParams,
    TheveninSpec,
};

/// Main-feeder underground cable type.
pub const UG1: SequenceParams = SequenceParams {
    r1_ohm_per_km: 0.162,
    r0_ohm_per_km: 0.529,
    l1_h_per_km: 0.262e-3,
    l0_h_per_km: 1.185e-3,
    c1_f_per_km: 637e-9,
    c0_f_per_km: 388e-9,
};

/// Side-feeder underground cable type.
pub const UG3: SequenceParams = SequenceParams {
    r1_ohm_per_km: 0.822,
    r0_ohm_per_km: 1.794,
    l1_h_per_km: 0.270e-3,
    l0_h_per_km: 3.895e-3,
    c1_f_per_km: 637e-9,
    c0_f_per_km: 388e-9,
};

/// Standard low-voltage background-distortion table: harmonic magnitudes at
/// the planning limits, as fractions of the fundamental.
pub fn table_source_harmonics() -> Vec<HarmonicEntry> {
    let e = |h, pct: f64, deg| HarmonicEntry {
        h,
        mag: pct / 100.0,
        phase_deg: deg,
    };
    vec![
        e(1, 100.0, 0.0),
        e(5, 6.0, 22.50),
        e(7, 5.0, 15.00),
        e(11, 3.5, 11.25),
        e(13, 3.0, 22.50),
        e(17, 2.0, 15.00),
        e(19, 1.5, 11.25),
        e(23, 1.5, 11.25),
    ]
}

const POWER_FACTOR: f64 = 0.95;

fn q_at_pf(p: f64) -> f64 {
    p * (1.0 / (POWER_FACTOR * POWER_FACTOR) - 1.0).sqrt()
}

/// Single-port test network: one resource coupled directly to the stiff
/// source of a weak distribution feeder (used for per-resource validation).
pub fn validation_network(resource: CiderSpec) -> NetworkSpec {
    NetworkSpec {
        base: PerUnit::new(230.0, 10e3),
        f1_hz: 50.0,
        node_names: vec!["PORT".into()],
        lines: vec![],
        loads: vec![],
        thevenin: TheveninSpec {
            node: 0,
            v_n_rms: 230.0,
            s_sc_va: 267e3,
            z_sc_ohm: 0.195,
            r_over_x: 6.207,
            harmonics: table_source_harmonics(),
        },
        resources: vec![ResourceAttachment {
            node: 0,
            spec: resource,
        }],
    }
}

/// The 22-node low-voltage benchmark microgrid with unbalanced impedance
/// loads, one forming resource, and `n_followers` (1..=4) following
/// resources. Followers beyond the requested count are replaced by
/// balanced impedance loads of the same nominal power.
pub fn benchmark_network_with_followers(n_followers: usize) -> NetworkSpec {
    assert!((1..=4).contains(&n_followers));
    let names: Vec<String> = (1..=22).map(|i| format!("N{i}")).collect();
    fn idx(name: &str) -> usize {
        name[1..].parse::<usize>().unwrap() - 1
    }

    let line = |from: &str, to: &str, length_m: f64, seq: SequenceParams| LineSpec {
        from: idx(from),
        to: idx(to),
        length_m,
        seq,
    };
    let lines = vec![
        line("N1", "N2", 35.0, UG1),
        line("N2", "N3", 35.0, UG1),
        line("N3", "N4", 35.0, UG1),
        line("N4", "N5", 35.0, UG1),
        line("N5", "N6", 35.0, UG1),
        line("N6", "N7", 35.0, UG1),
        line("N7", "N8", 35.0, UG1),
        line("N8", "N9", 35.0, UG1),
        line("N9", "N10", 35.0, UG1),
        line("N3", "N11", 30.0, UG3),
        line("N5", "N12", 35.0, UG3),
        line("N12", "N13", 35.0, UG3),
        line("N13", "N14", 35.0, UG3),
        line("N14", "N15", 30.0, UG3),
        line("N6", "N16", 30.0, UG3),
        line("N9", "N17", 30.0, UG3),
        line("N10", "N18", 30.0, UG3),
        line("N2", "N21", 30.0, UG3),
        line("N12", "N19", 30.0, UG3),
        line("N8", "N20", 30.0, UG3),
        line("N13", "N22", 30.0, UG3),
    ];

    let mut loads = vec![
        LoadSpec {
            node: idx("N19"),
            s_va: 51.2e3,
            pf: POWER_FACTOR,
            weights: [0.31, 0.50, 0.19],
        },
        LoadSpec {
            node: idx("N20"),
            s_va: 51.7e3,
            pf: POWER_FACTOR,
            weights: [0.45, 0.23, 0.32],
        },
        LoadSpec {
            node: idx("N21"),
            s_va: 61.5e3,
            pf: POWER_FACTOR,
            weights: [0.24, 0.39, 0.37],
        },
        LoadSpec {
            node: idx("N22"),
            s_va: 61.9e3,
            pf: POWER_FACTOR,
            weights: [0.31, 0.56, 0.13],
        },
    ];

    // The power-tracking units of the benchmark are converter-interfaced
    // constant-power loads: they draw their tabulated P at 0.95 inductive
    // power factor (negative injection).
    let follower_sites: [(&str, f64); 4] = [
        ("N11", 15.0e3),
        ("N15", 52.0e3),
        ("N16", 55.0e3),
        ("N17", 35.0e3),
    ];
    let mut resources = vec![ResourceAttachment {
        node: idx("N18"),
        spec: CiderSpec::forming_100kva(230.0, 50.0),
    }];
    for (k, (node, p)) in follower_sites.iter().enumerate() {
        if k < n_followers {
            resources.push(ResourceAttachment {
                node: idx(node),
                spec: CiderSpec::following_60kva(-*p, -q_at_pf(*p)),
            });
        } else {
            loads.push(LoadSpec {
                node: idx(node),
                s_va: *p / POWER_FACTOR,
                pf: POWER_FACTOR,
                weights: [1.0 / 3.0; 3],
            });
        }
    }

    NetworkSpec {
        base: PerUnit::new(230.0, 10e3),
        f1_hz: 50.0,
        node_names: names,
        lines,
        loads,
        thevenin: TheveninSpec {
            node: idx("N1"),
            v_n_rms: 230.0,
            s_sc_va: 3.85e6,
            z_sc_ohm: 13.7e-3,
            r_over_x: 0.271,
            harmonics: table_source_harmonics(),
        },
        resources,
    }
}

/// The full benchmark with all four following resources.
pub fn benchmark_network() -> NetworkSpec {
    benchmark_network_with_followers(4)
}
