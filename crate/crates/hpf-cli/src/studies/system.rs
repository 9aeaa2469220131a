//! Whole-system study on a multi-resource network: solve, report spectra
//! and sequence ratios everywhere, optionally compare against the
//! time-domain reference, and collect timing statistics.

use std::fmt::Write as _;

use anyhow::{Context, Result};

use hpf_core::network::{load_current_spectra, recover_node_spectra, source_current_spectrum};
use hpf_core::resources::ResourceRegistry;
use hpf_core::solver::{build_problem, solve};
use hpf_core::spectral::sequence_decompose;
use hpf_core::tds::{compute_kpis, simulate};

use crate::output::{self, KpiRow, SpectrumRow, TimingRow};
use crate::svg;

use super::{Study, StudyContext};

pub struct SystemStudy;

impl Study for SystemStudy {
    fn name(&self) -> &'static str {
        "system"
    }

    fn describe(&self) -> &'static str {
        "full-network harmonic power flow with optional time-domain comparison"
    }

    fn run(&self, ctx: &StudyContext) -> Result<()> {
        let sp = ctx.file.spectral_params();
        let registry = ResourceRegistry::with_builtin();
        let problem = build_problem(&ctx.net, sp, &registry)?;
        let cfg = ctx.file.solver_config()?;
        let solution = solve(&problem, &cfg).context("harmonic power-flow solve")?;
        println!(
            "system: converged in {} iterations, residual {:.3e}",
            solution.iterations, solution.verified_residual
        );
        if ctx.verbose {
            output::write_residuals_csv(&ctx.path("residuals.csv"), &solution.residual_history)?;
        }

        // Timing statistics over repeated solves of the identical problem.
        let repeats = ctx.file.study_options.timing_repeats;
        let mut samples = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let t0 = std::time::Instant::now();
            let _ = solve(&problem, &cfg)?;
            samples.push(t0.elapsed().as_secs_f64());
        }
        let (mean, std) = output::mean_std(&samples);
        println!("  solve time over {repeats} repeats: {mean:.3} s +- {std:.3} s");
        let mut timing_rows = vec![TimingRow {
            study: "system".into(),
            case: "hpf_solve".into(),
            n_repeats: repeats,
            mean_s: mean,
            std_s: std,
        }];

        // Spectra at every node of interest: ports, loads, and the source.
        let port_currents: Vec<_> = solution.ports.iter().map(|p| p.current.clone()).collect();
        let nodes = recover_node_spectra(&ctx.net, sp, &port_currents)?;
        let load_currents = load_current_spectra(&ctx.net, sp, &nodes)?;
        let source_current = source_current_spectrum(&ctx.net, sp, &nodes)?;

        let mut rows = Vec::new();
        for port in &solution.ports {
            rows.push(SpectrumRow {
                node: &port.node_name,
                quantity: "V",
                spectrum: &port.voltage,
            });
            rows.push(SpectrumRow {
                node: &port.node_name,
                quantity: "I",
                spectrum: &port.current,
            });
        }
        let load_names: Vec<&str> = ctx
            .net
            .loads
            .iter()
            .map(|l| ctx.net.node_name(l.node))
            .collect();
        for (li, _) in ctx.net.loads.iter().enumerate() {
            rows.push(SpectrumRow {
                node: load_names[li],
                quantity: "V",
                spectrum: &nodes[ctx.net.loads[li].node],
            });
            rows.push(SpectrumRow {
                node: load_names[li],
                quantity: "I",
                spectrum: &load_currents[li],
            });
        }
        let te_name = ctx.net.node_name(ctx.net.thevenin.node);
        rows.push(SpectrumRow {
            node: te_name,
            quantity: "V",
            spectrum: &nodes[ctx.net.thevenin.node],
        });
        rows.push(SpectrumRow {
            node: te_name,
            quantity: "I",
            spectrum: &source_current,
        });
        output::write_spectra_csv(&ctx.path("spectra_hpf.csv"), &rows)?;

        // Fundamental sequence ratios at the nodes carrying elements.
        let mut seq = String::from("node,v_neg_over_pos_pct,v_zero_over_pos_pct,i_neg_over_pos_pct,i_zero_over_pos_pct\n");
        let mut seq_row = |name: &str,
                           v: &hpf_core::spectral::PolyphaseSpectrum,
                           i: &hpf_core::spectral::PolyphaseSpectrum| {
            let (vp, vn, v0) = sequence_decompose(v.at_order(1));
            let (ip, in_, i0) = sequence_decompose(i.at_order(1));
            let _ = writeln!(
                seq,
                "{},{:.4},{:.4},{:.4},{:.4}",
                name,
                100.0 * vn.norm() / vp.norm(),
                100.0 * v0.norm() / vp.norm(),
                100.0 * in_.norm() / ip.norm(),
                100.0 * i0.norm() / ip.norm()
            );
        };
        seq_row(te_name, &nodes[ctx.net.thevenin.node], &source_current);
        for port in &solution.ports {
            seq_row(&port.node_name, &port.voltage, &port.current);
        }
        for (li, load) in ctx.net.loads.iter().enumerate() {
            seq_row(load_names[li], &nodes[load.node], &load_currents[li]);
        }
        std::fs::write(ctx.path("sequence_ratios.csv"), seq)?;

        if ctx.with_oracle {
            let tds_cfg = ctx.file.tds_config();
            let t0 = std::time::Instant::now();
            let tds = simulate(&ctx.net, &registry, sp, &tds_cfg)
                .context("time-domain reference simulation")?;
            let tds_total = t0.elapsed().as_secs_f64();
            if !tds.reached_steady {
                anyhow::bail!(
                    "time-domain reference did not reach steady state by t = {:.2} s",
                    tds.t_steady
                );
            }
            let t_dft = std::time::Instant::now();
            let spectra = tds.port_spectra()?;
            let dft_s = t_dft.elapsed().as_secs_f64();
            timing_rows.push(TimingRow {
                study: "system".into(),
                case: "tds_total".into(),
                n_repeats: 1,
                mean_s: tds_total,
                std_s: 0.0,
            });
            timing_rows.push(TimingRow {
                study: "system".into(),
                case: "tds_window_plus_dft".into(),
                n_repeats: 1,
                mean_s: tds.window_wall.as_secs_f64() + dft_s,
                std_s: 0.0,
            });

            let mut tds_rows_owned = Vec::new();
            let mut kpi_rows_owned = Vec::new();
            for (name, v_tds, i_tds) in &spectra {
                let port = solution
                    .port_by_name(name)
                    .context("port names agree between solver and simulator")?;
                kpi_rows_owned.push((name.clone(), "V", compute_kpis(&port.voltage, v_tds)?));
                kpi_rows_owned.push((name.clone(), "I", compute_kpis(&port.current, i_tds)?));
                tds_rows_owned.push((name.clone(), "V", v_tds.clone()));
                tds_rows_owned.push((name.clone(), "I", i_tds.clone()));
            }
            let tds_rows: Vec<SpectrumRow> = tds_rows_owned
                .iter()
                .map(|(n, q, s)| SpectrumRow {
                    node: n,
                    quantity: q,
                    spectrum: s,
                })
                .collect();
            output::write_spectra_csv(&ctx.path("spectra_tds.csv"), &tds_rows)?;
            let kpi_rows: Vec<KpiRow> = kpi_rows_owned
                .iter()
                .map(|(n, q, r)| KpiRow {
                    node: n,
                    quantity: q,
                    report: r,
                })
                .collect();
            output::write_kpi_csv(&ctx.path("kpi.csv"), &kpi_rows)?;

            // Worst case per order over all compared nodes and quantities.
            let orders: Vec<u32> = (1..=sp.h_max()).collect();
            for quantity in ["V", "I"] {
                let worst: Vec<f64> = orders
                    .iter()
                    .map(|&h| {
                        kpi_rows_owned
                            .iter()
                            .filter(|(_, q, _)| *q == quantity)
                            .map(|(_, _, r)| r.at(h).e_abs)
                            .fold(0.0, f64::max)
                    })
                    .collect();
                let max = worst.iter().copied().fold(0.0, f64::max);
                println!("  worst e_abs({quantity}) over ports: {max:.3e} pu");
                svg::bar_chart_log(
                    &ctx.path(&format!("error_{quantity}.svg")),
                    &format!("worst {quantity} magnitude error over ports"),
                    "e_abs [pu]",
                    &orders,
                    &[("e_abs", worst)],
                    1e-12,
                )?;
            }
        }

        output::write_timing_csv(&ctx.path("timing.csv"), &timing_rows)?;
        Ok(())
    }
}
