//! Per-resource validation: one converter against the stiff source, solved
//! in the harmonic domain and checked against the time-domain reference.

use anyhow::{bail, Context, Result};

use hpf_core::resources::{CiderKind, PortRole, ResourceRegistry};
use hpf_core::solver::{build_problem, solve};
use hpf_core::tds::{compute_kpis, simulate};

use crate::output::{self, KpiRow, SpectrumRow};
use crate::svg;

use super::{Study, StudyContext};

pub struct ResourceStudy {
    kind: CiderKind,
}

impl ResourceStudy {
    pub fn forming() -> Self {
        Self {
            kind: CiderKind::Forming,
        }
    }

    pub fn following() -> Self {
        Self {
            kind: CiderKind::Following,
        }
    }
}

impl Study for ResourceStudy {
    fn name(&self) -> &'static str {
        match self.kind {
            CiderKind::Forming => "resource_forming",
            CiderKind::Following => "resource_following",
        }
    }

    fn describe(&self) -> &'static str {
        "single-resource validation against the time-domain reference"
    }

    fn run(&self, ctx: &StudyContext) -> Result<()> {
        if ctx.net.resources.len() != 1 || ctx.net.resources[0].spec.kind != self.kind {
            bail!(
                "study '{}' expects a network with exactly one {} resource",
                self.name(),
                self.kind.name()
            );
        }
        let sp = ctx.file.spectral_params();
        let registry = ResourceRegistry::with_builtin();
        let problem = build_problem(&ctx.net, sp, &registry)?;
        let solution = solve(&problem, &ctx.file.solver_config()?)
            .context("harmonic power-flow solve")?;
        println!(
            "{}: converged in {} iterations, residual {:.3e}",
            self.name(),
            solution.iterations,
            solution.verified_residual
        );
        if ctx.verbose {
            output::write_residuals_csv(&ctx.path("residuals.csv"), &solution.residual_history)?;
        }

        let port = &solution.ports[0];
        output::write_spectra_csv(
            &ctx.path("spectra_hpf.csv"),
            &[
                SpectrumRow {
                    node: &port.node_name,
                    quantity: "V",
                    spectrum: &port.voltage,
                },
                SpectrumRow {
                    node: &port.node_name,
                    quantity: "I",
                    spectrum: &port.current,
                },
            ],
        )?;

        // The oracle comparison is the point of this study.
        let tds = simulate(&ctx.net, &registry, sp, &ctx.file.tds_config())
            .context("time-domain reference simulation")?;
        if !tds.reached_steady {
            bail!(
                "time-domain reference did not reach steady state by t = {:.2} s",
                tds.t_steady
            );
        }
        let spectra = tds.port_spectra()?;
        let (_, v_tds, i_tds) = &spectra[0];
        output::write_spectra_csv(
            &ctx.path("spectra_tds.csv"),
            &[
                SpectrumRow {
                    node: &port.node_name,
                    quantity: "V",
                    spectrum: v_tds,
                },
                SpectrumRow {
                    node: &port.node_name,
                    quantity: "I",
                    spectrum: i_tds,
                },
            ],
        )?;

        let kpi_v = compute_kpis(&port.voltage, v_tds)?;
        let kpi_i = compute_kpis(&port.current, i_tds)?;
        println!(
            "  e_abs(V) max {:.3e} pu, e_arg(V) max {:.3} deg",
            kpi_v.max_e_abs(),
            kpi_v.max_e_arg_deg()
        );
        println!(
            "  e_abs(I) max {:.3e} pu, e_arg(I) max {:.3} deg",
            kpi_i.max_e_abs(),
            kpi_i.max_e_arg_deg()
        );
        output::write_kpi_csv(
            &ctx.path("kpi.csv"),
            &[
                KpiRow {
                    node: &port.node_name,
                    quantity: "V",
                    report: &kpi_v,
                },
                KpiRow {
                    node: &port.node_name,
                    quantity: "I",
                    report: &kpi_i,
                },
            ],
        )?;

        // Charts for the controlled quantity.
        let (label, hpf_spec, tds_spec, kpi) = match port.role {
            PortRole::VoltageFormer => ("voltage", &port.voltage, v_tds, &kpi_v),
            PortRole::CurrentInjector => ("current", &port.current, i_tds, &kpi_i),
        };
        let orders: Vec<u32> = (1..=sp.h_max()).collect();
        let phase_a = |s: &hpf_core::spectral::PolyphaseSpectrum| {
            orders
                .iter()
                .map(|&h| s.phase(hpf_core::spectral::Phase::A).mag_rms(h as i32))
                .collect::<Vec<_>>()
        };
        svg::bar_chart_log(
            &ctx.path("spectra.svg"),
            &format!("{} spectrum at {} (phase A)", label, port.node_name),
            "magnitude [pu]",
            &orders,
            &[("hpf", phase_a(hpf_spec)), ("tds", phase_a(tds_spec))],
            1e-8,
        )?;
        svg::bar_chart_log(
            &ctx.path("error.svg"),
            &format!("{} magnitude error at {}", label, port.node_name),
            "e_abs [pu]",
            &orders,
            &[(
                "e_abs",
                kpi.entries.iter().map(|e| e.e_abs).collect::<Vec<_>>(),
            )],
            1e-12,
        )?;
        Ok(())
    }
}
