//! Scalability: harmonic power-flow timing as a function of the harmonic
//! order bound and the number of power-tracking resources.

use anyhow::{Context, Result};

use hpf_core::network::benchmark_network_with_followers;
use hpf_core::resources::ResourceRegistry;
use hpf_core::solver::{build_problem, solve};
use hpf_core::spectral::SpectralParams;

use crate::output::{self, TimingRow};

use super::{Study, StudyContext};

pub struct ScalabilityStudy;

impl Study for ScalabilityStudy {
    fn name(&self) -> &'static str {
        "scalability"
    }

    fn describe(&self) -> &'static str {
        "timing sweep over harmonic order bound and resource count"
    }

    fn run(&self, ctx: &StudyContext) -> Result<()> {
        let registry = ResourceRegistry::with_builtin();
        let cfg = ctx.file.solver_config()?;
        let repeats = ctx.file.study_options.timing_repeats;
        let mut rows = Vec::new();

        // Resource-count sweep at the configured order bound.
        let sp_full = ctx.file.spectral_params();
        for n_followers in 1..=4usize {
            let net = benchmark_network_with_followers(n_followers);
            let problem = build_problem(&net, sp_full, &registry)?;
            let mut samples = Vec::with_capacity(repeats);
            for _ in 0..repeats {
                let t0 = std::time::Instant::now();
                solve(&problem, &cfg).context("scalability solve")?;
                samples.push(t0.elapsed().as_secs_f64());
            }
            let (mean, std) = output::mean_std(&samples);
            println!("scalability: {n_followers} following units -> {mean:.3} s +- {std:.3} s");
            rows.push(TimingRow {
                study: "scalability".into(),
                case: format!("followers_{n_followers}"),
                n_repeats: repeats,
                mean_s: mean,
                std_s: std,
            });
        }

        // Harmonic-order sweep on the full benchmark.
        for &h_max in &ctx.file.study_options.scalability_h_max {
            let sp = SpectralParams::new(ctx.file.spectral.f1_hz, h_max);
            let net = benchmark_network_with_followers(4);
            let problem = build_problem(&net, sp, &registry)?;
            let mut samples = Vec::with_capacity(repeats);
            for _ in 0..repeats {
                let t0 = std::time::Instant::now();
                solve(&problem, &cfg).context("scalability solve")?;
                samples.push(t0.elapsed().as_secs_f64());
            }
            let (mean, std) = output::mean_std(&samples);
            println!("scalability: h_max {h_max} -> {mean:.3} s +- {std:.3} s");
            rows.push(TimingRow {
                study: "scalability".into(),
                case: format!("h_max_{h_max}"),
                n_repeats: repeats,
                mean_s: mean,
                std_s: std,
            });
        }

        output::write_timing_csv(&ctx.path("timing.csv"), &rows)?;
        Ok(())
    }
}
