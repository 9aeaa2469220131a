//! Convergence robustness: many random initial points must all reach the
//! same solution.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use hpf_core::resources::ResourceRegistry;
use hpf_core::solver::{build_problem, solve, InitStrategy, SolverConfig};

use super::{Study, StudyContext};

pub struct RobustnessStudy;

impl Study for RobustnessStudy {
    fn name(&self) -> &'static str {
        "robustness"
    }

    fn describe(&self) -> &'static str {
        "random-initial-point convergence study"
    }

    fn run(&self, ctx: &StudyContext) -> Result<()> {
        let sp = ctx.file.spectral_params();
        let registry = ResourceRegistry::with_builtin();
        let problem = build_problem(&ctx.net, sp, &registry)?;
        let base_cfg = ctx.file.solver_config()?;

        let reference = solve(&problem, &base_cfg).context("reference solve")?;
        let runs = ctx.file.study_options.robustness_runs;
        let results: Vec<_> = (0..runs as u64)
            .into_par_iter()
            .map(|k| {
                let cfg = SolverConfig {
                    init: InitStrategy::random(ctx.file.seed.wrapping_add(k)),
                    ..base_cfg
                };
                solve(&problem, &cfg).map(|s| (k, s))
            })
            .collect();

        let mut csv = String::from("seed,iterations,residual_inf_pu,max_diff_vs_reference\n");
        let mut worst_diff = 0.0f64;
        let mut failures = Vec::new();
        for r in results {
            match r {
                Ok((k, s)) => {
                    let diff = s.max_unknown_diff(&reference);
                    worst_diff = worst_diff.max(diff);
                    let _ = writeln!(
                        csv,
                        "{},{},{:.3e},{:.3e}",
                        ctx.file.seed.wrapping_add(k),
                        s.iterations,
                        s.verified_residual,
                        diff
                    );
                }
                Err(e) => failures.push(e.to_string()),
            }
        }
        std::fs::write(ctx.path("robustness.csv"), csv)?;
        println!(
            "robustness: {} runs, worst pairwise difference {:.3e} pu, {} failures",
            runs,
            worst_diff,
            failures.len()
        );
        if !failures.is_empty() {
            bail!("{} random initializations failed: {}", failures.len(), failures.join("; "));
        }
        if worst_diff > 1e-6 {
            bail!("solutions disagree by {worst_diff:.3e} pu across initializations");
        }
        Ok(())
    }
}
