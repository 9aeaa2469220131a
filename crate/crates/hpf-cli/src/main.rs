//! `hpf` — harmonic power-flow studies for three-phase grids with
//! converter-interfaced resources.

use hpf_cli::{config, studies};

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};

use hpf_core::solver::SolverError;
use studies::{StudyContext, StudyRegistry};

#[derive(Parser)]
#[command(name = "hpf", about = "Harmonic power-flow study runner", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a study from a configuration file.
    Run {
        /// Study configuration file (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Override the study named in the configuration.
        #[arg(long)]
        study: Option<String>,
        /// Override the random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default from the configuration).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run the time-domain reference alongside the solver where the
        /// study treats it as optional.
        #[arg(long)]
        with_oracle: bool,
        /// Override the maximum harmonic order.
        #[arg(long)]
        hmax: Option<u32>,
        /// Override the solver tolerance (per-unit).
        #[arg(long)]
        tol: Option<f64>,
        /// Emit per-iteration residual logs.
        #[arg(long)]
        verbose: bool,
    },
    /// List the available studies.
    Studies,
}

fn init_threads() {
    if let Ok(v) = std::env::var("HPF_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Studies => {
            let registry = StudyRegistry::with_builtin();
            for name in registry.names() {
                let s = registry.get(name).unwrap();
                println!("{:20} {}", name, s.describe());
            }
            Ok(())
        }
        Command::Run {
            config,
            study,
            seed,
            out,
            with_oracle,
            hmax,
            tol,
            verbose,
        } => {
            let mut file = config::StudyFile::load(&config)?;
            if let Some(s) = study {
                file.study = s;
            }
            if let Some(s) = seed {
                file.seed = s;
            }
            if let Some(h) = hmax {
                file.spectral.h_max = h;
            }
            if let Some(t) = tol {
                file.solver.tol_pu = t;
            }
            if let Some(o) = out {
                file.output_dir = o.to_string_lossy().into_owned();
            }

            let base_dir = config.parent().unwrap_or(std::path::Path::new("."));
            let (_net_file, net) = match file.network_path(&config) {
                Some(path) => config::load_network(
                    path.to_str().context("network path is not valid UTF-8")?,
                    std::path::Path::new(""),
                )?,
                None => config::load_network(&file.network, base_dir)?,
            };
            if file.spectral.h_max < net.max_source_order() {
                return Err(anyhow!(
                    "h_max = {} is below the highest source harmonic ({})",
                    file.spectral.h_max,
                    net.max_source_order()
                ));
            }

            let out_dir = base_dir.join(&file.output_dir).join(&file.study);
            std::fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating output directory {}", out_dir.display()))?;

            let registry = StudyRegistry::with_builtin();
            let study = registry
                .get(&file.study)
                .ok_or_else(|| anyhow!("unknown study '{}' (try `hpf studies`)", file.study))?;
            let ctx = StudyContext {
                file,
                net,
                out_dir,
                with_oracle,
                verbose,
            };
            study.run(&ctx)
        }
    }
}

fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(solver) = cause.downcast_ref::<SolverError>() {
            return match solver {
                SolverError::NonConvergence { .. }
                | SolverError::Diverged { .. }
                | SolverError::SingularJacobian { .. } => 2,
                _ => 3,
            };
        }
    }
    3
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}
