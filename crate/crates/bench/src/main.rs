use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cutcert_bench::config::{ConfigError, ExperimentConfig, Method};
use cutcert_bench::plot::{gnuplot_script, run_csvs};
use cutcert_bench::runner::{run_benchmark, status_label};
use cutcert_bench::sweep::{grid_from_file, run_sweep};

const EXIT_CONFIG: u8 = 2;
const EXIT_ENGINE: u8 = 3;
const EXIT_PARTIAL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "cutcert-bench",
    version,
    about = "Cutting-plane benchmark runs with accuracy certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its CSV.
    Run(RunArgs),
    /// Run every point of a grid file in parallel.
    Sweep {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write a gnuplot script plotting the CSVs in a directory.
    Plotscript {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Flags override values from `--config`.
#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long)]
    max_oracle_calls: Option<usize>,
    #[arg(long)]
    cert_every: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    lp_alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    vaidya_eps: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    vaidya_gamma: Option<f64>,
    #[arg(long)]
    vaidya_newton_steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(self) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! apply {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        apply!(
            method,
            n,
            mu,
            max_oracle_calls,
            cert_every,
            lp_alpha,
            vaidya_eps,
            vaidya_gamma,
            vaidya_newton_steps,
            seed,
            out
        );
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let cfg = match args.resolve() {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            match run_benchmark(&cfg) {
                Ok(summary) if summary.failed() => {
                    eprintln!("run failed: {}", status_label(&summary.status));
                    ExitCode::from(EXIT_ENGINE)
                }
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_ENGINE)
                }
            }
        }
        Command::Sweep {
            grid,
            jobs,
            out_dir,
        } => {
            let configs = match grid_from_file(&grid) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            match run_sweep(configs, jobs, &out_dir) {
                Ok(entries) => {
                    let failed: Vec<&str> = entries
                        .iter()
                        .filter(|e| e.failed())
                        .map(|e| e.name.as_str())
                        .collect();
                    if failed.is_empty() {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!(
                            "{} of {} runs failed: {}",
                            failed.len(),
                            entries.len(),
                            failed.join(", ")
                        );
                        ExitCode::from(EXIT_PARTIAL)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Plotscript { input, out } => {
            let result =
                run_csvs(&input).and_then(|files| std::fs::write(&out, gnuplot_script(&files)));
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
