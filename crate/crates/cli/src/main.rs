use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plsgd_cli::{cmd_run, cmd_sweep, cmd_verify, CliError, Config};

#[derive(Parser)]
#[command(
    name = "plsgd",
    version,
    about = "Mini-batch SGD experiments on interpolated PL problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run SGD and write the mean-loss curve and a summary.
    Run { config: PathBuf },
    /// Check the generated instance against its invariants.
    Verify {
        config: PathBuf,
        /// Multiply the analytic PL constant before checking it.
        #[arg(long, default_value_t = 1.0)]
        alpha_scale: f64,
    },
    /// Resolve step sizes and measure contraction for several batch sizes.
    Sweep {
        config: PathBuf,
        /// Comma-separated batch sizes; defaults to `sgd.m`.
        #[arg(long, value_delimiter = ',')]
        batch_sizes: Vec<usize>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = Config::load(&config)?;
            let files = cmd_run(&cfg)?;
            let o = &files.outcome;
            println!("curve: {}", files.csv.display());
            println!("summary: {}", files.summary.display());
            println!(
                "eta = {:e}, final mean loss = {:e}, bound check = {}",
                o.plan.eta,
                o.trajectory.mean_loss[o.trajectory.steps()],
                o.bound_verdict()
            );
            if !o.diverged.is_empty() {
                eprintln!("{} of {} runs diverged", o.diverged.len(), cfg.sgd.runs);
            }
        }
        Command::Verify { config, alpha_scale } => {
            let cfg = Config::load(&config)?;
            let out = cmd_verify(&cfg, alpha_scale)?;
            println!("verification passed: {}", out.report_path.display());
        }
        Command::Sweep { config, batch_sizes } => {
            let cfg = Config::load(&config)?;
            let sizes = if batch_sizes.is_empty() {
                vec![cfg.sgd.m]
            } else {
                batch_sizes
            };
            let rows = cmd_sweep(&cfg, &sizes)?;
            println!("sweep: {} rows written to {}", rows.len(), cfg.output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("plsgd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
