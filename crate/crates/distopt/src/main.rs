use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use distopt::cli::{cmd_run, cmd_spectrum, cmd_sweep, load_config};

/// Distributed dual optimization experiments over simulated networks.
#[derive(Parser)]
#[command(name = "distopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the Laplacian spectral summary of the configured graph.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        /// Optional directory; the summary line is also written to
        /// spectrum.txt there.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one experiment; writes trace.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the experiment across the configured sizes; writes sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, distopt::Error> {
    match cli.command {
        Command::Spectrum { config, out } => {
            let cfg = load_config(&config)?;
            let line = cmd_spectrum(&cfg)?;
            println!("{line}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)
                    .and_then(|_| std::fs::write(dir.join("spectrum.txt"), format!("{line}\n")))
                    .map_err(|e| distopt::Error::Io(e.to_string()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config, out } => {
            let cfg = load_config(&config)?;
            let outcome = cmd_run(&cfg, &out)?;
            let c = outcome.certificate;
            println!(
                "certificate: satisfied={} primal_gap={:.6e} consensus_residual={:.6e} (epsilon={:.6e}, epsilon_tilde={:.6e})",
                c.satisfied, c.primal_gap, c.consensus_residual, c.epsilon, c.epsilon_tilde
            );
            Ok(if c.satisfied { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Sweep { config, out } => {
            let cfg = load_config(&config)?;
            let path = cmd_sweep(&cfg, &out)?;
            println!("sweep written to {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
