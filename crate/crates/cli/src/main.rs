use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use contilearn_cli::commands::{self, AlgebraTarget};
use contilearn_cli::{thread_cap, CliError, CliResult};
use contilearn_core::par::with_threads;

#[derive(Parser)]
#[command(
    name = "contilearn",
    version,
    about = "Continuous learning of nonlinear features"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the iteration cycle on a labelled CSV file.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Report destination (defaults to <out>.report).
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write P(y=1|x) for every row of a CSV file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit structure constants to a model's super-features, or verify a
    /// reference algebra.
    Algebra {
        #[arg(long, conflicts_with_all = ["model", "data"])]
        reference: Option<String>,
        #[arg(long, requires = "data")]
        model: Option<PathBuf>,
        #[arg(long, requires = "model")]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Train {
            data,
            config,
            out,
            report,
            seed,
        } => {
            let threads = thread_cap()?;
            let outcome = with_threads(threads, || {
                commands::train(&data, config.as_deref(), &out, report.as_deref(), seed)
            })?;
            for r in &outcome.output.reports {
                eprintln!(
                    "pass {}: dim {} accuracy {:.4} log-likelihood {:.6}",
                    r.iteration, r.dim, r.accuracy, r.best_log_likelihood
                );
            }
            eprintln!("status: {}", outcome.output.status.as_str());
            Ok(())
        }
        Command::Predict { model, data, out } => {
            commands::predict(&model, &data, &out)?;
            Ok(())
        }
        Command::Algebra {
            reference,
            model,
            data,
            out,
        } => {
            let target = match (&reference, &model, &data) {
                (Some(name), _, _) => AlgebraTarget::Reference(name),
                (None, Some(model), Some(data)) => AlgebraTarget::Fitted { model, data },
                _ => {
                    return Err(CliError::Config(
                        "either --reference NAME or --model and --data are required".into(),
                    ))
                }
            };
            commands::algebra(target, out.as_deref())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
