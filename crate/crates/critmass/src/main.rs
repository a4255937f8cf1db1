use clap::{Args, Parser, Subcommand};
use critmass::cli::{self, CommandKind, ExitStatus};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "critmass",
    version,
    about = "Critical-mass aggregation-diffusion laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary (Lane-Emden) profile and its energy report.
    Profile(RunArgs),
    /// Self-similar profile and its integral identities.
    #[command(name = "self_similar")]
    SelfSimilar(RunArgs),
    /// VHLS-constant estimate by projected gradient ascent.
    Vhls(RunArgs),
    /// Time evolution with diagnostics and blow-up detection.
    Evolve(RunArgs),
    /// Dimension-dependent constants with both C_* routes.
    Constants {
        #[arg(long)]
        dimension: usize,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long, required_unless_present = "sweep", conflicts_with = "sweep")]
    config: Option<PathBuf>,
    /// Directory of *.json configs to run on a worker pool
    /// (CRITMASS_THREADS caps the parallelism).
    #[arg(long)]
    sweep: Option<PathBuf>,
}

fn run_command(kind: CommandKind, args: &RunArgs) -> critmass::Result<ExitStatus> {
    if let Some(dir) = &args.sweep {
        return cli::run_sweep(dir);
    }
    let path = args.config.as_ref().expect("clap enforces config|sweep");
    let cfg = cli::ExperimentConfig::load(path)?;
    if cfg.command != kind {
        return Err(critmass::Error::config(format!(
            "config {} declares a different command than the one invoked",
            path.display()
        )));
    }
    cli::run_experiment(&cfg)
}

fn main() -> ExitCode {
    let parsed = Cli::parse();
    let outcome = match &parsed.command {
        Command::Profile(args) => run_command(CommandKind::Profile, args),
        Command::SelfSimilar(args) => run_command(CommandKind::SelfSimilar, args),
        Command::Vhls(args) => run_command(CommandKind::Vhls, args),
        Command::Evolve(args) => run_command(CommandKind::Evolve, args),
        Command::Constants { dimension, out } => (|| {
            let report = cli::constants_report(*dimension)?;
            let text = serde_json::to_string_pretty(&report)?;
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => println!("{text}"),
            }
            Ok(ExitStatus::Completed)
        })(),
    };
    match outcome {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("critmass: {e}");
            ExitCode::from(1)
        }
    }
}
