use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod baseline;
mod error;
mod eval;
mod gradcheck;
mod preprocess;
mod report;
mod settings;
mod synth;
mod train;

use error::CliError;
use settings::ConfigFile;

/// Cognitive-workload classification from fNIRS windows.
#[derive(Parser)]
#[command(name = "fnwl", version, about)]
struct Cli {
    /// TOML file with one table per subcommand; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter a raw CSV recording file and cut it into a windows file.
    Preprocess(preprocess::Args),
    /// Train the network on a windows file.
    Train(train::Args),
    /// Evaluate saved weights on a windows file.
    Eval(eval::Args),
    /// Fit and evaluate a classical baseline.
    Baseline(baseline::Args),
    /// Run the finite-difference gradient suite.
    Gradcheck(gradcheck::Args),
    /// Generate a synthetic windows file.
    Synth(synth::Args),
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let file = ConfigFile::load(cli.config.as_deref())?;
    match cli.command {
        Command::Preprocess(a) => preprocess::run(a, &file),
        Command::Train(a) => train::run(a, &file),
        Command::Eval(a) => eval::run(a, &file),
        Command::Baseline(a) => baseline::run(a, &file),
        Command::Gradcheck(a) => gradcheck::run(a, &file),
        Command::Synth(a) => synth::run(a, &file),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { error::code::USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
