//! `magym`: run, score and inspect manager-agent workflow episodes.

mod evaluate;
mod inspect;
mod input;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "magym", version, about = "Manager-agent workflow simulator and evaluation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one episode per seed and write a trace file for each.
    Run(run::RunArgs),
    /// Replay traces, check their embedded metrics and print a summary table.
    Evaluate(evaluate::EvaluateArgs),
    /// Print a numbered listing of a trace's actions.
    Inspect(inspect::InspectArgs),
    /// Check scenario documents and report diagnostics.
    Validate {
        /// Scenario files, or `bundled:<id>`.
        #[arg(required = true)]
        scenarios: Vec<String>,
    },
    /// List the bundled scenarios.
    Scenarios {
        /// Print the canonical document of this bundled scenario instead.
        #[arg(long, value_name = "ID")]
        dump: Option<String>,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(tracing_subscriber::EnvFilter::from_env("MAGYM_LOG"))
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run::run(args),
        Command::Evaluate(args) => evaluate::evaluate(args),
        Command::Inspect(args) => inspect::inspect(args),
        Command::Validate { scenarios } => Ok(input::validate(&scenarios)),
        Command::Scenarios { dump } => input::list_scenarios(dump.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Write `text` to `path`, creating parent directories.
fn write_file(path: &PathBuf, text: &str) -> anyhow::Result<()> {
    use anyhow::Context;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
