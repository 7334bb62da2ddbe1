use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hybridpower::api::{self, ApiError, ApiScenario};
use hybridpower_cli::figures::{generate, write_files, FigureId};
use hybridpower_cli::format::{render, Format};
use hybridpower_cli::scenario::{ScenarioArgs, ScenarioError};
use serde_json::Value;

const EXIT_IO: u8 = 5;

/// Sample sizes for a one-sided z-test under a truncated normal prior on the
/// effect size.
#[derive(Debug, Parser)]
#[command(name = "hybridpower", version)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value = "text")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expected power, probability of success and the marginal rejection
    /// probability at a fixed n.
    Evaluate(ScenarioArgs),
    /// Smallest n meeting a criterion.
    SampleSize(ScenarioArgs),
    /// Survival function and quantiles of random power.
    PowerDist(ScenarioArgs),
    /// Utility-maximising n for a given reward.
    Utility(ScenarioArgs),
    /// Reward under which the expected-power design maximises utility.
    ImpliedReward(ScenarioArgs),
    /// Write the CSV data behind a figure.
    Figure {
        #[arg(value_enum)]
        id: FigureId,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn respond<T: serde::Serialize>(r: Result<T, ApiError>) -> Result<Value, ApiError> {
    r.map(|v| serde_json::to_value(v).expect("response serialises"))
}

fn run_scenario(
    args: &ScenarioArgs,
    handler: fn(&ApiScenario) -> Result<Value, ApiError>,
    format: Format,
) -> ExitCode {
    let scenario = match args.build() {
        Ok(s) => s,
        Err(ScenarioError::Io(e, path)) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(EXIT_IO);
        }
        Err(ScenarioError::Invalid(e)) => return fail(&e, format),
    };
    match handler(&scenario) {
        Ok(value) => emit(&render(&value, format)),
        Err(e) => fail(&e, format),
    }
}

fn emit(text: &str) -> ExitCode {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn fail(e: &ApiError, format: Format) -> ExitCode {
    if format == Format::Json {
        eprintln!("{}", serde_json::to_string(e).expect("error serialises"));
    } else {
        eprintln!("error: {e}");
    }
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    match &cli.command {
        Command::Evaluate(a) => run_scenario(a, |s| respond(api::evaluate(s)), format),
        Command::SampleSize(a) => run_scenario(a, |s| respond(api::sample_size(s)), format),
        Command::PowerDist(a) => run_scenario(a, |s| respond(api::power_distribution(s)), format),
        Command::Utility(a) => run_scenario(a, |s| respond(api::utility(s)), format),
        Command::ImpliedReward(a) => run_scenario(a, |s| respond(api::implied_reward(s)), format),
        Command::Figure { id, out } => {
            let files = match generate(*id) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Err(e) = write_files(&files, out) {
                eprintln!("error: writing to {}: {e}", out.display());
                return ExitCode::from(EXIT_IO);
            }
            for f in &files {
                println!("{}", out.join(&f.name).display());
            }
            ExitCode::SUCCESS
        }
    }
}
