//! `tte`: run evolution streams, inspect libraries, run the theory
//! simulations and sample seed corpora.

mod backends;
mod error;
mod inspect;
mod output;
mod run;
mod sample;
mod sim;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;

#[derive(Parser)]
#[command(name = "tte", version, about = "Test-time tool evolution engine")]
struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a corpus, evolving the tool library as problems stream in.
    Run(run::RunArgs),
    /// Print size, reuse rates and the hit histogram of a library snapshot.
    Inspect { snapshot: PathBuf },
    /// Run one of the theory simulations and emit CSV.
    #[command(subcommand)]
    Sim(sim::SimCommand),
    /// Pick a diverse seed subset of a corpus by clustering its questions.
    Sample(SampleArgs),
}

#[derive(Args)]
pub struct SampleArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 8)]
    clusters: usize,
    #[arg(long, default_value_t = 2)]
    per_cluster: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    embedder: backends::EmbedderArgs,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => tracing_subscriber::filter::LevelFilter::WARN,
        1 => tracing_subscriber::filter::LevelFilter::INFO,
        _ => tracing_subscriber::filter::LevelFilter::DEBUG,
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .init();
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => run::cmd_run(args),
        Command::Inspect { snapshot } => inspect::cmd_inspect(&snapshot),
        Command::Sim(cmd) => sim::cmd_sim(cmd),
        Command::Sample(args) => sample::cmd_sample(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tte: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
