//! `stitchwalk`: budgeted walk stitching, PPR and local clustering from the command line.
//!
//! Exit codes: 0 success, 1 algorithmic failure, 2 usage or parse error,
//! 3 capacity violation in strict mode.

mod commands;
mod config;
mod error;
mod oracle_check;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "stitchwalk", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an edge list and write the binary graph cache.
    Ingest {
        edges: PathBuf,
        cache: PathBuf,
        #[arg(long)]
        csv: bool,
    },
    /// Rooted walks by budgeted stitching (single-, multi-root or multi-source).
    #[command(args_override_self = true)]
    Walks(RunConfig),
    /// Personalized PageRank from rooted lazy walks.
    #[command(args_override_self = true)]
    Ppr(RunConfig),
    /// PPR followed by a sweep cut.
    #[command(args_override_self = true)]
    Cluster(RunConfig),
    /// Budgeted stitching against uniform stitching at the same rooted-walk target.
    #[command(args_override_self = true)]
    CompareBaseline(RunConfig),
    /// Oracle-backed checks on a named fixture.
    OracleCheck {
        fixture: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: bool,
    },
}

fn run(raw: Vec<String>) -> Result<(), CliError> {
    let args = config::expand_args(raw)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => return Err(CliError::Usage(e.to_string())),
        Err(e) => {
            print!("{e}");
            return Ok(());
        }
    };
    match cli.command {
        Command::Ingest { edges, cache, csv } => commands::ingest(&edges, &cache, csv),
        Command::Walks(cfg) => commands::walks(cfg),
        Command::Ppr(cfg) => commands::ppr(cfg),
        Command::Cluster(cfg) => commands::cluster(cfg),
        Command::CompareBaseline(cfg) => commands::compare_baseline(cfg),
        Command::OracleCheck { fixture, seed, csv } => oracle_check::run(&fixture, seed, csv),
    }
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stitchwalk: {}", e.message().trim_end());
            e.exit_code()
        }
    }
}
