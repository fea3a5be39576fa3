use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub const VERSION: &str = concat!("stitchwalk-v", env!("CARGO_PKG_VERSION"));

/// Envelope shared by every JSON report. Only `wall_clock_seconds` varies between identical runs.
#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub seed: Option<u64>,
    pub config: &'a RunConfig,
    pub result: T,
    pub wall_clock_seconds: f64,
}

/// Writes the report to `--report`, or to stdout unless CSV output took its place.
pub fn emit<T: Serialize>(command: &str, cfg: &RunConfig, started: Instant, result: T) -> Result<(), CliError> {
    let report = Report {
        command,
        version: VERSION,
        seed: cfg.seed,
        config: cfg,
        result,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&report).expect("reports serialize");
    match &cfg.report {
        Some(path) => write_file(path, |w| writeln!(w, "{json}")),
        None if !cfg.csv => {
            println!("{json}");
            Ok(())
        }
        None => Ok(()),
    }
}

pub fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Runs `body` against a locked, buffered stdout.
pub fn write_stdout(body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut w = BufWriter::new(stdout.lock());
    body(&mut w)?;
    w.flush()?;
    Ok(())
}
