use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;
use stitchwalk::walk::{FailPolicy, Laziness, Mode};

use crate::error::CliError;

/// Keys that are switches: `key=true` turns them on, `key=false` leaves them off.
const SWITCHES: &[&str] = &["strict", "verify", "csv"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ParamsKind {
    Theory,
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Theory,
    Practical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LazinessArg {
    None,
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FailPolicyArg {
    Abort,
    Tolerate,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Theory => Mode::Theory,
            ModeArg::Practical => Mode::Practical,
        }
    }
}

impl From<LazinessArg> for Laziness {
    fn from(l: LazinessArg) -> Self {
        match l {
            LazinessArg::None => Laziness::None,
            LazinessArg::Half => Laziness::Half,
        }
    }
}

impl From<FailPolicyArg> for FailPolicy {
    fn from(f: FailPolicyArg) -> Self {
        match f {
            FailPolicyArg::Abort => FailPolicy::Abort,
            FailPolicyArg::Tolerate => FailPolicy::Tolerate,
        }
    }
}

/// Everything a run needs. Every field can come from the config file (`key=value`,
/// snake_case keys) or a flag of the same name; flags win.
#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct RunConfig {
    /// Flat `key=value` file; later flags override its entries.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Edge list or binary cache.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Comma-separated root ids (original ids from the graph file).
    #[arg(long)]
    pub roots: Option<String>,
    /// Per-root walk counts, one `id count` pair per line (multi-source run).
    #[arg(long)]
    pub sources: Option<PathBuf>,
    /// Single root for ppr, cluster and compare-baseline.
    #[arg(long)]
    pub root: Option<u64>,

    #[arg(long)]
    pub ell: Option<usize>,
    /// `B*`, rooted walks per root.
    #[arg(long)]
    pub target: Option<u64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Where θ, B₀ and τ come from.
    #[arg(long, value_enum)]
    pub params: Option<ParamsKind>,
    #[arg(long)]
    pub confidence: Option<f64>,
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub b0: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub laziness: Option<LazinessArg>,
    #[arg(long, value_enum)]
    pub fail_policy: Option<FailPolicyArg>,

    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// PPR truncation length `T`.
    #[arg(long)]
    pub length: Option<usize>,
    /// PPR sample count `M`.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub target_volume: Option<u64>,
    /// Per-degree budget of the uniform-stitching baseline (default `⌈B*/deg(root)⌉`).
    #[arg(long)]
    pub baseline_b0: Option<f64>,

    #[arg(long)]
    pub machines: Option<usize>,
    /// Words a machine may receive per round.
    #[arg(long)]
    pub capacity: Option<u64>,
    /// Fail with exit code 3 when a machine exceeds its capacity.
    #[arg(long)]
    pub strict: bool,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Compare against the exact oracle where feasible.
    #[arg(long)]
    pub verify: bool,
    /// Print CSV on stdout instead of the JSON report.
    #[arg(long)]
    pub csv: bool,

    /// Existing walk file to estimate PPR from instead of running the engine.
    #[arg(long)]
    pub walks_in: Option<PathBuf>,
    #[arg(long)]
    pub walks_out: Option<PathBuf>,
    #[arg(long)]
    pub budgets_out: Option<PathBuf>,
    #[arg(long)]
    pub scores_out: Option<PathBuf>,
    #[arg(long)]
    pub set_out: Option<PathBuf>,
    /// JSON report path; stdout when absent and `--csv` is off.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Reads a flat config file into flag form.
pub fn file_args(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "config" {
            return Err(CliError::Usage(format!("{}:{}: config files cannot nest", path.display(), i + 1)));
        }
        let flag = format!("--{}", key.replace('_', "-"));
        if SWITCHES.contains(&key) {
            match value {
                "true" => out.push(flag),
                "false" => {}
                _ => return Err(CliError::Usage(format!("{}:{}: {key} must be true or false", path.display(), i + 1))),
            }
        } else {
            out.push(format!("{flag}={value}"));
        }
    }
    Ok(out)
}

/// Splices the `--config` file's entries in front of the command-line flags.
pub fn expand_args(raw: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut path = None;
    for (i, a) in raw.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else if a == "--config" {
            path = raw.get(i + 1).map(PathBuf::from);
        }
    }
    let Some(path) = path else { return Ok(raw) };
    if raw.len() < 2 {
        return Ok(raw);
    }
    let mut out = raw[..2].to_vec();
    out.extend(file_args(&path)?);
    out.extend(raw[2..].iter().cloned());
    Ok(out)
}

/// Fills `slot` with `default` when unset and returns the value.
pub fn or_default<T: Copy>(slot: &mut Option<T>, default: T) -> T {
    *slot.get_or_insert(default)
}

/// The value of a mandatory key.
pub fn required<T: Copy>(slot: Option<T>, key: &str) -> Result<T, CliError> {
    slot.ok_or_else(|| CliError::Usage(format!("missing required setting {key}")))
}
