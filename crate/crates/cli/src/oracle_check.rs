use serde::Serialize;
use stitchwalk::oracle;
use stitchwalk::ppr::{approx_ppr, EngineConstants, EngineSpec, PprParams};
use stitchwalk::rng::Substreams;
use stitchwalk::walk::{is_valid_walk, run_budgeted, FailPolicy, Mode, RunOptions, StitchParams};
use stitchwalk::{fixtures, ClusterConfig, ScoreVector};

use crate::error::CliError;
use crate::report::write_stdout;

pub const FIXTURES: &[&str] = &["c8-walks", "ppr-k2"];

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value <= tolerance }
    }
}

/// Budgeted non-lazy walks on C8 against matrix powers, step by step.
fn c8_walks(seed: u64) -> Result<Vec<Check>, CliError> {
    let g = fixtures::cycle(8);
    let params = StitchParams::custom(8, 10.0, 10.0, 100.0, 1.25)?
        .with_target(10_000)
        .with_mode(Mode::Practical)
        .with_fail_policy(FailPolicy::Tolerate);
    let run = run_budgeted(&g, 0, &params, &ClusterConfig::default(), &Substreams::new(seed), RunOptions::default())?;
    let walks = run.root_walks();
    let mut checks = Vec::new();
    let invalid = walks.iter().filter(|w| !is_valid_walk(&g, w, false)).count();
    checks.push(Check::at_most("invalid walks", invalid as f64, 0.0));
    let c = run.metrics.calibration_cycles as usize;
    let closed_form = (c + 1) * 2 * 3 + c;
    checks.push(Check::at_most(
        "supersteps minus closed form",
        (run.metrics.supersteps as f64 - closed_form as f64).abs(),
        0.0,
    ));
    checks.push(Check::at_most("final failure rate", run.metrics.failure_rate.unwrap_or(0.0), 0.01));
    let exact = oracle::step_dists_from(&g, 0, 8, false)?;
    let m = walks.len() as f64;
    for t in 1..=8 {
        let mut emp = vec![0.0; 8];
        for w in walks.iter() {
            emp[w[t] as usize] += 1.0 / m;
        }
        checks.push(Check::at_most(format!("tvd at step {t}"), oracle::tvd(&emp, &exact[t]), 0.03));
    }
    Ok(checks)
}

/// Walk-based PPR on K2 against the fixed point `[3/4, 1/4]`.
fn ppr_k2(seed: u64) -> Result<Vec<Check>, CliError> {
    let g = fixtures::path(2);
    let params = PprParams::desk(0.5, 32, 10_000, 0.02)?;
    let engine = EngineSpec {
        constants: EngineConstants::Desk { lambda: 100.0, theta: 8.0, b0: 500.0, tau: 1.25 },
        mode: Mode::Practical,
        fail_policy: FailPolicy::Tolerate,
    };
    let est = approx_ppr(&g, 0, &params, &engine, &ClusterConfig::default(), &Substreams::new(seed))?;
    let exact = oracle::exact_ppr(&g, &ScoreVector::indicator(0), 0.5, 1e-14)?;
    let residual = oracle::ppr_residual(&g, &exact, &ScoreVector::indicator(0), 0.5);
    Ok(vec![
        Check::at_most("exact fixed-point residual", residual, 1e-12),
        Check::at_most("exact q(0) minus 3/4", (exact[0] - 0.75).abs(), 1e-12),
        Check::at_most(
            "max abs error",
            (0..2).map(|v| (est.scores.get(v) - exact[v as usize]).abs()).fold(0.0, f64::max),
            0.02,
        ),
        Check::at_most("mass identity", (est.scores.mass() - params.expected_mass()).abs(), 1e-12),
    ])
}

pub fn run(fixture: &str, seed: u64, csv: bool) -> Result<(), CliError> {
    let checks = match fixture {
        "c8-walks" => c8_walks(seed)?,
        "ppr-k2" => ppr_k2(seed)?,
        other => return Err(CliError::Usage(format!("unknown fixture {other:?}; known: {}", FIXTURES.join(", ")))),
    };
    write_stdout(|w| {
        if csv {
            writeln!(w, "check,value,tolerance,pass")?;
        }
        for c in &checks {
            if csv {
                writeln!(w, "{},{},{},{}", c.name, c.value, c.tolerance, c.pass)?;
            } else {
                let verdict = if c.pass { "pass" } else { "FAIL" };
                writeln!(w, "{verdict:4}  {:<30} {:>12.6e} <= {:e}", c.name, c.value, c.tolerance)?;
            }
        }
        Ok(())
    })?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(CliError::Algorithm(format!("{failed} of {} checks failed on {fixture}", checks.len())));
    }
    Ok(())
}
