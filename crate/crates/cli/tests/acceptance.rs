//! Acceptance criteria at their pinned tolerances, one line per criterion.
//!
//! Criteria run one after another (several of them hold millions of segments)
//! and the binary exits non-zero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_traits::ToPrimitive;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use stitchwalk::oracle;
use stitchwalk::ppr::{approx_ppr, local_cluster, ClusterOptions, EngineConstants, EngineSpec, PprParams};
use stitchwalk::rng::Substreams;
use stitchwalk::walk::{
    ceil_budget, run_budgeted, uniform_stitching, FailPolicy, Mode, RunOptions, StitchParams, WalkError,
};
use stitchwalk::{fixtures, ClusterConfig, Graph, ScoreVector, VertexId};

const TVD_TOL: f64 = 0.02;
const PATH_FREQ_TOL: f64 = 0.01;
const CHI2_QUANTILE: f64 = 0.999;
const PPR_ERR_TOL: f64 = 0.01;
const MASS_TOL: f64 = 1e-12;
const LOCALITY_RATIO: f64 = 5.0;

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn step_histogram(n: usize, walks: impl Iterator<Item = VertexId>) -> Vec<f64> {
    let mut h = vec![0.0; n];
    let mut total = 0.0;
    for v in walks {
        h[v as usize] += 1.0;
        total += 1.0;
    }
    h.iter_mut().for_each(|x| *x /= total);
    h
}

fn distribution_correctness() -> Verdict {
    let mut worst: Vec<String> = Vec::new();
    let mut ok = true;
    for (name, g) in [("C8", fixtures::cycle(8)), ("G(50,0.2)", fixtures::gnp(50, 0.2, 7))] {
        let p = StitchParams::custom(8, 10.0, 10.0, 100.0, 1.25)
            .map_err(|e| e.to_string())?
            .with_target(50_000)
            .with_mode(Mode::Practical)
            .with_fail_policy(FailPolicy::Tolerate);
        let run = run_budgeted(&g, 0, &p, &ClusterConfig::default(), &Substreams::new(11), RunOptions::default())
            .map_err(|e| e.to_string())?;
        let walks = run.root_walks();
        if walks.len() < 50_000 {
            return Err(format!("{name}: only {} rooted walks", walks.len()));
        }
        let exact = oracle::step_dists_from(&g, 0, 8, false).map_err(|e| e.to_string())?;
        let mut max_tvd: f64 = 0.0;
        for t in 1..=8 {
            let emp = step_histogram(g.n(), walks.iter().take(50_000).map(|w| w[t]));
            max_tvd = max_tvd.max(oracle::tvd(&emp, &exact[t]));
        }
        ok &= max_tvd <= TVD_TOL;
        worst.push(format!("{name} max tvd {max_tvd:.4}"));
    }
    check(ok, format!("{} (tol {TVD_TOL})", worst.join(", ")))
}

fn per_path_independence() -> Verdict {
    let g = fixtures::complete(3);
    let p = StitchParams::custom(2, 10.0, 10.0, 100.0, 1.25)
        .map_err(|e| e.to_string())?
        .with_target(100_000)
        .with_mode(Mode::Practical)
        .with_fail_policy(FailPolicy::Tolerate);
    let run = run_budgeted(&g, 0, &p, &ClusterConfig::default(), &Substreams::new(12), RunOptions::default())
        .map_err(|e| e.to_string())?;
    let walks = run.root_walks();
    if walks.len() < 100_000 {
        return Err(format!("only {} rooted walks", walks.len()));
    }
    let exact = oracle::enumerate_walks(&g, 0, 2, false).map_err(|e| e.to_string())?;
    let mut counts: BTreeMap<Vec<VertexId>, u64> = BTreeMap::new();
    for w in walks.iter().take(100_000) {
        *counts.entry(w.to_vec()).or_default() += 1;
    }
    if counts.keys().any(|k| !exact.contains_key(k)) {
        return Err("a walk outside the enumerated support".into());
    }
    let m = 100_000.0;
    let (mut max_dev, mut chi2): (f64, f64) = (0.0, 0.0);
    for (path, prob) in &exact {
        let prob = prob.to_f64().unwrap();
        let observed = *counts.get(path).unwrap_or(&0) as f64;
        max_dev = max_dev.max((observed / m - prob).abs());
        chi2 += (observed - m * prob).powi(2) / (m * prob);
    }
    let limit = ChiSquared::new((exact.len() - 1) as f64).unwrap().inverse_cdf(CHI2_QUANTILE);
    check(
        max_dev <= PATH_FREQ_TOL && chi2 < limit,
        format!("{} paths, max |freq - 1/4| {max_dev:.4}, chi2 {chi2:.2} < {limit:.2}", exact.len()),
    )
}

fn theory_c8(ell: usize) -> Result<StitchParams, WalkError> {
    Ok(StitchParams::theory(8, ell, 10.0, 1.0)?.with_target(1000))
}

fn budget_laws() -> Verdict {
    let g = fixtures::cycle(8);
    let p = theory_c8(4).map_err(|e| e.to_string())?;
    let options = RunOptions { record_trace: true };
    let run =
        run_budgeted(&g, 0, &p, &ClusterConfig::default(), &Substreams::new(13), options).map_err(|e| e.to_string())?;
    if run.trace.len() != 4 {
        return Err(format!("{} stitch cycles, expected 4", run.trace.len()));
    }
    let b0 = |v: VertexId| p.b0 * g.degree(v) as f64;
    let dists = oracle::step_dists_from(&g, 0, p.ell, false).map_err(|e| e.to_string())?;
    let (mut root_checks, mut envelope_checks) = (0, 0);
    for tr in &run.trace {
        let growth = tr.growth.unwrap_or(0.0);
        let want = ceil_budget(b0(0) + growth);
        if tr.table.get(0, 1) != want {
            return Err(format!("cycle {}: B(r,1) = {}, expected {want}", tr.cycle, tr.table.get(0, 1)));
        }
        root_checks += 1;
        let Some(growth) = tr.growth else { continue };
        for v in g.vertices() {
            for k in 1..=p.ell {
                if !tr.is_estimated(v, k) || (v == 0 && k == 1) {
                    continue;
                }
                let base = b0(v) + growth * dists[k - 1][v as usize];
                let (lo, hi) = (base * p.tau.powi(3 * k as i32 - 4), base * p.tau.powi(3 * k as i32 - 2));
                let b = tr.table.get(v, k) as f64;
                if b < lo || b > hi {
                    return Err(format!("cycle {}: B({v},{k}) = {b} outside [{lo:.1}, {hi:.1}]", tr.cycle));
                }
                envelope_checks += 1;
            }
        }
    }
    check(
        envelope_checks > 0,
        format!("root law holds in {root_checks} cycles, {envelope_checks} estimated entries inside the envelope"),
    )
}

fn no_fail_at_theory() -> Verdict {
    let p = theory_c8(4).map_err(|e| e.to_string())?;
    if !p.no_fail_condition(8f64.ln()) {
        return Err("theory constants violate the no-fail inequality".into());
    }
    let g = fixtures::cycle(8);
    let mut failures = 0;
    for seed in 0..20 {
        match run_budgeted(&g, 0, &p, &ClusterConfig::default(), &Substreams::new(seed), RunOptions::default()) {
            Ok(run) if run.failed.is_empty() && run.metrics.cycles.iter().all(|c| c.failed_requests == 0) => {}
            Ok(_) => failures += 1,
            Err(WalkError::StitchFailed { .. }) => failures += 1,
            Err(e) => return Err(e.to_string()),
        }
    }
    check(failures == 0, format!("{failures} of 20 abort-mode runs failed (scale 1, B0 = {:.0})", p.b0))
}

fn round_accounting() -> Verdict {
    use stitchwalk::mpc::RoundKind;
    let g = fixtures::cycle(8);
    let p = StitchParams::custom(16, 10.0, 10.0, 20.0, 1.25)
        .map_err(|e| e.to_string())?
        .with_target(1000)
        .with_mode(Mode::Practical)
        .with_fail_policy(FailPolicy::Tolerate);
    let run = run_budgeted(&g, 0, &p, &ClusterConfig::default(), &Substreams::new(15), RunOptions::default())
        .map_err(|e| e.to_string())?;
    let cycles = run.metrics.cycles.len();
    let c = run.metrics.calibration_cycles as usize;
    let closed = cycles * 2 * 4 + c;
    let l = &run.ledger;
    let ok = cycles == 4
        && c == 3
        && run.metrics.supersteps == closed
        && l.count_kind(RoundKind::StitchRequest) == 16
        && l.count_kind(RoundKind::StitchReply) == 16
        && l.count_kind(RoundKind::BudgetUpdate) == 3;
    check(ok, format!("{cycles} stitch cycles, {} supersteps, closed form 4*8+3 = {closed}", run.metrics.supersteps))
}

fn karate_engine(m: u64) -> EngineSpec {
    EngineSpec {
        constants: EngineConstants::Desk { lambda: (m as f64).powf(0.25), theta: 10.0, b0: 100.0, tau: 1.3 },
        mode: Mode::Practical,
        fail_policy: FailPolicy::Tolerate,
    }
}

fn ppr_additive_error() -> Verdict {
    let g = fixtures::karate_club();
    let params = PprParams::desk(0.15, 64, 200_000, PPR_ERR_TOL).map_err(|e| e.to_string())?;
    let est = approx_ppr(&g, 0, &params, &karate_engine(200_000), &ClusterConfig::default(), &Substreams::new(16))
        .map_err(|e| e.to_string())?;
    let exact = oracle::exact_ppr(&g, &ScoreVector::indicator(0), 0.15, 1e-14).map_err(|e| e.to_string())?;
    let err = g.vertices().map(|v| (est.scores.get(v) - exact[v as usize]).abs()).fold(0.0, f64::max);
    let mass_gap = (est.scores.mass() - params.expected_mass()).abs();
    check(
        err <= PPR_ERR_TOL && mass_gap <= MASS_TOL && est.walks_used == 200_000,
        format!("max error {err:.5}, mass gap {mass_gap:.1e}, {} walks", est.walks_used),
    )
}

fn truncation_bound() -> Verdict {
    let g = fixtures::karate_club();
    let alpha = 0.15;
    let exact = oracle::exact_ppr(&g, &ScoreVector::indicator(0), alpha, 1e-15).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut ok = true;
    for t in [8, 16, 32] {
        let trunc = oracle::truncated_ppr(&g, 0, alpha, t).map_err(|e| e.to_string())?;
        let gap = trunc.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let bound = (1.0 - alpha).powi(t as i32 + 1);
        ok &= gap <= bound;
        parts.push(format!("T={t}: {gap:.2e} <= {bound:.2e}"));
    }
    check(ok, parts.join(", "))
}

fn clustering_recovery() -> Verdict {
    let g = fixtures::clique_pair(15);
    let options = ClusterOptions {
        desk: Some((64, 20_000)),
        engine: EngineSpec {
            constants: EngineConstants::Desk { lambda: 20_000f64.sqrt(), theta: 10.0, b0: 100.0, tau: 1.3 },
            mode: Mode::Practical,
            fail_policy: FailPolicy::Tolerate,
        },
    };
    let found = local_cluster(&g, 3, 0.1, 211, &options, &ClusterConfig::default(), &Substreams::new(18))
        .map_err(|e| e.to_string())?;
    let sym_diff = found.set.iter().filter(|&&v| v >= 15).count() + (0..15).filter(|v| !found.set.contains(v)).count();
    let phi = found.conductance;
    let ok = phi.value <= num_rational::Ratio::new(2, 211) && sym_diff <= 1 && found.bound > phi.as_f64();
    check(
        ok,
        format!(
            "phi = {}/{}, |set| = {}, sym diff {sym_diff}, bound {:.3}",
            phi.boundary,
            phi.denominator,
            found.set.len(),
            found.bound
        ),
    )
}

fn locality_advantage() -> Verdict {
    let g = fixtures::gnp(10_000, 3e-3, 9);
    let target = 1000;
    let p = StitchParams::custom(4, 10.0, 3.0, 1.0, 1.25)
        .map_err(|e| e.to_string())?
        .with_target(target)
        .with_mode(Mode::Practical)
        .with_fail_policy(FailPolicy::Tolerate);
    let streams = Substreams::new(19);
    let cfg = ClusterConfig::default();
    let local = run_budgeted(&g, 0, &p, &cfg, &streams, RunOptions::default()).map_err(|e| e.to_string())?;
    let local_total = local.metrics.total_budget;
    let local_walks = local.root_walks().len();
    drop(local);
    let b0 = (target as f64 / g.degree(0) as f64).ceil();
    let base = uniform_stitching(&g, b0, &p, &cfg, &streams.fork(1)).map_err(|e| e.to_string())?;
    let base_walks = base.walks_from(0).len();
    let ratio = base.metrics.total_budget as f64 / local_total as f64;
    check(
        ratio >= LOCALITY_RATIO && local_walks as u64 >= target && base_walks as u64 >= target,
        format!(
            "uniform {} / budgeted {local_total} = {ratio:.2} (rooted walks {base_walks} vs {local_walks})",
            base.metrics.total_budget
        ),
    )
}

fn write_edge_list(g: &Graph, path: &Path) {
    let mut f = fs::File::create(path).unwrap();
    for u in g.vertices() {
        for &v in g.neighbors(u) {
            if u < v {
                writeln!(f, "{} {}", g.original_id(u), g.original_id(v)).unwrap();
            }
        }
    }
}

/// Runs `stitchwalk <cmd> --config run.cfg` inside `dir`, returning its output files.
fn run_cli(dir: &Path, cmd: &str, config: &str, outputs: &[&str]) -> Result<Vec<Vec<u8>>, String> {
    fs::create_dir_all(dir).unwrap();
    fs::write(dir.join("run.cfg"), config).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_stitchwalk"))
        .args([cmd, "--config", "run.cfg"])
        .current_dir(dir)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("{cmd} exited with {status}"));
    }
    Ok(outputs.iter().map(|o| fs::read(dir.join(o)).unwrap()).collect())
}

fn without_wall_clock(report: &[u8]) -> String {
    let mut v: serde_json::Value = serde_json::from_slice(report).unwrap();
    v.as_object_mut().unwrap().remove("wall_clock_seconds");
    v.to_string()
}

/// Rebuilds a flat config file from a report's embedded config.
fn config_from_report(report: &[u8]) -> String {
    let v: serde_json::Value = serde_json::from_slice(report).unwrap();
    let mut out = String::new();
    for (k, x) in v["config"].as_object().unwrap() {
        match x {
            serde_json::Value::Null | serde_json::Value::Bool(false) => {}
            serde_json::Value::String(s) => out.push_str(&format!("{k}={s}\n")),
            other => out.push_str(&format!("{k}={other}\n")),
        }
    }
    out
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let c8 = tmp.path().join("c8.txt");
    let cp = tmp.path().join("clique_pair.txt");
    write_edge_list(&fixtures::cycle(8), &c8);
    write_edge_list(&fixtures::clique_pair(6), &cp);
    let walk_engine = "params=desk\nlambda=10\ntheta=10\nb0=50\ntau=1.25\nmode=practical\nfail_policy=tolerate\n";
    let runs = [
        (
            "walks",
            format!(
                "graph={}\nroots=0,3\nell=8\ntarget=1000\n{walk_engine}seed=7\nwalks_out=walks.txt\nbudgets_out=budgets.csv\nreport=report.json\n",
                c8.display()
            ),
            vec!["walks.txt", "budgets.csv", "report.json"],
        ),
        (
            "ppr",
            format!(
                "graph={}\nroot=0\nalpha=0.2\nlength=16\nsamples=2000\neta=0.05\nverify=true\n{}seed=7\nscores_out=scores.csv\nreport=report.json\n",
                cp.display(),
                walk_engine.replace("lambda=10", "lambda=44.721359549995796")
            ),
            vec!["scores.csv", "report.json"],
        ),
        (
            "cluster",
            format!(
                "graph={}\nroot=1\nalpha=0.1\ntarget_volume=31\nlength=32\nsamples=2000\n{}seed=7\nset_out=set.txt\nreport=report.json\n",
                cp.display(),
                walk_engine.replace("lambda=10", "lambda=44.721359549995796")
            ),
            vec!["set.txt", "report.json"],
        ),
        (
            "compare-baseline",
            format!("graph={}\nroot=0\nell=4\ntarget=100\n{walk_engine}seed=7\nreport=report.json\n", c8.display()),
            vec!["report.json"],
        ),
    ];
    let mut compared = 0;
    for (cmd, config, outputs) in &runs {
        let first = run_cli(&tmp.path().join(format!("{cmd}-a")), cmd, config, outputs)?;
        let second = run_cli(&tmp.path().join(format!("{cmd}-b")), cmd, config, outputs)?;
        let report = first.last().unwrap();
        let replay = run_cli(&tmp.path().join(format!("{cmd}-c")), cmd, &config_from_report(report), outputs)?;
        for (i, name) in outputs.iter().enumerate() {
            for other in [&second[i], &replay[i]] {
                let same = if name.ends_with(".json") {
                    without_wall_clock(&first[i]) == without_wall_clock(other)
                } else {
                    first[i] == *other
                };
                if !same {
                    return Err(format!("{cmd}: {name} differs between runs"));
                }
                compared += 1;
            }
        }
    }
    Ok(format!("{compared} output comparisons identical across re-runs and report replays"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("distribution correctness", distribution_correctness),
        ("per-path independence", per_path_independence),
        ("budget laws", budget_laws),
        ("no-fail at theory parameters", no_fail_at_theory),
        ("round accounting", round_accounting),
        ("PPR additive error", ppr_additive_error),
        ("truncation bound", truncation_bound),
        ("clustering recovery", clustering_recovery),
        ("locality advantage", locality_advantage),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
