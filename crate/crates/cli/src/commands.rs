use std::fs::{self, File};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use stitchwalk::oracle::{self, DENSE_LIMIT};
use stitchwalk::ppr::{
    approx_ppr, approx_ppr_from_walks, local_cluster, ClusterOptions, EngineConstants, EngineSpec, PprEstimate,
    PprParams,
};
use stitchwalk::rng::Substreams;
use stitchwalk::walk::{
    is_valid_walk, run_budgeted_roots, run_multi_source, uniform_stitching, write_walk_line, RunMetrics, RunOptions,
    StitchParams, WalkBatch, WalkStatus,
};
use stitchwalk::{ClusterConfig, Graph, LoadOptions, ScoreVector, VertexId};

use crate::config::{or_default, required, FailPolicyArg, LazinessArg, ModeArg, ParamsKind, RunConfig};
use crate::error::CliError;
use crate::report::{emit, write_file, write_stdout};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Loads an edge list, or a binary cache when the file starts with the cache magic.
pub fn load_graph(path: &Path) -> Result<Graph, CliError> {
    let mut file = File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut head = [0u8; 4];
    let got = file.read(&mut head)?;
    let file = File::open(path)?;
    if Graph::is_cache_header(&head[..got]) {
        Ok(Graph::read_cache(BufReader::new(file))?)
    } else {
        Ok(Graph::load_edge_list(BufReader::new(file), LoadOptions::default())?)
    }
}

fn graph_of(cfg: &RunConfig) -> Result<Graph, CliError> {
    let path = cfg.graph.as_deref().ok_or_else(|| usage("missing required setting graph"))?;
    load_graph(path)
}

fn vertex(g: &Graph, original: u64) -> Result<VertexId, CliError> {
    g.index_of(original).ok_or_else(|| usage(format!("vertex {original} is not in the graph")))
}

fn cluster_config(cfg: &mut RunConfig) -> Result<ClusterConfig, CliError> {
    let machines = or_default(&mut cfg.machines, 30);
    let capacity = or_default(&mut cfg.capacity, u64::MAX);
    let c = ClusterConfig::new(machines, capacity)?;
    Ok(if cfg.strict { c.strict() } else { c })
}

/// Walk-engine parameters; fills defaults into `cfg` so the report echoes them.
fn stitch_params(cfg: &mut RunConfig, n: usize) -> Result<StitchParams, CliError> {
    let ell = required(cfg.ell, "ell")?;
    let lambda = required(cfg.lambda, "lambda")?;
    let p = match or_default(&mut cfg.params, ParamsKind::Theory) {
        ParamsKind::Theory => {
            let c = or_default(&mut cfg.confidence, 1.0);
            let scale = or_default(&mut cfg.scale, 1.0);
            StitchParams::theory(n, ell, lambda, c)?.with_scale(scale)?
        }
        ParamsKind::Desk => StitchParams::custom(
            ell,
            lambda,
            required(cfg.theta, "theta")?,
            required(cfg.b0, "b0")?,
            required(cfg.tau, "tau")?,
        )?,
    };
    let p = p
        .with_target(or_default(&mut cfg.target, 1))
        .with_mode(or_default(&mut cfg.mode, ModeArg::Theory).into())
        .with_laziness(or_default(&mut cfg.laziness, LazinessArg::None).into())
        .with_fail_policy(or_default(&mut cfg.fail_policy, FailPolicyArg::Abort).into());
    p.validate()?;
    Ok(p)
}

/// Engine behind PPR; `None` when no engine parameters were given.
fn engine_spec(cfg: &mut RunConfig) -> Result<Option<EngineSpec>, CliError> {
    let Some(lambda) = cfg.lambda else { return Ok(None) };
    let constants = match or_default(&mut cfg.params, ParamsKind::Theory) {
        ParamsKind::Theory => EngineConstants::Theory {
            lambda,
            confidence: or_default(&mut cfg.confidence, 1.0),
            scale: or_default(&mut cfg.scale, 1.0),
        },
        ParamsKind::Desk => EngineConstants::Desk {
            lambda,
            theta: required(cfg.theta, "theta")?,
            b0: required(cfg.b0, "b0")?,
            tau: required(cfg.tau, "tau")?,
        },
    };
    Ok(Some(EngineSpec {
        constants,
        mode: or_default(&mut cfg.mode, ModeArg::Theory).into(),
        fail_policy: or_default(&mut cfg.fail_policy, FailPolicyArg::Abort).into(),
    }))
}

fn ppr_params(cfg: &RunConfig, g: &Graph, alpha: f64) -> Result<PprParams, CliError> {
    Ok(match (cfg.length, cfg.samples) {
        (Some(t), Some(m)) => PprParams::desk(alpha, t, m, cfg.eta.unwrap_or(0.0))?,
        (None, None) => PprParams::theory(g.n(), alpha, required(cfg.eta, "eta")?)?,
        _ => return Err(usage("length and samples must be given together")),
    })
}

fn check_violations(metrics: &RunMetrics, strict: bool) -> Result<(), CliError> {
    match metrics.violations.first() {
        Some(v) if strict => Err(CliError::Capacity(format!("capacity exceeded: {v:?}"))),
        _ => Ok(()),
    }
}

pub fn ingest(edges: &Path, cache: &Path, csv: bool) -> Result<(), CliError> {
    let file = File::open(edges).map_err(|e| usage(format!("{}: {e}", edges.display())))?;
    let g = Graph::load_edge_list(BufReader::new(file), LoadOptions::default())?;
    write_file(cache, |w| g.write_cache(w))?;
    write_stdout(|w| if csv { writeln!(w, "n,m\n{},{}", g.n(), g.m()) } else { writeln!(w, "n={} m={}", g.n(), g.m()) })
}

#[derive(Serialize)]
struct CycleRow {
    group: usize,
    cycle: u32,
    total_budget: u64,
    root_budget: u64,
    rooted_walks: u64,
    rooted_failures: u64,
    failed_requests: u64,
}

fn cycle_rows(group: usize, m: &RunMetrics) -> impl Iterator<Item = CycleRow> + '_ {
    m.cycles.iter().map(move |c| CycleRow {
        group,
        cycle: c.cycle,
        total_budget: c.total_budget,
        root_budget: c.root_budget,
        rooted_walks: c.rooted_walks,
        rooted_failures: c.rooted_failures,
        failed_requests: c.failed_requests,
    })
}

fn print_cycle_csv(rows: &[CycleRow]) -> Result<(), CliError> {
    write_stdout(|w| {
        writeln!(w, "group,cycle,total_budget,root_budget,rooted_walks,rooted_failures,failed_requests")?;
        for r in rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.group, r.cycle, r.total_budget, r.root_budget, r.rooted_walks, r.rooted_failures, r.failed_requests
            )?;
        }
        Ok(())
    })
}

fn read_sources(g: &Graph, path: &Path) -> Result<Vec<u64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut b = vec![0u64; g.n()];
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || usage(format!("{}:{}: expected `id count`", path.display(), i + 1));
        let mut it = line.split_whitespace();
        let (Some(id), Some(count), None) = (it.next(), it.next(), it.next()) else { return Err(bad()) };
        let id: u64 = id.parse().map_err(|_| bad())?;
        b[vertex(g, id)? as usize] = count.parse().map_err(|_| bad())?;
    }
    Ok(b)
}

pub fn walks(mut cfg: RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let seed = required(cfg.seed, "seed")?;
    let g = graph_of(&cfg)?;
    let params = stitch_params(&mut cfg, g.n())?;
    let cluster = cluster_config(&mut cfg)?;
    let streams = Substreams::new(seed);

    if let Some(path) = cfg.sources.clone() {
        if cfg.roots.is_some() || cfg.budgets_out.is_some() {
            return Err(usage("sources cannot be combined with roots or budgets_out"));
        }
        let b = read_sources(&g, &path)?;
        let run = run_multi_source(&g, &b, &params, &cluster, &streams)?;
        for m in &run.group_metrics {
            check_violations(m, cfg.strict)?;
        }
        let mut final_cycle = vec![0u32; g.n()];
        for (group, m) in run.groups.iter().zip(&run.group_metrics) {
            for &u in &group.members {
                final_cycle[u as usize] = m.calibration_cycles + 1;
            }
        }
        if let Some(out) = &cfg.walks_out {
            write_file(out, |w| {
                for (u, batch) in &run.walks {
                    for walk in batch.iter() {
                        write_walk_line(w, &g, *u, final_cycle[*u as usize], WalkStatus::Ok, walk)?;
                    }
                }
                Ok(())
            })?;
        }
        if cfg.csv {
            let rows: Vec<CycleRow> =
                run.group_metrics.iter().enumerate().flat_map(|(i, m)| cycle_rows(i, m)).collect();
            print_cycle_csv(&rows)?;
        }
        let groups: Vec<_> = run
            .groups
            .iter()
            .map(|gr| {
                json!({
                    "level": gr.level,
                    "members": gr.members.iter().map(|&u| g.original_id(u)).collect::<Vec<_>>(),
                    "budget": gr.budget,
                })
            })
            .collect();
        let shortfall: Vec<_> = run.shortfall.iter().map(|&(u, s)| (g.original_id(u), s)).collect();
        let result = json!({
            "params": params,
            "groups": groups,
            "metrics": run.metrics,
            "group_metrics": run.group_metrics,
            "shortfall": shortfall,
            "walks_written": run.walks.iter().map(|(_, w)| w.len()).sum::<usize>(),
        });
        return emit("walks", &cfg, started, result);
    }

    let roots_text = cfg.roots.clone().ok_or_else(|| usage("walks needs roots or sources"))?;
    let roots = roots_text
        .split(',')
        .map(|s| {
            let id = s.trim().parse::<u64>().map_err(|_| usage(format!("bad root id {s:?}")))?;
            vertex(&g, id)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let options = RunOptions { record_trace: cfg.budgets_out.is_some() };
    let run = run_budgeted_roots(&g, &roots, &params, &cluster, &streams, options)?;
    check_violations(&run.metrics, cfg.strict)?;
    let cycle = run.final_cycle();
    if let Some(out) = &cfg.walks_out {
        write_file(out, |w| {
            for (&r, batch) in run.roots.iter().zip(&run.walks) {
                for walk in batch.iter() {
                    write_walk_line(w, &g, r, cycle, WalkStatus::Ok, walk)?;
                }
            }
            for f in &run.failed {
                write_walk_line(w, &g, f.root, cycle, WalkStatus::FailedAt(f.label), &f.prefix)?;
            }
            Ok(())
        })?;
    }
    if let Some(out) = &cfg.budgets_out {
        let last = run.trace.last().expect("trace was recorded");
        write_file(out, |w| last.table.write_csv(&g, w))?;
    }
    if cfg.csv {
        print_cycle_csv(&cycle_rows(0, &run.metrics).collect::<Vec<_>>())?;
    }
    let result = json!({
        "params": params,
        "roots": run.roots.iter().map(|&r| g.original_id(r)).collect::<Vec<_>>(),
        "metrics": run.metrics,
        "walks_written": run.walks.iter().map(WalkBatch::len).sum::<usize>(),
        "failed_walks": run.failed.len(),
    });
    emit("walks", &cfg, started, result)
}

/// Reads the `ok` lines of a walk file rooted at `root`.
fn read_walk_file(g: &Graph, path: &Path, root: VertexId, lazy: bool) -> Result<WalkBatch, CliError> {
    let file = File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut batch: Option<WalkBatch> = None;
    let mut walk = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let bad = |what: &str| usage(format!("{}:{}: {what}", path.display(), i + 1));
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() < 4 {
            return Err(bad("expected `root cycle status v0 ...`"));
        }
        let line_root = tokens[0].parse::<u64>().map_err(|_| bad("bad root id"))?;
        if tokens[2] != "ok" || vertex(g, line_root)? != root {
            continue;
        }
        walk.clear();
        for t in &tokens[3..] {
            walk.push(vertex(g, t.parse::<u64>().map_err(|_| bad("bad vertex id"))?)?);
        }
        if !is_valid_walk(g, &walk, lazy) {
            return Err(bad("not a walk of the graph"));
        }
        let b = batch.get_or_insert_with(|| WalkBatch::new(walk.len() - 1, lazy));
        if b.ell() + 1 != walk.len() {
            return Err(bad("walk length differs from earlier lines"));
        }
        b.push(&walk);
    }
    Ok(batch.unwrap_or_else(|| WalkBatch::new(0, lazy)))
}

pub fn ppr(mut cfg: RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let seed = required(cfg.seed, "seed")?;
    let g = graph_of(&cfg)?;
    let root = vertex(&g, required(cfg.root, "root")?)?;
    let alpha = required(cfg.alpha, "alpha")?;
    let params = ppr_params(&cfg, &g, alpha)?;
    let cluster = cluster_config(&mut cfg)?;
    let (estimate, engine) = match cfg.walks_in.clone() {
        Some(path) => {
            let lazy = or_default(&mut cfg.laziness, LazinessArg::Half) == LazinessArg::Half;
            let walks = read_walk_file(&g, &path, root, lazy)?;
            let scores = approx_ppr_from_walks(&g, root, &params, &walks)?;
            let used = (walks.len() as u64).min(params.samples);
            (PprEstimate { scores, walks_used: used, run: None }, None)
        }
        None => {
            let engine = engine_spec(&mut cfg)?
                .ok_or_else(|| usage("ppr needs walks_in or engine parameters (lambda and friends)"))?;
            let est = approx_ppr(&g, root, &params, &engine, &cluster, &Substreams::new(seed))?;
            (est, Some(engine))
        }
    };
    let metrics = estimate.run.as_ref().map(|r| &r.metrics);
    if let Some(m) = metrics {
        check_violations(m, cfg.strict)?;
    }
    let verify = if cfg.verify {
        if g.n() > DENSE_LIMIT {
            Some(json!({ "skipped": format!("n = {} exceeds the oracle limit {DENSE_LIMIT}", g.n()) }))
        } else {
            let eta = required(cfg.eta, "eta")?;
            let exact = oracle::exact_ppr(&g, &ScoreVector::indicator(root), alpha, 1e-13)?;
            let err = g.vertices().map(|v| (estimate.scores.get(v) - exact[v as usize]).abs()).fold(0.0, f64::max);
            Some(json!({ "max_abs_error": err, "eta": eta, "within_eta": err <= eta }))
        }
    } else {
        None
    };
    if let Some(out) = &cfg.scores_out {
        write_file(out, |w| estimate.scores.write_csv(&g, w))?;
    }
    if cfg.csv {
        write_stdout(|w| estimate.scores.write_csv(&g, w))?;
    }
    let result = json!({
        "params": params,
        "engine": engine,
        "walks_used": estimate.walks_used,
        "mass": estimate.scores.mass(),
        "expected_mass": params.expected_mass(),
        "support": estimate.scores.support_len(),
        "metrics": metrics,
        "verify": verify,
    });
    emit("ppr", &cfg, started, result)
}

pub fn cluster(mut cfg: RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let seed = required(cfg.seed, "seed")?;
    let g = graph_of(&cfg)?;
    let root = vertex(&g, required(cfg.root, "root")?)?;
    let alpha = required(cfg.alpha, "alpha")?;
    let target_volume = required(cfg.target_volume, "target_volume")?;
    let desk = match (cfg.length, cfg.samples) {
        (Some(t), Some(m)) => Some((t, m)),
        (None, None) => None,
        _ => return Err(usage("length and samples must be given together")),
    };
    let cluster = cluster_config(&mut cfg)?;
    let engine = engine_spec(&mut cfg)?.ok_or_else(|| usage("cluster needs engine parameters (lambda and friends)"))?;
    let options = ClusterOptions { desk, engine };
    let found = local_cluster(&g, root, alpha, target_volume, &options, &cluster, &Substreams::new(seed))?;
    if let Some(m) = &found.metrics {
        check_violations(m, cfg.strict)?;
    }
    let mut set: Vec<u64> = found.set.iter().map(|&v| g.original_id(v)).collect();
    set.sort_unstable();
    if let Some(out) = &cfg.set_out {
        write_file(out, |w| set.iter().try_for_each(|v| writeln!(w, "{v}")))?;
    }
    let sweep = &found.sweep;
    if cfg.csv {
        write_stdout(|w| {
            writeln!(w, "rank,vertex,score,phi")?;
            for (j, (&v, phi)) in sweep.ordering.iter().zip(&sweep.phi_list).enumerate() {
                let phi = phi.map(|p| p.to_string()).unwrap_or_default();
                writeln!(w, "{},{},{},{}", j + 1, g.original_id(v), found.scores.get(v), phi)?;
            }
            Ok(())
        })?;
    }
    let c = found.conductance;
    let result = json!({
        "params": found.params,
        "engine": options.engine,
        "set": set,
        "boundary": c.boundary,
        "denominator": c.denominator,
        "conductance": { "numer": *c.value.numer(), "denom": *c.value.denom(), "value": c.as_f64() },
        "bound": found.bound,
        "within_bound": c.as_f64() <= found.bound,
        "teleport_dominated": found.teleport_dominated,
        "eta": found.eta,
        "walks_used": found.walks_used,
        "sweep": {
            "ordering": sweep.ordering.iter().map(|&v| g.original_id(v)).collect::<Vec<_>>(),
            "phi_list": sweep.phi_list,
            "best_j": sweep.best_j,
            "phi": sweep.phi,
        },
        "metrics": found.metrics,
    });
    emit("cluster", &cfg, started, result)
}

#[derive(Serialize)]
struct EngineSummary {
    total_budget: u64,
    peak_budget: u64,
    supersteps: usize,
    model_rounds: usize,
    max_machine_words: u64,
    rooted_walks: u64,
    failure_rate: Option<f64>,
}

impl EngineSummary {
    fn new(m: &RunMetrics, rooted_walks: u64) -> Self {
        Self {
            total_budget: m.total_budget,
            peak_budget: m.peak_budget,
            supersteps: m.supersteps,
            model_rounds: m.model_rounds,
            max_machine_words: m.max_machine_words,
            rooted_walks,
            failure_rate: m.failure_rate,
        }
    }
}

pub fn compare_baseline(mut cfg: RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let seed = or_default(&mut cfg.seed, 0);
    let g = graph_of(&cfg)?;
    let root = vertex(&g, required(cfg.root, "root")?)?;
    let params = stitch_params(&mut cfg, g.n())?;
    let cluster = cluster_config(&mut cfg)?;
    let streams = Substreams::new(seed);
    let degree = g.degree(root) as f64;
    if degree == 0.0 {
        return Err(usage("root is isolated"));
    }
    let baseline_b0 = or_default(&mut cfg.baseline_b0, (params.target as f64 / degree).ceil().max(1.0));
    let local = run_budgeted_roots(&g, &[root], &params, &cluster, &streams, RunOptions::default())?;
    check_violations(&local.metrics, cfg.strict)?;
    let base = uniform_stitching(&g, baseline_b0, &params, &cluster, &streams.fork(1))?;
    check_violations(&base.metrics, cfg.strict)?;
    let local_sum = EngineSummary::new(&local.metrics, local.root_walks().len() as u64);
    let base_sum = EngineSummary::new(&base.metrics, base.walks_from(root).len() as u64);
    let ratio = base_sum.total_budget as f64 / local_sum.total_budget as f64;
    if cfg.csv {
        write_stdout(|w| {
            writeln!(w, "engine,total_budget,peak_budget,supersteps,rooted_walks")?;
            for (name, s) in [("local", &local_sum), ("baseline", &base_sum)] {
                writeln!(w, "{name},{},{},{},{}", s.total_budget, s.peak_budget, s.supersteps, s.rooted_walks)?;
            }
            Ok(())
        })?;
    }
    let result = json!({
        "params": params,
        "root": g.original_id(root),
        "target": params.target,
        "local": local_sum,
        "baseline": base_sum,
        "ratio": ratio,
    });
    emit("compare-baseline", &cfg, started, result)
}
