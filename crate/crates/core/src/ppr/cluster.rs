use serde::Serialize;

use crate::graph::{Conductance, Graph, VertexId};
use crate::mpc::ClusterConfig;
use crate::rng::Substreams;
use crate::score::ScoreVector;
use crate::walk::RunMetrics;

use super::{approx_ppr, param, sweep, EngineSpec, PprError, PprParams, SweepResult};

/// How `q̃` is sampled for clustering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterOptions {
    /// `Some((T, M))` for desk sizes; `None` derives both from `η`.
    pub desk: Option<(usize, u64)>,
    pub engine: EngineSpec,
}

#[derive(Debug, Clone)]
pub struct LocalCluster {
    pub set: Vec<VertexId>,
    pub conductance: Conductance,
    /// `√(135·α·ln(30·√target_volume))`.
    pub bound: f64,
    /// `α = 1`, or the estimate is supported on the seed alone.
    pub teleport_dominated: bool,
    pub eta: f64,
    pub params: PprParams,
    pub scores: ScoreVector,
    pub sweep: SweepResult,
    pub walks_used: u64,
    pub metrics: Option<RunMetrics>,
}

/// Sweep bound for a cluster of volume `vol`.
pub fn conductance_bound(alpha: f64, vol: f64) -> f64 {
    (135.0 * alpha * (30.0 * vol.sqrt()).ln()).sqrt()
}

/// Approximate PPR from `seed` with `η = 1/(10·target_volume)`, then the best sweep cut.
pub fn local_cluster(
    g: &Graph,
    seed: VertexId,
    alpha: f64,
    target_volume: u64,
    options: &ClusterOptions,
    config: &ClusterConfig,
    streams: &Substreams,
) -> Result<LocalCluster, PprError> {
    g.check_vertex(seed)?;
    if target_volume < g.degree(seed) as u64 || target_volume == 0 {
        return Err(param(
            "target_volume",
            format!("must be at least deg(seed) = {} and positive, got {target_volume}", g.degree(seed)),
        ));
    }
    let eta = 1.0 / (10.0 * target_volume as f64);
    let params = match options.desk {
        Some((t, m)) => PprParams::desk(alpha, t, m, eta)?,
        None => PprParams::theory(g.n(), alpha, eta)?,
    };
    let est = approx_ppr(g, seed, &params, &options.engine, config, streams)?;
    let sweep = sweep(g, &est.scores)?;
    Ok(LocalCluster {
        set: sweep.best_set.clone(),
        conductance: sweep.best(),
        bound: conductance_bound(alpha, target_volume as f64),
        teleport_dominated: alpha == 1.0 || est.scores.support().eq([seed]),
        eta,
        params,
        scores: est.scores,
        sweep,
        walks_used: est.walks_used,
        metrics: est.run.map(|r| r.metrics),
    })
}

/// Heuristic search over `target_volume = 2^i·d(seed)` up to `max_volume`,
/// keeping the lowest-conductance cut (earliest on ties).
pub fn local_cluster_doubling(
    g: &Graph,
    seed: VertexId,
    alpha: f64,
    max_volume: u64,
    options: &ClusterOptions,
    config: &ClusterConfig,
    streams: &Substreams,
) -> Result<Vec<(u64, LocalCluster)>, PprError> {
    g.check_vertex(seed)?;
    let d = g.degree(seed) as u64;
    if d == 0 {
        return Err(param("seed", "isolated seed"));
    }
    let mut tried = Vec::new();
    let mut vol = d;
    let mut i = 0u64;
    while vol <= max_volume {
        let found = local_cluster(g, seed, alpha, vol, options, config, &streams.fork(i))?;
        tried.push((vol, found));
        vol *= 2;
        i += 1;
    }
    if tried.is_empty() {
        return Err(param("max_volume", format!("must be at least deg(seed) = {d}")));
    }
    tried.sort_by(|a, b| a.1.conductance.value.cmp(&b.1.conductance.value).then(a.0.cmp(&b.0)));
    Ok(tried)
}
