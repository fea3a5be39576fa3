use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::graph::{Graph, VertexId};
use crate::mpc::{Cluster, Envelope, Outbox, RoundKind};
use crate::rng::{Purpose, Substreams};

use super::store::Seg;
use super::{
    init_walks, segment_words, BudgetTable, FailPolicy, StitchParams, WalkError, WalkStore, REPLY_OVERHEAD_WORDS,
    REQUEST_WORDS,
};

/// A label-1 walk that lost its continuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailedWalk {
    pub root: VertexId,
    /// First label of the segment that could not be served.
    pub label: usize,
    /// Vertices walked before the failure.
    pub prefix: Vec<VertexId>,
}

#[derive(Debug, Clone, Default)]
pub struct FailureLog {
    /// Failed label-1 walks with their prefixes (labeled buckets only).
    pub walks: Vec<FailedWalk>,
    /// Failed requests over all labels and phases.
    pub total: u64,
    /// Per vertex, `B(v,1)` minus the walks it ends up with.
    pub rooted: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PhaseStats {
    pub phase: u32,
    pub requests: u64,
    pub served: u64,
    pub failed: u64,
    /// Segments taken out of serving buckets.
    pub removed: u64,
    /// Unused serving segments discarded at the end of the phase.
    pub cleared: u64,
}

#[derive(Debug, Clone)]
pub struct StitchOutput {
    pub store: WalkStore,
    pub failures: FailureLog,
    pub phases: Vec<PhaseStats>,
    /// `Σ_{v,k} B(v,k)` for this stitch.
    pub total_budget: u64,
}

#[derive(Debug, Clone, Copy)]
struct Request {
    label: u32,
    idx: u32,
}

#[derive(Debug, Clone, Copy)]
struct Reply {
    label: u32,
    idx: u32,
    seg: Option<Seg>,
}

/// Runs one stitch: generates length-1 segments from `table`, then doubles them
/// `log2 ℓ` times through request/reply rounds on `cluster`.
pub fn stitch(
    g: &Graph,
    table: &BudgetTable,
    params: &StitchParams,
    cluster: &mut Cluster,
    streams: &Substreams,
    cycle: u32,
) -> Result<StitchOutput, WalkError> {
    params.validate()?;
    if table.n() != g.n() || table.ell() != params.ell {
        return Err(WalkError::param("table", "budget table does not match graph and ell"));
    }
    let mut store = init_walks(g, table, params, streams, cycle)?;
    let mut failures = FailureLog::default();
    let mut phases = Vec::with_capacity(params.phases() as usize);
    for j in 1..=params.phases() {
        let stats = if store.is_pooled() {
            pooled_phase(g, table, params, cluster, streams, cycle, j, &mut store, &mut failures)?
        } else {
            labeled_phase(g, params, cluster, streams, cycle, j, &mut store, &mut failures)?
        };
        store.set_segment_steps(1 << j);
        phases.push(stats);
    }
    failures.rooted = g.vertices().map(|v| table.get(v, 1).saturating_sub(store.bucket_len(v, 1) as u64)).collect();
    Ok(StitchOutput { store, failures, phases, total_budget: table.total() })
}

/// Pairs `requests` with distinct random segments of `supply`; unmatched requests get `None`.
fn serve(rng: &mut ChaCha8Rng, supply: &mut [Seg], requests: usize) -> Vec<Option<Seg>> {
    let s = supply.len();
    if requests <= s {
        for i in 0..requests {
            let j = rng.gen_range(i..s);
            supply.swap(i, j);
        }
        return supply[..requests].iter().map(|&x| Some(x)).collect();
    }
    // More requests than segments: a random subset of requests is served.
    let mut order: Vec<usize> = (0..requests).collect();
    for i in 0..s {
        let j = rng.gen_range(i..requests);
        order.swap(i, j);
    }
    let mut out = vec![None; requests];
    for (i, &r) in order[..s].iter().enumerate() {
        out[r] = Some(supply[i]);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn labeled_phase(
    g: &Graph,
    params: &StitchParams,
    cluster: &mut Cluster,
    streams: &Substreams,
    cycle: u32,
    j: u32,
    store: &mut WalkStore,
    failures: &mut FailureLog,
) -> Result<PhaseStats, WalkError> {
    let n = g.n();
    let ell = params.ell;
    let stride = 1usize << j;
    let half = stride >> 1;
    let mut stats = PhaseStats { phase: j, ..Default::default() };

    let mut requests = Outbox::new(n);
    for v in g.vertices() {
        for k in (1..=ell).step_by(stride) {
            for (i, seg) in store.bucket(v, k).iter().enumerate() {
                requests.send(v, seg.end, REQUEST_WORDS, Request { label: k as u32, idx: i as u32 });
            }
        }
    }
    stats.requests = requests.len() as u64;
    let supply_before: u64 = g
        .vertices()
        .map(|v| (half + 1..=ell).step_by(stride).map(|k| store.bucket_len(v, k) as u64).sum::<u64>())
        .sum();
    let inbox = cluster.exchange(RoundKind::StitchRequest, requests)?;

    let reply_words = segment_words(half) + REPLY_OVERHEAD_WORDS;
    let mut replies = Outbox::new(n);
    let groups = ell / stride;
    for z in g.vertices() {
        let msgs = inbox.for_vertex(z);
        if msgs.is_empty() {
            continue;
        }
        let mut by_label: Vec<Vec<&Envelope<Request>>> = vec![Vec::new(); groups];
        for m in msgs {
            by_label[(m.payload.label as usize - 1) / stride].push(m);
        }
        let mut rng = streams.stream(z as u64, cycle as u64, j as u64, Purpose::Serve);
        for (gi, reqs) in by_label.iter().enumerate() {
            if reqs.is_empty() {
                continue;
            }
            let serving = gi * stride + half + 1;
            let mut supply = store.take_bucket(z, serving);
            let deficit = reqs.len().saturating_sub(supply.len()) as u64;
            if deficit > 0 && params.fail_policy == FailPolicy::Abort {
                return Err(WalkError::StitchFailed {
                    cycle: Some(cycle),
                    vertex: z,
                    label: Some(serving),
                    phase: j,
                    deficit,
                });
            }
            let matched = serve(&mut rng, &mut supply, reqs.len());
            for (m, seg) in reqs.iter().zip(matched) {
                let words = if seg.is_some() { reply_words } else { REQUEST_WORDS };
                replies.send(z, m.from, words, Reply { label: m.payload.label, idx: m.payload.idx, seg });
            }
            stats.cleared += supply.len().saturating_sub(reqs.len()) as u64;
        }
    }
    drop(inbox);
    // Serving buckets nobody asked from are discarded as well.
    for v in g.vertices() {
        for k in (half + 1..=ell).step_by(stride) {
            stats.cleared += store.take_bucket(v, k).len() as u64;
        }
    }
    stats.removed = supply_before - stats.cleared;

    let inbox = cluster.exchange(RoundKind::StitchReply, replies)?;
    for v in g.vertices() {
        let msgs = inbox.for_vertex(v);
        if msgs.is_empty() {
            continue;
        }
        let mut touched = Vec::new();
        for m in msgs {
            let Reply { label, idx, seg } = m.payload;
            let k = label as usize;
            if seg.is_some() {
                stats.served += 1;
            } else {
                stats.failed += 1;
                touched.push(k);
            }
            if let Some(dead) = store.apply_reply(v, k, idx as usize, seg) {
                if k == 1 {
                    let mut prefix = Vec::with_capacity(half + 1);
                    store.materialize(dead, &mut prefix);
                    failures.walks.push(FailedWalk { root: v, label: k + half, prefix });
                }
            }
        }
        touched.sort_unstable();
        touched.dedup();
        for k in touched {
            store.compact(v, k);
        }
    }
    failures.total += stats.failed;
    Ok(stats)
}

/// Pooled phase: each vertex splits its pool into heads (as many as its
/// requesting labels budget for) and servers, chosen at random.
#[allow(clippy::too_many_arguments)]
fn pooled_phase(
    g: &Graph,
    table: &BudgetTable,
    params: &StitchParams,
    cluster: &mut Cluster,
    streams: &Substreams,
    cycle: u32,
    j: u32,
    store: &mut WalkStore,
    failures: &mut FailureLog,
) -> Result<PhaseStats, WalkError> {
    let n = g.n();
    let stride = 1usize << j;
    let half = stride >> 1;
    let mut stats = PhaseStats { phase: j, ..Default::default() };

    let mut servers: Vec<Vec<Seg>> = vec![Vec::new(); n];
    let mut requests = Outbox::new(n);
    for v in g.vertices() {
        let pool = store.bucket_mut(v, 1);
        if pool.is_empty() {
            continue;
        }
        let demand: u64 = (1..=params.ell).step_by(stride).map(|k| table.get(v, k)).sum();
        let heads = pool.len().min(demand as usize);
        let mut rng = streams.stream(v as u64, cycle as u64, j as u64, Purpose::Roles);
        let len = pool.len();
        for i in 0..heads.min(len.saturating_sub(1)) {
            let r = rng.gen_range(i..len);
            pool.swap(i, r);
        }
        servers[v as usize] = pool.split_off(heads);
        for (i, seg) in store.bucket(v, 1).iter().enumerate() {
            requests.send(v, seg.end, REQUEST_WORDS, Request { label: 0, idx: i as u32 });
        }
    }
    stats.requests = requests.len() as u64;
    let supply_before: u64 = servers.iter().map(|s| s.len() as u64).sum();
    let inbox = cluster.exchange(RoundKind::StitchRequest, requests)?;

    let reply_words = segment_words(half) + REPLY_OVERHEAD_WORDS;
    let mut replies = Outbox::new(n);
    for z in g.vertices() {
        let msgs = inbox.for_vertex(z);
        let mut supply = std::mem::take(&mut servers[z as usize]);
        if msgs.is_empty() {
            stats.cleared += supply.len() as u64;
            continue;
        }
        let deficit = msgs.len().saturating_sub(supply.len()) as u64;
        if deficit > 0 && params.fail_policy == FailPolicy::Abort {
            return Err(WalkError::StitchFailed { cycle: Some(cycle), vertex: z, label: None, phase: j, deficit });
        }
        let mut rng = streams.stream(z as u64, cycle as u64, j as u64, Purpose::Serve);
        let matched = serve(&mut rng, &mut supply, msgs.len());
        for (m, seg) in msgs.iter().zip(matched) {
            let words = if seg.is_some() { reply_words } else { REQUEST_WORDS };
            replies.send(z, m.from, words, Reply { label: 0, idx: m.payload.idx, seg });
        }
        stats.cleared += supply.len().saturating_sub(msgs.len()) as u64;
    }
    drop(inbox);
    stats.removed = supply_before - stats.cleared;

    let inbox = cluster.exchange(RoundKind::StitchReply, replies)?;
    for v in g.vertices() {
        let msgs = inbox.for_vertex(v);
        let mut any_failed = false;
        for m in msgs {
            let Reply { idx, seg, .. } = m.payload;
            if seg.is_some() {
                stats.served += 1;
            } else {
                stats.failed += 1;
                any_failed = true;
            }
            store.apply_reply(v, 1, idx as usize, seg);
        }
        if any_failed {
            store.compact(v, 1);
        }
    }
    failures.total += stats.failed;
    Ok(stats)
}

impl StitchOutput {
    /// Rooted walks of `v` as a batch (complete after the last phase).
    pub fn walks_from(&self, v: VertexId) -> super::WalkBatch {
        self.store.walks_from(v)
    }
}
