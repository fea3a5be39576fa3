use rand::Rng;

use crate::graph::{Graph, VertexId};
use crate::rng::{Purpose, Substreams};

use super::{BudgetTable, Mode, StitchParams, WalkBatch, WalkError};

const LEAF: u32 = 1 << 31;
const DEAD: u32 = u32::MAX;

/// Handle to a segment: its node in the arena and its end vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Seg {
    pub node: u32,
    pub end: VertexId,
}

/// Segments held by every vertex, bucketed by first label or pooled.
///
/// Segments are binary trees over a shared arena: a leaf is one step
/// `(from, to)`, an inner node is the concatenation of two halves that share
/// their middle vertex.
#[derive(Debug, Clone)]
pub struct WalkStore {
    n: usize,
    ell: usize,
    lazy: bool,
    pooled: bool,
    steps: usize,
    nodes: Vec<[u32; 2]>,
    buckets: Vec<Vec<Seg>>,
}

impl WalkStore {
    pub(crate) fn empty(n: usize, ell: usize, lazy: bool, pooled: bool) -> Self {
        let slots = if pooled { n } else { n * ell };
        Self { n, ell, lazy, pooled, steps: 1, nodes: Vec::new(), buckets: vec![Vec::new(); slots] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn is_pooled(&self) -> bool {
        self.pooled
    }

    /// Current length (in steps) of every stored segment.
    pub fn segment_steps(&self) -> usize {
        self.steps
    }

    pub(crate) fn set_segment_steps(&mut self, steps: usize) {
        self.steps = steps;
    }

    #[inline]
    fn slot(&self, v: VertexId, k: usize) -> usize {
        if self.pooled {
            v as usize
        } else {
            v as usize * self.ell + k - 1
        }
    }

    /// `W_k(v)`; in pooled mode `k` is ignored.
    pub fn bucket_len(&self, v: VertexId, k: usize) -> usize {
        self.buckets[self.slot(v, k)].len()
    }

    pub fn total_segments(&self) -> usize {
        self.buckets.iter().map(Vec::len).sum()
    }

    pub(crate) fn bucket(&self, v: VertexId, k: usize) -> &[Seg] {
        &self.buckets[self.slot(v, k)]
    }

    pub(crate) fn bucket_mut(&mut self, v: VertexId, k: usize) -> &mut Vec<Seg> {
        let s = self.slot(v, k);
        &mut self.buckets[s]
    }

    pub(crate) fn take_bucket(&mut self, v: VertexId, k: usize) -> Vec<Seg> {
        std::mem::take(self.bucket_mut(v, k))
    }

    /// Extends segment `idx` of `W_k(v)` by `right`, or marks it dead and returns it.
    pub(crate) fn apply_reply(&mut self, v: VertexId, k: usize, idx: usize, right: Option<Seg>) -> Option<Seg> {
        let s = self.slot(v, k);
        let left = self.buckets[s][idx];
        match right {
            Some(r) => {
                let joined = self.join(left, r);
                self.buckets[s][idx] = joined;
                None
            }
            None => {
                self.buckets[s][idx].node = DEAD;
                Some(left)
            }
        }
    }

    /// Drops segments marked dead by [`WalkStore::apply_reply`].
    pub(crate) fn compact(&mut self, v: VertexId, k: usize) {
        self.bucket_mut(v, k).retain(|s| s.node != DEAD);
    }

    pub(crate) fn leaf(&mut self, from: VertexId, to: VertexId) -> Seg {
        let node = self.push_node([from | LEAF, to]);
        Seg { node, end: to }
    }

    pub(crate) fn join(&mut self, left: Seg, right: Seg) -> Seg {
        let node = self.push_node([left.node, right.node]);
        Seg { node, end: right.end }
    }

    fn push_node(&mut self, node: [u32; 2]) -> u32 {
        let id = self.nodes.len();
        assert!(id < LEAF as usize, "segment arena overflow");
        self.nodes.push(node);
        id as u32
    }

    /// Appends the vertices of `seg` to `out`.
    pub(crate) fn materialize(&self, seg: Seg, out: &mut Vec<VertexId>) {
        let mut stack = vec![seg.node];
        let mut first = true;
        while let Some(id) = stack.pop() {
            let [a, b] = self.nodes[id as usize];
            if a & LEAF != 0 {
                if first {
                    out.push(a & !LEAF);
                    first = false;
                }
                out.push(b);
            } else {
                stack.push(b);
                stack.push(a);
            }
        }
    }

    /// Full-length walks held by `v` under first label 1 (its pool in pooled mode).
    pub fn walks_from(&self, v: VertexId) -> WalkBatch {
        let mut batch = WalkBatch::new(self.steps, self.lazy);
        let raw = batch.raw_mut();
        for &seg in self.bucket(v, 1) {
            self.materialize(seg, raw);
        }
        batch
    }
}

/// Generates the length-1 segments: `B(v,k)` independent steps from `v` for each label.
pub fn init_walks(
    g: &Graph,
    table: &BudgetTable,
    params: &StitchParams,
    streams: &Substreams,
    cycle: u32,
) -> Result<WalkStore, WalkError> {
    table.check_against(g)?;
    let pooled = params.mode == Mode::Practical;
    let lazy = params.lazy();
    let mut store = WalkStore::empty(g.n(), params.ell, lazy, pooled);
    store.nodes.reserve(table.total() as usize);
    for v in g.vertices() {
        let total = table.vertex_total(v);
        if total == 0 {
            continue;
        }
        let nbrs = g.neighbors(v);
        let mut rng = streams.stream(v as u64, cycle as u64, 0, Purpose::InitEdges);
        for k in 1..=params.ell {
            let b = table.get(v, k);
            for _ in 0..b {
                let to = if lazy && rng.gen_bool(0.5) { v } else { nbrs[rng.gen_range(0..nbrs.len())] };
                let seg = store.leaf(v, to);
                store.bucket_mut(v, k).push(seg);
            }
        }
    }
    Ok(store)
}
