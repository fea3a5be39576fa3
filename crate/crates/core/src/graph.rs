//! Undirected simple graphs in compressed adjacency form.

use std::io::{self, BufRead, Read, Write};

use num_rational::Ratio;
use thiserror::Error;

use crate::score::ScoreVector;

/// Dense vertex index in `0..n`.
pub type VertexId = u32;

const CACHE_MAGIC: &[u8; 4] = b"LWG1";

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: malformed token {token:?}")]
    Parse { line: usize, token: String },
    #[error("line {line}: expected two vertex ids, found {found}")]
    Arity { line: usize, found: usize },
    #[error("graph has no edges")]
    Empty,
    #[error("self-loops cannot be retained: walks run on simple graphs and laziness is added by the walk engine")]
    SelfLoopsUnsupported,
    #[error("duplicate edge {u}-{v} while deduplication is disabled")]
    DuplicateEdge { u: u64, v: u64 },
    #[error("self-loop {v}-{v} in explicit edge list")]
    SelfLoop { v: VertexId },
    #[error("vertex {v} out of range for a graph with {n} vertices")]
    VertexOutOfRange { v: VertexId, n: usize },
    #[error("vertex {v} listed twice in a vertex set")]
    DuplicateVertex { v: VertexId },
    #[error("conductance undefined: set volume {volume} leaves no positive side of total volume {total}")]
    UndefinedConductance { volume: u64, total: u64 },
    #[error("corrupt graph cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Ingestion switches for [`Graph::load_edge_list`].
#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub drop_self_loops: bool,
    pub dedupe: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { drop_self_loops: true, dedupe: true }
    }
}

/// Immutable undirected graph.
///
/// Neighbor lists are sorted and duplicate-free, there are no self-loops, and
/// `original_ids` (sorted ascending) maps dense ids back to the ids of the input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<VertexId>,
    original_ids: Vec<u64>,
}

impl Graph {
    /// Builds a graph on `0..n` from an explicit edge list. Duplicates collapse; self-loops are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (VertexId, VertexId)>,
    {
        let mut pairs = Vec::new();
        for (u, v) in edges {
            for x in [u, v] {
                if x as usize >= n {
                    return Err(GraphError::VertexOutOfRange { v: x, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop { v: u });
            }
            pairs.push((u.min(v), u.max(v)));
        }
        pairs.sort_unstable();
        pairs.dedup();
        Ok(Self::from_sorted_pairs(n, &pairs, (0..n as u64).collect()))
    }

    /// Parses a SNAP-style edge list: whitespace-separated id pairs, `#` comment lines.
    ///
    /// Input ids are arbitrary `u64`s; they are remapped to `0..n` in ascending order.
    pub fn load_edge_list<R: BufRead>(reader: R, options: LoadOptions) -> Result<Self, GraphError> {
        if !options.drop_self_loops {
            return Err(GraphError::SelfLoopsUnsupported);
        }
        let mut raw: Vec<(u64, u64)> = Vec::new();
        let mut ids: Vec<u64> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = trimmed.split_whitespace().collect();
            if tokens.len() != 2 {
                if let Some(bad) = tokens.iter().find(|t| t.parse::<u64>().is_err()) {
                    return Err(GraphError::Parse { line: line_no, token: bad.to_string() });
                }
                return Err(GraphError::Arity { line: line_no, found: tokens.len() });
            }
            let mut parsed = [0u64; 2];
            for (slot, tok) in parsed.iter_mut().zip(&tokens) {
                *slot = tok.parse().map_err(|_| GraphError::Parse { line: line_no, token: tok.to_string() })?;
            }
            let [u, v] = parsed;
            ids.push(u);
            ids.push(v);
            if u != v {
                raw.push((u.min(v), u.max(v)));
            }
        }
        ids.sort_unstable();
        ids.dedup();
        raw.sort_unstable();
        if !options.dedupe {
            if let Some(w) = raw.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::DuplicateEdge { u: w[0].0, v: w[0].1 });
            }
        }
        raw.dedup();
        if raw.is_empty() {
            return Err(GraphError::Empty);
        }
        let index = |x: u64| ids.binary_search(&x).expect("id collected above") as VertexId;
        let pairs: Vec<(VertexId, VertexId)> = raw.iter().map(|&(u, v)| (index(u), index(v))).collect();
        Ok(Self::from_sorted_pairs(ids.len(), &pairs, ids))
    }

    fn from_sorted_pairs(n: usize, pairs: &[(VertexId, VertexId)], original_ids: Vec<u64>) -> Self {
        let mut degree = vec![0usize; n];
        for &(u, v) in pairs {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut neighbors = vec![0 as VertexId; offsets[n]];
        for &(u, v) in pairs {
            neighbors[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
            neighbors[cursor[v as usize]] = u;
            cursor[v as usize] += 1;
        }
        for v in 0..n {
            neighbors[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Self { offsets, neighbors, original_ids }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn m(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// `Vol(G) = 2m`.
    pub fn total_volume(&self) -> u64 {
        self.neighbors.len() as u64
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        let v = v as usize;
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        0..self.n() as VertexId
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.vertices().map(|v| self.degree(v)).collect()
    }

    pub fn original_id(&self, v: VertexId) -> u64 {
        self.original_ids[v as usize]
    }

    pub fn original_ids(&self) -> &[u64] {
        &self.original_ids
    }

    /// Dense id of an input-file id, if present.
    pub fn index_of(&self, original: u64) -> Option<VertexId> {
        self.original_ids.binary_search(&original).ok().map(|i| i as VertexId)
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<(), GraphError> {
        if (v as usize) < self.n() {
            Ok(())
        } else {
            Err(GraphError::VertexOutOfRange { v, n: self.n() })
        }
    }

    /// Full scan of the structural invariants: symmetry, no loops, no duplicates, `Σ deg = 2m`.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut degree_sum = 0u64;
        for v in self.vertices() {
            let nbrs = self.neighbors(v);
            degree_sum += nbrs.len() as u64;
            for w in nbrs.windows(2) {
                if w[0] >= w[1] {
                    return Err(GraphError::Cache(format!("neighbors of {v} not strictly sorted")));
                }
            }
            for &u in nbrs {
                self.check_vertex(u)?;
                if u == v {
                    return Err(GraphError::SelfLoop { v });
                }
                if !self.has_edge(u, v) {
                    return Err(GraphError::Cache(format!("edge {v}-{u} is not symmetric")));
                }
            }
        }
        if degree_sum != self.total_volume() {
            return Err(GraphError::Cache("degree sum differs from 2m".into()));
        }
        if self.original_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GraphError::Cache("id map not strictly increasing".into()));
        }
        Ok(())
    }

    pub fn volume(&self, s: &VertexSet) -> u64 {
        s.volume
    }

    /// `|∂(S)|`: edges with exactly one endpoint in `s`.
    pub fn boundary_size(&self, s: &VertexSet) -> u64 {
        s.ids.iter().map(|&v| self.neighbors(v).iter().filter(|&&u| !s.contains(u)).count() as u64).sum()
    }

    /// `Φ(S) = |∂(S)| / min(Vol(S), 2m − Vol(S))`, exact.
    pub fn conductance(&self, s: &VertexSet) -> Result<Conductance, GraphError> {
        Conductance::new(self.boundary_size(s), s.volume, self.total_volume())
    }

    /// Degree-proportional stationary distribution `ψ(v) = d(v) / Vol(G)`.
    pub fn stationary(&self) -> ScoreVector {
        let total = self.total_volume() as f64;
        let mut out = ScoreVector::new();
        for v in self.vertices() {
            let d = self.degree(v);
            if d > 0 {
                out.set(v, d as f64 / total);
            }
        }
        out
    }

    /// Writes the binary cache: magic `LWG1`, `n`, `m`, degrees, neighbor array, id map, all `u64` LE.
    pub fn write_cache<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(CACHE_MAGIC)?;
        let put = |x: u64, w: &mut W| w.write_all(&x.to_le_bytes());
        put(self.n() as u64, &mut w)?;
        put(self.m() as u64, &mut w)?;
        for v in self.vertices() {
            put(self.degree(v) as u64, &mut w)?;
        }
        for &u in &self.neighbors {
            put(u as u64, &mut w)?;
        }
        for &id in &self.original_ids {
            put(id, &mut w)?;
        }
        w.flush()
    }

    pub fn read_cache<R: Read>(mut r: R) -> Result<Self, GraphError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(GraphError::Cache("bad magic".into()));
        }
        let get = |r: &mut R| -> io::Result<u64> {
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf)?;
            Ok(u64::from_le_bytes(buf))
        };
        let n = get(&mut r)? as usize;
        let m = get(&mut r)? as usize;
        if n >= VertexId::MAX as usize {
            return Err(GraphError::Cache(format!("vertex count {n} too large")));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0usize);
        for _ in 0..n {
            let d = get(&mut r)? as usize;
            offsets.push(offsets.last().unwrap() + d);
        }
        if offsets[n] != 2 * m {
            return Err(GraphError::Cache("degree sum differs from 2m".into()));
        }
        let mut neighbors = Vec::with_capacity(2 * m);
        for _ in 0..2 * m {
            let u = get(&mut r)?;
            if u >= n as u64 {
                return Err(GraphError::Cache(format!("neighbor {u} out of range")));
            }
            neighbors.push(u as VertexId);
        }
        let mut original_ids = Vec::with_capacity(n);
        for _ in 0..n {
            original_ids.push(get(&mut r)?);
        }
        let g = Self { offsets, neighbors, original_ids };
        g.validate()?;
        Ok(g)
    }

    /// Returns true when the reader starts with the binary cache magic.
    pub fn is_cache_header(prefix: &[u8]) -> bool {
        prefix.starts_with(CACHE_MAGIC)
    }
}

/// Exact conductance value together with the counts it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conductance {
    pub boundary: u64,
    /// `min(Vol(S), 2m − Vol(S))`.
    pub denominator: u64,
    pub value: Ratio<u64>,
}

impl Conductance {
    pub fn new(boundary: u64, volume: u64, total_volume: u64) -> Result<Self, GraphError> {
        if volume == 0 || volume >= total_volume {
            return Err(GraphError::UndefinedConductance { volume, total: total_volume });
        }
        let denominator = volume.min(total_volume - volume);
        Ok(Self { boundary, denominator, value: Ratio::new(boundary, denominator) })
    }

    pub fn as_f64(&self) -> f64 {
        self.boundary as f64 / self.denominator as f64
    }
}

/// Ordered set of distinct vertices with its volume cached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    ids: Vec<VertexId>,
    sorted: Vec<VertexId>,
    volume: u64,
}

impl VertexSet {
    pub fn new<I>(g: &Graph, ids: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = VertexId>,
    {
        let ids: Vec<VertexId> = ids.into_iter().collect();
        for &v in &ids {
            g.check_vertex(v)?;
        }
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateVertex { v: w[0] });
        }
        let volume = ids.iter().map(|&v| g.degree(v) as u64).sum();
        Ok(Self { ids, sorted, volume })
    }

    pub fn empty() -> Self {
        Self { ids: Vec::new(), sorted: Vec::new(), volume: 0 }
    }

    pub fn all(g: &Graph) -> Self {
        let ids: Vec<VertexId> = g.vertices().collect();
        Self { sorted: ids.clone(), ids, volume: g.total_volume() }
    }

    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn volume(&self) -> u64 {
        self.volume
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.sorted.binary_search(&v).is_ok()
    }

    /// Vertices of `g` not in this set, ascending.
    pub fn complement(&self, g: &Graph) -> Self {
        let ids: Vec<VertexId> = g.vertices().filter(|&v| !self.contains(v)).collect();
        let volume = g.total_volume() - self.volume;
        Self { sorted: ids.clone(), ids, volume }
    }
}
