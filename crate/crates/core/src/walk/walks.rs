use std::io::{self, Write};

use crate::graph::{Graph, VertexId};

/// Fixed-length walks stored back to back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkBatch {
    ell: usize,
    lazy: bool,
    data: Vec<VertexId>,
}

impl WalkBatch {
    pub fn new(ell: usize, lazy: bool) -> Self {
        Self { ell, lazy, data: Vec::new() }
    }

    /// Number of steps per walk (each walk holds `ell + 1` vertices).
    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn lazy(&self) -> bool {
        self.lazy
    }

    pub fn len(&self) -> usize {
        self.data.len() / (self.ell + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn push(&mut self, walk: &[VertexId]) {
        assert_eq!(walk.len(), self.ell + 1, "walk has wrong length");
        self.data.extend_from_slice(walk);
    }

    pub fn get(&self, i: usize) -> &[VertexId] {
        let w = self.ell + 1;
        &self.data[i * w..(i + 1) * w]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[VertexId]> + '_ {
        self.data.chunks_exact(self.ell + 1)
    }

    pub fn truncate(&mut self, count: usize) {
        self.data.truncate(count * (self.ell + 1));
    }

    pub fn append(&mut self, other: &WalkBatch) {
        assert_eq!((self.ell, self.lazy), (other.ell, other.lazy));
        self.data.extend_from_slice(&other.data);
    }

    pub(crate) fn raw_mut(&mut self) -> &mut Vec<VertexId> {
        &mut self.data
    }
}

/// Consecutive vertices adjacent, or equal when the walk is lazy.
pub fn is_valid_walk(g: &Graph, walk: &[VertexId], lazy: bool) -> bool {
    walk.iter().all(|&v| (v as usize) < g.n())
        && walk.windows(2).all(|w| g.has_edge(w[0], w[1]) || (lazy && w[0] == w[1]))
}

/// Status column of the walk file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkStatus {
    Ok,
    /// The continuation with this first label could not be served.
    FailedAt(usize),
}

impl std::fmt::Display for WalkStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WalkStatus::Ok => write!(f, "ok"),
            WalkStatus::FailedAt(k) => write!(f, "failed@{k}"),
        }
    }
}

/// One line of the walk file: `root cycle status v0 v1 ... `, using original ids.
pub fn write_walk_line<W: Write>(
    w: &mut W,
    g: &Graph,
    root: VertexId,
    cycle: u32,
    status: WalkStatus,
    vertices: &[VertexId],
) -> io::Result<()> {
    write!(w, "{} {} {}", g.original_id(root), cycle, status)?;
    for &v in vertices {
        write!(w, " {}", g.original_id(v))?;
    }
    writeln!(w)
}
