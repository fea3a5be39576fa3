//! Sparse non-negative vectors over vertices.

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::graph::{Graph, VertexId};

/// Sparse map vertex -> non-negative score with its total mass cached.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreVector {
    entries: BTreeMap<VertexId, f64>,
    mass: f64,
}

impl ScoreVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// `χ_v`.
    pub fn indicator(v: VertexId) -> Self {
        let mut s = Self::new();
        s.set(v, 1.0);
        s
    }

    /// Keeps the strictly positive entries of a dense vector.
    pub fn from_dense(values: &[f64]) -> Self {
        let mut s = Self::new();
        for (v, &x) in values.iter().enumerate() {
            if x > 0.0 {
                s.set(v as VertexId, x);
            }
        }
        s
    }

    pub fn get(&self, v: VertexId) -> f64 {
        self.entries.get(&v).copied().unwrap_or(0.0)
    }

    /// Sets an entry; zero removes it from the support.
    pub fn set(&mut self, v: VertexId, x: f64) {
        assert!(x.is_finite() && x >= 0.0, "score entries must be finite and non-negative, got {x}");
        let old = if x == 0.0 { self.entries.remove(&v) } else { self.entries.insert(v, x) };
        self.mass += x - old.unwrap_or(0.0);
    }

    pub fn add(&mut self, v: VertexId, x: f64) {
        let cur = self.get(v);
        self.set(v, cur + x);
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Number of vertices with a positive entry.
    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in ascending vertex order.
    pub fn iter(&self) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        self.entries.iter().map(|(&v, &x)| (v, x))
    }

    pub fn support(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.entries.keys().copied()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = Self::new();
        for (v, x) in self.iter() {
            out.set(v, x * c);
        }
        out
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (v, x) in self.iter() {
            out[v as usize] = x;
        }
        out
    }

    /// CSV `vertex,score` with the graph's original vertex ids.
    pub fn write_csv<W: Write>(&self, g: &Graph, mut w: W) -> io::Result<()> {
        writeln!(w, "vertex,score")?;
        for (v, x) in self.iter() {
            writeln!(w, "{},{}", g.original_id(v), x)?;
        }
        Ok(())
    }
}
