use std::cmp::Ordering;

use num_rational::Ratio;
use serde::Serialize;

use crate::graph::{Conductance, Graph, VertexId};
use crate::score::ScoreVector;

use super::PprError;

/// Prefix conductances of a degree-normalised ordering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    /// Support vertices by `q(v)/d(v)` descending, ties by id ascending.
    pub ordering: Vec<VertexId>,
    /// `Φ(S_j)` for `j = 1..=|ordering|`; `None` where undefined.
    pub phi_list: Vec<Option<f64>>,
    /// 1-based index of the best prefix (earliest on ties).
    pub best_j: usize,
    pub best_set: Vec<VertexId>,
    pub phi: f64,
    #[serde(skip)]
    pub exact: Vec<Option<Conductance>>,
}

impl SweepResult {
    pub fn best(&self) -> Conductance {
        self.exact[self.best_j - 1].expect("best prefix has defined conductance")
    }

    pub fn exact_values(&self) -> Vec<Option<Ratio<u64>>> {
        self.exact.iter().map(|c| c.map(|c| c.value)).collect()
    }
}

fn by_normalised_score(g: &Graph, q: &ScoreVector) -> Vec<VertexId> {
    let key = |v: VertexId| {
        let d = g.degree(v);
        if d == 0 {
            f64::INFINITY
        } else {
            q.get(v) / d as f64
        }
    };
    let mut order: Vec<VertexId> = q.support().collect();
    order.sort_by(|&a, &b| key(b).partial_cmp(&key(a)).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    order
}

/// Sweep over `q`: prefix conductances with incremental boundary updates, in
/// `O(Vol(Supp(q)))` edge visits.
pub fn sweep(g: &Graph, q: &ScoreVector) -> Result<SweepResult, PprError> {
    if q.is_empty() {
        return Err(PprError::EmptySupport);
    }
    for v in q.support() {
        g.check_vertex(v)?;
    }
    let ordering = by_normalised_score(g, q);
    let total = g.total_volume();
    let mut inside = vec![false; g.n()];
    let (mut volume, mut boundary) = (0u64, 0u64);
    let mut exact = Vec::with_capacity(ordering.len());
    for &u in &ordering {
        let d = g.degree(u) as u64;
        let links = g.neighbors(u).iter().filter(|&&w| inside[w as usize]).count() as u64;
        inside[u as usize] = true;
        volume += d;
        boundary = boundary + d - 2 * links;
        exact.push(Conductance::new(boundary, volume, total).ok());
    }
    let (best_idx, best) = exact
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.map(|c| (i, c)))
        .min_by(|a, b| a.1.value.cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .ok_or(PprError::NoProperPrefix)?;
    Ok(SweepResult {
        best_set: ordering[..=best_idx].to_vec(),
        ordering,
        phi_list: exact.iter().map(|c| c.map(|c| c.as_f64())).collect(),
        best_j: best_idx + 1,
        phi: best.as_f64(),
        exact,
    })
}
