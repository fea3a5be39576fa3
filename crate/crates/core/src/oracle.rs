//! Exact sequential references for walk laws, PageRank and conductance.
//!
//! Everything here is dense and meant for small graphs (`n ≤ 10⁴`); the walk
//! enumerator and the brute-force cut search are far more limited.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};

use crate::graph::{Conductance, Graph, GraphError, VertexId, VertexSet};
use crate::score::ScoreVector;

/// Largest graph the dense routines accept.
pub const DENSE_LIMIT: usize = 10_000;
/// Longest walk `enumerate_walks` expands.
pub const ENUMERATE_MAX_LEN: usize = 8;
/// Largest graph `brute_conductance_min` searches.
pub const BRUTE_FORCE_LIMIT: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("graph has {n} vertices, oracle limit is {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("walk length {0} exceeds the enumeration limit {ENUMERATE_MAX_LEN}")]
    TooLong(usize),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("no subset has defined conductance")]
    NoProperSubset,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn check_dense(g: &Graph) -> Result<(), OracleError> {
    if g.n() > DENSE_LIMIT {
        return Err(OracleError::TooLarge { n: g.n(), limit: DENSE_LIMIT });
    }
    Ok(())
}

/// One application of `M = D⁻¹A` (or `½(I + D⁻¹A)`). Isolated vertices keep their mass.
pub fn step(g: &Graph, p: &[f64], lazy: bool) -> Vec<f64> {
    let mut next = vec![0.0; g.n()];
    for v in g.vertices() {
        let x = p[v as usize];
        if x == 0.0 {
            continue;
        }
        let nbrs = g.neighbors(v);
        if nbrs.is_empty() {
            next[v as usize] += x;
            continue;
        }
        let (stay, move_mass) = if lazy { (0.5 * x, 0.5 * x) } else { (0.0, x) };
        next[v as usize] += stay;
        let share = move_mass / nbrs.len() as f64;
        for &u in nbrs {
            next[u as usize] += share;
        }
    }
    next
}

/// `start · Mᵗ`.
pub fn exact_step_dist(g: &Graph, start: &ScoreVector, t: usize, lazy: bool) -> Result<Vec<f64>, OracleError> {
    check_dense(g)?;
    let mut p = start.to_dense(g.n());
    for _ in 0..t {
        p = step(g, &p, lazy);
    }
    Ok(p)
}

/// `[χ_r M⁰, χ_r M¹, …, χ_r M^t_max]`.
pub fn step_dists_from(g: &Graph, r: VertexId, t_max: usize, lazy: bool) -> Result<Vec<Vec<f64>>, OracleError> {
    check_dense(g)?;
    g.check_vertex(r)?;
    let mut out = Vec::with_capacity(t_max + 1);
    out.push(ScoreVector::indicator(r).to_dense(g.n()));
    for t in 0..t_max {
        let next = step(g, &out[t], lazy);
        out.push(next);
    }
    Ok(out)
}

fn check_alpha(alpha: f64) -> Result<(), OracleError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(OracleError::InvalidParam(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// `pr_α(s) = αs + αΣ_{t≥1}(1−α)^t sWᵗ` with lazy `W`, summed until the tail falls below `tol`.
pub fn exact_ppr(g: &Graph, s: &ScoreVector, alpha: f64, tol: f64) -> Result<Vec<f64>, OracleError> {
    check_dense(g)?;
    check_alpha(alpha)?;
    if !(tol > 0.0) {
        return Err(OracleError::InvalidParam(format!("tol must be positive, got {tol}")));
    }
    let mut p = s.to_dense(g.n());
    let mut out: Vec<f64> = p.iter().map(|x| alpha * x).collect();
    let mut weight = alpha;
    // Remaining mass after term t is (1−α)^{t+1}.
    while weight * (1.0 - alpha) / alpha > tol && alpha < 1.0 {
        weight *= 1.0 - alpha;
        p = step(g, &p, true);
        for (o, x) in out.iter_mut().zip(&p) {
            *o += weight * x;
        }
    }
    Ok(out)
}

/// `αχ_r + αΣ_{t=1}^{T}(1−α)^t χ_r Wᵗ` with exact lazy distributions.
pub fn truncated_ppr(g: &Graph, r: VertexId, alpha: f64, t_max: usize) -> Result<Vec<f64>, OracleError> {
    check_alpha(alpha)?;
    let dists = step_dists_from(g, r, t_max, true)?;
    let mut out = vec![0.0; g.n()];
    let mut weight = alpha;
    for (t, d) in dists.iter().enumerate() {
        if t > 0 {
            weight *= 1.0 - alpha;
        }
        for (o, x) in out.iter_mut().zip(d) {
            *o += weight * x;
        }
    }
    Ok(out)
}

/// `‖p − αs − (1−α)pW‖_∞` for lazy `W`.
pub fn ppr_residual(g: &Graph, p: &[f64], s: &ScoreVector, alpha: f64) -> f64 {
    let pw = step(g, p, true);
    let s = s.to_dense(g.n());
    p.iter().zip(&pw).zip(&s).map(|((x, y), z)| (x - alpha * z - (1.0 - alpha) * y).abs()).fold(0.0, f64::max)
}

/// `½ Σ |p − q|`; missing entries count as zero.
pub fn tvd(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..n).map(|i| (at(p, i) - at(q, i)).abs()).sum::<f64>()
}

/// Every length-`ell` walk from `r` with its exact probability.
pub fn enumerate_walks(
    g: &Graph,
    r: VertexId,
    ell: usize,
    lazy: bool,
) -> Result<BTreeMap<Vec<VertexId>, BigRational>, OracleError> {
    g.check_vertex(r)?;
    if ell > ENUMERATE_MAX_LEN {
        return Err(OracleError::TooLong(ell));
    }
    let mut frontier = vec![(vec![r], BigRational::one())];
    for _ in 0..ell {
        let mut next = Vec::new();
        for (path, prob) in frontier {
            let v = *path.last().expect("paths are non-empty");
            let nbrs = g.neighbors(v);
            if nbrs.is_empty() {
                let mut p = path.clone();
                p.push(v);
                next.push((p, prob));
                continue;
            }
            let d = BigInt::from(nbrs.len());
            let (stay, each) = if lazy {
                let half = BigRational::new(BigInt::one(), BigInt::from(2));
                (Some(&prob * &half), &prob * &half / BigRational::from_integer(d))
            } else {
                (None, &prob / BigRational::from_integer(d))
            };
            if let Some(stay) = stay {
                let mut p = path.clone();
                p.push(v);
                next.push((p, stay));
            }
            for &u in nbrs {
                let mut p = path.clone();
                p.push(u);
                next.push((p, each.clone()));
            }
        }
        frontier = next;
    }
    let mut out: BTreeMap<Vec<VertexId>, BigRational> = BTreeMap::new();
    for (path, prob) in frontier {
        *out.entry(path).or_insert_with(BigRational::zero) += prob;
    }
    Ok(out)
}

/// Conductance of every vertex subset, indexed by bitmask, from the definition.
/// Entries with undefined conductance are `None`.
pub fn subset_conductances_direct(g: &Graph) -> Result<Vec<Option<Ratio<u64>>>, OracleError> {
    check_brute(g)?;
    let n = g.n();
    let mut out = Vec::with_capacity(1 << n);
    for mask in 0u32..(1 << n) {
        let s = VertexSet::new(g, (0..n as VertexId).filter(|&v| mask >> v & 1 == 1))?;
        out.push(g.conductance(&s).ok().map(|c| c.value));
    }
    Ok(out)
}

/// Same table built along a Gray code, updating volume and boundary one vertex at a time.
pub fn subset_conductances_incremental(g: &Graph) -> Result<Vec<Option<Ratio<u64>>>, OracleError> {
    check_brute(g)?;
    let n = g.n();
    let total = g.total_volume();
    let mut out = vec![None; 1 << n];
    let mut inside = vec![false; n];
    let (mut volume, mut boundary) = (0u64, 0i64);
    let mut mask = 0u32;
    for i in 1u32..(1 << n) {
        let v = i.trailing_zeros() as VertexId;
        let d = g.degree(v) as i64;
        let links = g.neighbors(v).iter().filter(|&&u| inside[u as usize]).count() as i64;
        if inside[v as usize] {
            inside[v as usize] = false;
            volume -= d as u64;
            boundary -= d - 2 * links;
        } else {
            inside[v as usize] = true;
            volume += d as u64;
            boundary += d - 2 * links;
        }
        mask ^= 1 << v;
        out[mask as usize] = Conductance::new(boundary as u64, volume, total).ok().map(|c| c.value);
    }
    Ok(out)
}

fn check_brute(g: &Graph) -> Result<(), OracleError> {
    if g.n() > BRUTE_FORCE_LIMIT {
        return Err(OracleError::TooLarge { n: g.n(), limit: BRUTE_FORCE_LIMIT });
    }
    Ok(())
}

/// Minimum conductance over all subsets; ties go to the smallest bitmask.
pub fn brute_conductance_min(g: &Graph) -> Result<(VertexSet, Ratio<u64>), OracleError> {
    let table = subset_conductances_direct(g)?;
    let (mask, phi) = table
        .iter()
        .enumerate()
        .filter_map(|(m, c)| c.map(|c| (m, c)))
        .min_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))
        .ok_or(OracleError::NoProperSubset)?;
    let set = VertexSet::new(g, (0..g.n() as VertexId).filter(|&v| mask >> v & 1 == 1))?;
    Ok((set, phi))
}

/// Conductance of every prefix of `ordering`, each computed from scratch.
pub fn prefix_conductances_direct(g: &Graph, ordering: &[VertexId]) -> Result<Vec<Option<Ratio<u64>>>, OracleError> {
    (1..=ordering.len())
        .map(|j| {
            let s = VertexSet::new(g, ordering[..j].iter().copied())?;
            Ok(g.conductance(&s).ok().map(|c| c.value))
        })
        .collect()
}
