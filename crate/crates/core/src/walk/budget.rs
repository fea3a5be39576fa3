use std::io::{self, Write};

use crate::graph::{Graph, VertexId};

use super::{StitchParams, WalkBatch, WalkError};

/// Rounds a real-valued budget up to an integer, ignoring float noise below one part in 10¹².
pub fn ceil_budget(x: f64) -> u64 {
    debug_assert!(x >= 0.0);
    let slack = 1e-12 * x.abs().max(1.0);
    (x - slack).ceil().max(0.0) as u64
}

/// Dense `(v, k) -> B(v, k)` table, `k` in `1..=ell`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetTable {
    n: usize,
    ell: usize,
    data: Vec<u64>,
}

impl BudgetTable {
    pub fn zeros(n: usize, ell: usize) -> Self {
        Self { n, ell, data: vec![0; n * ell] }
    }

    /// `B(v,k) = ⌈b0_per_degree · deg(v) · mult(k)⌉`.
    pub fn proportional(g: &Graph, params: &StitchParams, b0_per_degree: f64) -> Self {
        let mut t = Self::zeros(g.n(), params.ell);
        for v in g.vertices() {
            let base = b0_per_degree * g.degree(v) as f64;
            for k in 1..=params.ell {
                t.set(v, k, ceil_budget(base * params.multiplier(k)));
            }
        }
        t
    }

    /// Budgets before the first cycle: `B₀·deg(v)·mult(k)`.
    pub fn initial(g: &Graph, params: &StitchParams) -> Self {
        Self::proportional(g, params, params.b0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    #[inline]
    pub fn get(&self, v: VertexId, k: usize) -> u64 {
        self.data[v as usize * self.ell + k - 1]
    }

    #[inline]
    pub fn set(&mut self, v: VertexId, k: usize, b: u64) {
        self.data[v as usize * self.ell + k - 1] = b;
    }

    pub fn row(&self, v: VertexId) -> &[u64] {
        let s = v as usize * self.ell;
        &self.data[s..s + self.ell]
    }

    pub fn vertex_total(&self, v: VertexId) -> u64 {
        self.row(v).iter().sum()
    }

    /// `Σ_{v,k} B(v,k)`.
    pub fn total(&self) -> u64 {
        self.data.iter().sum()
    }

    /// Budgets must be zero on isolated vertices.
    pub fn check_against(&self, g: &Graph) -> Result<(), WalkError> {
        for v in g.vertices() {
            if g.degree(v) == 0 {
                if let Some(k) = self.row(v).iter().position(|&b| b > 0) {
                    return Err(WalkError::IsolatedBudget { v, k: k + 1 });
                }
            }
        }
        Ok(())
    }

    /// CSV dump `v,k,B` with original vertex ids; zero entries omitted.
    pub fn write_csv<W: Write>(&self, g: &Graph, mut w: W) -> io::Result<()> {
        writeln!(w, "v,k,B")?;
        for v in g.vertices() {
            for (i, &b) in self.row(v).iter().enumerate() {
                if b > 0 {
                    writeln!(w, "{},{},{}", g.original_id(v), i + 1, b)?;
                }
            }
        }
        Ok(())
    }
}

/// Result of one budget update.
#[derive(Debug, Clone)]
pub struct BudgetUpdate {
    pub table: BudgetTable,
    /// `κ(v, k)`, same layout as the table.
    pub kappa: Vec<u64>,
    /// Entries set from the empirical estimate (`κ ≥ θ`, or a root's own first label).
    pub estimated: Vec<bool>,
    /// `|W|`.
    pub rooted: u64,
    /// The `λ^i` factor used.
    pub growth: f64,
}

impl BudgetUpdate {
    pub fn kappa(&self, v: VertexId, k: usize) -> u64 {
        self.kappa[v as usize * self.table.ell + k - 1]
    }

    pub fn is_estimated(&self, v: VertexId, k: usize) -> bool {
        self.estimated[v as usize * self.table.ell + k - 1]
    }
}

/// Resets budgets from the rooted walks of the previous stitch.
///
/// `κ(v,k)` counts walks whose `k`-th vertex (after `k-1` steps) is `v`. Entries with
/// `κ ≥ θ` get `(B₀(v) + |R|·growth·κ/|W|)·mult(k)`, the rest `B₀(v)·mult(k)`.
/// A root's label-1 entry always takes the first form: there `κ/|W|` is the
/// root's share of the rooted walks, so the root keeps growing by `growth`.
pub fn update_budgets(
    g: &Graph,
    walks: &WalkBatch,
    roots: &[VertexId],
    growth: f64,
    params: &StitchParams,
) -> Result<BudgetUpdate, WalkError> {
    if walks.is_empty() {
        return Err(WalkError::EmptyWalkSet);
    }
    let ell = params.ell;
    if walks.ell() < ell {
        return Err(WalkError::param("walks", format!("walks of length {} shorter than ell={ell}", walks.ell())));
    }
    let n = g.n();
    let mut kappa = vec![0u64; n * ell];
    for w in walks.iter() {
        for (i, &v) in w[..ell].iter().enumerate() {
            kappa[v as usize * ell + i] += 1;
        }
    }
    let rooted = walks.len() as u64;
    let mut table = BudgetTable::zeros(n, ell);
    let mut estimated = vec![false; n * ell];
    let mut is_root = vec![false; n];
    for &r in roots {
        is_root[r as usize] = true;
    }
    let root_factor = roots.len().max(1) as f64 * growth / rooted as f64;
    for v in g.vertices() {
        let base = params.b0 * g.degree(v) as f64;
        for k in 1..=ell {
            let idx = v as usize * ell + k - 1;
            let kap = kappa[idx];
            let trusted = kap as f64 >= params.theta || (k == 1 && is_root[v as usize]);
            let raw = if trusted && kap > 0 {
                estimated[idx] = true;
                base + root_factor * kap as f64
            } else {
                base
            };
            table.data[idx] = ceil_budget(raw * params.multiplier(k));
        }
    }
    Ok(BudgetUpdate { table, kappa, estimated, rooted, growth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::walk::Mode;

    fn params(theta: f64, b0: f64, tau: f64) -> StitchParams {
        StitchParams::custom(2, 10.0, theta, b0, tau).unwrap()
    }

    #[test]
    fn ceil_ignores_float_noise() {
        assert_eq!(ceil_budget(0.1 * 30.0), 3);
        assert_eq!(ceil_budget(3.2), 4);
        assert_eq!(ceil_budget(0.0), 0);
        assert_eq!(ceil_budget(1e-20), 0);
        assert_eq!(ceil_budget(1.000001), 2);
    }

    #[test]
    fn initial_budgets_follow_degree() {
        let g = fixtures::path(3);
        let p = params(1.0, 3.0, 2.0);
        let t = BudgetTable::initial(&g, &p);
        assert_eq!(t.row(0), &[3, 24]);
        assert_eq!(t.row(1), &[6, 48]);
        assert_eq!(t.total(), 3 + 24 + 6 + 48 + 3 + 24);
        let t = BudgetTable::initial(&g, &p.with_mode(Mode::Practical));
        assert_eq!(t.row(1), &[6, 12]);
    }

    #[test]
    fn isolated_vertices_get_nothing() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let t = BudgetTable::initial(&g, &params(1.0, 5.0, 1.0));
        assert_eq!(t.vertex_total(2), 0);
        t.check_against(&g).unwrap();
        let mut bad = t.clone();
        bad.set(2, 2, 1);
        assert!(matches!(bad.check_against(&g), Err(WalkError::IsolatedBudget { v: 2, k: 2 })));
    }

    #[test]
    fn root_law_and_else_branch() {
        let g = fixtures::cycle(4);
        let p = params(1e9, 2.5, 1.5);
        let mut w = WalkBatch::new(2, false);
        for _ in 0..7 {
            w.push(&[0, 1, 2]);
        }
        let u = update_budgets(&g, &w, &[0], 1000.0, &p).unwrap();
        assert_eq!(u.table.get(0, 1), (5.0f64 + 1000.0).ceil() as u64);
        assert!(u.is_estimated(0, 1));
        // κ(1,2) = 7 < θ: base only.
        assert_eq!(u.table.get(1, 2), ceil_budget(5.0 * 1.5f64.powi(3)));
        assert!(!u.is_estimated(1, 2));
        assert_eq!(u.kappa(1, 2), 7);
        assert_eq!(u.table.get(3, 2), ceil_budget(5.0 * 1.5f64.powi(3)));
    }

    #[test]
    fn estimator_branch_arithmetic() {
        // θ=10, κ=20, |W|=100, λ^i=1000, B₀(v)=5, k=1 → ⌈5 + 1000·0.2⌉ = 205.
        let g = fixtures::star(5);
        let p = params(10.0, 1.0, 1.0);
        let mut w = WalkBatch::new(2, false);
        for i in 0..100 {
            if i < 20 {
                w.push(&[0, 1, 0]);
            } else {
                w.push(&[1, 0, 1]);
            }
        }
        let u = update_budgets(&g, &w, &[], 1000.0, &p).unwrap();
        assert_eq!(u.kappa(0, 1), 20);
        assert_eq!(u.table.get(0, 1), 205);
    }

    #[test]
    fn multi_root_scaling() {
        let g = fixtures::cycle(6);
        let p = params(1.0, 0.0, 1.0);
        let mut w = WalkBatch::new(2, false);
        w.push(&[0, 1, 2]);
        w.push(&[3, 4, 5]);
        let u = update_budgets(&g, &w, &[0, 3], 100.0, &p).unwrap();
        // Each root holds half the walks, times |R| = 2.
        assert_eq!(u.table.get(0, 1), 100);
        assert_eq!(u.table.get(3, 1), 100);
        assert_eq!(u.table.get(4, 2), 100);
    }

    #[test]
    fn empty_walks_rejected() {
        let g = fixtures::cycle(4);
        let w = WalkBatch::new(2, false);
        assert!(matches!(update_budgets(&g, &w, &[0], 10.0, &params(1.0, 1.0, 1.0)), Err(WalkError::EmptyWalkSet)));
    }

    #[test]
    fn csv_dump() {
        let g = fixtures::path(2);
        let t = BudgetTable::initial(&g, &params(1.0, 1.0, 1.0));
        let mut out = Vec::new();
        t.write_csv(&g, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "v,k,B\n0,1,1\n0,2,1\n1,1,1\n1,2,1\n");
    }
}
