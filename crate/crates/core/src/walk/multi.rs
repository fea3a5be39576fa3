use serde::Serialize;

use crate::graph::{Graph, VertexId};
use crate::mpc::{ClusterConfig, RoundLedger, Violation};
use crate::rng::Substreams;

use super::{run_budgeted_roots, RunMetrics, RunOptions, StitchParams, WalkBatch, WalkError};

/// Roots whose requested counts share `⌊log2 b⌋`, all run with the group maximum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DyadicGroup {
    pub level: u32,
    pub members: Vec<VertexId>,
    pub budget: u64,
}

/// Splits per-vertex walk counts into dyadic groups, lowest level first.
pub fn dyadic_decompose(b: &[u64]) -> Vec<DyadicGroup> {
    let mut groups: Vec<DyadicGroup> = Vec::new();
    let mut by_level: Vec<Option<usize>> = vec![None; 64];
    for (v, &x) in b.iter().enumerate() {
        if x == 0 {
            continue;
        }
        let level = x.ilog2();
        let gi = *by_level[level as usize].get_or_insert_with(|| {
            groups.push(DyadicGroup { level, members: Vec::new(), budget: 0 });
            groups.len() - 1
        });
        groups[gi].members.push(v as VertexId);
        groups[gi].budget = groups[gi].budget.max(x);
    }
    groups.sort_by_key(|g| g.level);
    groups
}

#[derive(Debug, Clone)]
pub struct MultiSourceRun {
    pub groups: Vec<DyadicGroup>,
    /// `(u, walks)` for every `u` with `b_u > 0`, ascending by vertex; each list holds at most `b_u` walks.
    pub walks: Vec<(VertexId, WalkBatch)>,
    /// `(u, b_u − |walks_u|)` for the roots that came up short.
    pub shortfall: Vec<(VertexId, u64)>,
    pub group_metrics: Vec<RunMetrics>,
    pub metrics: MultiSourceMetrics,
    pub ledgers: Vec<RoundLedger>,
}

impl MultiSourceRun {
    pub fn walks_of(&self, u: VertexId) -> Option<&WalkBatch> {
        self.walks.binary_search_by_key(&u, |(v, _)| *v).ok().map(|i| &self.walks[i].1)
    }
}

/// Groups execute side by side: rounds are the maximum over groups, memory the sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiSourceMetrics {
    pub supersteps: usize,
    pub model_rounds: usize,
    pub max_machine_words: u64,
    pub violations: Vec<Violation>,
    pub total_budget: u64,
    pub peak_budget: u64,
    pub rooted_walks: u64,
    pub failure_rate: Option<f64>,
}

/// `b_u` walks of length `ℓ` from every vertex `u`.
pub fn run_multi_source(
    g: &Graph,
    b: &[u64],
    params: &StitchParams,
    config: &ClusterConfig,
    streams: &Substreams,
) -> Result<MultiSourceRun, WalkError> {
    if b.len() != g.n() {
        return Err(WalkError::BudgetLength { got: b.len(), expected: g.n() });
    }
    for (u, &x) in b.iter().enumerate() {
        if x > 0 && g.degree(u as VertexId) == 0 {
            return Err(WalkError::IsolatedRoot(u as VertexId));
        }
    }
    let groups = dyadic_decompose(b);
    if groups.is_empty() {
        return Err(WalkError::param("b", "all requested walk counts are zero"));
    }
    let mut walks = Vec::new();
    let mut group_metrics = Vec::new();
    let mut ledgers = Vec::new();
    let (mut root_budget, mut root_failures) = (0u64, 0u64);
    for (gi, group) in groups.iter().enumerate() {
        let s = if gi == 0 { *streams } else { streams.fork(gi as u64) };
        let p = params.clone().with_target(group.budget);
        let run = run_budgeted_roots(g, &group.members, &p, config, &s, RunOptions::default())?;
        if let Some(last) = run.metrics.cycles.last() {
            root_budget += last.root_budget;
            root_failures += last.rooted_failures;
        }
        for (&u, mut batch) in group.members.iter().zip(run.walks) {
            batch.truncate(b[u as usize] as usize);
            walks.push((u, batch));
        }
        group_metrics.push(run.metrics);
        ledgers.push(run.ledger);
    }
    walks.sort_by_key(|(u, _)| *u);
    let shortfall = walks
        .iter()
        .filter_map(|(u, w)| {
            let want = b[*u as usize];
            (want > w.len() as u64).then(|| (*u, want - w.len() as u64))
        })
        .collect();
    let metrics = MultiSourceMetrics {
        supersteps: group_metrics.iter().map(|m| m.supersteps).max().unwrap_or(0),
        model_rounds: group_metrics.iter().map(|m| m.model_rounds).max().unwrap_or(0),
        max_machine_words: group_metrics.iter().map(|m| m.max_machine_words).sum(),
        violations: group_metrics.iter().flat_map(|m| m.violations.iter().copied()).collect(),
        total_budget: group_metrics.iter().map(|m| m.total_budget).sum(),
        peak_budget: group_metrics.iter().map(|m| m.peak_budget).sum(),
        rooted_walks: walks.iter().map(|(_, w)| w.len() as u64).sum(),
        failure_rate: (root_budget > 0).then(|| root_failures as f64 / root_budget as f64),
    };
    Ok(MultiSourceRun { groups, walks, shortfall, group_metrics, metrics, ledgers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::walk::{run_budgeted, FailPolicy};
    use proptest::prelude::*;

    #[test]
    fn decomposition_examples() {
        assert_eq!(dyadic_decompose(&[5, 0, 0]), vec![DyadicGroup { level: 2, members: vec![0], budget: 5 }]);
        assert_eq!(
            dyadic_decompose(&[1, 1, 2, 7]),
            vec![
                DyadicGroup { level: 0, members: vec![0, 1], budget: 1 },
                DyadicGroup { level: 1, members: vec![2], budget: 2 },
                DyadicGroup { level: 2, members: vec![3], budget: 7 },
            ]
        );
        assert_eq!(dyadic_decompose(&[0, 0, 9, 0]).len(), 1);
    }

    proptest! {
        #[test]
        fn decomposition_covers_and_stays_within_factor_two(b in proptest::collection::vec(0u64..5000, 1..40)) {
            let total: u64 = b.iter().sum();
            prop_assume!(total > 0);
            let groups = dyadic_decompose(&b);
            let bound = 64 - total.leading_zeros();
            prop_assert!(groups.len() as u32 <= bound);
            let mut covered: Vec<VertexId> = groups.iter().flat_map(|g| g.members.iter().copied()).collect();
            covered.sort_unstable();
            let positive: Vec<VertexId> = (0..b.len() as VertexId).filter(|&u| b[u as usize] > 0).collect();
            prop_assert_eq!(covered, positive);
            for g in &groups {
                let lo = g.members.iter().map(|&u| b[u as usize]).min().unwrap();
                prop_assert!(g.budget < 2 * lo);
                prop_assert!(g.members.iter().all(|&u| b[u as usize] <= g.budget));
            }
        }
    }

    fn params() -> StitchParams {
        StitchParams::custom(4, 10.0, 20.0, 10.0, 1.2).unwrap().with_fail_policy(FailPolicy::Tolerate)
    }

    #[test]
    fn single_root_matches_run_budgeted() {
        let g = fixtures::cycle(8);
        let mut b = vec![0; 8];
        b[2] = 300;
        let s = Substreams::new(17);
        let cfg = ClusterConfig::default();
        let multi = run_multi_source(&g, &b, &params(), &cfg, &s).unwrap();
        let mut single = run_budgeted(&g, 2, &params().with_target(300), &cfg, &s, RunOptions::default()).unwrap();
        single.walks[0].truncate(300);
        assert_eq!(multi.walks_of(2), Some(&single.walks[0]));
        assert_eq!(multi.metrics.supersteps, single.metrics.supersteps);
    }

    #[test]
    fn components_keep_their_walks() {
        let g = fixtures::disjoint_union(&fixtures::cycle(5), &fixtures::complete(4));
        let mut b = vec![0; g.n()];
        b[0] = 100;
        b[6] = 100;
        let run = run_multi_source(&g, &b, &params(), &ClusterConfig::default(), &Substreams::new(2)).unwrap();
        assert_eq!(run.groups.len(), 1);
        assert!(run.walks_of(0).unwrap().iter().all(|w| w.iter().all(|&v| v < 5)));
        assert!(run.walks_of(6).unwrap().iter().all(|w| w.iter().all(|&v| v >= 5)));
    }

    #[test]
    fn length_mismatch_rejected() {
        let g = fixtures::cycle(4);
        let r = run_multi_source(&g, &[1, 2], &params(), &ClusterConfig::default(), &Substreams::new(0));
        assert!(matches!(r, Err(WalkError::BudgetLength { got: 2, expected: 4 })));
    }
}
