use crate::graph::{Graph, VertexId};
use crate::mpc::{Cluster, ClusterConfig};
use crate::rng::Substreams;

use super::{stitch, BudgetTable, CycleMetrics, RunMetrics, StitchOutput, StitchParams, WalkBatch, WalkError};

#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub table: BudgetTable,
    pub output: StitchOutput,
    pub metrics: RunMetrics,
}

impl BaselineRun {
    pub fn walks_from(&self, v: VertexId) -> WalkBatch {
        self.output.walks_from(v)
    }
}

/// One stitch with stationary-proportional budgets `⌈b0_per_degree·deg(v)·mult(k)⌉` everywhere.
///
/// Uses `ell`, `tau`, mode, laziness and failure policy from `params`; its `b0` is ignored.
pub fn uniform_stitching(
    g: &Graph,
    b0_per_degree: f64,
    params: &StitchParams,
    config: &ClusterConfig,
    streams: &Substreams,
) -> Result<BaselineRun, WalkError> {
    if !(b0_per_degree >= 1.0 && b0_per_degree.is_finite()) {
        return Err(WalkError::param("b0_per_degree", format!("must be at least 1, got {b0_per_degree}")));
    }
    let table = BudgetTable::proportional(g, params, b0_per_degree);
    let mut cluster = Cluster::new(config.clone());
    let output = stitch(g, &table, params, &mut cluster, streams, 1)?;
    let root_budget: u64 = g.vertices().map(|v| table.get(v, 1)).sum();
    let rooted_walks = root_budget - output.failures.rooted.iter().sum::<u64>();
    let cycle = CycleMetrics {
        cycle: 1,
        total_budget: output.total_budget,
        root_budget,
        rooted_walks,
        rooted_failures: root_budget - rooted_walks,
        failed_requests: output.failures.total,
        phases: output.phases.clone(),
    };
    let metrics = RunMetrics::from_parts(cluster.ledger(), 0, vec![cycle]);
    Ok(BaselineRun { table, output, metrics })
}
