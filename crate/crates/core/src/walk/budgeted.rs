use serde::Serialize;

use crate::graph::{Graph, VertexId};
use crate::mpc::{Cluster, ClusterConfig, Outbox, RoundKind, RoundLedger, Violation};
use crate::rng::Substreams;

use super::{
    stitch, update_budgets, BudgetTable, FailedWalk, PhaseStats, StitchParams, WalkBatch, WalkError, TALLY_WORDS,
};

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Keep every cycle's budget table (needed for envelope checks; costly on big graphs).
    pub record_trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleMetrics {
    pub cycle: u32,
    pub total_budget: u64,
    /// `Σ_r B(r,1)` over the roots.
    pub root_budget: u64,
    pub rooted_walks: u64,
    pub rooted_failures: u64,
    pub failed_requests: u64,
    pub phases: Vec<PhaseStats>,
}

/// Budgets a stitch ran with, and how they were obtained.
#[derive(Debug, Clone)]
pub struct CycleTrace {
    pub cycle: u32,
    pub table: BudgetTable,
    /// `λ^i` of the update that produced `table`; `None` for the initial budgets.
    pub growth: Option<f64>,
    /// Entries set by the estimator branch (all false for the initial budgets).
    pub estimated: Vec<bool>,
}

impl CycleTrace {
    pub fn is_estimated(&self, v: VertexId, k: usize) -> bool {
        self.estimated[v as usize * self.table.ell() + k - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub supersteps: usize,
    pub model_rounds: usize,
    pub max_machine_words: u64,
    pub violations: Vec<Violation>,
    /// `Σ_{v,k} B(v,k)` summed over all stitches.
    pub total_budget: u64,
    /// Largest single-stitch budget.
    pub peak_budget: u64,
    pub calibration_cycles: u32,
    pub rooted_walks: u64,
    /// Fraction of the final stitch's rooted walks that failed.
    pub failure_rate: Option<f64>,
    pub cycles: Vec<CycleMetrics>,
}

impl RunMetrics {
    pub(crate) fn from_parts(ledger: &RoundLedger, calibration_cycles: u32, cycles: Vec<CycleMetrics>) -> Self {
        let last = cycles.last();
        let failure_rate = last.filter(|c| c.root_budget > 0).map(|c| c.rooted_failures as f64 / c.root_budget as f64);
        Self {
            supersteps: ledger.superstep_count(),
            model_rounds: ledger.model_rounds(),
            max_machine_words: ledger.max_machine_words(),
            violations: ledger.violations().to_vec(),
            total_budget: cycles.iter().map(|c| c.total_budget).sum(),
            peak_budget: cycles.iter().map(|c| c.total_budget).max().unwrap_or(0),
            calibration_cycles,
            rooted_walks: last.map_or(0, |c| c.rooted_walks),
            failure_rate,
            cycles,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BudgetedRun {
    pub roots: Vec<VertexId>,
    /// Final-stitch walks, one batch per root.
    pub walks: Vec<WalkBatch>,
    /// Final-stitch label-1 failures at the roots.
    pub failed: Vec<FailedWalk>,
    pub metrics: RunMetrics,
    pub ledger: RoundLedger,
    pub trace: Vec<CycleTrace>,
}

impl BudgetedRun {
    /// Walks of the first root.
    pub fn root_walks(&self) -> &WalkBatch {
        &self.walks[0]
    }

    /// Tag of the final stitch in walk files.
    pub fn final_cycle(&self) -> u32 {
        self.metrics.calibration_cycles + 1
    }
}

/// Budgeted generation of `B*` walks of length `ℓ` from `root`.
pub fn run_budgeted(
    g: &Graph,
    root: VertexId,
    params: &StitchParams,
    config: &ClusterConfig,
    streams: &Substreams,
    options: RunOptions,
) -> Result<BudgetedRun, WalkError> {
    run_budgeted_roots(g, &[root], params, config, streams, options)
}

/// Equal-budget multi-root variant: the rooted walks of all roots are pooled
/// for the budget update and the estimate is scaled by `|R|`.
///
/// Stitch `i` (1-based) is followed by an update with growth `λ^i`, except the
/// last calibration cycle, which uses `λ^⌈log_λ B*⌉`. Stitch `c+1` is final.
pub fn run_budgeted_roots(
    g: &Graph,
    roots: &[VertexId],
    params: &StitchParams,
    config: &ClusterConfig,
    streams: &Substreams,
    options: RunOptions,
) -> Result<BudgetedRun, WalkError> {
    params.validate()?;
    if roots.is_empty() {
        return Err(WalkError::param("roots", "need at least one root"));
    }
    for &r in roots {
        g.check_vertex(r)?;
        if g.degree(r) == 0 {
            return Err(WalkError::IsolatedRoot(r));
        }
    }
    let mut sorted = roots.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(WalkError::param("roots", "roots must be distinct"));
    }

    let calibration = params.calibration_cycles();
    let mut cluster = Cluster::new(config.clone());
    let mut table = BudgetTable::initial(g, params);
    let mut trace = Vec::new();
    let mut cycles = Vec::with_capacity(calibration as usize + 1);
    let mut growth = None;
    let mut estimated = vec![false; g.n() * params.ell];

    for cycle in 1..=calibration + 1 {
        if options.record_trace {
            trace.push(CycleTrace { cycle, table: table.clone(), growth, estimated: estimated.clone() });
        }
        let out = stitch(g, &table, params, &mut cluster, streams, cycle).map_err(|e| e.in_cycle(cycle))?;
        let walks: Vec<WalkBatch> = roots.iter().map(|&r| out.walks_from(r)).collect();
        cycles.push(CycleMetrics {
            cycle,
            total_budget: out.total_budget,
            root_budget: roots.iter().map(|&r| table.get(r, 1)).sum(),
            rooted_walks: walks.iter().map(|w| w.len() as u64).sum(),
            rooted_failures: roots.iter().map(|&r| out.failures.rooted[r as usize]).sum(),
            failed_requests: out.failures.total,
            phases: out.phases.clone(),
        });
        if cycle == calibration + 1 {
            let failed = out.failures.walks.into_iter().filter(|f| roots.contains(&f.root)).collect();
            let ledger = cluster.into_ledger();
            let metrics = RunMetrics::from_parts(&ledger, calibration, cycles);
            return Ok(BudgetedRun { roots: roots.to_vec(), walks, failed, metrics, ledger, trace });
        }

        let exponent = if cycle == calibration { params.final_exponent() } else { cycle };
        let lambda_i = params.lambda.powi(exponent as i32);
        let mut pooled = WalkBatch::new(params.ell, params.lazy());
        for w in &walks {
            pooled.append(w);
        }
        send_tallies(g, roots, &walks, params.ell, &mut cluster)?;
        let update = update_budgets(g, &pooled, roots, lambda_i, params).map_err(|e| e.in_cycle(cycle))?;
        table = update.table;
        estimated = update.estimated;
        growth = Some(lambda_i);
    }
    unreachable!("the final stitch returns")
}

/// The budget-update round: each root tells every `(v, k)` its visit count `κ`.
fn send_tallies(
    g: &Graph,
    roots: &[VertexId],
    walks: &[WalkBatch],
    ell: usize,
    cluster: &mut Cluster,
) -> Result<(), WalkError> {
    let mut outbox = Outbox::new(g.n());
    let mut counts = vec![0u64; g.n() * ell];
    let mut touched = Vec::new();
    for (&r, batch) in roots.iter().zip(walks) {
        for w in batch.iter() {
            for (i, &v) in w[..ell].iter().enumerate() {
                let idx = v as usize * ell + i;
                if counts[idx] == 0 {
                    touched.push(idx);
                }
                counts[idx] += 1;
            }
        }
        touched.sort_unstable();
        for &idx in &touched {
            let v = (idx / ell) as VertexId;
            outbox.send(r, v, TALLY_WORDS, (idx % ell + 1, counts[idx]));
            counts[idx] = 0;
        }
        touched.clear();
    }
    cluster.exchange(RoundKind::BudgetUpdate, outbox)?;
    Ok(())
}
