//! Walk generation: stitching, budgeting, multi-source runs and the uniform baseline.

mod baseline;
mod budget;
mod budgeted;
mod multi;
mod params;
mod stitch;
mod store;
mod walks;

pub use baseline::{uniform_stitching, BaselineRun};
pub use budget::{ceil_budget, update_budgets, BudgetTable, BudgetUpdate};
pub use budgeted::{run_budgeted, run_budgeted_roots, BudgetedRun, CycleMetrics, CycleTrace, RunMetrics, RunOptions};
pub use multi::{dyadic_decompose, run_multi_source, DyadicGroup, MultiSourceRun};
pub use params::{FailPolicy, Laziness, Mode, StitchParams};
pub use stitch::{stitch, FailedWalk, FailureLog, PhaseStats, StitchOutput};
pub use store::{init_walks, WalkStore};
pub use walks::{is_valid_walk, write_walk_line, WalkBatch, WalkStatus};

use thiserror::Error;

use crate::graph::{GraphError, VertexId};
use crate::mpc::MpcError;

/// Words for a request `(v, k, segment-id)`.
pub const REQUEST_WORDS: u32 = 3;
/// Extra words a reply carries on top of the segment (requester segment-id).
pub const REPLY_OVERHEAD_WORDS: u32 = 1;
/// Words for one `(v, k, κ)` tally sent during a budget update.
pub const TALLY_WORDS: u32 = 3;

/// Words to ship a segment of `steps` edges: its `steps + 1` vertices, first label and cycle tag.
pub fn segment_words(steps: usize) -> u32 {
    steps as u32 + 3
}

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("vertex {0} is isolated and cannot root walks")]
    IsolatedRoot(VertexId),
    #[error("isolated vertex {v} has positive budget at label {k}")]
    IsolatedBudget { v: VertexId, k: usize },
    #[error("stitching failed{}: vertex {vertex} ran out of segments{} in phase {phase} (deficit {deficit})",
        cycle.map(|c| format!(" in cycle {c}")).unwrap_or_default(),
        label.map(|k| format!(" with first label {k}")).unwrap_or_default())]
    StitchFailed { cycle: Option<u32>, vertex: VertexId, label: Option<usize>, phase: u32, deficit: u64 },
    #[error("budget update needs at least one rooted walk")]
    EmptyWalkSet,
    #[error("budget vector has {got} entries, graph has {expected} vertices")]
    BudgetLength { got: usize, expected: usize },
    #[error(transparent)]
    Mpc(#[from] MpcError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl WalkError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        WalkError::InvalidParam { name, reason: reason.into() }
    }

    pub(crate) fn in_cycle(self, cycle: u32) -> Self {
        match self {
            WalkError::StitchFailed { vertex, label, phase, deficit, .. } => {
                WalkError::StitchFailed { cycle: Some(cycle), vertex, label, phase, deficit }
            }
            other => other,
        }
    }
}
