//! Personalized PageRank from rooted lazy walks, and sweep-cut clustering.
//!
//! The step-`t` empirical distributions are read off the `t`-th vertex of the
//! same length-`T` walks, so they share samples across `t`. Each one still has
//! the right marginal law.

mod cluster;
mod sweep;

pub use cluster::{local_cluster, local_cluster_doubling, ClusterOptions, LocalCluster};
pub use sweep::{sweep, SweepResult};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, GraphError, VertexId};
use crate::mpc::ClusterConfig;
use crate::rng::Substreams;
use crate::score::ScoreVector;
use crate::walk::{
    run_budgeted, BudgetedRun, FailPolicy, Laziness, Mode, RunOptions, StitchParams, WalkBatch, WalkError,
};

#[derive(Debug, Error)]
pub enum PprError {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("no walks supplied")]
    EmptyWalkSet,
    #[error("PageRank needs lazy walks")]
    NotLazy,
    #[error("walks have {got} steps, need at least {needed}")]
    WalkTooShort { got: usize, needed: usize },
    #[error("walk starts at {found}, expected root {root}")]
    WrongRoot { root: VertexId, found: VertexId },
    #[error("score vector has empty support")]
    EmptySupport,
    #[error("no sweep prefix has defined conductance")]
    NoProperPrefix,
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn param(name: &'static str, reason: impl Into<String>) -> PprError {
    PprError::InvalidParam { name, reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PprMode {
    Theory,
    Desk,
}

/// Teleport probability, accuracy target, truncation length `T` and sample count `M`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PprParams {
    pub alpha: f64,
    pub eta: f64,
    pub length: usize,
    pub samples: u64,
    pub mode: PprMode,
}

impl PprParams {
    /// `T = ⌈10 ln n / α⌉`, `M = ⌈10⁶ ln³ n / (η² α²)⌉`.
    pub fn theory(n: usize, alpha: f64, eta: f64) -> Result<Self, PprError> {
        check_alpha(alpha)?;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(param("eta", format!("must be positive, got {eta}")));
        }
        if n < 2 {
            return Err(param("n", "need at least 2 vertices"));
        }
        let ln_n = (n as f64).ln();
        let length = (10.0 * ln_n / alpha).ceil() as usize;
        let samples = (1e6 * ln_n.powi(3) / (eta * eta * alpha * alpha)).ceil();
        if samples >= u64::MAX as f64 {
            return Err(param("samples", "theory sample count overflows"));
        }
        Ok(Self { alpha, eta, length, samples: samples as u64, mode: PprMode::Theory })
    }

    /// Free `T` and `M`; `eta` is only recorded.
    pub fn desk(alpha: f64, length: usize, samples: u64, eta: f64) -> Result<Self, PprError> {
        check_alpha(alpha)?;
        if length == 0 {
            return Err(param("length", "T must be at least 1"));
        }
        if samples == 0 {
            return Err(param("samples", "M must be at least 1"));
        }
        Ok(Self { alpha, eta, length, samples, mode: PprMode::Desk })
    }

    /// `1 − (1−α)^{T+1}`.
    pub fn expected_mass(&self) -> f64 {
        1.0 - (1.0 - self.alpha).powi(self.length as i32 + 1)
    }
}

fn check_alpha(alpha: f64) -> Result<(), PprError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(param("alpha", format!("must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// Constants for the walk engine behind PPR; `ℓ`, `B*` and laziness are filled in from [`PprParams`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EngineConstants {
    Theory { lambda: f64, confidence: f64, scale: f64 },
    Desk { lambda: f64, theta: f64, b0: f64, tau: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineSpec {
    pub constants: EngineConstants,
    pub mode: Mode,
    pub fail_policy: FailPolicy,
}

impl EngineSpec {
    pub fn stitch_params(&self, n: usize, ell: usize, target: u64) -> Result<StitchParams, WalkError> {
        let p = match self.constants {
            EngineConstants::Theory { lambda, confidence, scale } => {
                StitchParams::theory(n, ell, lambda, confidence)?.with_scale(scale)?
            }
            EngineConstants::Desk { lambda, theta, b0, tau } => StitchParams::custom(ell, lambda, theta, b0, tau)?,
        };
        let p =
            p.with_target(target).with_laziness(Laziness::Half).with_mode(self.mode).with_fail_policy(self.fail_policy);
        p.validate()?;
        Ok(p)
    }
}

fn check_walks(walks: &WalkBatch, root: Option<VertexId>, length: usize) -> Result<(), PprError> {
    if walks.is_empty() {
        return Err(PprError::EmptyWalkSet);
    }
    if walks.ell() < length {
        return Err(PprError::WalkTooShort { got: walks.ell(), needed: length });
    }
    if let Some(root) = root {
        if let Some(w) = walks.iter().find(|w| w[0] != root) {
            return Err(PprError::WrongRoot { root, found: w[0] });
        }
    }
    Ok(())
}

/// Per-step visit counts `c_t(v)`, `t = 1..=T`, flattened `t-major`.
fn step_counts(n: usize, walks: &WalkBatch, length: usize) -> Vec<u64> {
    let mut counts = vec![0u64; length * n];
    for w in walks.iter() {
        for t in 1..=length {
            counts[(t - 1) * n + w[t] as usize] += 1;
        }
    }
    counts
}

/// `q̃_t(v) = #{walks whose t-th vertex is v} / M` for `t = 1..=T`.
pub fn empirical_step_distributions(g: &Graph, walks: &WalkBatch, length: usize) -> Result<Vec<ScoreVector>, PprError> {
    check_walks(walks, None, length)?;
    let n = g.n();
    let m = walks.len() as f64;
    let counts = step_counts(n, walks, length);
    Ok((0..length)
        .map(|t| {
            let mut q = ScoreVector::new();
            for (v, &c) in counts[t * n..(t + 1) * n].iter().enumerate() {
                if c > 0 {
                    q.set(v as VertexId, c as f64 / m);
                }
            }
            q
        })
        .collect())
}

/// A PPR estimate and the sample it came from.
#[derive(Debug, Clone)]
pub struct PprEstimate {
    pub scores: ScoreVector,
    /// Walks actually averaged (at most `M`).
    pub walks_used: u64,
    pub run: Option<BudgetedRun>,
}

/// `q̃ = αχ_r + αΣ_{t=1}^T (1−α)^t q̃_t` from the first `M` supplied walks.
pub fn approx_ppr_from_walks(
    g: &Graph,
    root: VertexId,
    params: &PprParams,
    walks: &WalkBatch,
) -> Result<ScoreVector, PprError> {
    g.check_vertex(root)?;
    if !walks.lazy() {
        return Err(PprError::NotLazy);
    }
    let mut used = walks.clone();
    used.truncate(params.samples as usize);
    check_walks(&used, Some(root), params.length)?;
    let n = g.n();
    let alpha = params.alpha;
    let m = used.len() as f64;
    let counts = step_counts(n, &used, params.length);
    let mut dense = vec![0.0; n];
    dense[root as usize] = alpha;
    let mut weight = alpha;
    for t in 0..params.length {
        weight *= 1.0 - alpha;
        if weight == 0.0 {
            break;
        }
        for (d, &c) in dense.iter_mut().zip(&counts[t * n..(t + 1) * n]) {
            if c > 0 {
                *d += weight * (c as f64 / m);
            }
        }
    }
    Ok(ScoreVector::from_dense(&dense))
}

/// Generates `M` lazy walks of length `T` from `root` with the budgeted engine, then averages them.
/// With `α = 1` the answer is `χ_r` and no walks are generated.
pub fn approx_ppr(
    g: &Graph,
    root: VertexId,
    params: &PprParams,
    engine: &EngineSpec,
    config: &ClusterConfig,
    streams: &Substreams,
) -> Result<PprEstimate, PprError> {
    g.check_vertex(root)?;
    if params.alpha == 1.0 {
        return Ok(PprEstimate { scores: ScoreVector::indicator(root), walks_used: 0, run: None });
    }
    let sp = engine.stitch_params(g.n(), params.length, params.samples)?;
    let run = run_budgeted(g, root, &sp, config, streams, RunOptions::default())?;
    let walks = run.root_walks();
    let scores = approx_ppr_from_walks(g, root, params, walks)?;
    let walks_used = (walks.len() as u64).min(params.samples);
    Ok(PprEstimate { scores, walks_used, run: Some(run) })
}
