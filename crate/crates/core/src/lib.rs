//! Local random-walk generation by budgeted stitching on a simulated MPC cluster.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: immutable undirected graphs, SNAP ingestion, volume/boundary/conductance.
//! * [`mpc`]: a deterministic superstep simulator with per-machine load accounting.
//! * [`walk`]: the stitching engine, the budgeting loop, multi-source runs and the
//!   uniform-stitching baseline.
//! * [`ppr`]: personalized PageRank from rooted lazy walks and sweep-cut clustering.
//! * [`oracle`]: exact sequential references used to check everything above.

pub mod fixtures;
pub mod graph;
pub mod mpc;
pub mod oracle;
pub mod ppr;
pub mod rng;
pub mod score;
pub mod walk;

pub use graph::{Graph, GraphError, LoadOptions, VertexId, VertexSet};
pub use mpc::{Cluster, ClusterConfig, MpcError, RoundLedger};
pub use score::ScoreVector;
