//! Minimum value-at-risk path selection over DAGs of stochastic agents.
//!
//! An agent graph is a DAG whose edges carry stochastic agents with loss
//! functions; a source-to-terminal path is a feasible composition of agents
//! and its loss is the maximum loss incurred along the way. This crate picks
//! the path whose loss quantile at a user-chosen level is smallest, either
//! by a bucketed dynamic program that splits the risk budget across edges
//! via a union bound, or by the exhaustive per-path baseline. It also ships
//! analytic benchmark generators, coverage evaluation on fresh samples, and
//! the corresponding theorem-bound checks.
//!
//! Everything is deterministic given a master seed: every random draw is
//! addressed by a derived stream label, so reruns reproduce results exactly.

pub mod baseline;
pub mod benchgen;
pub mod bucketed;
pub mod config;
pub mod eval;
pub mod graph;
pub mod io;
pub mod quantile;
pub mod rng;
pub mod sampling;

pub use bucketed::{bucketed_var, report_allocation, VarResult};
pub use config::RiskConfig;
pub use graph::{AgentGraph, GraphSpec, Path};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] graph::GraphError),
    #[error(transparent)]
    Sample(#[from] sampling::SampleError),
    #[error(transparent)]
    Quantile(#[from] quantile::QuantileError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("result path has no edges")]
    NotAPath,
    #[error("graph hash mismatch: the result file was produced from a different graph")]
    GraphMismatch,
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed file {path}: {message}")]
    Parse { path: String, message: String },
}
