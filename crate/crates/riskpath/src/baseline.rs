//! Exhaustive baseline: enumerate every source-to-terminal path, roll each
//! one out end to end, and keep the path with the smallest empirical loss
//! quantile. Exact up to sampling error, but exponential in graph depth.

use crate::bucketed::{Algorithm, Diagnostics, VarResult};
use crate::config::RiskConfig;
use crate::graph::{AgentGraph, Path};
use crate::quantile::quantile_in_place;
use crate::rng::{SeedDerivation, StreamContext};
use crate::Error;

/// Simulates `n` full traversals of `path` and returns the per-rollout
/// maximum edge loss. Each rollout threads the running output through the
/// agents in order; the stream is keyed by the path so different paths get
/// independent draws while reruns are reproducible.
pub fn rollout_path(
    graph: &AgentGraph,
    path: &Path,
    n: usize,
    seeds: SeedDerivation,
) -> Result<Vec<f64>, Error> {
    let ctx = StreamContext::BaselineRollout {
        path: path.stream_scope(graph),
    };
    let edges = path.edge_indices(graph);
    let samplers: Vec<_> = edges
        .iter()
        .map(|&ei| graph.edge(ei).agent.sampler(&graph.edge_id(ei)))
        .collect();
    let mut maxima = Vec::with_capacity(n);
    for j in 0..n {
        let mut carry = graph.initial().draw(seeds, ctx, j as u64);
        let mut worst = f64::NEG_INFINITY;
        for sampler in &samplers {
            let draw = sampler.draw(carry, seeds, ctx, j as u64)?;
            worst = worst.max(draw.trace);
            carry = draw.output;
        }
        maxima.push(worst);
    }
    Ok(maxima)
}

/// Evaluates every path's empirical quantile at level 1 - alpha and returns
/// the minimizer. Ties keep the first path in enumeration order.
pub fn baseline_var(graph: &AgentGraph, config: &RiskConfig) -> Result<VarResult, Error> {
    config.validate()?;
    let seeds = SeedDerivation::new(config.seed);
    let paths = graph.enumerate_paths(config.path_cap)?;
    let level = 1.0 - config.alpha;

    let mut best: Option<(f64, Path)> = None;
    let mut diagnostics = Diagnostics::default();
    for path in paths {
        let mut losses = rollout_path(graph, &path, config.samples, seeds)?;
        let q = quantile_in_place(&mut losses, level);
        diagnostics.quantile_evals += 1;
        if best.as_ref().map_or(true, |(b, _)| q < *b) {
            best = Some((q, path));
        }
    }
    let (estimate, path) = best.expect("validated graphs have at least one path");
    Ok(VarResult {
        algorithm: Algorithm::Baseline,
        estimate,
        path: path.names(graph),
        allocation: None,
        alpha: config.alpha,
        buckets: config.buckets,
        samples: config.samples,
        seed: config.seed,
        diagnostics,
    })
}
