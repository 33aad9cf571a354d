//! Bucketed dynamic program for near-optimal path selection.
//!
//! The risk budget alpha is discretized into d+1 multiples of alpha/d. For
//! every (vertex, bucket) cell the DP stores the best upper bound on the
//! partial-path loss quantile achievable with that much budget, the partial
//! path realizing it, and the output samples carried along that path. A
//! cell (v, abar) minimizes over predecessors v' and incoming budgets
//! alpha' <= abar the value
//! `max(VaR[v', alpha'], quantile(edge losses, 1 - (abar - alpha')))`,
//! which is valid by a union bound over the per-edge budgets.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::RiskConfig;
use crate::graph::AgentGraph;
use crate::quantile::quantile_in_place;
use crate::rng::{SeedDerivation, StreamContext};
use crate::sampling::ext_real;
use crate::Error;

/// Quantile level for an edge granted `diff` bucket units of budget.
/// Buckets are kept as integers; alpha enters only here.
pub fn bucket_level(diff: u32, alpha: f64, d: u32) -> f64 {
    1.0 - (diff as f64) * (alpha / d as f64)
}

/// Number of quantile evaluations the DP loop structure performs:
/// one per (vertex, target bucket, predecessor, incoming bucket) combination.
pub fn predicted_quantile_evals(graph: &AgentGraph, d: u32) -> u64 {
    let per_pred = ((d as u64 + 1) * (d as u64 + 2)) / 2;
    (0..graph.vertex_count())
        .filter(|&v| v != graph.source())
        .map(|v| graph.incoming(v).len() as u64 * per_pred)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Bucketed,
    Baseline,
}

/// Per-edge risk-budget split, in integer multiples of alpha/d.
///
/// `source_residual` is budget the DP parked at the source vertex (every
/// incoming bucket of the source is a legal starting point, so a run can
/// leave part of the budget unspent there); per-edge entries plus the
/// residual always sum to d.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub per_edge: Vec<u32>,
    pub source_residual: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Diagnostics {
    pub table_cells: u64,
    pub quantile_evals: u64,
}

/// Outcome of either algorithm: the estimate, the chosen path, and (for the
/// DP) the budget allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarResult {
    pub algorithm: Algorithm,
    #[serde(with = "ext_real")]
    pub estimate: f64,
    /// Vertex ids of the chosen source-to-terminal path.
    pub path: Vec<String>,
    /// Bucket allocation; absent for the baseline.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allocation: Option<Allocation>,
    pub alpha: f64,
    pub buckets: u32,
    pub samples: usize,
    pub seed: u64,
    pub diagnostics: Diagnostics,
}

struct Cell {
    value: f64,
    path: Vec<usize>,
    alloc: Vec<u32>,
    residual: u32,
    samples: Arc<Vec<f64>>,
}

/// Runs the bucketed DP and returns the cell at (terminal, alpha).
pub fn bucketed_var(graph: &AgentGraph, config: &RiskConfig) -> Result<VarResult, Error> {
    config.validate()?;
    let n = config.samples;
    let d = config.buckets;
    let alpha = config.alpha;
    let seeds = SeedDerivation::new(config.seed);

    let samplers: Vec<_> = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| e.agent.sampler(&graph.edge_id(i)))
        .collect();

    let source_samples: Arc<Vec<f64>> = Arc::new(
        (0..n)
            .map(|j| graph.initial().draw(seeds, StreamContext::Source, j as u64))
            .collect(),
    );

    let mut table: Vec<Option<Vec<Cell>>> = (0..graph.vertex_count()).map(|_| None).collect();
    table[graph.source()] = Some(
        (0..=d)
            .map(|b| Cell {
                value: f64::NEG_INFINITY,
                path: vec![graph.source()],
                alloc: Vec::new(),
                residual: b,
                samples: Arc::clone(&source_samples),
            })
            .collect(),
    );

    let mut remaining_successors: Vec<usize> =
        (0..graph.vertex_count()).map(|v| graph.outgoing(v).len()).collect();

    let mut diagnostics = Diagnostics::default();
    let mut losses = vec![0.0f64; n];
    let mut outputs = vec![0.0f64; n];
    let mut scratch = vec![0.0f64; n];

    for &v in &graph.topological_order() {
        let preds = graph.incoming(v);
        // memoized draws per (predecessor slot, incoming bucket), keyed to
        // the streams of their first use (abar = alpha')
        let mut memo: HashMap<(usize, u32), (Vec<f64>, Arc<Vec<f64>>)> = HashMap::new();
        let mut row: Vec<Cell> = Vec::with_capacity(d as usize + 1);
        for abar in 0..=d {
            let mut best: Option<Cell> = None;
            let mut best_value = f64::INFINITY;
            for (slot, &ei) in preds.iter().enumerate() {
                let pred = graph.edge(ei).from;
                for aprime in 0..=abar {
                    let pred_cell = &table[pred]
                        .as_ref()
                        .expect("predecessors processed in topological order")[aprime as usize];
                    let mut winner_outputs: Option<Arc<Vec<f64>>> = None;
                    if config.memoize_draws {
                        let entry = match memo.entry((slot, aprime)) {
                            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                            std::collections::hash_map::Entry::Vacant(e) => {
                                let ctx = StreamContext::DpCombo {
                                    abar: aprime,
                                    aprime,
                                };
                                let mut l = vec![0.0f64; n];
                                let mut o = vec![0.0f64; n];
                                for j in 0..n {
                                    let draw = samplers[ei].draw(
                                        pred_cell.samples[j],
                                        seeds,
                                        ctx,
                                        j as u64,
                                    )?;
                                    l[j] = draw.trace;
                                    o[j] = draw.output;
                                }
                                e.insert((l, Arc::new(o)))
                            }
                        };
                        scratch.copy_from_slice(&entry.0);
                        winner_outputs = Some(Arc::clone(&entry.1));
                    } else {
                        let ctx = StreamContext::DpCombo { abar, aprime };
                        for j in 0..n {
                            let draw =
                                samplers[ei].draw(pred_cell.samples[j], seeds, ctx, j as u64)?;
                            losses[j] = draw.trace;
                            outputs[j] = draw.output;
                        }
                        scratch.copy_from_slice(&losses);
                    }
                    diagnostics.quantile_evals += 1;
                    let level = bucket_level(abar - aprime, alpha, d);
                    let edge_var = quantile_in_place(&mut scratch, level);
                    let path_var = pred_cell.value.max(edge_var);
                    if path_var < best_value {
                        best_value = path_var;
                        let mut path = pred_cell.path.clone();
                        path.push(v);
                        let mut alloc = pred_cell.alloc.clone();
                        alloc.push(abar - aprime);
                        let samples = match winner_outputs {
                            Some(o) => o,
                            None => Arc::new(outputs.clone()),
                        };
                        best = Some(Cell {
                            value: path_var,
                            path,
                            alloc,
                            residual: pred_cell.residual,
                            samples,
                        });
                    }
                }
            }
            diagnostics.table_cells += 1;
            row.push(best.expect("validated graphs give every non-source vertex a predecessor"));
        }
        table[v] = Some(row);
        // free sample buffers of rows that no longer feed anyone
        for &ei in preds {
            let pred = graph.edge(ei).from;
            remaining_successors[pred] -= 1;
            if remaining_successors[pred] == 0 {
                if let Some(cells) = table[pred].as_mut() {
                    for cell in cells.iter_mut() {
                        cell.samples = Arc::new(Vec::new());
                    }
                }
            }
        }
    }

    let terminal_row = table[graph.terminal()]
        .as_ref()
        .expect("terminal processed");
    let cell = &terminal_row[d as usize];
    Ok(VarResult {
        algorithm: Algorithm::Bucketed,
        estimate: cell.value,
        path: cell.path.iter().map(|&v| graph.vertex_name(v).to_string()).collect(),
        allocation: Some(Allocation {
            per_edge: cell.alloc.clone(),
            source_residual: cell.residual,
        }),
        alpha,
        buckets: d,
        samples: n,
        seed: config.seed,
        diagnostics,
    })
}

/// Renders a budget allocation as integer multiples of alpha/d, e.g.
/// `16ᾱ, 0ᾱ, 10ᾱ (ᾱ=0.001)`.
pub fn report_allocation(result: &VarResult) -> Result<String, Error> {
    let alloc = result.allocation.as_ref().ok_or(Error::NotAPath)?;
    if alloc.per_edge.is_empty() {
        return Err(Error::NotAPath);
    }
    let unit = result.alpha / result.buckets as f64;
    let entries: Vec<String> = alloc
        .per_edge
        .iter()
        .map(|m| format!("{m}\u{1fb1}"))
        .collect();
    let mut out = format!("{} (\u{1fb1}={})", entries.join(", "), unit);
    if alloc.source_residual > 0 {
        out.push_str(&format!(", {}\u{1fb1} unspent at source", alloc.source_residual));
    }
    Ok(out)
}
