//! Synthetic benchmark graph families.
//!
//! Each generator produces a graph whose agents are analytic distributions,
//! so the true path-loss quantiles are computable in closed form or by the
//! CDF-product oracle. The named presets mirror common navigation-style
//! decision structures: a single diamond with one clearly better branch, a
//! sequence of four diamonds (13 vertices, 16 paths of length 8), a
//! two-path split after a shared prefix, a relay task whose non-carrying
//! moves incur no loss, and a plain 8-edge chain.

use serde::{Deserialize, Serialize};

use crate::graph::{AgentGraph, EdgeSpec, GraphSpec, Path};
use crate::sampling::{AgentSpec, InitialSpec, OutputRule, SampleError};
use crate::Error;

fn spec_from_parts(
    vertices: Vec<String>,
    source: &str,
    terminal: &str,
    edges: Vec<(String, String, AgentSpec)>,
) -> GraphSpec {
    GraphSpec {
        vertices,
        source: source.to_string(),
        terminal: terminal.to_string(),
        edges: edges
            .into_iter()
            .map(|(from, to, agent)| EdgeSpec { from, to, agent })
            .collect(),
        initial: InitialSpec::Constant { value: 0.0 },
    }
}

/// Chain s -> c1 -> ... -> t with one agent per edge.
pub fn make_chain(specs: &[AgentSpec]) -> Result<GraphSpec, Error> {
    let m = specs.len();
    if m == 0 {
        return Err(SampleError::InvalidParams("chain needs at least one edge".into()).into());
    }
    let name = |i: usize| {
        if i == 0 {
            "s".to_string()
        } else if i == m {
            "t".to_string()
        } else {
            format!("c{i}")
        }
    };
    let vertices: Vec<String> = (0..=m).map(name).collect();
    let edges = specs
        .iter()
        .enumerate()
        .map(|(i, a)| (name(i), name(i + 1), a.clone()))
        .collect();
    Ok(spec_from_parts(vertices, "s", "t", edges))
}

/// Chain of m independent uniform(0,1) agents.
pub fn uniform_chain(m: usize) -> Result<GraphSpec, Error> {
    make_chain(&vec![AgentSpec::uniform(0.0, 1.0); m])
}

/// Sequence of k diamonds: 3k+1 vertices, 4k edges, 2^k paths of length 2k.
/// `assign(diamond, is_top)` picks the agent for both edges of a branch.
pub fn make_diamond_sequence(
    k: usize,
    assign: impl Fn(usize, bool) -> AgentSpec,
) -> Result<GraphSpec, Error> {
    if k == 0 {
        return Err(
            SampleError::InvalidParams("diamond sequence needs at least one diamond".into()).into(),
        );
    }
    let join = |i: usize| {
        if i == 0 {
            "s".to_string()
        } else if i == k {
            "t".to_string()
        } else {
            format!("j{i}")
        }
    };
    let mut vertices: Vec<String> = (0..=k).map(join).collect();
    let mut edges = Vec::with_capacity(4 * k);
    for i in 0..k {
        let top = format!("u{i}");
        let bottom = format!("l{i}");
        edges.push((join(i), top.clone(), assign(i, true)));
        edges.push((top.clone(), join(i + 1), assign(i, true)));
        edges.push((join(i), bottom.clone(), assign(i, false)));
        edges.push((bottom.clone(), join(i + 1), assign(i, false)));
        vertices.push(top);
        vertices.push(bottom);
    }
    Ok(spec_from_parts(vertices, "s", "t", edges))
}

/// Diamond sequence with every edge uniform(0,1).
pub fn uniform_diamond_sequence(k: usize) -> GraphSpec {
    make_diamond_sequence(k, |_, _| AgentSpec::uniform(0.0, 1.0))
        .expect("k >= 1 by construction")
}

/// Shared prefix chain followed by a two-branch split rejoining at the
/// terminal. Vertex count is `prefix.len() + top.len() + bottom.len()`,
/// so both the 7- and 8-vertex variants of this shape are reachable.
pub fn make_two_path(
    prefix: &[AgentSpec],
    top: &[AgentSpec],
    bottom: &[AgentSpec],
) -> Result<GraphSpec, Error> {
    if top.is_empty() || bottom.is_empty() {
        return Err(
            SampleError::InvalidParams("two-path branches need at least one edge each".into())
                .into(),
        );
    }
    let fork = if prefix.is_empty() {
        "s".to_string()
    } else {
        "f".to_string()
    };
    let mut vertices = vec!["s".to_string(), "t".to_string()];
    let mut edges = Vec::new();
    let mut prev = "s".to_string();
    for (i, a) in prefix.iter().enumerate() {
        let next = if i + 1 == prefix.len() {
            fork.clone()
        } else {
            format!("p{}", i + 1)
        };
        edges.push((prev.clone(), next.clone(), a.clone()));
        vertices.push(next.clone());
        prev = next;
    }
    for (label, branch) in [("u", top), ("l", bottom)] {
        let mut prev = fork.clone();
        for (i, a) in branch.iter().enumerate() {
            let next = if i + 1 == branch.len() {
                "t".to_string()
            } else {
                format!("{label}{}", i + 1)
            };
            edges.push((prev.clone(), next.clone(), a.clone()));
            if next != "t" {
                vertices.push(next.clone());
            }
            prev = next;
        }
    }
    vertices.sort();
    vertices.dedup();
    Ok(spec_from_parts(vertices, "s", "t", edges))
}

/// Chain whose edge sequence repeats the given path's agents k times, with
/// every repetition drawing independently (fresh edge ids and fresh latent
/// groups per repetition).
pub fn replicate_path(graph: &AgentGraph, path: &Path, k: usize) -> Result<GraphSpec, Error> {
    if k == 0 {
        return Err(SampleError::InvalidParams("replication factor must be >= 1".into()).into());
    }
    let edges = path.edge_indices(graph);
    if edges.is_empty() {
        return Err(Error::NotAPath);
    }
    let mut specs = Vec::with_capacity(edges.len() * k);
    for rep in 0..k {
        for &ei in &edges {
            let mut agent = graph.edge(ei).agent.clone();
            if let crate::sampling::AgentKind::LatentCorrelated { group, .. } = &mut agent.kind {
                *group = format!("{group}_r{rep}");
            }
            specs.push(agent);
        }
    }
    let mut spec = make_chain(&specs)?;
    spec.initial = graph.initial().clone();
    Ok(spec)
}

/// Diamond whose top branch shares a latent standard-normal factor: both
/// edges have N(0,1) marginals with pairwise loss correlation rho, and at
/// rho = 1 they are comonotone. The bottom branch is two independent
/// N(0.5, 1) edges, worse at the usual risk levels, so the top branch is
/// the one both algorithms should pick.
pub fn make_correlated_diamond(rho: f64) -> Result<GraphSpec, Error> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(
            SampleError::InvalidParams(format!("rho must be in [0,1], got {rho}")).into(),
        );
    }
    let vertices = vec![
        "b".to_string(),
        "s".to_string(),
        "t".to_string(),
        "u".to_string(),
    ];
    let edges = vec![
        (
            "s".to_string(),
            "u".to_string(),
            AgentSpec::latent_correlated(1.0, "shared"),
        ),
        (
            "u".to_string(),
            "t".to_string(),
            AgentSpec::latent_correlated(rho, "shared"),
        ),
        ("s".to_string(), "b".to_string(), AgentSpec::gaussian(0.5, 1.0)),
        ("b".to_string(), "t".to_string(), AgentSpec::gaussian(0.5, 1.0)),
    ];
    Ok(spec_from_parts(vertices, "s", "t", edges))
}

/// Relay task analog: traversal edges cost nothing (loss -inf, output
/// passed through), carrying edges accumulate time in the carried value,
/// and the drop-off resets the carry. Three source-to-terminal paths.
pub fn boxrelay() -> GraphSpec {
    let v = |i: usize| format!("v{i}");
    let carry = || {
        AgentSpec::uniform(0.5, 1.5)
            .accumulating()
            .with_output(OutputRule::Offset { delta: 0.0 })
    };
    let traversal = || AgentSpec::constant(f64::NEG_INFINITY);
    let vertices: Vec<String> = (0..10).map(v).collect();
    let edges = vec![
        (v(0), v(1), traversal()),
        (v(1), v(2), traversal()),
        (v(1), v(6), traversal()),
        (v(2), v(3), carry()),
        (v(3), v(4), traversal()),
        (v(4), v(5), carry()),
        (v(6), v(7), carry()),
        (v(7), v(8), traversal()),
        (v(7), v(9), traversal()),
        (v(8), v(9), carry()),
        (
            v(9),
            v(5),
            AgentSpec::uniform(0.5, 1.5)
                .accumulating()
                .with_output(OutputRule::Constant { value: 0.0 }),
        ),
    ];
    spec_from_parts(vertices, "v0", "v5", edges)
}

/// Parameterized benchmark family, serializable so the CLI can echo it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum BenchFamily {
    Chain { m: usize },
    DiamondSequence { k: usize },
    TwoPath { prefix: usize, branch: usize },
    CorrelatedDiamond { rho: f64 },
}

impl BenchFamily {
    pub fn generate(&self) -> Result<GraphSpec, Error> {
        match *self {
            BenchFamily::Chain { m } => uniform_chain(m),
            BenchFamily::DiamondSequence { k } => {
                make_diamond_sequence(k, |_, _| AgentSpec::uniform(0.0, 1.0))
            }
            BenchFamily::TwoPath { prefix, branch } => {
                if branch == 0 {
                    return Err(SampleError::InvalidParams(
                        "two-path branches need at least one edge each".into(),
                    )
                    .into());
                }
                make_two_path(
                    &vec![AgentSpec::uniform(0.0, 1.0); prefix],
                    &vec![AgentSpec::gaussian(-0.2, 0.1); branch],
                    &vec![AgentSpec::gaussian(0.0, 0.1); branch],
                )
            }
            BenchFamily::CorrelatedDiamond { rho } => make_correlated_diamond(rho),
        }
    }
}

/// Single diamond where one branch's losses are stochastically smaller
/// (analytic quantile gap 0.1 at the usual levels).
pub fn mousenav() -> GraphSpec {
    make_diamond_sequence(1, |_, top| {
        if top {
            AgentSpec::gaussian(-0.4, 0.05)
        } else {
            AgentSpec::gaussian(-0.3, 0.05)
        }
    })
    .expect("k = 1")
}

/// Four chained diamonds with negative distance-style losses.
pub fn rooms16() -> GraphSpec {
    make_diamond_sequence(4, |i, top| {
        if top {
            AgentSpec::shifted_min_distance(0.2 + 0.05 * i as f64, 0.1)
        } else {
            AgentSpec::gaussian(-0.2, 0.1)
        }
    })
    .expect("k = 4")
}

/// Two-branch split after a three-edge shared approach (7 vertices).
pub fn fetch() -> GraphSpec {
    BenchFamily::TwoPath {
        prefix: 3,
        branch: 2,
    }
    .generate()
    .expect("fixed valid parameters")
}

/// Named presets, in deterministic order, for suite-wide evaluations.
pub fn benchmark_suite() -> Vec<(&'static str, GraphSpec)> {
    vec![
        ("mousenav", mousenav()),
        ("rooms16", rooms16()),
        ("fetch", fetch()),
        ("boxrelay", boxrelay()),
        ("chain8", uniform_chain(8).expect("m = 8")),
    ]
}

pub fn preset(name: &str) -> Option<GraphSpec> {
    benchmark_suite()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, g)| g)
}
