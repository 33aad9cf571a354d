//! The agent-graph data model: a DAG whose edges carry stochastic agents
//! with loss functions, plus validation, topological ordering, and path
//! enumeration.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampling::{AgentSpec, InitialSpec, SampleError};

pub const DEFAULT_PATH_CAP: usize = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("cycle detected through edges {0:?}")]
    CycleDetected(Vec<(String, String)>),
    #[error("vertex {0} is not reachable from the source")]
    UnreachableVertex(String),
    #[error("vertex {0} cannot reach the terminal")]
    DeadEndVertex(String),
    #[error("missing source or terminal vertex: {0}")]
    MissingSourceOrTerminal(String),
    #[error("unknown vertex {0} referenced by an edge")]
    UnknownVertex(String),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("path enumeration exceeded the cap of {0}")]
    PathBudgetExceeded(usize),
    #[error("invalid agent on edge {from} -> {to}: {source}")]
    BadAgent {
        from: String,
        to: String,
        source: SampleError,
    },
    #[error("invalid initial distribution: {0}")]
    BadInitial(SampleError),
}

/// On-disk form of an agent graph (JSON).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GraphSpec {
    pub vertices: Vec<String>,
    pub source: String,
    pub terminal: String,
    pub edges: Vec<EdgeSpec>,
    pub initial: InitialSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    pub agent: AgentSpec,
}

/// An edge together with its agent model; `from`/`to` are indices into the
/// graph's sorted vertex list.
#[derive(Debug, Clone)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub agent: AgentSpec,
}

/// Validated in-memory agent graph. Vertices are stored sorted by id and all
/// orderings below break ties by that order, so every traversal is
/// deterministic.
#[derive(Debug, Clone)]
pub struct AgentGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    source: usize,
    terminal: usize,
    initial: InitialSpec,
    outgoing: Vec<Vec<usize>>, // vertex -> edge indices, sorted by head id
    incoming: Vec<Vec<usize>>, // vertex -> edge indices, sorted by tail id
}

impl AgentGraph {
    /// Builds and validates a graph from its on-disk form.
    pub fn build(spec: GraphSpec) -> Result<Self, GraphError> {
        let mut vertices = spec.vertices.clone();
        vertices.sort();
        vertices.dedup();
        let index: BTreeMap<&str, usize> = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let lookup = |name: &str| -> Result<usize, GraphError> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| GraphError::UnknownVertex(name.to_string()))
        };
        let source = *index
            .get(spec.source.as_str())
            .ok_or_else(|| GraphError::MissingSourceOrTerminal(spec.source.clone()))?;
        let terminal = *index
            .get(spec.terminal.as_str())
            .ok_or_else(|| GraphError::MissingSourceOrTerminal(spec.terminal.clone()))?;

        let mut edges = Vec::with_capacity(spec.edges.len());
        for e in &spec.edges {
            let from = lookup(&e.from)?;
            let to = lookup(&e.to)?;
            e.agent.validate().map_err(|err| GraphError::BadAgent {
                from: e.from.clone(),
                to: e.to.clone(),
                source: err,
            })?;
            edges.push(Edge {
                from,
                to,
                agent: e.agent.clone(),
            });
        }
        edges.sort_by_key(|e| (e.from, e.to));
        for pair in edges.windows(2) {
            if pair[0].from == pair[1].from && pair[0].to == pair[1].to {
                return Err(GraphError::DuplicateEdge(
                    vertices[pair[0].from].clone(),
                    vertices[pair[0].to].clone(),
                ));
            }
        }
        spec.initial.validate().map_err(GraphError::BadInitial)?;

        let mut outgoing = vec![Vec::new(); vertices.len()];
        let mut incoming = vec![Vec::new(); vertices.len()];
        for (i, e) in edges.iter().enumerate() {
            outgoing[e.from].push(i);
            incoming[e.to].push(i);
        }
        // outgoing already sorted by head id via edge sort; sort incoming by tail id
        for list in &mut incoming {
            list.sort_by_key(|&i| edges[i].from);
        }

        let graph = Self {
            vertices,
            edges,
            source,
            terminal,
            initial: spec.initial,
            outgoing,
            incoming,
        };
        graph.validate()?;
        Ok(graph)
    }

    /// Checks the structural invariants: acyclicity and every vertex lying on
    /// some source-to-terminal path. The first violated invariant is reported
    /// with the offending vertex or edge.
    pub fn validate(&self) -> Result<(), GraphError> {
        if let Some(cycle) = self.find_cycle() {
            return Err(GraphError::CycleDetected(
                cycle
                    .into_iter()
                    .map(|(u, v)| (self.vertices[u].clone(), self.vertices[v].clone()))
                    .collect(),
            ));
        }
        let reach_fwd = self.reachable(self.source, &self.outgoing, |e| e.to);
        for v in 0..self.vertices.len() {
            if !reach_fwd[v] {
                return Err(GraphError::UnreachableVertex(self.vertices[v].clone()));
            }
        }
        let reach_bwd = self.reachable(self.terminal, &self.incoming, |e| e.from);
        for v in 0..self.vertices.len() {
            if !reach_bwd[v] {
                return Err(GraphError::DeadEndVertex(self.vertices[v].clone()));
            }
        }
        Ok(())
    }

    fn reachable(&self, start: usize, adj: &[Vec<usize>], next: impl Fn(&Edge) -> usize) -> Vec<bool> {
        let mut seen = vec![false; self.vertices.len()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &ei in &adj[v] {
                let w = next(&self.edges[ei]);
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    fn find_cycle(&self) -> Option<Vec<(usize, usize)>> {
        // Iterative DFS with colors; on a back edge, reconstruct the cycle
        // from the vertex stack.
        const WHITE: u8 = 0;
        const GRAY: u8 = 1;
        const BLACK: u8 = 2;
        let n = self.vertices.len();
        let mut color = vec![WHITE; n];
        for root in 0..n {
            if color[root] != WHITE {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
            color[root] = GRAY;
            while let Some(&mut (v, ref mut i)) = stack.last_mut() {
                if *i < self.outgoing[v].len() {
                    let ei = self.outgoing[v][*i];
                    *i += 1;
                    let w = self.edges[ei].to;
                    match color[w] {
                        WHITE => {
                            color[w] = GRAY;
                            stack.push((w, 0));
                        }
                        GRAY => {
                            let start = stack.iter().position(|&(u, _)| u == w).unwrap();
                            let mut cycle: Vec<(usize, usize)> = stack[start..]
                                .windows(2)
                                .map(|p| (p[0].0, p[1].0))
                                .collect();
                            cycle.push((v, w));
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    color[v] = BLACK;
                    stack.pop();
                }
            }
        }
        None
    }

    /// Topological order over the vertices excluding the source; ties broken
    /// by vertex id.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.vertices.len();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.incoming[v].len()).collect();
        let mut ready = std::collections::BTreeSet::new();
        for v in 0..n {
            if indeg[v] == 0 {
                ready.insert(v);
            }
        }
        let mut order = Vec::with_capacity(n.saturating_sub(1));
        while let Some(&v) = ready.iter().next() {
            ready.remove(&v);
            if v != self.source {
                order.push(v);
            }
            for &ei in &self.outgoing[v] {
                let w = self.edges[ei].to;
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.insert(w);
                }
            }
        }
        order
    }

    /// All source-to-terminal paths in lexicographic vertex-id order.
    pub fn enumerate_paths(&self, cap: usize) -> Result<Vec<Path>, GraphError> {
        let mut paths = Vec::new();
        let mut current = vec![self.source];
        self.dfs_paths(self.source, &mut current, &mut paths, cap)?;
        Ok(paths)
    }

    fn dfs_paths(
        &self,
        v: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Path>,
        cap: usize,
    ) -> Result<(), GraphError> {
        if v == self.terminal {
            if out.len() >= cap {
                return Err(GraphError::PathBudgetExceeded(cap));
            }
            out.push(Path {
                vertices: current.clone(),
            });
            return Ok(());
        }
        for &ei in &self.outgoing[v] {
            let w = self.edges[ei].to;
            current.push(w);
            self.dfs_paths(w, current, out, cap)?;
            current.pop();
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.binary_search_by(|v| v.as_str().cmp(name)).ok()
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn terminal(&self) -> usize {
        self.terminal
    }

    pub fn initial(&self) -> &InitialSpec {
        &self.initial
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge indices into `v`, sorted by tail vertex id.
    pub fn incoming(&self, v: usize) -> &[usize] {
        &self.incoming[v]
    }

    pub fn outgoing(&self, v: usize) -> &[usize] {
        &self.outgoing[v]
    }

    pub fn edge_index(&self, from: usize, to: usize) -> Option<usize> {
        self.edges
            .binary_search_by(|e| (e.from, e.to).cmp(&(from, to)))
            .ok()
    }

    /// Stable id string for an edge, used as its stream scope.
    pub fn edge_id(&self, i: usize) -> String {
        let e = &self.edges[i];
        format!("{}->{}", self.vertices[e.from], self.vertices[e.to])
    }

    /// Reconstructs a path from vertex names, checking that consecutive
    /// pairs are edges.
    pub fn path_from_names(&self, names: &[String]) -> Result<Path, GraphError> {
        let mut vertices = Vec::with_capacity(names.len());
        for name in names {
            vertices.push(
                self.vertex_index(name)
                    .ok_or_else(|| GraphError::UnknownVertex(name.clone()))?,
            );
        }
        for pair in vertices.windows(2) {
            if self.edge_index(pair[0], pair[1]).is_none() {
                return Err(GraphError::UnknownVertex(format!(
                    "no edge {} -> {}",
                    self.vertices[pair[0]], self.vertices[pair[1]]
                )));
            }
        }
        Ok(Path { vertices })
    }
}

/// A directed path; edges are implied by consecutive vertex pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub vertices: Vec<usize>,
}

impl Path {
    pub fn edge_indices(&self, graph: &AgentGraph) -> Vec<usize> {
        self.vertices
            .windows(2)
            .map(|p| {
                graph
                    .edge_index(p[0], p[1])
                    .expect("path edges exist in graph")
            })
            .collect()
    }

    pub fn edge_len(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn names(&self, graph: &AgentGraph) -> Vec<String> {
        self.vertices
            .iter()
            .map(|&v| graph.vertex_name(v).to_string())
            .collect()
    }

    /// Stable hash of the vertex sequence; used to key rollout streams.
    pub fn stream_scope(&self, graph: &AgentGraph) -> u64 {
        let joined = self.names(graph).join("/");
        crate::rng::label_hash(format!("path:{joined}").as_bytes())
    }
}
