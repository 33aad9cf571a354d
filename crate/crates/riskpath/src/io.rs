//! File formats: graph files, result files, coverage reports, sweep tables.
//!
//! Graph files are plain JSON. Result and report files carry one `#` header
//! line with wall-clock metadata — the only nondeterministic part of any
//! output — followed by pretty-printed JSON; rerunning a command with the
//! same inputs reproduces everything below the header bit for bit. Results
//! embed a hash of the graph they were computed from so a report can refuse
//! to grade an estimate against the wrong graph.

use std::fs;
use std::path::Path as FsPath;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bucketed::VarResult;
use crate::eval::CoverageReport;
use crate::graph::{AgentGraph, GraphSpec};
use crate::Error;

fn io_err(path: &FsPath, err: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: err.to_string(),
    }
}

fn parse_err(path: &FsPath, err: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        message: err.to_string(),
    }
}

/// Hex SHA-256 of the graph's canonical (compact JSON) serialization.
pub fn graph_hash(spec: &GraphSpec) -> String {
    let canonical = serde_json::to_string(spec).expect("graph specs always serialize");
    let digest = Sha256::digest(canonical.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

pub fn save_graph(path: &FsPath, spec: &GraphSpec) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(spec).map_err(|e| parse_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Parses a graph file, resolves any empirical sample files relative to the
/// graph file's directory, and validates the result.
pub fn load_graph(path: &FsPath) -> Result<(AgentGraph, GraphSpec), Error> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut spec: GraphSpec = serde_json::from_str(&text).map_err(|e| parse_err(path, e))?;
    let base = path.parent().unwrap_or_else(|| FsPath::new("."));
    for edge in &mut spec.edges {
        edge.agent.resolve_files(base)?;
    }
    let graph = AgentGraph::build(spec.clone())?;
    Ok((graph, spec))
}

fn write_with_header<T: Serialize>(path: &FsPath, value: &T, elapsed_s: f64) -> Result<(), Error> {
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let body = serde_json::to_string_pretty(value).map_err(|e| parse_err(path, e))?;
    let text = format!("# written_unix={stamp} elapsed_s={elapsed_s:.3}\n{body}\n");
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn read_skipping_header<T: DeserializeOwned>(path: &FsPath) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    serde_json::from_str(&body).map_err(|e| parse_err(path, e))
}

/// A VarResult tied to the graph it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub graph_hash: String,
    pub result: VarResult,
}

pub fn save_result(path: &FsPath, file: &ResultFile, elapsed_s: f64) -> Result<(), Error> {
    write_with_header(path, file, elapsed_s)
}

pub fn load_result(path: &FsPath) -> Result<ResultFile, Error> {
    read_skipping_header(path)
}

/// A CoverageReport tied to the graph it was evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub graph_hash: String,
    pub report: CoverageReport,
}

pub fn save_report(path: &FsPath, file: &ReportFile, elapsed_s: f64) -> Result<(), Error> {
    write_with_header(path, file, elapsed_s)
}

pub fn load_report(path: &FsPath) -> Result<ReportFile, Error> {
    read_skipping_header(path)
}

/// One row of a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: String,
    pub estimate: f64,
    pub coverage: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seconds: f64,
}

pub const SWEEP_HEADER: &str = "param,estimate,coverage,ci_lo,ci_hi,seconds";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{:.3}\n",
            r.param, r.estimate, r.coverage, r.ci_lo, r.ci_hi, r.seconds
        ));
    }
    out
}

pub fn save_sweep(path: &FsPath, rows: &[SweepRow]) -> Result<(), Error> {
    fs::write(path, sweep_csv(rows)).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchgen;
    use crate::bucketed::{bucketed_var, Algorithm};
    use crate::RiskConfig;

    #[test]
    fn graph_round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        let spec = benchgen::rooms16();
        save_graph(&path, &spec).unwrap();
        let (graph, loaded) = load_graph(&path).unwrap();
        assert_eq!(loaded, spec);
        assert_eq!(graph.vertex_count(), 13);
    }

    #[test]
    fn graph_hash_is_stable_and_sensitive() {
        let a = benchgen::mousenav();
        let mut b = benchgen::mousenav();
        assert_eq!(graph_hash(&a), graph_hash(&b));
        assert_eq!(graph_hash(&a).len(), 64);
        b.terminal = "s".into();
        assert_ne!(graph_hash(&a), graph_hash(&b));
    }

    #[test]
    fn result_round_trip_skips_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let g = AgentGraph::build(benchgen::uniform_chain(2).unwrap()).unwrap();
        let config = RiskConfig::default().with_buckets(5).with_samples(100);
        let result = bucketed_var(&g, &config).unwrap();
        let file = ResultFile {
            graph_hash: graph_hash(&benchgen::uniform_chain(2).unwrap()),
            result,
        };
        save_result(&path, &file, 1.25).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# written_unix="));
        let loaded = load_result(&path).unwrap();
        assert_eq!(loaded, file);
        assert_eq!(loaded.result.algorithm, Algorithm::Bucketed);
    }

    #[test]
    fn negative_infinity_estimates_survive_the_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let g = AgentGraph::build(
            benchgen::make_chain(&[crate::sampling::AgentSpec::constant(f64::NEG_INFINITY)])
                .unwrap(),
        )
        .unwrap();
        let config = RiskConfig::default().with_buckets(2).with_samples(10);
        let result = bucketed_var(&g, &config).unwrap();
        assert_eq!(result.estimate, f64::NEG_INFINITY);
        let file = ResultFile {
            graph_hash: "x".into(),
            result,
        };
        save_result(&path, &file, 0.0).unwrap();
        assert_eq!(load_result(&path).unwrap().result.estimate, f64::NEG_INFINITY);
    }

    #[test]
    fn sweep_csv_layout() {
        let rows = vec![SweepRow {
            param: "500".into(),
            estimate: 0.95,
            coverage: 0.91,
            ci_lo: 0.90,
            ci_hi: 0.92,
            seconds: 0.5,
        }];
        let csv = sweep_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_HEADER);
        assert_eq!(lines.next().unwrap(), "500,0.95,0.91,0.9,0.92,0.500");
    }

    #[test]
    fn missing_and_malformed_files_report_path() {
        let err = load_graph(FsPath::new("/nonexistent/g.json")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(&path, "not json").unwrap();
        assert!(matches!(load_graph(&path).unwrap_err(), Error::Parse { .. }));
    }
}
