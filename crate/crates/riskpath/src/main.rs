//! Command-line front door: generate benchmark graphs, run either
//! estimator, grade results on fresh samples, and run parameter sweeps.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use riskpath::baseline::baseline_var;
use riskpath::benchgen::{self, BenchFamily};
use riskpath::bucketed::{bucketed_var, report_allocation, Algorithm};
use riskpath::eval::{coverage, theorem_verdicts, AnalyticOracle};
use riskpath::graph::{AgentGraph, GraphError, DEFAULT_PATH_CAP};
use riskpath::io::{
    graph_hash, load_graph, load_result, save_graph, save_report, save_result, save_sweep,
    ReportFile, ResultFile, SweepRow,
};
use riskpath::rng::SeedDerivation;
use riskpath::{Error, RiskConfig, VarResult};

#[derive(Parser)]
#[command(
    name = "riskpath",
    version,
    about = "Minimum value-at-risk path selection over DAGs of stochastic agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark graph file
    Gen(GenArgs),
    /// Estimate the minimum-VaR path on a graph
    Run(RunArgs),
    /// Grade a result file on fresh samples
    Coverage(CoverageArgs),
    /// Sweep sample size, bucket count, or path length
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Total risk budget in (0,1)
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Number of risk buckets
    #[arg(long, default_value_t = 100)]
    buckets: u32,
    /// Estimation sample size per quantile evaluation
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Failure probability of the quantile-error bound
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Master seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fresh-sample count for coverage grading
    #[arg(long, default_value_t = 10_000)]
    coverage_samples: usize,
    /// Cap on baseline path enumeration
    #[arg(long, default_value_t = DEFAULT_PATH_CAP)]
    path_cap: usize,
    /// Reuse edge draws across target buckets (faster, different streams)
    #[arg(long)]
    memoize: bool,
    /// Worker cap; results never depend on it
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl ConfigArgs {
    fn to_config(&self) -> RiskConfig {
        RiskConfig {
            alpha: self.alpha,
            buckets: self.buckets,
            samples: self.samples,
            delta: self.delta,
            seed: self.seed,
            coverage_samples: self.coverage_samples,
            path_cap: self.path_cap,
            memoize_draws: self.memoize,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    family: GenFamily,
}

#[derive(Subcommand)]
enum GenFamily {
    /// Chain of m independent uniform(0,1) agents
    Chain {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sequence of k diamonds with uniform(0,1) agents
    DiamondSequence {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shared prefix followed by a two-branch split
    TwoPath {
        #[arg(long)]
        prefix: usize,
        #[arg(long)]
        branch: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Diamond whose top branch has latent-correlated losses
    CorrelatedDiamond {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Named preset (mousenav, rooms16, fetch, boxrelay, chain8)
    Preset {
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    Bucketed,
    Baseline,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Bucketed)]
    algorithm: AlgorithmArg,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also print every path's empirical quantile (baseline only)
    #[arg(long)]
    all_paths: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct CoverageArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    result: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    Samples,
    Buckets,
    Agents,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum)]
    kind: SweepKind,
    /// Comma-separated parameter values, e.g. 500,1000,5000,10000
    #[arg(long, value_delimiter = ',')]
    range: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Graph(GraphError::PathBudgetExceeded(_)) => 3,
        Error::Io { .. } => 4,
        _ => 2,
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Run(args) => cmd_run(args),
        Command::Coverage(args) => cmd_coverage(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn cmd_gen(args: GenArgs) -> Result<(), Error> {
    let (spec, out) = match args.family {
        GenFamily::Chain { m, out } => (BenchFamily::Chain { m }.generate()?, out),
        GenFamily::DiamondSequence { k, out } => {
            (BenchFamily::DiamondSequence { k }.generate()?, out)
        }
        GenFamily::TwoPath { prefix, branch, out } => {
            (BenchFamily::TwoPath { prefix, branch }.generate()?, out)
        }
        GenFamily::CorrelatedDiamond { rho, out } => {
            (BenchFamily::CorrelatedDiamond { rho }.generate()?, out)
        }
        GenFamily::Preset { name, out } => {
            let spec = benchgen::preset(&name).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown preset {name:?}; available: mousenav, rooms16, fetch, boxrelay, chain8"
                ))
            })?;
            (spec, out)
        }
    };
    let graph = AgentGraph::build(spec.clone())?;
    let paths = graph.enumerate_paths(DEFAULT_PATH_CAP)?;
    save_graph(&out, &spec)?;
    println!(
        "wrote {}: {} vertices, {} edges, {} paths",
        out.display(),
        graph.vertex_count(),
        graph.edge_count(),
        paths.len()
    );
    Ok(())
}

fn run_algorithm(
    graph: &AgentGraph,
    config: &RiskConfig,
    algorithm: AlgorithmArg,
) -> Result<VarResult, Error> {
    match algorithm {
        AlgorithmArg::Bucketed => bucketed_var(graph, config),
        AlgorithmArg::Baseline => baseline_var(graph, config),
    }
}

fn cmd_run(args: RunArgs) -> Result<(), Error> {
    let config = args.config.to_config();
    config.validate()?;
    let (graph, spec) = load_graph(&args.graph)?;
    let started = Instant::now();
    let result = run_algorithm(&graph, &config, args.algorithm)?;
    let elapsed = started.elapsed().as_secs_f64();

    println!("algorithm: {:?}", result.algorithm);
    println!("estimate:  {}", result.estimate);
    println!("path:      {}", result.path.join(" -> "));
    if result.algorithm == Algorithm::Bucketed {
        println!("budget:    {}", report_allocation(&result)?);
    }
    if args.all_paths && args.algorithm == AlgorithmArg::Baseline {
        let seeds = SeedDerivation::new(config.seed);
        for path in graph.enumerate_paths(config.path_cap)? {
            let mut losses =
                riskpath::baseline::rollout_path(&graph, &path, config.samples, seeds)?;
            let q = riskpath::quantile::quantile_in_place(&mut losses, 1.0 - config.alpha);
            println!("  {}: {}", path.names(&graph).join(" -> "), q);
        }
    }
    println!("elapsed:   {elapsed:.3}s");

    if let Some(out) = args.out {
        let file = ResultFile {
            graph_hash: graph_hash(&spec),
            result,
        };
        save_result(&out, &file, elapsed)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_coverage(args: CoverageArgs) -> Result<(), Error> {
    let config = args.config.to_config();
    config.validate()?;
    let (graph, spec) = load_graph(&args.graph)?;
    let result_file = load_result(&args.result)?;
    if result_file.graph_hash != graph_hash(&spec) {
        return Err(Error::GraphMismatch);
    }
    let result = result_file.result;
    let path = graph.path_from_names(&result.path)?;
    let seeds = SeedDerivation::new(config.seed);
    let started = Instant::now();
    let mut report = coverage(
        &graph,
        &path,
        result.estimate,
        1.0 - result.alpha,
        config.coverage_samples,
        seeds,
    )?;
    // theorem verdicts need closed-form loss laws; skip them when the
    // graph has edges outside the analytic families
    if AnalyticOracle::for_graph(&graph).is_ok() {
        let run_config = RiskConfig {
            alpha: result.alpha,
            buckets: result.buckets,
            samples: result.samples,
            ..config.clone()
        };
        report.verdicts = Some(theorem_verdicts(&graph, &result, &run_config)?);
    }
    let elapsed = started.elapsed().as_secs_f64();

    println!(
        "coverage: {} / {} = {:.4} (target {:.4}), 95% CI [{:.4}, {:.4}]",
        report.covered, report.samples, report.coverage, report.target, report.ci_lo, report.ci_hi
    );
    if let Some(v) = &report.verdicts {
        println!(
            "bounds:   lower ok = {} (floor {:.4}), upper ok = {} (ceiling {:.4})",
            v.thm1_lower_ok, v.lower_floor, v.thm2_upper_ok, v.upper_ceiling
        );
    }

    if let Some(out) = args.out {
        let file = ReportFile {
            graph_hash: graph_hash(&spec),
            report,
        };
        save_report(&out, &file, elapsed)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn sweep_row(
    graph: &AgentGraph,
    config: &RiskConfig,
    param: String,
) -> Result<SweepRow, Error> {
    let started = Instant::now();
    let result = bucketed_var(graph, config)?;
    let path = graph.path_from_names(&result.path)?;
    let report = coverage(
        graph,
        &path,
        result.estimate,
        1.0 - config.alpha,
        config.coverage_samples,
        SeedDerivation::new(config.seed),
    )?;
    Ok(SweepRow {
        param,
        estimate: result.estimate,
        coverage: report.coverage,
        ci_lo: report.ci_lo,
        ci_hi: report.ci_hi,
        seconds: started.elapsed().as_secs_f64(),
    })
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Error> {
    let base = args.config.to_config();
    base.validate()?;
    if args.range.is_empty() {
        return Err(Error::InvalidConfig("sweep range must be non-empty".into()));
    }
    let (graph, _) = load_graph(&args.graph)?;
    let mut rows = Vec::with_capacity(args.range.len());
    match args.kind {
        SweepKind::Samples => {
            for &n in &args.range {
                let config = base.clone().with_samples(n);
                config.validate()?;
                rows.push(sweep_row(&graph, &config, n.to_string())?);
            }
        }
        SweepKind::Buckets => {
            for &d in &args.range {
                let config = base.clone().with_buckets(u32::try_from(d).map_err(|_| {
                    Error::InvalidConfig(format!("bucket count {d} out of range"))
                })?);
                config.validate()?;
                rows.push(sweep_row(&graph, &config, d.to_string())?);
            }
        }
        SweepKind::Agents => {
            // replicate the path the estimator picks on the base graph
            let chosen = bucketed_var(&graph, &base)?;
            let path = graph.path_from_names(&chosen.path)?;
            for &k in &args.range {
                let spec = benchgen::replicate_path(&graph, &path, k)?;
                let replicated = AgentGraph::build(spec)?;
                rows.push(sweep_row(&replicated, &base, k.to_string())?);
            }
        }
    }
    save_sweep(&args.out, &rows)?;
    for row in &rows {
        println!(
            "{}: estimate {} coverage {:.4} [{:.4}, {:.4}]",
            row.param, row.estimate, row.coverage, row.ci_lo, row.ci_hi
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}
