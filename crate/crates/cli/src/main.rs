use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sparsecut::graph::{load_edge_list, Graph, NodeId};
use sparsecut::oracle::{brute_force_sparsest_cut, exact_ppr, exact_walk_distribution, OracleBudget};
use sparsecut::report::{to_json, CutReportDocument, NodeValuesDocument, OracleCutDocument};
use sparsecut::sparse_cut::{guess_phi, local_cluster, sparse_cut_pagerank, sparse_cut_randomwalk, Engine, SparseCutConfig};
use sparsecut::walk::WalkMode;
use sparsecut::{generate, Family, GraphFamilySpec, SimConfig};

mod bench;

#[derive(Parser)]
#[command(name = "sparsecut", version, about = "Distributed sparse-cut detection on a simulated CONGEST network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated graph as an edge list.
    Generate(GenerateArgs),
    /// Run a sparse-cut algorithm and write its report.
    Run(RunArgs),
    /// Run an exact oracle.
    Oracle(OracleArgs),
    /// Run a family sweep and print a results table.
    Bench(bench::BenchArgs),
}

#[derive(Args)]
struct GraphSource {
    /// Edge-list file.
    #[arg(long, conflicts_with = "family", required_unless_present = "family")]
    graph: Option<PathBuf>,
    /// barbell, cycle, complete, path, star or random.
    #[arg(long, requires = "n")]
    family: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Edge probability for the random family.
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: Option<f64>,
    /// Seed for the random family.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Randomwalk,
    Pagerank,
    Local,
    Guess,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Tokens,
    Diffusion,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Randomwalk,
    Pagerank,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source_graph: GraphSource,
    #[arg(long, value_enum)]
    algo: Algo,
    /// Target conductance; required for randomwalk and pagerank.
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    balance: f64,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    walks: Option<u64>,
    #[arg(long, value_enum, default_value = "diffusion")]
    mode: ModeArg,
    /// Engine for local and guess.
    #[arg(long, value_enum, default_value = "randomwalk")]
    engine: EngineArg,
    /// Source node label (local only).
    #[arg(long)]
    source: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_rounds: Option<u64>,
    #[arg(long)]
    strict_bits: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleWhat {
    Sparsest,
    Walk,
    Ppr,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    source_graph: GraphSource,
    #[arg(long, value_enum)]
    what: OracleWhat,
    /// Source node label for walk and ppr; defaults to the first node.
    #[arg(long)]
    source: Option<u64>,
    #[arg(long, default_value_t = 1)]
    length: usize,
    #[arg(long, default_value_t = 0.15)]
    alpha: f64,
    #[arg(long, default_value_t = 22)]
    max_n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub(crate) enum Failure {
    Config(String),
    Timeout(String),
}

impl From<sparsecut::Error> for Failure {
    fn from(e: sparsecut::Error) -> Self {
        if e.is_timeout() {
            Failure::Timeout(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, Failure>;

pub(crate) fn family_spec(name: &str, n: usize, p: Option<f64>, seed: u64) -> CliResult<GraphFamilySpec> {
    let family = match name.parse::<Family>()? {
        Family::RandomConnected { p: default_p, .. } => Family::RandomConnected {
            p: p.unwrap_or(default_p),
            seed,
        },
        other => other,
    };
    Ok(GraphFamilySpec::new(family, n))
}

fn load_graph(src: &GraphSource, seed: u64) -> CliResult<Graph> {
    match (&src.graph, &src.family) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            let loaded = load_edge_list(&text)?;
            if loaded.had_duplicates() {
                eprintln!("warning: {} duplicate edges ignored", loaded.duplicate_edges);
            }
            Ok(loaded.graph)
        }
        (None, Some(name)) => {
            let n = src.n.ok_or_else(|| Failure::Config("--family needs --n".into()))?;
            Ok(generate(&family_spec(name, n, src.p, seed)?)?)
        }
        (None, None) => Err(Failure::Config("one of --graph or --family is required".into())),
    }
}

fn node_by_label(g: &Graph, label: u64) -> CliResult<NodeId> {
    g.labels()
        .iter()
        .position(|&l| l == label)
        .ok_or_else(|| Failure::Config(format!("node {label} is not in the graph")))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_generate(args: &GenerateArgs) -> CliResult<()> {
    let g = generate(&family_spec(&args.family, args.n, args.p, args.seed)?)?;
    emit(args.out.as_deref(), &g.to_edge_list())
}

fn cmd_run(args: &RunArgs) -> CliResult<()> {
    let g = load_graph(&args.source_graph, args.seed)?;
    let mut sim = SimConfig::with_seed(args.seed);
    sim.strict_bits = args.strict_bits;
    if let Some(max) = args.max_rounds {
        sim.max_rounds = max;
    }
    let phi = args.phi.unwrap_or(0.5);
    let mut cfg = SparseCutConfig::new(phi, args.balance);
    cfg.epsilon = args.epsilon;
    cfg.walks = args.walks;
    cfg.mode = match args.mode {
        ModeArg::Tokens => WalkMode::Tokens,
        ModeArg::Diffusion => WalkMode::Diffusion,
    };
    let engine = match args.engine {
        EngineArg::Randomwalk => Engine::RandomWalk,
        EngineArg::Pagerank => Engine::PageRank,
    };
    let needs_phi = matches!(args.algo, Algo::Randomwalk | Algo::Pagerank);
    if needs_phi && args.phi.is_none() {
        return Err(Failure::Config("--phi is required for randomwalk and pagerank".into()));
    }
    if args.source.is_some() && !matches!(args.algo, Algo::Local) {
        return Err(Failure::Config("--source is only valid with --algo local".into()));
    }
    let report = match args.algo {
        Algo::Randomwalk => sparse_cut_randomwalk(&g, &cfg, &sim)?,
        Algo::Pagerank => sparse_cut_pagerank(&g, &cfg, &sim)?,
        Algo::Guess => guess_phi(&g, args.balance, engine, &cfg, &sim)?,
        Algo::Local => {
            let label = args
                .source
                .ok_or_else(|| Failure::Config("--algo local needs --source".into()))?;
            local_cluster(&g, node_by_label(&g, label)?, engine, &cfg, &sim)?
        }
    };
    emit(args.out.as_deref(), &to_json(&CutReportDocument::new(&g, &report)))
}

fn cmd_oracle(args: &OracleArgs) -> CliResult<()> {
    let g = load_graph(&args.source_graph, 0)?;
    let source = match args.source {
        Some(label) => node_by_label(&g, label)?,
        None => 0,
    };
    let text = match args.what {
        OracleWhat::Sparsest => {
            let budget = OracleBudget {
                max_n_bruteforce: args.max_n,
                ..OracleBudget::default()
            };
            let (cut, phi) = brute_force_sparsest_cut(&g, &budget)?;
            to_json(&OracleCutDocument::new(&g, &cut, phi))
        }
        OracleWhat::Walk => {
            let values = exact_walk_distribution(&g, source, args.length)?;
            let mut doc = NodeValuesDocument::new(&g, "walk", source, values);
            doc.oracle = true;
            doc.length = Some(args.length);
            to_json(&doc)
        }
        OracleWhat::Ppr => {
            let values = exact_ppr(&g, source, args.alpha, OracleBudget::default().ppr_tail_tol)?;
            let mut doc = NodeValuesDocument::new(&g, "ppr", source, values);
            doc.oracle = true;
            doc.alpha = Some(args.alpha);
            to_json(&doc)
        }
    };
    emit(args.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Run(args) => cmd_run(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Bench(args) => bench::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Timeout(msg)) => {
            eprintln!("timeout: {msg}");
            ExitCode::from(3)
        }
    }
}
