use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;

use sparsecut::family::barbell_min_conductance;
use sparsecut::graph::{to_f64, Fraction};
use sparsecut::oracle::{brute_force_sparsest_cut, OracleBudget};
use sparsecut::report::format_fraction;
use sparsecut::sparse_cut::{sparse_cut_pagerank, sparse_cut_randomwalk, SparseCutConfig};
use sparsecut::{generate, Family, Graph, SimConfig};

use crate::{emit, family_spec, CliResult, EngineArg, Failure};

#[derive(Args)]
pub(crate) struct BenchArgs {
    #[arg(long, default_value = "barbell")]
    family: String,
    /// Comma-separated node counts; an empty list gives an empty table.
    #[arg(long, default_value = "")]
    sizes: String,
    #[arg(long)]
    p: Option<f64>,
    /// Seeds per size, starting at --seed.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "randomwalk")]
    engine: EngineArg,
    #[arg(long)]
    strict_bits: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

const HEADER: &str = "n\tseed\tphi_star\treturned_phi\trounds\tmessages\tstatus\n";

struct Row {
    n: usize,
    seed: u64,
    phi_star: Option<Fraction>,
    returned: Option<Fraction>,
    rounds: u64,
    messages: u64,
    status: String,
}

impl Row {
    fn line(&self) -> String {
        let frac = |x: Option<Fraction>| x.map_or_else(|| "-".to_string(), |f| format!("{:.12}", to_f64(f)));
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            self.n,
            self.seed,
            frac(self.phi_star),
            frac(self.returned),
            self.rounds,
            self.messages,
            self.status
        )
    }
}

/// Optimum conductance and the balance of an optimal cut.
fn optimum(family: Family, g: &Graph) -> Result<(Fraction, f64), sparsecut::Error> {
    let n = g.node_count();
    let budget = OracleBudget::default();
    if n <= budget.max_n_bruteforce {
        let (cut, phi) = brute_force_sparsest_cut(g, &budget)?;
        return Ok((phi, to_f64(cut.balance())));
    }
    match family {
        Family::Barbell => Ok((barbell_min_conductance(n)?, ((n - 1) / 2) as f64 / n as f64)),
        _ => Err(sparsecut::Error::OracleCap {
            n,
            cap: budget.max_n_bruteforce,
        }),
    }
}

fn bench_row(args: &BenchArgs, n: usize, seed: u64) -> Row {
    let mut row = Row {
        n,
        seed,
        phi_star: None,
        returned: None,
        rounds: 0,
        messages: 0,
        status: "ok".into(),
    };
    let mut attempt = || -> Result<(), sparsecut::Error> {
        let spec = family_spec(&args.family, n, args.p, seed).map_err(|_| {
            sparsecut::Error::InvalidFamily(args.family.clone())
        })?;
        let g = generate(&spec)?;
        let (phi_star, balance) = optimum(spec.family, &g)?;
        row.phi_star = Some(phi_star);
        let mut sim = SimConfig::with_seed(seed);
        sim.strict_bits = args.strict_bits;
        let cfg = SparseCutConfig::new(to_f64(phi_star).min(0.999), balance.clamp(1e-9, 0.5));
        let report = match args.engine {
            EngineArg::Randomwalk => sparse_cut_randomwalk(&g, &cfg, &sim)?,
            EngineArg::Pagerank => sparse_cut_pagerank(&g, &cfg, &sim)?,
        };
        row.returned = Some(report.conductance);
        row.rounds = report.metrics.rounds;
        row.messages = report.metrics.messages_total;
        Ok(())
    };
    if let Err(e) = attempt() {
        row.status = format!("error: {e}");
    }
    row
}

fn parse_sizes(list: &str) -> CliResult<Vec<usize>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Failure::Config(format!("bad size {s:?}"))))
        .collect()
}

pub(crate) fn run(args: &BenchArgs) -> CliResult<()> {
    let jobs: Vec<(usize, u64)> = parse_sizes(&args.sizes)?
        .into_iter()
        .flat_map(|n| (0..args.seeds).map(move |k| (n, args.seed + k)))
        .collect();
    let rows: Vec<Row> = jobs.par_iter().map(|&(n, seed)| bench_row(args, n, seed)).collect();
    let mut table = String::from(HEADER);
    for row in &rows {
        table.push_str(&row.line());
    }
    emit(args.out.as_deref(), &table)?;
    if let Some(exact) = rows.iter().find_map(|r| r.phi_star.zip(r.returned).filter(|(a, b)| a > b)) {
        eprintln!(
            "warning: returned conductance {} is below the oracle optimum {}",
            format_fraction(exact.1),
            format_fraction(exact.0)
        );
    }
    Ok(())
}
