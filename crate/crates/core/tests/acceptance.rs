//! Acceptance suite. Run with `cargo test -p sparsecut --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use sparsecut::congest::RoundMetrics;
use sparsecut::family::{barbell_min_conductance, generate, GraphFamilySpec};
use sparsecut::graph::{to_f64, Fraction, Graph, NodeId};
use sparsecut::oracle::{brute_force_sparsest_cut, exact_ppr, exact_walk_distribution, OracleBudget};
use sparsecut::pagerank::{estimate_pagerank, PageRankConfig};
use sparsecut::report::{to_json, CutReportDocument};
use sparsecut::sparse_cut::{
    local_cluster, sparse_cut_pagerank, sparse_cut_randomwalk, within_quadratic, CutReport, Engine, Estimator,
    SparseCutConfig,
};
use sparsecut::sweep::{sweep_conductances, sweep_conductances_direct, sweep_distributed};
use sparsecut::walk::{estimate_probability, walks_for_accuracy, WalkConfig, WALK_TALLY_ROUNDS};
use sparsecut::SimConfig;

/// What one criterion run produced.
struct Outcome {
    pass: bool,
    detail: String,
    /// Everything the run reported, for the determinism check.
    digest: String,
    /// Budget violations summed over every simulation in the run.
    violations: u64,
    simulations: u64,
}

#[derive(Default)]
struct Tally {
    violations: u64,
    simulations: u64,
}

impl Tally {
    fn add(&mut self, m: &RoundMetrics) {
        self.violations += m.budget_violations;
        self.simulations += 1;
    }
}

fn strict(seed: u64) -> SimConfig {
    SimConfig::with_seed(seed).strict()
}

fn barbell(n: usize) -> Graph {
    generate(&GraphFamilySpec::barbell(n)).unwrap()
}

fn report_json(g: &Graph, r: &CutReport) -> String {
    to_json(&CutReportDocument::new(g, r))
}

fn sweep_correctness() -> Outcome {
    let results: Vec<(bool, String, u64)> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let n = 2 + (i as usize % 15);
            let g = generate(&GraphFamilySpec::random_connected(n, 0.3, i)).unwrap();
            let mut order: Vec<NodeId> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(i));
            let incremental = sweep_conductances(&g, &order).unwrap();
            let direct = sweep_conductances_direct(&g, &order).unwrap();
            let (distributed, metrics) = sweep_distributed(&g, &order, &strict(i)).unwrap();
            let ok = incremental.conductances == direct && distributed == incremental;
            (ok, format!("{:?}\n", incremental.conductances), metrics.budget_violations)
        })
        .collect();
    let passed = results.iter().filter(|r| r.0).count();
    Outcome {
        pass: passed == 200,
        detail: format!("{passed}/200 (graph, permutation) pairs agree on every prefix"),
        digest: results.iter().map(|r| r.1.as_str()).collect(),
        violations: results.iter().map(|r| r.2).sum(),
        simulations: 200,
    }
}

fn walk_accuracy() -> Outcome {
    let g = generate(&GraphFamilySpec::cycle(8)).unwrap();
    let walks = walks_for_accuracy(8, 0.5).unwrap();
    let exact = exact_walk_distribution(&g, 0, 5).unwrap();
    let runs: Vec<(f64, String, RoundMetrics)> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let (est, metrics) = estimate_probability(&g, &WalkConfig::tokens(0, 5, walks), &strict(seed)).unwrap();
            let dev = est
                .values()
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            (dev, format!("{:?}\n", est.mass()), metrics)
        })
        .collect();
    let within = runs.iter().filter(|r| r.0 <= 0.5 / 8.0).count();
    let worst = runs.iter().map(|r| r.0).fold(0.0, f64::max);
    let mut tally = Tally::default();
    runs.iter().for_each(|r| tally.add(&r.2));
    Outcome {
        pass: walks == 2130 && within >= 95,
        detail: format!("K = {walks}, {within}/100 seeds within 0.0625 (worst deviation {worst:.4})"),
        digest: runs.iter().map(|r| r.1.as_str()).collect(),
        violations: tally.violations,
        simulations: tally.simulations,
    }
}

fn round_contract() -> Outcome {
    let mut ok = true;
    let mut tally = Tally::default();
    let mut digest = String::new();
    let mut failures = Vec::new();
    for (name, g) in [("C8", generate(&GraphFamilySpec::cycle(8)).unwrap()), ("B7", barbell(7))] {
        for length in [1usize, 5, 20] {
            for cfg in [WalkConfig::tokens(0, length, 2130), WalkConfig::diffusion(0, length)] {
                let sim = SimConfig {
                    trace: true,
                    ..strict(length as u64)
                };
                let (est, metrics) = estimate_probability(&g, &cfg, &sim).unwrap();
                tally.add(&metrics);
                let trace = metrics.trace.as_ref().unwrap();
                let forwarding = trace.iter().map(|e| e.round).max().unwrap_or(0);
                let every_round_used = (1..=length as u64).all(|r| trace.iter().any(|e| e.round == r));
                let this_ok = forwarding == length as u64
                    && every_round_used
                    && metrics.rounds == length as u64 + WALK_TALLY_ROUNDS;
                if !this_ok {
                    failures.push(format!("{name} l={length} {:?}: {forwarding} forwarding rounds", cfg.mode));
                }
                ok &= this_ok;
                writeln!(digest, "{name} {length} {:?} {:?}", est.mass(), metrics.summary()).unwrap();
            }
        }
    }
    Outcome {
        pass: ok,
        detail: if ok {
            "forwarding used exactly l rounds for l in {1,5,20} on C8 and B7 (tokens and diffusion)".into()
        } else {
            failures.join("; ")
        },
        digest,
        violations: tally.violations,
        simulations: tally.simulations,
    }
}

fn pagerank_accuracy() -> Outcome {
    const K: u64 = 1_000_000;
    let two = generate(&GraphFamilySpec::path(2)).unwrap();
    let star = generate(&GraphFamilySpec::star(5)).unwrap();
    let star_exact = exact_ppr(&star, 0, 0.2, 1e-12).unwrap();
    let runs: Vec<(bool, f64, String, RoundMetrics, RoundMetrics)> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let sim2 = strict(seed).with_count_capacity(2, K);
            let (a, ma) = estimate_pagerank(&two, &PageRankConfig::tokens(0, 0.5, K), &sim2).unwrap();
            let sim5 = strict(seed).with_count_capacity(5, K);
            let (b, mb) = estimate_pagerank(&star, &PageRankConfig::tokens(0, 0.2, K), &sim5).unwrap();
            let star_dev = b
                .values
                .iter()
                .zip(&star_exact)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            let digest = format!("{:?} {:?}\n", a.visits, b.visits);
            ((a.values[0] - 2.0 / 3.0).abs() <= 0.01, star_dev, digest, ma, mb)
        })
        .collect();
    let two_ok = runs.iter().filter(|r| r.0).count();
    let star_ok = runs.iter().filter(|r| r.1 <= 0.01).count();
    let mut tally = Tally::default();
    for r in &runs {
        tally.add(&r.3);
        tally.add(&r.4);
    }
    Outcome {
        pass: two_ok >= 99 && star_ok == 100,
        detail: format!("two-node {two_ok}/100 within 0.01 of 2/3; star K_1,4 {star_ok}/100 seeds with every node within 0.01"),
        digest: runs.iter().map(|r| r.2.as_str()).collect(),
        violations: tally.violations,
        simulations: tally.simulations,
    }
}

struct BarbellCase {
    n: usize,
    graph: Graph,
    phi_star: Fraction,
    balance: f64,
}

/// `φ*` from the brute-force oracle when `n` is within its cap, otherwise
/// from the closed form for barbells.
fn barbell_cases(sizes: &[usize]) -> Vec<BarbellCase> {
    sizes
        .iter()
        .map(|&n| {
            let graph = barbell(n);
            let budget = OracleBudget::default();
            let phi_star = if n <= budget.max_n_bruteforce {
                let (_, phi) = brute_force_sparsest_cut(&graph, &budget).unwrap();
                assert_eq!(phi, barbell_min_conductance(n).unwrap());
                phi
            } else {
                barbell_min_conductance(n).unwrap()
            };
            BarbellCase {
                n,
                graph,
                phi_star,
                balance: ((n - 1) / 2) as f64 / n as f64,
            }
        })
        .collect()
}

fn quadratic_guarantee(cases: &[BarbellCase]) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    let mut digest = String::new();
    let mut tally = Tally::default();
    for case in cases {
        let cfg = SparseCutConfig::new(to_f64(case.phi_star), case.balance);
        let runs: Vec<CutReport> = (0..100u64)
            .into_par_iter()
            .map(|seed| sparse_cut_randomwalk(&case.graph, &cfg, &strict(seed)).unwrap())
            .collect();
        let quadratic = runs.iter().filter(|r| within_quadratic(r.conductance, case.phi_star)).count();
        let exact = runs.iter().filter(|r| r.conductance == case.phi_star).count();
        pass &= quadratic >= 90 && exact >= 80;
        detail.push(format!("B{}: {quadratic}/100 <= sqrt(phi*), {exact}/100 = phi* = {}", case.n, case.phi_star));
        for r in &runs {
            tally.add(&r.metrics);
            digest.push_str(&report_json(&case.graph, r));
        }
    }
    Outcome {
        pass,
        detail: detail.join("; "),
        digest,
        violations: tally.violations,
        simulations: tally.simulations,
    }
}

fn pagerank_guarantee(cases: &[BarbellCase]) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    let mut digest = String::new();
    let mut tally = Tally::default();
    for case in cases {
        let cfg = SparseCutConfig {
            estimator: Estimator::ExactOracle,
            ..SparseCutConfig::pagerank(to_f64(case.phi_star), case.balance)
        };
        let runs: Vec<CutReport> = (0..10u64)
            .into_par_iter()
            .map(|seed| sparse_cut_pagerank(&case.graph, &cfg, &strict(seed)).unwrap())
            .collect();
        let exact = runs.iter().filter(|r| r.conductance == case.phi_star).count();
        pass &= exact == runs.len();
        detail.push(format!("B{}: {exact}/{} seeds = phi*", case.n, runs.len()));
        for r in &runs {
            tally.add(&r.metrics);
            digest.push_str(&report_json(&case.graph, r));
        }
    }
    Outcome {
        pass,
        detail: detail.join("; "),
        digest,
        violations: tally.violations,
        simulations: tally.simulations,
    }
}

fn local_cluster_b7() -> Outcome {
    let g = barbell(7);
    let base = SparseCutConfig::new(0.5, 0.5);
    let runs: Vec<CutReport> = (0..100u64)
        .into_par_iter()
        .map(|seed| local_cluster(&g, 0, Engine::RandomWalk, &base, &strict(seed)).unwrap())
        .collect();
    let good = runs
        .iter()
        .filter(|r| {
            let cluster = r.cluster.as_ref().unwrap();
            [0, 1, 2].iter().all(|v| cluster.contains(v)) && r.conductance == Ratio::new(1, 7)
        })
        .count();
    let mut tally = Tally::default();
    runs.iter().for_each(|r| tally.add(&r.metrics));
    Outcome {
        pass: good >= 90,
        detail: format!("{good}/100 seeds return a cluster containing {{0,1,2}} with conductance 1/7"),
        digest: runs.iter().map(|r| report_json(&g, r)).collect(),
        violations: tally.violations,
        simulations: tally.simulations,
    }
}

fn round_trend(cases: &[BarbellCase]) -> Outcome {
    let mut means = Vec::new();
    let mut digest = String::new();
    let mut tally = Tally::default();
    for case in cases {
        let cfg = SparseCutConfig::new(to_f64(case.phi_star), case.balance);
        let runs: Vec<CutReport> = (0..10u64)
            .into_par_iter()
            .map(|seed| sparse_cut_randomwalk(&case.graph, &cfg, &strict(seed)).unwrap())
            .collect();
        let mean = runs.iter().map(|r| r.metrics.rounds as f64).sum::<f64>() / runs.len() as f64;
        means.push((case.n, mean));
        for r in &runs {
            tally.add(&r.metrics);
            digest.push_str(&report_json(&case.graph, r));
        }
    }
    let monotone = means.windows(2).all(|w| w[1].1 > w[0].1);
    let ratio = means.last().unwrap().1 / means[0].1;
    let table: Vec<String> = means.iter().map(|(n, m)| format!("B{n} {m:.0}")).collect();
    Outcome {
        pass: monotone && ratio >= 4.0,
        detail: format!("mean rounds {}; ratio B31/B11 = {ratio:.2}", table.join(", ")),
        digest,
        violations: tally.violations,
        simulations: tally.simulations,
    }
}

struct Criterion<'a> {
    id: usize,
    name: &'static str,
    limit: Option<Duration>,
    run: Box<dyn Fn() -> Outcome + 'a>,
}

fn main() {
    let suite = barbell_cases(&[11, 15, 21]);
    let trend = barbell_cases(&[11, 15, 21, 31]);
    let suite = &suite;
    let trend = &trend;
    let criteria: Vec<Criterion> = vec![
        Criterion {
            id: 1,
            name: "sweep correctness",
            limit: Some(Duration::from_secs(30)),
            run: Box::new(sweep_correctness),
        },
        Criterion {
            id: 2,
            name: "walk estimate accuracy",
            limit: Some(Duration::from_secs(60)),
            run: Box::new(walk_accuracy),
        },
        Criterion {
            id: 3,
            name: "walk round contract",
            limit: None,
            run: Box::new(round_contract),
        },
        Criterion {
            id: 4,
            name: "pagerank estimator",
            limit: Some(Duration::from_secs(120)),
            run: Box::new(pagerank_accuracy),
        },
        Criterion {
            id: 5,
            name: "quadratic guarantee on barbells",
            limit: Some(Duration::from_secs(600)),
            run: Box::new(move || quadratic_guarantee(suite)),
        },
        Criterion {
            id: 6,
            name: "pagerank variant with oracle vectors",
            limit: None,
            run: Box::new(move || pagerank_guarantee(suite)),
        },
        Criterion {
            id: 7,
            name: "local cluster on B7",
            limit: None,
            run: Box::new(local_cluster_b7),
        },
        Criterion {
            id: 9,
            name: "round-complexity trend",
            limit: None,
            run: Box::new(move || round_trend(trend)),
        },
    ];

    let mut lines = Vec::new();
    let mut all_pass = true;
    let mut violations = 0;
    let mut simulations = 0;
    let mut deterministic = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let first = (c.run)();
        let elapsed = start.elapsed();
        let second = (c.run)();
        let in_time = c.limit.map_or(true, |l| elapsed <= l);
        let pass = first.pass && in_time;
        violations += first.violations + second.violations;
        simulations += first.simulations + second.simulations;
        deterministic.push((c.id, first.digest == second.digest && !first.digest.is_empty()));
        let limit = c.limit.map_or(String::new(), |l| format!(", limit {}s", l.as_secs()));
        lines.push(format!(
            "criterion {}: {} ({}): {} [{:.1}s{}]",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.name,
            first.detail,
            elapsed.as_secs_f64(),
            limit
        ));
        println!("{}", lines.last().unwrap());
        all_pass &= pass;
    }

    let discipline = violations == 0;
    lines.push(format!(
        "criterion 8: {} (CONGEST discipline): {violations} budget violations over {simulations} strict runs; duplicate sends abort a run",
        if discipline { "PASS" } else { "FAIL" }
    ));
    println!("{}", lines.last().unwrap());
    all_pass &= discipline;

    let nondeterministic: Vec<usize> = deterministic.iter().filter(|d| !d.1).map(|d| d.0).collect();
    lines.push(format!(
        "criterion 10: {} (determinism): {}",
        if nondeterministic.is_empty() { "PASS" } else { "FAIL" },
        if nondeterministic.is_empty() {
            format!("{} criteria reran with byte-identical reports", deterministic.len())
        } else {
            format!("reports differ on rerun for criteria {nondeterministic:?}")
        }
    ));
    println!("{}", lines.last().unwrap());
    all_pass &= nondeterministic.is_empty();

    assert!(all_pass, "acceptance failures:\n{}", lines.join("\n"));
}
