//! End-to-end sparse-cut search.
//!
//! For each sampled source (and, for random walks, each sampled length) a
//! candidate runs four simulated phases: estimate the distribution, broadcast
//! every node's `ρ` through a BFS tree, sweep the resulting order, and flood
//! the candidate's best prefix from the order head. A final flood from the
//! first sampled source announces the winner. Reported rounds are the sum
//! over all phases in that sequential order.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::congest::{driver_rng, RoundMetrics, SimConfig};
use crate::error::{Error, Result};
use crate::graph::{Cut, Fraction, Graph, NodeId};
use crate::oracle;
use crate::pagerank::{estimate_pagerank, PageRankConfig};
use crate::protocol;
use crate::sweep::sweep_distributed;
use crate::walk::{estimate_probability, mass_limb_width, to_fixed_point, walks_for_accuracy, WalkConfig, WalkMode};

/// Empirical constant `c` in the round bounds of [`SparseCutConfig::round_bound`].
pub const ROUND_BOUND_CONSTANT: f64 = 8.0;

/// First guess of the φ-halving loop for the random-walk engine.
pub const RANDOMWALK_FIRST_GUESS: f64 = 0.5;
/// First guess for the PageRank engine; `α = 10 φ` must stay at most 1.
pub const PAGERANK_FIRST_GUESS: f64 = 1.0 / 16.0;

const SEED_SOURCES: u64 = 1;
const SEED_LENGTHS: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    RandomWalk,
    PageRank,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::RandomWalk => "randomwalk",
            Engine::PageRank => "pagerank",
        }
    }

    pub fn first_guess(&self) -> f64 {
        match self {
            Engine::RandomWalk => RANDOMWALK_FIRST_GUESS,
            Engine::PageRank => PAGERANK_FIRST_GUESS,
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "randomwalk" => Ok(Engine::RandomWalk),
            "pagerank" => Ok(Engine::PageRank),
            _ => Err(Error::config(format!("unknown engine {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SourcePlan {
    /// `ceil(ln n / b)` sources drawn uniformly with replacement.
    Sample,
    Fixed(Vec<NodeId>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LengthPlan {
    /// `ceil(ln n)` lengths drawn uniformly from `1..=ceil(c₁/φ)`.
    Sample,
    Fixed(Vec<usize>),
}

/// Where per-source distributions come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    Simulated,
    /// Exact oracle vectors, charged zero rounds. Broadcast and sweep are
    /// still simulated.
    ExactOracle,
}

#[derive(Clone, Debug)]
pub struct SparseCutConfig {
    /// Target conductance `φ`.
    pub phi: f64,
    /// Assumed balance `b`.
    pub balance: f64,
    /// Token mode: derive `K` from this `ε` when `walks` is unset.
    pub epsilon: Option<f64>,
    /// Token mode: explicit `K`.
    pub walks: Option<u64>,
    /// `c₁`: lengths are drawn from `1..=ceil(c₁/φ)`.
    pub length_cap_multiplier: f64,
    pub mode: WalkMode,
    pub engine: Engine,
    pub sources: SourcePlan,
    pub lengths: LengthPlan,
    pub estimator: Estimator,
}

impl SparseCutConfig {
    pub fn new(phi: f64, balance: f64) -> Self {
        SparseCutConfig {
            phi,
            balance,
            epsilon: None,
            walks: None,
            length_cap_multiplier: 4.0,
            mode: WalkMode::Diffusion,
            engine: Engine::RandomWalk,
            sources: SourcePlan::Sample,
            lengths: LengthPlan::Sample,
            estimator: Estimator::Simulated,
        }
    }

    pub fn pagerank(phi: f64, balance: f64) -> Self {
        SparseCutConfig {
            engine: Engine::PageRank,
            ..Self::new(phi, balance)
        }
    }

    /// Token mode with `ε = φ²/4`.
    pub fn theoretical_accuracy(mut self) -> Self {
        self.mode = WalkMode::Tokens;
        self.epsilon = Some(self.phi * self.phi / 4.0);
        self
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        let n = g.node_count();
        if !(self.phi > 0.0 && self.phi < 1.0) {
            return Err(Error::config(format!("phi must be in (0, 1), got {}", self.phi)));
        }
        if self.engine == Engine::PageRank && self.phi > 0.1 {
            return Err(Error::config(format!(
                "pagerank needs phi <= 1/10 so that alpha = 10 phi <= 1, got {}",
                self.phi
            )));
        }
        if !(self.balance > 0.0 && self.balance <= 0.5) {
            return Err(Error::config(format!("balance must be in (0, 1/2], got {}", self.balance)));
        }
        if !(self.length_cap_multiplier > 0.0 && self.length_cap_multiplier.is_finite()) {
            return Err(Error::config("length cap multiplier must be positive"));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(Error::config(format!("epsilon must be in (0, 1], got {eps}")));
            }
        }
        if self.walks == Some(0) {
            return Err(Error::config("at least one walk is required"));
        }
        if let SourcePlan::Fixed(sources) = &self.sources {
            if sources.is_empty() {
                return Err(Error::config("fixed source list is empty"));
            }
            if let Some(&node) = sources.iter().find(|&&s| s >= n) {
                return Err(Error::NodeOutOfRange { node, n });
            }
        }
        if matches!(&self.lengths, LengthPlan::Fixed(l) if l.is_empty()) {
            return Err(Error::config("fixed length list is empty"));
        }
        Ok(())
    }

    /// `ceil(c₁/φ)`.
    pub fn length_cap(&self) -> usize {
        (self.length_cap_multiplier / self.phi).ceil().max(1.0) as usize
    }

    pub fn source_count(&self, n: usize) -> usize {
        ((n as f64).ln() / self.balance).ceil().max(1.0) as usize
    }

    pub fn length_count(&self, n: usize) -> usize {
        (n as f64).ln().ceil().max(1.0) as usize
    }

    pub fn alpha(&self) -> f64 {
        10.0 * self.phi
    }

    /// Token count `K`: explicit, from `ε`, or the desk default
    /// `walks_for_accuracy(n, 1/2)` capped at the per-message count capacity.
    pub fn token_walks(&self, n: usize, sim: &SimConfig) -> Result<u64> {
        match (self.walks, self.epsilon) {
            (Some(k), _) => Ok(k),
            (None, Some(eps)) => walks_for_accuracy(n, eps),
            (None, None) => Ok(walks_for_accuracy(n, 0.5)?.min(sim.count_capacity(n))),
        }
    }

    /// `c (1/b) (1/φ + n) ln² n` for random walks and `c (1/b) (1/φ + n) ln n`
    /// for PageRank, with `c =` [`ROUND_BOUND_CONSTANT`].
    pub fn round_bound(&self, n: usize) -> f64 {
        let ln = (n as f64).ln().max(1.0);
        let logs = match self.engine {
            Engine::RandomWalk => ln * ln,
            Engine::PageRank => ln,
        };
        ROUND_BOUND_CONSTANT / self.balance * (1.0 / self.phi + n as f64) * logs
    }
}

/// One `(source, length)` or `(source, α)` candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateTrace {
    pub source: NodeId,
    pub length: Option<usize>,
    pub alpha: Option<f64>,
    pub best_j: usize,
    pub best_conductance: Fraction,
    pub estimate_rounds: u64,
    pub broadcast_rounds: u64,
    pub sweep_rounds: u64,
    pub announce_rounds: u64,
}

impl CandidateTrace {
    pub fn rounds(&self) -> u64 {
        self.estimate_rounds + self.broadcast_rounds + self.sweep_rounds + self.announce_rounds
    }
}

/// One iteration of the φ-halving loop.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GuessRecord {
    pub guess: f64,
    #[serde(serialize_with = "crate::report::serialize_fraction")]
    pub conductance: Fraction,
    pub accepted: bool,
    pub rounds: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    RandomWalk,
    PageRank,
    Local,
    Guess,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::RandomWalk => "randomwalk",
            Algorithm::PageRank => "pagerank",
            Algorithm::Local => "local",
            Algorithm::Guess => "guess",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CutReport {
    pub algorithm: Algorithm,
    pub engine: Engine,
    /// The `φ` the winning run used.
    pub phi_guess: f64,
    pub balance_target: f64,
    pub cut: Cut,
    /// Local clustering: the side of the cut that contains the source.
    pub cluster: Option<Vec<NodeId>>,
    /// Recomputed from the graph on `cut.members()`.
    pub conductance: Fraction,
    pub balance: Fraction,
    pub source_used: NodeId,
    pub length_used: Option<usize>,
    pub alpha_used: Option<f64>,
    pub metrics: RoundMetrics,
    pub trace: Vec<CandidateTrace>,
    pub final_broadcast_rounds: u64,
    /// Guessing loops only: whether some guess passed the acceptance check.
    pub accepted: Option<bool>,
    pub guesses: Vec<GuessRecord>,
}

impl CutReport {
    /// Members of the side containing `v`.
    pub fn side_of(&self, g: &Graph, v: NodeId) -> Vec<NodeId> {
        if self.cut.contains(v) {
            self.cut.members().to_vec()
        } else {
            self.cut.complement(g).members().to_vec()
        }
    }
}

fn mass_for(
    g: &Graph,
    cfg: &SparseCutConfig,
    source: NodeId,
    length: Option<usize>,
    sim: &SimConfig,
) -> Result<(Vec<u128>, RoundMetrics)> {
    let n = g.node_count();
    match (cfg.estimator, cfg.engine) {
        (Estimator::ExactOracle, Engine::RandomWalk) => {
            let p = oracle::exact_walk_distribution(g, source, length.unwrap_or(0))?;
            Ok((p.into_iter().map(to_fixed_point).collect(), RoundMetrics::default()))
        }
        (Estimator::ExactOracle, Engine::PageRank) => {
            let p = oracle::exact_ppr(g, source, cfg.alpha(), 1e-12)?;
            Ok((p.into_iter().map(to_fixed_point).collect(), RoundMetrics::default()))
        }
        (Estimator::Simulated, Engine::RandomWalk) => {
            let length = length.unwrap_or(0);
            let walk = match cfg.mode {
                WalkMode::Tokens => WalkConfig::tokens(source, length, cfg.token_walks(n, sim)?),
                WalkMode::Diffusion => WalkConfig::diffusion(source, length),
            };
            let (est, metrics) = estimate_probability(g, &walk, sim)?;
            Ok((est.mass().to_vec(), metrics))
        }
        (Estimator::Simulated, Engine::PageRank) => {
            let pr = match cfg.mode {
                WalkMode::Tokens => PageRankConfig::tokens(source, cfg.alpha(), cfg.token_walks(n, sim)?),
                WalkMode::Diffusion => PageRankConfig::diffusion(source, cfg.alpha()),
            };
            let (est, metrics) = estimate_pagerank(g, &pr, sim)?;
            Ok((est.mass().to_vec(), metrics))
        }
    }
}

struct Candidate {
    trace: CandidateTrace,
    order: Vec<NodeId>,
}

fn run_candidate(
    g: &Graph,
    cfg: &SparseCutConfig,
    source: NodeId,
    length: Option<usize>,
    sim: &SimConfig,
    metrics: &mut RoundMetrics,
) -> Result<Candidate> {
    let n = g.node_count();
    let (mass, est_metrics) = mass_for(g, cfg, source, length, &sim.derive(&[0]))?;
    metrics.absorb(&est_metrics);

    let (orders, bc_metrics) = protocol::broadcast_rho(g, &mass, mass_limb_width(sim, n), sim)?;
    metrics.absorb(&bc_metrics);
    let order = orders[0].clone();
    debug_assert!(orders.iter().all(|o| *o == order));

    let (sweep, sweep_metrics) = sweep_distributed(g, &order, sim)?;
    metrics.absorb(&sweep_metrics);

    let best = sweep.best_conductance;
    let payload = [*best.numer(), *best.denom(), sweep.best_j as u64];
    let (_, announce_metrics) = protocol::flood(g, order[0], &payload, sim)?;
    metrics.absorb(&announce_metrics);

    Ok(Candidate {
        trace: CandidateTrace {
            source,
            length,
            alpha: (cfg.engine == Engine::PageRank).then(|| cfg.alpha()),
            best_j: sweep.best_j,
            best_conductance: best,
            estimate_rounds: est_metrics.rounds,
            broadcast_rounds: bc_metrics.rounds,
            sweep_rounds: sweep_metrics.rounds,
            announce_rounds: announce_metrics.rounds,
        },
        order,
    })
}

fn sample_sources(g: &Graph, cfg: &SparseCutConfig, sim: &SimConfig) -> Vec<NodeId> {
    match &cfg.sources {
        SourcePlan::Fixed(s) => s.clone(),
        SourcePlan::Sample => {
            let n = g.node_count();
            let mut rng = driver_rng(sim.seed, SEED_SOURCES);
            (0..cfg.source_count(n)).map(|_| rng.random_range(0..n)).collect()
        }
    }
}

fn sample_lengths(g: &Graph, cfg: &SparseCutConfig, sim: &SimConfig, source_index: usize) -> Vec<Option<usize>> {
    if cfg.engine == Engine::PageRank {
        return vec![None];
    }
    match &cfg.lengths {
        LengthPlan::Fixed(l) => l.iter().copied().map(Some).collect(),
        LengthPlan::Sample => {
            let mut rng = driver_rng(sim.derive(&[source_index as u64]).seed, SEED_LENGTHS);
            let cap = cfg.length_cap();
            (0..cfg.length_count(g.node_count()))
                .map(|_| Some(rng.random_range(1..=cap)))
                .collect()
        }
    }
}

fn search(g: &Graph, cfg: &SparseCutConfig, sim: &SimConfig, algorithm: Algorithm) -> Result<CutReport> {
    cfg.validate(g)?;
    let sources = sample_sources(g, cfg, sim);
    let mut metrics = RoundMetrics {
        trace: sim.trace.then(Vec::new),
        ..RoundMetrics::default()
    };
    let mut trace: Vec<CandidateTrace> = Vec::new();
    let mut best: Option<(usize, Vec<NodeId>)> = None;
    for (si, &source) in sources.iter().enumerate() {
        for (li, length) in sample_lengths(g, cfg, sim, si).into_iter().enumerate() {
            let candidate_sim = sim.derive(&[si as u64, li as u64]);
            let candidate = run_candidate(g, cfg, source, length, &candidate_sim, &mut metrics)?;
            let improves = match &best {
                None => true,
                Some((k, _)) => candidate.trace.best_conductance < trace[*k].best_conductance,
            };
            trace.push(candidate.trace);
            if improves {
                best = Some((trace.len() - 1, candidate.order));
            }
        }
    }
    let (winner, order) = best.expect("at least one candidate runs");
    let win = &trace[winner];

    let payload = [winner as u64, win.best_j as u64];
    let (_, final_metrics) = protocol::flood(g, sources[0], &payload, sim)?;
    metrics.absorb(&final_metrics);

    let cut = Cut::new(g, order[..win.best_j].iter().copied())?;
    let conductance = crate::graph::conductance(g, &cut);
    debug_assert_eq!(conductance, win.best_conductance);
    Ok(CutReport {
        algorithm,
        engine: cfg.engine,
        phi_guess: cfg.phi,
        balance_target: cfg.balance,
        balance: crate::graph::balance(g, &cut),
        conductance,
        cut,
        cluster: None,
        source_used: win.source,
        length_used: win.length,
        alpha_used: win.alpha,
        final_broadcast_rounds: final_metrics.rounds,
        metrics,
        trace,
        accepted: None,
        guesses: Vec::new(),
    })
}

/// Random-walk sparse cut with `φ` and `b` known.
pub fn sparse_cut_randomwalk(g: &Graph, cfg: &SparseCutConfig, sim: &SimConfig) -> Result<CutReport> {
    let cfg = SparseCutConfig {
        engine: Engine::RandomWalk,
        ..cfg.clone()
    };
    search(g, &cfg, sim, Algorithm::RandomWalk)
}

/// PageRank sparse cut with `α = 10 φ`.
pub fn sparse_cut_pagerank(g: &Graph, cfg: &SparseCutConfig, sim: &SimConfig) -> Result<CutReport> {
    let cfg = SparseCutConfig {
        engine: Engine::PageRank,
        ..cfg.clone()
    };
    search(g, &cfg, sim, Algorithm::PageRank)
}

/// Guesses `φ = g₀, g₀/2, g₀/4, ...` down to `1/(2m)` (the first guess
/// always runs), accepting the first
/// run whose cut has conductance at most the guess.
fn guess_loop(g: &Graph, base: &SparseCutConfig, sim: &SimConfig, algorithm: Algorithm) -> Result<CutReport> {
    let floor = 1.0 / g.total_volume() as f64;
    let mut metrics = RoundMetrics {
        trace: sim.trace.then(Vec::new),
        ..RoundMetrics::default()
    };
    let mut guesses = Vec::new();
    let mut best: Option<CutReport> = None;
    let mut guess = base.engine.first_guess();
    let mut k = 0u64;
    loop {
        let cfg = SparseCutConfig {
            phi: guess,
            ..base.clone()
        };
        let report = search(g, &cfg, &sim.derive(&[1_000 + k]), algorithm)?;
        metrics.absorb(&report.metrics);
        let accepted = crate::graph::to_f64(report.conductance) <= guess;
        guesses.push(GuessRecord {
            guess,
            conductance: report.conductance,
            accepted,
            rounds: report.metrics.rounds,
        });
        if accepted || best.as_ref().map_or(true, |b| report.conductance < b.conductance) {
            best = Some(report);
        }
        if accepted || guess / 2.0 < floor {
            break;
        }
        guess /= 2.0;
        k += 1;
    }
    let mut report = best.expect("the first guess always runs");
    report.accepted = Some(guesses.last().is_some_and(|g| g.accepted));
    report.metrics = metrics;
    report.guesses = guesses;
    Ok(report)
}

/// `φ` unknown: halving loop over [`sparse_cut_randomwalk`] or [`sparse_cut_pagerank`].
pub fn guess_phi(g: &Graph, balance: f64, engine: Engine, base: &SparseCutConfig, sim: &SimConfig) -> Result<CutReport> {
    let base = SparseCutConfig {
        balance,
        engine,
        ..base.clone()
    };
    guess_loop(g, &base, sim, Algorithm::Guess)
}

/// Halving loop with every distribution taken from `source`. The side of the
/// returned cut that contains `source` is reported as the cluster.
pub fn local_cluster(g: &Graph, source: NodeId, engine: Engine, base: &SparseCutConfig, sim: &SimConfig) -> Result<CutReport> {
    let n = g.node_count();
    if source >= n {
        return Err(Error::NodeOutOfRange { node: source, n });
    }
    let base = SparseCutConfig {
        engine,
        balance: 0.5,
        sources: SourcePlan::Fixed(vec![source]),
        ..base.clone()
    };
    let mut report = guess_loop(g, &base, sim, Algorithm::Local)?;
    report.cluster = Some(report.side_of(g, source));
    Ok(report)
}

/// The cut with the best conductance from one fixed distribution, without
/// any simulation: `order_by_rho` followed by `sweep_conductances`.
pub fn best_prefix(g: &Graph, mass: &[u128]) -> Result<(Cut, Fraction)> {
    let order = crate::sweep::order_by_mass(g, mass);
    let sweep = crate::sweep::sweep_conductances(g, &order.pi)?;
    let cut = sweep.best_cut(g)?;
    Ok((cut, sweep.best_conductance))
}

/// `sqrt(φ*)` as a float, for the quadratic-guarantee check.
pub fn quadratic_threshold(phi_star: Fraction) -> f64 {
    crate::graph::to_f64(phi_star).sqrt()
}

/// `true` when `a <= sqrt(b)` exactly: `a² <= b`.
pub fn within_quadratic(a: Fraction, phi_star: Fraction) -> bool {
    let a2 = Ratio::new(*a.numer() as u128 * *a.numer() as u128, *a.denom() as u128 * *a.denom() as u128);
    let b = Ratio::new(*phi_star.numer() as u128, *phi_star.denom() as u128);
    a2 <= b
}
