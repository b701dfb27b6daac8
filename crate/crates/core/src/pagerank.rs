//! Monte-Carlo personalized PageRank by terminating walks.
//!
//! `K` tokens start at the source. Each round every live token ends with
//! probability `α`, otherwise it moves to a uniform neighbor; only per-port
//! counts travel. Node `v` counts visits `η_v`, including the initial
//! placement at the source, and outputs `η_v α / K`.

use std::borrow::Cow;

use rand_distr::{Binomial, Distribution};

use crate::congest::{self, join_limbs, Message, NodeInfo, NodeProgram, RoundContext, RoundMetrics, SimConfig, Status};
use crate::error::{Error, Result, SimError};
use crate::graph::{Graph, NodeId};
use crate::walk::{mass_limb_width, split_mass, split_uniform, LandingMass, WalkMode, MASS_ONE};

/// Diffusion mode stops once the unsettled mass is below `2^-DIFFUSION_TAIL_BITS`.
pub const DIFFUSION_TAIL_BITS: u32 = 40;

#[derive(Clone, Debug)]
pub struct PageRankConfig {
    pub source: NodeId,
    /// Reset probability `α`.
    pub alpha: f64,
    /// `K`, number of walks; ignored in diffusion mode.
    pub walks: u64,
    pub mode: WalkMode,
}

impl PageRankConfig {
    pub fn tokens(source: NodeId, alpha: f64, walks: u64) -> Self {
        PageRankConfig {
            source,
            alpha,
            walks,
            mode: WalkMode::Tokens,
        }
    }

    pub fn diffusion(source: NodeId, alpha: f64) -> Self {
        PageRankConfig {
            source,
            alpha,
            walks: 1,
            mode: WalkMode::Diffusion,
        }
    }

    /// `K = ceil(n⁴ ln n)`, enough for the PageRank sweep guarantee but only
    /// feasible for very small graphs.
    pub fn theoretical_walks(n: usize) -> u64 {
        let n = n as f64;
        (n.powi(4) * n.ln()).ceil() as u64
    }

    pub fn validate(&self, g: &Graph, sim: &SimConfig) -> Result<()> {
        let n = g.node_count();
        if self.source >= n {
            return Err(Error::NodeOutOfRange {
                node: self.source,
                n,
            });
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config(format!(
                "reset probability must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.mode == WalkMode::Tokens {
            if self.walks == 0 {
                return Err(Error::config("at least one walk is required"));
            }
            let cap = sim.count_capacity(n);
            if self.walks > cap {
                return Err(Error::config(format!(
                    "{} walks exceed the per-message count capacity n^{} = {cap}",
                    self.walks, sim.bit_budget_multiplier
                )));
            }
        }
        Ok(())
    }

    /// Round cap for token mode, `ceil(8 ln(nK) / α)`.
    pub fn termination_bound(&self, n: usize) -> u64 {
        ((8.0 * ((n as f64) * (self.walks as f64)).ln()) / self.alpha).ceil().max(1.0) as u64
    }

    /// Forwarding rounds in diffusion mode: `(1-α)^T <= 2^-40`.
    pub fn diffusion_rounds(&self) -> u64 {
        if self.alpha >= 1.0 {
            return 0;
        }
        (DIFFUSION_TAIL_BITS as f64 * std::f64::consts::LN_2 / -(1.0 - self.alpha).ln()).ceil() as u64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PageRankEstimate {
    /// `p̃(v)`.
    pub values: Vec<f64>,
    /// `η_v` (token mode; zeros in diffusion mode).
    pub visits: Vec<u64>,
    /// Ranking mass: visits in token mode, settled fixed-point mass in diffusion mode.
    mass: Vec<u128>,
    pub alpha: f64,
    pub walks: u64,
    pub mode: WalkMode,
    pub rounds_used: u64,
    /// Total token moves (token mode).
    pub moves: u64,
}

impl PageRankEstimate {
    pub fn mass(&self) -> &[u128] {
        &self.mass
    }

    pub fn total_visits(&self) -> u64 {
        self.visits.iter().sum()
    }
}

impl LandingMass for PageRankEstimate {
    fn landing_mass(&self) -> Cow<'_, [u128]> {
        Cow::Borrowed(&self.mass)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PageRankError {
    #[error(transparent)]
    Failed(#[from] Error),
    /// Some walks were still alive at the round cap.
    #[error("walks still alive after {} rounds", partial.rounds_used)]
    Timeout {
        partial: Box<PageRankEstimate>,
        metrics: Box<RoundMetrics>,
    },
}

impl From<PageRankError> for Error {
    fn from(e: PageRankError) -> Self {
        match e {
            PageRankError::Failed(e) => e,
            PageRankError::Timeout { metrics, .. } => Error::Sim(SimError::Timeout { metrics }),
        }
    }
}

pub fn estimate_pagerank(
    g: &Graph,
    cfg: &PageRankConfig,
    sim: &SimConfig,
) -> Result<(PageRankEstimate, RoundMetrics), PageRankError> {
    cfg.validate(g, sim)?;
    let n = g.node_count();
    match cfg.mode {
        WalkMode::Tokens => {
            let program = TokenPageRank {
                source: cfg.source,
                alpha: cfg.alpha,
                walks: cfg.walks,
            };
            let cap = cfg.termination_bound(n).min(sim.max_rounds);
            let exec = congest::execute(g, &program, sim, cap).map_err(Error::from)?;
            let visits: Vec<u64> = exec.outputs.iter().map(|s| s.visits).collect();
            let estimate = PageRankEstimate {
                values: visits
                    .iter()
                    .map(|&v| v as f64 * cfg.alpha / cfg.walks as f64)
                    .collect(),
                mass: visits.iter().map(|&v| v as u128).collect(),
                moves: exec.outputs.iter().map(|s| s.sent).sum(),
                visits,
                alpha: cfg.alpha,
                walks: cfg.walks,
                mode: cfg.mode,
                rounds_used: exec.metrics.rounds,
            };
            if !exec.halted {
                return Err(PageRankError::Timeout {
                    partial: Box::new(estimate),
                    metrics: Box::new(exec.metrics),
                });
            }
            Ok((estimate, exec.metrics))
        }
        WalkMode::Diffusion => {
            let program = DiffusionPageRank {
                source: cfg.source,
                alpha: cfg.alpha,
                forwarding_rounds: cfg.diffusion_rounds(),
                limb_width: mass_limb_width(sim, n),
            };
            let out = congest::run(g, &program, sim).map_err(Error::from)?;
            let mass: Vec<u128> = out.outputs;
            Ok((
                PageRankEstimate {
                    values: mass.iter().map(|&m| m as f64 / MASS_ONE as f64).collect(),
                    visits: vec![0; n],
                    mass,
                    alpha: cfg.alpha,
                    walks: cfg.walks,
                    mode: cfg.mode,
                    rounds_used: out.metrics.rounds,
                    moves: 0,
                },
                out.metrics,
            ))
        }
    }
}

/// Comparison of an estimate against an exact vector.
#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyReport {
    pub max_deviation: f64,
    pub worst_node: Option<NodeId>,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn exactness_sanity(estimate: &[f64], oracle: &[f64], tol: f64) -> AccuracyReport {
    assert_eq!(estimate.len(), oracle.len(), "vectors cover different node sets");
    let (worst_node, max_deviation) = estimate
        .iter()
        .zip(oracle)
        .map(|(a, b)| (a - b).abs())
        .enumerate()
        .fold((None, 0.0f64), |(node, max), (i, d)| {
            if d > max {
                (Some(i), d)
            } else {
                (node, max)
            }
        });
    AccuracyReport {
        max_deviation,
        worst_node,
        tolerance: tol,
        passed: max_deviation <= tol,
    }
}

struct TokenPageRank {
    source: NodeId,
    alpha: f64,
    walks: u64,
}

#[derive(Clone, Debug, Default)]
struct TokenState {
    held: u64,
    visits: u64,
    sent: u64,
}

impl NodeProgram for TokenPageRank {
    type State = TokenState;
    type Output = TokenState;

    fn init(&self, node: NodeInfo<'_>) -> TokenState {
        if node.id == self.source {
            TokenState {
                held: self.walks,
                visits: self.walks,
                sent: 0,
            }
        } else {
            TokenState::default()
        }
    }

    fn on_round(&self, state: &mut TokenState, ctx: &mut RoundContext<'_>) -> Status {
        let arrived: u64 = ctx.inbox().iter().map(|m| m.message.fields()[0]).sum();
        state.held += arrived;
        state.visits += arrived;
        if state.held == 0 {
            return Status::Halted;
        }
        let live = std::mem::take(&mut state.held);
        let moving = if self.alpha >= 1.0 {
            0
        } else {
            Binomial::new(live, 1.0 - self.alpha)
                .expect("valid binomial parameters")
                .sample(ctx.rng())
        };
        if moving == 0 {
            return Status::Halted;
        }
        let degree = ctx.degree();
        for (port, count) in split_uniform(moving, degree, ctx.rng()).into_iter().enumerate() {
            if count > 0 {
                ctx.send(port, Message::new(&[count]));
            }
        }
        state.sent += moving;
        Status::Active
    }

    fn report(&self, state: &TokenState) -> TokenState {
        state.clone()
    }
}

struct DiffusionPageRank {
    source: NodeId,
    alpha: f64,
    forwarding_rounds: u64,
    limb_width: u32,
}

#[derive(Clone, Debug, Default)]
struct DiffusionState {
    held: u128,
    settled: u128,
}

impl NodeProgram for DiffusionPageRank {
    type State = DiffusionState;
    type Output = u128;

    fn init(&self, node: NodeInfo<'_>) -> DiffusionState {
        DiffusionState {
            held: if node.id == self.source { MASS_ONE } else { 0 },
            settled: 0,
        }
    }

    fn on_round(&self, state: &mut DiffusionState, ctx: &mut RoundContext<'_>) -> Status {
        for m in ctx.inbox() {
            state.held += join_limbs(m.message.fields(), self.limb_width);
        }
        let held = std::mem::take(&mut state.held);
        let settle = ((held as f64 * self.alpha) as u128).min(held);
        state.settled += settle;
        let moving = held - settle;
        if ctx.round() > self.forwarding_rounds || moving == 0 {
            // the unsettled tail below 2^-40 is dropped
            return Status::from(ctx.round() > self.forwarding_rounds);
        }
        for (port, share) in split_mass(moving, ctx.degree()).into_iter().enumerate() {
            if share > 0 {
                let mut msg = Message::default();
                msg.push_wide(share, self.limb_width);
                ctx.send(port, msg);
            }
        }
        Status::Active
    }

    fn report(&self, state: &DiffusionState) -> u128 {
        state.settled
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{generate, GraphFamilySpec};

    #[test]
    fn alpha_one_is_indicator() {
        let g = generate(&GraphFamilySpec::barbell(7)).unwrap();
        let (est, metrics) =
            estimate_pagerank(&g, &PageRankConfig::tokens(4, 1.0, 100), &SimConfig::default()).unwrap();
        assert_eq!(est.visits, vec![0, 0, 0, 0, 100, 0, 0]);
        assert_eq!(est.values[4], 1.0);
        assert_eq!(metrics.rounds, 1);
        assert_eq!(metrics.messages_total, 0);
    }

    #[test]
    fn invalid_alpha() {
        let g = generate(&GraphFamilySpec::path(2)).unwrap();
        for alpha in [0.0, -0.5, 1.5, f64::NAN] {
            let err = estimate_pagerank(&g, &PageRankConfig::tokens(0, alpha, 10), &SimConfig::default())
                .unwrap_err();
            assert!(matches!(err, PageRankError::Failed(Error::Config(_))));
        }
    }

    #[test]
    fn visits_equal_walks_plus_moves() {
        let g = generate(&GraphFamilySpec::barbell(7)).unwrap();
        let sim = SimConfig::with_seed(11).strict();
        let (est, _) = estimate_pagerank(&g, &PageRankConfig::tokens(0, 0.3, 2000), &sim).unwrap();
        assert_eq!(est.total_visits(), est.walks + est.moves);
    }

    #[test]
    fn timeout_returns_partial_counts() {
        let g = generate(&GraphFamilySpec::cycle(5)).unwrap();
        let sim = SimConfig {
            max_rounds: 3,
            ..SimConfig::with_seed(1)
        };
        match estimate_pagerank(&g, &PageRankConfig::tokens(0, 0.01, 500), &sim).unwrap_err() {
            PageRankError::Timeout { partial, metrics } => {
                assert_eq!(metrics.rounds, 3);
                assert_eq!(partial.visits[0] >= 500, true);
                assert!(partial.total_visits() > 500);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn diffusion_two_node() {
        let g = generate(&GraphFamilySpec::path(2)).unwrap();
        let (est, _) =
            estimate_pagerank(&g, &PageRankConfig::diffusion(0, 0.5), &SimConfig::default()).unwrap();
        assert!((est.values[0] - 2.0 / 3.0).abs() < 1e-9);
        assert!((est.values[1] - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn sanity_report() {
        let exact = [0.5, 0.25, 0.25];
        let same = exactness_sanity(&exact, &exact, 0.0);
        assert!(same.passed);
        assert_eq!(same.worst_node, None);
        let off = exactness_sanity(&[0.5, 0.27, 0.23], &exact, 0.01);
        assert!(!off.passed);
        assert_eq!(off.worst_node, Some(1));
        assert!((off.max_deviation - 0.02).abs() < 1e-12);
    }

    #[test]
    fn theoretical_walk_preset() {
        // 2^4 * ln 2 = 11.09
        assert_eq!(PageRankConfig::theoretical_walks(2), 12);
    }
}
