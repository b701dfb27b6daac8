//! Distributed estimation of the `ℓ`-step random-walk landing distribution.
//!
//! Token mode: the source creates `K` anonymous tokens and every round each
//! node forwards each token it holds to a uniform neighbor, sending only the
//! per-port count. After `ℓ` forwarding rounds node `i` outputs `η_i / K`.
//!
//! Diffusion mode: the same schedule, but each node splits a fixed-point mass
//! equally over its ports, which yields the exact distribution up to
//! rounding instead of a sample.

use std::borrow::Cow;

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::congest::{self, join_limbs, Message, NodeInfo, NodeProgram, NodeRng, RoundContext, RoundMetrics, SimConfig, Status};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Fixed-point scale of diffusion masses: `1.0 == 1 << MASS_FRACTION_BITS`.
pub const MASS_FRACTION_BITS: u32 = 64;
pub const MASS_ONE: u128 = 1 << MASS_FRACTION_BITS;

/// Rounds spent after the last forwarding round: one round in which the
/// final tokens land and are counted.
pub const WALK_TALLY_ROUNDS: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkMode {
    Tokens,
    Diffusion,
}

impl std::str::FromStr for WalkMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tokens" => Ok(WalkMode::Tokens),
            "diffusion" => Ok(WalkMode::Diffusion),
            other => Err(Error::config(format!("unknown walk mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct WalkConfig {
    pub source: NodeId,
    /// `ℓ`, number of steps.
    pub length: usize,
    /// `K`, number of tokens; ignored in diffusion mode.
    pub walks: u64,
    pub mode: WalkMode,
}

impl WalkConfig {
    pub fn tokens(source: NodeId, length: usize, walks: u64) -> Self {
        WalkConfig {
            source,
            length,
            walks,
            mode: WalkMode::Tokens,
        }
    }

    pub fn diffusion(source: NodeId, length: usize) -> Self {
        WalkConfig {
            source,
            length,
            walks: 1,
            mode: WalkMode::Diffusion,
        }
    }

    pub fn validate(&self, g: &Graph, sim: &SimConfig) -> Result<()> {
        let n = g.node_count();
        if self.source >= n {
            return Err(Error::NodeOutOfRange {
                node: self.source,
                n,
            });
        }
        if self.length as u64 + WALK_TALLY_ROUNDS > sim.max_rounds {
            return Err(Error::config(format!(
                "walk length {} does not fit in max_rounds {}",
                self.length, sim.max_rounds
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
}

/// Landing-probability estimate: `p̃(i) = mass[i] / scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbEstimate {
    mass: Vec<u128>,
    scale: u128,
    pub walks: u64,
    pub length: usize,
    pub mode: WalkMode,
    /// The `ε` that `walks` was derived from, when it was.
    pub epsilon_target: Option<f64>,
}

impl ProbEstimate {
    /// Token counts `η_i` (token mode) or fixed-point masses (diffusion mode).
    pub fn mass(&self) -> &[u128] {
        &self.mass
    }

    pub fn scale(&self) -> u128 {
        self.scale
    }

    pub fn value(&self, i: NodeId) -> f64 {
        self.mass[i] as f64 / self.scale as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.mass.len()).map(|i| self.value(i)).collect()
    }

    /// Sum of masses; equals `scale` whenever nothing was lost.
    pub fn total_mass(&self) -> u128 {
        self.mass.iter().sum()
    }

    /// Token mode only: the counts `η_i`.
    pub fn counts(&self) -> Option<Vec<u64>> {
        (self.mode == WalkMode::Tokens).then(|| self.mass.iter().map(|&m| m as u64).collect())
    }
}

/// Anything that ranks nodes by a per-node mass proportional to a
/// probability vector.
pub trait LandingMass {
    fn landing_mass(&self) -> Cow<'_, [u128]>;
}

impl LandingMass for ProbEstimate {
    fn landing_mass(&self) -> Cow<'_, [u128]> {
        Cow::Borrowed(&self.mass)
    }
}

/// Exact probability vector (an oracle output), ranked through a 64-bit fixed-point image.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactScores(pub Vec<f64>);

impl ExactScores {
    pub fn to_mass(&self) -> Vec<u128> {
        self.0.iter().map(|&p| to_fixed_point(p)).collect()
    }
}

impl LandingMass for ExactScores {
    fn landing_mass(&self) -> Cow<'_, [u128]> {
        Cow::Owned(self.to_mass())
    }
}

pub fn to_fixed_point(p: f64) -> u128 {
    if p.is_nan() || p <= 0.0 {
        0
    } else {
        (p * MASS_ONE as f64) as u128
    }
}

/// `K = ceil(4 n² ln n / ε²)` walks give `|p̃(i) − p(i)| ≤ ε/n` w.h.p.
pub fn walks_for_accuracy(n: usize, epsilon: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::config(format!("epsilon must be in (0, 1], got {epsilon}")));
    }
    let n = n as f64;
    Ok((4.0 * n * n * n.ln() / (epsilon * epsilon)).ceil() as u64)
}

pub fn estimate_probability(
    g: &Graph,
    cfg: &WalkConfig,
    sim: &SimConfig,
) -> Result<(ProbEstimate, RoundMetrics)> {
    cfg.validate(g, sim)?;
    let (mass, metrics, scale) = match cfg.mode {
        WalkMode::Tokens => {
            let program = TokenWalk {
                source: cfg.source,
                length: cfg.length as u64,
                walks: cfg.walks,
            };
            let out = congest::run(g, &program, sim)?;
            let mass = out.outputs.iter().map(|&c| c as u128).collect();
            (mass, out.metrics, cfg.walks as u128)
        }
        WalkMode::Diffusion => {
            let program = DiffusionWalk {
                source: cfg.source,
                length: cfg.length as u64,
                limb_width: mass_limb_width(sim, g.node_count()),
            };
            let out = congest::run(g, &program, sim)?;
            (out.outputs, out.metrics, MASS_ONE)
        }
    };
    Ok((
        ProbEstimate {
            mass,
            scale,
            walks: cfg.walks,
            length: cfg.length,
            mode: cfg.mode,
            epsilon_target: None,
        },
        metrics,
    ))
}

/// Width of the limbs that carry a 65-bit fixed-point mass.
pub fn mass_limb_width(sim: &SimConfig, n: usize) -> u32 {
    sim.field_bit_budget(n).min(63)
}

/// Splits `count` tokens uniformly over `degree` ports, one binomial per port.
///
/// Equal in distribution to drawing a uniform port for each token.
pub(crate) fn split_uniform(count: u64, degree: usize, rng: &mut NodeRng) -> Vec<u64> {
    let mut out = vec![0u64; degree];
    let mut remaining = count;
    for (port, slot) in out.iter_mut().enumerate() {
        if remaining == 0 {
            break;
        }
        let ports_left = degree - port;
        let take = if ports_left == 1 {
            remaining
        } else {
            Binomial::new(remaining, 1.0 / ports_left as f64)
                .expect("valid binomial parameters")
                .sample(rng)
        };
        *slot = take;
        remaining -= take;
    }
    out
}

/// Splits a fixed-point mass into equal floored shares; port 0 also takes the
/// remainder so the total is conserved exactly.
pub(crate) fn split_mass(mass: u128, degree: usize) -> Vec<u128> {
    let share = mass / degree as u128;
    let mut out = vec![share; degree];
    out[0] = mass - share * (degree as u128 - 1);
    out
}

struct TokenWalk {
    source: NodeId,
    length: u64,
    walks: u64,
}

impl NodeProgram for TokenWalk {
    type State = u64;
    type Output = u64;

    fn init(&self, node: NodeInfo<'_>) -> u64 {
        if node.id == self.source {
            self.walks
        } else {
            0
        }
    }

    fn on_round(&self, held: &mut u64, ctx: &mut RoundContext<'_>) -> Status {
        *held += ctx.inbox().iter().map(|m| m.message.fields()[0]).sum::<u64>();
        if ctx.round() > self.length {
            return Status::Halted;
        }
        if *held > 0 {
            let degree = ctx.degree();
            let counts = split_uniform(*held, degree, ctx.rng());
            for (port, count) in counts.into_iter().enumerate() {
                if count > 0 {
                    ctx.send(port, Message::new(&[count]));
                }
            }
            *held = 0;
        }
        Status::Active
    }

    fn report(&self, held: &u64) -> u64 {
        *held
    }
}

struct DiffusionWalk {
    source: NodeId,
    length: u64,
    limb_width: u32,
}

impl NodeProgram for DiffusionWalk {
    type State = u128;
    type Output = u128;

    fn init(&self, node: NodeInfo<'_>) -> u128 {
        if node.id == self.source {
            MASS_ONE
        } else {
            0
        }
    }

    fn on_round(&self, mass: &mut u128, ctx: &mut RoundContext<'_>) -> Status {
        for m in ctx.inbox() {
            *mass += join_limbs(m.message.fields(), self.limb_width);
        }
        if ctx.round() > self.length {
            return Status::Halted;
        }
        if *mass > 0 {
            for (port, share) in split_mass(*mass, ctx.degree()).into_iter().enumerate() {
                if share > 0 {
                    let mut msg = Message::default();
                    msg.push_wide(share, self.limb_width);
                    ctx.send(port, msg);
                }
            }
            *mass = 0;
        }
        Status::Active
    }

    fn report(&self, mass: &u128) -> u128 {
        *mass
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{generate, GraphFamilySpec};

    fn c4() -> Graph {
        generate(&GraphFamilySpec::cycle(4)).unwrap()
    }

    #[test]
    fn walks_for_accuracy_values() {
        assert_eq!(walks_for_accuracy(8, 0.5).unwrap(), 2130);
        assert_eq!(walks_for_accuracy(2, 1.0).unwrap(), 12);
        assert!(walks_for_accuracy(8, 0.0).is_err());
        assert!(walks_for_accuracy(8, -0.1).is_err());
        assert!(walks_for_accuracy(8, 1.5).is_err());
    }

    #[test]
    fn diffusion_on_cycle() {
        let sim = SimConfig::default().strict();
        let (one, m1) = estimate_probability(&c4(), &WalkConfig::diffusion(0, 1), &sim).unwrap();
        assert_eq!(one.values(), vec![0.0, 0.5, 0.0, 0.5]);
        assert_eq!(m1.rounds, 1 + WALK_TALLY_ROUNDS);
        let (two, _) = estimate_probability(&c4(), &WalkConfig::diffusion(0, 2), &sim).unwrap();
        assert_eq!(two.values(), vec![0.5, 0.0, 0.5, 0.0]);
        assert_eq!(two.total_mass(), MASS_ONE);
    }

    #[test]
    fn zero_length_is_indicator() {
        let sim = SimConfig::default();
        for cfg in [WalkConfig::diffusion(2, 0), WalkConfig::tokens(2, 0, 50)] {
            let (est, metrics) = estimate_probability(&c4(), &cfg, &sim).unwrap();
            assert_eq!(est.values(), vec![0.0, 0.0, 1.0, 0.0]);
            assert_eq!(metrics.rounds, WALK_TALLY_ROUNDS);
            assert_eq!(metrics.messages_total, 0);
        }
    }

    #[test]
    fn token_counts_are_conserved() {
        let g = generate(&GraphFamilySpec::barbell(7)).unwrap();
        let sim = SimConfig::with_seed(3).strict();
        let (est, metrics) = estimate_probability(&g, &WalkConfig::tokens(0, 6, 1000), &sim).unwrap();
        assert_eq!(est.total_mass(), 1000);
        assert_eq!(est.counts().unwrap().iter().sum::<u64>(), 1000);
        assert_eq!(metrics.rounds, 6 + WALK_TALLY_ROUNDS);
    }

    #[test]
    fn walk_count_over_capacity_is_a_config_error() {
        let sim = SimConfig::default();
        // 4^4 = 256 needs 9 bits; the budget is 8.
        let err = estimate_probability(&c4(), &WalkConfig::tokens(0, 2, 256), &sim).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(estimate_probability(&c4(), &WalkConfig::tokens(0, 2, 255), &sim.clone().strict()).is_ok());
        let err = estimate_probability(&c4(), &WalkConfig::tokens(0, 2, 0), &sim).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = estimate_probability(&c4(), &WalkConfig::tokens(9, 2, 1), &sim).unwrap_err();
        assert!(matches!(err, Error::NodeOutOfRange { .. }));
    }

    #[test]
    fn split_mass_conserves() {
        let parts = split_mass(MASS_ONE, 3);
        assert_eq!(parts.iter().sum::<u128>(), MASS_ONE);
        assert!(parts[0] >= parts[1] && parts[1] == parts[2]);
        assert_eq!(split_mass(2, 4), vec![2, 0, 0, 0]);
    }

    #[test]
    fn split_uniform_conserves() {
        let mut rng = congest::per_node_rng(1, 0, 0);
        for count in [0, 1, 7, 1_000_000] {
            let parts = split_uniform(count, 5, &mut rng);
            assert_eq!(parts.iter().sum::<u64>(), count);
        }
    }

    #[test]
    fn fixed_point_conversion() {
        assert_eq!(to_fixed_point(1.0), MASS_ONE);
        assert_eq!(to_fixed_point(0.5), MASS_ONE / 2);
        assert_eq!(to_fixed_point(-1.0), 0);
        assert_eq!(to_fixed_point(f64::NAN), 0);
    }
}
