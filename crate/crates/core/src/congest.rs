//! Synchronous CONGEST round engine.
//!
//! Every round each node runs [`NodeProgram::on_round`] over the messages
//! delivered to it, and may queue at most one message per incident port.
//! Messages sent in round `r` are in the inbox of round `r + 1`. A run ends
//! after the first round in which every node reports [`Status::Halted`];
//! the halt check itself costs no round.
//!
//! Messages are sequences of integer fields. A field counts as `O(log n)`
//! bits when it fits in `c_msg * ceil(log2 n)` bits, so any integer up to
//! `n^c_msg` travels as one field.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::SimError;
use crate::graph::{Graph, NodeId};

/// Per-node random stream. See [`per_node_rng`].
pub type NodeRng = ChaCha8Rng;

pub const DEFAULT_BIT_BUDGET_MULTIPLIER: u32 = 4;
pub const DEFAULT_MAX_ROUNDS: u64 = 5_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// Step nodes in ascending id order.
    Ascending,
    /// Step nodes in a seeded pseudo-random order, re-drawn every round.
    Shuffled(u64),
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub seed: u64,
    /// `c_msg`: each message field may use `c_msg * ceil(log2 n)` bits.
    pub bit_budget_multiplier: u32,
    pub max_rounds: u64,
    /// Abort on a budget violation instead of counting it.
    pub strict_bits: bool,
    /// Record every delivered message in [`RoundMetrics::trace`].
    pub trace: bool,
    pub schedule: Schedule,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            bit_budget_multiplier: DEFAULT_BIT_BUDGET_MULTIPLIER,
            max_rounds: DEFAULT_MAX_ROUNDS,
            strict_bits: false,
            trace: false,
            schedule: Schedule::Ascending,
        }
    }
}

impl SimConfig {
    pub fn with_seed(seed: u64) -> Self {
        SimConfig {
            seed,
            ..Self::default()
        }
    }

    pub fn strict(mut self) -> Self {
        self.strict_bits = true;
        self
    }

    /// Per-field bit budget for an `n`-node network, capped at 64.
    pub fn field_bit_budget(&self, n: usize) -> u32 {
        (self.bit_budget_multiplier.saturating_mul(ceil_log2(n).max(1))).min(64)
    }

    /// Largest count that fits one field: `n^c_msg`, or `2^budget - 1` when
    /// `n` is a power of two.
    pub fn count_capacity(&self, n: usize) -> u64 {
        let budget = self.field_bit_budget(n);
        let representable = if budget >= 64 { u64::MAX } else { (1u64 << budget) - 1 };
        (n as u64).saturating_pow(self.bit_budget_multiplier).min(representable)
    }

    /// Raises `c_msg` until `count <= n^c_msg`.
    pub fn with_count_capacity(mut self, n: usize, count: u64) -> Self {
        while self.count_capacity(n) < count && self.bit_budget_multiplier < 64 {
            self.bit_budget_multiplier += 1;
        }
        self
    }

    /// Same configuration with a seed derived from this one and `tags`.
    pub fn derive(&self, tags: &[u64]) -> SimConfig {
        SimConfig {
            seed: derive_seed(self.seed, tags),
            ..self.clone()
        }
    }
}

pub fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// Number of bits needed to write `x` (one bit for zero).
pub fn bit_length(x: u64) -> u32 {
    (u64::BITS - x.leading_zeros()).max(1)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Message {
    fields: SmallVec<[u64; 4]>,
}

impl Message {
    pub fn new(fields: &[u64]) -> Self {
        Message {
            fields: SmallVec::from_slice(fields),
        }
    }

    pub fn fields(&self) -> &[u64] {
        &self.fields
    }

    pub fn push(&mut self, field: u64) {
        self.fields.push(field);
    }

    /// Appends `value` as little-endian limbs of `width` bits, using as few
    /// limbs as needed (at least one).
    pub fn push_wide(&mut self, value: u128, width: u32) {
        for limb in split_limbs(value, width) {
            self.fields.push(limb);
        }
    }

    pub fn bit_size(&self) -> u32 {
        self.fields.iter().map(|&f| bit_length(f)).sum()
    }

    fn widest_field(&self) -> u32 {
        self.fields.iter().map(|&f| bit_length(f)).max().unwrap_or(0)
    }
}

pub fn split_limbs(value: u128, width: u32) -> SmallVec<[u64; 4]> {
    let width = width.clamp(1, 63);
    let mask = (1u128 << width) - 1;
    let mut limbs = SmallVec::new();
    let mut rest = value;
    loop {
        limbs.push((rest & mask) as u64);
        rest >>= width;
        if rest == 0 {
            break;
        }
    }
    limbs
}

pub fn join_limbs(limbs: &[u64], width: u32) -> u128 {
    let width = width.clamp(1, 63);
    limbs
        .iter()
        .rev()
        .fold(0u128, |acc, &limb| (acc << width) | limb as u128)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub round: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub bits: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub rounds: u64,
    pub messages_total: u64,
    pub max_bits_per_edge_round: u32,
    /// Fields over budget seen with `strict_bits` off.
    pub budget_violations: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace: Option<Vec<TraceEntry>>,
}

impl RoundMetrics {
    /// Adds the cost of a phase that ran after this one.
    pub fn absorb(&mut self, later: &RoundMetrics) {
        self.rounds += later.rounds;
        self.messages_total += later.messages_total;
        self.max_bits_per_edge_round = self.max_bits_per_edge_round.max(later.max_bits_per_edge_round);
        self.budget_violations += later.budget_violations;
        if let Some(entries) = &later.trace {
            let offset = self.rounds - later.rounds;
            let trace = self.trace.get_or_insert_with(Vec::new);
            trace.extend(entries.iter().map(|e| TraceEntry {
                round: e.round + offset,
                ..e.clone()
            }));
        }
    }

    pub fn summary(&self) -> MetricsSummary {
        MetricsSummary {
            rounds: self.rounds,
            messages_total: self.messages_total,
            max_bits_per_edge_round: self.max_bits_per_edge_round,
        }
    }

    /// Trace as lines of `round src dst bits`.
    pub fn trace_lines(&self) -> String {
        let mut out = String::new();
        for e in self.trace.iter().flatten() {
            out.push_str(&format!("{} {} {} {}\n", e.round, e.src, e.dst, e.bits));
        }
        out
    }
}

/// Exported metrics document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub rounds: u64,
    pub messages_total: u64,
    pub max_bits_per_edge_round: u32,
}

/// What a node knows at start-up: its id, its neighbors' ids (by port) and `n`.
#[derive(Clone, Copy, Debug)]
pub struct NodeInfo<'a> {
    pub id: NodeId,
    pub neighbors: &'a [NodeId],
    pub n: usize,
}

impl NodeInfo<'_> {
    pub fn degree(&self) -> usize {
        self.neighbors.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Incoming {
    pub port: usize,
    pub message: Message,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Active,
    Halted,
}

impl From<bool> for Status {
    fn from(halted: bool) -> Self {
        if halted {
            Status::Halted
        } else {
            Status::Active
        }
    }
}

pub struct RoundContext<'a> {
    info: NodeInfo<'a>,
    round: u64,
    seed: u64,
    inbox: &'a [Incoming],
    outbox: &'a mut Vec<(usize, Message)>,
    rng: Option<NodeRng>,
}

impl<'a> RoundContext<'a> {
    pub fn id(&self) -> NodeId {
        self.info.id
    }

    pub fn degree(&self) -> usize {
        self.info.degree()
    }

    pub fn node_count(&self) -> usize {
        self.info.n
    }

    pub fn neighbors(&self) -> &'a [NodeId] {
        self.info.neighbors
    }

    /// 1-based round number.
    pub fn round(&self) -> u64 {
        self.round
    }

    /// Messages sent to this node last round, ordered by port.
    pub fn inbox(&self) -> &'a [Incoming] {
        self.inbox
    }

    pub fn send(&mut self, port: usize, message: Message) {
        self.outbox.push((port, message));
    }

    pub fn send_all(&mut self, message: &Message) {
        for port in 0..self.degree() {
            self.outbox.push((port, message.clone()));
        }
    }

    /// This node's stream for the current round.
    pub fn rng(&mut self) -> &mut NodeRng {
        let (seed, id, round) = (self.seed, self.info.id, self.round);
        self.rng.get_or_insert_with(|| per_node_rng(seed, id, round))
    }
}

/// A distributed algorithm, instantiated once per node.
///
/// Programs must not depend on the order in which nodes are stepped within a
/// round; all sends land in the next round.
pub trait NodeProgram {
    type State;
    type Output;

    fn init(&self, node: NodeInfo<'_>) -> Self::State;

    fn on_round(&self, state: &mut Self::State, ctx: &mut RoundContext<'_>) -> Status;

    fn report(&self, state: &Self::State) -> Self::Output;
}

#[derive(Clone, Debug)]
pub struct SimOutcome<O> {
    pub outputs: Vec<O>,
    pub metrics: RoundMetrics,
}

/// A finished or cut-off execution.
#[derive(Clone, Debug)]
pub struct Execution<O> {
    pub outputs: Vec<O>,
    pub metrics: RoundMetrics,
    pub halted: bool,
}

/// Runs `program` until every node halts, failing on timeout.
pub fn run<P: NodeProgram>(
    g: &Graph,
    program: &P,
    cfg: &SimConfig,
) -> Result<SimOutcome<P::Output>, SimError> {
    let exec = execute(g, program, cfg, cfg.max_rounds)?;
    if !exec.halted {
        return Err(SimError::Timeout {
            metrics: Box::new(exec.metrics),
        });
    }
    Ok(SimOutcome {
        outputs: exec.outputs,
        metrics: exec.metrics,
    })
}

/// Runs for at most `round_cap` rounds and returns whatever state was reached.
pub fn execute<P: NodeProgram>(
    g: &Graph,
    program: &P,
    cfg: &SimConfig,
    round_cap: u64,
) -> Result<Execution<P::Output>, SimError> {
    let n = g.node_count();
    let field_budget = cfg.field_bit_budget(n);
    let info = |v: NodeId| NodeInfo {
        id: v,
        neighbors: g.neighbors(v),
        n,
    };
    let mut states: Vec<P::State> = (0..n).map(|v| program.init(info(v))).collect();
    let mut inboxes: Vec<Vec<Incoming>> = vec![Vec::new(); n];
    let mut next: Vec<Vec<Incoming>> = vec![Vec::new(); n];
    let mut outbox: Vec<(usize, Message)> = Vec::new();
    let mut order: Vec<NodeId> = (0..n).collect();
    let mut metrics = RoundMetrics {
        trace: cfg.trace.then(Vec::new),
        ..RoundMetrics::default()
    };
    let mut halted = false;

    while metrics.rounds < round_cap {
        let round = metrics.rounds + 1;
        if let Schedule::Shuffled(salt) = cfg.schedule {
            use rand::seq::SliceRandom;
            let mut rng = per_node_rng(derive_seed(salt, &[round]), 0, 0);
            order.shuffle(&mut rng);
        }
        let mut all_halted = true;
        for &v in &order {
            outbox.clear();
            let mut ctx = RoundContext {
                info: info(v),
                round,
                seed: cfg.seed,
                inbox: &inboxes[v],
                outbox: &mut outbox,
                rng: None,
            };
            let status = program.on_round(&mut states[v], &mut ctx);
            all_halted &= status == Status::Halted;

            let degree = g.degree(v);
            outbox.sort_by_key(|(port, _)| *port);
            for i in 0..outbox.len() {
                let port = outbox[i].0;
                if port >= degree {
                    return Err(SimError::InvalidPort {
                        node: v,
                        port,
                        degree,
                        round,
                    });
                }
                if i > 0 && outbox[i - 1].0 == port {
                    return Err(SimError::DuplicateSend {
                        node: v,
                        port,
                        round,
                    });
                }
            }
            for (port, message) in outbox.drain(..) {
                let dst = g.neighbors(v)[port];
                let widest = message.widest_field();
                if widest > field_budget {
                    if cfg.strict_bits {
                        return Err(SimError::BudgetExceeded {
                            node: v,
                            dst,
                            round,
                            bits: widest,
                            budget: field_budget,
                        });
                    }
                    metrics.budget_violations += 1;
                }
                let bits = message.bit_size();
                metrics.messages_total += 1;
                metrics.max_bits_per_edge_round = metrics.max_bits_per_edge_round.max(bits);
                if let Some(trace) = metrics.trace.as_mut() {
                    trace.push(TraceEntry {
                        round,
                        src: v,
                        dst,
                        bits,
                    });
                }
                next[dst].push(Incoming {
                    port: g.reverse_port(v, port),
                    message,
                });
            }
        }
        metrics.rounds = round;
        std::mem::swap(&mut inboxes, &mut next);
        for inbox in &mut inboxes {
            inbox.sort_by_key(|m| m.port);
        }
        for stale in &mut next {
            stale.clear();
        }
        if all_halted {
            halted = true;
            break;
        }
    }

    if let Some(trace) = metrics.trace.as_mut() {
        trace.sort_by_key(|e| (e.round, e.src, e.dst));
    }
    let outputs = states.iter().map(|s| program.report(s)).collect();
    Ok(Execution {
        outputs,
        metrics,
        halted,
    })
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `tags` into `seed` to get an independent child seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix64(seed), |acc, &t| mix64(acc ^ mix64(t)))
}

/// Counter-based stream for `(seed, node, round)`.
///
/// ChaCha8 keyed by four SplitMix64 outputs of `seed`, with the 64-bit stream
/// id `node << 32 | round`; the ChaCha block counter is the draw index. The
/// same triple yields the same stream on every platform.
pub fn per_node_rng(seed: u64, node: NodeId, round: u64) -> NodeRng {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        state = mix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(((node as u64 & 0xFFFF_FFFF) << 32) | (round & 0xFFFF_FFFF));
    rng
}

/// Stream for driver-side choices (source and length sampling), disjoint from
/// every node stream because node ids stay below `u32::MAX`.
pub fn driver_rng(seed: u64, purpose: u64) -> NodeRng {
    per_node_rng(seed, 0xFFFF_FFFF, purpose)
}
