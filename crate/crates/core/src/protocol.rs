//! Tree-based building blocks: BFS tree construction, pipelined convergecast
//! (upcast) and broadcast (downcast) of one item per node, max-key election
//! and plain flooding.
//!
//! BFS handshake: a node joins on the first round it hears `JOIN`, picking
//! the lowest such port as parent. It answers the parent with `ACK` and sends
//! `JOIN` on every other port; a `JOIN` that reaches an already-joined node
//! is answered with `NACK`. Every non-parent neighbor therefore answers a
//! node exactly two rounds after it joined (`ACK`, `NACK`, or its own `JOIN`),
//! which is when the node learns its children.

use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::congest::{self, join_limbs, Message, NodeInfo, NodeProgram, RoundContext, RoundMetrics, SimConfig, Status};
use crate::error::Result;
use crate::graph::{Graph, NodeId};

const TAG_JOIN: u64 = 1;
const TAG_ACK: u64 = 2;
const TAG_NACK: u64 = 3;
const TAG_UP: u64 = 4;
const TAG_DOWN: u64 = 5;
const TAG_ELECT: u64 = 6;
const TAG_POSITION: u64 = 7;
const TAG_FLOOD: u64 = 8;

/// Per-node convergecast state.
#[derive(Clone, Debug, Default)]
struct Gather {
    joined: bool,
    is_root: bool,
    parent: Option<usize>,
    join_round: u64,
    children: Vec<usize>,
    children_known: bool,
    children_done: usize,
    up_queue: VecDeque<Vec<u64>>,
    up_finished: bool,
    collected: Vec<Vec<u64>>,
    down_sent: usize,
    complete: bool,
}

impl Gather {
    /// Advances one round. `start_as_root` makes this node the tree root in
    /// this round; `own_item` is queued once the children are known.
    fn step(
        &mut self,
        ctx: &mut RoundContext<'_>,
        start_as_root: bool,
        own_item: &dyn Fn() -> Vec<u64>,
        downcast: bool,
    ) {
        if self.complete {
            return;
        }
        let round = ctx.round();
        let n = ctx.node_count();
        let mut joins = Vec::new();
        let mut forward: Option<Message> = None;
        for m in ctx.inbox() {
            let fields = m.message.fields();
            match fields[0] {
                TAG_JOIN => joins.push(m.port),
                TAG_ACK => self.children.push(m.port),
                TAG_NACK => {}
                TAG_UP => {
                    let item = fields[2..].to_vec();
                    if self.is_root {
                        self.collected.push(item);
                    } else {
                        self.up_queue.push_back(item);
                    }
                    if fields[1] == 1 {
                        self.children_done += 1;
                    }
                }
                TAG_DOWN => {
                    self.collected.push(fields[2..].to_vec());
                    if fields[1] == 1 {
                        self.complete = true;
                    }
                    forward = Some(m.message.clone());
                }
                _ => {}
            }
        }

        if let Some(msg) = forward {
            for &child in &self.children {
                ctx.send(child, msg.clone());
            }
            return;
        }

        if !self.joined {
            if start_as_root {
                self.joined = true;
                self.is_root = true;
                self.join_round = round;
                ctx.send_all(&Message::new(&[TAG_JOIN]));
            } else if let Some(&parent) = joins.iter().min() {
                self.joined = true;
                self.parent = Some(parent);
                self.join_round = round;
                for port in 0..ctx.degree() {
                    let tag = if port == parent { TAG_ACK } else { TAG_JOIN };
                    ctx.send(port, Message::new(&[tag]));
                }
            }
            return;
        }

        for &port in &joins {
            ctx.send(port, Message::new(&[TAG_NACK]));
        }

        if round == self.join_round + 2 {
            self.children_known = true;
            self.children.sort_unstable();
            if self.is_root {
                self.collected.push(own_item());
            } else {
                self.up_queue.push_back(own_item());
            }
        }
        if !self.children_known {
            return;
        }

        let children_finished = self.children_done == self.children.len();
        if self.is_root {
            if !children_finished {
                return;
            }
            if !downcast {
                self.complete = true;
                return;
            }
            debug_assert_eq!(self.collected.len(), n);
            if self.down_sent < self.collected.len() {
                let last = self.down_sent + 1 == self.collected.len();
                let mut msg = Message::new(&[TAG_DOWN, last as u64]);
                for &f in &self.collected[self.down_sent] {
                    msg.push(f);
                }
                for &child in &self.children {
                    ctx.send(child, msg.clone());
                }
                self.down_sent += 1;
                self.complete = last;
            }
            return;
        }

        if !self.up_finished {
            if let Some(item) = self.up_queue.pop_front() {
                let last = self.up_queue.is_empty() && children_finished;
                let mut msg = Message::new(&[TAG_UP, last as u64]);
                for f in item {
                    msg.push(f);
                }
                ctx.send(self.parent.expect("non-root has a parent"), msg);
                if last {
                    self.up_finished = true;
                    if !downcast {
                        self.complete = true;
                    }
                }
            }
        }
    }
}

/// Ranking key for the max-ρ election: `ρ = mass / degree`, ties to the smaller id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RhoKey {
    pub id: NodeId,
    pub degree: u64,
    pub mass: u128,
}

impl RhoKey {
    /// `Greater` when `self` ranks ahead of `other`.
    pub fn rank_cmp(&self, other: &RhoKey) -> Ordering {
        let lhs = self.mass * other.degree as u128;
        let rhs = other.mass * self.degree as u128;
        lhs.cmp(&rhs).then_with(|| other.id.cmp(&self.id))
    }

    fn encode(&self, tag: Option<u64>, width: u32) -> Message {
        let mut msg = Message::default();
        if let Some(tag) = tag {
            msg.push(tag);
        }
        msg.push(self.id as u64);
        msg.push(self.degree);
        msg.push_wide(self.mass, width);
        msg
    }

    fn decode(fields: &[u64], width: u32) -> RhoKey {
        RhoKey {
            id: fields[0] as NodeId,
            degree: fields[1],
            mass: join_limbs(&fields[2..], width),
        }
    }
}

/// Nodes in decreasing `ρ`, ties by ascending id.
pub fn order_keys(keys: &[RhoKey]) -> Vec<NodeId> {
    let mut sorted = keys.to_vec();
    sorted.sort_by(|a, b| b.rank_cmp(a));
    sorted.into_iter().map(|k| k.id).collect()
}

/// Every node learns every node's `ρ`.
///
/// Rounds `1..n`: each node floods the best key it has seen, so after `n - 1`
/// rounds all nodes agree on the maximum. The maximum node then roots a BFS
/// tree, all keys are upcast to it and flooded back down the tree.
struct RhoBroadcast<'a> {
    mass: &'a [u128],
    limb_width: u32,
}

struct RhoState {
    own: RhoKey,
    best: RhoKey,
    improved: bool,
    gather: Gather,
}

impl NodeProgram for RhoBroadcast<'_> {
    type State = RhoState;
    type Output = Vec<NodeId>;

    fn init(&self, node: NodeInfo<'_>) -> RhoState {
        let own = RhoKey {
            id: node.id,
            degree: node.degree() as u64,
            mass: self.mass[node.id],
        };
        RhoState {
            own,
            best: own,
            improved: true,
            gather: Gather::default(),
        }
    }

    fn on_round(&self, state: &mut RhoState, ctx: &mut RoundContext<'_>) -> Status {
        let n = ctx.node_count() as u64;
        let round = ctx.round();
        if round < n {
            for m in ctx.inbox() {
                let key = RhoKey::decode(&m.message.fields()[1..], self.limb_width);
                if key.rank_cmp(&state.best) == Ordering::Greater {
                    state.best = key;
                    state.improved = true;
                }
            }
            if state.improved {
                ctx.send_all(&state.best.encode(Some(TAG_ELECT), self.limb_width));
                state.improved = false;
            }
            return Status::Active;
        }
        if round == n {
            for m in ctx.inbox() {
                let key = RhoKey::decode(&m.message.fields()[1..], self.limb_width);
                if key.rank_cmp(&state.best) == Ordering::Greater {
                    state.best = key;
                }
            }
        }
        let own = state.own;
        let width = self.limb_width;
        let item = move || own.encode(None, width).fields().to_vec();
        let start = round == n && state.best.id == state.own.id;
        state.gather.step(ctx, start, &item, true);
        Status::from(state.gather.complete)
    }

    fn report(&self, state: &RhoState) -> Vec<NodeId> {
        let keys: Vec<RhoKey> = state
            .gather
            .collected
            .iter()
            .map(|f| RhoKey::decode(f, self.limb_width))
            .collect();
        order_keys(&keys)
    }
}

/// Broadcasts every node's `ρ` to every node. Returns the ordering each node
/// reconstructed (all identical on success).
pub fn broadcast_rho(
    g: &Graph,
    mass: &[u128],
    limb_width: u32,
    sim: &SimConfig,
) -> Result<(Vec<Vec<NodeId>>, RoundMetrics)> {
    let program = RhoBroadcast { mass, limb_width };
    let out = congest::run(g, &program, sim)?;
    Ok((out.outputs, out.metrics))
}

/// Position exchange followed by an upcast of `(id, L, R)` to the order head.
struct SweepUpcast<'a> {
    position: &'a [usize],
}

struct SweepState {
    position: usize,
    inner: u64,
    outer: u64,
    gather: Gather,
}

impl NodeProgram for SweepUpcast<'_> {
    type State = SweepState;
    type Output = Option<Vec<[u64; 3]>>;

    fn init(&self, node: NodeInfo<'_>) -> SweepState {
        SweepState {
            position: self.position[node.id],
            inner: 0,
            outer: 0,
            gather: Gather::default(),
        }
    }

    fn on_round(&self, state: &mut SweepState, ctx: &mut RoundContext<'_>) -> Status {
        match ctx.round() {
            1 => {
                ctx.send_all(&Message::new(&[TAG_POSITION, state.position as u64]));
                Status::Active
            }
            round => {
                if round == 2 {
                    for m in ctx.inbox() {
                        if (m.message.fields()[1] as usize) < state.position {
                            state.inner += 1;
                        } else {
                            state.outer += 1;
                        }
                    }
                }
                let (id, inner, outer) = (ctx.id() as u64, state.inner, state.outer);
                let item = move || vec![id, inner, outer];
                let start = round == 2 && state.position == 0;
                state.gather.step(ctx, start, &item, false);
                Status::from(state.gather.complete)
            }
        }
    }

    fn report(&self, state: &SweepState) -> Self::Output {
        state.gather.is_root.then(|| {
            state
                .gather
                .collected
                .iter()
                .map(|f| [f[0], f[1], f[2]])
                .collect()
        })
    }
}

/// Collects `(id, L_j, R_j)` for every node at the node in position 0.
pub fn upcast_sweep_triples(
    g: &Graph,
    order: &[NodeId],
    sim: &SimConfig,
) -> Result<(Vec<[u64; 3]>, RoundMetrics)> {
    let mut position = vec![0; g.node_count()];
    for (k, &v) in order.iter().enumerate() {
        position[v] = k;
    }
    let program = SweepUpcast {
        position: &position,
    };
    let out = congest::run(g, &program, sim)?;
    let triples = out
        .outputs
        .into_iter()
        .flatten()
        .next()
        .expect("the order head roots the tree");
    Ok((triples, out.metrics))
}

/// Source floods a fixed payload; each node forwards once on first receipt.
struct Flood<'a> {
    source: NodeId,
    payload: &'a [u64],
}

impl NodeProgram for Flood<'_> {
    type State = Option<Vec<u64>>;
    type Output = Option<Vec<u64>>;

    fn init(&self, _: NodeInfo<'_>) -> Self::State {
        None
    }

    fn on_round(&self, state: &mut Self::State, ctx: &mut RoundContext<'_>) -> Status {
        if state.is_some() {
            return Status::Halted;
        }
        let received = if ctx.id() == self.source {
            Some(self.payload.to_vec())
        } else {
            ctx.inbox().first().map(|m| m.message.fields()[1..].to_vec())
        };
        match received {
            Some(payload) => {
                let mut msg = Message::new(&[TAG_FLOOD]);
                for &f in &payload {
                    msg.push(f);
                }
                ctx.send_all(&msg);
                *state = Some(payload);
                Status::Halted
            }
            None => Status::Active,
        }
    }

    fn report(&self, state: &Self::State) -> Self::Output {
        state.clone()
    }
}

/// Floods `payload` from `source`; takes `ecc(source) + 1` rounds.
pub fn flood(
    g: &Graph,
    source: NodeId,
    payload: &[u64],
    sim: &SimConfig,
) -> Result<(Vec<Vec<u64>>, RoundMetrics)> {
    let out = congest::run(g, &Flood { source, payload }, sim)?;
    let received = out
        .outputs
        .into_iter()
        .map(|p| p.expect("connected graph floods every node"))
        .collect();
    Ok((received, out.metrics))
}
