use thiserror::Error;

use crate::congest::RoundMetrics;
use crate::graph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: u64 },

    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("invalid cut: {0}")]
    InvalidCut(String),

    #[error("invalid graph family: {0}")]
    InvalidFamily(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("node {node} is out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: NodeId, n: usize },

    #[error("brute-force oracle is capped at {cap} nodes, graph has {n}")]
    OracleCap { n: usize, cap: usize },

    #[error(transparent)]
    Sim(#[from] SimError),
}

impl Error {
    pub fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }

    /// True when the failure is a round-cap timeout inside the simulator.
    pub fn is_timeout(&self) -> bool {
        matches!(self, Error::Sim(SimError::Timeout { .. }))
    }
}

/// Failures raised by the round engine.
#[derive(Debug, Error)]
pub enum SimError {
    #[error(
        "round {round}: node {node} sent a {bits}-bit field to node {dst}, budget is {budget} bits per field"
    )]
    BudgetExceeded {
        node: NodeId,
        dst: NodeId,
        round: u64,
        bits: u32,
        budget: u32,
    },

    #[error("round {round}: node {node} sent two messages on port {port}")]
    DuplicateSend { node: NodeId, port: usize, round: u64 },

    #[error("round {round}: node {node} addressed port {port} but has degree {degree}")]
    InvalidPort {
        node: NodeId,
        port: usize,
        degree: usize,
        round: u64,
    },

    #[error("simulation did not halt within {} rounds", metrics.rounds)]
    Timeout { metrics: Box<RoundMetrics> },
}
