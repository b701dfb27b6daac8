//! Distributed sparse-cut detection in a simulated CONGEST network.
//!
//! Nodes estimate random-walk landing probabilities (or personalized
//! PageRank) from a source, rank themselves by `ρ(i) = p(i) / d(i)`, and a
//! distributed sweep over the prefixes of that ranking returns a low
//! conductance cut. Exact oracles for small graphs live in [`oracle`].

pub mod congest;
pub mod error;
pub mod family;
pub mod graph;
pub mod oracle;
pub mod pagerank;
pub mod protocol;
pub mod report;
pub mod sparse_cut;
pub mod sweep;
pub mod walk;

pub use congest::{MetricsSummary, RoundMetrics, SimConfig};
pub use error::{Error, Result, SimError};
pub use family::{generate, Family, GraphFamilySpec};
pub use graph::{conductance, load_edge_list, Cut, Fraction, Graph, NodeId};
pub use pagerank::{estimate_pagerank, PageRankConfig, PageRankEstimate};
pub use sparse_cut::{
    guess_phi, local_cluster, sparse_cut_pagerank, sparse_cut_randomwalk, CutReport, Engine, SparseCutConfig,
};
pub use sweep::{order_by_rho, sweep_conductances, sweep_distributed, SweepOrder, SweepResult};
pub use walk::{estimate_probability, LandingMass, ProbEstimate, WalkConfig, WalkMode};
