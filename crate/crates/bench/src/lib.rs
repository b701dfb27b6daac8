//! Fixtures shared by the benchmarks.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use sparsecut::{generate, Graph, GraphFamilySpec, NodeId};

pub fn barbell(n: usize) -> Graph {
    generate(&GraphFamilySpec::barbell(n)).expect("odd n >= 7")
}

pub fn random_graph(n: usize, seed: u64) -> Graph {
    generate(&GraphFamilySpec::random_connected(n, 0.1, seed)).expect("n >= 2")
}

/// A fixed scrambled order of `0..n`.
pub fn scrambled_order(n: usize) -> Vec<NodeId> {
    let mut order: Vec<NodeId> = (0..n).collect();
    order.shuffle(&mut StdRng::seed_from_u64(n as u64));
    order
}
