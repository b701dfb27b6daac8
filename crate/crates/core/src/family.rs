//! Deterministic generators for the test graph families.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Fraction, Graph, NodeId};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// Two cliques of `(n-1)/2` nodes joined by a path of length two through a middle node.
    Barbell,
    Cycle,
    Complete,
    Path,
    /// Node 0 is the center, nodes `1..n` are leaves.
    Star,
    /// Random spanning tree plus every other pair independently with probability `p`.
    RandomConnected { p: f64, seed: u64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Barbell => "barbell",
            Family::Cycle => "cycle",
            Family::Complete => "complete",
            Family::Path => "path",
            Family::Star => "star",
            Family::RandomConnected { .. } => "random-connected",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    /// Parses a family name; `random-connected` gets `p = 0.3, seed = 0` until
    /// overridden by the caller.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "barbell" => Family::Barbell,
            "cycle" => Family::Cycle,
            "complete" => Family::Complete,
            "path" => Family::Path,
            "star" => Family::Star,
            "random" | "random-connected" => Family::RandomConnected { p: 0.3, seed: 0 },
            other => return Err(Error::InvalidFamily(format!("unknown family `{other}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphFamilySpec {
    pub family: Family,
    pub n: usize,
}

impl GraphFamilySpec {
    pub fn new(family: Family, n: usize) -> Self {
        GraphFamilySpec { family, n }
    }

    pub fn barbell(n: usize) -> Self {
        Self::new(Family::Barbell, n)
    }

    pub fn cycle(n: usize) -> Self {
        Self::new(Family::Cycle, n)
    }

    pub fn complete(n: usize) -> Self {
        Self::new(Family::Complete, n)
    }

    pub fn path(n: usize) -> Self {
        Self::new(Family::Path, n)
    }

    pub fn star(n: usize) -> Self {
        Self::new(Family::Star, n)
    }

    pub fn random_connected(n: usize, p: f64, seed: u64) -> Self {
        Self::new(Family::RandomConnected { p, seed }, n)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        let min = match self.family {
            Family::Barbell => 7,
            Family::Cycle => 3,
            _ => 2,
        };
        if n < min {
            return Err(Error::InvalidFamily(format!(
                "{} needs at least {min} nodes, got {n}",
                self.family
            )));
        }
        match self.family {
            Family::Barbell if n % 2 == 0 => Err(Error::InvalidFamily(format!(
                "barbell needs an odd node count, got {n}"
            ))),
            Family::RandomConnected { p, .. } if !(0.0..=1.0).contains(&p) => Err(
                Error::InvalidFamily(format!("edge probability {p} is outside [0, 1]")),
            ),
            _ => Ok(()),
        }
    }
}

pub fn generate(spec: &GraphFamilySpec) -> Result<Graph> {
    spec.validate()?;
    let n = spec.n;
    let edges = match spec.family {
        Family::Barbell => barbell_edges(n),
        Family::Cycle => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        Family::Complete => clique(0..n),
        Family::Path => (1..n).map(|i| (i - 1, i)).collect(),
        Family::Star => (1..n).map(|i| (0, i)).collect(),
        Family::RandomConnected { p, seed } => random_connected_edges(n, p, seed),
    };
    Graph::from_edges(n, &edges)
}

fn clique(nodes: std::ops::Range<NodeId>) -> Vec<(NodeId, NodeId)> {
    let mut edges = Vec::new();
    for u in nodes.clone() {
        for v in u + 1..nodes.end {
            edges.push((u, v));
        }
    }
    edges
}

/// Cliques `{0..k}` and `{k+1..n}` with middle node `k`, bridged by `(k-1, k)`
/// and `(k, k+1)`.
fn barbell_edges(n: usize) -> Vec<(NodeId, NodeId)> {
    let k = (n - 1) / 2;
    let mut edges = clique(0..k);
    edges.extend(clique(k + 1..n));
    edges.push((k - 1, k));
    edges.push((k, k + 1));
    edges
}

fn random_connected_edges(n: usize, p: f64, seed: u64) -> Vec<(NodeId, NodeId)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<NodeId> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut present = vec![false; n * n];
    let mut edges = Vec::new();
    for i in 1..n {
        let u = order[i];
        let v = order[rng.random_range(0..i)];
        present[u * n + v] = true;
        present[v * n + u] = true;
        edges.push((u.min(v), u.max(v)));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !present[u * n + v] && rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Minimum conductance of the barbell `B_n`: one clique side, `1 / (k(k-1) + 1)`
/// with `k = (n-1)/2`.
pub fn barbell_min_conductance(n: usize) -> Result<Fraction> {
    GraphFamilySpec::barbell(n).validate()?;
    let k = ((n - 1) / 2) as u64;
    Ok(Fraction::new(1, k * (k - 1) + 1))
}

/// Side of the barbell optimum that contains node 0.
pub fn barbell_left_clique(n: usize) -> Vec<NodeId> {
    (0..(n - 1) / 2).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barbell_seven() {
        let g = generate(&GraphFamilySpec::barbell(7)).unwrap();
        assert_eq!(g.edge_count(), 8);
        assert_eq!(g.degrees(), vec![2, 2, 3, 2, 3, 2, 2]);
        assert!(g.has_edge(2, 3) && g.has_edge(3, 4));
        assert_eq!(g.diameter(), 4);
        assert_eq!(barbell_min_conductance(7).unwrap(), Fraction::new(1, 7));
    }

    #[test]
    fn barbell_rejects_even_and_small() {
        assert!(matches!(
            generate(&GraphFamilySpec::barbell(8)),
            Err(Error::InvalidFamily(_))
        ));
        assert!(generate(&GraphFamilySpec::barbell(5)).is_err());
    }

    #[test]
    fn cycle_and_complete() {
        let c4 = generate(&GraphFamilySpec::cycle(4)).unwrap();
        assert_eq!(c4.edge_count(), 4);
        assert_eq!(c4.degrees(), vec![2; 4]);
        let k4 = generate(&GraphFamilySpec::complete(4)).unwrap();
        assert_eq!(k4.edge_count(), 6);
        assert_eq!(k4.degrees(), vec![3; 4]);
    }

    #[test]
    fn star_and_path() {
        let star = generate(&GraphFamilySpec::star(5)).unwrap();
        assert_eq!(star.degrees(), vec![4, 1, 1, 1, 1]);
        let p2 = generate(&GraphFamilySpec::path(2)).unwrap();
        assert_eq!(p2.edge_count(), 1);
    }

    #[test]
    fn random_connected_is_deterministic() {
        let spec = GraphFamilySpec::random_connected(20, 0.2, 7);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        assert!(a.edge_count() >= 19);
        let c = generate(&GraphFamilySpec::random_connected(20, 0.2, 8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn family_names_parse() {
        for name in ["barbell", "cycle", "complete", "path", "star", "random-connected"] {
            assert_eq!(name.parse::<Family>().unwrap().name(), name);
        }
        assert!("hypercube".parse::<Family>().is_err());
    }
}
