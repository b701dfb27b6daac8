//! Sweep over prefix sets of a ranking.
//!
//! For an order `π`, `S_j = {π_1..π_j}`. Each node `π_j` counts neighbors
//! ranked before it (`L_j`) and after it (`R_j`); then
//! `cross(S_j) = cross(S_{j-1}) + R_j - L_j` and `vol(S_j) = vol(S_{j-1}) + L_j + R_j`.

use num_rational::Ratio;

use crate::congest::{RoundMetrics, SimConfig};
use crate::error::{Error, Result};
use crate::graph::{Cut, Fraction, Graph, NodeId};
use crate::protocol::{self, order_keys, RhoKey};
use crate::walk::LandingMass;

/// The distributed sweep finishes within `SWEEP_ROUND_FACTOR * (n + D)` rounds.
pub const SWEEP_ROUND_FACTOR: u64 = 3;

/// Ranking by `ρ(i) = mass(i) / d(i)`, decreasing, ties by ascending id.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepOrder {
    pub pi: Vec<NodeId>,
    pub rho: Vec<f64>,
}

pub fn order_by_mass(g: &Graph, mass: &[u128]) -> SweepOrder {
    let keys: Vec<RhoKey> = (0..g.node_count())
        .map(|v| RhoKey {
            id: v,
            degree: g.degree(v) as u64,
            mass: mass[v],
        })
        .collect();
    let pi = order_keys(&keys);
    let rho = (0..g.node_count())
        .map(|v| mass[v] as f64 / g.degree(v) as f64)
        .collect();
    SweepOrder { pi, rho }
}

pub fn order_by_rho(g: &Graph, scores: &impl LandingMass) -> SweepOrder {
    order_by_mass(g, &scores.landing_mass())
}

/// One row of the sweep table, for `S_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepRow {
    pub j: usize,
    pub node: NodeId,
    pub inner: u64,
    pub outer: u64,
    pub crossing: u64,
    pub volume: u64,
    /// `None` for `j = n`.
    pub conductance: Option<Fraction>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepResult {
    pub order: Vec<NodeId>,
    /// `L_j` per position.
    pub inner: Vec<u64>,
    /// `R_j` per position.
    pub outer: Vec<u64>,
    /// `cross(S_j)` for `j = 1..n` (index `j - 1`).
    pub crossings: Vec<u64>,
    pub volumes: Vec<u64>,
    /// `Φ(S_j)` for `j = 1..n-1` (index `j - 1`).
    pub conductances: Vec<Fraction>,
    /// Smallest `j` attaining the minimum conductance.
    pub best_j: usize,
    pub best_conductance: Fraction,
}

impl SweepResult {
    fn from_counts(order: Vec<NodeId>, inner: Vec<u64>, outer: Vec<u64>) -> SweepResult {
        let n = order.len();
        let total: u64 = inner.iter().chain(&outer).sum();
        let mut crossings = Vec::with_capacity(n);
        let mut volumes = Vec::with_capacity(n);
        let (mut cross, mut vol) = (0i64, 0u64);
        for k in 0..n {
            cross += outer[k] as i64 - inner[k] as i64;
            vol += inner[k] + outer[k];
            crossings.push(cross as u64);
            volumes.push(vol);
        }
        let conductances: Vec<Fraction> = (0..n - 1)
            .map(|k| {
                let denom = volumes[k].min(total - volumes[k]);
                Ratio::new(crossings[k], denom)
            })
            .collect();
        let mut best = 0;
        for (k, c) in conductances.iter().enumerate() {
            if *c < conductances[best] {
                best = k;
            }
        }
        SweepResult {
            order,
            inner,
            outer,
            best_j: best + 1,
            best_conductance: conductances[best],
            crossings,
            volumes,
            conductances,
        }
    }

    /// `Φ(S_j)`, `1 <= j <= n - 1`.
    pub fn conductance_at(&self, j: usize) -> Fraction {
        self.conductances[j - 1]
    }

    pub fn prefix_cut(&self, g: &Graph, j: usize) -> Result<Cut> {
        Cut::new(g, self.order[..j].iter().copied())
    }

    pub fn best_cut(&self, g: &Graph) -> Result<Cut> {
        self.prefix_cut(g, self.best_j)
    }

    pub fn rows(&self) -> Vec<SweepRow> {
        let n = self.order.len();
        (0..n)
            .map(|k| SweepRow {
                j: k + 1,
                node: self.order[k],
                inner: self.inner[k],
                outer: self.outer[k],
                crossing: self.crossings[k],
                volume: self.volumes[k],
                conductance: self.conductances.get(k).copied(),
            })
            .collect()
    }

    /// Tab-separated table: `j node L R crossing volume conductance`.
    pub fn table(&self) -> String {
        let mut out = String::from("j\tnode\tL\tR\tcrossing\tvolume\tconductance\n");
        for row in self.rows() {
            let phi = row.conductance.map_or_else(|| "-".to_string(), |c| c.to_string());
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                row.j, row.node, row.inner, row.outer, row.crossing, row.volume, phi
            ));
        }
        out
    }
}

fn check_order(g: &Graph, order: &[NodeId]) -> Result<()> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::config(format!("order has {} nodes, graph has {n}", order.len())));
    }
    for &v in order {
        if v >= n {
            return Err(Error::NodeOutOfRange { node: v, n });
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::config(format!("node {v} appears twice in the order")));
        }
    }
    Ok(())
}

/// Centralized incremental sweep.
pub fn sweep_conductances(g: &Graph, order: &[NodeId]) -> Result<SweepResult> {
    check_order(g, order)?;
    let mut position = vec![0; g.node_count()];
    for (k, &v) in order.iter().enumerate() {
        position[v] = k;
    }
    let (mut inner, mut outer) = (Vec::with_capacity(order.len()), Vec::with_capacity(order.len()));
    for (k, &v) in order.iter().enumerate() {
        let before = g.neighbors(v).iter().filter(|&&u| position[u] < k).count() as u64;
        inner.push(before);
        outer.push(g.degree(v) as u64 - before);
    }
    Ok(SweepResult::from_counts(order.to_vec(), inner, outer))
}

/// Recomputes every `Φ(S_j)` from scratch. Quadratic; for cross-checks.
pub fn sweep_conductances_direct(g: &Graph, order: &[NodeId]) -> Result<Vec<Fraction>> {
    check_order(g, order)?;
    (1..order.len())
        .map(|j| Cut::new(g, order[..j].iter().copied()).map(|c| c.conductance()))
        .collect()
}

/// Distributed sweep: neighbors exchange positions, then `(id, L, R)` is
/// convergecast to `π_1`, which evaluates every prefix.
pub fn sweep_distributed(g: &Graph, order: &[NodeId], sim: &SimConfig) -> Result<(SweepResult, RoundMetrics)> {
    check_order(g, order)?;
    let (triples, metrics) = protocol::upcast_sweep_triples(g, order, sim)?;
    let n = g.node_count();
    let mut by_node = vec![(0u64, 0u64); n];
    for [id, l, r] in triples {
        by_node[id as usize] = (l, r);
    }
    let inner = order.iter().map(|&v| by_node[v].0).collect();
    let outer = order.iter().map(|&v| by_node[v].1).collect();
    Ok((SweepResult::from_counts(order.to_vec(), inner, outer), metrics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{generate, GraphFamilySpec};

    #[test]
    fn barbell_identity_order() {
        let g = generate(&GraphFamilySpec::barbell(7)).unwrap();
        let order: Vec<NodeId> = (0..7).collect();
        let sweep = sweep_conductances(&g, &order).unwrap();
        assert_eq!(sweep.best_j, 3);
        assert_eq!(sweep.best_conductance, Ratio::new(1, 7));
        assert_eq!(sweep.crossings[6], 0);
        assert_eq!(sweep.volumes[6], g.total_volume());
    }

    #[test]
    fn distributed_matches_local() {
        let g = generate(&GraphFamilySpec::random_connected(14, 0.3, 5)).unwrap();
        let order: Vec<NodeId> = (0..14).rev().collect();
        let local = sweep_conductances(&g, &order).unwrap();
        let (dist, metrics) = sweep_distributed(&g, &order, &SimConfig::default().strict()).unwrap();
        assert_eq!(local, dist);
        assert!(metrics.rounds <= SWEEP_ROUND_FACTOR * (14 + g.diameter() as u64));
    }

    #[test]
    fn matches_direct_recount() {
        let g = generate(&GraphFamilySpec::cycle(9)).unwrap();
        let order = vec![4, 0, 8, 1, 7, 2, 6, 3, 5];
        let sweep = sweep_conductances(&g, &order).unwrap();
        assert_eq!(sweep.conductances, sweep_conductances_direct(&g, &order).unwrap());
    }

    #[test]
    fn rejects_bad_orders() {
        let g = generate(&GraphFamilySpec::cycle(4)).unwrap();
        assert!(sweep_conductances(&g, &[0, 1, 2]).is_err());
        assert!(sweep_conductances(&g, &[0, 1, 1, 2]).is_err());
        assert!(sweep_conductances(&g, &[0, 1, 2, 9]).is_err());
    }

    #[test]
    fn rho_ties_break_by_id() {
        let g = generate(&GraphFamilySpec::cycle(4)).unwrap();
        let order = order_by_mass(&g, &[5, 7, 7, 5]);
        assert_eq!(order.pi, vec![1, 2, 0, 3]);
    }
}
