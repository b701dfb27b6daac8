//! Exact reference computations used as ground truth.
//!
//! These never go through the round engine: walk distributions come from
//! repeated vector-by-transition products, personalized PageRank from the
//! truncated geometric series, and the sparsest cut from exhaustive search.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::graph::{Cut, Fraction, Graph, NodeId};

pub const RATIONAL_NODE_CAP: usize = 12;
pub const BRUTE_FORCE_HARD_CAP: usize = 26;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleBudget {
    pub max_n_bruteforce: usize,
    pub ppr_tail_tol: f64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_n_bruteforce: 22,
            ppr_tail_tol: 1e-12,
        }
    }
}

impl OracleBudget {
    pub fn validate(&self) -> Result<()> {
        if self.max_n_bruteforce > BRUTE_FORCE_HARD_CAP {
            return Err(Error::config(format!(
                "max_n_bruteforce is capped at {BRUTE_FORCE_HARD_CAP}"
            )));
        }
        if !(self.ppr_tail_tol > 0.0) {
            return Err(Error::config("ppr_tail_tol must be positive"));
        }
        Ok(())
    }
}

fn check_node(g: &Graph, s: NodeId) -> Result<()> {
    if s >= g.node_count() {
        return Err(Error::NodeOutOfRange {
            node: s,
            n: g.node_count(),
        });
    }
    Ok(())
}

/// One step of the uniform random walk applied to a row vector.
pub fn walk_step(g: &Graph, p: &[f64]) -> Vec<f64> {
    let mut next = vec![0.0; p.len()];
    for (v, &mass) in p.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let share = mass / g.degree(v) as f64;
        for &u in g.neighbors(v) {
            next[u] += share;
        }
    }
    next
}

/// `p_ℓ(s, ·)` in double precision.
pub fn exact_walk_distribution(g: &Graph, s: NodeId, length: usize) -> Result<Vec<f64>> {
    check_node(g, s)?;
    let mut p = vec![0.0; g.node_count()];
    p[s] = 1.0;
    for _ in 0..length {
        p = walk_step(g, &p);
    }
    Ok(p)
}

/// `p_ℓ(s, ·)` in exact rational arithmetic, for `n <= 12`.
pub fn exact_walk_distribution_rational(
    g: &Graph,
    s: NodeId,
    length: usize,
) -> Result<Vec<BigRational>> {
    check_node(g, s)?;
    let n = g.node_count();
    if n > RATIONAL_NODE_CAP {
        return Err(Error::OracleCap {
            n,
            cap: RATIONAL_NODE_CAP,
        });
    }
    let mut p = vec![BigRational::zero(); n];
    p[s] = BigRational::one();
    for _ in 0..length {
        let mut next = vec![BigRational::zero(); n];
        for (v, mass) in p.iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            let share = mass / BigRational::from_integer(BigInt::from(g.degree(v)));
            for &u in g.neighbors(v) {
                next[u] += &share;
            }
        }
        p = next;
    }
    Ok(p)
}

/// `Σ_{t=0}^{T} α(1−α)^t p_t(s,·)` with `(1−α)^{T+1} <= tol`.
pub fn exact_ppr(g: &Graph, s: NodeId, alpha: f64, tol: f64) -> Result<Vec<f64>> {
    check_node(g, s)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::config(format!(
            "reset probability must be in (0, 1], got {alpha}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::config("tolerance must be positive"));
    }
    let n = g.node_count();
    let mut walk = vec![0.0; n];
    walk[s] = 1.0;
    let mut ppr = vec![0.0; n];
    let mut weight = alpha;
    let mut tail = 1.0 - alpha;
    loop {
        for (acc, &p) in ppr.iter_mut().zip(&walk) {
            *acc += weight * p;
        }
        if tail <= tol {
            break;
        }
        walk = walk_step(g, &walk);
        weight *= 1.0 - alpha;
        tail *= 1.0 - alpha;
    }
    Ok(ppr)
}

/// `max_v |v − (α χ_s + (1−α) v P)|`.
pub fn ppr_residual(g: &Graph, s: NodeId, alpha: f64, v: &[f64]) -> f64 {
    let stepped = walk_step(g, v);
    v.iter()
        .zip(&stepped)
        .enumerate()
        .map(|(i, (&x, &y))| {
            let restart = if i == s { alpha } else { 0.0 };
            (x - (restart + (1.0 - alpha) * y)).abs()
        })
        .fold(0.0, f64::max)
}

/// Exhaustive minimum-conductance cut.
///
/// Node 0 stays on one side while the other `n − 1` nodes are walked in Gray
/// code order, so each step flips one node and updates the crossing count and
/// volume in `O(deg)`. Ties go to the lexicographically smallest member list
/// among the sides that contain node 0.
pub fn brute_force_sparsest_cut(g: &Graph, budget: &OracleBudget) -> Result<(Cut, Fraction)> {
    budget.validate()?;
    let n = g.node_count();
    if n > budget.max_n_bruteforce {
        return Err(Error::OracleCap {
            n,
            cap: budget.max_n_bruteforce,
        });
    }
    let total = g.total_volume();
    let all: u64 = (1u64 << n) - 1;
    // `other` holds the side without node 0; bit i is node i
    let mut other: u64 = 0;
    let mut other_volume: u64 = 0;
    let mut crossing: u64 = 0;
    let mut best: Option<(u64, u64, u64)> = None; // (crossing, denominator, side with 0)

    let steps: u64 = (1u64 << (n - 1)) - 1;
    for k in 1..=steps {
        let node = k.trailing_zeros() as usize + 1;
        let bit = 1u64 << node;
        let joining = other & bit == 0;
        for &u in g.neighbors(node) {
            let same_side_before = ((other >> u) & 1 == 1) == !joining;
            if same_side_before {
                crossing += 1;
            } else {
                crossing -= 1;
            }
        }
        let d = g.degree(node) as u64;
        if joining {
            other |= bit;
            other_volume += d;
        } else {
            other &= !bit;
            other_volume -= d;
        }
        let denominator = other_volume.min(total - other_volume);
        let side = all & !other;
        let better = match best {
            None => true,
            Some((bc, bd, bside)) => {
                let lhs = crossing as u128 * bd as u128;
                let rhs = bc as u128 * denominator as u128;
                lhs < rhs || (lhs == rhs && lex_less(side, bside))
            }
        };
        if better {
            best = Some((crossing, denominator, side));
        }
    }

    let (_, _, side) = best.expect("a graph with two or more nodes has a proper cut");
    let members = (0..n).filter(|&v| (side >> v) & 1 == 1);
    let cut = Cut::new(g, members)?;
    let phi = cut.conductance();
    Ok((cut, phi))
}

/// Lexicographic order of the sorted member lists of two node bitmasks.
fn lex_less(a: u64, b: u64) -> bool {
    let diff = a ^ b;
    if diff == 0 {
        return false;
    }
    let x = diff.trailing_zeros();
    let above = if x >= 63 { 0 } else { !0u64 << (x + 1) };
    if (a >> x) & 1 == 1 {
        // a continues with x, b continues with something larger or stops
        b & above != 0
    } else {
        a & above == 0
    }
}

/// Plain subset enumeration without the incremental update, for cross-checking.
pub fn naive_sparsest_conductance(g: &Graph) -> Fraction {
    let n = g.node_count();
    assert!(n <= 20, "naive enumeration is for small graphs only");
    (1u64..(1u64 << n) - 1)
        .map(|mask| {
            let members = (0..n).filter(|&v| (mask >> v) & 1 == 1);
            Cut::new(g, members).expect("proper subset").conductance()
        })
        .min()
        .expect("at least one proper subset")
}
