//! Structured output documents.
//!
//! Node ids are reported as external labels. Exact conductances are written
//! as `"numerator/denominator"` next to their float value.

use serde::{Serialize, Serializer};

use crate::congest::RoundMetrics;
use crate::graph::{to_f64, Cut, Fraction, Graph, NodeId};
use crate::sparse_cut::{CandidateTrace, CutReport, GuessRecord};

pub fn serialize_fraction<S: Serializer>(x: &Fraction, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_fraction(*x))
}

pub fn format_fraction(x: Fraction) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub source: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub best_j: usize,
    pub best_conductance: f64,
    pub best_conductance_exact: String,
    pub estimate_rounds: u64,
    pub broadcast_rounds: u64,
    pub sweep_rounds: u64,
    pub announce_rounds: u64,
}

impl TraceRow {
    fn new(g: &Graph, t: &CandidateTrace) -> Self {
        TraceRow {
            source: g.label(t.source),
            length: t.length,
            alpha: t.alpha,
            best_j: t.best_j,
            best_conductance: to_f64(t.best_conductance),
            best_conductance_exact: format_fraction(t.best_conductance),
            estimate_rounds: t.estimate_rounds,
            broadcast_rounds: t.broadcast_rounds,
            sweep_rounds: t.sweep_rounds,
            announce_rounds: t.announce_rounds,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CutReportDocument {
    pub algorithm: &'static str,
    pub engine: &'static str,
    pub oracle: bool,
    pub phi_guess: f64,
    pub balance: f64,
    pub cut_members: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster: Option<Vec<u64>>,
    pub conductance: f64,
    pub conductance_exact: String,
    pub balance_measured: f64,
    pub source_used: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length_used: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_used: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accepted: Option<bool>,
    pub rounds: u64,
    pub messages_total: u64,
    pub max_bits_per_edge_round: u32,
    pub budget_violations: u64,
    pub final_broadcast_rounds: u64,
    pub trace: Vec<TraceRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub guesses: Vec<GuessRecord>,
}

fn labels(g: &Graph, nodes: &[NodeId]) -> Vec<u64> {
    nodes.iter().map(|&v| g.label(v)).collect()
}

impl CutReportDocument {
    pub fn new(g: &Graph, r: &CutReport) -> Self {
        CutReportDocument {
            algorithm: r.algorithm.name(),
            engine: r.engine.name(),
            oracle: false,
            phi_guess: r.phi_guess,
            balance: r.balance_target,
            cut_members: labels(g, r.cut.members()),
            cluster: r.cluster.as_ref().map(|c| labels(g, c)),
            conductance: to_f64(r.conductance),
            conductance_exact: format_fraction(r.conductance),
            balance_measured: to_f64(r.balance),
            source_used: g.label(r.source_used),
            length_used: r.length_used,
            alpha_used: r.alpha_used,
            accepted: r.accepted,
            rounds: r.metrics.rounds,
            messages_total: r.metrics.messages_total,
            max_bits_per_edge_round: r.metrics.max_bits_per_edge_round,
            budget_violations: r.metrics.budget_violations,
            final_broadcast_rounds: r.final_broadcast_rounds,
            trace: r.trace.iter().map(|t| TraceRow::new(g, t)).collect(),
            guesses: r.guesses.clone(),
        }
    }
}

/// Brute-force optimum in the same shape as a run report.
#[derive(Clone, Debug, Serialize)]
pub struct OracleCutDocument {
    pub oracle: bool,
    pub what: &'static str,
    pub cut_members: Vec<u64>,
    pub conductance: f64,
    pub conductance_exact: String,
    pub balance_measured: f64,
}

impl OracleCutDocument {
    pub fn new(g: &Graph, cut: &Cut, phi: Fraction) -> Self {
        OracleCutDocument {
            oracle: true,
            what: "sparsest",
            cut_members: labels(g, cut.members()),
            conductance: to_f64(phi),
            conductance_exact: format_fraction(phi),
            balance_measured: to_f64(cut.balance()),
        }
    }
}

/// Per-node vector (estimate or oracle).
#[derive(Clone, Debug, Serialize)]
pub struct NodeValuesDocument {
    pub oracle: bool,
    pub what: &'static str,
    pub source: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub nodes: Vec<u64>,
    pub values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visits: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<RoundMetrics>,
}

impl NodeValuesDocument {
    pub fn new(g: &Graph, what: &'static str, source: NodeId, values: Vec<f64>) -> Self {
        NodeValuesDocument {
            oracle: false,
            what,
            source: g.label(source),
            length: None,
            alpha: None,
            nodes: g.labels().to_vec(),
            values,
            visits: None,
            metrics: None,
        }
    }

    /// `label value` lines, values at 12 significant digits.
    pub fn lines(&self) -> String {
        let mut out = String::new();
        for (k, (&node, &v)) in self.nodes.iter().zip(&self.values).enumerate() {
            out.push_str(&format!("{node}\t{v:.11e}"));
            if let Some(visits) = &self.visits {
                out.push_str(&format!("\t{}", visits[k]));
            }
            out.push('\n');
        }
        out
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report types serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{generate, GraphFamilySpec};
    use crate::oracle::{brute_force_sparsest_cut, OracleBudget};

    #[test]
    fn oracle_document_fields() {
        let g = generate(&GraphFamilySpec::barbell(7)).unwrap();
        let (cut, phi) = brute_force_sparsest_cut(&g, &OracleBudget::default()).unwrap();
        let json = to_json(&OracleCutDocument::new(&g, &cut, phi));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["conductance_exact"], "1/7");
        assert_eq!(v["cut_members"], serde_json::json!([0, 1, 2]));
        assert_eq!(v["oracle"], true);
    }

    #[test]
    fn twelve_digit_lines_round_trip() {
        let g = generate(&GraphFamilySpec::path(3)).unwrap();
        let doc = NodeValuesDocument::new(&g, "walk", 0, vec![1.0 / 3.0, 0.5, 1.0 / 6.0]);
        for (line, &v) in doc.lines().lines().zip(&doc.values) {
            let parsed: f64 = line.split('\t').nth(1).unwrap().parse().unwrap();
            assert!(((parsed - v) / v).abs() < 1e-11);
        }
    }
}
