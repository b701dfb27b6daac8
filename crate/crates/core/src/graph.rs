//! Undirected simple graphs, cuts and the exact cut quantities.
//!
//! Nodes are dense ids `0..n`. Adjacency lists are sorted, so the index of a
//! neighbor inside `neighbors(v)` doubles as the local port number used by
//! the round engine.

use std::collections::{HashMap, VecDeque};

use num_rational::Ratio;

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Exact conductance or balance value.
pub type Fraction = Ratio<u64>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<NodeId>>,
    /// `reverse_ports[v][p]` is the port of `v` inside the list of its p-th neighbor.
    reverse_ports: Vec<Vec<usize>>,
    edge_count: usize,
    labels: Vec<u64>,
}

impl Graph {
    /// Builds a validated graph from an edge list over nodes `0..n`. Duplicate
    /// edges are dropped.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        Self::build(n, edges, (0..n as u64).collect()).map(|(g, _)| g)
    }

    fn build(n: usize, edges: &[(NodeId, NodeId)], labels: Vec<u64>) -> Result<(Self, usize)> {
        if n < 2 || edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut adjacency = vec![Vec::new(); n];
        for (line, &(u, v)) in edges.iter().enumerate() {
            for node in [u, v] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop {
                    line: line + 1,
                    node: labels[u],
                });
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut duplicates = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            let before = list.len();
            list.dedup();
            duplicates += before - list.len();
        }
        // each duplicate edge was counted once at either endpoint
        let duplicates = duplicates / 2;
        let edge_count = adjacency.iter().map(Vec::len).sum::<usize>() / 2;

        let reverse_ports = adjacency
            .iter()
            .enumerate()
            .map(|(v, list)| {
                list.iter()
                    .map(|&u| {
                        adjacency[u]
                            .binary_search(&v)
                            .expect("adjacency lists are symmetric")
                    })
                    .collect()
            })
            .collect();

        let graph = Graph {
            adjacency,
            reverse_ports,
            edge_count,
            labels,
        };
        let components = graph.component_count();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok((graph, duplicates))
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sum of all degrees, `2m`.
    pub fn total_volume(&self) -> u64 {
        2 * self.edge_count as u64
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn reverse_port(&self, v: NodeId, port: usize) -> usize {
        self.reverse_ports[v][port]
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// External id of a node as it appeared in the input (identity for generated graphs).
    pub fn label(&self, v: NodeId) -> u64 {
        self.labels[v]
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn bfs_distances(&self, source: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap_or(0);
            for &u in self.neighbors(v) {
                if dist[u].is_none() {
                    dist[u] = Some(d + 1);
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    pub fn eccentricity(&self, v: NodeId) -> usize {
        self.bfs_distances(v).into_iter().flatten().max().unwrap_or(0)
    }

    /// Exact diameter from a BFS out of every node.
    pub fn diameter(&self) -> usize {
        (0..self.node_count())
            .map(|v| self.eccentricity(v))
            .max()
            .unwrap_or(0)
    }

    fn component_count(&self) -> usize {
        let mut seen = vec![false; self.node_count()];
        let mut components = 0;
        for start in 0..self.node_count() {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for &u in self.neighbors(v) {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
        }
        components
    }

    /// Writes the graph in the edge-list text format, using external labels.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, v) in self.edges() {
            out.push_str(&format!("{} {}\n", self.label(u), self.label(v)));
        }
        out
    }
}

/// Graph read from edge-list text.
#[derive(Clone, Debug)]
pub struct EdgeListGraph {
    pub graph: Graph,
    /// Number of repeated edges that were dropped while loading.
    pub duplicate_edges: usize,
}

impl EdgeListGraph {
    pub fn had_duplicates(&self) -> bool {
        self.duplicate_edges > 0
    }
}

/// Parses the edge-list format: one `u v` pair per line, `#` starts a comment
/// line. External ids are compacted to `0..n` in order of first appearance.
pub fn load_edge_list(text: &str) -> Result<EdgeListGraph> {
    let mut ids: HashMap<u64, NodeId> = HashMap::new();
    let mut labels = Vec::new();
    let mut edges = Vec::new();
    let mut intern = |label: u64, labels: &mut Vec<u64>| -> NodeId {
        *ids.entry(label).or_insert_with(|| {
            labels.push(label);
            labels.len() - 1
        })
    };

    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let parse = |field: Option<&str>| -> Result<u64> {
            let field = field.ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected two node ids".into(),
            })?;
            field.parse::<u64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("`{field}` is not a non-negative integer"),
            })
        };
        let u = parse(fields.next())?;
        let v = parse(fields.next())?;
        if fields.next().is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: "expected exactly two node ids".into(),
            });
        }
        if u == v {
            return Err(Error::SelfLoop {
                line: line_no,
                node: u,
            });
        }
        let u = intern(u, &mut labels);
        let v = intern(v, &mut labels);
        edges.push((u, v));
    }

    let n = labels.len();
    let (graph, duplicate_edges) = Graph::build(n, &edges, labels)?;
    Ok(EdgeListGraph {
        graph,
        duplicate_edges,
    })
}

/// A proper, nonempty node subset `S` with its cached cut quantities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cut {
    members: Vec<NodeId>,
    crossing: u64,
    volume: u64,
    node_count: usize,
    total_volume: u64,
}

impl Cut {
    pub fn new(g: &Graph, members: impl IntoIterator<Item = NodeId>) -> Result<Self> {
        let n = g.node_count();
        let mut inside = vec![false; n];
        let mut list = Vec::new();
        for v in members {
            if v >= n {
                return Err(Error::NodeOutOfRange { node: v, n });
            }
            if !inside[v] {
                inside[v] = true;
                list.push(v);
            }
        }
        if list.is_empty() {
            return Err(Error::InvalidCut("the cut side is empty".into()));
        }
        if list.len() == n {
            return Err(Error::InvalidCut("the cut side contains every node".into()));
        }
        list.sort_unstable();
        let mut crossing = 0;
        let mut volume = 0;
        for &v in &list {
            volume += g.degree(v) as u64;
            crossing += g.neighbors(v).iter().filter(|&&u| !inside[u]).count() as u64;
        }
        Ok(Cut {
            members: list,
            crossing,
            volume,
            node_count: n,
            total_volume: g.total_volume(),
        })
    }

    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    /// `|E(S, S̄)|`.
    pub fn crossing(&self) -> u64 {
        self.crossing
    }

    /// `vol(S)`.
    pub fn volume(&self) -> u64 {
        self.volume
    }

    pub fn complement_volume(&self) -> u64 {
        self.total_volume - self.volume
    }

    pub fn complement(&self, g: &Graph) -> Cut {
        let members: Vec<_> = (0..g.node_count()).filter(|&v| !self.contains(v)).collect();
        Cut::new(g, members).expect("complement of a proper cut is proper")
    }

    /// Recounts the crossing edges by scanning every edge of `g`.
    pub fn recount_crossing(&self, g: &Graph) -> u64 {
        g.edges()
            .filter(|&(u, v)| self.contains(u) != self.contains(v))
            .count() as u64
    }

    pub fn conductance(&self) -> Fraction {
        Ratio::new(
            self.crossing,
            self.volume.min(self.total_volume - self.volume),
        )
    }

    pub fn balance(&self) -> Fraction {
        let size = self.members.len() as u64;
        let n = self.node_count as u64;
        Ratio::new(size.min(n - size), n)
    }
}

/// `|E(S,S̄)| / min(vol(S), 2m − vol(S))`, exact.
pub fn conductance(g: &Graph, cut: &Cut) -> Fraction {
    debug_assert_eq!(cut.node_count, g.node_count());
    cut.conductance()
}

/// Conductance of an arbitrary member list, validating that it is a proper cut.
pub fn conductance_of(g: &Graph, members: &[NodeId]) -> Result<Fraction> {
    Cut::new(g, members.iter().copied()).map(|c| c.conductance())
}

/// `min(|S|, n − |S|) / n`.
pub fn balance(g: &Graph, cut: &Cut) -> Fraction {
    debug_assert_eq!(cut.node_count, g.node_count());
    cut.balance()
}

pub fn to_f64(x: Fraction) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle4() -> Graph {
        Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    #[test]
    fn loads_triangle() {
        let loaded = load_edge_list("0 1\n1 2\n2 0").unwrap();
        let g = &loaded.graph;
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.degrees(), vec![2, 2, 2]);
        assert!(!loaded.had_duplicates());
    }

    #[test]
    fn rejects_self_loop() {
        let err = load_edge_list("0 1\n1 1").unwrap_err();
        assert!(matches!(err, Error::SelfLoop { line: 2, node: 1 }));
    }

    #[test]
    fn rejects_disconnected() {
        let err = load_edge_list("0 1\n2 3").unwrap_err();
        assert!(matches!(err, Error::Disconnected { components: 2 }));
    }

    #[test]
    fn duplicate_edges_are_flagged() {
        let loaded = load_edge_list("0 1\n1 0\n1 2\n0 1\n").unwrap();
        assert_eq!(loaded.graph.edge_count(), 2);
        assert_eq!(loaded.duplicate_edges, 2);
        assert!(loaded.had_duplicates());
    }

    #[test]
    fn compacts_ids_in_first_appearance_order() {
        let loaded = load_edge_list("# header\n10 7\n\n7 42\n").unwrap();
        let g = loaded.graph;
        assert_eq!(g.labels(), &[10, 7, 42]);
        assert!(g.has_edge(0, 1));
        assert!(g.has_edge(1, 2));
        assert_eq!(g.to_edge_list(), "10 7\n7 42\n");
    }

    #[test]
    fn parse_errors_name_the_line() {
        assert!(matches!(
            load_edge_list("0 1\n1 x").unwrap_err(),
            Error::Parse { line: 2, .. }
        ));
        assert!(matches!(
            load_edge_list("0 1 2").unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
        assert!(matches!(load_edge_list("").unwrap_err(), Error::EmptyGraph));
    }

    #[test]
    fn cycle_cut_quantities() {
        let g = cycle4();
        let pair = Cut::new(&g, [0, 1]).unwrap();
        assert_eq!(conductance(&g, &pair), Ratio::new(1, 2));
        assert_eq!(balance(&g, &pair), Ratio::new(1, 2));
        let single = Cut::new(&g, [0]).unwrap();
        assert_eq!(conductance(&g, &single), Ratio::from_integer(1));
        assert_eq!(balance(&g, &single), Ratio::new(1, 4));
    }

    #[test]
    fn improper_cuts_are_errors() {
        let g = cycle4();
        assert!(matches!(Cut::new(&g, []), Err(Error::InvalidCut(_))));
        assert!(matches!(
            Cut::new(&g, [0, 1, 2, 3]),
            Err(Error::InvalidCut(_))
        ));
        assert!(matches!(
            conductance_of(&g, &[9]),
            Err(Error::NodeOutOfRange { node: 9, n: 4 })
        ));
    }

    #[test]
    fn cut_volumes_partition_total() {
        let g = cycle4();
        let cut = Cut::new(&g, [0, 2, 3]).unwrap();
        assert_eq!(cut.volume() + cut.complement_volume(), g.total_volume());
        assert_eq!(cut.recount_crossing(&g), cut.crossing());
        assert_eq!(cut.complement(&g).members(), &[1]);
    }

    #[test]
    fn diameters() {
        assert_eq!(cycle4().diameter(), 2);
        let k4 = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(k4.diameter(), 1);
    }

    #[test]
    fn reverse_ports_round_trip() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (2, 3)]).unwrap();
        for v in 0..4 {
            for (p, &u) in g.neighbors(v).iter().enumerate() {
                assert_eq!(g.neighbors(u)[g.reverse_port(v, p)], v);
            }
        }
    }
}
