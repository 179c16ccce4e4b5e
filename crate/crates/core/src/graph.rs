//! Immutable bipartite node-and-edge-attributed graph.
//!
//! Partition `U` holds transactions and partition `V` holds wallets in the
//! Elliptic++ instantiation; nothing in this module depends on that reading.
//! Incident-edge indexes are stored CSR-style per partition, sorted by edge
//! index, so every traversal is deterministic.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Dense;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Partition {
    U,
    V,
}

impl Partition {
    pub fn other(self) -> Partition {
        match self {
            Partition::U => Partition::V,
            Partition::V => Partition::U,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Partition::U => "u",
            Partition::V => "v",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Node label. `Unknown` is a distinct state and never treated as non-fraud.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Fraud,
    NonFraud,
    #[default]
    Unknown,
}

impl Label {
    pub fn is_known(self) -> bool {
        self != Label::Unknown
    }

    /// `Some(1.0)` for fraud, `Some(0.0)` for non-fraud.
    pub fn target(self) -> Option<f64> {
        match self {
            Label::Fraud => Some(1.0),
            Label::NonFraud => Some(0.0),
            Label::Unknown => None,
        }
    }
}

/// A node reference across both partitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeRef {
    pub partition: Partition,
    pub index: usize,
}

impl NodeRef {
    pub fn u(index: usize) -> Self {
        Self {
            partition: Partition::U,
            index,
        }
    }

    pub fn v(index: usize) -> Self {
        Self {
            partition: Partition::V,
            index,
        }
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.partition, self.index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct Incidence {
    offsets: Vec<usize>,
    edges: Vec<usize>,
}

impl Incidence {
    fn build(n: usize, endpoints: impl Iterator<Item = usize> + Clone) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for node in endpoints.clone() {
            offsets[node + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut edges = vec![0usize; offsets[n]];
        for (e, node) in endpoints.enumerate() {
            edges[cursor[node]] = e;
            cursor[node] += 1;
        }
        Self { offsets, edges }
    }

    fn of(&self, node: usize) -> &[usize] {
        &self.edges[self.offsets[node]..self.offsets[node + 1]]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BipartiteGraph {
    u_features: Dense,
    v_features: Dense,
    edges: Vec<(usize, usize)>,
    e_features: Dense,
    u_labels: Vec<Label>,
    v_labels: Vec<Label>,
    u_names: Vec<String>,
    v_names: Vec<String>,
    u_incidence: Incidence,
    v_incidence: Incidence,
}

/// Neighbor and incident-edge index sets of one node, in ascending edge order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborView {
    pub node: NodeRef,
    /// Opposite-partition neighbors, one per incident edge (duplicates kept
    /// for parallel edges).
    pub neighbors: Vec<usize>,
    pub edges: Vec<usize>,
}

/// BFS closure around a node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub center: NodeRef,
    pub u_nodes: BTreeSet<usize>,
    pub v_nodes: BTreeSet<usize>,
    /// Nodes in visiting order with their hop distance.
    pub order: Vec<(NodeRef, usize)>,
    /// Active edges with both endpoints inside the node set.
    pub edges: BTreeSet<usize>,
}

impl Neighborhood {
    pub fn contains(&self, node: NodeRef) -> bool {
        match node.partition {
            Partition::U => self.u_nodes.contains(&node.index),
            Partition::V => self.v_nodes.contains(&node.index),
        }
    }

    pub fn node_count(&self) -> usize {
        self.u_nodes.len() + self.v_nodes.len()
    }
}

impl BipartiteGraph {
    /// Validates dimensions and builds incidence indexes. Label vectors must
    /// match the partition sizes.
    pub fn new(
        u_features: Dense,
        v_features: Dense,
        edges: Vec<(usize, usize)>,
        e_features: Dense,
        u_labels: Vec<Label>,
        v_labels: Vec<Label>,
    ) -> Result<Self> {
        let (n_u, n_v) = (u_features.rows(), v_features.rows());
        if e_features.rows() != edges.len() {
            return Err(Error::dims("edge feature rows", edges.len(), e_features.rows()));
        }
        if u_labels.len() != n_u {
            return Err(Error::dims("u labels", n_u, u_labels.len()));
        }
        if v_labels.len() != n_v {
            return Err(Error::dims("v labels", n_v, v_labels.len()));
        }
        for &(u, v) in &edges {
            if u >= n_u {
                return Err(Error::IndexOutOfRange {
                    what: "edge u endpoint",
                    index: u,
                    len: n_u,
                });
            }
            if v >= n_v {
                return Err(Error::IndexOutOfRange {
                    what: "edge v endpoint",
                    index: v,
                    len: n_v,
                });
            }
        }
        let u_incidence = Incidence::build(n_u, edges.iter().map(|e| e.0));
        let v_incidence = Incidence::build(n_v, edges.iter().map(|e| e.1));
        Ok(Self {
            u_names: (0..n_u).map(|i| format!("u{i}")).collect(),
            v_names: (0..n_v).map(|i| format!("v{i}")).collect(),
            u_features,
            v_features,
            edges,
            e_features,
            u_labels,
            v_labels,
            u_incidence,
            v_incidence,
        })
    }

    /// Same as [`BipartiteGraph::new`] with every label `Unknown`.
    pub fn unlabeled(u_features: Dense, v_features: Dense, edges: Vec<(usize, usize)>, e_features: Dense) -> Result<Self> {
        let (n_u, n_v) = (u_features.rows(), v_features.rows());
        Self::new(
            u_features,
            v_features,
            edges,
            e_features,
            vec![Label::Unknown; n_u],
            vec![Label::Unknown; n_v],
        )
    }

    /// Attaches external node identifiers (e.g. CSV ids) for display.
    pub fn with_names(mut self, u_names: Vec<String>, v_names: Vec<String>) -> Result<Self> {
        if u_names.len() != self.n_u() {
            return Err(Error::dims("u names", self.n_u(), u_names.len()));
        }
        if v_names.len() != self.n_v() {
            return Err(Error::dims("v names", self.n_v(), v_names.len()));
        }
        self.u_names = u_names;
        self.v_names = v_names;
        Ok(self)
    }

    /// Copy with replaced labels; structure and features unchanged.
    pub fn with_labels(&self, u_labels: Vec<Label>, v_labels: Vec<Label>) -> Result<Self> {
        if u_labels.len() != self.n_u() || v_labels.len() != self.n_v() {
            return Err(Error::dims(
                "with_labels",
                format!("{}/{}", self.n_u(), self.n_v()),
                format!("{}/{}", u_labels.len(), v_labels.len()),
            ));
        }
        let mut g = self.clone();
        g.u_labels = u_labels;
        g.v_labels = v_labels;
        Ok(g)
    }

    /// Copy with replaced feature matrices of identical shape.
    pub fn with_features(&self, u: Dense, v: Dense, e: Dense) -> Result<Self> {
        if u.rows() != self.n_u() || v.rows() != self.n_v() || e.rows() != self.n_e() {
            return Err(Error::dims(
                "with_features",
                format!("{}/{}/{}", self.n_u(), self.n_v(), self.n_e()),
                format!("{}/{}/{}", u.rows(), v.rows(), e.rows()),
            ));
        }
        let mut g = self.clone();
        g.u_features = u;
        g.v_features = v;
        g.e_features = e;
        Ok(g)
    }

    pub fn n_u(&self) -> usize {
        self.u_features.rows()
    }

    pub fn n_v(&self) -> usize {
        self.v_features.rows()
    }

    pub fn n_e(&self) -> usize {
        self.edges.len()
    }

    pub fn len(&self, partition: Partition) -> usize {
        match partition {
            Partition::U => self.n_u(),
            Partition::V => self.n_v(),
        }
    }

    pub fn u_features(&self) -> &Dense {
        &self.u_features
    }

    pub fn v_features(&self) -> &Dense {
        &self.v_features
    }

    pub fn e_features(&self) -> &Dense {
        &self.e_features
    }

    pub fn features(&self, partition: Partition) -> &Dense {
        match partition {
            Partition::U => &self.u_features,
            Partition::V => &self.v_features,
        }
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Result<(usize, usize)> {
        self.edges.get(e).copied().ok_or(Error::IndexOutOfRange {
            what: "edge",
            index: e,
            len: self.n_e(),
        })
    }

    pub fn labels(&self, partition: Partition) -> &[Label] {
        match partition {
            Partition::U => &self.u_labels,
            Partition::V => &self.v_labels,
        }
    }

    pub fn names(&self, partition: Partition) -> &[String] {
        match partition {
            Partition::U => &self.u_names,
            Partition::V => &self.v_names,
        }
    }

    /// Endpoint of edge `e` in the given partition.
    #[inline]
    pub fn endpoint(&self, e: usize, partition: Partition) -> usize {
        match partition {
            Partition::U => self.edges[e].0,
            Partition::V => self.edges[e].1,
        }
    }

    pub(crate) fn check_node(&self, node: NodeRef) -> Result<()> {
        let len = self.len(node.partition);
        if node.index >= len {
            return Err(Error::IndexOutOfRange {
                what: "node",
                index: node.index,
                len,
            });
        }
        Ok(())
    }

    /// All incident edges of a node, ignoring any mask.
    pub fn incident(&self, node: NodeRef) -> &[usize] {
        match node.partition {
            Partition::U => self.u_incidence.of(node.index),
            Partition::V => self.v_incidence.of(node.index),
        }
    }

    pub fn degree(&self, node: NodeRef) -> usize {
        self.incident(node).len()
    }

    /// Unmasked view over the whole graph.
    pub fn view(&self) -> GraphView<'_> {
        GraphView {
            graph: self,
            removed: None,
        }
    }

    pub fn neighbors(&self, partition: Partition, node: usize) -> Result<NeighborView> {
        self.view().neighbors(partition, node)
    }

    pub fn n_hop_neighborhood(&self, partition: Partition, node: usize, hops: usize) -> Result<Neighborhood> {
        self.view().n_hop_neighborhood(partition, node, hops)
    }

    /// View with edge `e` excluded from all aggregations.
    pub fn remove_edge_view(&self, e: usize) -> Result<GraphView<'_>> {
        self.view().remove_edge(e)
    }

    /// Copy of the subgraph induced by the given node sets, keeping the
    /// view's active edges whose endpoints are both inside. Relative order of
    /// nodes and edges is preserved. Returns the graph plus the original
    /// index of every kept U node, V node and edge.
    pub fn induced(
        view: &GraphView<'_>,
        u_nodes: &BTreeSet<usize>,
        v_nodes: &BTreeSet<usize>,
    ) -> Result<(BipartiteGraph, InducedMap)> {
        let g = view.graph;
        let u_list: Vec<usize> = u_nodes.iter().copied().collect();
        let v_list: Vec<usize> = v_nodes.iter().copied().collect();
        let mut u_pos = vec![usize::MAX; g.n_u()];
        let mut v_pos = vec![usize::MAX; g.n_v()];
        for (i, &u) in u_list.iter().enumerate() {
            g.check_node(NodeRef::u(u))?;
            u_pos[u] = i;
        }
        for (i, &v) in v_list.iter().enumerate() {
            g.check_node(NodeRef::v(v))?;
            v_pos[v] = i;
        }
        let mut edge_list = Vec::new();
        let mut edges = Vec::new();
        for (e, &(u, v)) in g.edges.iter().enumerate() {
            if view.is_active(e) && u_pos[u] != usize::MAX && v_pos[v] != usize::MAX {
                edge_list.push(e);
                edges.push((u_pos[u], v_pos[v]));
            }
        }
        let sub = BipartiteGraph::new(
            g.u_features.select_rows(&u_list)?,
            g.v_features.select_rows(&v_list)?,
            edges,
            g.e_features.select_rows(&edge_list)?,
            u_list.iter().map(|&u| g.u_labels[u]).collect(),
            v_list.iter().map(|&v| g.v_labels[v]).collect(),
        )?
        .with_names(
            u_list.iter().map(|&u| g.u_names[u].clone()).collect(),
            v_list.iter().map(|&v| g.v_names[v].clone()).collect(),
        )?;
        Ok((
            sub,
            InducedMap {
                u: u_list,
                v: v_list,
                edges: edge_list,
            },
        ))
    }
}

/// Original indices of the rows of an induced subgraph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InducedMap {
    pub u: Vec<usize>,
    pub v: Vec<usize>,
    pub edges: Vec<usize>,
}

impl InducedMap {
    /// Local index of an original edge, if kept.
    pub fn local_edge(&self, original: usize) -> Option<usize> {
        self.edges.binary_search(&original).ok()
    }

    pub fn local_node(&self, node: NodeRef) -> Option<usize> {
        let list = match node.partition {
            Partition::U => &self.u,
            Partition::V => &self.v,
        };
        list.binary_search(&node.index).ok()
    }
}

/// A graph with an optional set of masked-out edges. Masked edges keep their
/// feature rows but take part in no aggregation. The base graph is never
/// modified.
#[derive(Clone, Debug)]
pub struct GraphView<'g> {
    graph: &'g BipartiteGraph,
    removed: Option<Vec<bool>>,
}

impl<'g> GraphView<'g> {
    pub fn graph(&self) -> &'g BipartiteGraph {
        self.graph
    }

    #[inline]
    pub fn is_active(&self, e: usize) -> bool {
        self.removed.as_ref().is_none_or(|m| !m[e])
    }

    pub fn removed_edges(&self) -> Vec<usize> {
        match &self.removed {
            None => Vec::new(),
            Some(m) => m.iter().enumerate().filter(|(_, &r)| r).map(|(e, _)| e).collect(),
        }
    }

    pub fn active_edge_count(&self) -> usize {
        self.graph.n_e() - self.removed.as_ref().map_or(0, |m| m.iter().filter(|&&r| r).count())
    }

    /// New view with `e` additionally removed.
    pub fn remove_edge(&self, e: usize) -> Result<GraphView<'g>> {
        self.remove_edges(std::iter::once(e))
    }

    pub fn remove_edges(&self, edges: impl IntoIterator<Item = usize>) -> Result<GraphView<'g>> {
        let n = self.graph.n_e();
        let mut mask = self.removed.clone().unwrap_or_else(|| vec![false; n]);
        for e in edges {
            if e >= n {
                return Err(Error::IndexOutOfRange {
                    what: "edge",
                    index: e,
                    len: n,
                });
            }
            mask[e] = true;
        }
        Ok(GraphView {
            graph: self.graph,
            removed: Some(mask),
        })
    }

    /// Active incident edges of a node in ascending edge order.
    pub fn incident(&self, node: NodeRef) -> impl Iterator<Item = usize> + '_ {
        self.graph.incident(node).iter().copied().filter(move |&e| self.is_active(e))
    }

    pub fn neighbors(&self, partition: Partition, node: usize) -> Result<NeighborView> {
        let node = NodeRef { partition, index: node };
        self.graph.check_node(node)?;
        let edges: Vec<usize> = self.incident(node).collect();
        let neighbors = edges
            .iter()
            .map(|&e| self.graph.endpoint(e, partition.other()))
            .collect();
        Ok(NeighborView { node, neighbors, edges })
    }

    pub fn n_hop_neighborhood(&self, partition: Partition, node: usize, hops: usize) -> Result<Neighborhood> {
        let center = NodeRef { partition, index: node };
        self.graph.check_node(center)?;
        let mut u_seen = vec![false; self.graph.n_u()];
        let mut v_seen = vec![false; self.graph.n_v()];
        let mark = |n: NodeRef, u_seen: &mut Vec<bool>, v_seen: &mut Vec<bool>| -> bool {
            let slot = match n.partition {
                Partition::U => &mut u_seen[n.index],
                Partition::V => &mut v_seen[n.index],
            };
            !std::mem::replace(slot, true)
        };
        mark(center, &mut u_seen, &mut v_seen);
        let mut order = vec![(center, 0)];
        let mut frontier = vec![center];
        for hop in 1..=hops {
            let mut next = Vec::new();
            for &n in &frontier {
                for e in self.incident(n) {
                    let other = NodeRef {
                        partition: n.partition.other(),
                        index: self.graph.endpoint(e, n.partition.other()),
                    };
                    if mark(other, &mut u_seen, &mut v_seen) {
                        order.push((other, hop));
                        next.push(other);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        let u_nodes: BTreeSet<usize> = order
            .iter()
            .filter(|(n, _)| n.partition == Partition::U)
            .map(|(n, _)| n.index)
            .collect();
        let v_nodes: BTreeSet<usize> = order
            .iter()
            .filter(|(n, _)| n.partition == Partition::V)
            .map(|(n, _)| n.index)
            .collect();
        let edges = u_nodes
            .iter()
            .flat_map(|&u| self.incident(NodeRef::u(u)))
            .filter(|&e| v_seen[self.graph.edges[e].1])
            .collect();
        Ok(Neighborhood {
            center,
            u_nodes,
            v_nodes,
            order,
            edges,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn plain(n_u: usize, n_v: usize, edges: Vec<(usize, usize)>) -> Result<BipartiteGraph> {
        let n_e = edges.len();
        BipartiteGraph::unlabeled(
            Dense::filled(n_u, 2, 1.0),
            Dense::filled(n_v, 3, 2.0),
            edges,
            Dense::filled(n_e, 1, 3.0),
        )
    }

    fn matching() -> BipartiteGraph {
        plain(2, 2, vec![(0, 0), (1, 1)]).unwrap()
    }

    #[test]
    fn matching_has_unit_degrees() {
        let g = matching();
        for p in [Partition::U, Partition::V] {
            for i in 0..2 {
                assert_eq!(g.degree(NodeRef { partition: p, index: i }), 1);
            }
        }
        let n = g.neighbors(Partition::U, 0).unwrap();
        assert_eq!(n.neighbors, vec![0]);
        assert_eq!(n.edges, vec![0]);
    }

    #[test]
    fn edgeless_graph_is_valid() {
        let g = plain(1, 1, vec![]).unwrap();
        assert!(g.neighbors(Partition::U, 0).unwrap().edges.is_empty());
        assert!(g.neighbors(Partition::V, 0).unwrap().neighbors.is_empty());
    }

    #[test]
    fn dangling_endpoint_is_rejected() {
        let r = plain(1, 2, vec![(0, 5)]);
        assert!(matches!(r, Err(Error::IndexOutOfRange { index: 5, len: 2, .. })));
    }

    #[test]
    fn feature_rows_must_match_edges() {
        let r = BipartiteGraph::unlabeled(Dense::zeros(1, 1), Dense::zeros(1, 1), vec![(0, 0)], Dense::zeros(2, 1));
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn star_neighbors() {
        let g = plain(1, 3, vec![(0, 0), (0, 1), (0, 2)]).unwrap();
        let n = g.neighbors(Partition::U, 0).unwrap();
        assert_eq!(n.neighbors.len(), 3);
        assert_eq!(n.edges.len(), 3);
        assert!(matches!(g.neighbors(Partition::V, 3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn isolated_node_has_empty_sets() {
        let g = plain(2, 1, vec![(0, 0)]).unwrap();
        let n = g.neighbors(Partition::U, 1).unwrap();
        assert!(n.neighbors.is_empty() && n.edges.is_empty());
    }

    #[test]
    fn hop_zero_is_self() {
        let g = matching();
        let h = g.n_hop_neighborhood(Partition::U, 0, 0).unwrap();
        assert_eq!(h.node_count(), 1);
        assert!(h.edges.is_empty());
    }

    #[test]
    fn path_two_hops() {
        // U0 - V0 - U1
        let g = plain(2, 1, vec![(0, 0), (1, 0)]).unwrap();
        let h = g.n_hop_neighborhood(Partition::U, 0, 2).unwrap();
        assert_eq!(h.u_nodes, BTreeSet::from([0, 1]));
        assert_eq!(h.v_nodes, BTreeSet::from([0]));
        assert_eq!(h.edges, BTreeSet::from([0, 1]));
        assert_eq!(h.order, vec![(NodeRef::u(0), 0), (NodeRef::v(0), 1), (NodeRef::u(1), 2)]);
        let one = g.n_hop_neighborhood(Partition::U, 0, 1).unwrap();
        assert_eq!(one.edges, BTreeSet::from([0]));
    }

    #[test]
    fn large_hops_saturate_component() {
        let g = plain(3, 3, vec![(0, 0), (1, 0), (1, 1), (2, 2)]).unwrap();
        let h = g.n_hop_neighborhood(Partition::V, 1, 50).unwrap();
        assert_eq!(h.u_nodes, BTreeSet::from([0, 1]));
        assert_eq!(h.v_nodes, BTreeSet::from([0, 1]));
        assert_eq!(h.edges, BTreeSet::from([0, 1, 2]));
    }

    #[test]
    fn removal_isolates_matching_nodes() {
        let g = matching();
        let view = g.remove_edge_view(0).unwrap();
        assert!(view.neighbors(Partition::U, 0).unwrap().edges.is_empty());
        assert!(view.neighbors(Partition::V, 0).unwrap().edges.is_empty());
        assert_eq!(view.neighbors(Partition::U, 1).unwrap().edges, vec![1]);
        // base graph untouched
        assert_eq!(g.neighbors(Partition::U, 0).unwrap().edges, vec![0]);
        assert!(matches!(g.remove_edge_view(2), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn removing_every_edge_keeps_features() {
        let g = plain(2, 3, vec![(0, 0), (1, 1), (1, 2), (0, 2)]).unwrap();
        let mut view = g.view();
        for e in 0..g.n_e() {
            view = view.remove_edge(e).unwrap();
        }
        assert_eq!(view.active_edge_count(), 0);
        assert_eq!(view.graph().u_features(), g.u_features());
        assert_eq!(view.graph().e_features(), g.e_features());
    }

    #[test]
    fn parallel_edges_are_kept() {
        let g = plain(1, 1, vec![(0, 0), (0, 0)]).unwrap();
        assert_eq!(g.neighbors(Partition::U, 0).unwrap().neighbors, vec![0, 0]);
    }

    #[test]
    fn induced_preserves_order() {
        let g = plain(3, 3, vec![(2, 2), (0, 0), (1, 0), (2, 0)]).unwrap();
        let (sub, map) =
            BipartiteGraph::induced(&g.view(), &BTreeSet::from([0, 2]), &BTreeSet::from([0, 2])).unwrap();
        assert_eq!(map.edges, vec![0, 1, 3]);
        assert_eq!(sub.edges(), &[(1, 1), (0, 0), (1, 0)]);
        assert_eq!(map.local_edge(3), Some(2));
        assert_eq!(map.local_edge(2), None);
    }

    fn arb_graph() -> impl Strategy<Value = BipartiteGraph> {
        (1usize..7, 1usize..7).prop_flat_map(|(n_u, n_v)| {
            prop::collection::vec((0..n_u, 0..n_v), 0..20).prop_map(move |edges| plain(n_u, n_v, edges).unwrap())
        })
    }

    proptest! {
        #[test]
        fn incidence_round_trips(g in arb_graph()) {
            for p in [Partition::U, Partition::V] {
                for i in 0..g.len(p) {
                    let n = g.neighbors(p, i).unwrap();
                    prop_assert_eq!(n.neighbors.len(), n.edges.len());
                    prop_assert!(n.edges.windows(2).all(|w| w[0] < w[1]));
                    for &e in &n.edges {
                        prop_assert_eq!(g.endpoint(e, p), i);
                    }
                }
            }
            let total: usize = (0..g.n_u()).map(|i| g.degree(NodeRef::u(i))).sum();
            prop_assert_eq!(total, g.n_e());
            let rebuilt = BipartiteGraph::unlabeled(
                g.u_features().clone(), g.v_features().clone(), g.edges().to_vec(), g.e_features().clone()).unwrap();
            prop_assert_eq!(rebuilt, g);
        }

        #[test]
        fn neighborhoods_grow_monotonically(g in arb_graph(), hops in 0usize..5) {
            let a = g.n_hop_neighborhood(Partition::U, 0, hops).unwrap();
            let b = g.n_hop_neighborhood(Partition::U, 0, hops + 1).unwrap();
            prop_assert!(a.u_nodes.is_subset(&b.u_nodes));
            prop_assert!(a.v_nodes.is_subset(&b.v_nodes));
            prop_assert!(a.edges.is_subset(&b.edges));
        }

        #[test]
        fn removal_only_touches_endpoints(g in arb_graph(), pick in 0usize..20) {
            prop_assume!(g.n_e() > 0);
            let e = pick % g.n_e();
            let (eu, ev) = g.edge(e).unwrap();
            let view = g.remove_edge_view(e).unwrap();
            for p in [Partition::U, Partition::V] {
                for i in 0..g.len(p) {
                    let before = g.neighbors(p, i).unwrap();
                    let after = view.neighbors(p, i).unwrap();
                    let touched = (p == Partition::U && i == eu) || (p == Partition::V && i == ev);
                    if touched {
                        prop_assert_eq!(after.edges.len() + 1, before.edges.len());
                        prop_assert!(!after.edges.contains(&e));
                    } else {
                        prop_assert_eq!(after, before);
                    }
                }
            }
        }
    }
}
