//! Immutable CSR graphs with dual orientation.

mod dict;
mod io;

use std::ops::Range;

use rayon::prelude::*;

pub use dict::{TermDictionary, TermTable};
pub use io::{
    dense_node_labels, load_triples, parse_triples, read_dictionary, read_node_labels,
    read_snapshot, read_snapshot_file, write_dictionary, write_snapshot, write_snapshot_file,
    SNAPSHOT_MAGIC, SNAPSHOT_VERSION,
};

use crate::{Error, LabelId, NodeId, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Outgoing,
    Incoming,
}

impl Orientation {
    pub fn flip(self) -> Self {
        match self {
            Orientation::Outgoing => Orientation::Incoming,
            Orientation::Incoming => Orientation::Outgoing,
        }
    }
}

/// Labeled directed graph in compressed sparse row form.
///
/// Each adjacency list holds `(target, label)` pairs sorted ascending without
/// duplicates. For an [`Orientation::Incoming`] graph the "targets" are the
/// sources of the original edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataGraph {
    node_offsets: Vec<usize>,
    edge_targets: Vec<NodeId>,
    edge_labels: Vec<LabelId>,
    node_labels: Option<Vec<LabelId>>,
    orientation: Orientation,
    // distinct targets per node; derived, not serialized
    neighbor_counts: Vec<u32>,
}

/// Builds a CSR graph with `n` nodes from an edge list.
///
/// Duplicate edges are collapsed and every adjacency list ends up sorted by
/// `(target, label)`.
pub fn build_csr(edges: &[(NodeId, NodeId, LabelId)], n: usize) -> Result<DataGraph> {
    if let Some(&(src, dst, _)) = edges
        .iter()
        .find(|&&(s, d, _)| s as usize >= n || d as usize >= n)
    {
        let index = if src as usize >= n { src } else { dst };
        return Err(Error::Bounds {
            index: index as u64,
            node_count: n as u64,
        });
    }
    let mut sorted = edges.to_vec();
    sorted.par_sort_unstable();
    sorted.dedup();

    let mut node_offsets = vec![0usize; n + 1];
    for &(src, _, _) in &sorted {
        node_offsets[src as usize + 1] += 1;
    }
    for i in 0..n {
        node_offsets[i + 1] += node_offsets[i];
    }
    let edge_targets = sorted.iter().map(|&(_, dst, _)| dst).collect();
    let edge_labels = sorted.iter().map(|&(_, _, label)| label).collect();
    Ok(DataGraph::from_parts_unchecked(
        node_offsets,
        edge_targets,
        edge_labels,
        None,
        Orientation::Outgoing,
    ))
}

/// Reverses every edge. Node labels carry over unchanged.
pub fn transpose(g: &DataGraph) -> DataGraph {
    let n = g.node_count();
    let mut counts = vec![0usize; n + 1];
    for &t in &g.edge_targets {
        counts[t as usize + 1] += 1;
    }
    for i in 0..n {
        counts[i + 1] += counts[i];
    }
    let node_offsets = counts.clone();
    let mut cursor = counts;
    let mut edge_targets = vec![0; g.edge_count()];
    let mut edge_labels = vec![0; g.edge_count()];
    // Scanning sources in ascending order keeps each reversed list sorted by
    // source; labels of parallel edges are then ascending as well.
    for src in 0..n {
        for i in g.edge_range(src as NodeId) {
            let dst = g.edge_targets[i] as usize;
            let slot = cursor[dst];
            edge_targets[slot] = src as NodeId;
            edge_labels[slot] = g.edge_labels[i];
            cursor[dst] += 1;
        }
    }
    DataGraph::from_parts_unchecked(
        node_offsets,
        edge_targets,
        edge_labels,
        g.node_labels.clone(),
        g.orientation.flip(),
    )
}

impl DataGraph {
    pub(crate) fn from_parts_unchecked(
        node_offsets: Vec<usize>,
        edge_targets: Vec<NodeId>,
        edge_labels: Vec<LabelId>,
        node_labels: Option<Vec<LabelId>>,
        orientation: Orientation,
    ) -> Self {
        let n = node_offsets.len().saturating_sub(1);
        let neighbor_counts = (0..n)
            .into_par_iter()
            .map(|v| {
                let targets = &edge_targets[node_offsets[v]..node_offsets[v + 1]];
                let mut distinct = 0u32;
                let mut last = None;
                for &t in targets {
                    if last != Some(t) {
                        distinct += 1;
                        last = Some(t);
                    }
                }
                distinct
            })
            .collect();
        DataGraph {
            node_offsets,
            edge_targets,
            edge_labels,
            node_labels,
            orientation,
            neighbor_counts,
        }
    }

    /// Validates raw CSR arrays, e.g. from a snapshot.
    pub fn from_parts(
        node_offsets: Vec<usize>,
        edge_targets: Vec<NodeId>,
        edge_labels: Vec<LabelId>,
        node_labels: Option<Vec<LabelId>>,
        orientation: Orientation,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::Format(msg));
        if node_offsets.is_empty() || node_offsets[0] != 0 {
            return bad("node_offsets must start with 0".into());
        }
        let n = node_offsets.len() - 1;
        if *node_offsets.last().unwrap() != edge_targets.len() {
            return bad("node_offsets must end at edge_count".into());
        }
        if edge_labels.len() != edge_targets.len() {
            return bad("edge_labels and edge_targets differ in length".into());
        }
        if node_offsets.windows(2).any(|w| w[0] > w[1]) {
            return bad("node_offsets must be non-decreasing".into());
        }
        if let Some(&t) = edge_targets.iter().find(|&&t| t as usize >= n) {
            return Err(Error::Bounds {
                index: t as u64,
                node_count: n as u64,
            });
        }
        if let Some(labels) = &node_labels {
            if labels.len() != n {
                return bad("node_labels length differs from node_count".into());
            }
        }
        for v in 0..n {
            let range = node_offsets[v]..node_offsets[v + 1];
            let sorted = range.clone().zip(range.skip(1)).all(|(a, b)| {
                (edge_targets[a], edge_labels[a]) < (edge_targets[b], edge_labels[b])
            });
            if !sorted {
                return bad(format!("adjacency of node {v} is not sorted and unique"));
            }
        }
        Ok(Self::from_parts_unchecked(
            node_offsets,
            edge_targets,
            edge_labels,
            node_labels,
            orientation,
        ))
    }

    /// Attaches one label per node.
    pub fn with_node_labels(mut self, labels: Vec<LabelId>) -> Result<Self> {
        if labels.len() != self.node_count() {
            return Err(Error::Config(format!(
                "{} node labels supplied for {} nodes",
                labels.len(),
                self.node_count()
            )));
        }
        self.node_labels = Some(labels);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.node_offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edge_targets.len()
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn node_offsets(&self) -> &[usize] {
        &self.node_offsets
    }

    pub fn edge_targets(&self) -> &[NodeId] {
        &self.edge_targets
    }

    pub fn edge_labels(&self) -> &[LabelId] {
        &self.edge_labels
    }

    pub fn node_labels(&self) -> Option<&[LabelId]> {
        self.node_labels.as_deref()
    }

    pub fn node_label(&self, v: NodeId) -> Option<LabelId> {
        self.node_labels.as_ref().map(|labels| labels[v as usize])
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.node_offsets[v as usize + 1] - self.node_offsets[v as usize]
    }

    /// Number of distinct adjacent nodes, ignoring parallel edges with
    /// different labels.
    pub fn neighbor_count(&self, v: NodeId) -> u32 {
        self.neighbor_counts[v as usize]
    }

    pub fn neighbor_counts(&self) -> &[u32] {
        &self.neighbor_counts
    }

    pub fn edge_range(&self, v: NodeId) -> Range<usize> {
        self.node_offsets[v as usize]..self.node_offsets[v as usize + 1]
    }

    pub fn targets(&self, v: NodeId) -> &[NodeId] {
        &self.edge_targets[self.edge_range(v)]
    }

    pub fn labels(&self, v: NodeId) -> &[LabelId] {
        &self.edge_labels[self.edge_range(v)]
    }

    /// Iterates `(target, label)` pairs of `v` in sorted order.
    pub fn adjacency(&self, v: NodeId) -> impl Iterator<Item = (NodeId, LabelId)> + '_ {
        self.targets(v)
            .iter()
            .copied()
            .zip(self.labels(v).iter().copied())
    }

    /// Positions (into the edge arrays) of all edges from `v` to `t`.
    pub fn edges_between(&self, v: NodeId, t: NodeId) -> Range<usize> {
        let base = self.node_offsets[v as usize];
        let targets = self.targets(v);
        let lo = targets.partition_point(|&x| x < t);
        let hi = lo + targets[lo..].partition_point(|&x| x == t);
        base + lo..base + hi
    }

    pub fn has_edge(&self, v: NodeId, t: NodeId) -> bool {
        !self.edges_between(v, t).is_empty()
    }

    pub fn has_labeled_edge(&self, v: NodeId, t: NodeId, label: LabelId) -> bool {
        let range = self.edges_between(v, t);
        self.edge_labels[range].binary_search(&label).is_ok()
    }

    /// Iterates every edge as `(node, target, label)`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, LabelId)> + '_ {
        (0..self.node_count() as NodeId)
            .flat_map(move |v| self.adjacency(v).map(move |(t, l)| (v, t, l)))
    }

    /// Node label frequencies indexed by label id.
    pub fn label_frequencies(&self) -> Vec<usize> {
        let mut freq = Vec::new();
        if let Some(labels) = &self.node_labels {
            for &l in labels {
                if l as usize >= freq.len() {
                    freq.resize(l as usize + 1, 0);
                }
                freq[l as usize] += 1;
            }
        }
        freq
    }
}

/// Outgoing graph paired with its transpose.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphPair {
    pub outgoing: DataGraph,
    pub incoming: DataGraph,
}

impl GraphPair {
    /// Pairs an outgoing graph with its transpose.
    pub fn from_outgoing(outgoing: DataGraph) -> Self {
        debug_assert_eq!(outgoing.orientation(), Orientation::Outgoing);
        let incoming = transpose(&outgoing);
        GraphPair { outgoing, incoming }
    }

    pub fn from_edges(
        edges: &[(NodeId, NodeId, LabelId)],
        n: usize,
        node_labels: Option<Vec<LabelId>>,
    ) -> Result<Self> {
        let mut g = build_csr(edges, n)?;
        if let Some(labels) = node_labels {
            g = g.with_node_labels(labels)?;
        }
        Ok(Self::from_outgoing(g))
    }

    /// Attaches node labels to both orientations.
    pub fn with_node_labels(self, labels: Vec<LabelId>) -> Result<Self> {
        let incoming = self.incoming.with_node_labels(labels.clone())?;
        let outgoing = self.outgoing.with_node_labels(labels)?;
        Ok(GraphPair { outgoing, incoming })
    }

    pub fn node_count(&self) -> usize {
        self.outgoing.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.outgoing.edge_count()
    }

    pub fn node_label(&self, v: NodeId) -> Option<LabelId> {
        self.outgoing.node_label(v)
    }

    pub fn orientation(&self, orientation: Orientation) -> &DataGraph {
        match orientation {
            Orientation::Outgoing => &self.outgoing,
            Orientation::Incoming => &self.incoming,
        }
    }
}
