//! Multi-level compression of similar nodes into a weighted graph.
//!
//! Each level pairs up nodes whose labeled adjacency mostly coincides and
//! merges each pair into one node. Node and edge weights bound the degree
//! any original member can have, so the degree filter stays sound on the
//! compressed graph. Matches found there are expanded back to original nodes
//! and verified edge by edge.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::graph::{DataGraph, GraphPair};
use crate::matcher::{
    micros, run_pipeline, with_threads, MatchConfig, MatchOutcome, MatchTable, SearchTarget,
};
use crate::query::{Binding, EdgeConstraint, QueryGraph, QueryNode};
use crate::{Error, LabelId, NodeId, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CompressionConfig {
    /// Similarity threshold per level; the last one repeats.
    pub deltas: Vec<f64>,
    pub max_levels: usize,
    /// Stop once nodes plus edges fall to this size.
    pub budget: Option<usize>,
    /// Compare incoming edges as well as outgoing ones.
    pub use_incoming: bool,
}

impl Default for CompressionConfig {
    fn default() -> Self {
        CompressionConfig {
            deltas: vec![1.0],
            max_levels: 1,
            budget: None,
            use_incoming: false,
        }
    }
}

impl CompressionConfig {
    pub fn levels(deltas: &[f64]) -> Self {
        CompressionConfig {
            deltas: deltas.to_vec(),
            max_levels: deltas.len(),
            ..Self::default()
        }
    }

    fn delta(&self, level: usize) -> f64 {
        self.deltas
            .get(level)
            .or(self.deltas.last())
            .copied()
            .unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
            return Err(Error::Config(format!("delta {d} is outside (0, 1]")));
        }
        if self.deltas.is_empty() && self.max_levels > 0 {
            return Err(Error::Config("at least one delta is required".into()));
        }
        Ok(())
    }
}

/// Mapping lists of the compressed nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MappingIndex {
    /// Original nodes of each compressed node, ascending.
    pub groups: Vec<Vec<NodeId>>,
    /// Compressed node of each original node.
    pub reverse: Vec<NodeId>,
}

impl MappingIndex {
    pub fn identity(n: usize) -> Self {
        MappingIndex {
            groups: (0..n as NodeId).map(|v| vec![v]).collect(),
            reverse: (0..n as NodeId).collect(),
        }
    }

    pub fn from_groups(groups: Vec<Vec<NodeId>>) -> Result<Self> {
        let n: usize = groups.iter().map(Vec::len).sum();
        let mut reverse = vec![NodeId::MAX; n];
        for (i, group) in groups.iter().enumerate() {
            for &v in group {
                let slot = reverse
                    .get_mut(v as usize)
                    .ok_or_else(|| Error::Format(format!("original node {v} out of range")))?;
                if *slot != NodeId::MAX {
                    return Err(Error::Format(format!("original node {v} mapped twice")));
                }
                *slot = i as NodeId;
            }
        }
        Ok(MappingIndex { groups, reverse })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn group(&self, u: NodeId) -> &[NodeId] {
        &self.groups[u as usize]
    }
}

/// Writes one `(u32 length, ids...)` record per compressed node, little-endian.
pub fn write_mapping<W: Write>(out: &mut W, m: &MappingIndex) -> std::io::Result<()> {
    for group in &m.groups {
        out.write_all(&(group.len() as u32).to_le_bytes())?;
        for &v in group {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_mapping<R: Read>(input: &mut R) -> Result<MappingIndex> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<mapping>", e))?;
    let mut words = bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()));
    if bytes.len() % 4 != 0 {
        return Err(Error::Format(
            "mapping file length is not a multiple of 4".into(),
        ));
    }
    let mut groups = Vec::new();
    while let Some(len) = words.next() {
        let group: Vec<NodeId> = words.by_ref().take(len as usize).collect();
        if group.len() != len as usize {
            return Err(Error::Format("truncated mapping record".into()));
        }
        groups.push(group);
    }
    MappingIndex::from_groups(groups)
}

pub fn write_mapping_file(path: &Path, m: &MappingIndex) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_mapping(&mut out, m)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_mapping_file(path: &Path) -> Result<MappingIndex> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_mapping(&mut BufReader::new(file))
}

/// Sorted `(from, to, weight)` triples, one per pair of distinct adjacent
/// nodes; labels are not distinguished.
pub type EdgeWeights = Vec<(NodeId, NodeId, u32)>;

/// A compressed graph at some level, with weights per direction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedGraph {
    pub level: usize,
    pub graph: GraphPair,
    /// Largest number of group members one member points to.
    pub node_weights: Vec<u32>,
    /// Largest number of group members pointing to one member.
    pub in_node_weights: Vec<u32>,
    pub edge_weights: EdgeWeights,
    pub in_edge_weights: EdgeWeights,
    /// `w(v) + sum of w(v, z)` over outgoing pairs.
    pub out_capacity: Vec<u32>,
    pub in_capacity: Vec<u32>,
}

fn level_zero_weights(g: &DataGraph) -> (Vec<u32>, EdgeWeights) {
    let n = g.node_count();
    let node: Vec<u32> = (0..n as NodeId).map(|v| g.has_edge(v, v) as u32).collect();
    let mut edges: EdgeWeights = Vec::with_capacity(g.edge_count());
    for v in 0..n as NodeId {
        let mut last = None;
        for &t in g.targets(v) {
            if t != v && last != Some(t) {
                edges.push((v, t, 1));
            }
            last = Some(t);
        }
    }
    (node, edges)
}

fn capacities(node: &[u32], edges: &EdgeWeights) -> Vec<u32> {
    let mut cap = node.to_vec();
    for &(u, _, w) in edges {
        cap[u as usize] = cap[u as usize].saturating_add(w);
    }
    cap
}

impl WeightedGraph {
    /// Level 0: every node stands for itself and every edge weighs 1.
    pub fn from_graph(g: &GraphPair) -> Self {
        let (node_weights, edge_weights) = level_zero_weights(&g.outgoing);
        let (in_node_weights, in_edge_weights) = level_zero_weights(&g.incoming);
        let out_capacity = capacities(&node_weights, &edge_weights);
        let in_capacity = capacities(&in_node_weights, &in_edge_weights);
        WeightedGraph {
            level: 0,
            graph: g.clone(),
            node_weights,
            in_node_weights,
            edge_weights,
            in_edge_weights,
            out_capacity,
            in_capacity,
        }
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// `w(u, v)` in the outgoing direction, 0 when not adjacent.
    pub fn edge_weight(&self, u: NodeId, v: NodeId) -> u32 {
        lookup_weight(&self.edge_weights, u, v)
    }

    pub fn in_edge_weight(&self, u: NodeId, v: NodeId) -> u32 {
        lookup_weight(&self.in_edge_weights, u, v)
    }

    /// `w(v) + sum over z in adj(v) of w(v, z)`, outgoing.
    pub fn weight(&self, v: NodeId) -> u32 {
        self.out_capacity[v as usize]
    }
}

fn lookup_weight(weights: &EdgeWeights, u: NodeId, v: NodeId) -> u32 {
    weights
        .binary_search_by(|&(a, b, _)| (a, b).cmp(&(u, v)))
        .map_or(0, |i| weights[i].2)
}

/// `(label, endpoint)` pairs with edges from both `a` and `b`.
pub fn common_edges(g: &DataGraph, a: NodeId, b: NodeId) -> Vec<(LabelId, NodeId)> {
    let mut out = Vec::new();
    let (mut x, mut y) = (g.adjacency(a).peekable(), g.adjacency(b).peekable());
    while let (Some(&p), Some(&q)) = (x.peek(), y.peek()) {
        match p.cmp(&q) {
            std::cmp::Ordering::Less => {
                x.next();
            }
            std::cmp::Ordering::Greater => {
                y.next();
            }
            std::cmp::Ordering::Equal => {
                out.push((p.1, p.0));
                x.next();
                y.next();
            }
        }
    }
    out
}

/// Adjacency keys `(direction, endpoint, label)` compared for similarity.
fn keys(g: &GraphPair, v: NodeId, use_incoming: bool) -> Vec<(u8, NodeId, LabelId)> {
    let mut k: Vec<_> = g.outgoing.adjacency(v).map(|(t, l)| (0u8, t, l)).collect();
    if use_incoming {
        k.extend(g.incoming.adjacency(v).map(|(s, l)| (1u8, s, l)));
    }
    k
}

fn ratio(common: usize, a: usize, b: usize) -> f64 {
    let max = a.max(b);
    if max == 0 {
        1.0
    } else {
        common as f64 / max as f64
    }
}

fn at_least(score: f64, delta: f64) -> bool {
    score >= delta - 1e-12
}

/// `|common(a, b)| / max(|adj(a)|, |adj(b)|)`; 1 for two isolated nodes.
pub fn similarity(g: &GraphPair, a: NodeId, b: NodeId, use_incoming: bool) -> f64 {
    let mut common = common_edges(&g.outgoing, a, b).len();
    let (mut la, mut lb) = (g.outgoing.degree(a), g.outgoing.degree(b));
    if use_incoming {
        common += common_edges(&g.incoming, a, b).len();
        la += g.incoming.degree(a);
        lb += g.incoming.degree(b);
    }
    ratio(common, la, lb)
}

/// Whether `a` and `b` may merge at threshold `delta`.
pub fn mergeable(g: &GraphPair, a: NodeId, b: NodeId, delta: f64, use_incoming: bool) -> bool {
    a != b
        && g.node_label(a) == g.node_label(b)
        && at_least(similarity(g, a, b, use_incoming), delta)
}

/// Mergeable partners of `u` with a larger id, ascending.
fn partners(g: &GraphPair, u: NodeId, delta: f64, use_incoming: bool) -> Vec<NodeId> {
    let ku = keys(g, u, use_incoming);
    let mut counts: HashMap<NodeId, usize> = HashMap::new();
    for &(dir, t, l) in &ku {
        let back = if dir == 0 { &g.incoming } else { &g.outgoing };
        for (w, l2) in back.adjacency(t) {
            if w > u && l2 == l {
                *counts.entry(w).or_default() += 1;
            }
        }
    }
    let mut out: Vec<NodeId> = counts
        .into_iter()
        .filter(|&(w, c)| {
            let lw = g.outgoing.degree(w)
                + if use_incoming {
                    g.incoming.degree(w)
                } else {
                    0
                };
            g.node_label(w) == g.node_label(u) && at_least(ratio(c, ku.len(), lw), delta)
        })
        .map(|(w, _)| w)
        .collect();
    out.sort_unstable();
    out
}

/// Greedy pairing: nodes in ascending order take their smallest free
/// mergeable partner.
fn pair_up(g: &GraphPair, delta: f64, use_incoming: bool) -> Vec<(NodeId, NodeId)> {
    let n = g.node_count();
    let lists: Vec<Vec<NodeId>> = (0..n as NodeId)
        .into_par_iter()
        .map(|u| {
            let isolated =
                g.outgoing.degree(u) == 0 && (!use_incoming || g.incoming.degree(u) == 0);
            if isolated {
                Vec::new()
            } else {
                partners(g, u, delta, use_incoming)
            }
        })
        .collect();
    let mut taken = vec![false; n];
    let mut pairs = Vec::new();
    // isolated nodes only match each other; pairing them in order per label
    // is what the greedy scan would do
    let mut waiting: HashMap<Option<LabelId>, NodeId> = HashMap::new();
    for u in 0..n as NodeId {
        if taken[u as usize] {
            continue;
        }
        let isolated = g.outgoing.degree(u) == 0 && (!use_incoming || g.incoming.degree(u) == 0);
        if isolated {
            let label = g.node_label(u);
            match waiting.remove(&label) {
                Some(w) => {
                    taken[w as usize] = true;
                    taken[u as usize] = true;
                    pairs.push((w, u));
                }
                None => {
                    waiting.insert(label, u);
                }
            }
            continue;
        }
        if let Some(&w) = lists[u as usize].iter().find(|&&w| !taken[w as usize]) {
            taken[u as usize] = true;
            taken[w as usize] = true;
            pairs.push((u, w));
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Node weight per group: the largest number of distinct group members any
/// member is adjacent to, over the original graph.
fn group_node_weights(original: &DataGraph, reverse: &[NodeId], groups: usize) -> Vec<u32> {
    let per_node: Vec<(NodeId, u32)> = (0..original.node_count() as NodeId)
        .into_par_iter()
        .map(|x| {
            let gx = reverse[x as usize];
            let mut count = 0;
            let mut last = None;
            for &t in original.targets(x) {
                if last != Some(t) && reverse[t as usize] == gx {
                    count += 1;
                }
                last = Some(t);
            }
            (gx, count)
        })
        .collect();
    let mut w = vec![0u32; groups];
    for (g, c) in per_node {
        w[g as usize] = w[g as usize].max(c);
    }
    w
}

/// `w(U, Z) = sum over parts z of Z of max over parts u of U of w(u, z)`.
fn merge_edge_weights(old: &EdgeWeights, new_of: &[NodeId]) -> EdgeWeights {
    let mut rows: Vec<((NodeId, NodeId, NodeId), u32)> = old
        .par_iter()
        .filter_map(|&(u, z, w)| {
            let (nu, nz) = (new_of[u as usize], new_of[z as usize]);
            (nu != nz).then_some(((nu, nz, z), w))
        })
        .collect();
    rows.par_sort_unstable();
    let mut out: EdgeWeights = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let key = rows[i].0;
        let mut max = 0;
        while i < rows.len() && rows[i].0 == key {
            max = max.max(rows[i].1);
            i += 1;
        }
        match out.last_mut() {
            Some(last) if (last.0, last.1) == (key.0, key.1) => last.2 = last.2.saturating_add(max),
            _ => out.push((key.0, key.1, max)),
        }
    }
    out
}

/// One compression level. Returns `None` when no pair qualifies.
///
/// `original` is the uncompressed graph, used for node weights.
pub fn merge_level(
    wg: &WeightedGraph,
    mapping: &MappingIndex,
    original: &GraphPair,
    delta: f64,
    use_incoming: bool,
) -> Option<(WeightedGraph, MappingIndex)> {
    let g = &wg.graph;
    let pairs = pair_up(g, delta, use_incoming);
    if pairs.is_empty() {
        return None;
    }
    let n = g.node_count();
    let mut partner: Vec<Option<NodeId>> = vec![None; n];
    for &(a, b) in &pairs {
        partner[a as usize] = Some(b);
        partner[b as usize] = Some(a);
    }
    // new ids follow the smaller member of each group
    let mut new_of = vec![NodeId::MAX; n];
    let mut groups: Vec<Vec<NodeId>> = Vec::with_capacity(n - pairs.len());
    for u in 0..n as NodeId {
        if new_of[u as usize] != NodeId::MAX {
            continue;
        }
        let id = groups.len() as NodeId;
        new_of[u as usize] = id;
        let mut members = mapping.group(u).to_vec();
        if let Some(p) = partner[u as usize] {
            new_of[p as usize] = id;
            members.extend_from_slice(mapping.group(p));
            members.sort_unstable();
        }
        groups.push(members);
    }
    let next_mapping = MappingIndex::from_groups(groups).expect("groups partition the nodes");

    let edges: Vec<(NodeId, NodeId, LabelId)> = g
        .outgoing
        .edges()
        .map(|(s, t, l)| (new_of[s as usize], new_of[t as usize], l))
        .collect();
    let labels = g.outgoing.node_labels().map(|labels| {
        next_mapping
            .groups
            .iter()
            .map(|members| labels[mapping.reverse[members[0] as usize] as usize])
            .collect()
    });
    let graph =
        GraphPair::from_edges(&edges, next_mapping.len(), labels).expect("ids are in range");
    let node_weights = group_node_weights(
        &original.outgoing,
        &next_mapping.reverse,
        next_mapping.len(),
    );
    let in_node_weights = group_node_weights(
        &original.incoming,
        &next_mapping.reverse,
        next_mapping.len(),
    );
    let edge_weights = merge_edge_weights(&wg.edge_weights, &new_of);
    let in_edge_weights = merge_edge_weights(&wg.in_edge_weights, &new_of);
    let out_capacity = capacities(&node_weights, &edge_weights);
    let in_capacity = capacities(&in_node_weights, &in_edge_weights);
    Some((
        WeightedGraph {
            level: wg.level + 1,
            graph,
            node_weights,
            in_node_weights,
            edge_weights,
            in_edge_weights,
            out_capacity,
            in_capacity,
        },
        next_mapping,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelStats {
    pub level: usize,
    pub delta: f64,
    pub merged_pairs: usize,
    pub nodes: usize,
    pub edges: usize,
    /// `(nodes + edges)` of this level over that of the original graph.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompressionStats {
    pub original_nodes: usize,
    pub original_edges: usize,
    pub levels: Vec<LevelStats>,
    /// `None` without a budget; `Some(false)` if the fixpoint or the level
    /// limit came first.
    pub budget_met: Option<bool>,
    pub elapsed_us: u64,
}

#[derive(Clone, Debug)]
pub struct CompressedGraph {
    pub weighted: WeightedGraph,
    pub mapping: MappingIndex,
    pub stats: CompressionStats,
}

impl CompressedGraph {
    /// The compressed graph as a match target with weighted capacities.
    pub fn target(&self) -> SearchTarget<'_> {
        SearchTarget {
            graph: &self.weighted.graph,
            out_capacity: &self.weighted.out_capacity,
            in_capacity: &self.weighted.in_capacity,
            concept_map: Some(&self.mapping.reverse),
        }
    }
}

/// Repeats [`merge_level`] until the budget is met, nothing merges, or the
/// level limit is reached.
pub fn compress(g: &GraphPair, cfg: &CompressionConfig) -> Result<CompressedGraph> {
    cfg.validate()?;
    let start = Instant::now();
    let size0 = g.node_count() + g.edge_count();
    let within = |wg: &WeightedGraph| {
        cfg.budget
            .is_some_and(|b| wg.node_count() + wg.edge_count() <= b)
    };
    let mut wg = WeightedGraph::from_graph(g);
    let mut mapping = MappingIndex::identity(g.node_count());
    let mut levels = Vec::new();
    for level in 0..cfg.max_levels {
        if within(&wg) {
            break;
        }
        let delta = cfg.delta(level);
        let before = wg.node_count();
        let Some((next, next_mapping)) = merge_level(&wg, &mapping, g, delta, cfg.use_incoming)
        else {
            break;
        };
        wg = next;
        mapping = next_mapping;
        let size = wg.node_count() + wg.edge_count();
        levels.push(LevelStats {
            level: level + 1,
            delta,
            merged_pairs: before - wg.node_count(),
            nodes: wg.node_count(),
            edges: wg.edge_count(),
            ratio: if size0 == 0 {
                1.0
            } else {
                size as f64 / size0 as f64
            },
        });
    }
    let budget_met = cfg.budget.map(|_| within(&wg));
    Ok(CompressedGraph {
        weighted: wg,
        mapping,
        stats: CompressionStats {
            original_nodes: g.node_count(),
            original_edges: g.edge_count(),
            levels,
            budget_met,
            elapsed_us: micros(start),
        },
    })
}

/// Label test plus the weighted degree test, per direction.
pub fn weighted_candidate(q: &QueryGraph, u: usize, v: NodeId, cg: &CompressedGraph) -> bool {
    let target = cg.target();
    crate::matcher::node_label_ok(&q.nodes()[u], target, v)
        && q.out_neighbor_count(u) as u32 <= target.out_capacity[v as usize]
        && q.in_neighbor_count(u) as u32 <= target.in_capacity[v as usize]
}

/// Order in which expansion binds query nodes: breadth first from node 0,
/// so each node after the first touches an earlier one.
fn expansion_order(q: &QueryGraph) -> Vec<usize> {
    let mut seen = vec![false; q.node_count()];
    let mut order = Vec::with_capacity(q.node_count());
    for s in 0..q.node_count() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        order.push(s);
        let mut i = order.len() - 1;
        while i < order.len() {
            let u = order[i];
            for v in q.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    order.push(v);
                }
            }
            i += 1;
        }
    }
    order
}

struct Expander<'a> {
    q: &'a QueryGraph,
    g: &'a GraphPair,
    mapping: &'a MappingIndex,
    order: Vec<usize>,
    /// For each position in `order`, edges to nodes bound earlier (or itself).
    back_edges: Vec<Vec<usize>>,
    injective: bool,
    budget: usize,
}

impl Expander<'_> {
    fn edge_ok(&self, e: usize, assign: &[NodeId], labels: &HashMap<&str, u32>) -> bool {
        let edge = &self.q.edges()[e];
        let (s, t) = (assign[edge.from], assign[edge.to]);
        match &edge.constraint {
            EdgeConstraint::Any => self.g.outgoing.has_edge(s, t),
            EdgeConstraint::Label(l) => self.g.outgoing.has_labeled_edge(s, t, *l),
            EdgeConstraint::Variable(name) => {
                self.g
                    .outgoing
                    .has_labeled_edge(s, t, labels[name.as_str()])
            }
        }
    }

    fn run(
        &self,
        depth: usize,
        row: &[u32],
        assign: &mut Vec<NodeId>,
        labels: &HashMap<&str, u32>,
        out: &mut Vec<Vec<NodeId>>,
    ) -> Result<()> {
        if depth == self.order.len() {
            if out.len() >= self.budget {
                return Err(Error::BudgetExceeded {
                    budget: self.budget,
                });
            }
            out.push(assign.clone());
            return Ok(());
        }
        let u = self.order[depth];
        for &x in self.mapping.group(row[u]) {
            let ok = match &self.q.nodes()[u] {
                QueryNode::Concept { id, .. } => *id == x,
                QueryNode::Variable { label: Some(l), .. } => self.g.node_label(x) == Some(*l),
                QueryNode::Variable { label: None, .. } => true,
            };
            if !ok {
                continue;
            }
            if self.injective && self.order[..depth].iter().any(|&w| assign[w] == x) {
                continue;
            }
            assign[u] = x;
            if self.back_edges[depth]
                .iter()
                .all(|&e| self.edge_ok(e, assign, labels))
            {
                self.run(depth + 1, row, assign, labels, out)?;
            }
        }
        assign[u] = NodeId::MAX;
        Ok(())
    }
}

/// Expands rows found on the compressed graph into verified matches on the
/// original graph.
///
/// `compressed` must carry every query node and edge variable (as returned by
/// [`crate::matcher::match_all`]); the result has the same schema.
pub fn expand_matches(
    compressed: &MatchTable,
    mapping: &MappingIndex,
    q: &QueryGraph,
    g: &GraphPair,
    injective: bool,
    row_budget: usize,
) -> Result<MatchTable> {
    let order = expansion_order(q);
    let mut position = vec![0; q.node_count()];
    for (i, &u) in order.iter().enumerate() {
        position[u] = i;
    }
    let back_edges = order
        .iter()
        .enumerate()
        .map(|(i, _)| {
            (0..q.edges().len())
                .filter(|&e| {
                    let edge = &q.edges()[e];
                    position[edge.from].max(position[edge.to]) == i
                })
                .collect()
        })
        .collect();
    let ex = Expander {
        q,
        g,
        mapping,
        order,
        back_edges,
        injective,
        budget: row_budget,
    };
    let node_cols: Vec<usize> = (0..q.node_count())
        .map(|u| compressed.column(&Binding::Node(u)).expect("node column"))
        .collect();
    let vars = q.edge_variables();
    let var_cols: Vec<usize> = vars
        .iter()
        .map(|v| {
            compressed
                .column(&Binding::Edge(v.clone()))
                .expect("edge column")
        })
        .collect();

    let per_row: Vec<Result<Vec<Vec<u32>>>> = compressed
        .rows
        .par_iter()
        .map(|row| {
            let nodes: Vec<u32> = node_cols.iter().map(|&c| row[c]).collect();
            let labels: HashMap<&str, u32> = vars
                .iter()
                .zip(&var_cols)
                .map(|(v, &c)| (v.as_str(), row[c]))
                .collect();
            let mut assign = vec![NodeId::MAX; q.node_count()];
            let mut found = Vec::new();
            ex.run(0, &nodes, &mut assign, &labels, &mut found)?;
            let suffix: Vec<u32> = var_cols.iter().map(|&c| row[c]).collect();
            Ok(found
                .into_iter()
                .map(|mut r| {
                    r.extend_from_slice(&suffix);
                    r
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_row {
        rows.extend(r?);
        if rows.len() > row_budget {
            return Err(Error::BudgetExceeded { budget: row_budget });
        }
    }
    let schema = (0..q.node_count())
        .map(Binding::Node)
        .chain(vars.into_iter().map(Binding::Edge))
        .collect();
    let mut table = MatchTable { schema, rows };
    table.canonicalize();
    Ok(table)
}

/// Matches on the compressed graph, expands to the original graph and
/// projects like [`crate::matcher::match_query`].
pub fn match_compressed(
    q: &QueryGraph,
    original: &GraphPair,
    cg: &CompressedGraph,
    cfg: &MatchConfig,
) -> Result<MatchOutcome> {
    with_threads(cfg.threads, || {
        let exact = !cfg.homomorphism;
        let mut outcome = run_pipeline(q, cg.target(), cfg, exact, false)?;
        let t = Instant::now();
        let expanded = expand_matches(
            &outcome.table,
            &cg.mapping,
            q,
            original,
            exact,
            cfg.row_budget,
        )?;
        outcome.stats.expand_us = micros(t);
        outcome.table = expanded.project(&q.output_bindings());
        outcome.stats.result_rows = outcome.table.len();
        Ok(outcome)
    })
}

/// Original nodes whose group passes [`weighted_candidate`] for `u`.
pub fn expanded_candidates(q: &QueryGraph, u: usize, cg: &CompressedGraph) -> BTreeSet<NodeId> {
    (0..cg.mapping.len() as NodeId)
        .filter(|&v| weighted_candidate(q, u, v, cg))
        .flat_map(|v| cg.mapping.group(v).iter().copied())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::QueryEdge;

    fn pair(edges: &[(NodeId, NodeId, LabelId)], n: usize) -> GraphPair {
        GraphPair::from_edges(edges, n, None).unwrap()
    }

    #[test]
    fn common_edges_and_similarity() {
        // 0 and 1 share (r0, 2) and (r1, 3); 1 also has (r0, 4)
        let g = pair(&[(0, 2, 0), (0, 3, 1), (1, 2, 0), (1, 3, 1), (1, 4, 0)], 5);
        assert_eq!(common_edges(&g.outgoing, 0, 1), vec![(0, 2), (1, 3)]);
        assert!((similarity(&g, 0, 1, false) - 2.0 / 3.0).abs() < 1e-12);
        assert!(common_edges(&g.outgoing, 0, 4).is_empty());
        assert_eq!(similarity(&g, 2, 3, false), 1.0);
    }

    #[test]
    fn similarity_ratios() {
        // 4 vs 4 with 3 common
        let g = pair(
            &[
                (0, 2, 0),
                (0, 3, 0),
                (0, 4, 0),
                (0, 5, 0),
                (1, 2, 0),
                (1, 3, 0),
                (1, 4, 0),
                (1, 6, 0),
            ],
            7,
        );
        assert_eq!(similarity(&g, 0, 1, false), 0.75);
        // 2 vs 5 with 2 common
        let g = pair(
            &[
                (0, 2, 0),
                (0, 3, 0),
                (1, 2, 0),
                (1, 3, 0),
                (1, 4, 0),
                (1, 5, 0),
                (1, 6, 0),
            ],
            7,
        );
        assert_eq!(similarity(&g, 0, 1, false), 0.4);
    }

    #[test]
    fn merged_edge_weight_follows_recurrence() {
        // 0 -> 2, 1 -> 2 and 1 -> 3; merging 2 with 3 and 0 with 1 by hand
        let old: EdgeWeights = vec![(0, 2, 1), (1, 2, 1), (1, 3, 1)];
        let new_of = [0, 0, 1, 1];
        // w(U, Z) = max(w(0,2), w(1,2)) + max(w(0,3), w(1,3)) = 1 + 1
        assert_eq!(merge_edge_weights(&old, &new_of), vec![(0, 1, 2)]);
    }

    #[test]
    fn duplicate_pairs_merge_at_full_similarity() {
        // 0,1 point to 4; 2,3 point to 5; 4,5 differ
        let g = pair(
            &[
                (0, 4, 0),
                (1, 4, 0),
                (2, 5, 0),
                (3, 5, 0),
                (4, 0, 1),
                (5, 0, 2),
            ],
            6,
        );
        let cg = compress(&g, &CompressionConfig::default()).unwrap();
        assert_eq!(
            cg.mapping.groups,
            vec![vec![0, 1], vec![2, 3], vec![4], vec![5]]
        );
        assert_eq!(cg.weighted.node_count(), 4);
        assert_eq!(cg.weighted.edge_weight(0, 2), 1);
        // node 4 is reached by both members of group 0
        assert_eq!(cg.weighted.in_edge_weight(2, 0), 2);
    }

    #[test]
    fn zero_levels_is_identity() {
        let g = pair(&[(0, 1, 0), (1, 2, 0)], 3);
        let cfg = CompressionConfig {
            max_levels: 0,
            ..CompressionConfig::default()
        };
        let cg = compress(&g, &cfg).unwrap();
        assert_eq!(cg.mapping, MappingIndex::identity(3));
        assert!(cg.stats.levels.is_empty());
        assert_eq!(cg.weighted.graph, g);
    }

    #[test]
    fn distinct_adjacencies_do_not_merge() {
        let g = pair(&[(0, 1, 0), (1, 2, 0), (2, 0, 0)], 3);
        let cg = compress(&g, &CompressionConfig::default()).unwrap();
        assert_eq!(cg.mapping, MappingIndex::identity(3));
    }

    #[test]
    fn mapping_round_trip() {
        let m = MappingIndex::from_groups(vec![vec![0, 3], vec![1], vec![2, 4]]).unwrap();
        let mut bytes = Vec::new();
        write_mapping(&mut bytes, &m).unwrap();
        assert_eq!(bytes.len(), 4 * (3 + 5));
        assert_eq!(read_mapping(&mut bytes.as_slice()).unwrap(), m);
        assert!(MappingIndex::from_groups(vec![vec![0], vec![0]]).is_err());
    }

    #[test]
    fn invalid_delta_rejected() {
        assert!(compress(&pair(&[], 1), &CompressionConfig::levels(&[0.0])).is_err());
        assert!(compress(&pair(&[], 1), &CompressionConfig::levels(&[1.5])).is_err());
    }

    #[test]
    fn singleton_expansion_is_verification() {
        let g = pair(&[(0, 1, 0), (1, 2, 0)], 3);
        let q = QueryGraph::new(
            vec![
                QueryNode::Variable {
                    name: "a".into(),
                    label: None,
                },
                QueryNode::Variable {
                    name: "b".into(),
                    label: None,
                },
            ],
            vec![QueryEdge {
                from: 0,
                to: 1,
                constraint: EdgeConstraint::Any,
            }],
            vec![],
        )
        .unwrap();
        let rows = MatchTable {
            schema: vec![Binding::Node(0), Binding::Node(1)],
            rows: vec![vec![0, 1], vec![2, 0]],
        };
        let out = expand_matches(&rows, &MappingIndex::identity(3), &q, &g, true, 100).unwrap();
        assert_eq!(out.rows, vec![vec![0, 1]]);
    }
}
