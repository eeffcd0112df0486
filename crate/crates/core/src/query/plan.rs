//! Query plans: node ranking, spanning tree and visit order, and the
//! simplified graph used for refinement.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use super::{QueryGraph, QueryNode};
use crate::graph::DataGraph;
use crate::{Error, Result, UNRESOLVED};

/// Exact rational rank `degree / frequency`, or the marker for a node whose
/// label does not occur in the data graph.
#[derive(Clone, Copy, Debug)]
pub enum Score {
    Finite { num: u128, den: u128 },
    NoCandidates,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Score {
    pub fn ratio(num: u128, den: u128) -> Score {
        if den == 0 {
            return Score::NoCandidates;
        }
        let g = gcd(num, den).max(1);
        Score::Finite {
            num: num / g,
            den: den / g,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Score::Finite { .. })
    }
}

impl std::ops::Add for Score {
    type Output = Score;

    fn add(self, other: Score) -> Score {
        match (self, other) {
            (Score::Finite { num: a, den: b }, Score::Finite { num: c, den: d }) => {
                Score::ratio(a * d + c * b, b * d)
            }
            _ => Score::NoCandidates,
        }
    }
}

impl PartialEq for Score {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Score {}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Score::NoCandidates, Score::NoCandidates) => Ordering::Equal,
            (Score::NoCandidates, _) => Ordering::Greater,
            (_, Score::NoCandidates) => Ordering::Less,
            (Score::Finite { num: a, den: b }, Score::Finite { num: c, den: d }) => {
                (a * d).cmp(&(c * b))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanMode {
    /// All nodes are variables ranked by `degree / label frequency`.
    General,
    /// The query binds at least one concept node.
    Commonsense,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlannerConfig {
    /// Variable nodes with at most this many neighbors are left out of the
    /// refinement graph.
    pub low_connectivity_threshold: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            low_connectivity_threshold: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeEdge {
    pub parent: usize,
    pub child: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryPlan {
    pub mode: PlanMode,
    pub ranking: Vec<Score>,
    pub spanning_tree: Vec<TreeEdge>,
    /// Nodes whose neighborhoods are explored, in order.
    pub visit_order: Vec<usize>,
    /// Every node in the order it joined the spanning tree.
    pub discovery_order: Vec<usize>,
    /// The query without low-connectivity nodes.
    pub simplified: QueryGraph,
    /// Original index of each node of `simplified`.
    pub simplified_nodes: Vec<usize>,
}

impl QueryPlan {
    /// True if some query node can have no candidates at all.
    pub fn is_unsatisfiable(&self) -> bool {
        self.ranking.iter().any(|s| !s.is_finite())
    }

    /// Tree neighbors of `u` in ascending order.
    pub fn tree_neighbors(&self, u: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .spanning_tree
            .iter()
            .filter_map(|e| {
                if e.parent == u {
                    Some(e.child)
                } else if e.child == u {
                    Some(e.parent)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// The visit order followed by the remaining nodes in discovery order.
    pub fn full_order(&self) -> Vec<usize> {
        let mut order = self.visit_order.clone();
        order.extend(
            self.discovery_order
                .iter()
                .copied()
                .filter(|u| !self.visit_order.contains(u)),
        );
        order
    }
}

fn frequency_table(g: &DataGraph) -> Vec<usize> {
    g.label_frequencies()
}

fn rank_with(q: &QueryGraph, u: usize, mode: PlanMode, freq: &[usize], node_count: usize) -> Score {
    let degree = q.degree(u) as u128;
    let frequency = match (&q.nodes()[u], mode) {
        (QueryNode::Concept { id, .. }, _) => {
            if *id == UNRESOLVED || *id as usize >= node_count {
                0
            } else {
                1
            }
        }
        (QueryNode::Variable { label: None, .. }, _) => node_count,
        (QueryNode::Variable { label: Some(l), .. }, _) => {
            freq.get(*l as usize).copied().unwrap_or(0)
        }
    };
    Score::ratio(degree, frequency as u128)
}

fn mode_of(q: &QueryGraph) -> PlanMode {
    if q.has_concepts() {
        PlanMode::Commonsense
    } else {
        PlanMode::General
    }
}

/// Ranks query node `u` as `degree(u) / freq(label(u))` over `g`.
///
/// Concept nodes have frequency 1 and unlabeled variables the node count of
/// `g`. A label that never occurs yields [`Score::NoCandidates`].
pub fn rank(q: &QueryGraph, u: usize, g: &DataGraph) -> Score {
    rank_with(q, u, mode_of(q), &frequency_table(g), g.node_count())
}

/// Drops variable nodes with at most `threshold` neighbors, in one pass.
/// Concept nodes are always kept. Returns the reduced query and the original
/// index of each surviving node.
pub fn simplify(q: &QueryGraph, threshold: usize) -> (QueryGraph, Vec<usize>) {
    let removed: BTreeSet<usize> = (0..q.node_count())
        .filter(|&u| !q.nodes()[u].is_concept() && q.degree(u) <= threshold)
        .collect();
    q.without_nodes(&removed)
}

struct Builder<'a> {
    q: &'a QueryGraph,
    ranking: &'a [Score],
    in_tree: Vec<bool>,
    in_order: Vec<bool>,
    tree: Vec<TreeEdge>,
    order: Vec<usize>,
    discovery: Vec<usize>,
}

impl Builder<'_> {
    fn visit(&mut self, u: usize) {
        if !self.in_tree[u] {
            self.in_tree[u] = true;
            self.discovery.push(u);
        }
        self.in_order[u] = true;
        self.order.push(u);
        for v in self.q.neighbors(u) {
            if !self.in_tree[v] {
                self.in_tree[v] = true;
                self.discovery.push(v);
                self.tree.push(TreeEdge {
                    parent: u,
                    child: v,
                });
            }
        }
    }

    /// Non-loop edges with no visited endpoint.
    fn uncovered(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.q
            .edges()
            .iter()
            .filter(|e| e.from != e.to && !self.in_order[e.from] && !self.in_order[e.to])
            .map(|e| (e.from.min(e.to), e.from.max(e.to)))
    }

    fn done(&self) -> bool {
        self.in_tree.iter().all(|&t| t) && self.uncovered().next().is_none()
    }

    fn higher(&self, a: usize, b: usize) -> (usize, usize) {
        match self.ranking[a].cmp(&self.ranking[b]) {
            Ordering::Greater => (a, b),
            Ordering::Less => (b, a),
            Ordering::Equal => (a.min(b), a.max(b)),
        }
    }

    fn next_general(&self) -> usize {
        // Prefer edges that grow the tree; among them the highest rank sum,
        // then the smallest endpoint pair.
        let mut best: Option<(bool, Score, (usize, usize))> = None;
        for (a, b) in self.uncovered() {
            if !self.in_tree[a] && !self.in_tree[b] {
                continue;
            }
            let grows = !(self.in_tree[a] && self.in_tree[b]);
            let key = (grows, self.ranking[a] + self.ranking[b], (a, b));
            let better = match &best {
                None => true,
                Some((g, s, pair)) => {
                    (grows, key.1) > (*g, *s) || ((grows, key.1) == (*g, *s) && (a, b) < *pair)
                }
            };
            if better {
                best = Some(key);
            }
        }
        let (grows, _, (a, b)) = best.expect("connected query always has a frontier edge");
        if grows {
            if self.in_tree[a] {
                a
            } else {
                b
            }
        } else {
            self.higher(a, b).0
        }
    }

    fn next_commonsense(&self) -> usize {
        let mut best: Option<(usize, usize)> = None;
        for v in 0..self.q.node_count() {
            if !self.in_tree[v] || self.in_order[v] {
                continue;
            }
            let fresh = self
                .q
                .neighbors(v)
                .iter()
                .filter(|&&x| !self.in_order[x])
                .count();
            if best.is_none_or(|(c, _)| fresh > c) {
                best = Some((fresh, v));
            }
        }
        best.expect("connected query always has a frontier node").1
    }
}

/// Builds the spanning tree, visit order and simplified graph for `q`.
pub fn plan(q: &QueryGraph, g: &DataGraph, cfg: &PlannerConfig) -> Result<QueryPlan> {
    if q.node_count() == 0 {
        return Err(Error::EmptyQuery);
    }
    if !q.is_connected() {
        return Err(Error::DisconnectedQuery);
    }
    let mode = mode_of(q);
    let freq = frequency_table(g);
    let ranking: Vec<Score> = (0..q.node_count())
        .map(|u| rank_with(q, u, mode, &freq, g.node_count()))
        .collect();

    let n = q.node_count();
    let mut b = Builder {
        q,
        ranking: &ranking,
        in_tree: vec![false; n],
        in_order: vec![false; n],
        tree: Vec::new(),
        order: Vec::new(),
        discovery: Vec::new(),
    };

    let first = match mode {
        PlanMode::Commonsense => (0..n)
            .filter(|&u| q.nodes()[u].is_concept())
            .min_by_key(|&u| (std::cmp::Reverse(q.degree(u)), u))
            .unwrap(),
        PlanMode::General => {
            let mut seed: Option<(Score, (usize, usize))> = None;
            for e in q.edges().iter().filter(|e| e.from != e.to) {
                let pair = b.higher(e.from, e.to);
                let sum = ranking[e.from] + ranking[e.to];
                let better = match &seed {
                    None => true,
                    Some((s, p)) => sum > *s || (sum == *s && pair < *p),
                };
                if better {
                    seed = Some((sum, pair));
                }
            }
            seed.map_or(0, |(_, (u, _))| u)
        }
    };
    b.visit(first);
    while !b.done() {
        let next = match mode {
            PlanMode::General => b.next_general(),
            PlanMode::Commonsense => b.next_commonsense(),
        };
        b.visit(next);
    }

    let (simplified, simplified_nodes) = simplify(q, cfg.low_connectivity_threshold);
    Ok(QueryPlan {
        mode,
        spanning_tree: b.tree,
        visit_order: b.order,
        discovery_order: b.discovery,
        ranking,
        simplified,
        simplified_nodes,
    })
}
