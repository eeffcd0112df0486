//! Candidate initialization and refinement.

use std::collections::BTreeSet;
use std::ops::Range;
use std::time::Instant;

use rayon::prelude::*;

use super::{micros, node_label_ok, RefineRounds, SearchTarget};
use crate::graph::Orientation;
use crate::primitives::{compact, two_step_emit_split};
use crate::query::{EdgeConstraint, QueryGraph, QueryPlan};
use crate::NodeId;

/// Boolean candidate maps per query node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateState {
    pub c_set: Vec<Vec<bool>>,
    pub initialized: Vec<bool>,
}

impl CandidateState {
    pub fn empty(query_nodes: usize, data_nodes: usize) -> Self {
        CandidateState {
            c_set: vec![vec![false; data_nodes]; query_nodes],
            initialized: vec![false; query_nodes],
        }
    }

    /// Compacted candidate ids of `u`, ascending.
    pub fn c_array(&self, u: usize) -> Vec<NodeId> {
        compact(&self.c_set[u])
    }

    pub fn contains(&self, u: usize, v: NodeId) -> bool {
        self.c_set[u][v as usize]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.c_set
            .iter()
            .map(|s| s.iter().filter(|&&b| b).count())
            .collect()
    }
}

/// The query edges joining a node to one neighbor, seen from the node.
#[derive(Clone, Debug)]
pub(crate) struct Link {
    pub neighbor: usize,
    pub edges: Vec<(usize, Orientation)>,
}

pub(crate) fn links(
    q: &QueryGraph,
    u: usize,
    neighbors: impl IntoIterator<Item = usize>,
) -> Vec<Link> {
    neighbors
        .into_iter()
        .map(|v| Link {
            neighbor: v,
            edges: q
                .edges_between(u, v)
                .into_iter()
                .map(|e| {
                    let o = if q.edges()[e].from == u {
                        Orientation::Outgoing
                    } else {
                        Orientation::Incoming
                    };
                    (e, o)
                })
                .collect(),
        })
        .collect()
}

/// Shared read-only context of the filtering stages.
pub(crate) struct Ctx<'a> {
    pub q: &'a QueryGraph,
    pub target: SearchTarget<'a>,
    degree_filter: bool,
    out_degree: Vec<u32>,
    in_degree: Vec<u32>,
    self_loops: Vec<Vec<usize>>,
}

impl<'a> Ctx<'a> {
    pub fn new(q: &'a QueryGraph, target: SearchTarget<'a>, degree_filter: bool) -> Self {
        let n = q.node_count();
        let mut self_loops = vec![Vec::new(); n];
        for (i, e) in q.edges().iter().enumerate() {
            if e.from == e.to {
                self_loops[e.from].push(i);
            }
        }
        Ctx {
            q,
            target,
            degree_filter,
            out_degree: (0..n).map(|u| q.out_neighbor_count(u) as u32).collect(),
            in_degree: (0..n).map(|u| q.in_neighbor_count(u) as u32).collect(),
            self_loops,
        }
    }

    fn edge_present(&self, e: usize, o: Orientation, from: NodeId, to: NodeId) -> bool {
        let g = self.target.graph.orientation(o);
        match &self.q.edges()[e].constraint {
            EdgeConstraint::Label(l) => g.has_labeled_edge(from, to, *l),
            EdgeConstraint::Any | EdgeConstraint::Variable(_) => g.has_edge(from, to),
        }
    }

    /// Label, degree and self-loop test of data node `v` for query node `u`.
    pub fn is_candidate(&self, u: usize, v: NodeId) -> bool {
        if !node_label_ok(&self.q.nodes()[u], self.target, v) {
            return false;
        }
        if self.degree_filter
            && (self.out_degree[u] > self.target.out_capacity[v as usize]
                || self.in_degree[u] > self.target.in_capacity[v as usize])
        {
            return false;
        }
        self.self_loops[u]
            .iter()
            .all(|&e| self.edge_present(e, Orientation::Outgoing, v, v))
    }

    /// Length of the adjacency list scanned for `link` from `x`.
    pub fn scan_len(&self, x: NodeId, link: &Link) -> usize {
        self.target.graph.orientation(link.edges[0].1).degree(x)
    }

    /// Calls `f` once per distinct node `t` adjacent to `x` such that every
    /// query edge of `link` is present between `x` and `t` and `accept(t)`
    /// holds. Only adjacency positions in `range` start a visit, so disjoint
    /// ranges never report the same `t` twice. Stops early when `f` returns
    /// false; returns false in that case.
    pub fn for_each_support(
        &self,
        x: NodeId,
        link: &Link,
        range: Range<usize>,
        accept: &impl Fn(NodeId) -> bool,
        mut f: impl FnMut(NodeId) -> bool,
    ) -> bool {
        let (first, orientation) = link.edges[0];
        let g = self.target.graph.orientation(orientation);
        let targets = g.targets(x);
        let labels = g.labels(x);
        let constraint = &self.q.edges()[first].constraint;
        let ok_at = |i: usize| constraint.accepts(labels[i]);
        for i in range {
            let t = targets[i];
            if !ok_at(i) {
                continue;
            }
            // only the first accepted entry of a run of equal targets counts
            let mut j = i;
            let mut earlier = false;
            while j > 0 && targets[j - 1] == t {
                j -= 1;
                if ok_at(j) {
                    earlier = true;
                    break;
                }
            }
            if earlier || !accept(t) {
                continue;
            }
            let rest_ok = link.edges[1..]
                .iter()
                .all(|&(e, o)| self.edge_present(e, o, x, t));
            if rest_ok && !f(t) {
                return false;
            }
        }
        true
    }

    pub fn has_support(&self, x: NodeId, link: &Link, accept: &impl Fn(NodeId) -> bool) -> bool {
        let len = self.scan_len(x, link);
        !self.for_each_support(x, link, 0..len, accept, |_| false)
    }
}

/// Candidate map of query node `u`: label (or bound concept) equality,
/// orientation-specific degree test, and any query self-loop.
pub fn check_candidates(
    q: &QueryGraph,
    u: usize,
    target: SearchTarget<'_>,
    degree_filter: bool,
) -> Vec<bool> {
    let ctx = Ctx::new(q, target, degree_filter);
    check_with(&ctx, u)
}

fn check_with(ctx: &Ctx<'_>, u: usize) -> Vec<bool> {
    (0..ctx.target.node_count() as NodeId)
        .into_par_iter()
        .map(|v| ctx.is_candidate(u, v))
        .collect()
}

fn prune(
    ctx: &Ctx<'_>,
    state: &mut CandidateState,
    u: usize,
    links: &[Link],
    use_check: bool,
) -> bool {
    let candidates = state.c_array(u);
    let state_ref = &*state;
    let removed: Vec<NodeId> = candidates
        .par_iter()
        .copied()
        .filter(|&x| {
            !links.iter().all(|link| {
                let v = link.neighbor;
                if use_check && !state_ref.initialized[v] {
                    ctx.has_support(x, link, &|t| ctx.is_candidate(v, t))
                } else {
                    ctx.has_support(x, link, &|t| state_ref.c_set[v][t as usize])
                }
            })
        })
        .collect();
    for &x in &removed {
        state.c_set[u][x as usize] = false;
    }
    !removed.is_empty()
}

/// One exploration step from query node `u` over its spanning-tree links.
///
/// Candidates of `u` without support towards some tree neighbor are
/// dropped. Each tree neighbor's candidate set then becomes the supported
/// nodes adjacent to the surviving candidates of `u` (checked afresh for
/// uninitialized neighbors, intersected with the existing set otherwise),
/// and the neighbors are marked initialized.
pub fn explore(
    u: usize,
    state: &mut CandidateState,
    plan: &QueryPlan,
    q: &QueryGraph,
    target: SearchTarget<'_>,
    degree_filter: bool,
    split_threshold: usize,
) {
    let ctx = Ctx::new(q, target, degree_filter);
    let tree_links = links(q, u, plan.tree_neighbors(u));
    explore_with(&ctx, state, u, &tree_links, split_threshold);
}

fn explore_with(
    ctx: &Ctx<'_>,
    state: &mut CandidateState,
    u: usize,
    tree_links: &[Link],
    split: usize,
) {
    prune(ctx, state, u, tree_links, true);
    let survivors = state.c_array(u);
    let n = ctx.target.node_count();
    let mut updates = Vec::with_capacity(tree_links.len());
    for link in tree_links {
        let v = link.neighbor;
        let state_ref = &*state;
        let accept = |t: NodeId| {
            if state_ref.initialized[v] {
                state_ref.c_set[v][t as usize]
            } else {
                ctx.is_candidate(v, t)
            }
        };
        let found = two_step_emit_split(
            &survivors,
            |&x| ctx.scan_len(x, link),
            split,
            |&x, r| {
                let mut c = 0;
                ctx.for_each_support(x, link, r, &accept, |_| {
                    c += 1;
                    true
                });
                c
            },
            |&x, r, out: &mut [NodeId]| {
                let mut k = 0;
                ctx.for_each_support(x, link, r, &accept, |t| {
                    out[k] = t;
                    k += 1;
                    true
                });
                k
            },
        )
        .expect("support counts are bounded by the edge count");
        let mut set = vec![false; n];
        for &t in &found.payload {
            set[t as usize] = true;
        }
        updates.push((v, set));
    }
    for (v, set) in updates {
        state.c_set[v] = set;
        state.initialized[v] = true;
    }
}

/// Candidate initialization along the visit order.
pub fn initialize(
    q: &QueryGraph,
    plan: &QueryPlan,
    target: SearchTarget<'_>,
    degree_filter: bool,
) -> CandidateState {
    initialize_split(q, plan, target, degree_filter, usize::MAX)
}

pub(crate) fn initialize_split(
    q: &QueryGraph,
    plan: &QueryPlan,
    target: SearchTarget<'_>,
    degree_filter: bool,
    split: usize,
) -> CandidateState {
    let ctx = Ctx::new(q, target, degree_filter);
    let mut state = CandidateState::empty(q.node_count(), target.node_count());
    for &u in &plan.visit_order {
        if !state.initialized[u] {
            state.c_set[u] = check_with(&ctx, u);
            state.initialized[u] = true;
        }
        let tree_links = links(q, u, plan.tree_neighbors(u));
        explore_with(&ctx, &mut state, u, &tree_links, split);
    }
    state
}

/// Prunes candidates over the simplified query (all of its edges, tree or
/// not), for the given number of rounds. Returns the duration and the
/// candidate-set sizes after each round.
pub fn refine(
    state: &mut CandidateState,
    q: &QueryGraph,
    plan: &QueryPlan,
    target: SearchTarget<'_>,
    rounds: RefineRounds,
    reverse: bool,
) -> Vec<(u64, Vec<usize>)> {
    let ctx = Ctx::new(q, target, false);
    let kept: BTreeSet<usize> = plan.simplified_nodes.iter().copied().collect();
    let mut order: Vec<usize> = plan
        .full_order()
        .into_iter()
        .filter(|u| kept.contains(u))
        .collect();
    if reverse {
        order.reverse();
    }
    let node_links: Vec<Vec<Link>> = (0..q.node_count())
        .map(|u| {
            if kept.contains(&u) {
                links(
                    q,
                    u,
                    q.neighbors(u).into_iter().filter(|v| kept.contains(v)),
                )
            } else {
                Vec::new()
            }
        })
        .collect();

    let limit = match rounds {
        RefineRounds::Fixed(k) => k,
        RefineRounds::Fixpoint => usize::MAX,
    };
    let mut out = Vec::new();
    for _ in 0..limit {
        let t = Instant::now();
        let mut changed = false;
        for &u in &order {
            changed |= prune(&ctx, state, u, &node_links[u], false);
        }
        out.push((micros(t), state.sizes()));
        if !changed {
            break;
        }
    }
    out
}
