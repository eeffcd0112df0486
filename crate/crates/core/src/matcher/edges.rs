//! Candidate-edge tables, built with the two-step output scheme.

use super::filter::{CandidateState, Ctx, Link};
use super::SearchTarget;
use crate::graph::Orientation;
use crate::primitives::{exclusive_prefix_sum, sort_pairs, two_step_emit_split};
use crate::query::{EdgeConstraint, QueryGraph};
use crate::{LabelId, NodeId, Result};

/// Candidate data edges of one query edge `(u, v)`.
///
/// `keys` are the candidates of `u` in ascending order; the entries of key
/// `i` live at `offsets[i]..offsets[i + 1]` and are sorted by target. Labels
/// are only distinct per target for variable edges; otherwise each target
/// appears once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateEdgeTable {
    pub edge: usize,
    pub keys: Vec<NodeId>,
    pub offsets: Vec<usize>,
    pub targets: Vec<NodeId>,
    pub labels: Vec<LabelId>,
}

impl CandidateEdgeTable {
    /// Number of candidate edges.
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Entries of `key` as `(targets, labels)`, found by binary search.
    pub fn lookup(&self, key: NodeId) -> (&[NodeId], &[LabelId]) {
        match self.keys.binary_search(&key) {
            Ok(i) => {
                let r = self.offsets[i]..self.offsets[i + 1];
                (&self.targets[r.clone()], &self.labels[r])
            }
            Err(_) => (&[], &[]),
        }
    }

    /// All `(key, target, label)` triples in table order.
    pub fn entries(&self) -> impl Iterator<Item = (NodeId, NodeId, LabelId)> + '_ {
        self.keys.iter().enumerate().flat_map(move |(i, &k)| {
            (self.offsets[i]..self.offsets[i + 1])
                .map(move |j| (k, self.targets[j], self.labels[j]))
        })
    }

    /// The same edges keyed by target instead of source.
    pub fn reversed(&self) -> CandidateEdgeTable {
        let mut pairs: Vec<(NodeId, (NodeId, LabelId))> =
            self.entries().map(|(k, t, l)| (t, (k, l))).collect();
        sort_pairs(&mut pairs);
        let mut keys: Vec<NodeId> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for &(t, _) in &pairs {
            if keys.last() != Some(&t) {
                keys.push(t);
                counts.push(0);
            }
            *counts.last_mut().unwrap() += 1;
        }
        CandidateEdgeTable {
            edge: self.edge,
            keys,
            offsets: exclusive_prefix_sum(&counts).expect("bounded by table size"),
            targets: pairs.iter().map(|&(_, (k, _))| k).collect(),
            labels: pairs.iter().map(|&(_, (_, l))| l).collect(),
        }
    }
}

/// Collects `{(u', v') : u' in C(u), v' in C(v), (u', v') satisfies e}` for
/// query edge `e = (u, v)`.
pub fn collect_candidate_edges(
    q: &QueryGraph,
    e: usize,
    state: &CandidateState,
    target: SearchTarget<'_>,
    split_threshold: usize,
) -> Result<CandidateEdgeTable> {
    let edge = &q.edges()[e];
    let (u, v) = (edge.from, edge.to);
    let keys = state.c_array(u);
    let ctx = Ctx::new(q, target, false);
    let g = &target.graph.outgoing;
    let per_label = matches!(edge.constraint, EdgeConstraint::Variable(_));

    let out = if per_label {
        // one entry per accepted (target, label) pair
        let accept = |x: NodeId, t: NodeId| state.c_set[v][t as usize] && (u != v || t == x);
        two_step_emit_split(
            &keys,
            |&x| g.degree(x),
            split_threshold,
            |&x, r| {
                let targets = &g.targets(x)[r];
                targets.iter().filter(|&&t| accept(x, t)).count()
            },
            |&x, r, out: &mut [(NodeId, LabelId)]| {
                let targets = &g.targets(x)[r.clone()];
                let labels = &g.labels(x)[r];
                let mut k = 0;
                for (&t, &l) in targets.iter().zip(labels) {
                    if accept(x, t) {
                        out[k] = (t, l);
                        k += 1;
                    }
                }
                k
            },
        )?
    } else {
        let link = Link {
            neighbor: v,
            edges: vec![(e, Orientation::Outgoing)],
        };
        let accept = |t: NodeId| state.c_set[v][t as usize];
        two_step_emit_split(
            &keys,
            |&x| ctx.scan_len(x, &link),
            split_threshold,
            |&x, r| {
                let mut c = 0;
                ctx.for_each_support(x, &link, r, &accept, |t| {
                    if u != v || t == x {
                        c += 1;
                    }
                    true
                });
                c
            },
            |&x, r, out: &mut [(NodeId, LabelId)]| {
                let mut k = 0;
                ctx.for_each_support(x, &link, r, &accept, |t| {
                    if u != v || t == x {
                        let label = match edge.constraint {
                            EdgeConstraint::Label(l) => l,
                            _ => crate::UNRESOLVED,
                        };
                        out[k] = (t, label);
                        k += 1;
                    }
                    true
                });
                k
            },
        )?
    };
    Ok(CandidateEdgeTable {
        edge: e,
        keys,
        offsets: out.offsets,
        targets: out.payload.iter().map(|p| p.0).collect(),
        labels: out.payload.iter().map(|p| p.1).collect(),
    })
}
