//! Query extraction by breadth-first search from a dense region.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::GraphPair;
use crate::query::{EdgeConstraint, QueryEdge, QueryGraph, QueryNode};
use crate::{Error, NodeId, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractConfig {
    pub nodes: usize,
    /// Share of query nodes left as variables; the rest become concepts.
    pub variable_fraction: f64,
    /// Keep the relation of each induced edge as a label constraint.
    pub labeled_edges: bool,
    /// Seeds tried before giving up on finding a large enough component.
    pub attempts: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            nodes: 6,
            variable_fraction: 1.0,
            labeled_edges: true,
            attempts: 64,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExtractedQuery {
    pub query: QueryGraph,
    /// Data node each query node was taken from; one known match.
    pub source: Vec<NodeId>,
}

/// Nodes in the top tenth by total distinct-neighbor count, ties by id.
fn dense_nodes(g: &GraphPair) -> Vec<NodeId> {
    let mut ranked: Vec<(u32, NodeId)> = (0..g.node_count() as NodeId)
        .map(|v| {
            (
                g.outgoing.neighbor_count(v) + g.incoming.neighbor_count(v),
                v,
            )
        })
        .collect();
    ranked.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let keep = (g.node_count() / 10).max(1);
    ranked.truncate(keep);
    ranked.into_iter().map(|(_, v)| v).collect()
}

fn bfs(g: &GraphPair, seed: NodeId, limit: usize) -> Vec<NodeId> {
    let mut seen = BTreeSet::from([seed]);
    let mut order = vec![seed];
    let mut i = 0;
    while i < order.len() && order.len() < limit {
        let v = order[i];
        let mut next: Vec<NodeId> = g
            .outgoing
            .targets(v)
            .iter()
            .chain(g.incoming.targets(v))
            .copied()
            .collect();
        next.sort_unstable();
        next.dedup();
        for t in next {
            if order.len() == limit {
                break;
            }
            if seen.insert(t) {
                order.push(t);
            }
        }
        i += 1;
    }
    order
}

/// Extracts a connected query of `cfg.nodes` nodes with all induced edges.
pub fn extract_query(g: &GraphPair, cfg: &ExtractConfig, seed: u64) -> Result<ExtractedQuery> {
    if cfg.nodes == 0 {
        return Err(Error::Config("a query needs at least one node".into()));
    }
    if cfg.nodes > g.node_count() {
        return Err(Error::Config(format!(
            "cannot extract {} nodes from a graph of {}",
            cfg.nodes,
            g.node_count()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dense = dense_nodes(g);
    for _ in 0..cfg.attempts.max(1) {
        let start = *dense.choose(&mut rng).expect("graph is not empty");
        let picked = bfs(g, start, cfg.nodes);
        if picked.len() == cfg.nodes {
            return Ok(build(g, picked, cfg, &mut rng));
        }
    }
    Err(Error::Config(format!(
        "no connected region of {} nodes found around dense nodes",
        cfg.nodes
    )))
}

fn build(
    g: &GraphPair,
    picked: Vec<NodeId>,
    cfg: &ExtractConfig,
    rng: &mut ChaCha8Rng,
) -> ExtractedQuery {
    let n = picked.len();
    let variables = ((cfg.variable_fraction.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
    let mut concept = vec![true; n];
    let mut slots: Vec<usize> = (0..n).collect();
    slots.shuffle(rng);
    for &i in &slots[..variables] {
        concept[i] = false;
    }
    let nodes = picked
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if concept[i] {
                QueryNode::Concept {
                    name: format!("c{i}"),
                    id: v,
                }
            } else {
                QueryNode::Variable {
                    name: format!("?x{i}"),
                    label: g.node_label(v),
                }
            }
        })
        .collect();
    let index = |v: NodeId| picked.iter().position(|&p| p == v);
    let mut edges = Vec::new();
    for (i, &v) in picked.iter().enumerate() {
        let mut last = None;
        for (t, l) in g.outgoing.adjacency(v) {
            let Some(j) = index(t) else { continue };
            if !cfg.labeled_edges && last == Some(t) {
                continue;
            }
            last = Some(t);
            edges.push(QueryEdge {
                from: i,
                to: j,
                constraint: if cfg.labeled_edges {
                    EdgeConstraint::Label(l)
                } else {
                    EdgeConstraint::Any
                },
            });
        }
    }
    let query = QueryGraph::new(nodes, edges, vec![]).expect("extracted query is well formed");
    ExtractedQuery {
        query,
        source: picked,
    }
}

/// `count` queries with seeds drawn from `seed`.
pub fn extract_queries(
    g: &GraphPair,
    cfg: &ExtractConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<ExtractedQuery>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| extract_query(g, cfg, rng.gen()))
        .collect()
}
