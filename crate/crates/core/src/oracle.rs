//! Exhaustive backtracking matcher used as ground truth.

use crate::graph::{GraphPair, Orientation};
use crate::matcher::MatchTable;
use crate::query::{Binding, EdgeConstraint, QueryGraph, QueryNode};
use crate::{Error, LabelId, NodeId, Result};

pub const MAX_QUERY_NODES: usize = 12;
pub const MAX_DATA_NODES: usize = 10_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OracleConfig {
    pub homomorphism: bool,
    /// Skip the size guard.
    pub force: bool,
}

struct Search<'a> {
    q: &'a QueryGraph,
    g: &'a GraphPair,
    cfg: OracleConfig,
    order: Vec<usize>,
    /// Per depth: a query edge to an earlier node used to enumerate
    /// candidates, and its orientation seen from the earlier node.
    anchor: Vec<Option<(usize, Orientation)>>,
    /// Per depth: edges whose later endpoint is bound at this depth.
    closing: Vec<Vec<usize>>,
    vars: Vec<String>,
    var_edges: Vec<Vec<usize>>,
    out: Vec<Vec<u32>>,
}

impl Search<'_> {
    fn candidate(&self, u: usize, v: NodeId) -> bool {
        let label_ok = match &self.q.nodes()[u] {
            QueryNode::Concept { id, .. } => *id == v,
            QueryNode::Variable { label: None, .. } => true,
            QueryNode::Variable { label: Some(l), .. } => self.g.node_label(v) == Some(*l),
        };
        label_ok
            && (self.cfg.homomorphism
                || (self.q.out_neighbor_count(u) as u32 <= self.g.outgoing.neighbor_count(v)
                    && self.q.in_neighbor_count(u) as u32 <= self.g.incoming.neighbor_count(v)))
    }

    fn edge_ok(&self, e: usize, assign: &[NodeId]) -> bool {
        let edge = &self.q.edges()[e];
        let (s, t) = (assign[edge.from], assign[edge.to]);
        match edge.constraint {
            EdgeConstraint::Label(l) => self.g.outgoing.has_labeled_edge(s, t, l),
            _ => self.g.outgoing.has_edge(s, t),
        }
    }

    fn go(&mut self, depth: usize, assign: &mut Vec<NodeId>) {
        if depth == self.order.len() {
            self.emit(assign);
            return;
        }
        let u = self.order[depth];
        let pool: Vec<NodeId> = match self.anchor[depth] {
            None => (0..self.g.node_count() as NodeId).collect(),
            Some((e, o)) => {
                let edge = &self.q.edges()[e];
                let w = if edge.from == u { edge.to } else { edge.from };
                let mut t = self.g.orientation(o).targets(assign[w]).to_vec();
                t.dedup();
                t
            }
        };
        for v in pool {
            if !self.candidate(u, v) {
                continue;
            }
            if !self.cfg.homomorphism && self.order[..depth].iter().any(|&w| assign[w] == v) {
                continue;
            }
            assign[u] = v;
            if self.closing[depth].iter().all(|&e| self.edge_ok(e, assign)) {
                self.go(depth + 1, assign);
            }
        }
        assign[u] = NodeId::MAX;
    }

    /// Emits one row per consistent labeling of the edge variables.
    fn emit(&mut self, assign: &[NodeId]) {
        let mut choices: Vec<Vec<LabelId>> = Vec::with_capacity(self.vars.len());
        for edges in &self.var_edges {
            let mut common: Option<Vec<LabelId>> = None;
            for &e in edges {
                let edge = &self.q.edges()[e];
                let g = &self.g.outgoing;
                let (s, t) = (assign[edge.from], assign[edge.to]);
                let labels: Vec<LabelId> =
                    g.edges_between(s, t).map(|i| g.edge_labels()[i]).collect();
                common = Some(match common {
                    None => labels,
                    Some(c) => c.into_iter().filter(|l| labels.contains(l)).collect(),
                });
            }
            let c = common.unwrap_or_default();
            if c.is_empty() {
                return;
            }
            choices.push(c);
        }
        let mut idx = vec![0usize; choices.len()];
        loop {
            let mut row: Vec<u32> = assign.to_vec();
            row.extend(idx.iter().zip(&choices).map(|(&i, c)| c[i]));
            self.out.push(row);
            let mut k = idx.len();
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < choices[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}

/// All matches over every query node and edge variable, canonical.
pub fn oracle_all(q: &QueryGraph, g: &GraphPair, cfg: OracleConfig) -> Result<MatchTable> {
    if !cfg.force && (q.node_count() > MAX_QUERY_NODES || g.node_count() > MAX_DATA_NODES) {
        return Err(Error::OracleGuard {
            query_nodes: q.node_count(),
            data_nodes: g.node_count(),
        });
    }
    if q.node_count() == 0 {
        return Err(Error::EmptyQuery);
    }
    if !q.is_connected() {
        return Err(Error::DisconnectedQuery);
    }
    // breadth-first order so every later node has an earlier neighbor
    let n = q.node_count();
    let mut order = vec![0];
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut i = 0;
    while i < order.len() {
        for v in q.neighbors(order[i]) {
            if !seen[v] {
                seen[v] = true;
                order.push(v);
            }
        }
        i += 1;
    }
    let mut position = vec![0; n];
    for (d, &u) in order.iter().enumerate() {
        position[u] = d;
    }
    let mut anchor = vec![None; n];
    let mut closing = vec![Vec::new(); n];
    for (e, edge) in q.edges().iter().enumerate() {
        let (pf, pt) = (position[edge.from], position[edge.to]);
        let later = pf.max(pt);
        closing[later].push(e);
        if pf != pt && anchor[later].is_none() {
            let o = if pf < pt {
                Orientation::Outgoing
            } else {
                Orientation::Incoming
            };
            anchor[later] = Some((e, o));
        }
    }
    let vars = q.edge_variables();
    let var_edges = vars
        .iter()
        .map(|v| {
            (0..q.edges().len())
                .filter(|&e| matches!(&q.edges()[e].constraint, EdgeConstraint::Variable(name) if name == v))
                .collect()
        })
        .collect();
    let mut s = Search {
        q,
        g,
        cfg,
        order,
        anchor,
        closing,
        vars: vars.clone(),
        var_edges,
        out: Vec::new(),
    };
    let mut assign = vec![NodeId::MAX; n];
    s.go(0, &mut assign);
    let schema = (0..n)
        .map(Binding::Node)
        .chain(vars.into_iter().map(Binding::Edge))
        .collect();
    let mut table = MatchTable {
        schema,
        rows: s.out,
    };
    table.canonicalize();
    Ok(table)
}

/// Oracle result projected to the query's output bindings.
pub fn oracle_match(q: &QueryGraph, g: &GraphPair, cfg: OracleConfig) -> Result<MatchTable> {
    Ok(oracle_all(q, g, cfg)?.project(&q.output_bindings()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::QueryEdge;

    fn vars(n: usize) -> Vec<QueryNode> {
        (0..n)
            .map(|i| QueryNode::Variable {
                name: format!("x{i}"),
                label: None,
            })
            .collect()
    }

    fn query(n: usize, edges: &[(usize, usize)]) -> QueryGraph {
        let edges = edges
            .iter()
            .map(|&(from, to)| QueryEdge {
                from,
                to,
                constraint: EdgeConstraint::Any,
            })
            .collect();
        QueryGraph::new(vars(n), edges, vec![]).unwrap()
    }

    #[test]
    fn triangle_in_complete_digraph() {
        let mut edges = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    edges.push((a, b, 0));
                }
            }
        }
        let k4 = GraphPair::from_edges(&edges, 4, None).unwrap();
        let tri = query(3, &[(0, 1), (1, 2), (2, 0)]);
        assert_eq!(
            oracle_all(&tri, &k4, OracleConfig::default())
                .unwrap()
                .len(),
            24
        );

        // directed 3-cycle as data: 3 rotations
        let cyc = GraphPair::from_edges(&[(0, 1, 0), (1, 2, 0), (2, 0, 0)], 3, None).unwrap();
        assert_eq!(
            oracle_all(&tri, &cyc, OracleConfig::default())
                .unwrap()
                .len(),
            3
        );
    }

    #[test]
    fn homomorphism_allows_shared_nodes() {
        // path a -> b <- c folds onto a single edge
        let g = GraphPair::from_edges(&[(0, 1, 0)], 2, None).unwrap();
        let q = query(3, &[(0, 1), (2, 1)]);
        assert!(oracle_all(&q, &g, OracleConfig::default())
            .unwrap()
            .is_empty());
        let cfg = OracleConfig {
            homomorphism: true,
            force: false,
        };
        assert_eq!(oracle_all(&q, &g, cfg).unwrap().rows, vec![vec![0, 1, 0]]);
    }

    #[test]
    fn unsatisfiable_label_is_empty() {
        let g = GraphPair::from_edges(&[(0, 1, 0)], 2, Some(vec![0, 0])).unwrap();
        let q = QueryGraph::new(
            vec![QueryNode::Variable {
                name: "a".into(),
                label: Some(7),
            }],
            vec![],
            vec![],
        )
        .unwrap();
        assert!(oracle_all(&q, &g, OracleConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn edge_variables_bind_each_label() {
        let g = GraphPair::from_edges(&[(0, 1, 3), (0, 1, 5), (1, 2, 5)], 3, None).unwrap();
        let q = QueryGraph::new(
            vars(3),
            vec![
                QueryEdge {
                    from: 0,
                    to: 1,
                    constraint: EdgeConstraint::Variable("?r".into()),
                },
                QueryEdge {
                    from: 1,
                    to: 2,
                    constraint: EdgeConstraint::Variable("?r".into()),
                },
            ],
            vec![],
        )
        .unwrap();
        let t = oracle_all(&q, &g, OracleConfig::default()).unwrap();
        assert_eq!(t.rows, vec![vec![0, 1, 2, 5]]);
    }

    #[test]
    fn guard_refuses_large_queries() {
        let g = GraphPair::from_edges(&[], 1, None).unwrap();
        let edges: Vec<(usize, usize)> = (0..12).map(|i| (i, i + 1)).collect();
        let q = query(13, &edges);
        assert!(matches!(
            oracle_all(&q, &g, OracleConfig::default()),
            Err(Error::OracleGuard { .. })
        ));
        let forced = OracleConfig {
            homomorphism: false,
            force: true,
        };
        assert!(oracle_all(&q, &g, forced).unwrap().is_empty());
    }
}
