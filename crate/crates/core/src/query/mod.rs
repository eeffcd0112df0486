//! Pattern queries and query planning.

mod dsl;
mod plan;

use std::collections::{BTreeSet, HashSet};

pub use dsl::{parse_query, parse_query_set, write_query};
pub use plan::{plan, rank, simplify, PlanMode, PlannerConfig, QueryPlan, Score, TreeEdge};

use crate::{Error, LabelId, NodeId, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum QueryNode {
    /// Bound to exactly one data node.
    Concept { name: String, id: NodeId },
    /// Free node, optionally restricted to a node label.
    Variable {
        name: String,
        label: Option<LabelId>,
    },
}

impl QueryNode {
    pub fn name(&self) -> &str {
        match self {
            QueryNode::Concept { name, .. } | QueryNode::Variable { name, .. } => name,
        }
    }

    pub fn is_concept(&self) -> bool {
        matches!(self, QueryNode::Concept { .. })
    }

    pub fn label(&self) -> Option<LabelId> {
        match self {
            QueryNode::Variable { label, .. } => *label,
            QueryNode::Concept { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum EdgeConstraint {
    /// Any relation; the label is not reported.
    Any,
    Label(LabelId),
    /// Any relation, reported under this name. Edges sharing a name must bind
    /// the same relation.
    Variable(String),
}

impl EdgeConstraint {
    pub fn accepts(&self, label: LabelId) -> bool {
        match self {
            EdgeConstraint::Label(l) => *l == label,
            EdgeConstraint::Any | EdgeConstraint::Variable(_) => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QueryEdge {
    pub from: usize,
    pub to: usize,
    pub constraint: EdgeConstraint,
}

/// A column of a match: either a query node or a variable edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Binding {
    Node(usize),
    Edge(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryGraph {
    nodes: Vec<QueryNode>,
    edges: Vec<QueryEdge>,
    projection: Vec<String>,
}

impl QueryGraph {
    pub fn new(
        nodes: Vec<QueryNode>,
        edges: Vec<QueryEdge>,
        projection: Vec<String>,
    ) -> Result<Self> {
        let mut names = HashSet::new();
        for node in &nodes {
            if !names.insert(node.name()) {
                return Err(Error::InvalidQuery(format!(
                    "duplicate node {:?}",
                    node.name()
                )));
            }
        }
        for e in &edges {
            if e.from >= nodes.len() || e.to >= nodes.len() {
                return Err(Error::InvalidQuery(format!(
                    "edge ({}, {}) references a missing node",
                    e.from, e.to
                )));
            }
        }
        let q = QueryGraph {
            nodes,
            edges,
            projection,
        };
        let variables: HashSet<String> = q
            .nodes
            .iter()
            .filter(|n| !n.is_concept())
            .map(|n| n.name().to_owned())
            .chain(q.edge_variables())
            .collect();
        if let Some(p) = q.projection.iter().find(|p| !variables.contains(*p)) {
            return Err(Error::InvalidQuery(format!(
                "projected name {p:?} is not a variable"
            )));
        }
        let mut seen = HashSet::new();
        if let Some(p) = q.projection.iter().find(|p| !seen.insert(*p)) {
            return Err(Error::InvalidQuery(format!("{p:?} projected twice")));
        }
        Ok(q)
    }

    pub fn nodes(&self) -> &[QueryNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[QueryEdge] {
        &self.edges
    }

    pub fn projection(&self) -> &[String] {
        &self.projection
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name() == name)
    }

    pub fn has_concepts(&self) -> bool {
        self.nodes.iter().any(QueryNode::is_concept)
    }

    /// Distinct edge-variable names in first-appearance order.
    pub fn edge_variables(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.edges
            .iter()
            .filter_map(|e| match &e.constraint {
                EdgeConstraint::Variable(name) if seen.insert(name.clone()) => Some(name.clone()),
                _ => None,
            })
            .collect()
    }

    /// Distinct undirected neighbors of `u`, excluding `u` itself.
    pub fn neighbors(&self, u: usize) -> BTreeSet<usize> {
        self.edges
            .iter()
            .filter_map(|e| {
                if e.from == u && e.to != u {
                    Some(e.to)
                } else if e.to == u && e.from != u {
                    Some(e.from)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn degree(&self, u: usize) -> usize {
        self.neighbors(u).len()
    }

    /// Distinct nodes reached by edges leaving `u` (self-loops included).
    pub fn out_neighbor_count(&self, u: usize) -> usize {
        self.edges
            .iter()
            .filter(|e| e.from == u)
            .map(|e| e.to)
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Distinct nodes with an edge into `u` (self-loops included).
    pub fn in_neighbor_count(&self, u: usize) -> usize {
        self.edges
            .iter()
            .filter(|e| e.to == u)
            .map(|e| e.from)
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Indices of the edges joining `u` and `v` in either direction.
    pub fn edges_between(&self, u: usize, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| (e.from == u && e.to == v) || (e.from == v && e.to == u))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Columns reported for a match: the projection if one was given,
    /// otherwise every variable node followed by every edge variable.
    pub fn output_bindings(&self) -> Vec<Binding> {
        if self.projection.is_empty() {
            return self
                .nodes
                .iter()
                .enumerate()
                .filter(|(_, n)| !n.is_concept())
                .map(|(i, _)| Binding::Node(i))
                .chain(self.edge_variables().into_iter().map(Binding::Edge))
                .collect();
        }
        self.projection
            .iter()
            .map(|name| match self.node_index(name) {
                Some(i) => Binding::Node(i),
                None => Binding::Edge(name.clone()),
            })
            .collect()
    }

    pub fn binding_name(&self, b: &Binding) -> String {
        match b {
            Binding::Node(i) => self.nodes[*i].name().to_owned(),
            Binding::Edge(name) => name.clone(),
        }
    }

    /// Removes the given nodes and their incident edges, renumbering the rest.
    /// Returns the reduced graph and, per kept node, its original index.
    pub(crate) fn without_nodes(&self, removed: &BTreeSet<usize>) -> (QueryGraph, Vec<usize>) {
        let kept: Vec<usize> = (0..self.nodes.len())
            .filter(|u| !removed.contains(u))
            .collect();
        let mut new_index = vec![usize::MAX; self.nodes.len()];
        for (i, &u) in kept.iter().enumerate() {
            new_index[u] = i;
        }
        let nodes = kept.iter().map(|&u| self.nodes[u].clone()).collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| !removed.contains(&e.from) && !removed.contains(&e.to))
            .map(|e| QueryEdge {
                from: new_index[e.from],
                to: new_index[e.to],
                constraint: e.constraint.clone(),
            })
            .collect();
        let q = QueryGraph {
            nodes,
            edges,
            projection: Vec::new(),
        };
        (q, kept)
    }
}
