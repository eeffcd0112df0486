//! Joining candidate-edge tables into matches.

use std::collections::HashMap;

use super::edges::CandidateEdgeTable;
use super::filter::CandidateState;
use super::table::MatchTable;
use crate::primitives::two_step_emit_with_limit;
use crate::query::{Binding, EdgeConstraint, QueryGraph};
use crate::{Error, NodeId, Result};

pub struct JoinOutput {
    /// Every match over all query nodes and edge variables.
    pub table: MatchTable,
    /// Sum of the partial-row counts after each join step.
    pub intermediate_rows: u64,
}

/// Picks the next edge: both endpoints bound beats one endpoint bound; ties
/// go to the smaller table, then the smaller edge index.
fn next_edge(q: &QueryGraph, visited: &[bool], bound: &[bool], sizes: &[usize]) -> Option<usize> {
    (0..q.edges().len())
        .filter(|&e| !visited[e])
        .filter_map(|e| {
            let edge = &q.edges()[e];
            let rank = match (bound[edge.from], bound[edge.to]) {
                (true, true) => 0,
                (true, false) | (false, true) => 1,
                (false, false) => return None,
            };
            Some((rank, sizes[e], e))
        })
        .min()
        .map(|(_, _, e)| e)
}

struct Layout {
    schema: Vec<Binding>,
    node_col: Vec<Option<usize>>,
    var_col: HashMap<String, usize>,
    node_cols: Vec<usize>,
}

impl Layout {
    fn push_node(&mut self, u: usize) {
        self.node_col[u] = Some(self.schema.len());
        self.node_cols.push(self.schema.len());
        self.schema.push(Binding::Node(u));
    }

    fn push_var(&mut self, name: &str) {
        self.var_col.insert(name.to_owned(), self.schema.len());
        self.schema.push(Binding::Edge(name.to_owned()));
    }

    fn width(&self) -> usize {
        self.schema.len()
    }
}

/// How one step extends a row.
#[derive(Clone, Copy)]
enum Step {
    /// Both endpoints already bound: keep rows that have the edge.
    Check { from_col: usize, to_col: usize },
    /// Bind the node on the far side of the edge.
    Extend { key_col: usize },
}

/// Joins the candidate-edge tables of every query edge.
///
/// The smallest table seeds the partial matches. Each further edge is looked
/// up by the bound endpoint with a binary search on the table keys; with
/// `injective` set a data node may appear only once per row. Fails with
/// [`Error::BudgetExceeded`] if a step would produce more than `row_budget`
/// rows.
pub fn join(
    q: &QueryGraph,
    tables: &[CandidateEdgeTable],
    state: &CandidateState,
    injective: bool,
    row_budget: usize,
) -> Result<JoinOutput> {
    let n = q.node_count();
    let mut layout = Layout {
        schema: Vec::new(),
        node_col: vec![None; n],
        var_col: HashMap::new(),
        node_cols: Vec::new(),
    };
    let over_budget = |_| Error::BudgetExceeded { budget: row_budget };

    if q.edges().is_empty() {
        // a connected query without edges has a single node
        layout.push_node(0);
        let rows: Vec<Vec<u32>> = state.c_array(0).into_iter().map(|v| vec![v]).collect();
        if rows.len() > row_budget {
            return Err(Error::BudgetExceeded { budget: row_budget });
        }
        let intermediate_rows = rows.len() as u64;
        return Ok(JoinOutput {
            table: finish(layout.schema, rows, q),
            intermediate_rows,
        });
    }

    let sizes: Vec<usize> = tables.iter().map(CandidateEdgeTable::len).collect();
    let mut visited = vec![false; q.edges().len()];
    let mut bound = vec![false; n];
    let mut rows: Vec<u32> = Vec::new();
    let mut intermediate_rows = 0u64;
    let mut reversed: HashMap<usize, CandidateEdgeTable> = HashMap::new();

    // seed
    let seed = (0..q.edges().len()).min_by_key(|&e| (sizes[e], e)).unwrap();
    {
        let edge = &q.edges()[seed];
        let table = &tables[seed];
        let var = match &edge.constraint {
            EdgeConstraint::Variable(name) => Some(name.clone()),
            _ => None,
        };
        layout.push_node(edge.from);
        if edge.to != edge.from {
            layout.push_node(edge.to);
        }
        if let Some(name) = &var {
            layout.push_var(name);
        }
        let mut count = 0usize;
        for (k, t, l) in table.entries() {
            if edge.from == edge.to {
                if t != k {
                    continue;
                }
                rows.push(k);
            } else {
                if injective && t == k {
                    continue;
                }
                rows.push(k);
                rows.push(t);
            }
            if var.is_some() {
                rows.push(l);
            }
            count += 1;
            if count > row_budget {
                return Err(Error::BudgetExceeded { budget: row_budget });
            }
        }
        intermediate_rows += count as u64;
        visited[seed] = true;
        bound[edge.from] = true;
        bound[edge.to] = true;
    }

    while let Some(e) = next_edge(q, &visited, &bound, &sizes) {
        let edge = &q.edges()[e];
        let old_width = layout.width();
        let (step, lookup, new_node) = match (bound[edge.from], bound[edge.to]) {
            (true, true) => (
                Step::Check {
                    from_col: layout.node_col[edge.from].unwrap(),
                    to_col: layout.node_col[edge.to].unwrap(),
                },
                &tables[e],
                None,
            ),
            (true, false) => (
                Step::Extend {
                    key_col: layout.node_col[edge.from].unwrap(),
                },
                &tables[e],
                Some(edge.to),
            ),
            (false, true) => {
                let rev = reversed.entry(e).or_insert_with(|| tables[e].reversed());
                (
                    Step::Extend {
                        key_col: layout.node_col[edge.to].unwrap(),
                    },
                    &*rev,
                    Some(edge.from),
                )
            }
            (false, false) => unreachable!("next_edge only returns edges touching bound nodes"),
        };
        // edge variable: fresh column, equality check, or nothing
        let (var_check, var_new) = match &edge.constraint {
            EdgeConstraint::Variable(name) => match layout.var_col.get(name) {
                Some(&c) => (Some(c), None),
                None => (None, Some(name.clone())),
            },
            _ => (None, None),
        };
        let node_cols = layout.node_cols.clone();
        if let Some(u) = new_node {
            layout.push_node(u);
        }
        if let Some(name) = &var_new {
            layout.push_var(name);
        }
        let width = layout.width();
        let emits_label = var_new.is_some();

        let row_slices: Vec<&[u32]> = rows.chunks_exact(old_width).collect();
        let candidates = |row: &[u32]| -> Vec<(NodeId, u32)> {
            let label_ok = |l: u32| var_check.is_none_or(|c| row[c] == l);
            match step {
                Step::Check { from_col, to_col } => {
                    let (targets, labels) = lookup.lookup(row[from_col]);
                    let want = row[to_col];
                    let lo = targets.partition_point(|&t| t < want);
                    let hi = lo + targets[lo..].partition_point(|&t| t == want);
                    let mut out: Vec<(NodeId, u32)> = (lo..hi)
                        .filter(|&i| label_ok(labels[i]))
                        .map(|i| (want, labels[i]))
                        .collect();
                    if !emits_label {
                        out.truncate(1);
                    }
                    out
                }
                Step::Extend { key_col } => {
                    let (targets, labels) = lookup.lookup(row[key_col]);
                    let mut out = Vec::new();
                    let mut last: Option<NodeId> = None;
                    for (&t, &l) in targets.iter().zip(labels) {
                        if !label_ok(l) {
                            continue;
                        }
                        if injective && node_cols.iter().any(|&c| row[c] == t) {
                            continue;
                        }
                        if !emits_label && last == Some(t) {
                            continue;
                        }
                        last = Some(t);
                        out.push((t, l));
                    }
                    out
                }
            }
        };
        let new_cols = width - old_width;
        let out = two_step_emit_with_limit(
            &row_slices,
            |row| candidates(row).len() * width,
            |row, dst: &mut [u32]| {
                let mut k = 0;
                for (t, l) in candidates(row) {
                    dst[k..k + old_width].copy_from_slice(row);
                    let mut c = k + old_width;
                    if new_cols > 0 && matches!(step, Step::Extend { .. }) {
                        dst[c] = t;
                        c += 1;
                    }
                    if emits_label {
                        dst[c] = l;
                        c += 1;
                    }
                    k = c;
                }
                k
            },
            row_budget.saturating_mul(width),
        )
        .map_err(over_budget)?;
        rows = out.payload;
        intermediate_rows += (rows.len() / width.max(1)) as u64;
        visited[e] = true;
        bound[edge.from] = true;
        bound[edge.to] = true;
        if rows.is_empty() {
            // nothing left to extend; finish the schema for an empty table
            for u in 0..n {
                if layout.node_col[u].is_none() {
                    layout.push_node(u);
                }
            }
            for name in q.edge_variables() {
                if !layout.var_col.contains_key(&name) {
                    layout.push_var(&name);
                }
            }
            break;
        }
    }

    let width = layout.width();
    let rows: Vec<Vec<u32>> = if width == 0 {
        Vec::new()
    } else {
        rows.chunks_exact(width).map(<[u32]>::to_vec).collect()
    };
    Ok(JoinOutput {
        table: finish(layout.schema, rows, q),
        intermediate_rows,
    })
}

/// Puts columns in canonical order: nodes by index, then edge variables in
/// first-appearance order.
fn finish(schema: Vec<Binding>, rows: Vec<Vec<u32>>, q: &QueryGraph) -> MatchTable {
    let canonical: Vec<Binding> = (0..q.node_count())
        .map(Binding::Node)
        .chain(q.edge_variables().into_iter().map(Binding::Edge))
        .collect();
    let mut table = MatchTable { schema, rows }.reorder(&canonical);
    table.canonicalize();
    table
}
