use std::collections::HashMap;

use crate::graph::TermDictionary;
use crate::query::{Binding, QueryGraph};

/// Rows of data-node ids (or relation ids for edge variables) under a schema.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MatchTable {
    pub schema: Vec<Binding>,
    pub rows: Vec<Vec<u32>>,
}

impl MatchTable {
    pub fn new(schema: Vec<Binding>) -> Self {
        MatchTable {
            schema,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, b: &Binding) -> Option<usize> {
        self.schema.iter().position(|s| s == b)
    }

    /// Sorts rows and removes duplicates.
    pub fn canonicalize(&mut self) {
        self.rows.sort_unstable();
        self.rows.dedup();
    }

    /// Keeps the given columns, in order; the result is canonical.
    ///
    /// Panics if a binding is not part of the schema.
    pub fn project(&self, bindings: &[Binding]) -> MatchTable {
        let cols: Vec<usize> = bindings
            .iter()
            .map(|b| {
                self.column(b)
                    .unwrap_or_else(|| panic!("{b:?} not in schema"))
            })
            .collect();
        let mut out = MatchTable {
            schema: bindings.to_vec(),
            rows: self
                .rows
                .iter()
                .map(|row| cols.iter().map(|&c| row[c]).collect())
                .collect(),
        };
        out.canonicalize();
        out
    }

    /// Reorders columns to `schema` without deduplicating.
    pub fn reorder(&self, schema: &[Binding]) -> MatchTable {
        let cols: Vec<usize> = schema
            .iter()
            .map(|b| {
                self.column(b)
                    .unwrap_or_else(|| panic!("{b:?} not in schema"))
            })
            .collect();
        MatchTable {
            schema: schema.to_vec(),
            rows: self
                .rows
                .iter()
                .map(|row| cols.iter().map(|&c| row[c]).collect())
                .collect(),
        }
    }

    /// Decodes each row into `name -> term` pairs in schema order.
    pub fn decode(&self, q: &QueryGraph, dict: &TermDictionary) -> Vec<Vec<(String, String)>> {
        let names: Vec<String> = self.schema.iter().map(|b| q.binding_name(b)).collect();
        self.rows
            .iter()
            .map(|row| {
                self.schema
                    .iter()
                    .zip(row)
                    .zip(&names)
                    .map(|((b, &id), name)| {
                        let term = match b {
                            Binding::Node(_) => dict.decode_node(id),
                            Binding::Edge(_) => dict.decode_relation(id),
                        };
                        (name.clone(), term)
                    })
                    .collect()
            })
            .collect()
    }

    /// Rows as maps keyed by binding, handy for comparisons in tests.
    pub fn as_maps(&self) -> Vec<HashMap<Binding, u32>> {
        self.rows
            .iter()
            .map(|row| {
                self.schema
                    .iter()
                    .cloned()
                    .zip(row.iter().copied())
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_dedups_and_sorts() {
        let t = MatchTable {
            schema: vec![Binding::Node(0), Binding::Node(1)],
            rows: vec![vec![3, 1], vec![2, 1], vec![3, 2]],
        };
        let p = t.project(&[Binding::Node(0)]);
        assert_eq!(p.rows, vec![vec![2], vec![3]]);
    }

    #[test]
    fn reorder_keeps_duplicates() {
        let t = MatchTable {
            schema: vec![Binding::Node(0), Binding::Edge("?x".into())],
            rows: vec![vec![1, 7], vec![1, 7]],
        };
        let r = t.reorder(&[Binding::Edge("?x".into()), Binding::Node(0)]);
        assert_eq!(r.rows, vec![vec![7, 1], vec![7, 1]]);
    }
}
