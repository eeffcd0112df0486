use std::collections::HashMap;

use crate::LabelId;
use crate::NodeId;

/// One direction of a term table: dense ids assigned in insertion order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TermTable {
    to_id: HashMap<String, u32>,
    terms: Vec<String>,
}

impl TermTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `term`, registering it if unseen.
    pub fn intern(&mut self, term: &str) -> u32 {
        if let Some(&id) = self.to_id.get(term) {
            return id;
        }
        let id = self.terms.len() as u32;
        self.terms.push(term.to_owned());
        self.to_id.insert(term.to_owned(), id);
        id
    }

    pub fn get(&self, term: &str) -> Option<u32> {
        self.to_id.get(term).copied()
    }

    pub fn term(&self, id: u32) -> Option<&str> {
        self.terms.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.terms
            .iter()
            .enumerate()
            .map(|(id, term)| (id as u32, term.as_str()))
    }

    /// Inserts `term` under an explicit id. Ids must arrive densely, in order.
    pub(crate) fn insert_at(&mut self, term: &str, id: u32) -> Result<(), String> {
        if id as usize != self.terms.len() {
            return Err(format!(
                "expected id {} for term {term:?}, found {id}",
                self.terms.len()
            ));
        }
        if self.to_id.contains_key(term) {
            return Err(format!("duplicate term {term:?}"));
        }
        self.terms.push(term.to_owned());
        self.to_id.insert(term.to_owned(), id);
        Ok(())
    }
}

/// Maps concept, relation and node-label strings to dense ids.
///
/// Concepts become node ids, relations become edge labels. Node labels are only
/// used by general (non-commonsense) graphs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TermDictionary {
    pub concepts: TermTable,
    pub relations: TermTable,
    pub node_labels: TermTable,
}

impl TermDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn concept_id(&self, term: &str) -> Option<NodeId> {
        self.concepts.get(term)
    }

    pub fn relation_id(&self, term: &str) -> Option<LabelId> {
        self.relations.get(term)
    }

    pub fn node_label_id(&self, term: &str) -> Option<LabelId> {
        self.node_labels.get(term)
    }

    /// Decodes a node id, falling back to its decimal form for graphs without
    /// a concept table (synthetic graphs, snapshots loaded without one).
    pub fn decode_node(&self, id: NodeId) -> String {
        self.concepts
            .term(id)
            .map(str::to_owned)
            .unwrap_or_else(|| id.to_string())
    }

    pub fn decode_relation(&self, id: LabelId) -> String {
        self.relations
            .term(id)
            .map(str::to_owned)
            .unwrap_or_else(|| id.to_string())
    }
}
