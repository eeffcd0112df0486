//! Line-oriented query text format.
//!
//! ```text
//! query q0                      # optional, starts a new query in a set
//! node ?a
//! node u1 label=B
//! node p concept=Person
//! edge p ?b rel=Eats
//! edge ?a ?b var=?x
//! edge u1 u2                    # any relation
//! project ?a ?b
//! ```
//!
//! Terms missing from the dictionary may be written as `#<id>`; any other
//! unknown term resolves to [`UNRESOLVED`] and matches nothing.

use std::fmt::Write as _;

use super::{EdgeConstraint, QueryEdge, QueryGraph, QueryNode};
use crate::graph::{TermDictionary, TermTable};
use crate::{Error, Result, UNRESOLVED};

fn resolve(table: &TermTable, term: &str) -> u32 {
    if let Some(id) = table.get(term) {
        return id;
    }
    term.strip_prefix('#')
        .and_then(|digits| digits.parse().ok())
        .unwrap_or(UNRESOLVED)
}

fn encode(table: &TermTable, id: u32) -> String {
    match table.term(id) {
        Some(term) => term.to_owned(),
        None => format!("#{id}"),
    }
}

#[derive(Default)]
struct Builder {
    nodes: Vec<QueryNode>,
    edges: Vec<(String, String, EdgeConstraint, usize)>,
    projection: Vec<String>,
}

impl Builder {
    fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty() && self.projection.is_empty()
    }

    fn finish(self) -> Result<QueryGraph> {
        let index = |name: &str, line: usize| {
            self.nodes
                .iter()
                .position(|n| n.name() == name)
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("undeclared node {name:?}"),
                })
        };
        let mut edges = Vec::with_capacity(self.edges.len());
        for (from, to, constraint, line) in &self.edges {
            edges.push(QueryEdge {
                from: index(from, *line)?,
                to: index(to, *line)?,
                constraint: constraint.clone(),
            });
        }
        QueryGraph::new(self.nodes, edges, self.projection)
    }
}

fn parse_line(
    builder: &mut Builder,
    fields: &[&str],
    line: usize,
    dict: &TermDictionary,
) -> Result<()> {
    let err = |message: String| Error::Parse { line, message };
    match fields[0] {
        "node" => {
            let name = fields
                .get(1)
                .ok_or_else(|| err("node needs a name".into()))?;
            let node = match fields.get(2) {
                None => QueryNode::Variable {
                    name: name.to_string(),
                    label: None,
                },
                Some(attr) => match attr.split_once('=') {
                    Some(("label", term)) => QueryNode::Variable {
                        name: name.to_string(),
                        label: Some(resolve(&dict.node_labels, term)),
                    },
                    Some(("concept", term)) => QueryNode::Concept {
                        name: name.to_string(),
                        id: resolve(&dict.concepts, term),
                    },
                    _ => return Err(err(format!("unknown node attribute {attr:?}"))),
                },
            };
            if fields.len() > 3 {
                return Err(err("too many fields".into()));
            }
            builder.nodes.push(node);
        }
        "edge" => {
            if fields.len() < 3 || fields.len() > 4 {
                return Err(err(
                    "edge needs two endpoints and an optional constraint".into()
                ));
            }
            let constraint = match fields.get(3) {
                None => EdgeConstraint::Any,
                Some(attr) => match attr.split_once('=') {
                    Some(("rel", term)) => EdgeConstraint::Label(resolve(&dict.relations, term)),
                    Some(("var", name)) => EdgeConstraint::Variable(name.to_owned()),
                    _ => return Err(err(format!("unknown edge attribute {attr:?}"))),
                },
            };
            builder
                .edges
                .push((fields[1].to_owned(), fields[2].to_owned(), constraint, line));
        }
        "project" => builder
            .projection
            .extend(fields[1..].iter().map(|s| s.to_string())),
        other => return Err(err(format!("unknown directive {other:?}"))),
    }
    Ok(())
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        // `#` introduces a comment only at the start of a field
        Some(pos) if pos == 0 || line[..pos].ends_with(char::is_whitespace) => {
            let rest = &line[pos + 1..];
            if rest.starts_with(|c: char| c.is_ascii_digit()) {
                line
            } else {
                &line[..pos]
            }
        }
        _ => line,
    }
}

/// Parses a single query.
pub fn parse_query(text: &str, dict: &TermDictionary) -> Result<QueryGraph> {
    let mut set = parse_query_set(text, dict)?;
    match set.len() {
        1 => Ok(set.pop().unwrap().1),
        0 => Err(Error::EmptyQuery),
        n => Err(Error::InvalidQuery(format!(
            "expected one query, found {n}"
        ))),
    }
}

/// Parses a file of queries separated by `query <id>` lines. Text before the
/// first header forms a query with id `"0"`.
pub fn parse_query_set(text: &str, dict: &TermDictionary) -> Result<Vec<(String, QueryGraph)>> {
    let mut out = Vec::new();
    let mut current_id = "0".to_owned();
    let mut builder = Builder::default();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let fields: Vec<&str> = strip_comment(raw).split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields[0] == "query" {
            let id = fields.get(1).ok_or(Error::Parse {
                line,
                message: "query needs an id".into(),
            })?;
            if !builder.is_empty() {
                out.push((current_id, std::mem::take(&mut builder).finish()?));
            }
            current_id = id.to_string();
            continue;
        }
        parse_line(&mut builder, &fields, line, dict)?;
    }
    if !builder.is_empty() {
        out.push((current_id, builder.finish()?));
    }
    Ok(out)
}

/// Renders a query in the text format, optionally under a `query` header.
pub fn write_query(q: &QueryGraph, id: Option<&str>, dict: &TermDictionary) -> String {
    let mut s = String::new();
    if let Some(id) = id {
        writeln!(s, "query {id}").unwrap();
    }
    for node in q.nodes() {
        match node {
            QueryNode::Variable { name, label: None } => writeln!(s, "node {name}"),
            QueryNode::Variable {
                name,
                label: Some(l),
            } => writeln!(s, "node {name} label={}", encode(&dict.node_labels, *l)),
            QueryNode::Concept { name, id } => {
                writeln!(s, "node {name} concept={}", encode(&dict.concepts, *id))
            }
        }
        .unwrap();
    }
    for e in q.edges() {
        let from = q.nodes()[e.from].name();
        let to = q.nodes()[e.to].name();
        match &e.constraint {
            EdgeConstraint::Any => writeln!(s, "edge {from} {to}"),
            EdgeConstraint::Label(l) => {
                writeln!(s, "edge {from} {to} rel={}", encode(&dict.relations, *l))
            }
            EdgeConstraint::Variable(v) => writeln!(s, "edge {from} {to} var={v}"),
        }
        .unwrap();
    }
    if !q.projection().is_empty() {
        writeln!(s, "project {}", q.projection().join(" ")).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_triples;

    fn dict() -> TermDictionary {
        let mut dict = TermDictionary::new();
        parse_triples("Person Eats Cake\nCake IsA Glass\n".as_bytes(), &mut dict).unwrap();
        dict
    }

    const COMMONSENSE: &str = "\
node p concept=Person
node g concept=Glass
node ?a
node ?b
edge p ?b rel=Eats   # labeled edge
edge ?a ?b var=?x
edge ?a g var=?y
project ?a ?b
";

    #[test]
    fn parses_concepts_and_variables() {
        let d = dict();
        let q = parse_query(COMMONSENSE, &d).unwrap();
        assert_eq!(q.node_count(), 4);
        assert_eq!(
            q.nodes()[0],
            QueryNode::Concept {
                name: "p".into(),
                id: 0
            }
        );
        assert_eq!(q.edges()[0].constraint, EdgeConstraint::Label(0));
        assert_eq!(q.edge_variables(), vec!["?x".to_string(), "?y".to_string()]);
        assert_eq!(q.projection(), &["?a".to_string(), "?b".to_string()]);
    }

    #[test]
    fn round_trips_through_text() {
        let d = dict();
        let q = parse_query(COMMONSENSE, &d).unwrap();
        let text = write_query(&q, None, &d);
        assert_eq!(parse_query(&text, &d).unwrap(), q);
    }

    #[test]
    fn unknown_terms_resolve_to_sentinel() {
        let d = dict();
        let q = parse_query("node x concept=Nowhere\nnode y label=#3\n", &d).unwrap();
        assert_eq!(
            q.nodes()[0],
            QueryNode::Concept {
                name: "x".into(),
                id: UNRESOLVED
            }
        );
        assert_eq!(q.nodes()[1].label(), Some(3));
    }

    #[test]
    fn undeclared_node_is_an_error() {
        let err = parse_query("node a\nedge a b\n", &TermDictionary::new()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn query_sets_split_on_headers() {
        let text = "query first\nnode a\nquery second\nnode b\nnode c\nedge b c\n";
        let set = parse_query_set(text, &TermDictionary::new()).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set[0].0, "first");
        assert_eq!(set[1].1.edges().len(), 1);
    }
}
