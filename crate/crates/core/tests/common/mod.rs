#![allow(dead_code)]

use std::path::PathBuf;

use gpsm::extract::{extract_query, ExtractConfig};
use gpsm::graph::{
    dense_node_labels, load_triples, read_dictionary, read_node_labels, GraphPair, TermDictionary,
};
use gpsm::query::{parse_query, EdgeConstraint, QueryEdge, QueryGraph, QueryNode};
use gpsm::synth::{generate, SynthConfig};
use gpsm::{LabelId, NodeId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn labeled() -> (GraphPair, TermDictionary, QueryGraph) {
    let mut dict = read_dictionary(&fixture("labeled")).unwrap();
    let g = load_triples(&fixture("labeled.triples"), &mut dict).unwrap();
    let pairs = read_node_labels(&fixture("labeled.node_labels.tsv"), &mut dict).unwrap();
    let labels = dense_node_labels(&pairs, g.node_count()).unwrap();
    let g = g.with_node_labels(labels).unwrap();
    let text = std::fs::read_to_string(fixture("labeled.query")).unwrap();
    let q = parse_query(&text, &dict).unwrap();
    (g, dict, q)
}

pub fn commonsense() -> (GraphPair, TermDictionary, QueryGraph) {
    let mut dict = read_dictionary(&fixture("commonsense")).unwrap();
    let g = load_triples(&fixture("commonsense.triples"), &mut dict).unwrap();
    let text = std::fs::read_to_string(fixture("commonsense.query")).unwrap();
    let q = parse_query(&text, &dict).unwrap();
    (g, dict, q)
}

/// One randomized instance: a small power-law graph with a few twin nodes
/// (copies of another node's out-edges and label) and a BFS-extracted query
/// whose edges are partly relaxed to any-relation or edge variables.
pub struct Instance {
    pub seed: u64,
    pub g: GraphPair,
    pub q: QueryGraph,
}

pub fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let base = rng.gen_range(40..=260);
    let cfg = SynthConfig {
        nodes: base,
        avg_degree: rng.gen_range(1.0..=3.0),
        exponent: rng.gen_range(2.2..=3.0),
        node_labels: rng.gen_range(3..=20),
        edge_labels: rng.gen_range(1..=3),
        seed,
    };
    let (g0, _) = generate(&cfg).unwrap();
    let twins = rng.gen_range(0..=(300 - base).min(40));
    let mut edges: Vec<(NodeId, NodeId, LabelId)> = g0.outgoing.edges().collect();
    let mut labels: Vec<LabelId> = g0.outgoing.node_labels().unwrap().to_vec();
    for i in 0..twins {
        let of = rng.gen_range(0..base) as NodeId;
        let twin = (base + i) as NodeId;
        labels.push(labels[of as usize]);
        for (t, l) in g0.outgoing.adjacency(of) {
            if rng.gen_bool(0.9) {
                edges.push((twin, t, l));
            }
        }
        // keep twins connected even when `of` has no out-edges
        edges.push((of, twin, 0));
    }
    let g = GraphPair::from_edges(&edges, labels.len(), Some(labels)).unwrap();

    let ecfg = ExtractConfig {
        nodes: rng.gen_range(4..=8),
        variable_fraction: if rng.gen_bool(0.2) { 0.75 } else { 1.0 },
        labeled_edges: true,
        attempts: 256,
    };
    let ex = extract_query(&g, &ecfg, rng.gen()).unwrap();
    let q = relax(&ex.query, &mut rng);
    Instance { seed, g, q }
}

fn relax(q: &QueryGraph, rng: &mut ChaCha8Rng) -> QueryGraph {
    let mut nodes = q.nodes().to_vec();
    if rng.gen_bool(0.3) {
        // drop a node label now and then
        let i = rng.gen_range(0..nodes.len());
        if let QueryNode::Variable { name, .. } = &nodes[i] {
            nodes[i] = QueryNode::Variable {
                name: name.clone(),
                label: None,
            };
        }
    }
    let var_names = ["?r", "?s"];
    let edges: Vec<QueryEdge> = q
        .edges()
        .iter()
        .map(|e| {
            let constraint = match rng.gen_range(0..10) {
                0 => EdgeConstraint::Any,
                1 => EdgeConstraint::Variable(var_names.choose(rng).unwrap().to_string()),
                _ => e.constraint.clone(),
            };
            QueryEdge {
                constraint,
                ..e.clone()
            }
        })
        .collect();
    let mut projection: Vec<String> = Vec::new();
    if rng.gen_bool(0.3) {
        let candidates: Vec<String> = nodes
            .iter()
            .filter(|n| !n.is_concept())
            .map(|n| n.name().to_owned())
            .collect();
        let k = rng
            .gen_range(1..=candidates.len().max(1))
            .min(candidates.len());
        projection = candidates.choose_multiple(rng, k).cloned().collect();
    }
    QueryGraph::new(nodes, edges, projection).unwrap()
}
