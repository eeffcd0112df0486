//! Seeded synthetic graphs with a power-law degree distribution.

use rand::distributions::{Distribution, Uniform, WeightedIndex};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{GraphPair, TermDictionary};
use crate::{Error, LabelId, NodeId, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub nodes: usize,
    /// Edges drawn per node before deduplication.
    pub avg_degree: f64,
    /// Power-law exponent of the expected degrees.
    pub exponent: f64,
    pub node_labels: usize,
    pub edge_labels: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            nodes: 10_000,
            avg_degree: 4.0,
            exponent: 2.5,
            node_labels: 16,
            edge_labels: 4,
            seed: 0,
        }
    }
}

/// Chung-Lu style generator: both endpoints of every edge are drawn in
/// proportion to per-node weights `(i + 1)^(-1 / (exponent - 1))`, assigned to
/// nodes in a shuffled order. Self-loops are skipped, duplicates collapse.
pub fn generate(cfg: &SynthConfig) -> Result<(GraphPair, TermDictionary)> {
    if cfg.nodes == 0 {
        return Err(Error::Config(
            "a synthetic graph needs at least one node".into(),
        ));
    }
    if cfg.exponent <= 1.0 {
        return Err(Error::Config("power-law exponent must exceed 1".into()));
    }
    if cfg.node_labels == 0 || cfg.edge_labels == 0 {
        return Err(Error::Config("label counts must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.nodes;
    let mut ids: Vec<NodeId> = (0..n as NodeId).collect();
    ids.shuffle(&mut rng);
    let power = -1.0 / (cfg.exponent - 1.0);
    let weights: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).powf(power)).collect();
    let pick = WeightedIndex::new(&weights).map_err(|e| Error::Config(e.to_string()))?;
    let edge_label = Uniform::new(0, cfg.edge_labels as LabelId);
    let node_label = Uniform::new(0, cfg.node_labels as LabelId);

    let m = (n as f64 * cfg.avg_degree).round() as usize;
    let mut edges = Vec::with_capacity(m);
    if n > 1 {
        while edges.len() < m {
            let s = ids[pick.sample(&mut rng)];
            let t = ids[pick.sample(&mut rng)];
            if s != t {
                edges.push((s, t, edge_label.sample(&mut rng)));
            }
        }
    }
    let labels: Vec<LabelId> = (0..n).map(|_| node_label.sample(&mut rng)).collect();
    let g = GraphPair::from_edges(&edges, n, Some(labels))?;

    let mut dict = TermDictionary::new();
    for v in 0..n {
        dict.concepts.intern(&format!("n{v}"));
    }
    for l in 0..cfg.edge_labels {
        dict.relations.intern(&format!("r{l}"));
    }
    for l in 0..cfg.node_labels {
        dict.node_labels.intern(&format!("L{l}"));
    }
    Ok((g, dict))
}
