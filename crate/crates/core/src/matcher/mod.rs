//! Filtering-and-joining subgraph matching.
//!
//! A match runs in bulk-synchronous stages: plan the query, initialize node
//! candidates along the spanning tree, refine them over the simplified query,
//! collect candidate edges per query edge, then join the edge tables into
//! full matches.

mod edges;
mod filter;
mod join;
mod table;

use std::time::Instant;

use serde::Serialize;

pub use edges::{collect_candidate_edges, CandidateEdgeTable};
pub use filter::{check_candidates, explore, initialize, refine, CandidateState};
pub use join::{join, JoinOutput};
pub use table::MatchTable;

use crate::graph::GraphPair;
use crate::query::{plan, PlannerConfig, QueryGraph, QueryNode};
use crate::{NodeId, Result, UNRESOLVED};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RefineRounds {
    Fixed(usize),
    /// Repeat until no candidate is removed.
    Fixpoint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchConfig {
    pub planner: PlannerConfig,
    pub refine_rounds: RefineRounds,
    /// Refine in reverse visit order.
    pub reverse_refinement: bool,
    /// Allow several query nodes to share a data node.
    pub homomorphism: bool,
    /// Worker threads; 0 uses the global rayon pool.
    pub threads: usize,
    /// Largest number of partial rows the join may hold at once.
    pub row_budget: usize,
    /// Adjacency lists longer than this are processed as several work items.
    pub degree_split_threshold: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            planner: PlannerConfig::default(),
            refine_rounds: RefineRounds::Fixed(1),
            reverse_refinement: true,
            homomorphism: false,
            threads: 0,
            row_budget: 50_000_000,
            degree_split_threshold: 256,
        }
    }
}

/// Runs `f` on a pool with `threads` workers (the global pool for 0).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("failed to build thread pool")
        .install(f)
}

/// A graph to match against, together with its degree capacities.
///
/// For an ordinary graph the capacity of a node is its number of distinct
/// neighbors in each direction. A compressed graph substitutes its weighted
/// capacities and maps concept ids to the compressed node holding them.
#[derive(Clone, Copy, Debug)]
pub struct SearchTarget<'a> {
    pub graph: &'a GraphPair,
    pub out_capacity: &'a [u32],
    pub in_capacity: &'a [u32],
    pub concept_map: Option<&'a [NodeId]>,
}

impl<'a> SearchTarget<'a> {
    pub fn plain(graph: &'a GraphPair) -> Self {
        SearchTarget {
            graph,
            out_capacity: graph.outgoing.neighbor_counts(),
            in_capacity: graph.incoming.neighbor_counts(),
            concept_map: None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Data node a concept resolves to, if any.
    pub fn concept_node(&self, id: NodeId) -> Option<NodeId> {
        if id == UNRESOLVED {
            return None;
        }
        match self.concept_map {
            Some(map) => map.get(id as usize).copied(),
            None => (id < self.node_count() as NodeId).then_some(id),
        }
    }
}

/// Per-phase timings and sizes of one match.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MatchStats {
    pub plan_us: u64,
    pub filter_us: u64,
    pub refine_us: Vec<u64>,
    pub collect_us: u64,
    pub join_us: u64,
    pub expand_us: u64,
    /// Candidate-set sizes per query node after initialization, then after
    /// each refinement round.
    pub candidate_sizes: Vec<Vec<usize>>,
    pub candidate_edges: Vec<usize>,
    pub intermediate_rows: u64,
    pub result_rows: usize,
}

#[derive(Clone, Debug)]
pub struct MatchOutcome {
    /// Projected, deduplicated and sorted rows.
    pub table: MatchTable,
    /// Final candidate sets, before the join.
    pub candidates: CandidateState,
    pub stats: MatchStats,
}

pub(crate) fn micros(since: Instant) -> u64 {
    since.elapsed().as_micros() as u64
}

/// Runs the full pipeline and returns every match over all query nodes and
/// edge variables, unprojected.
pub fn match_all(
    q: &QueryGraph,
    target: SearchTarget<'_>,
    cfg: &MatchConfig,
) -> Result<MatchOutcome> {
    let exact = !cfg.homomorphism;
    with_threads(cfg.threads, || run_pipeline(q, target, cfg, exact, exact))
}

/// The pipeline with the degree filter and injectivity set independently.
/// A compressed graph needs the filter but not injectivity, since several
/// query nodes may land in one merged node.
pub(crate) fn run_pipeline(
    q: &QueryGraph,
    target: SearchTarget<'_>,
    cfg: &MatchConfig,
    degree_filter: bool,
    injective: bool,
) -> Result<MatchOutcome> {
    let mut stats = MatchStats::default();
    let t = Instant::now();
    let plan = match target.concept_map {
        None => plan(q, &target.graph.outgoing, &cfg.planner)?,
        // rank concepts by the node holding them in the target
        Some(_) => plan(
            &resolve_concepts(q, target),
            &target.graph.outgoing,
            &cfg.planner,
        )?,
    };
    stats.plan_us = micros(t);

    let t = Instant::now();
    let mut state = if plan.is_unsatisfiable() {
        CandidateState::empty(q.node_count(), target.node_count())
    } else {
        filter::initialize_split(q, &plan, target, degree_filter, cfg.degree_split_threshold)
    };
    stats.filter_us = micros(t);
    stats.candidate_sizes.push(state.sizes());

    let round_stats = refine(
        &mut state,
        q,
        &plan,
        target,
        cfg.refine_rounds,
        cfg.reverse_refinement,
    );
    for (us, sizes) in round_stats {
        stats.refine_us.push(us);
        stats.candidate_sizes.push(sizes);
    }

    let t = Instant::now();
    let tables: Vec<CandidateEdgeTable> = (0..q.edges().len())
        .map(|e| collect_candidate_edges(q, e, &state, target, cfg.degree_split_threshold))
        .collect::<Result<_>>()?;
    stats.collect_us = micros(t);
    stats.candidate_edges = tables.iter().map(CandidateEdgeTable::len).collect();

    let t = Instant::now();
    let out = join(q, &tables, &state, injective, cfg.row_budget)?;
    stats.join_us = micros(t);
    stats.intermediate_rows = out.intermediate_rows;
    stats.result_rows = out.table.len();
    Ok(MatchOutcome {
        table: out.table,
        candidates: state,
        stats,
    })
}

fn resolve_concepts(q: &QueryGraph, target: SearchTarget<'_>) -> QueryGraph {
    let nodes = q
        .nodes()
        .iter()
        .map(|n| match n {
            QueryNode::Concept { name, id } => QueryNode::Concept {
                name: name.clone(),
                id: target.concept_node(*id).unwrap_or(UNRESOLVED),
            },
            other => other.clone(),
        })
        .collect();
    QueryGraph::new(nodes, q.edges().to_vec(), q.projection().to_vec())
        .expect("same shape as a valid query")
}

/// Matches `q` against `g` and reports the projected bindings, sorted and
/// without duplicates.
pub fn match_query(q: &QueryGraph, g: &GraphPair, cfg: &MatchConfig) -> Result<MatchOutcome> {
    let mut outcome = match_all(q, SearchTarget::plain(g), cfg)?;
    outcome.table = outcome.table.project(&q.output_bindings());
    outcome.stats.result_rows = outcome.table.len();
    Ok(outcome)
}

pub(crate) fn node_label_ok(node: &QueryNode, target: SearchTarget<'_>, v: NodeId) -> bool {
    match node {
        QueryNode::Concept { id, .. } => target.concept_node(*id) == Some(v),
        QueryNode::Variable { label: None, .. } => true,
        QueryNode::Variable { label: Some(l), .. } => target.graph.node_label(v) == Some(*l),
    }
}
