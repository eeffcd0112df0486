//! Benchmark runs with optional oracle cross-checks.

use std::time::Instant;

use serde::Serialize;

use crate::compress::{match_compressed, CompressedGraph};
use crate::graph::GraphPair;
use crate::matcher::{match_query, MatchConfig, MatchStats, MatchTable, RefineRounds};
use crate::oracle::{oracle_match, OracleConfig};
use crate::query::QueryGraph;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub variant: String,
    pub deltas: Vec<f64>,
    pub refine_rounds: RefineRounds,
    pub reverse_order: bool,
    pub homomorphism: bool,
    pub threads: usize,
    pub seed: u64,
    pub row_budget: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleCheck {
    pub agree: bool,
    pub oracle_count: usize,
    /// First row present on one side only.
    pub first_difference: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub dataset: String,
    pub query_id: String,
    pub n_query_nodes: usize,
    pub total_us: u64,
    pub result_count: usize,
    pub stats: MatchStats,
    pub config: ConfigEcho,
    pub oracle: Option<OracleCheck>,
    pub error: Option<String>,
}

impl BenchReport {
    pub fn csv_header() -> &'static str {
        "query_id,n_query_nodes,total_us,result_count"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.query_id, self.n_query_nodes, self.total_us, self.result_count
        )
    }

    pub fn mismatch(&self) -> bool {
        self.oracle.as_ref().is_some_and(|o| !o.agree)
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub dataset: String,
    /// Named matcher configurations; each query runs under each of them.
    pub variants: Vec<(String, MatchConfig)>,
    pub oracle_check: bool,
    pub seed: u64,
}

/// The refinement ablation: no refinement, one reversed round, rounds to a
/// fixpoint, and one round in visit order.
pub fn ablation_variants(base: &MatchConfig) -> Vec<(String, MatchConfig)> {
    let with = |rounds, reverse| MatchConfig {
        refine_rounds: rounds,
        reverse_refinement: reverse,
        ..base.clone()
    };
    vec![
        ("k0".into(), with(RefineRounds::Fixed(0), true)),
        ("k1".into(), with(RefineRounds::Fixed(1), true)),
        ("fixpoint".into(), with(RefineRounds::Fixpoint, true)),
        ("k1-forward".into(), with(RefineRounds::Fixed(1), false)),
    ]
}

/// Describes the first row found in only one of two canonical tables.
pub fn first_difference(ours: &MatchTable, oracle: &MatchTable) -> Option<String> {
    let (mut i, mut j) = (0, 0);
    while i < ours.rows.len() || j < oracle.rows.len() {
        match (ours.rows.get(i), oracle.rows.get(j)) {
            (Some(a), Some(b)) if a == b => {
                i += 1;
                j += 1;
            }
            (Some(a), Some(b)) if a < b => return Some(format!("extra row {a:?}")),
            (Some(_), Some(b)) | (None, Some(b)) => return Some(format!("missing row {b:?}")),
            (Some(a), None) => return Some(format!("extra row {a:?}")),
            (None, None) => unreachable!(),
        }
    }
    None
}

/// Runs every query under every variant. With `compressed` set the matcher
/// works on the compressed graph and expands its matches.
pub fn run_bench(
    g: &GraphPair,
    compressed: Option<&CompressedGraph>,
    queries: &[(String, QueryGraph)],
    cfg: &BenchConfig,
) -> Vec<BenchReport> {
    let deltas: Vec<f64> = compressed.map_or(Vec::new(), |c| {
        c.stats.levels.iter().map(|l| l.delta).collect()
    });
    let mut reports = Vec::with_capacity(queries.len() * cfg.variants.len());
    for (id, q) in queries {
        let mut oracle: Option<Result<MatchTable>> = None;
        for (name, mcfg) in &cfg.variants {
            let t = Instant::now();
            let outcome = match compressed {
                Some(cg) => match_compressed(q, g, cg, mcfg),
                None => match_query(q, g, mcfg),
            };
            let total_us = t.elapsed().as_micros() as u64;
            let mut report = BenchReport {
                dataset: cfg.dataset.clone(),
                query_id: id.clone(),
                n_query_nodes: q.node_count(),
                total_us,
                result_count: 0,
                stats: MatchStats::default(),
                config: ConfigEcho {
                    variant: name.clone(),
                    deltas: deltas.clone(),
                    refine_rounds: mcfg.refine_rounds,
                    reverse_order: mcfg.reverse_refinement,
                    homomorphism: mcfg.homomorphism,
                    threads: mcfg.threads,
                    seed: cfg.seed,
                    row_budget: mcfg.row_budget,
                },
                oracle: None,
                error: None,
            };
            match outcome {
                Ok(out) => {
                    report.result_count = out.table.len();
                    report.stats = out.stats;
                    if cfg.oracle_check {
                        let expected = oracle.get_or_insert_with(|| {
                            oracle_match(
                                q,
                                g,
                                OracleConfig {
                                    homomorphism: mcfg.homomorphism,
                                    force: false,
                                },
                            )
                        });
                        report.oracle = Some(match expected {
                            Ok(exp) => {
                                let diff = first_difference(&out.table, exp);
                                OracleCheck {
                                    agree: diff.is_none(),
                                    oracle_count: exp.len(),
                                    first_difference: diff,
                                }
                            }
                            Err(e) => OracleCheck {
                                agree: false,
                                oracle_count: 0,
                                first_difference: Some(format!("oracle failed: {e}")),
                            },
                        });
                    }
                }
                Err(e) => report.error = Some(e.to_string()),
            }
            reports.push(report);
        }
    }
    reports
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub variant: String,
    pub queries: usize,
    pub mean_us: f64,
    pub median_us: f64,
    pub median_intermediate_rows: f64,
    pub mismatches: usize,
    pub errors: usize,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    }
}

/// Mean and median per variant, in variant order of first appearance.
pub fn summarize(reports: &[BenchReport]) -> Vec<Summary> {
    let mut names: Vec<&str> = Vec::new();
    for r in reports {
        if !names.contains(&r.config.variant.as_str()) {
            names.push(&r.config.variant);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let group: Vec<&BenchReport> = reports
                .iter()
                .filter(|r| r.config.variant == name)
                .collect();
            let mut times: Vec<f64> = group.iter().map(|r| r.total_us as f64).collect();
            let mut rows: Vec<f64> = group
                .iter()
                .map(|r| r.stats.intermediate_rows as f64)
                .collect();
            let mean_us = if times.is_empty() {
                0.0
            } else {
                times.iter().sum::<f64>() / times.len() as f64
            };
            Summary {
                variant: name.to_owned(),
                queries: group.len(),
                mean_us,
                median_us: median(&mut times),
                median_intermediate_rows: median(&mut rows),
                mismatches: group.iter().filter(|r| r.mismatch()).count(),
                errors: group.iter().filter(|r| r.error.is_some()).count(),
            }
        })
        .collect()
}
