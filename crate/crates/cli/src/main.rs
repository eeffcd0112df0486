use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use gpsm::bench::{ablation_variants, run_bench, summarize, BenchConfig, BenchReport};
use gpsm::compress::{
    compress, match_compressed, write_mapping_file, CompressedGraph, CompressionConfig,
};
use gpsm::extract::{extract_queries, ExtractConfig};
use gpsm::graph::{
    dense_node_labels, load_triples, read_dictionary, read_node_labels, read_snapshot_file,
    write_dictionary, write_snapshot_file, GraphPair, TermDictionary,
};
use gpsm::matcher::{match_query, MatchConfig, RefineRounds};
use gpsm::oracle::{oracle_match, OracleConfig};
use gpsm::query::{parse_query_set, write_query, QueryGraph};
use gpsm::synth::{generate, SynthConfig};

#[derive(Parser)]
#[command(
    name = "gpsm",
    version,
    about = "Subgraph matching over labeled directed graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a triple file and write a binary snapshot plus dictionary.
    Load {
        #[command(flatten)]
        graph: GraphArgs,
        /// Snapshot path; the dictionary goes next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic power-law graph snapshot.
    Generate {
        #[arg(long, default_value_t = 10_000)]
        nodes: usize,
        #[arg(long, default_value_t = 4.0)]
        avg_degree: f64,
        #[arg(long, default_value_t = 2.5)]
        exponent: f64,
        #[arg(long, default_value_t = 16)]
        node_labels: usize,
        #[arg(long, default_value_t = 4)]
        edge_labels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compress a graph and write its mapping index.
    Compress {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        compression: CompressionArgs,
        /// Mapping index output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the level statistics here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Match a query set and print one JSON object per result row.
    Match {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        queries: PathBuf,
        #[command(flatten)]
        matcher: MatchArgs,
        #[command(flatten)]
        compression: CompressionArgs,
        /// Compare with the backtracking oracle and fail on a difference.
        #[arg(long, action = ArgAction::Set, default_value_t = false)]
        oracle_check: bool,
        /// Print phase timings and candidate sizes to stderr.
        #[arg(long)]
        stats: bool,
        /// Write rows here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run every query, optionally under the refinement ablation.
    Bench {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        queries: PathBuf,
        #[command(flatten)]
        matcher: MatchArgs,
        #[command(flatten)]
        compression: CompressionArgs,
        /// Run k=0, k=1, fixpoint and forward-order variants.
        #[arg(long)]
        ablation: bool,
        #[arg(long, action = ArgAction::Set, default_value_t = false)]
        oracle_check: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report lines (JSON); stdout by default.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Per-query CSV summary.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Dataset name echoed in reports.
        #[arg(long)]
        dataset: Option<String>,
    },
    /// Extract queries by breadth-first search from dense nodes.
    ExtractQueries {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 6)]
        nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        variable_fraction: f64,
        /// Leave edges unconstrained instead of keeping their relation.
        #[arg(long)]
        unlabeled_edges: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check matcher output against the oracle for each query.
    Verify {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        queries: PathBuf,
        #[command(flatten)]
        matcher: MatchArgs,
        #[command(flatten)]
        compression: CompressionArgs,
        /// Run the oracle beyond its size guard.
        #[arg(long)]
        force: bool,
    },
}

#[derive(Args)]
struct GraphArgs {
    /// Triple file, or a `.gpsm` snapshot with its dictionary alongside.
    #[arg(long)]
    graph: PathBuf,
    /// Dictionary base path (`<base>.nodes.tsv` and friends) for triple files.
    #[arg(long)]
    dict: Option<PathBuf>,
    /// `concept<TAB>label` file for triple files.
    #[arg(long)]
    node_labels: Option<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    /// Number of refinement rounds, or `fixpoint`.
    #[arg(long, default_value = "1", value_parser = parse_rounds)]
    refine_rounds: RefineRounds,
    #[arg(long, action = ArgAction::Set, default_value_t = true)]
    reverse_order: bool,
    #[arg(long, action = ArgAction::Set, default_value_t = false)]
    homomorphism: bool,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Row budget of the join.
    #[arg(long, default_value_t = 50_000_000)]
    budget: usize,
}

#[derive(Args)]
struct CompressionArgs {
    /// Comma-separated thresholds, one per level; compression is off without it.
    #[arg(long, value_delimiter = ',')]
    delta: Vec<f64>,
    #[arg(long)]
    max_levels: Option<usize>,
    /// Stop compressing at this many nodes plus edges.
    #[arg(long)]
    size_budget: Option<usize>,
    /// Compare incoming edges too when scoring similarity.
    #[arg(long)]
    use_incoming: bool,
}

fn parse_rounds(s: &str) -> Result<RefineRounds, String> {
    if s == "fixpoint" {
        return Ok(RefineRounds::Fixpoint);
    }
    s.parse()
        .map(RefineRounds::Fixed)
        .map_err(|_| format!("expected a number or `fixpoint`, got {s:?}"))
}

impl MatchArgs {
    fn config(&self) -> MatchConfig {
        MatchConfig {
            refine_rounds: self.refine_rounds,
            reverse_refinement: self.reverse_order,
            homomorphism: self.homomorphism,
            threads: self.threads,
            row_budget: self.budget,
            ..MatchConfig::default()
        }
    }
}

impl CompressionArgs {
    fn config(&self) -> Option<CompressionConfig> {
        if self.delta.is_empty() {
            return None;
        }
        Some(CompressionConfig {
            deltas: self.delta.clone(),
            max_levels: self.max_levels.unwrap_or(self.delta.len()),
            budget: self.size_budget,
            use_incoming: self.use_incoming,
        })
    }

    fn run(&self, g: &GraphPair) -> Result<Option<CompressedGraph>> {
        self.config()
            .map(|cfg| compress(g, &cfg))
            .transpose()
            .map_err(Into::into)
    }
}

fn is_snapshot(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gpsm")
}

fn load_graph(args: &GraphArgs) -> Result<(GraphPair, TermDictionary)> {
    let path = &args.graph;
    if is_snapshot(path) {
        let g = read_snapshot_file(path).with_context(|| format!("reading {}", path.display()))?;
        let dict = read_dictionary(&path.with_extension(""))?;
        return Ok((GraphPair::from_outgoing(g), dict));
    }
    let mut dict = match &args.dict {
        Some(base) => read_dictionary(base)?,
        None => TermDictionary::new(),
    };
    let g = load_triples(path, &mut dict).with_context(|| format!("loading {}", path.display()))?;
    let g = match &args.node_labels {
        None => g,
        Some(labels) => {
            let pairs = read_node_labels(labels, &mut dict)?;
            if dict.concepts.len() != g.node_count() {
                bail!("node label file names concepts missing from the graph");
            }
            let dense = dense_node_labels(&pairs, g.node_count())?;
            g.with_node_labels(dense)?
        }
    };
    Ok((g, dict))
}

fn load_queries(path: &Path, dict: &TermDictionary) -> Result<Vec<(String, QueryGraph)>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_query_set(&text, dict)?)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn run_match(
    q: &QueryGraph,
    g: &GraphPair,
    cg: Option<&CompressedGraph>,
    cfg: &MatchConfig,
) -> gpsm::Result<gpsm::matcher::MatchOutcome> {
    match cg {
        Some(cg) => match_compressed(q, g, cg, cfg),
        None => match_query(q, g, cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Load { graph, out } => {
            let (g, dict) = load_graph(&graph)?;
            write_snapshot_file(&out, &g.outgoing)?;
            write_dictionary(&out.with_extension(""), &dict)?;
            println!(
                "{}",
                json!({"nodes": g.node_count(), "edges": g.edge_count()})
            );
        }
        Command::Generate {
            nodes,
            avg_degree,
            exponent,
            node_labels,
            edge_labels,
            seed,
            out,
        } => {
            let cfg = SynthConfig {
                nodes,
                avg_degree,
                exponent,
                node_labels,
                edge_labels,
                seed,
            };
            let (g, dict) = generate(&cfg)?;
            write_snapshot_file(&out, &g.outgoing)?;
            write_dictionary(&out.with_extension(""), &dict)?;
            println!(
                "{}",
                json!({"nodes": g.node_count(), "edges": g.edge_count()})
            );
        }
        Command::Compress {
            graph,
            compression,
            out,
            json,
        } => {
            let (g, _) = load_graph(&graph)?;
            let cfg = compression.config().unwrap_or_default();
            let cg = compress(&g, &cfg)?;
            if let Some(path) = &out {
                write_mapping_file(path, &cg.mapping)?;
            }
            let mut w = output(&json)?;
            writeln!(w, "{}", serde_json::to_string(&cg.stats)?)?;
            w.flush()?;
            if cg.stats.budget_met == Some(false) {
                eprintln!("warning: size budget not reached");
            }
        }
        Command::Match {
            graph,
            queries,
            matcher,
            compression,
            oracle_check,
            stats,
            json,
        } => {
            let (g, dict) = load_graph(&graph)?;
            let queries = load_queries(&queries, &dict)?;
            let cg = compression.run(&g)?;
            let cfg = matcher.config();
            let mut w = output(&json)?;
            let mut mismatch = false;
            for (id, q) in &queries {
                let out =
                    run_match(q, &g, cg.as_ref(), &cfg).with_context(|| format!("query {id}"))?;
                for row in out.table.decode(q, &dict) {
                    let mut obj = Map::new();
                    obj.insert("query".into(), Value::from(id.as_str()));
                    for (name, term) in row {
                        obj.insert(name, Value::from(term));
                    }
                    writeln!(w, "{}", Value::Object(obj))?;
                }
                if stats {
                    eprintln!("{}", json!({"query": id, "stats": out.stats}));
                }
                if oracle_check {
                    let ocfg = OracleConfig {
                        homomorphism: cfg.homomorphism,
                        force: false,
                    };
                    let expected = oracle_match(q, &g, ocfg)?;
                    if let Some(diff) = gpsm::bench::first_difference(&out.table, &expected) {
                        eprintln!("query {id}: oracle mismatch: {diff}");
                        mismatch = true;
                    }
                }
            }
            w.flush()?;
            if mismatch {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Bench {
            graph,
            queries,
            matcher,
            compression,
            ablation,
            oracle_check,
            seed,
            json,
            csv,
            dataset,
        } => {
            let (g, dict) = load_graph(&graph)?;
            let queries = load_queries(&queries, &dict)?;
            let cg = compression.run(&g)?;
            let base = matcher.config();
            let variants = if ablation {
                ablation_variants(&base)
            } else {
                vec![("default".into(), base)]
            };
            let cfg = BenchConfig {
                dataset: dataset.unwrap_or_else(|| graph.graph.display().to_string()),
                variants,
                oracle_check,
                seed,
            };
            let reports = run_bench(&g, cg.as_ref(), &queries, &cfg);
            let mut w = output(&json)?;
            for r in &reports {
                writeln!(w, "{}", serde_json::to_string(r)?)?;
            }
            w.flush()?;
            if let Some(path) = &csv {
                let mut out = output(&Some(path.clone()))?;
                writeln!(out, "{}", BenchReport::csv_header())?;
                for r in &reports {
                    writeln!(out, "{}", r.csv_row())?;
                }
                out.flush()?;
            }
            for s in summarize(&reports) {
                eprintln!("{}", serde_json::to_string(&s)?);
            }
            for r in reports.iter().filter(|r| r.mismatch()) {
                let diff = r.oracle.as_ref().and_then(|o| o.first_difference.clone());
                eprintln!(
                    "query {} ({}): oracle mismatch: {}",
                    r.query_id,
                    r.config.variant,
                    diff.unwrap_or_default()
                );
            }
            if reports.iter().any(|r| r.mismatch() || r.error.is_some()) {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::ExtractQueries {
            graph,
            count,
            nodes,
            seed,
            variable_fraction,
            unlabeled_edges,
            out,
        } => {
            let (g, dict) = load_graph(&graph)?;
            let cfg = ExtractConfig {
                nodes,
                variable_fraction,
                labeled_edges: !unlabeled_edges,
                ..ExtractConfig::default()
            };
            let extracted = extract_queries(&g, &cfg, count, seed)?;
            let mut w = output(&out)?;
            for (i, ex) in extracted.iter().enumerate() {
                write!(
                    w,
                    "{}",
                    write_query(&ex.query, Some(&format!("q{i}")), &dict)
                )?;
            }
            w.flush()?;
        }
        Command::Verify {
            graph,
            queries,
            matcher,
            compression,
            force,
        } => {
            let (g, dict) = load_graph(&graph)?;
            let queries = load_queries(&queries, &dict)?;
            let cg = compression.run(&g)?;
            let cfg = matcher.config();
            let ocfg = OracleConfig {
                homomorphism: cfg.homomorphism,
                force,
            };
            let mut failures = 0;
            for (id, q) in &queries {
                let ours =
                    run_match(q, &g, cg.as_ref(), &cfg).with_context(|| format!("query {id}"))?;
                let expected =
                    oracle_match(q, &g, ocfg).with_context(|| format!("oracle on query {id}"))?;
                let diff = gpsm::bench::first_difference(&ours.table, &expected);
                println!(
                    "{}",
                    json!({"query": id, "rows": ours.table.len(), "oracle_rows": expected.len(),
                           "agree": diff.is_none(), "first_difference": diff})
                );
                failures += diff.is_some() as usize;
            }
            if failures > 0 {
                eprintln!(
                    "{failures} of {} queries disagree with the oracle",
                    queries.len()
                );
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
