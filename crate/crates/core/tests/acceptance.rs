//! End-to-end acceptance suite. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line, in order, with its timing.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{commonsense, instance, labeled};
use gpsm::bench::{ablation_variants, run_bench, summarize, BenchConfig};
use gpsm::compress::{
    compress, expand_matches, match_compressed, weighted_candidate, CompressionConfig,
};
use gpsm::extract::{extract_queries, ExtractConfig};
use gpsm::graph::GraphPair;
use gpsm::matcher::{
    check_candidates, match_all, match_query, MatchConfig, RefineRounds, SearchTarget,
};
use gpsm::oracle::{oracle_all, oracle_match, OracleConfig};
use gpsm::primitives::{
    compact, exclusive_prefix_sum, merge_sorted, sort_pairs, two_step_emit, two_step_emit_split,
};
use gpsm::query::{Binding, QueryGraph};
use gpsm::synth::{generate, SynthConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> std::result::Result<(), String> {
    ensure(elapsed < limit, || {
        format!("took {elapsed:.2?}, limit {limit:?}")
    })
}

fn labeled_fixture() -> Check {
    let t = Instant::now();
    let (g, _, q) = labeled();
    let out = match_query(&q, &g, &MatchConfig::default()).map_err(|e| e.to_string())?;
    // u1..u6 -> v1, v2, v3, v6, v7, v8
    ensure(out.table.rows == vec![vec![1, 2, 3, 6, 7, 8]], || {
        format!("rows {:?}", out.table.rows)
    })?;
    let u3 = compact(&check_candidates(&q, 2, SearchTarget::plain(&g), true));
    ensure(u3 == vec![3, 4], || format!("C(u3) = {u3:?}"))?;
    within(t.elapsed(), Duration::from_secs(1))?;
    Ok(format!("1 match, C(u3) = {{v3, v4}}, {:.2?}", t.elapsed()))
}

fn commonsense_compression() -> Check {
    let t = Instant::now();
    let (g, dict, q) = commonsense();
    let cg = compress(&g, &CompressionConfig::levels(&[1.0])).map_err(|e| e.to_string())?;
    let id = |s: &str| dict.concept_id(s).unwrap();
    let expected: Vec<Vec<u32>> = vec![
        vec![id("Adult"), id("Male")],
        vec![2],
        vec![3],
        vec![4],
        vec![5],
        vec![id("Cake"), id("Chocolate")],
        vec![8],
        vec![id("Bull"), id("House")],
        vec![11],
    ];
    ensure(
        expected
            .iter()
            .flatten()
            .copied()
            .eq([0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11]),
        || "fixture ids drifted".into(),
    )?;
    ensure(cg.mapping.groups == expected, || {
        format!("mapping {:?}", cg.mapping.groups)
    })?;
    // ?a has out-degree 2; u7' = {Bull, House} has node weight 0 and two
    // weight-1 edges, so its capacity 2 admits it
    let a = q.node_index("?a").unwrap();
    ensure(
        cg.weighted.weight(7) == 2 && weighted_candidate(&q, a, 7, &cg),
        || format!("u7' weight {} not accepted", cg.weighted.weight(7)),
    )?;
    let got = match_compressed(&q, &g, &cg, &MatchConfig::default()).map_err(|e| e.to_string())?;
    let want = match_query(&q, &g, &MatchConfig::default()).map_err(|e| e.to_string())?;
    ensure(got.table == want.table && want.table.len() == 1, || {
        format!(
            "compressed {:?} vs plain {:?}",
            got.table.rows, want.table.rows
        )
    })?;
    within(t.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "merged {{v0,v1}} {{v6,v7}} {{v9,v10}}, u7' accepted, {:.2?}",
        t.elapsed()
    ))
}

fn label_count(g: &GraphPair) -> usize {
    let mut labels: Vec<u32> = g.outgoing.node_labels().map_or(Vec::new(), <[u32]>::to_vec);
    labels.sort_unstable();
    labels.dedup();
    labels.len()
}

fn oracle_equivalence() -> Check {
    let t = Instant::now();
    let mut plain_ok = 0;
    let mut compressed_ok = 0;
    let mut failures = Vec::new();
    for seed in 0..200 {
        let inst = instance(seed);
        let (n, m) = (inst.g.node_count(), inst.g.edge_count());
        ensure(
            n <= 300 && m as f64 / n as f64 <= 8.0 && label_count(&inst.g) <= 20,
            || format!("seed {seed}: instance outside bounds ({n} nodes, {m} edges)"),
        )?;
        ensure((4..=8).contains(&inst.q.node_count()), || {
            format!("seed {seed}: {} query nodes", inst.q.node_count())
        })?;
        let expected =
            oracle_match(&inst.q, &inst.g, OracleConfig::default()).map_err(|e| e.to_string())?;
        let cfg = MatchConfig::default();
        match match_query(&inst.q, &inst.g, &cfg) {
            Ok(out) if out.table == expected => plain_ok += 1,
            _ => failures.push(format!("plain {seed}")),
        }
        let cg =
            compress(&inst.g, &CompressionConfig::levels(&[0.8])).map_err(|e| e.to_string())?;
        match match_compressed(&inst.q, &inst.g, &cg, &cfg) {
            Ok(out) if out.table == expected => compressed_ok += 1,
            _ => failures.push(format!("compressed {seed}")),
        }
    }
    ensure(failures.is_empty(), || {
        format!("disagreements: {failures:?}")
    })?;
    within(t.elapsed(), Duration::from_secs(300))?;
    Ok(format!(
        "plain {plain_ok}/200, compressed {compressed_ok}/200, {:.2?}",
        t.elapsed()
    ))
}

fn soundness_properties() -> Check {
    let t = Instant::now();
    let mut pruned = 0usize;
    let mut lost = 0usize;
    let mut images = 0usize;
    for seed in 0..200 {
        let inst = instance(seed);
        let all =
            oracle_all(&inst.q, &inst.g, OracleConfig::default()).map_err(|e| e.to_string())?;
        let cols: Vec<usize> = (0..inst.q.node_count())
            .map(|u| all.column(&Binding::Node(u)).unwrap())
            .collect();
        for rounds in [
            RefineRounds::Fixed(0),
            RefineRounds::Fixed(1),
            RefineRounds::Fixpoint,
        ] {
            let cfg = MatchConfig {
                refine_rounds: rounds,
                ..MatchConfig::default()
            };
            let out = match_all(&inst.q, SearchTarget::plain(&inst.g), &cfg)
                .map_err(|e| e.to_string())?;
            for row in &all.rows {
                for (u, &c) in cols.iter().enumerate() {
                    images += 1;
                    if !out.candidates.contains(u, row[c]) {
                        pruned += 1;
                    }
                }
            }
        }
        let cg =
            compress(&inst.g, &CompressionConfig::levels(&[0.8])).map_err(|e| e.to_string())?;
        let hom = MatchConfig {
            homomorphism: true,
            ..MatchConfig::default()
        };
        let rows = match_all(&inst.q, cg.target(), &hom)
            .map_err(|e| e.to_string())?
            .table;
        let expanded = expand_matches(&rows, &cg.mapping, &inst.q, &inst.g, true, usize::MAX)
            .map_err(|e| e.to_string())?;
        lost += all
            .rows
            .iter()
            .filter(|r| expanded.rows.binary_search(r).is_err())
            .count();
    }
    ensure(pruned == 0 && lost == 0, || {
        format!("{pruned} pruned images, {lost} matches lost in expansion")
    })?;
    Ok(format!(
        "0 violations over {images} images, {:.2?}",
        t.elapsed()
    ))
}

fn ablation() -> Check {
    let t = Instant::now();
    let (g, _) = generate(&SynthConfig {
        nodes: 100_000,
        avg_degree: 4.0,
        exponent: 2.8,
        node_labels: 64,
        edge_labels: 4,
        seed: 1,
    })
    .map_err(|e| e.to_string())?;
    let ecfg = ExtractConfig {
        nodes: 10,
        ..ExtractConfig::default()
    };
    let queries: Vec<(String, QueryGraph)> = extract_queries(&g, &ecfg, 100, 2)
        .map_err(|e| e.to_string())?
        .into_iter()
        .enumerate()
        .map(|(i, e)| (format!("q{i}"), e.query))
        .collect();
    let setup = t.elapsed();

    let single = MatchConfig {
        threads: 1,
        ..MatchConfig::default()
    };
    let mut variants = ablation_variants(&single);
    variants.retain(|(name, _)| name != "k1-forward");
    let cfg = BenchConfig {
        dataset: "synthetic-1e5".into(),
        variants,
        oracle_check: false,
        seed: 1,
    };
    let t_suite = Instant::now();
    let reports = run_bench(&g, None, &queries, &cfg);
    let suite = t_suite.elapsed();
    let errors: Vec<&str> = reports.iter().filter_map(|r| r.error.as_deref()).collect();
    ensure(errors.is_empty(), || {
        format!("{} failed queries, first: {}", errors.len(), errors[0])
    })?;

    let summary = summarize(&reports);
    let get = |name: &str| summary.iter().find(|s| s.variant == name).unwrap();
    let total = |name: &str| -> f64 {
        reports
            .iter()
            .filter(|r| r.config.variant == name)
            .map(|r| r.total_us as f64)
            .sum()
    };
    let (k0, k1) = (get("k0"), get("k1"));
    ensure(
        k1.median_intermediate_rows <= k0.median_intermediate_rows,
        || {
            format!(
                "median rows k1 {} > k0 {}",
                k1.median_intermediate_rows, k0.median_intermediate_rows
            )
        },
    )?;
    let best = ["k0", "k1", "fixpoint"]
        .map(total)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let ratio = total("k1") / best;
    ensure(ratio <= 1.5, || {
        format!("k1 time is {ratio:.2}x the best variant")
    })?;
    ensure(suite < Duration::from_secs(60), || {
        format!("suite took {suite:.2?}")
    })?;

    // byte-identical output across thread counts
    let threaded = MatchConfig {
        threads: 4,
        ..MatchConfig::default()
    };
    for (id, q) in &queries {
        let a = match_query(q, &g, &single)
            .map_err(|e| e.to_string())?
            .table;
        let b = match_query(q, &g, &threaded)
            .map_err(|e| e.to_string())?
            .table;
        let bytes =
            |t: &gpsm::matcher::MatchTable| format!("{:?}\n{:?}", t.schema, t.rows).into_bytes();
        ensure(bytes(&a) == bytes(&b), || {
            format!("{id}: 1 and 4 threads differ")
        })?;
    }
    Ok(format!(
        "median rows k0 {} k1 {}, k1/best time {ratio:.2}, suite {suite:.2?} (setup {setup:.2?}), threads identical",
        k0.median_intermediate_rows, k1.median_intermediate_rows
    ))
}

fn primitives() -> Check {
    let t = Instant::now();
    const N: usize = 200_000;
    let mut rng = ChaCha8Rng::seed_from_u64(6);

    let xs: Vec<usize> = (0..N).map(|_| rng.gen_range(0..50)).collect();
    let mut acc = 0;
    let mut scan = vec![0];
    for &x in &xs {
        acc += x;
        scan.push(acc);
    }
    ensure(exclusive_prefix_sum(&xs).unwrap() == scan, || {
        "prefix sum".into()
    })?;

    let flags: Vec<bool> = (0..N).map(|_| rng.gen_bool(0.3)).collect();
    let mut kept = Vec::new();
    for (i, &f) in flags.iter().enumerate() {
        if f {
            kept.push(i as u32);
        }
    }
    ensure(compact(&flags) == kept, || "compact".into())?;

    let pairs: Vec<(u32, u32)> = (0..N as u32).map(|i| (rng.gen_range(0..1000), i)).collect();
    let mut sorted = pairs.clone();
    sort_pairs(&mut sorted);
    // insertion by key through a counting pass keeps equal keys in input order
    let mut buckets = vec![Vec::new(); 1000];
    for &(k, v) in &pairs {
        buckets[k as usize].push((k, v));
    }
    let stable: Vec<(u32, u32)> = buckets.into_iter().flatten().collect();
    ensure(sorted == stable, || "sort_pairs".into())?;

    let (left, right) = stable.split_at(N / 2);
    let mut l = left.to_vec();
    let mut r = right.to_vec();
    l.sort_by_key(|p| p.0);
    r.sort_by_key(|p| p.0);
    let merged = merge_sorted(&l, &r);
    let mut reference = l.clone();
    reference.extend_from_slice(&r);
    reference.sort_by_key(|p| p.0);
    ensure(merged == reference, || "merge_sorted".into())?;

    let items: Vec<u32> = (0..N as u32).collect();
    let width = |i: &u32| (*i % 7) as usize;
    let out = two_step_emit(&items, width, |i, dst: &mut [u64]| {
        for (k, d) in dst.iter_mut().enumerate() {
            *d = *i as u64 * 10 + k as u64;
        }
        dst.len()
    })
    .unwrap();
    let mut flat = Vec::new();
    for i in &items {
        for k in 0..width(i) {
            flat.push(*i as u64 * 10 + k as u64);
        }
    }
    ensure(out.payload == flat, || "two_step_emit".into())?;

    // variable-length ranges, cut at different thresholds
    let lens: Vec<usize> = (0..N / 10)
        .map(|_| {
            if rng.gen_bool(0.01) {
                5000
            } else {
                rng.gen_range(0..40)
            }
        })
        .collect();
    let keep = |i: usize, j: usize| (i * 31 + j).is_multiple_of(3);
    let emit = |threshold: usize| {
        two_step_emit_split(
            &(0..lens.len()).collect::<Vec<_>>(),
            |&i| lens[i],
            threshold,
            |&i, range| range.filter(|&j| keep(i, j)).count(),
            |&i, range, dst: &mut [(u32, u32)]| {
                let mut k = 0;
                for j in range {
                    if keep(i, j) {
                        dst[k] = (i as u32, j as u32);
                        k += 1;
                    }
                }
                k
            },
        )
        .unwrap()
    };
    let base = emit(usize::MAX);
    let mut expected = Vec::new();
    for (i, &len) in lens.iter().enumerate() {
        for j in 0..len {
            if keep(i, j) {
                expected.push((i as u32, j as u32));
            }
        }
    }
    ensure(base.payload == expected, || "two_step_emit_split".into())?;
    for threshold in [1, 32] {
        ensure(emit(threshold) == base, || {
            format!("split threshold {threshold} differs")
        })?;
    }

    // the matcher's candidate-edge collection under the same thresholds
    let (g, _) = generate(&SynthConfig {
        nodes: 20_000,
        exponent: 2.2,
        node_labels: 8,
        seed: 6,
        ..SynthConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let qs = extract_queries(
        &g,
        &ExtractConfig {
            nodes: 4,
            variable_fraction: 0.75,
            ..ExtractConfig::default()
        },
        10,
        6,
    )
    .map_err(|e| e.to_string())?;
    for (i, ex) in qs.iter().enumerate() {
        let run = |threshold| {
            let cfg = MatchConfig {
                degree_split_threshold: threshold,
                ..MatchConfig::default()
            };
            match_query(&ex.query, &g, &cfg)
                .map(|o| o.table)
                .map_err(|e| e.to_string())
        };
        let reference = run(usize::MAX)?;
        for threshold in [1, 32] {
            ensure(run(threshold)? == reference, || {
                format!("query {i}: threshold {threshold} differs")
            })?;
        }
    }
    Ok(format!(
        "{N} elements per primitive, thresholds 1/32/inf identical, {:.2?}",
        t.elapsed()
    ))
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn scalability() -> Check {
    let t = Instant::now();
    let sizes = [10_000usize, 31_623, 100_000, 316_228, 1_000_000];
    let synth = |nodes| SynthConfig {
        nodes,
        avg_degree: 4.0,
        exponent: 2.8,
        node_labels: 64,
        edge_labels: 4,
        seed: 1,
    };
    let (small, _) = generate(&synth(sizes[0])).map_err(|e| e.to_string())?;
    let q = extract_queries(&small, &ExtractConfig::default(), 1, 3)
        .map_err(|e| e.to_string())?
        .remove(0)
        .query;
    let cfg = MatchConfig {
        threads: 1,
        ..MatchConfig::default()
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut shown = Vec::new();
    for &n in &sizes {
        let (g, _) = generate(&synth(n)).map_err(|e| e.to_string())?;
        let mut runs = Vec::new();
        for _ in 0..3 {
            let s = Instant::now();
            match_query(&q, &g, &cfg).map_err(|e| e.to_string())?;
            runs.push(s.elapsed().as_secs_f64());
        }
        runs.sort_by(f64::total_cmp);
        xs.push((n as f64).ln());
        ys.push(runs[1].ln());
        shown.push(format!("{n}:{:.1}ms", runs[1] * 1e3));
    }
    let s = slope(&xs, &ys);
    ensure(s < 2.0, || {
        format!("log-log slope {s:.2} ({})", shown.join(" "))
    })?;
    within(t.elapsed(), Duration::from_secs(600))?;
    Ok(format!(
        "slope {s:.2} ({}), {:.2?}",
        shown.join(" "),
        t.elapsed()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("labeled fixture", labeled_fixture),
        ("commonsense compression", commonsense_compression),
        ("oracle equivalence", oracle_equivalence),
        ("soundness properties", soundness_properties),
        ("refinement ablation", ablation),
        ("primitives", primitives),
        ("scalability", scalability),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
