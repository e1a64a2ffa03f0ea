//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p minutekit-cli --test acceptance -- --nocapture`
//! to see the report.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use minutekit::argmine::{
    build_structure, render, ArgRelation, ArgumentGraph, PropLabel, Proposition, RelationKind,
};
use minutekit::eval::{aggregate_over_refs, rouge_l, rouge_n, RefAggregation, RougeMetric};
use minutekit::features::{
    chunked_semantic_similarity, jaccard_text, ne_overlap, tfidf_cosine_text, ExactMatch, IdfTable,
};
use minutekit::learn::{cross_validate, majority_baseline, Dataset, HyperParams, LossKind};
use minutekit::minuteparse::{
    oracle_actions, parse, read_lines, LineLabel, MinuteTree, OraclePredictor,
};
use minutekit::segment::{
    agreement_rate, chunk_token_counts, merge_chunk_labels, BioLabel, Block, BlockPartition,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Absolute tolerance for closed-form values.
const FORMULA_TOL: f64 = 1e-9;
/// Semantic-similarity oracle tolerance.
const SEMSIM_TOL: f64 = 1e-9;
const MIN_ACCURACY_GAIN: f64 = 0.10;
const MIN_F1: f64 = 0.85;
/// Tolerance for max-mode f1 ≥ average-mode f1.
const AGGREGATION_TOL: f64 = 1e-12;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn close(name: &str, got: f64, want: f64) -> Result<(), String> {
    if (got - want).abs() <= FORMULA_TOL {
        Ok(())
    } else {
        Err(format!("{name}: got {got}, want {want}"))
    }
}

fn c1_formula_oracles() -> Outcome {
    let b1 = BlockPartition::from_blocks(vec![Block::new(0, 4), Block::new(4, 8)]);
    let b2 = BlockPartition::from_blocks(vec![Block::new(0, 6), Block::new(6, 8)]);
    let agree = agreement_rate(&b1, &b2).map_err(|e| e.to_string())?;
    close("agreement a_12", agree.a_12, 0.75)?;

    let e1 = ["PERSON1", "PERSON2", "ORGANIZATION3"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let e2 = ["PERSON1", "PROJECT7"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    close("ne overlap", ne_overlap(&e1, &e2), 0.25)?;

    let flat = IdfTable {
        weights: Default::default(),
        doc_count: 0,
        default_weight: 1.0,
    };
    close(
        "tf-idf cosine",
        tfidf_cosine_text("alpha beta beta", "alpha beta gamma", &flat),
        3.0 / 15f64.sqrt(),
    )?;
    close(
        "jaccard",
        jaccard_text("alpha beta", "alpha beta gamma"),
        2.0 / 3.0,
    )?;
    close(
        "rouge-1 f1",
        rouge_n("the cat sat", "the cat", 1).unwrap().f1,
        0.8,
    )?;
    close("rouge-l recall", rouge_l("a b c d", "a c b d").recall, 0.75)?;
    Ok("6 closed-form values within 1e-9".into())
}

fn c2_chunk_merge() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (max_tokens, stride) = (4096, 1024);
    let mut seams = 0;
    for case in 0..200 {
        let budget = rng.random_range(1..=12_000usize);
        let mut counts = Vec::new();
        let mut total = 0;
        while total < budget {
            let c = rng.random_range(1..=60usize).min(budget - total);
            counts.push(c);
            total += c;
        }
        let chunks = chunk_token_counts(&counts, max_tokens, stride).map_err(|e| e.to_string())?;
        let preds: Vec<_> = chunks
            .iter()
            .map(|c| {
                let labels = (0..c.len())
                    .map(|_| [BioLabel::B, BioLabel::I, BioLabel::O][rng.random_range(0..3)])
                    .collect::<Vec<_>>();
                (*c, labels)
            })
            .collect();
        let merged = merge_chunk_labels(&preds).map_err(|e| format!("case {case}: {e}"))?;
        if merged.labels.len() != counts.len() {
            return Err(format!(
                "case {case}: {} labels for {} sentences",
                merged.labels.len(),
                counts.len()
            ));
        }
        for (i, label) in merged.labels.iter().enumerate() {
            let first = preds
                .iter()
                .find(|(c, _)| c.start <= i && i < c.end)
                .ok_or(format!("case {case}: sentence {i} in no chunk"))?;
            if first.1[i - first.0.start] != *label {
                return Err(format!(
                    "case {case}: sentence {i} does not carry its earliest chunk's label"
                ));
            }
        }
        seams += chunks.len().saturating_sub(1);
    }
    Ok(format!("200 transcripts, {seams} seams checked"))
}

/// Pre-order random tree with optional header fields.
fn random_tree(rng: &mut ChaCha8Rng, max_depth: usize, max_lines: usize) -> MinuteTree {
    let mut tree = MinuteTree::default();
    let mut pos = 0;
    for (label, text) in [
        (LineLabel::Title, "Minutes of the planning call"),
        (LineLabel::Date, "Date: 2021-07-15"),
        (LineLabel::Attendees, "Attendees: PERSON1, PERSON2"),
    ] {
        if rng.random_bool(0.5) {
            tree.record(label, pos, text);
            pos += 1;
        }
    }
    let mut open: Vec<usize> = Vec::new();
    for _ in 0..rng.random_range(0..=max_lines - pos) {
        let depth = rng.random_range(1..=(open.len() + 1).min(max_depth));
        open.truncate(depth - 1);
        let id = tree.attach(
            open.last().copied(),
            pos,
            &format!("line {pos} v{}", rng.random_range(0..9)),
        );
        open.push(id);
        pos += 1;
    }
    tree.finish();
    tree
}

fn c3_parser_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut lines_total = 0;
    for case in 0..50 {
        let tree = random_tree(&mut rng, 4, 60);
        let lines = read_lines(&tree.render());
        let actions = oracle_actions(&tree, &lines).map_err(|e| format!("case {case}: {e}"))?;
        let out = parse(&lines, &OraclePredictor::new(actions))
            .map_err(|e| format!("case {case}: {e}"))?;
        if out.tree != tree {
            return Err(format!("case {case}: rebuilt tree differs"));
        }
        lines_total += lines.len();
    }
    Ok(format!("50/50 trees rebuilt exactly ({lines_total} lines)"))
}

fn graph(labels: Vec<PropLabel>, relations: Vec<ArgRelation>) -> ArgumentGraph {
    let props = (0..labels.len())
        .map(|i| Proposition {
            text: format!("S{i}"),
            index: i,
        })
        .collect();
    ArgumentGraph::new(props, labels, relations).expect("valid graph")
}

fn c4_structure_builder() -> Outcome {
    let g = graph(
        vec![
            PropLabel::Fact,
            PropLabel::Disc,
            PropLabel::Fact,
            PropLabel::Task,
        ],
        vec![ArgRelation {
            src: 2,
            dst: 1,
            kind: RelationKind::Reason,
        }],
    );
    let text = render(&build_structure(&g));
    let want = "* S0\n- Disc: S1\n- - Fact: S2\n* S3";
    if text.trim_end() != want {
        return Err(format!("fixture renders as {text:?}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let kinds = [PropLabel::Task, PropLabel::Fact, PropLabel::Disc];
    for case in 0..200 {
        let n = rng.random_range(1..25);
        let labels = (0..n).map(|_| kinds[rng.random_range(0..3)]).collect();
        let mut relations = Vec::new();
        for src in 1..n {
            if rng.random_bool(0.4) {
                relations.push(ArgRelation {
                    src,
                    dst: rng.random_range(0..src),
                    kind: RelationKind::Reason,
                });
            }
        }
        let sm = build_structure(&graph(labels, relations));
        let order: Vec<usize> = sm.preorder().iter().map(|item| item.index).collect();
        if order != (0..n).collect::<Vec<_>>() {
            return Err(format!("case {case}: pre-order {order:?}"));
        }
    }
    Ok("fixture renders exactly; 200 random graphs keep index order".into())
}

/// Per-chunk unigram F1 where a token matches if it occurs anywhere in
/// the paired chunk.
fn unigram_f1_oracle(a: &[&str], b: &[&str], n: usize) -> f64 {
    let bounds = |len: usize, i: usize| {
        let (base, extra) = (len / n, len % n);
        let s = i * base + i.min(extra);
        (s, s + base + usize::from(i < extra))
    };
    let mut sum = 0.0;
    for i in 0..n {
        let (s1, e1) = bounds(a.len(), i);
        let (s2, e2) = bounds(b.len(), i);
        let (x, y) = (&a[s1..e1], &b[s2..e2]);
        if x.is_empty() || y.is_empty() {
            continue;
        }
        let sx: HashSet<_> = x.iter().collect();
        let sy: HashSet<_> = y.iter().collect();
        let r = x.iter().filter(|t| sy.contains(t)).count() as f64 / x.len() as f64;
        let p = y.iter().filter(|t| sx.contains(t)).count() as f64 / y.len() as f64;
        if p + r > 0.0 {
            sum += 2.0 * p * r / (p + r);
        }
    }
    sum / n as f64
}

fn c5_semsim_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let vocab: Vec<String> = (0..15).map(|i| format!("w{i}")).collect();
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let doc = |rng: &mut ChaCha8Rng| -> Vec<&str> {
            (0..rng.random_range(0..60))
                .map(|_| vocab[rng.random_range(0..15)].as_str())
                .collect()
        };
        let (a, b) = (doc(&mut rng), doc(&mut rng));
        let got = chunked_semantic_similarity(&a.join(" "), &b.join(" "), 4, &ExactMatch)
            .map_err(|e| e.to_string())?;
        let want = unigram_f1_oracle(&a, &b, 4);
        worst = worst.max((got - want).abs());
        if (got - want).abs() > SEMSIM_TOL {
            return Err(format!("case {case}: {got} vs oracle {want}"));
        }
    }
    Ok(format!("100 pairs, max deviation {worst:.1e}"))
}

/// 400 pairs, 40% TRUE; TRUE rows draw higher tf-idf, Jaccard and NE values.
fn synthetic_pairs(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..400 {
        let y = i % 5 < 2;
        let (lo, hi) = if y { (0.35, 1.0) } else { (0.0, 0.65) };
        let ne = if !y && rng.random_bool(0.5) {
            0.0
        } else {
            rng.random_range(lo..hi)
        };
        let date_p = if y { 0.7 } else { 0.25 };
        let mut fv = vec![rng.random_range(lo..hi), rng.random_range(lo..hi), ne];
        for _ in 0..4 {
            fv.push(if rng.random_bool(date_p) { 1.0 } else { 0.0 });
        }
        fv.push(rng.random_range(if y { 0.4..1.0 } else { 0.2..0.8 }));
        xs.push(fv);
        ys.push(y);
    }
    Dataset::from_xy(xs, ys)
}

fn c6_classifier() -> Outcome {
    let ds = synthetic_pairs(6);
    let hp = HyperParams::default();
    let run = || cross_validate(&ds, 10, &hp, LossKind::Logistic, 6).map_err(|e| e.to_string());
    let first = run()?;
    let again = run()?;
    if first != again {
        return Err("reruns differ".into());
    }
    let base = majority_baseline(&ds.labels());
    let m = first.mean_metrics;
    let gain = m.accuracy - base.accuracy;
    let detail = format!(
        "cv accuracy {:.3} vs majority {:.3} (gain {gain:.3}), f1 {:.3}",
        m.accuracy, base.accuracy, m.f1
    );
    if gain >= MIN_ACCURACY_GAIN && m.f1 >= MIN_F1 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c7_end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let graph_path = dir.path().join("graph.json");
    let out = Command::new(env!("CARGO_BIN_EXE_minutekit"))
        .arg("minute")
        .arg(fixtures().join("transcript_200.txt"))
        .arg("--dump-graph")
        .arg(&graph_path)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "exit {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    let grammar = regex::Regex::new(r"^\*|^(- )+(Task|Fact|Disc): ").unwrap();
    let body: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with("DATE: ") && !l.starts_with("ATTENDEES: "))
        .collect();
    if let Some(bad) = body.iter().find(|l| !grammar.is_match(l)) {
        return Err(format!("line outside the grammar: {bad:?}"));
    }
    let blocks: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&graph_path).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let blocks = blocks.as_array().ok_or("graph dump is not a list")?;
    if blocks.len() < 2 {
        return Err(format!("{} block(s)", blocks.len()));
    }
    let mut tasks = 0;
    for b in blocks {
        let roots: HashSet<u64> = b["minute"]["roots"]
            .as_array()
            .ok_or("no roots")?
            .iter()
            .filter_map(|r| r["index"].as_u64())
            .collect();
        for (i, label) in b["graph"]["labels"]
            .as_array()
            .ok_or("no labels")?
            .iter()
            .enumerate()
        {
            if label == "Task" {
                tasks += 1;
                if !roots.contains(&(i as u64)) {
                    return Err(format!(
                        "Task proposition {i} of block {} is not a root",
                        b["block"]
                    ));
                }
            }
        }
    }
    Ok(format!(
        "{} blocks, {} body lines, {tasks} Task roots",
        blocks.len(),
        body.len()
    ))
}

fn c8_max_vs_average() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let words = [
        "plan", "budget", "ship", "review", "team", "date", "risk", "demo",
    ];
    let text = |rng: &mut ChaCha8Rng| -> String {
        (0..rng.random_range(0..15))
            .map(|_| words[rng.random_range(0..words.len())])
            .collect::<Vec<_>>()
            .join(" ")
    };
    for case in 0..100 {
        let cand = text(&mut rng);
        let refs: Vec<String> = (0..rng.random_range(2..5))
            .map(|_| text(&mut rng))
            .collect();
        let refs: Vec<&str> = refs.iter().map(String::as_str).collect();
        for metric in RougeMetric::ALL {
            let avg = aggregate_over_refs(&cand, &refs, metric, RefAggregation::Average)
                .map_err(|e| e.to_string())?;
            let max = aggregate_over_refs(&cand, &refs, metric, RefAggregation::Max)
                .map_err(|e| e.to_string())?;
            if max.f1 + AGGREGATION_TOL < avg.f1 {
                return Err(format!(
                    "case {case} {}: max {} < average {}",
                    metric.name(),
                    max.f1,
                    avg.f1
                ));
            }
        }
    }
    Ok("100 cases x 3 metrics".into())
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        (
            "formula oracles",
            Duration::from_secs(1),
            c1_formula_oracles,
        ),
        ("chunk/merge suite", Duration::from_secs(10), c2_chunk_merge),
        (
            "transition-parser round-trip",
            Duration::from_secs(5),
            c3_parser_round_trip,
        ),
        (
            "structure builder",
            Duration::from_secs(5),
            c4_structure_builder,
        ),
        (
            "semantic-similarity oracle",
            Duration::from_secs(5),
            c5_semsim_oracle,
        ),
        ("classifier suite", Duration::from_secs(30), c6_classifier),
        ("end-to-end minute", Duration::from_secs(10), c7_end_to_end),
        (
            "max-vs-average aggregation",
            Duration::from_secs(5),
            c8_max_vs_average,
        ),
    ];
    let mut failed = Vec::new();
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= limit => (true, d),
            Ok(d) => (false, format!("{d}; over the {limit:?} limit")),
            Err(d) => (false, d),
        };
        println!(
            "{} [{}] {name} ({:.3}s / {:?}): {detail}",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            took.as_secs_f64(),
            limit
        );
        if !ok {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
