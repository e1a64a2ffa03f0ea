//! Command definitions and their implementations.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand};
use minutekit::eval::{aggregate_scores, RefAggregation, RougeMetric, RougeScore};
use minutekit::features::{build_feature_vector, fit_idf, FeatureVector, FEATURE_NAMES};
use minutekit::learn::{
    classification_metrics, cross_validate, hyperparam_search, majority_baseline, predict_ensemble,
    Dataset, Metrics, Row,
};
use minutekit::minuteparse::{parse, read_lines, RulePredictor};
use minutekit::text::parse_transcript;
use minutekit::{Document, Transcript};
use serde::Serialize;
use serde_json::json;

use crate::backends::Backends;
use crate::config::Config;
use crate::error::{CliResult, Exit, OrExit};
use crate::manifest::{load_document, read_manifest, DocumentCache, PairRow, Task};
use crate::model::PairModel;
use crate::pipeline;

#[derive(Debug, Parser)]
#[command(
    name = "minutekit",
    version,
    about = "Meeting minutes from transcripts, and minute/transcript matching"
)]
pub struct Cli {
    /// JSON config file; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `learn.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a structured minute from a transcript.
    Minute {
        transcript: PathBuf,
        /// Also write per-block argument graphs as JSON.
        #[arg(long)]
        dump_graph: Option<PathBuf>,
    },
    /// Topic segmentation report as JSON.
    Segment { transcript: PathBuf },
    /// Per-block summaries as JSON.
    Summarize { transcript: PathBuf },
    /// Recover the structure of an existing minute as JSON.
    ParseMinute {
        minute: PathBuf,
        /// Include the parser's action sequence.
        #[arg(long)]
        trace: bool,
    },
    /// The eight pair features as JSON.
    Features {
        doc1: PathBuf,
        doc2: PathBuf,
        #[arg(long, value_enum, default_value = "C")]
        task: Task,
        /// Take idf weights and feature settings from a trained model.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train a pair classifier from a labeled manifest; needs --out.
    Train {
        manifest: PathBuf,
        #[arg(long, value_enum)]
        task: Task,
    },
    /// Score manifest pairs as TSV rows `pair_id score label`.
    Classify { model: PathBuf, manifest: PathBuf },
    /// ROUGE of candidate minutes against reference minutes.
    Eval {
        candidates: PathBuf,
        references: PathBuf,
        #[arg(long, value_enum, default_value = "max")]
        mode: Mode,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Average,
    Max,
}

impl From<Mode> for RefAggregation {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Average => Self::Average,
            Mode::Max => Self::Max,
        }
    }
}

fn emit(out: Option<&Path>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, content)
            .with_context(|| format!("writing {}", path.display()))
            .or_exit(Exit::Input),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn read_transcript(path: &Path) -> CliResult<Transcript> {
    let raw = fs::read_to_string(path)
        .with_context(|| format!("reading transcript {}", path.display()))
        .or_exit(Exit::Input)?;
    parse_transcript(&path.display().to_string(), &raw)
        .with_context(|| format!("parsing transcript {}", path.display()))
        .or_exit(Exit::Input)
}

pub fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = Config::load_or_default(cli.config.as_deref()).or_exit(Exit::Config)?;
    if let Some(seed) = cli.seed {
        cfg.learn.seed = seed;
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::Minute {
            transcript,
            dump_graph,
        } => {
            let t = read_transcript(&transcript)?;
            let backends = Backends::from_config(&cfg).or_exit(Exit::Config)?;
            let result = pipeline::run_minute(&t, &backends, &cfg).or_exit(Exit::Data)?;
            if let Some(path) = dump_graph {
                fs::write(&path, to_json(&result.blocks))
                    .with_context(|| format!("writing {}", path.display()))
                    .or_exit(Exit::Input)?;
            }
            emit(out, &result.to_text())
        }
        Command::Segment { transcript } => {
            let t = read_transcript(&transcript)?;
            let backends = Backends::from_config(&cfg).or_exit(Exit::Config)?;
            let seg = pipeline::segment(&t, &backends, &cfg).or_exit(Exit::Data)?;
            emit(out, &to_json(&seg))
        }
        Command::Summarize { transcript } => {
            let t = read_transcript(&transcript)?;
            let backends = Backends::from_config(&cfg).or_exit(Exit::Config)?;
            let seg = pipeline::segment(&t, &backends, &cfg).or_exit(Exit::Data)?;
            let blocks =
                pipeline::summarize_blocks(&t, &seg, &backends, &cfg).or_exit(Exit::Data)?;
            let report: Vec<_> = blocks
                .into_iter()
                .map(|(block, dropped_lines, summary)| {
                    json!({"block": block, "dropped_lines": dropped_lines, "summary": summary})
                })
                .collect();
            emit(out, &to_json(&report))
        }
        Command::ParseMinute { minute, trace } => {
            let text = fs::read_to_string(&minute)
                .with_context(|| format!("reading minute {}", minute.display()))
                .or_exit(Exit::Input)?;
            let result = parse(&read_lines(&text), &RulePredictor).or_exit(Exit::Data)?;
            let mut value = serde_json::to_value(result.tree.nested()).expect("tree serializes");
            if trace {
                let actions: Vec<String> = result.actions.iter().map(|a| a.to_string()).collect();
                value["trace"] = json!(actions);
            }
            emit(out, &to_json(&value))
        }
        Command::Features {
            doc1,
            doc2,
            task,
            model,
        } => {
            let (k1, k2) = task.kinds();
            let d1 = load_document(&doc1, k1).or_exit(Exit::Input)?;
            let d2 = load_document(&doc2, k2).or_exit(Exit::Input)?;
            let (idf, fcfg) = match model {
                Some(path) => {
                    let m = PairModel::load(&path).or_exit(Exit::Model)?;
                    (m.idf, m.features)
                }
                None => (
                    fit_idf(&[d1.clone(), d2.clone()]).or_exit(Exit::Data)?,
                    cfg.features.clone(),
                ),
            };
            let fv = build_feature_vector(&d1, &d2, &idf, &fcfg).or_exit(Exit::Config)?;
            emit(
                out,
                &to_json(&json!({"names": FEATURE_NAMES, "values": fv.0})),
            )
        }
        Command::Train { manifest, task } => {
            let out = out
                .ok_or_else(|| anyhow!("train needs --out for the model file"))
                .or_exit(Exit::Input)?;
            let (model, report) = train(&manifest, task, &cfg)?;
            fs::write(out, model.to_json())
                .with_context(|| format!("writing {}", out.display()))
                .or_exit(Exit::Input)?;
            emit(None, &to_json(&report))
        }
        Command::Classify { model, manifest } => {
            let model = PairModel::load(&model).or_exit(Exit::Model)?;
            emit(out, &classify(&model, &manifest)?)
        }
        Command::Eval {
            candidates,
            references,
            mode,
        } => {
            let report = evaluate(&candidates, &references, mode.into())?;
            emit(out, &to_json(&report))
        }
    }
}

fn pair_features(
    rows: &[PairRow],
    docs: &DocumentCache,
    task: Task,
    model_idf: &minutekit::features::IdfTable,
    fcfg: &minutekit::features::FeatureConfig,
) -> CliResult<Vec<FeatureVector>> {
    rows.iter()
        .map(|row| {
            let (d1, d2): (&Document, &Document) = docs.pair(row, task);
            build_feature_vector(d1, d2, model_idf, fcfg)
                .with_context(|| format!("features of pair {}", row.pair_id))
                .or_exit(Exit::Config)
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct TrainReport {
    pub task: Task,
    pub pairs: usize,
    pub positives: usize,
    pub hyperparams: minutekit::learn::HyperParams,
    pub search_best_f1: f64,
    pub cv_mean: Metrics,
    pub majority_baseline: Metrics,
    pub training_fit: Metrics,
}

pub fn train(manifest: &Path, task: Task, cfg: &Config) -> CliResult<(PairModel, TrainReport)> {
    let rows = read_manifest(manifest).or_exit(Exit::Data)?;
    if let Some(r) = rows.iter().find(|r| r.label.is_none()) {
        return Err(anyhow!("pair {} has no label", r.pair_id)).or_exit(Exit::Data);
    }
    let docs = DocumentCache::load(&rows, task).or_exit(Exit::Data)?;
    let idf = fit_idf(&docs.documents()).or_exit(Exit::Data)?;
    let fvs = pair_features(&rows, &docs, task, &idf, &cfg.features)?;
    let ds = Dataset {
        rows: rows
            .iter()
            .zip(&fvs)
            .map(|(r, fv)| Row {
                features: fv.0.to_vec(),
                label: r.label == Some(true),
                pair_id: r.pair_id.clone(),
            })
            .collect(),
    };
    let l = &cfg.learn;
    let search = hyperparam_search(&ds, &l.search_space(), l.budget, l.k, l.loss_kind, l.seed)
        .or_exit(Exit::Data)?;
    let cv = cross_validate(&ds, l.k, &search.best, l.loss_kind, l.seed).or_exit(Exit::Data)?;
    let golds = ds.labels();
    let preds: Vec<bool> = ds
        .rows
        .iter()
        .map(|r| predict_ensemble(&cv.ensemble, &r.features).map(|(_, y)| y))
        .collect::<Result<_, _>>()
        .or_exit(Exit::Data)?;
    let report = TrainReport {
        task,
        pairs: ds.len(),
        positives: golds.iter().filter(|&&g| g).count(),
        hyperparams: search.best,
        search_best_f1: search.best_f1,
        cv_mean: cv.mean_metrics,
        majority_baseline: majority_baseline(&golds),
        training_fit: classification_metrics(&preds, &golds).or_exit(Exit::Data)?,
    };
    let model = PairModel::new(
        task,
        cfg.features.clone(),
        idf,
        l.loss_kind,
        search.best,
        cv.mean_metrics,
        cv.ensemble,
    );
    Ok((model, report))
}

/// TSV rows `pair_id \t score \t TRUE|FALSE`, in manifest order.
pub fn classify(model: &PairModel, manifest: &Path) -> CliResult<String> {
    let rows = read_manifest(manifest).or_exit(Exit::Data)?;
    let docs = DocumentCache::load(&rows, model.task).or_exit(Exit::Data)?;
    let fvs = pair_features(&rows, &docs, model.task, &model.idf, &model.features)?;
    let mut out = String::new();
    for (row, fv) in rows.iter().zip(&fvs) {
        let (score, label) = predict_ensemble(&model.ensemble, &fv.0).or_exit(Exit::Model)?;
        out.push_str(&format!(
            "{}\t{score:.6}\t{}\n",
            row.pair_id,
            if label { "TRUE" } else { "FALSE" }
        ));
    }
    Ok(out)
}

fn sorted_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    files.retain(|p| p.is_file());
    files.sort();
    Ok(files)
}

/// References for `candidate`: every file in `refs/<stem>/`, or the file
/// `refs/<file name>`.
fn references_for(candidate: &Path, refs: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let stem = candidate
        .file_stem()
        .context("candidate without a file name")?;
    let dir = refs.join(stem);
    if dir.is_dir() {
        let files = sorted_files(&dir)?;
        if files.is_empty() {
            bail!("reference directory {} is empty", dir.display());
        }
        return Ok(files);
    }
    let file = refs.join(candidate.file_name().expect("has a stem"));
    if file.is_file() {
        return Ok(vec![file]);
    }
    bail!("no reference for {}", candidate.display())
}

#[derive(Debug, Serialize)]
pub struct CandidateScores {
    pub candidate: String,
    pub references: usize,
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    #[serde(rename = "rougeL")]
    pub rouge_l: RougeScore,
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub mode: RefAggregation,
    pub candidates: Vec<CandidateScores>,
    pub mean: Option<[RougeScore; 3]>,
}

pub fn evaluate(candidates: &Path, refs: &Path, mode: RefAggregation) -> CliResult<EvalReport> {
    let files = sorted_files(candidates).or_exit(Exit::Input)?;
    let mut rows = Vec::with_capacity(files.len());
    for cand in files {
        let text = fs::read_to_string(&cand)
            .with_context(|| format!("reading {}", cand.display()))
            .or_exit(Exit::Input)?;
        let ref_texts: Vec<String> = references_for(&cand, refs)
            .and_then(|paths| {
                paths
                    .iter()
                    .map(|p| {
                        fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
                    })
                    .collect()
            })
            .or_exit(Exit::Data)?;
        let mut scores = [RougeScore::default(); 3];
        for (slot, metric) in scores.iter_mut().zip(RougeMetric::ALL) {
            let per_ref: Vec<RougeScore> =
                ref_texts.iter().map(|r| metric.score(&text, r)).collect();
            *slot = aggregate_scores(&per_ref, mode).or_exit(Exit::Data)?;
        }
        rows.push(CandidateScores {
            candidate: cand
                .file_name()
                .expect("file")
                .to_string_lossy()
                .into_owned(),
            references: ref_texts.len(),
            rouge1: scores[0],
            rouge2: scores[1],
            rouge_l: scores[2],
        });
    }
    let mean = (!rows.is_empty()).then(|| {
        let all: Vec<[RougeScore; 3]> = rows
            .iter()
            .map(|r| [r.rouge1, r.rouge2, r.rouge_l])
            .collect();
        std::array::from_fn(|i| {
            let col: Vec<RougeScore> = all.iter().map(|s| s[i]).collect();
            aggregate_scores(&col, RefAggregation::Average).expect("non-empty")
        })
    });
    Ok(EvalReport {
        mode,
        candidates: rows,
        mean,
    })
}
