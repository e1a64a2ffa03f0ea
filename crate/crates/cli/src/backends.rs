//! Stage implementations chosen by the config: built-in defaults or
//! external commands exchanging one JSON document over stdin/stdout.

use std::io::Write;
use std::process::{Command, Stdio};

use anyhow::{bail, Context, Result};
use minutekit::argmine::{
    ArgMineError, ArgRelation, ConnectiveRelations, PropLabel, Proposition, PropositionLabeler,
    RelationExtractor, RuleLabeler,
};
use minutekit::segment::{ChunkLabels, LexicalCohesion, SegmentError, SentenceLabeler};
use minutekit::summarize::{
    default_post_rules, parse_post_rules, BlockText, CentroidExtractive, PostRule, SummarizeError,
    Summarizer,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{Backend, Config};

/// Runs `sh -c command`, writes `request` as JSON and parses stdout.
pub fn exec_json<Req: Serialize, Resp: DeserializeOwned>(
    command: &str,
    request: &Req,
) -> Result<Resp> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .with_context(|| format!("starting backend {command:?}"))?;
    let body = serde_json::to_vec(request)?;
    {
        let mut stdin = child.stdin.take().context("backend stdin")?;
        // A backend may answer without reading its input.
        if let Err(e) = stdin.write_all(&body) {
            if e.kind() != std::io::ErrorKind::BrokenPipe {
                return Err(e.into());
            }
        }
    }
    let out = child.wait_with_output()?;
    if !out.status.success() {
        bail!("backend {command:?} exited with {}", out.status);
    }
    serde_json::from_slice(&out.stdout).with_context(|| format!("decoding output of {command:?}"))
}

#[derive(Serialize)]
struct SegmentRequest<'a> {
    sentences: &'a [&'a str],
}

pub struct ExecLabeler(pub String);

impl SentenceLabeler for ExecLabeler {
    fn label(&self, sentences: &[&str]) -> Result<ChunkLabels, SegmentError> {
        exec_json(&self.0, &SegmentRequest { sentences })
            .map_err(|e| SegmentError::Backend(format!("{e:#}")))
    }
}

#[derive(Serialize)]
struct SummarizeRequest<'a> {
    lines: &'a [String],
}

#[derive(Deserialize)]
struct SummarizeResponse {
    summary: String,
}

pub struct ExecSummarizer(pub String);

impl Summarizer for ExecSummarizer {
    fn summarize(&self, block: &BlockText) -> Result<String, SummarizeError> {
        exec_json::<_, SummarizeResponse>(
            &self.0,
            &SummarizeRequest {
                lines: &block.lines,
            },
        )
        .map(|r| r.summary)
        .map_err(|e| SummarizeError::Backend(format!("{e:#}")))
    }
}

#[derive(Serialize)]
struct ArgMineRequest<'a> {
    task: &'static str,
    propositions: Vec<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<&'a [PropLabel]>,
}

#[derive(Deserialize)]
struct LabelResponse {
    labels: Vec<PropLabel>,
}

#[derive(Deserialize)]
struct RelationResponse {
    relations: Vec<ArgRelation>,
}

/// One command answering both `"task": "label"` and `"task": "relations"`.
pub struct ExecArgMiner(pub String);

impl PropositionLabeler for ExecArgMiner {
    fn label(&self, props: &[Proposition]) -> Result<Vec<PropLabel>, ArgMineError> {
        let req = ArgMineRequest {
            task: "label",
            propositions: props.iter().map(|p| p.text.as_str()).collect(),
            labels: None,
        };
        exec_json::<_, LabelResponse>(&self.0, &req)
            .map(|r| r.labels)
            .map_err(|e| ArgMineError::Backend(format!("{e:#}")))
    }
}

impl RelationExtractor for ExecArgMiner {
    fn relations(
        &self,
        props: &[Proposition],
        labels: &[PropLabel],
    ) -> Result<Vec<ArgRelation>, ArgMineError> {
        let req = ArgMineRequest {
            task: "relations",
            propositions: props.iter().map(|p| p.text.as_str()).collect(),
            labels: Some(labels),
        };
        exec_json::<_, RelationResponse>(&self.0, &req)
            .map(|r| r.relations)
            .map_err(|e| ArgMineError::Backend(format!("{e:#}")))
    }
}

pub struct Backends {
    pub labeler: Box<dyn SentenceLabeler>,
    pub summarizer: Box<dyn Summarizer>,
    pub prop_labeler: Box<dyn PropositionLabeler>,
    pub relations: Box<dyn RelationExtractor>,
    pub post_rules: Vec<PostRule>,
}

impl Backends {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let seg = &cfg.segmenter;
        let labeler: Box<dyn SentenceLabeler> = match &seg.backend {
            Backend::Builtin => Box::new(LexicalCohesion::new(seg.window, seg.k)),
            Backend::Exec(cmd) => Box::new(ExecLabeler(cmd.clone())),
        };
        let summarizer: Box<dyn Summarizer> = match &cfg.summarizer.backend {
            Backend::Builtin => Box::new(CentroidExtractive {
                ratio: cfg.summarizer.ratio,
            }),
            Backend::Exec(cmd) => Box::new(ExecSummarizer(cmd.clone())),
        };
        let (prop_labeler, relations): (Box<dyn PropositionLabeler>, Box<dyn RelationExtractor>) =
            match &cfg.argmine.backend {
                Backend::Builtin => (Box::new(RuleLabeler), Box::new(ConnectiveRelations)),
                Backend::Exec(cmd) => (
                    Box::new(ExecArgMiner(cmd.clone())),
                    Box::new(ExecArgMiner(cmd.clone())),
                ),
            };
        let post_rules = match &cfg.summarizer.post_rules {
            None => default_post_rules().to_vec(),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading post rules {}", path.display()))?;
                parse_post_rules(&text)?
            }
        };
        Ok(Self {
            labeler,
            summarizer,
            prop_labeler,
            relations,
            post_rules,
        })
    }
}
