//! Transcript to structured minute: segment, summarize each block, then
//! structure each summary.

use anyhow::{Context, Result};
use minutekit::argmine::{render, structure_sentences, ArgumentGraph, StructuredMinute};
use minutekit::features::{find_date, DateStamp, DATE_SCAN_UTTERANCES};
use minutekit::segment::{segment_sentences, Block, Segmentation};
use minutekit::summarize::{finish_summary, format_block, postprocess, truncate_block};
use minutekit::text::split_sentences;
use minutekit::Transcript;
use serde::Serialize;

use crate::backends::Backends;
use crate::config::Config;

#[derive(Debug, Clone, Serialize)]
pub struct BlockMinute {
    pub block: Block,
    pub dropped_lines: usize,
    pub summary: String,
    pub graph: ArgumentGraph,
    pub minute: StructuredMinute,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinuteOutput {
    pub date: Option<DateStamp>,
    pub attendees: Vec<String>,
    pub segmentation: Segmentation,
    pub blocks: Vec<BlockMinute>,
}

/// `YYYY-MM-DD`, with a trailing ` HH:00` when the hour is known.
pub fn format_date(d: &DateStamp) -> String {
    let mut out = match d.year {
        Some(y) => format!("{y:04}"),
        None => String::new(),
    };
    if let Some(m) = d.month {
        out.push_str(&format!("-{m:02}"));
        if let Some(day) = d.day {
            out.push_str(&format!("-{day:02}"));
        }
    }
    if let Some(h) = d.hour {
        out.push_str(&format!(" {h:02}:00"));
    }
    out
}

impl MinuteOutput {
    pub fn header_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(d) = &self.date {
            out.push(format!("DATE: {}", format_date(d)));
        }
        if !self.attendees.is_empty() {
            out.push(format!("ATTENDEES: {}", self.attendees.join(", ")));
        }
        out
    }

    pub fn body_lines(&self) -> Vec<String> {
        self.blocks
            .iter()
            .flat_map(|b| {
                render(&b.minute)
                    .lines()
                    .map(str::to_string)
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    /// Header then body, newline-terminated.
    pub fn to_text(&self) -> String {
        let mut lines = self.header_lines();
        lines.extend(self.body_lines());
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }
}

pub fn transcript_date(t: &Transcript) -> Option<DateStamp> {
    t.utterances
        .iter()
        .take(DATE_SCAN_UTTERANCES)
        .find_map(|u| find_date(&u.text).map(|m| m.stamp))
}

pub fn segment(t: &Transcript, backends: &Backends, cfg: &Config) -> Result<Segmentation> {
    let sentences = t.sentences();
    Ok(segment_sentences(
        &sentences,
        backends.labeler.as_ref(),
        &cfg.segmenter.segment_config(),
    )?)
}

/// Block text and its summary for every block.
pub fn summarize_blocks(
    t: &Transcript,
    seg: &Segmentation,
    backends: &Backends,
    cfg: &Config,
) -> Result<Vec<(Block, usize, String)>> {
    let sentences = t.sentences();
    seg.blocks
        .iter()
        .map(|block| {
            let bt = format_block(block, &sentences, t)?;
            let cut = truncate_block(&bt, cfg.summarizer.max_tokens);
            let raw = backends.summarizer.summarize(&cut.block)?;
            let text = postprocess(&raw, &backends.post_rules);
            let summary = finish_summary(&text, Some(*block))
                .with_context(|| format!("summary of sentences {}..{}", block.start, block.end))?;
            Ok((*block, cut.dropped_lines, summary.text))
        })
        .collect()
}

pub fn run_minute(t: &Transcript, backends: &Backends, cfg: &Config) -> Result<MinuteOutput> {
    let segmentation = segment(t, backends, cfg)?;
    let mut blocks = Vec::with_capacity(segmentation.blocks.len());
    for (block, dropped_lines, summary) in summarize_blocks(t, &segmentation, backends, cfg)? {
        let sentences = split_sentences(&summary);
        let (graph, minute) = structure_sentences(
            &sentences,
            backends.prop_labeler.as_ref(),
            backends.relations.as_ref(),
        )?;
        blocks.push(BlockMinute {
            block,
            dropped_lines,
            summary,
            graph,
            minute,
        });
    }
    Ok(MinuteOutput {
        date: transcript_date(t),
        attendees: t.speakers().into_iter().map(str::to_string).collect(),
        segmentation,
        blocks,
    })
}
