use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{
    oracle_actions, Action, ActionPredictor, Bullet, LineLabel, MinuteLine, MinuteTree, ParseError,
    ParserState,
};
use crate::features::dates::find_date;
use crate::learn::{fit_scaler, train_linear, Dataset, HyperParams, LinearModel, LossKind, Scaler};

static ATTENDEES: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*(attendees|participants|present)\b").unwrap());
static TOPIC_WORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(topic|agenda|item)\b").unwrap());

/// Deterministic fallback: header fields by pattern, structure by markers.
#[derive(Debug, Clone, Copy, Default)]
pub struct RulePredictor;

impl ActionPredictor for RulePredictor {
    fn predict(&self, state: &ParserState) -> Result<Action, ParseError> {
        let line = state.front().ok_or(ParseError::EmptyBuffer)?;
        if line.bullet == Bullet::None && state.tree.nodes.is_empty() {
            if state.tree.field(LineLabel::Date).is_none() && find_date(&line.text).is_some() {
                return Ok(Action::Label(LineLabel::Date));
            }
            if ATTENDEES.is_match(&line.text) {
                return Ok(Action::Label(LineLabel::Attendees));
            }
            if state.tree.field(LineLabel::Title).is_none() {
                return Ok(Action::Label(LineLabel::Title));
            }
        }
        let level = line.level();
        if level > state.depth_of(state.s0()) {
            let next_deeper = state.lookahead(1).is_some_and(|n| n.level() > level);
            if level == 1 || next_deeper {
                Ok(Action::Add)
            } else {
                Ok(Action::Arc)
            }
        } else {
            Ok(Action::Replace)
        }
    }
}

pub const LINE_FEATURE_NAMES: [&str; 20] = [
    "indent",
    "bullet_star",
    "bullet_dash",
    "bullet_none",
    "position_ratio",
    "log_char_len",
    "has_date",
    "title_like",
    "kw_attendees",
    "kw_topic",
    "stack_depth",
    "s0_depth",
    "depth_delta",
    "level_minus_s0",
    "level_above_s0",
    "next_delta",
    "next_deeper",
    "has_next",
    "title_seen",
    "nodes_empty",
];

/// Features of the buffer front in the current configuration.
pub fn line_features(line: &MinuteLine, state: &ParserState) -> Vec<f64> {
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let n = state.lines.len();
    let stack_depth = state.open_nodes() as f64;
    let s0_depth = state.depth_of(state.s0()) as f64;
    let indent = line.indent as f64;
    let level = line.level() as f64;
    let next = state.lines.get(line.position + 1);
    let next_delta = next.map_or(0.0, |x| x.indent as f64 - indent);
    vec![
        indent,
        flag(line.bullet == Bullet::Star),
        flag(line.bullet == Bullet::Dash),
        flag(line.bullet == Bullet::None),
        line.position as f64 / (n.saturating_sub(1)).max(1) as f64,
        (line.text.chars().count() as f64).ln_1p(),
        flag(find_date(&line.text).is_some()),
        flag(line.position == 0 && line.bullet == Bullet::None),
        flag(ATTENDEES.is_match(&line.text)),
        flag(TOPIC_WORD.is_match(&line.text)),
        stack_depth,
        s0_depth,
        indent - stack_depth,
        level - s0_depth,
        flag(level > s0_depth),
        next_delta,
        flag(next_delta > 0.0),
        flag(next.is_some()),
        flag(state.tree.field(LineLabel::Title).is_some()),
        flag(state.tree.nodes.is_empty()),
    ]
}

/// One-vs-rest linear scorer over actions, trained from oracle traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedPredictor {
    pub scaler: Scaler,
    /// Per action, a model or `None` when the action was the only one seen.
    pub classes: Vec<(Action, Option<LinearModel>)>,
}

impl LearnedPredictor {
    /// Trains on `(lines, gold tree)` pairs.
    pub fn train(
        examples: &[(Vec<MinuteLine>, MinuteTree)],
        hp: &HyperParams,
    ) -> Result<Self, ParseError> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (lines, tree) in examples {
            let actions = oracle_actions(tree, lines)?;
            let mut state = ParserState::new(lines.clone());
            for action in actions {
                let line = state.front().ok_or(ParseError::EmptyBuffer)?;
                xs.push(line_features(line, &state));
                ys.push(action);
                state.apply(action)?;
            }
        }
        let mut seen: Vec<Action> = Vec::new();
        for a in &ys {
            if !seen.contains(a) {
                seen.push(*a);
            }
        }
        if seen.is_empty() {
            return Err(ParseError::PredictorFailure("no training lines".into()));
        }
        let failure = |e: crate::learn::LearnError| ParseError::PredictorFailure(e.to_string());
        let raw = Dataset::from_xy(xs.clone(), vec![false; xs.len()]);
        let scaler = fit_scaler(&raw).map_err(failure)?;
        let scaled: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| scaler.apply(x))
            .collect::<Result<_, _>>()
            .map_err(failure)?;
        let mut classes = Vec::with_capacity(seen.len());
        for action in seen.iter().copied() {
            let model = if seen.len() == 1 {
                None
            } else {
                let labels = ys.iter().map(|a| *a == action).collect();
                let ds = Dataset::from_xy(scaled.clone(), labels);
                Some(train_linear(&ds, hp, LossKind::Logistic).map_err(failure)?)
            };
            classes.push((action, model));
        }
        Ok(Self { scaler, classes })
    }

    /// Actions ranked by score, best first.
    pub fn ranked(&self, state: &ParserState) -> Result<Vec<(Action, f64)>, ParseError> {
        let line = state.front().ok_or(ParseError::EmptyBuffer)?;
        let x = self
            .scaler
            .apply(&line_features(line, state))
            .map_err(|e| ParseError::PredictorFailure(e.to_string()))?;
        let mut scored: Vec<(Action, f64)> = self
            .classes
            .iter()
            .map(|(a, m)| (*a, m.as_ref().map_or(1.0, |m| m.probability(&x))))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1));
        Ok(scored)
    }
}

impl ActionPredictor for LearnedPredictor {
    fn predict(&self, state: &ParserState) -> Result<Action, ParseError> {
        let replace_ok = state.stack.len() >= 2;
        self.ranked(state)?
            .into_iter()
            .map(|(a, _)| a)
            .find(|a| *a != Action::Replace || replace_ok)
            .ok_or_else(|| ParseError::PredictorFailure("no valid action scored".into()))
    }
}
