//! Transition-based recovery of a minute's structure.
//!
//! Lines are consumed left to right from a buffer. A stack holds the open
//! nodes with a virtual ROOT at the bottom. Four actions exist:
//!
//! | action      | effect                                                   |
//! |-------------|----------------------------------------------------------|
//! | `LABEL(l)`  | record the front line as field `l` and drop it           |
//! | `ADD`       | front line becomes a child of the top node and is pushed |
//! | `REPLACE`   | pop the top, attach the front line one level up, push it |
//! | `ARC`       | front line becomes a child of the top node, not pushed   |
//!
//! `REPLACE` keeps popping while the new top sits at or below the front
//! line's indentation level, so a dedent across several levels is a single
//! action.

mod oracle;
mod predictor;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use oracle::{oracle_actions, OraclePredictor};
pub use predictor::{line_features, LearnedPredictor, RulePredictor, LINE_FEATURE_NAMES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("no line left in the buffer")]
    EmptyBuffer,
    #[error("REPLACE needs a node above ROOT on the stack")]
    StackUnderflow,
    #[error("action predictor failed: {0}")]
    PredictorFailure(String),
    #[error("tree does not match the lines: {0}")]
    InconsistentTree(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bullet {
    Star,
    Dash,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinuteLine {
    pub raw: String,
    /// Number of leading `-` markers; `*` lines and plain lines are 0.
    pub indent: usize,
    pub bullet: Bullet,
    pub text: String,
    pub position: usize,
}

impl MinuteLine {
    /// Tree depth the line's markers ask for (ROOT is depth 0).
    pub fn level(&self) -> usize {
        self.indent + 1
    }
}

/// Splits a minute into marker-annotated lines, dropping blank ones.
pub fn read_lines(minute_text: &str) -> Vec<MinuteLine> {
    let mut out = Vec::new();
    for raw in minute_text.lines() {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (bullet, indent, text) = split_markers(trimmed);
        if text.is_empty() {
            continue;
        }
        out.push(MinuteLine {
            raw: raw.to_string(),
            indent,
            bullet,
            text: text.to_string(),
            position: out.len(),
        });
    }
    out
}

fn split_markers(line: &str) -> (Bullet, usize, &str) {
    if let Some(rest) = strip_marker(line, '*') {
        return (Bullet::Star, 0, rest.trim());
    }
    let mut rest = line;
    let mut indent = 0;
    while let Some(r) = strip_marker(rest, '-') {
        rest = r;
        indent += 1;
    }
    if indent == 0 {
        (Bullet::None, 0, line)
    } else {
        (Bullet::Dash, indent, rest.trim())
    }
}

/// `marker` followed by whitespace (or the end of the line).
fn strip_marker(s: &str, marker: char) -> Option<&str> {
    let rest = s.strip_prefix(marker)?;
    if rest.is_empty() {
        Some(rest)
    } else if rest.starts_with(char::is_whitespace) {
        Some(rest.trim_start())
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineLabel {
    Title,
    Date,
    Attendees,
    Topic,
    Subtopic,
    Item,
    Other,
}

impl LineLabel {
    pub const ALL: [LineLabel; 7] = [
        Self::Title,
        Self::Date,
        Self::Attendees,
        Self::Topic,
        Self::Subtopic,
        Self::Item,
        Self::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Title => "title",
            Self::Date => "date",
            Self::Attendees => "attendees",
            Self::Topic => "topic",
            Self::Subtopic => "subtopic",
            Self::Item => "item",
            Self::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Label(LineLabel),
    Add,
    Replace,
    Arc,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Label(l) => write!(f, "LABEL({})", l.name()),
            Self::Add => f.write_str("ADD"),
            Self::Replace => f.write_str("REPLACE"),
            Self::Arc => f.write_str("ARC"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinuteNode {
    pub position: usize,
    pub text: String,
    pub label: LineLabel,
    pub depth: usize,
    /// `None` when the parent is ROOT.
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledField {
    pub label: LineLabel,
    pub position: usize,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinuteTree {
    pub nodes: Vec<MinuteNode>,
    pub root_children: Vec<usize>,
    pub labeled_fields: Vec<LabeledField>,
}

impl MinuteTree {
    /// Adds a node under `parent` (`None` = ROOT) and returns its id.
    pub fn attach(&mut self, parent: Option<usize>, position: usize, text: &str) -> usize {
        let id = self.nodes.len();
        let depth = parent.map_or(1, |p| self.nodes[p].depth + 1);
        self.nodes.push(MinuteNode {
            position,
            text: text.to_string(),
            label: LineLabel::Item,
            depth,
            parent,
            children: Vec::new(),
        });
        match parent {
            Some(p) => self.nodes[p].children.push(id),
            None => self.root_children.push(id),
        }
        id
    }

    pub fn record(&mut self, label: LineLabel, position: usize, text: &str) {
        self.labeled_fields.push(LabeledField {
            label,
            position,
            text: text.to_string(),
        });
    }

    /// Names nodes by shape: depth-1 nodes are topics, deeper nodes with
    /// children subtopics, the rest items.
    pub fn finish(&mut self) {
        for node in &mut self.nodes {
            node.label = if node.depth == 1 {
                LineLabel::Topic
            } else if node.children.is_empty() {
                LineLabel::Item
            } else {
                LineLabel::Subtopic
            };
        }
    }

    pub fn field(&self, label: LineLabel) -> Option<&str> {
        self.labeled_fields
            .iter()
            .find(|f| f.label == label)
            .map(|f| f.text.as_str())
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn line_count(&self) -> usize {
        self.nodes.len() + self.labeled_fields.len()
    }

    /// Writes the tree back out as minute text, one line per position.
    pub fn render(&self) -> String {
        let mut lines: Vec<(usize, String)> = self
            .labeled_fields
            .iter()
            .map(|f| (f.position, f.text.clone()))
            .chain(self.nodes.iter().map(|n| {
                let marker = if n.depth <= 1 {
                    "* ".to_string()
                } else {
                    "- ".repeat(n.depth - 1)
                };
                (n.position, format!("{marker}{}", n.text))
            }))
            .collect();
        lines.sort_by_key(|(p, _)| *p);
        lines
            .into_iter()
            .map(|(_, l)| l)
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Nested form for JSON output.
    pub fn nested(&self) -> NestedMinute {
        fn node(tree: &MinuteTree, id: usize) -> NestedNode {
            let n = &tree.nodes[id];
            NestedNode {
                label: n.label,
                position: n.position,
                text: n.text.clone(),
                children: n.children.iter().map(|&c| node(tree, c)).collect(),
            }
        }
        let mut fields: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for f in &self.labeled_fields {
            fields
                .entry(f.label.name().to_string())
                .or_default()
                .push(f.text.clone());
        }
        NestedMinute {
            labeled_fields: fields,
            children: self.root_children.iter().map(|&c| node(self, c)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestedNode {
    pub label: LineLabel,
    pub position: usize,
    pub text: String,
    pub children: Vec<NestedNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestedMinute {
    pub labeled_fields: BTreeMap<String, Vec<String>>,
    pub children: Vec<NestedNode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StackEntry {
    Root,
    Node(usize),
}

/// Parser configuration: stack, buffer cursor and the partial tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParserState {
    pub lines: Vec<MinuteLine>,
    /// Index of the buffer front (`b_0`) in `lines`.
    pub cursor: usize,
    pub stack: Vec<StackEntry>,
    pub tree: MinuteTree,
}

impl ParserState {
    pub fn new(lines: Vec<MinuteLine>) -> Self {
        Self {
            lines,
            cursor: 0,
            stack: vec![StackEntry::Root],
            tree: MinuteTree::default(),
        }
    }

    pub fn front(&self) -> Option<&MinuteLine> {
        self.lines.get(self.cursor)
    }

    pub fn lookahead(&self, k: usize) -> Option<&MinuteLine> {
        self.lines.get(self.cursor + k)
    }

    pub fn buffer_len(&self) -> usize {
        self.lines.len() - self.cursor
    }

    pub fn s0(&self) -> StackEntry {
        *self.stack.last().expect("ROOT is never popped")
    }

    pub fn s1(&self) -> Option<StackEntry> {
        self.stack.len().checked_sub(2).map(|i| self.stack[i])
    }

    pub fn depth_of(&self, e: StackEntry) -> usize {
        match e {
            StackEntry::Root => 0,
            StackEntry::Node(id) => self.tree.nodes[id].depth,
        }
    }

    /// Stack entries above ROOT.
    pub fn open_nodes(&self) -> usize {
        self.stack.len() - 1
    }

    fn parent_id(e: StackEntry) -> Option<usize> {
        match e {
            StackEntry::Root => None,
            StackEntry::Node(id) => Some(id),
        }
    }

    /// Applies one transition in place.
    pub fn apply(&mut self, action: Action) -> Result<(), ParseError> {
        let line = self.front().ok_or(ParseError::EmptyBuffer)?.clone();
        match action {
            Action::Label(label) => {
                self.tree.record(label, line.position, line.raw.trim());
            }
            Action::Add => {
                let id = self
                    .tree
                    .attach(Self::parent_id(self.s0()), line.position, &line.text);
                self.stack.push(StackEntry::Node(id));
            }
            Action::Arc => {
                self.tree
                    .attach(Self::parent_id(self.s0()), line.position, &line.text);
            }
            Action::Replace => {
                if self.stack.len() < 2 {
                    return Err(ParseError::StackUnderflow);
                }
                self.stack.pop();
                while self.stack.len() > 1 && self.depth_of(self.s0()) >= line.level() {
                    self.stack.pop();
                }
                let id = self
                    .tree
                    .attach(Self::parent_id(self.s0()), line.position, &line.text);
                self.stack.push(StackEntry::Node(id));
            }
        }
        self.cursor += 1;
        Ok(())
    }
}

/// Consuming form of [`ParserState::apply`].
pub fn step(mut state: ParserState, action: Action) -> Result<ParserState, ParseError> {
    state.apply(action)?;
    Ok(state)
}

/// Chooses the next action from the current configuration.
pub trait ActionPredictor {
    fn predict(&self, state: &ParserState) -> Result<Action, ParseError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseResult {
    pub tree: MinuteTree,
    pub actions: Vec<Action>,
}

/// Runs predict/step until the buffer is empty.
pub fn parse(
    lines: &[MinuteLine],
    predictor: &dyn ActionPredictor,
) -> Result<ParseResult, ParseError> {
    let mut state = ParserState::new(lines.to_vec());
    let mut actions = Vec::with_capacity(lines.len());
    while state.front().is_some() {
        let action = predictor.predict(&state)?;
        state.apply(action)?;
        actions.push(action);
    }
    state.tree.finish();
    Ok(ParseResult {
        tree: state.tree,
        actions,
    })
}

/// Reads and parses a minute with the rule predictor.
pub fn parse_minute(text: &str) -> ParseResult {
    parse(&read_lines(text), &RulePredictor).expect("rule predictor only emits valid actions")
}
