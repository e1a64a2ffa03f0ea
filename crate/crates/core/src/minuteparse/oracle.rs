use std::collections::HashMap;

use super::{Action, ActionPredictor, MinuteLine, MinuteTree, ParseError, ParserState, StackEntry};

/// Derives the canonical action sequence that rebuilds `tree` from `lines`.
///
/// Labeled lines get `LABEL`. A node whose parent is the stack top is
/// attached with `ADD` when it has children and `ARC` when it is a leaf;
/// any other node must be reachable with `REPLACE`. The sequence is
/// replayed while it is derived and the rebuilt tree must equal `tree`.
pub fn oracle_actions(tree: &MinuteTree, lines: &[MinuteLine]) -> Result<Vec<Action>, ParseError> {
    let fields: HashMap<usize, _> = tree
        .labeled_fields
        .iter()
        .map(|f| (f.position, f.label))
        .collect();
    let nodes: HashMap<usize, usize> = tree
        .nodes
        .iter()
        .enumerate()
        .map(|(id, n)| (n.position, id))
        .collect();
    if tree.line_count() != lines.len() {
        return Err(ParseError::InconsistentTree(format!(
            "{} tree lines for {} input lines",
            tree.line_count(),
            lines.len()
        )));
    }

    let mut state = ParserState::new(lines.to_vec());
    let mut actions = Vec::with_capacity(lines.len());
    for line in lines {
        let action = if let Some(&label) = fields.get(&line.position) {
            Action::Label(label)
        } else {
            let id = *nodes.get(&line.position).ok_or_else(|| {
                ParseError::InconsistentTree(format!("no node at line {}", line.position))
            })?;
            let node = &tree.nodes[id];
            if node.text != line.text {
                return Err(ParseError::InconsistentTree(format!(
                    "line {} reads {:?}, tree has {:?}",
                    line.position, line.text, node.text
                )));
            }
            let top = match state.s0() {
                StackEntry::Root => None,
                StackEntry::Node(built) => Some(tree_id_of(&state, built, &nodes)?),
            };
            if node.parent == top {
                if node.children.is_empty() {
                    Action::Arc
                } else {
                    Action::Add
                }
            } else {
                Action::Replace
            }
        };
        state.apply(action)?;
        actions.push(action);
    }

    state.tree.finish();
    if state.tree != *tree {
        return Err(ParseError::InconsistentTree(
            "replaying the derived actions gives a different tree".into(),
        ));
    }
    Ok(actions)
}

/// Maps a node id of the tree under construction to the id of the node at
/// the same line position in the target tree.
fn tree_id_of(
    state: &ParserState,
    built: usize,
    nodes: &HashMap<usize, usize>,
) -> Result<usize, ParseError> {
    let pos = state.tree.nodes[built].position;
    nodes
        .get(&pos)
        .copied()
        .ok_or_else(|| ParseError::InconsistentTree(format!("no node at line {pos}")))
}

/// Replays a fixed action sequence; used to drive [`super::parse`] with
/// oracle output.
#[derive(Debug, Clone)]
pub struct OraclePredictor {
    actions: Vec<Action>,
}

impl OraclePredictor {
    pub fn new(actions: Vec<Action>) -> Self {
        Self { actions }
    }

    pub fn for_tree(tree: &MinuteTree, lines: &[MinuteLine]) -> Result<Self, ParseError> {
        oracle_actions(tree, lines).map(Self::new)
    }
}

impl ActionPredictor for OraclePredictor {
    fn predict(&self, state: &ParserState) -> Result<Action, ParseError> {
        self.actions.get(state.cursor).copied().ok_or_else(|| {
            ParseError::PredictorFailure(format!("no oracle action for line {}", state.cursor))
        })
    }
}
