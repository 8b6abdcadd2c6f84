//! Preference trees: prefix-closed finite history sets with a payoff per
//! history. Payoffs induce the objective total preorder over all histories,
//! not just terminal ones.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::history::{Action, History};
use crate::payoff::PayoffValue;

/// Index of a history inside a [`PreferenceTree`]. Ids follow the
/// lexicographic order of histories, so a prefix always has a smaller id
/// than its extensions, and id 0 is the root.
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("duplicate history {0}")]
    DuplicateHistory(History),
    #[error("history {0} is declared but its prefix {1} is not")]
    MissingPrefix(History, History),
    #[error("the root history is missing")]
    MissingRoot,
    #[error("unknown history {0}")]
    UnknownHistory(History),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node<P> {
    history: History,
    payoff: P,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
}

/// A finite preference tree: every prefix of a member history is a member,
/// and every member carries a payoff. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceTree<P> {
    nodes: Vec<Node<P>>,
    index: BTreeMap<History, NodeId>,
}

impl<P: PayoffValue> PreferenceTree<P> {
    /// Builds a validated tree from `(history, payoff)` entries. Rejects
    /// duplicates, a missing root, and prefix-closure violations.
    pub fn new<I>(entries: I) -> Result<Self, TreeError>
    where
        I: IntoIterator<Item = (History, P)>,
    {
        let mut sorted: BTreeMap<History, P> = BTreeMap::new();
        for (history, payoff) in entries {
            if sorted.insert(history.clone(), payoff).is_some() {
                return Err(TreeError::DuplicateHistory(history));
            }
        }
        if !sorted.contains_key(&History::root()) {
            return Err(TreeError::MissingRoot);
        }
        for history in sorted.keys() {
            if let Some(parent) = history.parent() {
                if !sorted.contains_key(&parent) {
                    return Err(TreeError::MissingPrefix(history.clone(), parent));
                }
            }
        }

        let mut nodes: Vec<Node<P>> = Vec::with_capacity(sorted.len());
        let mut index = BTreeMap::new();
        for (history, payoff) in sorted {
            let id = nodes.len();
            let parent = history.parent().map(|p| index[&p]);
            index.insert(history.clone(), id);
            nodes.push(Node {
                history,
                payoff,
                parent,
                children: Vec::new(),
            });
            if let Some(p) = parent {
                nodes[p].children.push(id);
            }
        }
        Ok(PreferenceTree { nodes, index })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a valid tree always contains the root
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        0..self.nodes.len()
    }

    pub fn histories(&self) -> impl Iterator<Item = &History> {
        self.nodes.iter().map(|n| &n.history)
    }

    pub fn history(&self, id: NodeId) -> &History {
        &self.nodes[id].history
    }

    pub fn payoff(&self, id: NodeId) -> &P {
        &self.nodes[id].payoff
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn depth(&self, id: NodeId) -> usize {
        self.nodes[id].history.len()
    }

    /// Resolves a history to its id.
    pub fn id_of(&self, history: &History) -> Result<NodeId, TreeError> {
        self.index
            .get(history)
            .copied()
            .ok_or_else(|| TreeError::UnknownHistory(history.clone()))
    }

    pub fn contains(&self, history: &History) -> bool {
        self.index.contains_key(history)
    }

    pub fn is_terminal(&self, id: NodeId) -> bool {
        self.nodes[id].children.is_empty()
    }

    /// Ids of the terminal histories `Z`. Nonempty for every valid tree.
    pub fn terminal_ids(&self) -> Vec<NodeId> {
        self.ids().filter(|&id| self.is_terminal(id)).collect()
    }

    /// The set of terminal histories `Z`.
    pub fn terminals(&self) -> BTreeSet<History> {
        self.terminal_ids()
            .into_iter()
            .map(|id| self.history(id).clone())
            .collect()
    }

    /// Actions available at `h`; empty exactly when `h` is terminal.
    pub fn actions_at(&self, history: &History) -> Result<BTreeSet<Action>, TreeError> {
        let id = self.id_of(history)?;
        Ok(self.actions_at_id(id))
    }

    pub fn actions_at_id(&self, id: NodeId) -> BTreeSet<Action> {
        self.nodes[id]
            .children
            .iter()
            .map(|&c| {
                self.nodes[c]
                    .history
                    .last_action()
                    .expect("child history is nonempty")
                    .clone()
            })
            .collect()
    }

    /// The child of `id` reached by `action`, if declared.
    pub fn child_by_action(&self, id: NodeId, action: &str) -> Option<NodeId> {
        self.nodes[id]
            .children
            .iter()
            .copied()
            .find(|&c| self.nodes[c].history.last_action().map(String::as_str) == Some(action))
    }

    /// Compares two histories under the objective preference: `Greater` is
    /// `≻`, `Equal` is `∼`, `Less` is `≺`.
    pub fn prefer(&self, h1: &History, h2: &History) -> Result<Ordering, TreeError> {
        let a = self.id_of(h1)?;
        let b = self.id_of(h2)?;
        Ok(self.prefer_ids(a, b))
    }

    pub fn prefer_ids(&self, a: NodeId, b: NodeId) -> Ordering {
        self.nodes[a].payoff.cmp(&self.nodes[b].payoff)
    }

    /// Weak preference `h1 ⪰ h2`.
    pub fn weakly_prefers(&self, a: NodeId, b: NodeId) -> bool {
        self.prefer_ids(a, b) != Ordering::Less
    }

    /// Ids of all histories extending `id`, including `id` itself (`H|_h`).
    pub fn extensions_of(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().copied());
        }
        out.sort_unstable();
        out
    }

    /// Ids of all reflexive prefixes of `id`, root first.
    pub fn prefix_ids(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    /// Whether all payoffs are pairwise distinct.
    pub fn has_distinct_payoffs(&self) -> bool {
        let mut seen: BTreeSet<&P> = BTreeSet::new();
        self.nodes.iter().all(|n| seen.insert(&n.payoff))
    }

    /// Maximal elements of a set of ids under the objective preference.
    pub fn maxima(&self, ids: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
        let best = ids.iter().map(|&id| &self.nodes[id].payoff).max();
        match best {
            None => BTreeSet::new(),
            Some(best) => ids
                .iter()
                .copied()
                .filter(|&id| &self.nodes[id].payoff == best)
                .collect(),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&History, &P)> {
        self.nodes.iter().map(|n| (&n.history, &n.payoff))
    }
}

impl<P: PayoffValue + fmt::Display> fmt::Display for PreferenceTree<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for node in &self.nodes {
            writeln!(f, "{} {}", node.history, node.payoff)?;
        }
        Ok(())
    }
}
