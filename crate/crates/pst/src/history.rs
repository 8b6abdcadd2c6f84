//! Histories: finite sequences of action tokens rooted at the empty sequence.

use std::fmt;
use std::str::FromStr;

/// A single action token. Tokens are nonempty names; the text format further
/// restricts them to `[A-Za-z0-9_]+`.
pub type Action = String;

/// A finite sequence of actions. The empty sequence is the root, written `.`
/// in the text format.
///
/// The derived `Ord` is lexicographic on the action sequence, which places
/// every history directly before its extensions.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct History(Vec<Action>);

impl History {
    /// The empty history (the root).
    pub fn root() -> Self {
        History(Vec::new())
    }

    pub fn from_actions<I, S>(actions: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Action>,
    {
        History(actions.into_iter().map(Into::into).collect())
    }

    /// Number of actions, i.e. the depth of this history in the tree.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn actions(&self) -> &[Action] {
        &self.0
    }

    /// The history extended by one action.
    pub fn child(&self, action: &str) -> Self {
        let mut actions = self.0.clone();
        actions.push(action.to_string());
        History(actions)
    }

    /// The immediate prefix, or `None` for the root.
    pub fn parent(&self) -> Option<Self> {
        if self.0.is_empty() {
            None
        } else {
            Some(History(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// The action taken last, or `None` for the root.
    pub fn last_action(&self) -> Option<&Action> {
        self.0.last()
    }

    /// The prefix of length `k`. Panics if `k` exceeds the length.
    pub fn prefix(&self, k: usize) -> Self {
        History(self.0[..k].to_vec())
    }

    /// All prefixes from the root up to and including the history itself.
    pub fn prefixes(&self) -> impl Iterator<Item = History> + '_ {
        (0..=self.0.len()).map(move |k| self.prefix(k))
    }

    /// Reflexive prefix relation `h ⊴ h'`.
    pub fn is_prefix_of(&self, other: &History) -> bool {
        self.0.len() <= other.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// Strict prefix relation `h ◁ h'`.
    pub fn is_strict_prefix_of(&self, other: &History) -> bool {
        self.0.len() < other.0.len() && self.is_prefix_of(other)
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            write!(f, ".")
        } else {
            write!(f, "{}", self.0.join("."))
        }
    }
}

impl fmt::Debug for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Error from parsing a history path.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed path {path:?}: {reason}")]
pub struct PathError {
    pub path: String,
    pub reason: String,
}

impl FromStr for History {
    type Err = PathError;

    /// Parses the dot path syntax: `.` is the root, otherwise dot-separated
    /// names over `[A-Za-z0-9_]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "." {
            return Ok(History::root());
        }
        if s.is_empty() {
            return Err(PathError {
                path: s.to_string(),
                reason: "empty path".to_string(),
            });
        }
        let mut actions = Vec::new();
        for part in s.split('.') {
            if part.is_empty() {
                return Err(PathError {
                    path: s.to_string(),
                    reason: "empty path segment".to_string(),
                });
            }
            if !part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(PathError {
                    path: s.to_string(),
                    reason: format!("invalid character in segment {part:?}"),
                });
            }
            actions.push(part.to_string());
        }
        Ok(History(actions))
    }
}

/// Shorthand for building a history from a dot path in tests and fixtures.
/// Panics on malformed input.
pub fn h(path: &str) -> History {
    path.parse().expect("valid history path")
}
