//! Preference-sight models and their nonstandard update.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::history::History;
use crate::payoff::{Payoff, PayoffValue};
use crate::sight::SightFunction;
use crate::tree::{NodeId, PreferenceTree, TreeError};

use super::formula::Formula;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UpdateError {
    #[error("cannot restrict a model to the empty state set")]
    EmptyRestriction,
    #[error("restriction is not prefix-closed within the current states: {member} survives but its prefix {missing} does not")]
    NonPrefixClosedRestriction { member: History, missing: History },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LogicError {
    #[error(transparent)]
    UnknownHistory(#[from] TreeError),
    #[error("{0} is not a state of the current model")]
    UnknownState(History),
    #[error(transparent)]
    Update(#[from] UpdateError),
}

struct ModelBase<P> {
    tree: PreferenceTree<P>,
    sight: SightFunction,
    /// `V(s(h)‾)` in the full model: all prefixes of members of `s(h)`.
    sight_extension: Vec<BTreeSet<NodeId>>,
}

/// A preference-sight model: states are (a surviving subset of) the tree's
/// histories, reachability is the prefix relation, and the valuation follows
/// the three atom clauses. Preference atoms are state-uniform, so they are
/// stored as one boolean per ordered pair of histories. Models are immutable;
/// updating returns a fresh model.
#[derive(Clone)]
pub struct PSModel<P: PayoffValue = Payoff> {
    base: Arc<ModelBase<P>>,
    states: BTreeSet<NodeId>,
    geq: Vec<bool>,
    /// Identity within one evaluation session; distinguishes updated models
    /// that share a state set but differ on recomputed preference atoms.
    session: u64,
}

impl<P: PayoffValue> std::fmt::Debug for PSModel<P> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PSModel")
            .field("states", &self.state_histories())
            .finish_non_exhaustive()
    }
}

/// Builds the initial model of a preference-sight tree.
pub fn mk_model<P: PayoffValue>(tree: &PreferenceTree<P>, sight: &SightFunction) -> PSModel<P> {
    let n = tree.len();
    let mut geq = vec![false; n * n];
    for a in tree.ids() {
        for b in tree.ids() {
            geq[a * n + b] = tree.weakly_prefers(a, b);
        }
    }
    let sight_extension = tree
        .ids()
        .map(|id| {
            let mut set = BTreeSet::new();
            for &m in sight.set(id) {
                set.extend(tree.prefix_ids(m));
            }
            set
        })
        .collect();
    PSModel {
        base: Arc::new(ModelBase {
            tree: tree.clone(),
            sight: sight.clone(),
            sight_extension,
        }),
        states: tree.ids().collect(),
        geq,
        session: 0,
    }
}

impl<P: PayoffValue> PSModel<P> {
    pub fn tree(&self) -> &PreferenceTree<P> {
        &self.base.tree
    }

    pub fn sight(&self) -> &SightFunction {
        &self.base.sight
    }

    pub fn states(&self) -> &BTreeSet<NodeId> {
        &self.states
    }

    pub fn state_histories(&self) -> BTreeSet<History> {
        self.states
            .iter()
            .map(|&id| self.base.tree.history(id).clone())
            .collect()
    }

    pub fn contains_state(&self, id: NodeId) -> bool {
        self.states.contains(&id)
    }

    /// `V(h̄)` in the current model: surviving prefixes of `h`.
    pub fn at_val(&self, id: NodeId) -> BTreeSet<NodeId> {
        self.base
            .tree
            .prefix_ids(id)
            .into_iter()
            .filter(|s| self.states.contains(s))
            .collect()
    }

    /// `V(s(h)‾)` in the current model.
    pub fn sight_val(&self, id: NodeId) -> BTreeSet<NodeId> {
        self.base.sight_extension[id]
            .iter()
            .copied()
            .filter(|s| self.states.contains(s))
            .collect()
    }

    /// The state-uniform value of the preference atom `h1 ≥ h2`.
    pub fn geq_val(&self, a: NodeId, b: NodeId) -> bool {
        self.geq[a * self.base.tree.len() + b]
    }

    /// States with no proper extension among the current states.
    pub fn current_terminals(&self) -> BTreeSet<NodeId> {
        self.states
            .iter()
            .copied()
            .filter(|&z| {
                !self.states.iter().any(|&x| {
                    self.base
                        .tree
                        .history(z)
                        .is_strict_prefix_of(self.base.tree.history(x))
                })
            })
            .collect()
    }

    /// Restriction to `X`, validating that `X` is a nonempty, prefix-closed
    /// (within the current states) subset. Preference atoms are recomputed
    /// from the maximal surviving terminal continuations.
    pub fn update(&self, restriction: &BTreeSet<NodeId>) -> Result<PSModel<P>, UpdateError> {
        if restriction.is_empty() {
            return Err(UpdateError::EmptyRestriction);
        }
        for &x in restriction {
            debug_assert!(self.states.contains(&x), "restriction must be a subset");
            for p in self.base.tree.prefix_ids(x) {
                if self.states.contains(&p) && !restriction.contains(&p) {
                    return Err(UpdateError::NonPrefixClosedRestriction {
                        member: self.base.tree.history(x).clone(),
                        missing: self.base.tree.history(p).clone(),
                    });
                }
            }
        }
        Ok(self.update_unchecked(restriction))
    }

    /// The update clauses applied to an arbitrary nonempty subset of the
    /// current states. Announcement evaluation goes through here: announced
    /// extensions of negated atoms are not prefix-closed, and the clauses
    /// are well defined regardless.
    pub(crate) fn update_unchecked(&self, restriction: &BTreeSet<NodeId>) -> PSModel<P> {
        debug_assert!(!restriction.is_empty());
        let tree = &self.base.tree;
        let n = tree.len();
        let survivors: Vec<NodeId> = restriction.iter().copied().collect();
        let terminal_survivors: Vec<NodeId> = survivors
            .iter()
            .copied()
            .filter(|&z| {
                !survivors
                    .iter()
                    .any(|&x| tree.history(z).is_strict_prefix_of(tree.history(x)))
            })
            .collect();

        // Representative maximal continuation for every history of the tree
        // (histories outside the restriction still label atoms).
        let mut representative: Vec<Option<NodeId>> = vec![None; n];
        for h in tree.ids() {
            let continuations: Vec<NodeId> = terminal_survivors
                .iter()
                .copied()
                .filter(|&z| tree.history(h).is_prefix_of(tree.history(z)))
                .collect();
            let maximal: Vec<NodeId> = continuations
                .iter()
                .copied()
                .filter(|&z| continuations.iter().all(|&w| self.geq_val(z, w)))
                .collect();
            debug_assert!(
                maximal
                    .windows(2)
                    .all(|p| self.geq_val(p[0], p[1]) && self.geq_val(p[1], p[0])),
                "maximal continuations must be interchangeable"
            );
            representative[h] = maximal.first().copied();
        }

        let mut geq = vec![false; n * n];
        for a in tree.ids() {
            for b in tree.ids() {
                geq[a * n + b] = match (representative[a], representative[b]) {
                    (Some(za), Some(zb)) => self.geq_val(za, zb),
                    _ => false,
                };
            }
        }

        PSModel {
            base: self.base.clone(),
            states: restriction.clone(),
            geq,
            session: 0,
        }
    }

    /// The extension of a formula: the set of current states satisfying it.
    /// Announcement updates are cached across the whole formula, so a big
    /// conjunction announcing the same sight per conjunct updates once.
    pub fn eval_set(&self, formula: &Formula) -> Result<BTreeSet<NodeId>, LogicError> {
        let mut cache = UpdateCache::new();
        self.eval_set_cached(formula, &mut cache)
    }

    fn eval_set_cached(
        &self,
        formula: &Formula,
        cache: &mut UpdateCache<P>,
    ) -> Result<BTreeSet<NodeId>, LogicError> {
        let tree = &self.base.tree;
        Ok(match formula {
            Formula::At(h) => self.at_val(tree.id_of(h)?),
            Formula::SightAtom(h) => self.sight_val(tree.id_of(h)?),
            Formula::Geq(h1, h2) => {
                if self.geq_val(tree.id_of(h1)?, tree.id_of(h2)?) {
                    self.states.clone()
                } else {
                    BTreeSet::new()
                }
            }
            Formula::Not(f) => {
                let inner = self.eval_set_cached(f, cache)?;
                self.states.difference(&inner).copied().collect()
            }
            Formula::And(a, b) => {
                let sa = self.eval_set_cached(a, cache)?;
                let sb = self.eval_set_cached(b, cache)?;
                sa.intersection(&sb).copied().collect()
            }
            Formula::Univ(f) => {
                if self.eval_set_cached(f, cache)? == self.states {
                    self.states.clone()
                } else {
                    BTreeSet::new()
                }
            }
            Formula::Announce(announcement, then) => {
                let ext = self.eval_set_cached(announcement, cache)?;
                let complement: BTreeSet<NodeId> = self.states.difference(&ext).copied().collect();
                if ext.is_empty() {
                    return Ok(self.states.clone());
                }
                let updated = self.cached_update(&ext, cache);
                let then_set = updated.eval_set_cached(then, cache)?;
                complement.union(&then_set).copied().collect()
            }
        })
    }

    /// Updates through the session cache: keys pair the parent model's
    /// session identity with the extension, so two models over the same
    /// state set but different preference atoms never share an entry.
    fn cached_update(&self, ext: &BTreeSet<NodeId>, cache: &mut UpdateCache<P>) -> PSModel<P> {
        if self.base.tree.len() > 128 {
            return self.update_unchecked(ext);
        }
        let ext_mask = ext.iter().fold(0u128, |m, &s| m | (1 << s));
        let key = (self.session, ext_mask);
        if let Some(hit) = cache.map.get(&key) {
            return hit.clone();
        }
        let mut updated = self.update_unchecked(ext);
        updated.session = cache.next_session;
        cache.next_session += 1;
        cache.map.insert(key, updated.clone());
        updated
    }

    /// Truth at one state.
    pub fn eval(&self, state: &History, formula: &Formula) -> Result<bool, LogicError> {
        let id = self.base.tree.id_of(state)?;
        if !self.states.contains(&id) {
            return Err(LogicError::UnknownState(state.clone()));
        }
        Ok(self.eval_set(formula)?.contains(&id))
    }

    /// Truth at every state, with a falsifying state on failure.
    pub fn valid(&self, formula: &Formula) -> Result<Validity, LogicError> {
        let set = self.eval_set(formula)?;
        let counterexample = self
            .states
            .iter()
            .find(|s| !set.contains(s))
            .map(|&id| self.base.tree.history(id).clone());
        Ok(Validity {
            valid: counterexample.is_none(),
            counterexample,
        })
    }
}

struct UpdateCache<P: PayoffValue> {
    map: HashMap<(u64, u128), PSModel<P>>,
    next_session: u64,
}

impl<P: PayoffValue> UpdateCache<P> {
    fn new() -> Self {
        UpdateCache {
            map: HashMap::new(),
            next_session: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Validity {
    pub valid: bool,
    pub counterexample: Option<History>,
}
