//! Sight functions: per-history sets of visible extensions, with validation
//! and closure repair for the reflexivity, downward-closure (DC) and
//! non-forgetting (NF) properties.

use std::collections::{BTreeMap, BTreeSet};

use crate::history::History;
use crate::payoff::PayoffValue;
use crate::tree::{NodeId, PreferenceTree, TreeError};

/// Raw, not-yet-validated sight assignment keyed by histories.
pub type RawSight = BTreeMap<History, BTreeSet<History>>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SightError {
    #[error(transparent)]
    UnknownHistory(#[from] TreeError),
    #[error("sight of {0} contains {1}, which does not extend it")]
    NotAnExtension(History, History),
    #[error("sight function is invalid: {0}")]
    Invalid(SightViolation),
}

/// One violation of the sight-function properties, with witnessing histories.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum SightViolation {
    /// No sight set was declared for this history.
    MissingEntry(History),
    /// `h ∉ s(h)`.
    Reflexivity(History),
    /// `s(h)` contains a history that does not extend `h`.
    NotAnExtension(History, History),
    /// `h ◁ h' ◁ h''` with `h'' ∈ s(h)` but `h' ∉ s(h)`.
    DownwardClosure(History, History, History),
    /// `h ◁ h' ◁ h''` with `h'' ∈ s(h)` but `h'' ∉ s(h')`.
    NonForgetting(History, History, History),
}

impl std::fmt::Display for SightViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SightViolation::MissingEntry(h) => write!(f, "no sight declared for {h}"),
            SightViolation::Reflexivity(h) => write!(f, "reflexivity: {h} is not in s({h})"),
            SightViolation::NotAnExtension(h, m) => {
                write!(f, "s({h}) contains {m}, which does not extend {h}")
            }
            SightViolation::DownwardClosure(h, mid, far) => {
                write!(
                    f,
                    "DC: {far} is in s({h}) but the intermediate {mid} is not"
                )
            }
            SightViolation::NonForgetting(h, mid, far) => {
                write!(f, "NF: {far} is in s({h}) but not in s({mid})")
            }
        }
    }
}

/// A validated sight function for one tree. `sets[id]` is `s(h)` as node ids;
/// it always contains `id`, is downward closed, and non-forgetting.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SightFunction {
    sets: Vec<BTreeSet<NodeId>>,
}

impl SightFunction {
    /// Full sight: `s(h) = H|_h` for every history.
    pub fn full<P: PayoffValue>(tree: &PreferenceTree<P>) -> Self {
        let sets = tree
            .ids()
            .map(|id| tree.extensions_of(id).into_iter().collect())
            .collect();
        SightFunction { sets }
    }

    /// Horizon sight: `s(h)` is every extension at distance at most `k`.
    pub fn horizon<P: PayoffValue>(tree: &PreferenceTree<P>, k: usize) -> Self {
        let sets = tree
            .ids()
            .map(|id| {
                tree.extensions_of(id)
                    .into_iter()
                    .filter(|&e| tree.depth(e) - tree.depth(id) <= k)
                    .collect()
            })
            .collect();
        SightFunction { sets }
    }

    /// Validates a raw sight map and constructs the function. Histories
    /// absent from `raw` are a violation; use [`SightFunction::repair`] or
    /// the text layer's full-sight default to fill them in.
    pub fn from_raw<P: PayoffValue>(
        tree: &PreferenceTree<P>,
        raw: &RawSight,
    ) -> Result<Self, SightError> {
        let report = validate_sight(tree, raw)?;
        if let Some(v) = report.violations.first() {
            return Err(SightError::Invalid(v.clone()));
        }
        let mut sets = vec![BTreeSet::new(); tree.len()];
        for (h, members) in raw {
            let id = tree.id_of(h)?;
            sets[id] = members
                .iter()
                .map(|m| tree.id_of(m))
                .collect::<Result<_, _>>()?;
        }
        Ok(SightFunction { sets })
    }

    /// Least pointwise superset of `raw` satisfying reflexivity, DC and NF,
    /// computed by iterating the three closure rules to a fixpoint. Keys
    /// missing from `raw` start from the singleton `{h}`.
    pub fn repair<P: PayoffValue>(
        tree: &PreferenceTree<P>,
        raw: &RawSight,
    ) -> Result<Self, SightError> {
        let mut sets: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); tree.len()];
        for (h, members) in raw {
            let id = tree.id_of(h)?;
            for m in members {
                let mid = tree.id_of(m)?;
                if !h.is_prefix_of(m) {
                    return Err(SightError::NotAnExtension(h.clone(), m.clone()));
                }
                sets[id].insert(mid);
            }
        }
        for id in tree.ids() {
            sets[id].insert(id);
        }

        loop {
            let mut changed = false;
            for id in tree.ids() {
                // DC: close each set under intermediate prefixes.
                let additions: Vec<NodeId> = sets[id]
                    .iter()
                    .flat_map(|&far| tree.prefix_ids(far))
                    .filter(|&mid| tree.depth(mid) > tree.depth(id) && !sets[id].contains(&mid))
                    .collect();
                for a in additions {
                    sets[id].insert(a);
                    changed = true;
                }
                // NF: push members down to every intermediate node.
                let pushes: Vec<(NodeId, NodeId)> = sets[id]
                    .iter()
                    .flat_map(|&far| {
                        tree.prefix_ids(far)
                            .into_iter()
                            .filter(move |&mid| mid != id && mid != far)
                            .map(move |mid| (mid, far))
                    })
                    .filter(|&(mid, far)| {
                        tree.depth(mid) > tree.depth(id) && !sets[mid].contains(&far)
                    })
                    .collect();
                for (mid, far) in pushes {
                    sets[mid].insert(far);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Ok(SightFunction { sets })
    }

    pub fn set(&self, id: NodeId) -> &BTreeSet<NodeId> {
        &self.sets[id]
    }

    /// `s(h)` as histories.
    pub fn visible_histories<P: PayoffValue>(
        &self,
        tree: &PreferenceTree<P>,
        h: &History,
    ) -> Result<BTreeSet<History>, TreeError> {
        let id = tree.id_of(h)?;
        Ok(self.sets[id]
            .iter()
            .map(|&m| tree.history(m).clone())
            .collect())
    }

    /// Pointwise inclusion `s1(h) ⊆ s2(h)` for all `h`.
    pub fn pointwise_subset_of(&self, other: &SightFunction) -> bool {
        self.sets.len() == other.sets.len()
            && self
                .sets
                .iter()
                .zip(&other.sets)
                .all(|(a, b)| a.is_subset(b))
    }

    pub fn is_full<P: PayoffValue>(&self, tree: &PreferenceTree<P>) -> bool {
        tree.ids()
            .all(|id| self.sets[id].len() == tree.extensions_of(id).len())
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// The raw map view, for serialization and shrinking.
    pub fn to_raw<P: PayoffValue>(&self, tree: &PreferenceTree<P>) -> RawSight {
        tree.ids()
            .map(|id| {
                (
                    tree.history(id).clone(),
                    self.sets[id]
                        .iter()
                        .map(|&m| tree.history(m).clone())
                        .collect(),
                )
            })
            .collect()
    }
}

/// Validation report: empty exactly when all sight-function properties hold.
#[derive(Debug, Clone, Default)]
pub struct SightReport {
    pub violations: Vec<SightViolation>,
}

impl SightReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a raw sight map against the four properties (domain totality,
/// reflexivity, DC, NF) and reports every violation with its witnesses.
/// Unknown histories in the domain or codomain are errors, not violations.
pub fn validate_sight<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    raw: &RawSight,
) -> Result<SightReport, SightError> {
    let mut sets: Vec<Option<BTreeSet<NodeId>>> = vec![None; tree.len()];
    for (h, members) in raw {
        let id = tree.id_of(h)?;
        let mut set = BTreeSet::new();
        for m in members {
            set.insert(tree.id_of(m)?);
        }
        sets[id] = Some(set);
    }

    let mut violations = Vec::new();
    for id in tree.ids() {
        match &sets[id] {
            None => violations.push(SightViolation::MissingEntry(tree.history(id).clone())),
            Some(set) => {
                let h = tree.history(id);
                if !set.contains(&id) {
                    violations.push(SightViolation::Reflexivity(h.clone()));
                }
                for &m in set {
                    if !h.is_prefix_of(tree.history(m)) {
                        violations.push(SightViolation::NotAnExtension(
                            h.clone(),
                            tree.history(m).clone(),
                        ));
                    }
                }
                for &far in set {
                    if !h.is_prefix_of(tree.history(far)) {
                        continue;
                    }
                    for mid in tree.prefix_ids(far) {
                        if tree.depth(mid) <= tree.depth(id) || mid == far {
                            continue;
                        }
                        if !set.contains(&mid) {
                            violations.push(SightViolation::DownwardClosure(
                                h.clone(),
                                tree.history(mid).clone(),
                                tree.history(far).clone(),
                            ));
                        }
                        let forgets = match &sets[mid] {
                            Some(mid_set) => !mid_set.contains(&far),
                            None => true,
                        };
                        if forgets {
                            violations.push(SightViolation::NonForgetting(
                                h.clone(),
                                tree.history(mid).clone(),
                                tree.history(far).clone(),
                            ));
                        }
                    }
                }
            }
        }
    }
    violations.sort();
    violations.dedup();
    Ok(SightReport { violations })
}
