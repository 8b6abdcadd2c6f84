//! Consistency between subjective and objective preference, the two
//! equivalence conditions (sight-reachability and local optimality), and the
//! combined verdict relating them to equality of the two solution sets.

use std::collections::{BTreeMap, BTreeSet};

use crate::history::History;
use crate::payoff::PayoffValue;
use crate::sight::SightFunction;
use crate::solve::{bi_set, scbi_set};
use crate::tree::{NodeId, PreferenceTree, TreeError};
use crate::visible::visible_tree_at;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EquivalenceError {
    #[error(transparent)]
    UnknownHistory(#[from] TreeError),
    #[error("{0} is not a terminal history")]
    NotTerminal(History),
    #[error("{0} is not sight-reachable, so local optimality is undefined for it")]
    NotSightReachable(History),
}

// ---------------------------------------------------------------------------
// Preference-sight consistency
// ---------------------------------------------------------------------------

/// Result of the consistency check. `witness` is a violating `(h, h1, h2)`
/// triple: inside the visible tree at `h`, the subjective comparison of
/// `h1` against `h2` disagrees with the objective one. Strict reversals not
/// involving the viewpoint itself are preferred as witnesses; the verdict
/// covers every pair either way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyOutcome {
    pub consistent: bool,
    pub witness: Option<(History, History, History)>,
}

pub fn is_ps_consistent<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
) -> ConsistencyOutcome {
    let mut strict_reversal_inner: Option<(NodeId, NodeId, NodeId)> = None;
    let mut strict_reversal: Option<(NodeId, NodeId, NodeId)> = None;
    let mut any: Option<(NodeId, NodeId, NodeId)> = None;

    for x in tree.ids() {
        let visible = visible_tree_at(tree, sight, x);
        let members: Vec<NodeId> = visible.members().iter().copied().collect();
        for &h1 in &members {
            for &h2 in &members {
                let objective = tree.weakly_prefers(h1, h2);
                let subjective = visible.subjectively_weakly_prefers(h1, h2);
                if objective == subjective {
                    continue;
                }
                let triple = (x, h1, h2);
                any.get_or_insert(triple);
                let strict = subjective
                    && !visible.subjectively_weakly_prefers(h2, h1)
                    && tree.weakly_prefers(h2, h1)
                    && !objective;
                if strict {
                    strict_reversal.get_or_insert(triple);
                    if h1 != x && h2 != x {
                        strict_reversal_inner.get_or_insert(triple);
                    }
                }
            }
        }
    }

    let witness = strict_reversal_inner.or(strict_reversal).or(any);
    ConsistencyOutcome {
        consistent: witness.is_none(),
        witness: witness.map(|(x, h1, h2)| {
            (
                tree.history(x).clone(),
                tree.history(h1).clone(),
                tree.history(h2).clone(),
            )
        }),
    }
}

// ---------------------------------------------------------------------------
// Condition I: sight-reachability
// ---------------------------------------------------------------------------

/// Whether every one-step restriction of `terminal` is visible at its
/// predecessor. The witness is the first `(h, (ha))` step that is not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SightReachability {
    pub reachable: bool,
    pub witness: Option<(History, History)>,
}

pub fn is_sight_reachable<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
    terminal: &History,
) -> Result<SightReachability, EquivalenceError> {
    let id = tree.id_of(terminal)?;
    if !tree.is_terminal(id) {
        return Err(EquivalenceError::NotTerminal(terminal.clone()));
    }
    let prefixes = tree.prefix_ids(id);
    for step in prefixes.windows(2) {
        let (at, next) = (step[0], step[1]);
        if !sight.set(at).contains(&next) {
            return Ok(SightReachability {
                reachable: false,
                witness: Some((tree.history(at).clone(), tree.history(next).clone())),
            });
        }
    }
    Ok(SightReachability {
        reachable: true,
        witness: None,
    })
}

// ---------------------------------------------------------------------------
// Condition II: local optimality
// ---------------------------------------------------------------------------

/// Why local optimality failed at some prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocalOptimalityFailure {
    /// No maximal visible terminal at `at` extends the next step of the
    /// checked history, so the locally best play points elsewhere.
    StepNotJustified {
        at: History,
        step: History,
        best: History,
    },
    /// `other` ties with the visible prefix but begins no globally maximal
    /// terminal.
    TieWithoutContinuation {
        at: History,
        prefix: History,
        other: History,
    },
    /// `other` begins a globally maximal terminal but does not tie with the
    /// visible prefix.
    ContinuationWithoutTie {
        at: History,
        prefix: History,
        other: History,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalOptimality {
    pub optimal: bool,
    pub failure: Option<LocalOptimalityFailure>,
}

/// Checks condition II for a terminal history. Requires condition I first:
/// the theorem's reading of "the visible prefix" only makes sense for
/// sight-reachable histories.
pub fn is_locally_optimal<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
    terminal: &History,
) -> Result<LocalOptimality, EquivalenceError> {
    let reach = is_sight_reachable(tree, sight, terminal)?;
    if !reach.reachable {
        return Err(EquivalenceError::NotSightReachable(terminal.clone()));
    }
    let id = tree.id_of(terminal)?;
    let bi = bi_set(tree);
    Ok(local_optimality_unchecked(tree, sight, id, &bi))
}

/// The condition-II body, shared with the verdict (which manages the
/// precondition itself).
///
/// Two clauses per prefix of the target. First, the step clause: some
/// maximal visible terminal extends the next step of the target, i.e. the
/// locally best play keeps the target's direction open. (Without it the
/// condition goes vacuous at prefixes whose visible frontier toward the
/// target is an internal node, and the equivalence breaks: the sight can
/// rank a whole other branch on top while no visible terminal lies on the
/// target at all.) Second, the tie clause on the visible prefix, when one
/// exists.
pub(crate) fn local_optimality_unchecked<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
    terminal: NodeId,
    bi: &BTreeSet<NodeId>,
) -> LocalOptimality {
    let target = tree.history(terminal);
    let walk = tree.prefix_ids(terminal);
    for (position, &at) in walk.iter().enumerate() {
        let visible = visible_tree_at(tree, sight, at);
        let maxima = visible.local_max_terminals(tree);

        if let Some(&step) = walk.get(position + 1) {
            let justified = maxima
                .iter()
                .any(|&z| tree.history(step).is_prefix_of(tree.history(z)));
            if !justified {
                let best = *maxima
                    .iter()
                    .next()
                    .expect("visible terminals are nonempty");
                return LocalOptimality {
                    optimal: false,
                    failure: Some(LocalOptimalityFailure::StepNotJustified {
                        at: tree.history(at).clone(),
                        step: tree.history(step).clone(),
                        best: tree.history(best).clone(),
                    }),
                };
            }
        }

        // The prefixes of the target inside Z_at form an antichain, so there
        // is at most one: the longest visible prefix.
        let prefix = visible
            .terminals()
            .iter()
            .copied()
            .find(|&z| tree.history(z).is_prefix_of(target));
        let prefix = match prefix {
            Some(p) => p,
            None => continue,
        };
        for &other in visible.terminals() {
            let tie = tree.prefer_ids(prefix, other) == std::cmp::Ordering::Equal;
            let continues_bi = bi
                .iter()
                .any(|&z| tree.history(other).is_prefix_of(tree.history(z)));
            if tie != continues_bi {
                let failure = if tie {
                    LocalOptimalityFailure::TieWithoutContinuation {
                        at: tree.history(at).clone(),
                        prefix: tree.history(prefix).clone(),
                        other: tree.history(other).clone(),
                    }
                } else {
                    LocalOptimalityFailure::ContinuationWithoutTie {
                        at: tree.history(at).clone(),
                        prefix: tree.history(prefix).clone(),
                        other: tree.history(other).clone(),
                    }
                };
                return LocalOptimality {
                    optimal: false,
                    failure: Some(failure),
                };
            }
        }
    }
    LocalOptimality {
        optimal: true,
        failure: None,
    }
}

// ---------------------------------------------------------------------------
// The combined verdict
// ---------------------------------------------------------------------------

/// Per-history outcome of the two conditions for one globally maximal
/// terminal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionCheck {
    pub sight_reachable: bool,
    pub reachability_witness: Option<(History, History)>,
    /// `None` when condition I already failed (condition II presupposes it).
    pub locally_optimal: Option<bool>,
    pub optimality_failure: Option<LocalOptimalityFailure>,
}

impl ConditionCheck {
    pub fn passes_both(&self) -> bool {
        self.sight_reachable && self.locally_optimal == Some(true)
    }
}

/// The full equivalence report: both solution sets, the per-history condition
/// checks, and the consistency verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub bi: BTreeSet<History>,
    pub scbi: BTreeSet<History>,
    pub equal: bool,
    pub per_bi_history: BTreeMap<History, ConditionCheck>,
    pub consistent: bool,
    pub consistency_witness: Option<(History, History, History)>,
    /// Whether all payoffs are pairwise distinct: in that regime the
    /// equivalence theorem is asserted, otherwise only reported.
    pub distinct_payoffs: bool,
    /// `equal ⇔ every globally maximal terminal passes conditions I and II`.
    pub theorem_agrees: bool,
}

pub fn equivalence_verdict<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
) -> EquivalenceReport {
    let bi_ids = bi_set(tree);
    let scbi_ids = scbi_set(tree, sight);
    let equal = bi_ids == scbi_ids;

    let mut per_bi_history = BTreeMap::new();
    for &b in &bi_ids {
        let history = tree.history(b).clone();
        let reach = is_sight_reachable(tree, sight, &history)
            .expect("members of the maximal set are terminal");
        let (locally_optimal, optimality_failure) = if reach.reachable {
            let lo = local_optimality_unchecked(tree, sight, b, &bi_ids);
            (Some(lo.optimal), lo.failure)
        } else {
            (None, None)
        };
        per_bi_history.insert(
            history,
            ConditionCheck {
                sight_reachable: reach.reachable,
                reachability_witness: reach.witness,
                locally_optimal,
                optimality_failure,
            },
        );
    }

    let consistency = is_ps_consistent(tree, sight);
    let all_pass = per_bi_history.values().all(ConditionCheck::passes_both);
    let distinct_payoffs = tree.has_distinct_payoffs();
    let theorem_agrees = equal == all_pass;
    if distinct_payoffs {
        assert!(
            theorem_agrees,
            "equivalence theorem violated on a distinct-payoff instance: \
             equal={equal}, conditions={all_pass}"
        );
    }

    EquivalenceReport {
        bi: bi_ids.iter().map(|&id| tree.history(id).clone()).collect(),
        scbi: scbi_ids
            .iter()
            .map(|&id| tree.history(id).clone())
            .collect(),
        equal,
        per_bi_history,
        consistent: consistency.consistent,
        consistency_witness: consistency.witness,
        distinct_payoffs,
        theorem_agrees,
    }
}
