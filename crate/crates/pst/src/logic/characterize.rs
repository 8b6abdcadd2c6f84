//! Formula builders: the syntactic abbreviations and the characterization
//! formulas for consistency, the two equivalence conditions, equivalence
//! itself, and the local-rationality property.
//!
//! Each builder instantiates the displayed big conjunctions and disjunctions
//! over one finite tree. The resulting formulas are deliberately independent
//! of the checkers in [`crate::equivalence`] and [`crate::solve`]: agreement
//! between the two routes is part of the test suite.

use std::collections::BTreeSet;

use crate::history::History;
use crate::payoff::PayoffValue;
use crate::sight::SightFunction;
use crate::solve::bi_set;
use crate::tree::{NodeId, PreferenceTree};
use crate::visible::{visible_tree_at, VisibleTree};

use super::formula::Formula;

/// `Z̄_h`: disjunction of the visible-terminal atoms at `h`.
pub fn visible_terminals_formula<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
    at: NodeId,
) -> Formula {
    let visible = visible_tree_at(tree, sight, at);
    Formula::disj(
        visible
            .terminals()
            .iter()
            .map(|&z| Formula::at(tree.history(z).clone())),
    )
}

/// `max̄_≥ X`: disjunction of the atoms of the objectively maximal members.
pub fn maxima_formula<P: PayoffValue>(tree: &PreferenceTree<P>, set: &BTreeSet<NodeId>) -> Formula {
    Formula::disj(
        tree.maxima(set)
            .into_iter()
            .map(|m| Formula::at(tree.history(m).clone())),
    )
}

/// `B̄I`: disjunction over the globally maximal terminals.
pub fn optimal_outcomes_formula<P: PayoffValue>(tree: &PreferenceTree<P>) -> Formula {
    Formula::disj(
        bi_set(tree)
            .into_iter()
            .map(|z| Formula::at(tree.history(z).clone())),
    )
}

/// `S̄CBI`: disjunction over the sight-compatible solution set.
pub fn sighted_outcomes_formula<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
) -> Formula {
    Formula::disj(
        crate::solve::scbi_set(tree, sight)
            .into_iter()
            .map(|z| Formula::at(tree.history(z).clone())),
    )
}

/// Consistency characterization: announcing any sight leaves every visible
/// preference atom unchanged, in both directions.
pub fn consistency_formula<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
) -> Formula {
    Formula::conj(tree.ids().map(|at| {
        let announcement = Formula::sight(tree.history(at).clone());
        let members: Vec<NodeId> = sight.set(at).iter().copied().collect();
        Formula::conj(members.iter().flat_map(|&h1| {
            let announcement = announcement.clone();
            members.iter().map(move |&h2| {
                let atom = Formula::geq(tree.history(h1).clone(), tree.history(h2).clone());
                Formula::and(
                    Formula::implies(
                        atom.clone(),
                        Formula::announce(announcement.clone(), atom.clone()),
                    ),
                    Formula::implies(
                        Formula::diamond_announce(announcement.clone(), atom.clone()),
                        atom,
                    ),
                )
            })
        }))
    }))
}

/// `A(x̄ → ȳ)`: in prefix-valuation models this encodes `x ⊴ y`.
fn globally_below(x: &History, y: &History) -> Formula {
    Formula::univ(Formula::implies(
        Formula::at(x.clone()),
        Formula::at(y.clone()),
    ))
}

/// Condition I as a formula: every one-step restriction of `target` is
/// inside the announced sight of its predecessor.
pub fn sight_reachability_formula<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    target: &History,
) -> Formula {
    Formula::conj(tree.ids().flat_map(|at| {
        let at_history = tree.history(at).clone();
        let target = target.clone();
        tree.children(at).iter().copied().map(move |step| {
            let step_history = tree.history(step).clone();
            Formula::implies(
                globally_below(&step_history, &target),
                Formula::univ(Formula::implies(
                    Formula::at(step_history.clone()),
                    Formula::sight(at_history.clone()),
                )),
            )
        })
    }))
}

/// Condition II as a formula, mirroring the checker clause for clause. Per
/// prefix of `target`: the step clause (some maximal visible terminal
/// extends the next step of the target) and, on every visible-terminal
/// prefix of the target, the tie clause (ties are exactly the prefixes of
/// globally maximal terminals).
pub fn local_optimality_formula<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
    target: &History,
) -> Formula {
    let bi: Vec<History> = bi_set(tree)
        .into_iter()
        .map(|z| tree.history(z).clone())
        .collect();
    Formula::conj(tree.ids().map(|at| {
        let at_history = tree.history(at).clone();
        let visible = visible_tree_at(tree, sight, at);
        let visible_terminals: Vec<NodeId> = visible.terminals().iter().copied().collect();
        let maxima = maxima_formula(tree, visible.terminals());

        let step_clause = if at_history.is_strict_prefix_of(target) {
            let step = target.prefix(at_history.len() + 1);
            Formula::disj(visible_terminals.iter().map(|&z| {
                let z_history = tree.history(z).clone();
                Formula::and(
                    globally_below(&step, &z_history),
                    Formula::univ(Formula::implies(
                        Formula::at(z_history.clone()),
                        maxima.clone(),
                    )),
                )
            }))
        } else {
            Formula::taut()
        };

        let tie_clauses = Formula::conj(visible_terminals.iter().map(|&prefix| {
            let prefix_history = tree.history(prefix).clone();
            let per_other = Formula::conj(visible_terminals.iter().map(|&other| {
                let other_history = tree.history(other).clone();
                Formula::iff(
                    Formula::indifferent(prefix_history.clone(), other_history.clone()),
                    Formula::disj(bi.iter().map(|z| globally_below(&other_history, z))),
                )
            }));
            Formula::implies(globally_below(&prefix_history, target), per_other)
        }));

        Formula::and(step_clause, tie_clauses)
    }))
}

/// The equivalence characterization: the two solution formulas coincide
/// everywhere exactly when every globally maximal terminal satisfies both
/// condition formulas. Valid on every model.
pub fn equivalence_formula<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
) -> Formula {
    let lhs = Formula::univ(Formula::iff(
        optimal_outcomes_formula(tree),
        sighted_outcomes_formula(tree, sight),
    ));
    let rhs = Formula::conj(tree.terminal_ids().into_iter().map(|z| {
        let z_history = tree.history(z).clone();
        Formula::implies(
            Formula::univ(Formula::implies(
                Formula::at(z_history.clone()),
                optimal_outcomes_formula(tree),
            )),
            Formula::and(
                sight_reachability_formula(tree, &z_history),
                local_optimality_formula(tree, sight, &z_history),
            ),
        )
    }));
    Formula::iff(lhs, rhs)
}

/// The first visible move chosen by the canonical local solver selection,
/// then followed to a visible terminal.
fn canonical_local_outcome<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    visible: &VisibleTree<P>,
    from: NodeId,
) -> NodeId {
    let mut cur = from;
    while !visible.is_visible_terminal(cur) {
        let best = visible
            .children_of(tree, cur)
            .max_by(|&a, &b| {
                visible
                    .subjective_payoff(a)
                    .cmp(visible.subjective_payoff(b))
                    .then(b.cmp(&a))
            })
            .expect("non-terminal visible member has a visible child");
        cur = best;
    }
    cur
}

/// The local-rationality characterization: at every history, the outcome of
/// the locally best play equals some visible terminal that is weakly above
/// every outcome of any alternative first visible move.
pub fn local_rationality_formula<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
) -> Formula {
    Formula::conj(tree.ids().map(|at| {
        let visible = visible_tree_at(tree, sight, at);
        if visible.is_visible_terminal(at) {
            return Formula::taut();
        }
        let own = canonical_local_outcome(tree, &visible, at);
        let own_history = tree.history(own).clone();
        let alternatives: Vec<NodeId> = visible.children_of(tree, at).collect();
        Formula::disj(visible.terminals().iter().map(|&z| {
            let z_history = tree.history(z).clone();
            let selected = Formula::univ(Formula::iff(
                Formula::at(own_history.clone()),
                Formula::at(z_history.clone()),
            ));
            let dominated = Formula::conj(alternatives.iter().map(|&alt| {
                let alt_outcome = canonical_local_outcome(tree, &visible, alt);
                let alt_history = tree.history(alt_outcome).clone();
                Formula::conj(visible.terminals().iter().map(|&z2| {
                    let z2_history = tree.history(z2).clone();
                    Formula::implies(
                        Formula::univ(Formula::iff(
                            Formula::at(alt_history.clone()),
                            Formula::at(z2_history.clone()),
                        )),
                        Formula::geq(z_history.clone(), z2_history.clone()),
                    )
                }))
            }));
            Formula::and(selected, dominated)
        }))
    }))
}

/// The visible-tree analogue of the terminality schema: visible terminals
/// pretending to be real ones. Not valid; masked instances refute it.
pub fn visible_terminality_formula<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
) -> Formula {
    Formula::conj(tree.ids().map(|u| {
        let visible = visible_tree_at(tree, sight, u);
        Formula::conj(visible.terminals().iter().map(|&z| {
            let z_history = tree.history(z).clone();
            Formula::conj(tree.ids().map(|other| {
                let other_history = tree.history(other).clone();
                Formula::implies(
                    globally_below(&z_history, &other_history),
                    globally_below(&other_history, &z_history),
                )
            }))
        }))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivalence::{is_locally_optimal, is_ps_consistent, is_sight_reachable};
    use crate::fixtures;
    use crate::history::h;
    use crate::logic::mk_model;
    use crate::solve::rats_check;

    #[test]
    fn consistency_formula_matches_the_checker_on_fixtures() {
        for (tree, sight) in fixtures::all_fixtures() {
            let model = mk_model(&tree, &sight);
            let formula = consistency_formula(&tree, &sight);
            let verdict = model.valid(&formula).unwrap();
            assert_eq!(verdict.valid, is_ps_consistent(&tree, &sight).consistent);
        }
    }

    #[test]
    fn flipped_mid_fails_the_consistency_formula() {
        let tree = fixtures::flipped_mid();
        let sight = SightFunction::full(&tree);
        let model = mk_model(&tree, &sight);
        assert!(
            !model
                .valid(&consistency_formula(&tree, &sight))
                .unwrap()
                .valid
        );
    }

    #[test]
    fn sight_reachability_formula_matches_the_checker() {
        for (tree, sight) in fixtures::all_fixtures() {
            let model = mk_model(&tree, &sight);
            for z in tree.terminals() {
                let formula = sight_reachability_formula(&tree, &z);
                let verdict = model.valid(&formula).unwrap();
                let checker = is_sight_reachable(&tree, &sight, &z).unwrap();
                assert_eq!(verdict.valid, checker.reachable, "at {z}");
            }
        }
    }

    #[test]
    fn masked_best_branch_is_not_reachable_by_formula() {
        let tree = fixtures::masked_best();
        let sight = fixtures::masked_best_sight(&tree);
        let model = mk_model(&tree, &sight);
        let formula = sight_reachability_formula(&tree, &h("L.L"));
        assert!(!model.valid(&formula).unwrap().valid);
    }

    #[test]
    fn local_optimality_formula_matches_the_checker() {
        for (tree, sight) in fixtures::all_fixtures() {
            let model = mk_model(&tree, &sight);
            for z in tree.terminals() {
                let reach = is_sight_reachable(&tree, &sight, &z).unwrap();
                if !reach.reachable {
                    continue;
                }
                let formula = local_optimality_formula(&tree, &sight, &z);
                let verdict = model.valid(&formula).unwrap();
                let checker = is_locally_optimal(&tree, &sight, &z).unwrap();
                assert_eq!(verdict.valid, checker.optimal, "at {z}");
            }
        }
    }

    #[test]
    fn equivalence_formula_is_valid_on_every_fixture() {
        for (tree, sight) in fixtures::all_fixtures() {
            let model = mk_model(&tree, &sight);
            let formula = equivalence_formula(&tree, &sight);
            let verdict = model.valid(&formula).unwrap();
            assert!(
                verdict.valid,
                "counterexample: {:?}",
                verdict.counterexample
            );
        }
    }

    #[test]
    fn cfs_formula_matches_the_rats_checker() {
        for (tree, sight) in fixtures::all_fixtures() {
            let model = mk_model(&tree, &sight);
            let formula = local_rationality_formula(&tree, &sight);
            let verdict = model.valid(&formula).unwrap();
            assert_eq!(verdict.valid, rats_check(&tree, &sight).holds);
            assert!(verdict.valid);
        }
    }

    #[test]
    fn fact7_is_refuted_on_the_masked_fixture() {
        let tree = fixtures::masked_best();
        let sight = fixtures::masked_best_sight(&tree);
        let model = mk_model(&tree, &sight);
        assert!(
            !model
                .valid(&visible_terminality_formula(&tree, &sight))
                .unwrap()
                .valid
        );
    }
}
