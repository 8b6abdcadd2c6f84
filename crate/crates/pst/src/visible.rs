//! Visible trees: the sight-restricted tree at a history, with subjective
//! payoffs propagated bottom-up from the visible terminals.
//!
//! The propagation keeps the payoffs of visible terminals and resets every
//! other visible node to the maximum over its visible children, in a single
//! leaves-first pass; the equivalent flag-loop formulation (sweep until
//! every node whose visible children are finished is finished) is kept as a
//! test oracle.

use std::collections::{BTreeMap, BTreeSet};

use crate::history::History;
use crate::payoff::PayoffValue;
use crate::sight::SightFunction;
use crate::tree::{NodeId, PreferenceTree, TreeError};

/// The visible tree `T_h`: members `H_h = s(h)`, visible terminals `Z_h`
/// (members with no successor among the members), and the subjective payoff
/// `P_h` for every member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibleTree<P> {
    root: NodeId,
    members: BTreeSet<NodeId>,
    terminals: BTreeSet<NodeId>,
    subjective: BTreeMap<NodeId, P>,
}

impl<P: PayoffValue> VisibleTree<P> {
    pub fn root(&self) -> NodeId {
        self.root
    }

    /// `H_h`.
    pub fn members(&self) -> &BTreeSet<NodeId> {
        &self.members
    }

    /// `Z_h`. Its members are terminal for the visible tree but typically
    /// not for the underlying tree.
    pub fn terminals(&self) -> &BTreeSet<NodeId> {
        &self.terminals
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.members.contains(&id)
    }

    pub fn is_visible_terminal(&self, id: NodeId) -> bool {
        self.terminals.contains(&id)
    }

    /// The subjective payoff `P_h` of a member.
    pub fn subjective_payoff(&self, id: NodeId) -> &P {
        &self.subjective[&id]
    }

    /// Subjective preference: `P_h(a) >= P_h(b)`.
    pub fn subjectively_weakly_prefers(&self, a: NodeId, b: NodeId) -> bool {
        self.subjective[&a] >= self.subjective[&b]
    }

    /// Visible children of a member.
    pub fn children_of<'t>(
        &'t self,
        tree: &'t PreferenceTree<P>,
        id: NodeId,
    ) -> impl Iterator<Item = NodeId> + 't {
        tree.children(id)
            .iter()
            .copied()
            .filter(move |c| self.members.contains(c))
    }

    /// Maxima of `Z_h` under the objective payoff (equal to the subjective
    /// payoff on visible terminals).
    pub fn local_max_terminals(&self, tree: &PreferenceTree<P>) -> BTreeSet<NodeId> {
        tree.maxima(&self.terminals)
    }

    /// Rebuilds the visible tree as a standalone preference tree rooted at
    /// its root, carrying the subjective payoffs: histories are re-based so
    /// the visible root becomes the empty history.
    pub fn to_tree(&self, tree: &PreferenceTree<P>) -> Result<PreferenceTree<P>, TreeError> {
        let base = tree.history(self.root).len();
        let entries = self.members.iter().map(|&id| {
            let full = tree.history(id);
            let rebased = History::from_actions(full.actions()[base..].iter().cloned());
            (rebased, self.subjective[&id].clone())
        });
        PreferenceTree::new(entries)
    }
}

/// Builds the visible tree of `(tree, sight)` at `h`, computing subjective
/// payoffs in one leaves-first pass over the members.
pub fn visible_tree<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
    h: &History,
) -> Result<VisibleTree<P>, TreeError> {
    let root = tree.id_of(h)?;
    Ok(visible_tree_at(tree, sight, root))
}

pub fn visible_tree_at<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
    root: NodeId,
) -> VisibleTree<P> {
    let members = sight.set(root).clone();
    let terminals: BTreeSet<NodeId> = members
        .iter()
        .copied()
        .filter(|&id| !tree.children(id).iter().any(|c| members.contains(c)))
        .collect();

    // Members sorted by depth descending; every node's visible children are
    // finished before the node itself.
    let mut order: Vec<NodeId> = members.iter().copied().collect();
    order.sort_by_key(|&id| std::cmp::Reverse(tree.depth(id)));

    let mut subjective: BTreeMap<NodeId, P> = BTreeMap::new();
    for id in order {
        let value = if terminals.contains(&id) {
            tree.payoff(id).clone()
        } else {
            tree.children(id)
                .iter()
                .filter(|c| members.contains(*c))
                .map(|c| subjective[c].clone())
                .max()
                .expect("non-terminal member has a visible child")
        };
        subjective.insert(id, value);
    }

    VisibleTree {
        root,
        members,
        terminals,
        subjective,
    }
}

/// Caches visible trees per node for one `(tree, sight)` pair. Solvers walk
/// every prefix of every terminal, so memoizing pays off quickly.
pub struct VisibleCache<'a, P> {
    tree: &'a PreferenceTree<P>,
    sight: &'a SightFunction,
    memo: Vec<Option<std::rc::Rc<VisibleTree<P>>>>,
}

impl<'a, P: PayoffValue> VisibleCache<'a, P> {
    pub fn new(tree: &'a PreferenceTree<P>, sight: &'a SightFunction) -> Self {
        VisibleCache {
            tree,
            sight,
            memo: vec![None; tree.len()],
        }
    }

    pub fn at(&mut self, id: NodeId) -> std::rc::Rc<VisibleTree<P>> {
        if let Some(v) = &self.memo[id] {
            return v.clone();
        }
        let v = std::rc::Rc::new(visible_tree_at(self.tree, self.sight, id));
        self.memo[id] = Some(v.clone());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::history::h;
    use crate::payoff::Payoff;

    fn ratio(n: i64) -> Payoff {
        Payoff::from_integer(n)
    }

    /// Literal transcription of the flag-loop update: repeatedly sweep the
    /// members, finishing any node whose visible children are all finished.
    fn flag_loop_oracle(
        tree: &PreferenceTree<Payoff>,
        sight: &SightFunction,
        root: NodeId,
    ) -> BTreeMap<NodeId, Payoff> {
        let members = sight.set(root).clone();
        let terminals: BTreeSet<NodeId> = members
            .iter()
            .copied()
            .filter(|&id| !tree.children(id).iter().any(|c| members.contains(c)))
            .collect();
        let mut payoff: BTreeMap<NodeId, Payoff> = BTreeMap::new();
        let mut flag: BTreeSet<NodeId> = BTreeSet::new();
        for &z in &terminals {
            payoff.insert(z, *tree.payoff(z));
            flag.insert(z);
        }
        while !flag.contains(&root) {
            for &n in &members {
                if flag.contains(&n) {
                    continue;
                }
                let kids: Vec<NodeId> = tree
                    .children(n)
                    .iter()
                    .copied()
                    .filter(|c| members.contains(c))
                    .collect();
                if kids.iter().all(|c| flag.contains(c)) {
                    let best = kids.iter().map(|c| payoff[c]).max().unwrap();
                    payoff.insert(n, best);
                    flag.insert(n);
                }
            }
        }
        payoff
    }

    #[test]
    fn flipped_mid_full_sight_updates_l_to_3_and_r_to_2() {
        let tree = fixtures::flipped_mid();
        let sight = SightFunction::full(&tree);
        let v = visible_tree(&tree, &sight, &h(".")).unwrap();
        assert_eq!(*v.subjective_payoff(tree.id_of(&h("L")).unwrap()), ratio(3));
        assert_eq!(*v.subjective_payoff(tree.id_of(&h("R")).unwrap()), ratio(2));
        assert_eq!(*v.subjective_payoff(tree.root()), ratio(3));
    }

    #[test]
    fn singleton_sight_keeps_the_objective_payoff() {
        let tree = fixtures::two_stage();
        let sight = SightFunction::horizon(&tree, 0);
        let id = tree.id_of(&h("R")).unwrap();
        let v = visible_tree(&tree, &sight, &h("R")).unwrap();
        assert_eq!(v.members(), &BTreeSet::from([id]));
        assert_eq!(v.terminals(), &BTreeSet::from([id]));
        assert_eq!(v.subjective_payoff(id), tree.payoff(id));
    }

    #[test]
    fn linear_pass_agrees_with_the_flag_loop_oracle() {
        for (tree, sight) in fixtures::all_fixtures() {
            for id in tree.ids() {
                let fast = visible_tree_at(&tree, &sight, id);
                let slow = flag_loop_oracle(&tree, &sight, id);
                for &m in fast.members() {
                    assert_eq!(fast.subjective_payoff(m), &slow[&m]);
                }
            }
        }
    }

    #[test]
    fn subjective_payoff_equals_best_visible_terminal_continuation() {
        for (tree, sight) in fixtures::all_fixtures() {
            for id in tree.ids() {
                let v = visible_tree_at(&tree, &sight, id);
                for &m in v.members() {
                    let brute = v
                        .terminals()
                        .iter()
                        .filter(|&&z| tree.history(m).is_prefix_of(tree.history(z)))
                        .map(|&z| *tree.payoff(z))
                        .max()
                        .unwrap();
                    assert_eq!(*v.subjective_payoff(m), brute);
                }
            }
        }
    }

    #[test]
    fn visible_trees_are_preference_trees() {
        for (tree, sight) in fixtures::all_fixtures() {
            for id in tree.ids() {
                let v = visible_tree_at(&tree, &sight, id);
                let rebuilt = v.to_tree(&tree).expect("visible tree re-roots to a P tree");
                assert_eq!(rebuilt.len(), v.members().len());
            }
        }
    }

    #[test]
    fn local_max_terminals_on_the_fixtures() {
        let two_stage = fixtures::two_stage();
        let narrow = fixtures::two_stage_narrow(&two_stage);
        let v = visible_tree(&two_stage, &narrow, &h(".")).unwrap();
        assert_eq!(
            v.local_max_terminals(&two_stage),
            BTreeSet::from([two_stage.id_of(&h("R.L")).unwrap()])
        );

        let masked = fixtures::masked_best();
        let sight2 = fixtures::masked_best_sight(&masked);
        let v2 = visible_tree(&masked, &sight2, &h(".")).unwrap();
        assert_eq!(
            v2.local_max_terminals(&masked),
            BTreeSet::from([masked.id_of(&h("L")).unwrap()])
        );

        let flipped = fixtures::flipped_mid();
        let full = SightFunction::full(&flipped);
        let v3 = visible_tree(&flipped, &full, &h(".")).unwrap();
        assert_eq!(
            v3.local_max_terminals(&flipped),
            BTreeSet::from([flipped.id_of(&h("L.L")).unwrap()])
        );
    }

    #[test]
    fn full_sight_reproduces_the_global_maximum_at_the_root() {
        for (tree, _) in fixtures::all_fixtures() {
            let full = SightFunction::full(&tree);
            let v = visible_tree_at(&tree, &full, tree.root());
            let z: BTreeSet<NodeId> = tree.terminal_ids().into_iter().collect();
            assert_eq!(v.terminals(), &z);
            let best = z.iter().map(|&id| *tree.payoff(id)).max().unwrap();
            assert_eq!(*v.subjective_payoff(tree.root()), best);
        }
    }
}
