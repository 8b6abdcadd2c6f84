//! Solution concepts: global backward induction, sight-compatible backward
//! induction, the confluence-pruned move relations, and the local-rationality
//! check.
//!
//! Every solution set here is computed along two independent routes and the
//! routes are asserted equal: the direct argmax route and the greatest-fixed-
//! point pruning route for relations, the terminal-filter route and the
//! forward-construction route for SCBI.

use std::collections::{BTreeMap, BTreeSet};

use crate::history::{Action, History};
use crate::payoff::PayoffValue;
use crate::sight::SightFunction;
use crate::tree::{NodeId, PreferenceTree, TreeError};
use crate::visible::{VisibleCache, VisibleTree};

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StrategyError {
    #[error(transparent)]
    UnknownHistory(#[from] TreeError),
    #[error("no choice declared at non-terminal {0}")]
    Incomplete(History),
    #[error("action {1:?} is not available at {0}")]
    UnavailableAction(History, Action),
}

/// A deterministic strategy: one chosen child per non-terminal history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    choices: BTreeMap<NodeId, NodeId>,
}

impl Strategy {
    /// Builds a strategy from per-history action choices; must be total on
    /// non-terminals and pick available actions only.
    pub fn from_actions<P: PayoffValue>(
        tree: &PreferenceTree<P>,
        actions: &BTreeMap<History, Action>,
    ) -> Result<Self, StrategyError> {
        let mut choices = BTreeMap::new();
        for (history, action) in actions {
            let id = tree.id_of(history)?;
            let child = tree
                .child_by_action(id, action)
                .ok_or_else(|| StrategyError::UnavailableAction(history.clone(), action.clone()))?;
            choices.insert(id, child);
        }
        for id in tree.ids() {
            if !tree.is_terminal(id) && !choices.contains_key(&id) {
                return Err(StrategyError::Incomplete(tree.history(id).clone()));
            }
        }
        Ok(Strategy { choices })
    }

    /// The strategy that always takes the alphabetically first action.
    pub fn first_action<P: PayoffValue>(tree: &PreferenceTree<P>) -> Self {
        let choices = tree
            .ids()
            .filter(|&id| !tree.is_terminal(id))
            .map(|id| (id, tree.children(id)[0]))
            .collect();
        Strategy { choices }
    }

    pub fn choice(&self, id: NodeId) -> Option<NodeId> {
        self.choices.get(&id).copied()
    }

    /// The terminal history reached from `id` by following the strategy.
    pub fn outcome_from<P: PayoffValue>(&self, tree: &PreferenceTree<P>, id: NodeId) -> NodeId {
        let mut cur = id;
        while let Some(next) = self.choices.get(&cur) {
            cur = *next;
        }
        debug_assert!(tree.is_terminal(cur));
        cur
    }
}

// ---------------------------------------------------------------------------
// Global backward induction
// ---------------------------------------------------------------------------

/// Terminal histories with maximal payoff. Nonempty for every valid tree.
pub fn bi_set<P: PayoffValue>(tree: &PreferenceTree<P>) -> BTreeSet<NodeId> {
    let terminals: BTreeSet<NodeId> = tree.terminal_ids().into_iter().collect();
    tree.maxima(&terminals)
}

pub fn bi_histories<P: PayoffValue>(tree: &PreferenceTree<P>) -> BTreeSet<History> {
    bi_set(tree)
        .into_iter()
        .map(|id| tree.history(id).clone())
        .collect()
}

/// A one-step move relation over tree nodes (empty at terminals).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiRelation {
    moves: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl BiRelation {
    pub fn moves_at(&self, id: NodeId) -> BTreeSet<NodeId> {
        self.moves.get(&id).cloned().unwrap_or_default()
    }

    pub fn actions_at<P: PayoffValue>(
        &self,
        tree: &PreferenceTree<P>,
        id: NodeId,
    ) -> BTreeSet<Action> {
        self.moves_at(id)
            .into_iter()
            .map(|c| tree.history(c).last_action().unwrap().clone())
            .collect()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.moves
            .iter()
            .flat_map(|(&y, zs)| zs.iter().map(move |&z| (y, z)))
    }

    /// All deterministic selections through the relation. Exponential in the
    /// number of ties; intended for small trees.
    pub fn strategies<P: PayoffValue>(&self, tree: &PreferenceTree<P>) -> Vec<Strategy> {
        let keys: Vec<NodeId> = tree.ids().filter(|&id| !tree.is_terminal(id)).collect();
        let mut out = vec![BTreeMap::new()];
        for &id in &keys {
            let options = self.moves_at(id);
            let mut next = Vec::with_capacity(out.len() * options.len());
            for partial in out {
                for &choice in &options {
                    let mut p: BTreeMap<NodeId, NodeId> = partial.clone();
                    p.insert(id, choice);
                    next.push(p);
                }
            }
            out = next;
        }
        out.into_iter()
            .map(|choices| Strategy { choices })
            .collect()
    }

    /// The selection taking the smallest chosen child everywhere.
    pub fn canonical_strategy<P: PayoffValue>(&self, tree: &PreferenceTree<P>) -> Strategy {
        let choices = tree
            .ids()
            .filter(|&id| !tree.is_terminal(id))
            .map(|id| {
                (
                    id,
                    *self
                        .moves_at(id)
                        .iter()
                        .next()
                        .expect("relation has a successor at every non-terminal"),
                )
            })
            .collect();
        Strategy { choices }
    }
}

/// The classical backward-induction move relation together with the backward
/// values used to build it.
#[derive(Debug, Clone)]
pub struct BiSolution<P> {
    pub relation: BiRelation,
    pub values: Vec<P>,
}

/// Computes the classical BI relation two ways and asserts they coincide:
/// backward argmax values, and greatest-fixed-point pruning of moves that
/// violate the confluence property (no alternative move may yield an outcome
/// strictly better than all outcomes of the chosen move).
pub fn classical_bi_relation<P: PayoffValue>(tree: &PreferenceTree<P>) -> BiSolution<P> {
    let backward = bi_by_backward_values(tree);
    let pruned = bi_by_cf_pruning(tree);
    assert_eq!(
        backward.relation, pruned,
        "backward-value and CF-pruning constructions disagree"
    );
    backward
}

fn bi_by_backward_values<P: PayoffValue>(tree: &PreferenceTree<P>) -> BiSolution<P> {
    let mut values: Vec<Option<P>> = vec![None; tree.len()];
    let mut order: Vec<NodeId> = tree.ids().collect();
    order.sort_by_key(|&id| std::cmp::Reverse(tree.depth(id)));
    for id in order {
        let v = if tree.is_terminal(id) {
            tree.payoff(id).clone()
        } else {
            tree.children(id)
                .iter()
                .map(|c| values[*c].clone().unwrap())
                .max()
                .unwrap()
        };
        values[id] = Some(v);
    }
    let values: Vec<P> = values.into_iter().map(Option::unwrap).collect();
    let moves = tree
        .ids()
        .filter(|&id| !tree.is_terminal(id))
        .map(|id| {
            let best = &values[id];
            let argmax = tree
                .children(id)
                .iter()
                .copied()
                .filter(|&c| &values[c] == best)
                .collect();
            (id, argmax)
        })
        .collect();
    BiSolution {
        relation: BiRelation { moves },
        values,
    }
}

fn bi_by_cf_pruning<P: PayoffValue>(tree: &PreferenceTree<P>) -> BiRelation {
    let mut moves: BTreeMap<NodeId, BTreeSet<NodeId>> = tree
        .ids()
        .filter(|&id| !tree.is_terminal(id))
        .map(|id| (id, tree.children(id).iter().copied().collect()))
        .collect();

    loop {
        let outcomes = relation_outcomes(tree, &moves);
        let mut next: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        let mut changed = false;
        for (&y, zs) in &moves {
            let mut kept = BTreeSet::new();
            for &z in zs {
                let ok = tree
                    .children(y)
                    .iter()
                    .all(|&t| confluence_holds(tree, &outcomes[z], &outcomes[t]));
                if ok {
                    kept.insert(z);
                } else {
                    changed = true;
                }
            }
            next.insert(y, kept);
        }
        moves = next;
        if !changed {
            break;
        }
    }
    for (&y, zs) in &moves {
        assert!(
            !zs.is_empty(),
            "pruning removed every move at {}",
            tree.history(y)
        );
    }
    BiRelation { moves }
}

/// `∃u ∈ chosen: ∀v ∈ alternative: u ≥ v`.
fn confluence_holds<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    chosen: &BTreeSet<NodeId>,
    alternative: &BTreeSet<NodeId>,
) -> bool {
    let best_chosen = match chosen.iter().map(|&u| tree.payoff(u)).max() {
        Some(b) => b,
        None => return false,
    };
    alternative.iter().all(|&v| best_chosen >= tree.payoff(v))
}

/// Terminal outcomes reachable from each node by following a move relation.
fn relation_outcomes<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    moves: &BTreeMap<NodeId, BTreeSet<NodeId>>,
) -> Vec<BTreeSet<NodeId>> {
    let mut out: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); tree.len()];
    let mut order: Vec<NodeId> = tree.ids().collect();
    order.sort_by_key(|&id| std::cmp::Reverse(tree.depth(id)));
    for id in order {
        if tree.is_terminal(id) {
            out[id].insert(id);
        } else if let Some(zs) = moves.get(&id) {
            let mut set = BTreeSet::new();
            for &z in zs {
                set.extend(out[z].iter().copied());
            }
            out[id] = set;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Sight-compatible backward induction
// ---------------------------------------------------------------------------

/// SCBI histories: terminals every step of which begins some maximal visible
/// terminal of the visible tree at that step. Computed by filtering the
/// terminal set and by forward construction, asserted equal.
pub fn scbi_set<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
) -> BTreeSet<NodeId> {
    let mut cache = VisibleCache::new(tree, sight);
    let filtered = scbi_by_filter(tree, &mut cache);
    let forward = scbi_by_forward(tree, &mut cache);
    assert_eq!(
        filtered, forward,
        "terminal-filter and forward SCBI constructions disagree"
    );
    filtered
}

pub fn scbi_histories<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
) -> BTreeSet<History> {
    scbi_set(tree, sight)
        .into_iter()
        .map(|id| tree.history(id).clone())
        .collect()
}

/// Whether the one-step restriction of `terminal` at `at` is justified: some
/// maximal visible terminal of the visible tree at `at` extends that step.
fn step_justified<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    visible: &VisibleTree<P>,
    next: NodeId,
) -> bool {
    let next_history = tree.history(next);
    visible
        .local_max_terminals(tree)
        .iter()
        .any(|&z| next_history.is_prefix_of(tree.history(z)))
}

fn scbi_by_filter<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    cache: &mut VisibleCache<P>,
) -> BTreeSet<NodeId> {
    tree.terminal_ids()
        .into_iter()
        .filter(|&terminal| {
            let prefixes = tree.prefix_ids(terminal);
            prefixes.windows(2).all(|step| {
                let visible = cache.at(step[0]);
                step_justified(tree, &visible, step[1])
            })
        })
        .collect()
}

fn scbi_by_forward<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    cache: &mut VisibleCache<P>,
) -> BTreeSet<NodeId> {
    let mut reached = BTreeSet::new();
    let mut stack = vec![tree.root()];
    while let Some(id) = stack.pop() {
        if tree.is_terminal(id) {
            reached.insert(id);
            continue;
        }
        let visible = cache.at(id);
        for &child in tree.children(id) {
            if step_justified(tree, &visible, child) {
                stack.push(child);
            }
        }
    }
    reached
}

// ---------------------------------------------------------------------------
// The ternary sight relation and its diagonal
// ---------------------------------------------------------------------------

/// The ternary relation `(x, y, z)`: at viewpoint `x`, moving from `y` to its
/// child `z` is a locally optimal move inside the visible tree at `x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiSightRelation {
    triples: BTreeSet<(NodeId, NodeId, NodeId)>,
}

impl BiSightRelation {
    pub fn triples(&self) -> &BTreeSet<(NodeId, NodeId, NodeId)> {
        &self.triples
    }

    pub fn contains(&self, x: NodeId, y: NodeId, z: NodeId) -> bool {
        self.triples.contains(&(x, y, z))
    }

    /// The slice at viewpoint `x` as a one-step relation.
    pub fn slice(&self, x: NodeId) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
        let mut out: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        for &(sx, y, z) in &self.triples {
            if sx == x {
                out.entry(y).or_default().insert(z);
            }
        }
        out
    }
}

/// Greatest relation satisfying the visibility guard and the sight-local
/// rationality body, computed by pruning the full guarded relation until
/// stable. Each fixed-`x` slice is asserted equal to the classical BI
/// relation of the visible tree at `x`.
pub fn bi_sight_gfp<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
) -> BiSightRelation {
    let mut triples = BTreeSet::new();
    for x in tree.ids() {
        let slice = prune_slice(tree, sight, x);
        let oracle = local_bi_moves(tree, sight, x);
        assert_eq!(
            slice,
            oracle,
            "pruned slice at {} disagrees with the classical relation of its visible tree",
            tree.history(x)
        );
        for (y, zs) in slice {
            for z in zs {
                triples.insert((x, y, z));
            }
        }
    }
    BiSightRelation { triples }
}

/// Prunes the guarded relation at one viewpoint: keep `(y, z)` while for
/// every visible move `y → t` some visible-terminal outcome of `z` is at
/// least every visible-terminal outcome of `t`.
fn prune_slice<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
    x: NodeId,
) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
    let members = sight.set(x);
    let visible_terminals: BTreeSet<NodeId> = members
        .iter()
        .copied()
        .filter(|&id| !tree.children(id).iter().any(|c| members.contains(c)))
        .collect();

    let mut moves: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for &y in members {
        let kids: BTreeSet<NodeId> = tree
            .children(y)
            .iter()
            .copied()
            .filter(|c| members.contains(c))
            .collect();
        if !kids.is_empty() {
            moves.insert(y, kids);
        }
    }

    loop {
        let outcomes = slice_outcomes(tree, members, &visible_terminals, &moves);
        let mut next: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        let mut changed = false;
        for (&y, zs) in &moves {
            let alternatives: Vec<NodeId> = tree
                .children(y)
                .iter()
                .copied()
                .filter(|c| members.contains(c))
                .collect();
            let mut kept = BTreeSet::new();
            for &z in zs {
                let ok = alternatives
                    .iter()
                    .all(|&t| confluence_holds(tree, &outcomes[&z], &outcomes[&t]));
                if ok {
                    kept.insert(z);
                } else {
                    changed = true;
                }
            }
            if kept.is_empty() {
                changed = true;
            } else {
                next.insert(y, kept);
            }
        }
        moves = next;
        if !changed {
            break;
        }
    }
    moves
}

fn slice_outcomes<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    members: &BTreeSet<NodeId>,
    visible_terminals: &BTreeSet<NodeId>,
    moves: &BTreeMap<NodeId, BTreeSet<NodeId>>,
) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
    let mut order: Vec<NodeId> = members.iter().copied().collect();
    order.sort_by_key(|&id| std::cmp::Reverse(tree.depth(id)));
    let mut out: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for id in order {
        let set = if visible_terminals.contains(&id) {
            BTreeSet::from([id])
        } else {
            let mut set = BTreeSet::new();
            if let Some(zs) = moves.get(&id) {
                for z in zs {
                    set.extend(out[z].iter().copied());
                }
            }
            set
        };
        out.insert(id, set);
    }
    out
}

/// Classical BI of the visible tree at `x`, mapped back to absolute node
/// ids: the local strategy relation that sight-compatible solving follows.
pub fn local_bi_moves<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
    x: NodeId,
) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
    let visible = crate::visible::visible_tree_at(tree, sight, x);
    let local = visible.to_tree(tree).expect("visible tree is a P tree");
    let solution = classical_bi_relation(&local);
    let base = tree.history(x).clone();
    let to_absolute = |local_id: NodeId| -> NodeId {
        let mut actions: Vec<Action> = base.actions().to_vec();
        actions.extend(local.history(local_id).actions().iter().cloned());
        tree.id_of(&History::from_actions(actions))
            .expect("visible member exists in the tree")
    };
    let mut out: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for (y, z) in solution.relation.pairs() {
        out.entry(to_absolute(y))
            .or_default()
            .insert(to_absolute(z));
    }
    out
}

/// The diagonal slice `scbi(x, y) ⇔ (x, x, y)` of the ternary relation.
/// Following it from the root to the tree's terminals is asserted to yield
/// exactly the SCBI set.
pub fn scbi_relation<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
    relation: &BiSightRelation,
) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
    let mut diagonal: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for &(x, y, z) in &relation.triples {
        if x == y {
            diagonal.entry(x).or_default().insert(z);
        }
    }

    let mut reached = BTreeSet::new();
    let mut stack = vec![tree.root()];
    while let Some(id) = stack.pop() {
        match diagonal.get(&id) {
            Some(nexts) if !nexts.is_empty() => stack.extend(nexts.iter().copied()),
            _ => {
                if tree.is_terminal(id) {
                    reached.insert(id);
                }
            }
        }
    }
    assert_eq!(
        reached,
        scbi_set(tree, sight),
        "diagonal path outcomes disagree with the SCBI set"
    );
    diagonal
}

// ---------------------------------------------------------------------------
// Local rationality (RATS)
// ---------------------------------------------------------------------------

/// Outcome of the local-rationality check: at every history, some outcome of
/// the checked strategy inside the visible tree is no worse than every
/// outcome of any alternative first visible move followed by that strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatsOutcome {
    pub holds: bool,
    /// On failure, the violating `(history, chosen move)` pair.
    pub witness: Option<(History, History)>,
}

/// Checks RATS for the computed local BI relation of every visible tree.
/// True by construction; the check enumerates outcomes rather than trusting
/// the solver.
pub fn rats_check<P: PayoffValue>(tree: &PreferenceTree<P>, sight: &SightFunction) -> RatsOutcome {
    rats_check_with(tree, sight, None)
}

/// Checks RATS for a caller-supplied strategy, restricted to each visible
/// tree. The strategy is followed inside the visible members until a visible
/// terminal (or a move leaving the members) is reached.
pub fn rats_check_strategy<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
    strategy: &Strategy,
) -> RatsOutcome {
    rats_check_with(tree, sight, Some(strategy))
}

fn rats_check_with<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
    strategy: Option<&Strategy>,
) -> RatsOutcome {
    for x in tree.ids() {
        let visible = crate::visible::visible_tree_at(tree, sight, x);
        if visible.is_visible_terminal(x) {
            continue;
        }
        let local_moves: BTreeMap<NodeId, BTreeSet<NodeId>> = match strategy {
            None => local_bi_moves(tree, sight, x),
            Some(s) => restrict_strategy(&visible, s),
        };
        let own_outcomes = follow_outcomes(&visible, &local_moves, x);
        let alternatives: Vec<NodeId> = tree
            .children(x)
            .iter()
            .copied()
            .filter(|c| visible.contains(*c))
            .collect();
        let dominated = alternatives.iter().all(|&t| {
            let alt_outcomes = follow_outcomes(&visible, &local_moves, t);
            confluence_holds(tree, &own_outcomes, &alt_outcomes)
        });
        if !dominated {
            let chosen = local_moves
                .get(&x)
                .and_then(|zs| zs.iter().next().copied())
                .unwrap_or(x);
            return RatsOutcome {
                holds: false,
                witness: Some((tree.history(x).clone(), tree.history(chosen).clone())),
            };
        }
    }
    RatsOutcome {
        holds: true,
        witness: None,
    }
}

fn restrict_strategy<P: PayoffValue>(
    visible: &VisibleTree<P>,
    strategy: &Strategy,
) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
    let mut out = BTreeMap::new();
    for &m in visible.members() {
        if visible.is_visible_terminal(m) {
            continue;
        }
        if let Some(choice) = strategy.choice(m) {
            if visible.contains(choice) {
                out.insert(m, BTreeSet::from([choice]));
            }
        }
    }
    out
}

/// Visible-terminal outcomes from `start` following a move map; a node with
/// no move of its own counts as its own outcome.
fn follow_outcomes<P: PayoffValue>(
    visible: &VisibleTree<P>,
    moves: &BTreeMap<NodeId, BTreeSet<NodeId>>,
    start: NodeId,
) -> BTreeSet<NodeId> {
    let mut out = BTreeSet::new();
    let mut stack = vec![start];
    while let Some(id) = stack.pop() {
        if visible.is_visible_terminal(id) {
            out.insert(id);
            continue;
        }
        match moves.get(&id) {
            Some(zs) if !zs.is_empty() => stack.extend(zs.iter().copied()),
            _ => {
                out.insert(id);
            }
        }
    }
    out
}
