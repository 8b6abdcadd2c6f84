//! Modal surface logic of best action over preference-sight trees.
//!
//! One-step best-move relations (`[best]`, `[bi]`, `[scbi]`, and their
//! sight-local variants) include a stay-put step at every state: moving is
//! never forced once play is over, and the reflexive reading is what makes
//! the step-invariance principles below state-independent facts about
//! reachable outcomes. The pure `[move]` relation stays irreflexive.
//!
//! Sight-relative operators evaluate against the visible tree anchored at
//! the most recent `[view]` announcement; outside any view context the
//! anchor is the evaluation state itself.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::rc::Rc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::history::History;
use crate::logic::PSModel;
use crate::payoff::PayoffValue;
use crate::sight::SightFunction;
use crate::solve::{bi_set, classical_bi_relation, scbi_set, Strategy};
use crate::tree::{NodeId, PreferenceTree, TreeError};
use crate::visible::visible_tree_at;

// ---------------------------------------------------------------------------
// Syntax
// ---------------------------------------------------------------------------

/// A formula of the modal language. Box modalities are primitive; diamonds
/// are sugar through negation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MFormula {
    /// Reaching atom of the base language.
    At(History),
    /// Preference atom of the base language.
    Geq(History, History),
    /// Sight atom of the base language.
    SightAtom(History),
    /// A propositional atom with a caller-supplied state-set valuation.
    Atom(String),
    /// True at the tree's terminal histories.
    End,
    /// True at the visible terminals of the anchored visible tree.
    EndSight,
    Not(Box<MFormula>),
    And(Box<MFormula>, Box<MFormula>),
    /// `[!φ]ψ` of the base language.
    Announce(Box<MFormula>, Box<MFormula>),
    /// `A φ`.
    Univ(Box<MFormula>),
    /// `[move]`: all surviving children.
    Move(Box<MFormula>),
    /// `[best]`: the backward-induction move relation (with stay).
    Best(Box<MFormula>),
    /// `[bi]`: identical to `[best]`.
    Bi(Box<MFormula>),
    /// `[bi*]`: reflexive-transitive closure of the move part.
    BiStar(Box<MFormula>),
    /// `[BI]`: all globally maximal terminals.
    BiGlobal(Box<MFormula>),
    /// `[scbi]`: the sight-compatible move relation (with stay).
    Scbi(Box<MFormula>),
    /// `[scbi*]`.
    ScbiStar(Box<MFormula>),
    /// `[SCBI]`: all sight-compatible outcomes.
    ScbiGlobal(Box<MFormula>),
    /// `[view]`: announce the sight at the current state and anchor there.
    View(Box<MFormula>),
    /// `[movev]`: visible children.
    MoveV(Box<MFormula>),
    /// `[bestv]`: local best moves of the anchored visible tree (with stay).
    BestV(Box<MFormula>),
    /// `[biv]`: identical to `[bestv]`.
    BiV(Box<MFormula>),
    /// `[biv*]`.
    BiVStar(Box<MFormula>),
    /// `[BIv]`: maximal visible terminals of the visible tree at the
    /// current state.
    BivLocal(Box<MFormula>),
    /// `<leq>`: some weakly-preferred state satisfies the body.
    LeqDiamond(Box<MFormula>),
    /// `[sigma NAME]`: all terminals reached by the named strategy.
    Sigma(String, Box<MFormula>),
}

macro_rules! unary_builders {
    ($(($fn:ident, $variant:ident)),* $(,)?) => {
        $(pub fn $fn(f: MFormula) -> MFormula {
            MFormula::$variant(Box::new(f))
        })*
    };
}

impl MFormula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: MFormula) -> MFormula {
        MFormula::Not(Box::new(f))
    }

    unary_builders![
        (univ, Univ),
        (boxed_move, Move),
        (boxed_best, Best),
        (boxed_bi, Bi),
        (boxed_bi_star, BiStar),
        (boxed_bi_global, BiGlobal),
        (boxed_scbi, Scbi),
        (boxed_scbi_star, ScbiStar),
        (boxed_scbi_global, ScbiGlobal),
        (view, View),
        (boxed_move_v, MoveV),
        (boxed_best_v, BestV),
        (boxed_bi_v, BiV),
        (boxed_bi_v_star, BiVStar),
        (boxed_biv_local, BivLocal),
        (leq_diamond, LeqDiamond),
    ];

    pub fn atom(name: &str) -> MFormula {
        MFormula::Atom(name.to_string())
    }

    pub fn and(a: MFormula, b: MFormula) -> MFormula {
        MFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: MFormula, b: MFormula) -> MFormula {
        MFormula::not(MFormula::and(MFormula::not(a), MFormula::not(b)))
    }

    pub fn implies(a: MFormula, b: MFormula) -> MFormula {
        MFormula::not(MFormula::and(a, MFormula::not(b)))
    }

    pub fn iff(a: MFormula, b: MFormula) -> MFormula {
        MFormula::and(
            MFormula::implies(a.clone(), b.clone()),
            MFormula::implies(b, a),
        )
    }

    pub fn announce(a: MFormula, b: MFormula) -> MFormula {
        MFormula::Announce(Box::new(a), Box::new(b))
    }

    pub fn sigma(name: &str, f: MFormula) -> MFormula {
        MFormula::Sigma(name.to_string(), Box::new(f))
    }

    /// `⟨op⟩φ` as `¬[op]¬φ` for any unary box builder.
    pub fn diamond(boxed: impl Fn(MFormula) -> MFormula, f: MFormula) -> MFormula {
        MFormula::not(boxed(MFormula::not(f)))
    }
}

impl fmt::Display for MFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MFormula::At(h) => write!(f, "at({h})"),
            MFormula::Geq(a, b) => write!(f, "geq({a},{b})"),
            MFormula::SightAtom(h) => write!(f, "sg({h})"),
            MFormula::Atom(name) => write!(f, "@{name}"),
            MFormula::End => write!(f, "end"),
            MFormula::EndSight => write!(f, "endv"),
            MFormula::Not(x) => write!(f, "~{x}"),
            MFormula::And(a, b) => write!(f, "({a} & {b})"),
            MFormula::Announce(a, b) => write!(f, "[ann {a}] {b}"),
            MFormula::Univ(x) => write!(f, "A {x}"),
            MFormula::Move(x) => write!(f, "[move] {x}"),
            MFormula::Best(x) => write!(f, "[best] {x}"),
            MFormula::Bi(x) => write!(f, "[bi] {x}"),
            MFormula::BiStar(x) => write!(f, "[bi*] {x}"),
            MFormula::BiGlobal(x) => write!(f, "[BI] {x}"),
            MFormula::Scbi(x) => write!(f, "[scbi] {x}"),
            MFormula::ScbiStar(x) => write!(f, "[scbi*] {x}"),
            MFormula::ScbiGlobal(x) => write!(f, "[SCBI] {x}"),
            MFormula::View(x) => write!(f, "[view] {x}"),
            MFormula::MoveV(x) => write!(f, "[movev] {x}"),
            MFormula::BestV(x) => write!(f, "[bestv] {x}"),
            MFormula::BiV(x) => write!(f, "[biv] {x}"),
            MFormula::BiVStar(x) => write!(f, "[biv*] {x}"),
            MFormula::BivLocal(x) => write!(f, "[BIv] {x}"),
            MFormula::LeqDiamond(x) => write!(f, "<leq> {x}"),
            MFormula::Sigma(name, x) => write!(f, "[sigma {name}] {x}"),
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModalError {
    #[error(transparent)]
    UnknownHistory(#[from] TreeError),
    #[error("{0} is not a state of the current model")]
    UnknownState(History),
    #[error("no strategy registered under the name {0:?}")]
    UnknownStrategy(String),
    #[error("no valuation registered for the atom {0:?}")]
    UnknownAtom(String),
}

pub type Valuation = BTreeMap<String, BTreeSet<NodeId>>;
pub type StrategyTable = BTreeMap<String, Strategy>;
type MoveMap = BTreeMap<NodeId, BTreeSet<NodeId>>;

/// Shared evaluation machinery for one `(tree, sight)` pair: the global
/// relations are computed once and the per-anchor visible solutions are
/// cached.
pub struct ModalEvaluator<'a, P: PayoffValue> {
    tree: &'a PreferenceTree<P>,
    sight: &'a SightFunction,
    valuation: Valuation,
    strategies: StrategyTable,
    bi_moves: BTreeMap<NodeId, BTreeSet<NodeId>>,
    scbi_moves: BTreeMap<NodeId, BTreeSet<NodeId>>,
    bi_outcomes: BTreeSet<NodeId>,
    scbi_outcomes: BTreeSet<NodeId>,
    local_bi: RefCell<BTreeMap<NodeId, Rc<MoveMap>>>,
    local_max: RefCell<BTreeMap<NodeId, Rc<BTreeSet<NodeId>>>>,
    visible_terminals: RefCell<BTreeMap<NodeId, Rc<BTreeSet<NodeId>>>>,
}

struct Ctx<P: PayoffValue> {
    model: PSModel<P>,
    anchor: Option<NodeId>,
}

impl<'a, P: PayoffValue> ModalEvaluator<'a, P> {
    pub fn new(tree: &'a PreferenceTree<P>, sight: &'a SightFunction) -> Self {
        let bi_moves = classical_bi_relation(tree).relation.pairs().fold(
            BTreeMap::new(),
            |mut acc: BTreeMap<_, BTreeSet<_>>, (y, z)| {
                acc.entry(y).or_default().insert(z);
                acc
            },
        );
        let mut scbi_moves: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        for x in tree.ids() {
            let visible = visible_tree_at(tree, sight, x);
            let maxima = visible.local_max_terminals(tree);
            let firsts: BTreeSet<NodeId> = tree
                .children(x)
                .iter()
                .copied()
                .filter(|&c| {
                    visible.contains(c)
                        && maxima
                            .iter()
                            .any(|&z| tree.history(c).is_prefix_of(tree.history(z)))
                })
                .collect();
            if !firsts.is_empty() {
                scbi_moves.insert(x, firsts);
            }
        }
        ModalEvaluator {
            tree,
            sight,
            valuation: Valuation::new(),
            strategies: StrategyTable::new(),
            bi_moves,
            scbi_moves,
            bi_outcomes: bi_set(tree),
            scbi_outcomes: scbi_set(tree, sight),
            local_bi: RefCell::new(BTreeMap::new()),
            local_max: RefCell::new(BTreeMap::new()),
            visible_terminals: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn set_valuation(&mut self, valuation: Valuation) {
        self.valuation = valuation;
    }

    pub fn register_strategy(&mut self, name: &str, strategy: Strategy) {
        self.strategies.insert(name.to_string(), strategy);
    }

    fn local_bi_at(&self, anchor: NodeId) -> Rc<MoveMap> {
        if let Some(cached) = self.local_bi.borrow().get(&anchor) {
            return cached.clone();
        }
        let rel = Rc::new(crate::solve::local_bi_moves(self.tree, self.sight, anchor));
        self.local_bi.borrow_mut().insert(anchor, rel.clone());
        rel
    }

    fn local_max_at(&self, anchor: NodeId) -> Rc<BTreeSet<NodeId>> {
        if let Some(cached) = self.local_max.borrow().get(&anchor) {
            return cached.clone();
        }
        let visible = visible_tree_at(self.tree, self.sight, anchor);
        let set = Rc::new(visible.local_max_terminals(self.tree));
        self.local_max.borrow_mut().insert(anchor, set.clone());
        set
    }

    fn visible_terminals_at(&self, anchor: NodeId) -> Rc<BTreeSet<NodeId>> {
        if let Some(cached) = self.visible_terminals.borrow().get(&anchor) {
            return cached.clone();
        }
        let visible = visible_tree_at(self.tree, self.sight, anchor);
        let set = Rc::new(visible.terminals().clone());
        self.visible_terminals
            .borrow_mut()
            .insert(anchor, set.clone());
        set
    }

    /// Evaluates at a state of the initial model.
    pub fn eval(&self, state: &History, formula: &MFormula) -> Result<bool, ModalError> {
        let id = self.tree.id_of(state)?;
        let ctx = Ctx {
            model: crate::logic::mk_model(self.tree, self.sight),
            anchor: None,
        };
        self.eval_in(&ctx, id, formula)
    }

    /// Truth at every state of the initial model; returns a falsifying
    /// state when there is one.
    pub fn valid(&self, formula: &MFormula) -> Result<Option<History>, ModalError> {
        let ctx = Ctx {
            model: crate::logic::mk_model(self.tree, self.sight),
            anchor: None,
        };
        for id in self.tree.ids() {
            if !self.eval_in(&ctx, id, formula)? {
                return Ok(Some(self.tree.history(id).clone()));
            }
        }
        Ok(None)
    }

    fn eval_in(&self, ctx: &Ctx<P>, state: NodeId, formula: &MFormula) -> Result<bool, ModalError> {
        let tree = self.tree;
        let states = ctx.model.states();
        debug_assert!(states.contains(&state));
        match formula {
            MFormula::At(h) => Ok(ctx.model.at_val(tree.id_of(h)?).contains(&state)),
            MFormula::Geq(h1, h2) => Ok(ctx.model.geq_val(tree.id_of(h1)?, tree.id_of(h2)?)),
            MFormula::SightAtom(h) => Ok(ctx.model.sight_val(tree.id_of(h)?).contains(&state)),
            MFormula::Atom(name) => {
                let set = self
                    .valuation
                    .get(name)
                    .ok_or_else(|| ModalError::UnknownAtom(name.clone()))?;
                Ok(set.contains(&state))
            }
            MFormula::End => Ok(tree.is_terminal(state)),
            MFormula::EndSight => {
                let anchor = ctx.anchor.unwrap_or(state);
                Ok(self.visible_terminals_at(anchor).contains(&state))
            }
            MFormula::Not(f) => Ok(!self.eval_in(ctx, state, f)?),
            MFormula::And(a, b) => Ok(self.eval_in(ctx, state, a)? && self.eval_in(ctx, state, b)?),
            MFormula::Univ(f) => {
                for &s in states {
                    if !self.eval_in(ctx, s, f)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            MFormula::Announce(announcement, body) => {
                if !self.eval_in(ctx, state, announcement)? {
                    return Ok(true);
                }
                let mut extension = BTreeSet::new();
                for &s in states {
                    if self.eval_in(ctx, s, announcement)? {
                        extension.insert(s);
                    }
                }
                let inner = Ctx {
                    model: ctx.model.update_unchecked(&extension),
                    anchor: ctx.anchor,
                };
                self.eval_in(&inner, state, body)
            }
            MFormula::Move(f) => {
                for &c in tree.children(state) {
                    if states.contains(&c) && !self.eval_in(ctx, c, f)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            MFormula::Best(f) | MFormula::Bi(f) => {
                let targets = step_with_stay(&self.bi_moves, state, states);
                self.box_over(ctx, f, targets)
            }
            MFormula::Scbi(f) => {
                let targets = step_with_stay(&self.scbi_moves, state, states);
                self.box_over(ctx, f, targets)
            }
            MFormula::BiStar(f) => {
                let targets = closure(&self.bi_moves, state, states);
                self.box_over(ctx, f, targets)
            }
            MFormula::ScbiStar(f) => {
                let targets = closure(&self.scbi_moves, state, states);
                self.box_over(ctx, f, targets)
            }
            MFormula::BiGlobal(f) => {
                let targets: Vec<NodeId> = self
                    .bi_outcomes
                    .iter()
                    .copied()
                    .filter(|z| states.contains(z))
                    .collect();
                self.box_over(ctx, f, targets)
            }
            MFormula::ScbiGlobal(f) => {
                let targets: Vec<NodeId> = self
                    .scbi_outcomes
                    .iter()
                    .copied()
                    .filter(|z| states.contains(z))
                    .collect();
                self.box_over(ctx, f, targets)
            }
            MFormula::View(f) => {
                let extension = ctx.model.sight_val(state);
                let inner = Ctx {
                    model: ctx.model.update_unchecked(&extension),
                    anchor: Some(state),
                };
                self.eval_in(&inner, state, f)
            }
            MFormula::MoveV(f) => {
                let members = match ctx.anchor {
                    Some(_) => None,
                    None => Some(self.sight.set(state)),
                };
                for &c in tree.children(state) {
                    let visible = states.contains(&c) && members.is_none_or(|m| m.contains(&c));
                    if visible && !self.eval_in(ctx, c, f)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            MFormula::BestV(f) | MFormula::BiV(f) => {
                let anchor = ctx.anchor.unwrap_or(state);
                let rel = self.local_bi_at(anchor);
                let targets = step_with_stay(&rel, state, states);
                self.box_over(ctx, f, targets)
            }
            MFormula::BiVStar(f) => {
                let anchor = ctx.anchor.unwrap_or(state);
                let rel = self.local_bi_at(anchor);
                let targets = closure(&rel, state, states);
                self.box_over(ctx, f, targets)
            }
            MFormula::BivLocal(f) => {
                let targets: Vec<NodeId> = self
                    .local_max_at(state)
                    .iter()
                    .copied()
                    .filter(|z| states.contains(z))
                    .collect();
                self.box_over(ctx, f, targets)
            }
            MFormula::LeqDiamond(f) => {
                for &u in states {
                    if ctx.model.geq_val(u, state) && self.eval_in(ctx, u, f)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            MFormula::Sigma(name, f) => {
                let strategy = self
                    .strategies
                    .get(name)
                    .ok_or_else(|| ModalError::UnknownStrategy(name.clone()))?;
                let stop = ctx.model.current_terminals();
                let mut cur = state;
                loop {
                    if stop.contains(&cur) {
                        break;
                    }
                    match strategy.choice(cur) {
                        Some(next) if states.contains(&next) => cur = next,
                        _ => break,
                    }
                }
                self.eval_in(ctx, cur, f)
            }
        }
    }

    fn box_over(
        &self,
        ctx: &Ctx<P>,
        f: &MFormula,
        targets: impl IntoIterator<Item = NodeId>,
    ) -> Result<bool, ModalError> {
        for t in targets {
            if !self.eval_in(ctx, t, f)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn step_with_stay(
    moves: &BTreeMap<NodeId, BTreeSet<NodeId>>,
    state: NodeId,
    states: &BTreeSet<NodeId>,
) -> Vec<NodeId> {
    let mut out = vec![state];
    if let Some(zs) = moves.get(&state) {
        out.extend(zs.iter().copied().filter(|z| states.contains(z)));
    }
    out
}

/// Reflexive-transitive closure of a move map from `start`, restricted to
/// the surviving states.
fn closure(
    moves: &BTreeMap<NodeId, BTreeSet<NodeId>>,
    start: NodeId,
    states: &BTreeSet<NodeId>,
) -> Vec<NodeId> {
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        if let Some(zs) = moves.get(&u) {
            for &z in zs {
                if states.contains(&z) && seen.insert(z) {
                    stack.push(z);
                }
            }
        }
    }
    seen.into_iter().collect()
}

/// One-shot evaluation entry point.
pub fn eval_modal<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
    state: &History,
    formula: &MFormula,
    valuation: &Valuation,
    strategies: &StrategyTable,
) -> Result<bool, ModalError> {
    let mut evaluator = ModalEvaluator::new(tree, sight);
    evaluator.set_valuation(valuation.clone());
    for (name, s) in strategies {
        evaluator.register_strategy(name, s.clone());
    }
    evaluator.eval(state, formula)
}

// ---------------------------------------------------------------------------
// Frame suite
// ---------------------------------------------------------------------------

/// The frame principles checked by the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FrameProp {
    /// The rationality axiom holds for the computed best-move relation.
    BiAxiom,
    /// No other everywhere-successor subrelation of move satisfies it.
    BiAxiomUniqueness,
    /// One sight-compatible step is one local best step after viewing.
    ScbiStepCorrespondence,
    /// The rationality axiom holds inside every viewed model.
    SightRationality,
    /// One best step preserves best-reachable outcomes.
    BestStepInvariance,
    /// One best step need not preserve sight-compatible reachability.
    BestScbiInvariance,
    /// Nor local-best reachability inside a view.
    BestLocalInvariance,
    /// One local best step preserves local-best reachability in a view.
    LocalStepInvariance,
    /// Global outcomes are terminal: stepping again changes nothing.
    OutcomeTerminality,
    /// Visible outcomes need not be terminal.
    VisibleOutcomeTerminality,
    /// Sight-compatible outcomes are terminal.
    ScbiOutcomeTerminality,
    /// Every strategy's outcome is weakly below some best outcome.
    BestDominance,
    /// Sight-compatible outcomes do not dominate arbitrary strategies.
    ScbiDominance,
    /// Inside a view, local best outcomes dominate every strategy.
    LocalDominance,
}

impl FrameProp {
    pub fn all() -> [FrameProp; 14] {
        [
            FrameProp::BiAxiom,
            FrameProp::BiAxiomUniqueness,
            FrameProp::ScbiStepCorrespondence,
            FrameProp::SightRationality,
            FrameProp::BestStepInvariance,
            FrameProp::BestScbiInvariance,
            FrameProp::BestLocalInvariance,
            FrameProp::LocalStepInvariance,
            FrameProp::OutcomeTerminality,
            FrameProp::VisibleOutcomeTerminality,
            FrameProp::ScbiOutcomeTerminality,
            FrameProp::BestDominance,
            FrameProp::ScbiDominance,
            FrameProp::LocalDominance,
        ]
    }

    /// Whether the principle is expected to hold on every instance.
    pub fn expected_valid(self) -> bool {
        !matches!(
            self,
            FrameProp::BestScbiInvariance
                | FrameProp::BestLocalInvariance
                | FrameProp::VisibleOutcomeTerminality
                | FrameProp::ScbiDominance
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            FrameProp::BiAxiom => "bi-axiom",
            FrameProp::BiAxiomUniqueness => "bi-axiom-uniqueness",
            FrameProp::ScbiStepCorrespondence => "scbi-step",
            FrameProp::SightRationality => "sight-rationality",
            FrameProp::BestStepInvariance => "best-step-invariance",
            FrameProp::BestScbiInvariance => "best-scbi-invariance",
            FrameProp::BestLocalInvariance => "best-local-invariance",
            FrameProp::LocalStepInvariance => "local-step-invariance",
            FrameProp::OutcomeTerminality => "outcome-terminality",
            FrameProp::VisibleOutcomeTerminality => "visible-outcome-terminality",
            FrameProp::ScbiOutcomeTerminality => "scbi-outcome-terminality",
            FrameProp::BestDominance => "best-dominance",
            FrameProp::ScbiDominance => "scbi-dominance",
            FrameProp::LocalDominance => "local-dominance",
        }
    }

    pub fn from_name(name: &str) -> Option<FrameProp> {
        FrameProp::all().into_iter().find(|p| p.name() == name)
    }
}

#[derive(Debug, Clone)]
pub struct FrameWitness {
    pub formula: MFormula,
    pub valuation: BTreeSet<History>,
    pub state: History,
    pub strategy: Option<String>,
}

#[derive(Debug, Clone)]
pub struct FrameOutcome {
    pub prop: FrameProp,
    /// For expected-valid props: verified on this instance. For
    /// expected-invalid props: a counterexample was found here.
    pub as_expected: bool,
    pub instances: usize,
    pub witness: Option<FrameWitness>,
}

#[derive(Debug, Clone)]
pub struct FrameReport {
    pub outcomes: Vec<FrameOutcome>,
}

impl FrameReport {
    pub fn outcome(&self, prop: FrameProp) -> &FrameOutcome {
        self.outcomes
            .iter()
            .find(|o| o.prop == prop)
            .expect("every principle is reported")
    }

    /// All expected-valid principles verified.
    pub fn sound(&self) -> bool {
        self.outcomes
            .iter()
            .all(|o| !o.prop.expected_valid() || o.as_expected)
    }
}

pub struct FrameConfig {
    pub random_valuations: usize,
    pub seed: u64,
    /// Run the exhaustive uniqueness confirmation on trees with at most
    /// this many nodes (and distinct terminal payoffs).
    pub uniqueness_node_limit: usize,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            random_valuations: 100,
            seed: 0x70507,
            uniqueness_node_limit: 7,
        }
    }
}

const P_ATOM: &str = "p";
const SIGMA_BI: &str = "sigma_bi";
const SIGMA_FIRST: &str = "sigma_first";
const SIGMA_RND: &str = "sigma_rnd";

fn prop_formula(prop: FrameProp, sigma: &str) -> MFormula {
    use MFormula as F;
    let p = || F::atom(P_ATOM);
    match prop {
        FrameProp::BiAxiom => F::implies(
            F::diamond(F::boxed_bi_star, F::and(F::End, p())),
            F::boxed_move(F::boxed_bi_star(F::implies(F::End, F::leq_diamond(p())))),
        ),
        FrameProp::BiAxiomUniqueness => unreachable!("checked relationally"),
        FrameProp::ScbiStepCorrespondence => F::iff(
            F::diamond(F::boxed_scbi, p()),
            F::view(F::diamond(F::boxed_bi_v, p())),
        ),
        FrameProp::SightRationality => F::view(F::implies(
            F::diamond(F::boxed_bi_v_star, F::and(F::EndSight, p())),
            F::boxed_move_v(F::diamond(
                F::boxed_bi_v_star,
                F::and(F::EndSight, F::leq_diamond(p())),
            )),
        )),
        FrameProp::BestStepInvariance => F::iff(
            F::diamond(F::boxed_best, F::diamond(F::boxed_bi_star, p())),
            F::diamond(F::boxed_bi_star, p()),
        ),
        FrameProp::BestScbiInvariance => F::iff(
            F::diamond(F::boxed_best, F::diamond(F::boxed_scbi_star, p())),
            F::diamond(F::boxed_scbi_star, p()),
        ),
        FrameProp::BestLocalInvariance => F::view(F::iff(
            F::diamond(F::boxed_best, F::diamond(F::boxed_bi_v_star, p())),
            F::diamond(F::boxed_bi_v_star, p()),
        )),
        FrameProp::LocalStepInvariance => F::view(F::iff(
            F::diamond(F::boxed_best_v, F::diamond(F::boxed_bi_v_star, p())),
            F::diamond(F::boxed_bi_v_star, p()),
        )),
        FrameProp::OutcomeTerminality => F::implies(
            F::boxed_bi_global(p()),
            F::boxed_bi_global(F::boxed_bi_global(p())),
        ),
        FrameProp::VisibleOutcomeTerminality => F::implies(
            F::boxed_biv_local(p()),
            F::boxed_biv_local(F::boxed_biv_local(p())),
        ),
        FrameProp::ScbiOutcomeTerminality => F::implies(
            F::boxed_scbi_global(p()),
            F::boxed_scbi_global(F::boxed_scbi_global(p())),
        ),
        FrameProp::BestDominance => F::implies(
            F::diamond(F::boxed_bi_global, p()),
            F::sigma(sigma, F::leq_diamond(p())),
        ),
        FrameProp::ScbiDominance => F::implies(
            F::diamond(F::boxed_scbi_global, p()),
            F::sigma(sigma, F::leq_diamond(p())),
        ),
        FrameProp::LocalDominance => F::view(F::implies(
            F::diamond(F::boxed_biv_local, p()),
            F::sigma(sigma, F::leq_diamond(p())),
        )),
    }
}

fn uses_strategy(prop: FrameProp) -> bool {
    matches!(
        prop,
        FrameProp::BestDominance | FrameProp::ScbiDominance | FrameProp::LocalDominance
    )
}

/// Runs all frame principles against one instance.
pub fn frame_suite<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    sight: &SightFunction,
    config: &FrameConfig,
) -> FrameReport {
    let mut evaluator = ModalEvaluator::new(tree, sight);
    let bi_strategy = classical_bi_relation(tree)
        .relation
        .canonical_strategy(tree);
    evaluator.register_strategy(SIGMA_BI, bi_strategy);
    evaluator.register_strategy(SIGMA_FIRST, Strategy::first_action(tree));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    evaluator.register_strategy(SIGMA_RND, random_strategy(tree, &mut rng));

    let valuations = valuation_pool(tree, config, &mut rng);
    let strategy_names = [SIGMA_BI, SIGMA_FIRST, SIGMA_RND];

    let mut outcomes = Vec::new();
    for prop in FrameProp::all() {
        if prop == FrameProp::BiAxiomUniqueness {
            outcomes.push(uniqueness_outcome(tree, config));
            continue;
        }
        let sigmas: &[&str] = if uses_strategy(prop) {
            &strategy_names
        } else {
            &[SIGMA_BI]
        };
        let mut instances = 0usize;
        let mut witness: Option<FrameWitness> = None;
        'search: for sigma in sigmas {
            let formula = prop_formula(prop, sigma);
            for (val_set, val_histories) in &valuations {
                evaluator.set_valuation(BTreeMap::from([(P_ATOM.to_string(), val_set.clone())]));
                instances += 1;
                let counter = evaluator.valid(&formula).expect("suite formulas resolve");
                if let Some(state) = counter {
                    witness = Some(FrameWitness {
                        formula: formula.clone(),
                        valuation: val_histories.clone(),
                        state,
                        strategy: uses_strategy(prop).then(|| sigma.to_string()),
                    });
                    break 'search;
                }
            }
        }
        let refuted = witness.is_some();
        outcomes.push(FrameOutcome {
            prop,
            as_expected: if prop.expected_valid() {
                !refuted
            } else {
                refuted
            },
            instances,
            witness,
        });
    }
    FrameReport { outcomes }
}

fn random_strategy<P: PayoffValue>(tree: &PreferenceTree<P>, rng: &mut ChaCha8Rng) -> Strategy {
    let actions = tree
        .ids()
        .filter(|&id| !tree.is_terminal(id))
        .map(|id| {
            let kids = tree.children(id);
            let pick = kids[rng.random_range(0..kids.len())];
            (
                tree.history(id).clone(),
                tree.history(pick).last_action().unwrap().clone(),
            )
        })
        .collect();
    Strategy::from_actions(tree, &actions).expect("random choices are available actions")
}

type NamedValuation = (BTreeSet<NodeId>, BTreeSet<History>);

fn valuation_pool<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    config: &FrameConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<NamedValuation> {
    let mut pool: Vec<BTreeSet<NodeId>> = Vec::new();
    for id in tree.ids() {
        pool.push(BTreeSet::from([id]));
    }
    let terminals = tree.terminal_ids();
    if terminals.len() <= 6 {
        for mask in 0..(1usize << terminals.len()) {
            pool.push(
                terminals
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &z)| z)
                    .collect(),
            );
        }
    } else {
        for _ in 0..64 {
            pool.push(
                terminals
                    .iter()
                    .copied()
                    .filter(|_| rng.random_bool(0.5))
                    .collect(),
            );
        }
    }
    for _ in 0..config.random_valuations {
        pool.push(tree.ids().filter(|_| rng.random_bool(0.4)).collect());
    }
    pool.into_iter()
        .map(|set| {
            let histories = set.iter().map(|&id| tree.history(id).clone()).collect();
            (set, histories)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// The rationality axiom, relationally, and its uniqueness
// ---------------------------------------------------------------------------

/// Checks the rationality axiom for an arbitrary move subrelation over all
/// terminal-subset valuations: wherever following the relation can end in a
/// `p`-terminal, every move followed by the relation ends weakly below some
/// `p`-state.
pub fn relation_satisfies_bi_axiom<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    moves: &BTreeMap<NodeId, BTreeSet<NodeId>>,
) -> bool {
    let terminals = tree.terminal_ids();
    let all: BTreeSet<NodeId> = tree.ids().collect();
    let reach: Vec<Vec<NodeId>> = tree.ids().map(|id| closure(moves, id, &all)).collect();
    for mask in 0..(1usize << terminals.len()) {
        let p: BTreeSet<NodeId> = terminals
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &z)| z)
            .collect();
        let best_p = p.iter().map(|&u| tree.payoff(u)).max();
        for x in tree.ids() {
            let antecedent = reach[x]
                .iter()
                .any(|&w| tree.is_terminal(w) && p.contains(&w));
            if !antecedent {
                continue;
            }
            for &z in tree.children(x) {
                for &w in &reach[z] {
                    if tree.is_terminal(w) && Some(tree.payoff(w)) > best_p {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Exhaustively enumerates every everywhere-successor subrelation of move
/// and returns one that differs from the computed relation yet satisfies the
/// axiom, if any exists. Meaningful for distinct terminal payoffs; with ties
/// smaller selections satisfy the axiom too.
pub fn bi_axiom_alternative<P: PayoffValue>(
    tree: &PreferenceTree<P>,
) -> Option<BTreeMap<NodeId, BTreeSet<NodeId>>> {
    let computed: BTreeMap<NodeId, BTreeSet<NodeId>> =
        classical_bi_relation(tree).relation.pairs().fold(
            BTreeMap::new(),
            |mut acc: BTreeMap<_, BTreeSet<_>>, (y, z)| {
                acc.entry(y).or_default().insert(z);
                acc
            },
        );
    let internal: Vec<NodeId> = tree.ids().filter(|&id| !tree.is_terminal(id)).collect();
    let mut candidate: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    search_subrelations(tree, &internal, 0, &mut candidate, &computed)
}

fn search_subrelations<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    internal: &[NodeId],
    index: usize,
    candidate: &mut BTreeMap<NodeId, BTreeSet<NodeId>>,
    computed: &BTreeMap<NodeId, BTreeSet<NodeId>>,
) -> Option<BTreeMap<NodeId, BTreeSet<NodeId>>> {
    if index == internal.len() {
        if candidate != computed && relation_satisfies_bi_axiom(tree, candidate) {
            return Some(candidate.clone());
        }
        return None;
    }
    let node = internal[index];
    let kids = tree.children(node).to_vec();
    for mask in 1..(1usize << kids.len()) {
        let subset: BTreeSet<NodeId> = kids
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &c)| c)
            .collect();
        candidate.insert(node, subset);
        if let Some(found) = search_subrelations(tree, internal, index + 1, candidate, computed) {
            return Some(found);
        }
    }
    candidate.remove(&node);
    None
}

fn uniqueness_outcome<P: PayoffValue>(
    tree: &PreferenceTree<P>,
    config: &FrameConfig,
) -> FrameOutcome {
    let terminal_payoffs: BTreeSet<&P> = tree
        .terminal_ids()
        .into_iter()
        .map(|z| tree.payoff(z))
        .collect();
    let applicable = tree.len() <= config.uniqueness_node_limit
        && terminal_payoffs.len() == tree.terminal_ids().len();
    if !applicable {
        return FrameOutcome {
            prop: FrameProp::BiAxiomUniqueness,
            as_expected: true,
            instances: 0,
            witness: None,
        };
    }
    let alternative = bi_axiom_alternative(tree);
    FrameOutcome {
        prop: FrameProp::BiAxiomUniqueness,
        as_expected: alternative.is_none(),
        instances: 1,
        witness: alternative.map(|alt| FrameWitness {
            formula: MFormula::atom("alternative-relation"),
            valuation: alt
                .values()
                .flat_map(|zs| zs.iter().map(|&z| tree.history(z).clone()))
                .collect(),
            state: History::root(),
            strategy: None,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::history::h;

    fn singleton<P: PayoffValue>(tree: &PreferenceTree<P>, path: &str) -> Valuation {
        BTreeMap::from([(
            P_ATOM.to_string(),
            BTreeSet::from([tree.id_of(&h(path)).unwrap()]),
        )])
    }

    #[test]
    fn global_outcome_boxes_on_the_fixtures() {
        let masked = fixtures::masked_best();
        let sight = fixtures::masked_best_sight(&masked);
        let f = MFormula::boxed_bi_global(MFormula::At(h("L.L")));
        assert!(eval_modal(
            &masked,
            &sight,
            &History::root(),
            &f,
            &Valuation::new(),
            &StrategyTable::new()
        )
        .unwrap());

        let two_stage = fixtures::two_stage();
        let narrow = fixtures::two_stage_narrow(&two_stage);
        let f = MFormula::boxed_scbi_global(MFormula::At(h("R.R")));
        assert!(eval_modal(
            &two_stage,
            &narrow,
            &History::root(),
            &f,
            &Valuation::new(),
            &StrategyTable::new()
        )
        .unwrap());
    }

    #[test]
    fn visible_local_outcome_is_not_terminal_on_the_masked_fixture() {
        let masked = fixtures::masked_best();
        let sight = fixtures::masked_best_sight(&masked);
        let f = MFormula::view(MFormula::boxed_biv_local(MFormula::End));
        assert!(!eval_modal(
            &masked,
            &sight,
            &History::root(),
            &f,
            &Valuation::new(),
            &StrategyTable::new()
        )
        .unwrap());
    }

    #[test]
    fn frame_suite_is_sound_on_every_fixture() {
        for (tree, sight) in fixtures::all_fixtures() {
            let report = frame_suite(&tree, &sight, &FrameConfig::default());
            for outcome in &report.outcomes {
                if outcome.prop.expected_valid() {
                    assert!(
                        outcome.as_expected,
                        "{} failed: {:?}",
                        outcome.prop.name(),
                        outcome.witness
                    );
                }
            }
        }
    }

    #[test]
    fn expected_refutations_appear_on_their_fixtures() {
        let masked = fixtures::masked_best();
        let sight = fixtures::masked_best_sight(&masked);
        let report = frame_suite(&masked, &sight, &FrameConfig::default());
        assert!(report.outcome(FrameProp::BestScbiInvariance).as_expected);
        assert!(
            report
                .outcome(FrameProp::VisibleOutcomeTerminality)
                .as_expected
        );
        assert!(report.outcome(FrameProp::ScbiDominance).as_expected);

        let two_stage = fixtures::two_stage();
        let wide = fixtures::two_stage_wide(&two_stage);
        let report = frame_suite(&two_stage, &wide, &FrameConfig::default());
        assert!(report.outcome(FrameProp::BestLocalInvariance).as_expected);
    }

    #[test]
    fn witnesses_refute_their_formulas_when_re_evaluated() {
        let masked = fixtures::masked_best();
        let sight = fixtures::masked_best_sight(&masked);
        let report = frame_suite(&masked, &sight, &FrameConfig::default());
        for prop in [
            FrameProp::BestScbiInvariance,
            FrameProp::VisibleOutcomeTerminality,
            FrameProp::ScbiDominance,
        ] {
            let outcome = report.outcome(prop);
            let witness = outcome.witness.as_ref().expect("refutation witness");
            let mut evaluator = ModalEvaluator::new(&masked, &sight);
            let val: BTreeSet<NodeId> = witness
                .valuation
                .iter()
                .map(|h| masked.id_of(h).unwrap())
                .collect();
            evaluator.set_valuation(BTreeMap::from([(P_ATOM.to_string(), val)]));
            evaluator.register_strategy(
                SIGMA_BI,
                classical_bi_relation(&masked)
                    .relation
                    .canonical_strategy(&masked),
            );
            evaluator.register_strategy(SIGMA_FIRST, Strategy::first_action(&masked));
            let mut rng = ChaCha8Rng::seed_from_u64(FrameConfig::default().seed);
            evaluator.register_strategy(SIGMA_RND, random_strategy(&masked, &mut rng));
            assert!(!evaluator.eval(&witness.state, &witness.formula).unwrap());
        }
    }

    #[test]
    fn bi_axiom_holds_for_the_computed_relation_and_uniquely_so() {
        for (tree, _) in fixtures::all_fixtures() {
            let computed: BTreeMap<NodeId, BTreeSet<NodeId>> =
                classical_bi_relation(&tree).relation.pairs().fold(
                    BTreeMap::new(),
                    |mut acc: BTreeMap<_, BTreeSet<_>>, (y, z)| {
                        acc.entry(y).or_default().insert(z);
                        acc
                    },
                );
            assert!(relation_satisfies_bi_axiom(&tree, &computed));
        }
        let two_stage = fixtures::two_stage();
        assert!(bi_axiom_alternative(&two_stage).is_none());
    }

    #[test]
    fn evaluation_follows_strategies_to_their_outcomes() {
        let masked = fixtures::masked_best();
        let sight = fixtures::masked_best_sight(&masked);
        let mut evaluator = ModalEvaluator::new(&masked, &sight);
        let actions = BTreeMap::from([
            (h("."), "L".to_string()),
            (h("L"), "R".to_string()),
            (h("R"), "L".to_string()),
        ]);
        evaluator.register_strategy("s", Strategy::from_actions(&masked, &actions).unwrap());
        let f = MFormula::sigma("s", MFormula::At(h("L.R")));
        assert!(evaluator.eval(&History::root(), &f).unwrap());
        let missing = MFormula::sigma("t", MFormula::End);
        assert_eq!(
            evaluator.eval(&History::root(), &missing),
            Err(ModalError::UnknownStrategy("t".to_string()))
        );
    }

    #[test]
    fn best_and_bi_boxes_are_the_same_operator() {
        let masked = fixtures::masked_best();
        let sight = fixtures::masked_best_sight(&masked);
        let mut evaluator = ModalEvaluator::new(&masked, &sight);
        for id in masked.ids() {
            evaluator.set_valuation(BTreeMap::from([(P_ATOM.to_string(), BTreeSet::from([id]))]));
            let body = MFormula::atom(P_ATOM);
            for state in masked.histories() {
                assert_eq!(
                    evaluator
                        .eval(state, &MFormula::boxed_best(body.clone()))
                        .unwrap(),
                    evaluator
                        .eval(state, &MFormula::boxed_bi(body.clone()))
                        .unwrap()
                );
            }
        }
    }

    /// Strategy outcomes never beat the global optimum: the operational
    /// restatement of best-outcome dominance.
    #[test]
    fn every_strategy_outcome_is_weakly_dominated() {
        for (tree, _) in fixtures::all_fixtures() {
            let best = *bi_set(&tree).iter().next().unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            let mut pool = vec![
                classical_bi_relation(&tree)
                    .relation
                    .canonical_strategy(&tree),
                Strategy::first_action(&tree),
            ];
            for _ in 0..5 {
                pool.push(random_strategy(&tree, &mut rng));
            }
            for sigma in pool {
                for id in tree.ids() {
                    let outcome = sigma.outcome_from(&tree, id);
                    assert!(tree.weakly_prefers(best, outcome));
                }
            }
        }
    }

    /// Inside every visible tree, the first move of local solving carries a
    /// subjective value at least that of any other first visible move: the
    /// operational restatement of local step invariance.
    #[test]
    fn local_first_moves_have_maximal_subjective_value() {
        for (tree, sight) in fixtures::all_fixtures() {
            for at in tree.ids() {
                let visible = visible_tree_at(&tree, &sight, at);
                let local = crate::solve::local_bi_moves(&tree, &sight, at);
                let Some(firsts) = local.get(&at) else {
                    continue;
                };
                for &chosen in firsts {
                    for other in visible.children_of(&tree, at) {
                        assert!(visible.subjectively_weakly_prefers(chosen, other));
                    }
                }
            }
        }
    }

    #[test]
    fn leq_diamond_ranges_over_all_states() {
        let masked = fixtures::masked_best();
        let sight = fixtures::masked_best_sight(&masked);
        let mut evaluator = ModalEvaluator::new(&masked, &sight);
        evaluator.set_valuation(singleton(&masked, "L.L"));
        // From L.R (payoff 1), the better state L.L satisfies p.
        assert!(evaluator
            .eval(&h("L.R"), &MFormula::leq_diamond(MFormula::atom(P_ATOM)))
            .unwrap());
        evaluator.set_valuation(singleton(&masked, "L.R"));
        // From L.L (payoff 3) nothing weakly better satisfies p = {L.R}.
        assert!(!evaluator
            .eval(&h("L.L"), &MFormula::leq_diamond(MFormula::atom(P_ATOM)))
            .unwrap());
    }
}
