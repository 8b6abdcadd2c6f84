//! The axiom suite: instantiates each schema over the model's histories and
//! a bounded pool of announcement formulas, classifying it as verified or
//! refuted with a witness.
//!
//! Announcements are cached: each pool formula is announced once and the
//! schema checks work at the extension-set level, building witness formulas
//! only on failure.

use std::collections::BTreeSet;

use crate::history::History;
use crate::payoff::PayoffValue;
use crate::tree::NodeId;
use crate::visible::visible_tree_at;

use super::formula::Formula;
use super::model::PSModel;

/// The schemas covered by the suite. All but the last three are valid on
/// every preference-sight model; `SightPreference` and `VisibleTerminality`
/// fail on models where sight masks or reorders continuations, and
/// `Composition` is classified empirically (the preference recomputation
/// composes through intermediate terminal sets).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Schema {
    Taut,
    ReflexivityGeq,
    TransitivityGeq,
    TotalityGeq,
    ReflexivitySight,
    Terminality,
    DownwardClosure,
    NonForgetting,
    AtomExceptSightPreference,
    Negation,
    Conjunction,
    Composition,
    Dual,
    SightPreference,
    VisibleTerminality,
}

impl Schema {
    pub fn all() -> [Schema; 15] {
        [
            Schema::Taut,
            Schema::ReflexivityGeq,
            Schema::TransitivityGeq,
            Schema::TotalityGeq,
            Schema::ReflexivitySight,
            Schema::Terminality,
            Schema::DownwardClosure,
            Schema::NonForgetting,
            Schema::AtomExceptSightPreference,
            Schema::Negation,
            Schema::Conjunction,
            Schema::Composition,
            Schema::Dual,
            Schema::SightPreference,
            Schema::VisibleTerminality,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Schema::Taut => "Taut",
            Schema::ReflexivityGeq => "T_geq",
            Schema::TransitivityGeq => "4_geq",
            Schema::TotalityGeq => "to_geq",
            Schema::ReflexivitySight => "T_s",
            Schema::Terminality => "TM",
            Schema::DownwardClosure => "DC",
            Schema::NonForgetting => "NF",
            Schema::AtomExceptSightPreference => "!ATOM-SP",
            Schema::Negation => "!NEG",
            Schema::Conjunction => "!CON",
            Schema::Composition => "!COM",
            Schema::Dual => "Dual",
            Schema::SightPreference => "!Sight-Preference",
            Schema::VisibleTerminality => "VisTM",
        }
    }

    pub fn from_name(name: &str) -> Option<Schema> {
        Schema::all().into_iter().find(|s| s.name() == name)
    }
}

/// `Some(valid)` when the schema has a definite status on every model;
/// `None` when its status is model-dependent or classified empirically.
pub fn expected_validity(schema: Schema) -> Option<bool> {
    match schema {
        Schema::Composition | Schema::SightPreference | Schema::VisibleTerminality => None,
        _ => Some(true),
    }
}

#[derive(Debug, Clone)]
pub struct SchemaWitness {
    pub instance: Formula,
    pub state: History,
}

#[derive(Debug, Clone)]
pub struct SchemaOutcome {
    pub schema: Schema,
    pub verified: bool,
    pub instances: usize,
    pub witness: Option<SchemaWitness>,
}

#[derive(Debug, Clone)]
pub struct AxiomReport {
    pub outcomes: Vec<SchemaOutcome>,
}

impl AxiomReport {
    pub fn outcome(&self, schema: Schema) -> &SchemaOutcome {
        self.outcomes
            .iter()
            .find(|o| o.schema == schema)
            .expect("every schema is reported")
    }

    /// True when every schema that must be valid verified.
    pub fn sound(&self) -> bool {
        self.outcomes
            .iter()
            .all(|o| expected_validity(o.schema) != Some(true) || o.verified)
    }
}

struct Announced<P: PayoffValue> {
    formula: Formula,
    extension: BTreeSet<NodeId>,
    updated: Option<PSModel<P>>,
}

struct Suite<'m, P: PayoffValue> {
    model: &'m PSModel<P>,
    states: BTreeSet<NodeId>,
    announcements: Vec<Announced<P>>,
    atoms: Vec<Formula>,
    consequents: Vec<Formula>,
}

const PAIR_CAP: usize = 8;

impl<'m, P: PayoffValue> Suite<'m, P> {
    fn new(model: &'m PSModel<P>) -> Self {
        let tree = model.tree();
        let mut atoms: Vec<Formula> = tree
            .histories()
            .map(|h| Formula::sight(h.clone()))
            .collect();
        atoms.extend(tree.histories().map(|h| Formula::at(h.clone())));

        let mut pool = atoms.clone();
        pool.extend(atoms.iter().cloned().map(Formula::not));
        let k = atoms.len().min(PAIR_CAP);
        for a in &atoms[..k] {
            for b in &atoms[..k] {
                if a != b {
                    pool.push(Formula::and(a.clone(), b.clone()));
                    pool.push(Formula::not(Formula::and(a.clone(), b.clone())));
                }
            }
        }

        let announcements = pool
            .into_iter()
            .map(|formula| {
                let extension = model.eval_set(&formula).expect("pool atoms resolve");
                let updated = if extension.is_empty() {
                    None
                } else {
                    Some(model.update_unchecked(&extension))
                };
                Announced {
                    formula,
                    extension,
                    updated,
                }
            })
            .collect();

        let mut consequents: Vec<Formula> = atoms.iter().take(4).cloned().collect();
        let ids: Vec<NodeId> = tree.ids().collect();
        for pair in ids.windows(2).take(3) {
            consequents.push(Formula::geq(
                tree.history(pair[0]).clone(),
                tree.history(pair[1]).clone(),
            ));
        }
        if let Some(first) = atoms.first() {
            consequents.push(Formula::not(first.clone()));
        }

        Suite {
            model,
            states: model.states().clone(),
            announcements,
            atoms,
            consequents,
        }
    }

    /// Extension of `[!φ]ψ` given the extension of `ψ` inside the updated
    /// model.
    fn announce_set(&self, a: &Announced<P>, inner: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
        let mut out: BTreeSet<NodeId> = self.states.difference(&a.extension).copied().collect();
        out.extend(a.extension.intersection(inner).copied());
        out
    }

    fn first_diff(&self, lhs: &BTreeSet<NodeId>, rhs: &BTreeSet<NodeId>) -> Option<NodeId> {
        self.states
            .iter()
            .copied()
            .find(|s| lhs.contains(s) != rhs.contains(s))
    }

    fn witness(&self, instance: Formula, state: NodeId) -> SchemaWitness {
        SchemaWitness {
            instance,
            state: self.model.tree().history(state).clone(),
        }
    }
}

/// Runs every schema against the model.
pub fn axiom_suite<P: PayoffValue>(model: &PSModel<P>) -> AxiomReport {
    let suite = Suite::new(model);
    let outcomes = Schema::all()
        .into_iter()
        .map(|schema| run_schema(&suite, schema))
        .collect();
    AxiomReport { outcomes }
}

fn run_schema<P: PayoffValue>(suite: &Suite<P>, schema: Schema) -> SchemaOutcome {
    let mut instances = 0usize;
    let mut witness = None;
    let mut check = |cond: bool, mk: &mut dyn FnMut() -> SchemaWitness| {
        instances += 1;
        if !cond && witness.is_none() {
            witness = Some(mk());
        }
    };

    let model = suite.model;
    let tree = model.tree();

    match schema {
        Schema::Taut => {
            for a in suite.consequents.iter() {
                for b in suite.consequents.iter() {
                    let shapes = [
                        Formula::or(a.clone(), Formula::not(a.clone())),
                        Formula::not(Formula::and(a.clone(), Formula::not(a.clone()))),
                        Formula::implies(Formula::and(a.clone(), b.clone()), a.clone()),
                        Formula::implies(
                            Formula::implies(Formula::implies(a.clone(), b.clone()), a.clone()),
                            a.clone(),
                        ),
                    ];
                    for shape in shapes {
                        let set = model.eval_set(&shape).expect("closed instance");
                        let bad = suite.first_diff(&set, &suite.states);
                        check(bad.is_none(), &mut || {
                            suite.witness(shape.clone(), bad.unwrap())
                        });
                    }
                }
            }
        }
        Schema::ReflexivityGeq => {
            for id in tree.ids() {
                check(model.geq_val(id, id), &mut || {
                    let h = tree.history(id).clone();
                    suite.witness(
                        Formula::geq(h.clone(), h),
                        *suite.states.iter().next().unwrap(),
                    )
                });
            }
        }
        Schema::TransitivityGeq => {
            let ids: Vec<NodeId> = tree.ids().collect();
            for &a in capped(&ids) {
                for &b in capped(&ids) {
                    for &c in capped(&ids) {
                        let holds =
                            !(model.geq_val(a, b) && model.geq_val(b, c)) || model.geq_val(a, c);
                        check(holds, &mut || {
                            let f = Formula::implies(
                                Formula::and(
                                    Formula::geq(tree.history(a).clone(), tree.history(b).clone()),
                                    Formula::geq(tree.history(b).clone(), tree.history(c).clone()),
                                ),
                                Formula::geq(tree.history(a).clone(), tree.history(c).clone()),
                            );
                            suite.witness(f, *suite.states.iter().next().unwrap())
                        });
                    }
                }
            }
        }
        Schema::TotalityGeq => {
            for a in tree.ids() {
                for b in tree.ids() {
                    check(model.geq_val(a, b) || model.geq_val(b, a), &mut || {
                        let f = Formula::or(
                            Formula::geq(tree.history(a).clone(), tree.history(b).clone()),
                            Formula::geq(tree.history(b).clone(), tree.history(a).clone()),
                        );
                        suite.witness(f, *suite.states.iter().next().unwrap())
                    });
                }
            }
        }
        Schema::ReflexivitySight => {
            for id in tree.ids() {
                let lhs = model.at_val(id);
                let rhs = model.sight_val(id);
                let bad = lhs.iter().copied().find(|s| !rhs.contains(s));
                check(bad.is_none(), &mut || {
                    let h = tree.history(id).clone();
                    suite.witness(
                        Formula::implies(Formula::at(h.clone()), Formula::sight(h)),
                        bad.unwrap(),
                    )
                });
            }
        }
        Schema::Terminality => {
            for z in tree.terminal_ids() {
                for other in tree.ids() {
                    let zv = model.at_val(z);
                    let ov = model.at_val(other);
                    let holds = !zv.is_subset(&ov) || ov.is_subset(&zv);
                    check(holds, &mut || {
                        let f = terminality_instance(
                            tree.history(z).clone(),
                            tree.history(other).clone(),
                        );
                        suite.witness(f, *suite.states.iter().next().unwrap())
                    });
                }
            }
        }
        Schema::DownwardClosure | Schema::NonForgetting => {
            for far in tree.ids() {
                let chain = tree.prefix_ids(far);
                for (i, &h1) in chain.iter().enumerate() {
                    for &h2 in &chain[i + 1..] {
                        if h2 == far {
                            continue;
                        }
                        let far_in_s1 = model.at_val(far).is_subset(&model.sight_val(h1));
                        let (holds, consequent) = if schema == Schema::DownwardClosure {
                            (
                                !far_in_s1 || model.at_val(h2).is_subset(&model.sight_val(h1)),
                                Formula::univ(Formula::implies(
                                    Formula::at(tree.history(h2).clone()),
                                    Formula::sight(tree.history(h1).clone()),
                                )),
                            )
                        } else {
                            (
                                !far_in_s1 || model.at_val(far).is_subset(&model.sight_val(h2)),
                                Formula::univ(Formula::implies(
                                    Formula::at(tree.history(far).clone()),
                                    Formula::sight(tree.history(h2).clone()),
                                )),
                            )
                        };
                        check(holds, &mut || {
                            let antecedent = Formula::univ(Formula::implies(
                                Formula::at(tree.history(far).clone()),
                                Formula::sight(tree.history(h1).clone()),
                            ));
                            suite.witness(
                                Formula::implies(antecedent, consequent.clone()),
                                *suite.states.iter().next().unwrap(),
                            )
                        });
                    }
                }
            }
        }
        Schema::AtomExceptSightPreference => {
            for a in &suite.announcements {
                for p in &suite.atoms {
                    let inner = match &a.updated {
                        Some(updated) => updated.eval_set(p).expect("atom resolves"),
                        None => BTreeSet::new(),
                    };
                    let lhs = suite.announce_set(a, &inner);
                    let direct = model.eval_set(p).expect("atom resolves");
                    let rhs = suite.announce_like_implication(&a.extension, &direct);
                    let bad = suite.first_diff(&lhs, &rhs);
                    check(bad.is_none(), &mut || {
                        let f = Formula::iff(
                            Formula::announce(a.formula.clone(), p.clone()),
                            Formula::implies(a.formula.clone(), p.clone()),
                        );
                        suite.witness(f, bad.unwrap())
                    });
                }
            }
        }
        Schema::SightPreference => {
            let ids: Vec<NodeId> = tree.ids().collect();
            for anchor in tree.ids() {
                let announcement = Formula::sight(tree.history(anchor).clone());
                let a = suite
                    .announcements
                    .iter()
                    .find(|c| c.formula == announcement)
                    .expect("sight atoms are in the pool");
                for &h1 in &ids {
                    for &h2 in &ids {
                        let inner = match &a.updated {
                            Some(updated) => {
                                if updated.geq_val(h1, h2) {
                                    a.extension.clone()
                                } else {
                                    BTreeSet::new()
                                }
                            }
                            None => BTreeSet::new(),
                        };
                        let lhs = suite.announce_set(a, &inner);
                        let direct = if model.geq_val(h1, h2) {
                            suite.states.clone()
                        } else {
                            BTreeSet::new()
                        };
                        let rhs = suite.announce_like_implication(&a.extension, &direct);
                        let bad = suite.first_diff(&lhs, &rhs);
                        check(bad.is_none(), &mut || {
                            let atom =
                                Formula::geq(tree.history(h1).clone(), tree.history(h2).clone());
                            let f = Formula::iff(
                                Formula::announce(a.formula.clone(), atom.clone()),
                                Formula::implies(a.formula.clone(), atom),
                            );
                            suite.witness(f, bad.unwrap())
                        });
                    }
                }
            }
        }
        Schema::Negation => {
            for a in &suite.announcements {
                for psi in &suite.consequents {
                    let inner = match &a.updated {
                        Some(updated) => updated.eval_set(psi).expect("consequent resolves"),
                        None => BTreeSet::new(),
                    };
                    let inner_not: BTreeSet<NodeId> = a
                        .extension
                        .iter()
                        .copied()
                        .filter(|s| !inner.contains(s))
                        .collect();
                    let lhs = suite.announce_set(a, &inner_not);
                    let announce_psi = suite.announce_set(a, &inner);
                    let not_announce: BTreeSet<NodeId> =
                        suite.states.difference(&announce_psi).copied().collect();
                    let rhs = suite.announce_like_implication(&a.extension, &not_announce);
                    let bad = suite.first_diff(&lhs, &rhs);
                    check(bad.is_none(), &mut || {
                        let f = Formula::iff(
                            Formula::announce(a.formula.clone(), Formula::not(psi.clone())),
                            Formula::implies(
                                a.formula.clone(),
                                Formula::not(Formula::announce(a.formula.clone(), psi.clone())),
                            ),
                        );
                        suite.witness(f, bad.unwrap())
                    });
                }
            }
        }
        Schema::Conjunction => {
            for a in &suite.announcements {
                for psi in suite.consequents.iter().take(4) {
                    for chi in suite.consequents.iter().take(4) {
                        let (inner_psi, inner_chi) = match &a.updated {
                            Some(updated) => (
                                updated.eval_set(psi).expect("consequent resolves"),
                                updated.eval_set(chi).expect("consequent resolves"),
                            ),
                            None => (BTreeSet::new(), BTreeSet::new()),
                        };
                        let both: BTreeSet<NodeId> =
                            inner_psi.intersection(&inner_chi).copied().collect();
                        let lhs = suite.announce_set(a, &both);
                        let rhs: BTreeSet<NodeId> = suite
                            .announce_set(a, &inner_psi)
                            .intersection(&suite.announce_set(a, &inner_chi))
                            .copied()
                            .collect();
                        let bad = suite.first_diff(&lhs, &rhs);
                        check(bad.is_none(), &mut || {
                            let f = Formula::iff(
                                Formula::announce(
                                    a.formula.clone(),
                                    Formula::and(psi.clone(), chi.clone()),
                                ),
                                Formula::and(
                                    Formula::announce(a.formula.clone(), psi.clone()),
                                    Formula::announce(a.formula.clone(), chi.clone()),
                                ),
                            );
                            suite.witness(f, bad.unwrap())
                        });
                    }
                }
            }
        }
        Schema::Composition => {
            // Both routes land on the same states with the same at/sight
            // valuations, so comparing the recomputed preference atoms is a
            // complete check for every consequent.
            for a in &suite.announcements {
                let m1 = match &a.updated {
                    Some(m) => m,
                    None => continue,
                };
                for b in suite.announcements.iter().take(40) {
                    let ext2 = m1.eval_set(&b.formula).expect("pool resolves");
                    if ext2.is_empty() {
                        continue;
                    }
                    let sequential = m1.update_unchecked(&ext2);
                    let combined = model.update_unchecked(&ext2);
                    let mut found = None;
                    'pairs: for h1 in tree.ids() {
                        for h2 in tree.ids() {
                            if sequential.geq_val(h1, h2) != combined.geq_val(h1, h2) {
                                found = Some((h1, h2));
                                break 'pairs;
                            }
                        }
                    }
                    check(found.is_none(), &mut || {
                        let (h1, h2) = found.unwrap();
                        let atom = Formula::geq(tree.history(h1).clone(), tree.history(h2).clone());
                        let combined_announcement = Formula::and(
                            a.formula.clone(),
                            Formula::announce(a.formula.clone(), b.formula.clone()),
                        );
                        let f = Formula::iff(
                            Formula::announce(
                                a.formula.clone(),
                                Formula::announce(b.formula.clone(), atom.clone()),
                            ),
                            Formula::announce(combined_announcement, atom),
                        );
                        suite.witness(f, *ext2.iter().next().unwrap())
                    });
                }
            }
        }
        Schema::Dual => {
            for a in &suite.announcements {
                for psi in &suite.consequents {
                    let inner = match &a.updated {
                        Some(updated) => updated.eval_set(psi).expect("consequent resolves"),
                        None => BTreeSet::new(),
                    };
                    let lhs = suite.announce_set(a, &inner);
                    // ¬⟨!φ⟩¬ψ unfolded: ¬¬[!φ]¬¬ψ.
                    let inner_nn: BTreeSet<NodeId> = a
                        .extension
                        .iter()
                        .copied()
                        .filter(|s| inner.contains(s))
                        .collect();
                    let rhs = suite.announce_set(a, &inner_nn);
                    let bad = suite.first_diff(&lhs, &rhs);
                    check(bad.is_none(), &mut || {
                        let f = Formula::iff(
                            Formula::announce(a.formula.clone(), psi.clone()),
                            Formula::not(Formula::diamond_announce(
                                a.formula.clone(),
                                Formula::not(psi.clone()),
                            )),
                        );
                        suite.witness(f, bad.unwrap())
                    });
                }
            }
        }
        Schema::VisibleTerminality => {
            for u in tree.ids() {
                let visible = visible_tree_at(tree, model.sight(), u);
                for &z in visible.terminals() {
                    for other in tree.ids() {
                        let zv = model.at_val(z);
                        let ov = model.at_val(other);
                        let holds = !zv.is_subset(&ov) || ov.is_subset(&zv);
                        check(holds, &mut || {
                            let f = terminality_instance(
                                tree.history(z).clone(),
                                tree.history(other).clone(),
                            );
                            suite.witness(f, *suite.states.iter().next().unwrap())
                        });
                    }
                }
            }
        }
    }

    SchemaOutcome {
        schema,
        verified: witness.is_none(),
        instances,
        witness,
    }
}

impl<'m, P: PayoffValue> Suite<'m, P> {
    /// Extension of `φ → ψ` given the extensions of both parts.
    fn announce_like_implication(
        &self,
        antecedent: &BTreeSet<NodeId>,
        consequent: &BTreeSet<NodeId>,
    ) -> BTreeSet<NodeId> {
        let mut out: BTreeSet<NodeId> = self.states.difference(antecedent).copied().collect();
        out.extend(antecedent.intersection(consequent).copied());
        out
    }
}

fn terminality_instance(z: History, other: History) -> Formula {
    Formula::implies(
        Formula::univ(Formula::implies(
            Formula::at(z.clone()),
            Formula::at(other.clone()),
        )),
        Formula::univ(Formula::implies(Formula::at(other), Formula::at(z))),
    )
}

fn capped(ids: &[NodeId]) -> &[NodeId] {
    &ids[..ids.len().min(16)]
}
