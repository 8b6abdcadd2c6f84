//! The announcement language over preference-sight models.
//!
//! Atoms talk about one fixed tree: reaching a history, the agent's
//! preference between two histories, and the sight at a history. The
//! announcement operator restricts the model, but unlike a plain relativiza-
//! tion it recomputes every preference atom from the maximal surviving
//! terminal continuations, which is exactly the bottom-up subjective update
//! of the visible tree.

mod axioms;
mod characterize;
mod formula;
mod model;

pub use axioms::{
    axiom_suite, expected_validity, AxiomReport, Schema, SchemaOutcome, SchemaWitness,
};
pub use characterize::{
    consistency_formula, equivalence_formula, local_optimality_formula, local_rationality_formula,
    maxima_formula, optimal_outcomes_formula, sight_reachability_formula, sighted_outcomes_formula,
    visible_terminality_formula, visible_terminals_formula,
};
pub use formula::Formula;
pub use model::{mk_model, LogicError, PSModel, UpdateError, Validity};
