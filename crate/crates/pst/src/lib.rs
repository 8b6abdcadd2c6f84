//! Preference-sight trees: finite decision trees paired with an agent's
//! sight function, the solution concepts they induce, and the logics that
//! describe them.
//!
//! The crate is organized around the pipeline a `.pst` file goes through:
//!
//! - [`history`], [`tree`]: histories and validated preference trees.
//! - [`sight`]: sight functions, validation, and closure repair.
//! - [`visible`]: sight-restricted trees with bottom-up subjective payoffs.
//! - [`solve`]: global and sight-compatible backward induction, the pruned
//!   move relations, and the local-rationality check.
//! - [`equivalence`]: when do the two solution sets coincide.
//! - [`logic`]: the announcement language over preference-sight models, its
//!   nonstandard update, and the axiom suite.
//! - [`modal`]: the modal surface operators for best action and the frame
//!   suite.
//! - [`textio`]: the `.pst` format and the formula parser.
//! - [`lab`]: seeded random instances, witness hunting, and the sight sweep.
//!
//! Payoffs are generic over any totally ordered scalar; the crate-level
//! alias [`Payoff`] fixes exact 64-bit rationals as the concrete choice used
//! everywhere outside the core.

pub mod equivalence;
pub mod fixtures;
pub mod history;
pub mod lab;
pub mod logic;
pub mod modal;
pub mod payoff;
pub mod sight;
pub mod solve;
pub mod textio;
pub mod tree;
pub mod visible;

pub use history::{Action, History};
pub use payoff::{Payoff, PayoffValue};
pub use sight::{RawSight, SightFunction};
pub use tree::{NodeId, PreferenceTree};
pub use visible::VisibleTree;
