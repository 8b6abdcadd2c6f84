//! Payoff scalar abstraction.
//!
//! Every solver in this crate only ever *compares* payoffs, so the scalar
//! requirement is a total order, not arithmetic. Exact rationals are the
//! canonical choice (the text format and CLI use them end to end); plain
//! integers satisfy the bound too and are handy in tests. IEEE floats do not
//! implement `Ord` and are deliberately out.

use std::fmt::{Debug, Display};

/// Scalar type usable as a payoff: totally ordered, printable, cloneable.
pub trait PayoffValue: Clone + Ord + Debug + Display {}

impl<T: Clone + Ord + Debug + Display> PayoffValue for T {}

/// The concrete payoff type used by the text format, the CLI, and the lab:
/// exact 64-bit rationals, so maxima and ties are bit-exact.
pub type Payoff = num_rational::Rational64;
