//! Abstract syntax of the announcement language.

use std::fmt;

use crate::history::History;

/// A formula of the announcement language. Disjunction, implication and the
/// biconditional are sugar over negation and conjunction; the existential
/// announcement is sugar over the universal one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    /// `h̄`: true at every prefix of `h`.
    At(History),
    /// `h1 ≥ h2`: state-uniform preference atom.
    Geq(History, History),
    /// `s(h)‾`: true at every prefix of a member of the sight at `h`.
    SightAtom(History),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    /// `[!φ]ψ`.
    Announce(Box<Formula>, Box<Formula>),
    /// `A φ`: true when `φ` holds at every state.
    Univ(Box<Formula>),
}

impl Formula {
    pub fn at(h: History) -> Self {
        Formula::At(h)
    }

    pub fn geq(h1: History, h2: History) -> Self {
        Formula::Geq(h1, h2)
    }

    pub fn sight(h: History) -> Self {
        Formula::SightAtom(h)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::and(a, Formula::not(b)))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::and(
            Formula::implies(a.clone(), b.clone()),
            Formula::implies(b, a),
        )
    }

    pub fn announce(announcement: Formula, then: Formula) -> Self {
        Formula::Announce(Box::new(announcement), Box::new(then))
    }

    /// `⟨!φ⟩ψ`, i.e. `¬[!φ]¬ψ`.
    pub fn diamond_announce(announcement: Formula, then: Formula) -> Self {
        Formula::not(Formula::announce(announcement, Formula::not(then)))
    }

    pub fn univ(f: Formula) -> Self {
        Formula::Univ(Box::new(f))
    }

    /// `h1 ∼ h2` as the symmetric pair of preference atoms.
    pub fn indifferent(h1: History, h2: History) -> Self {
        Formula::and(Formula::geq(h1.clone(), h2.clone()), Formula::geq(h2, h1))
    }

    /// Conjunction of an iterator; the empty conjunction is a tautology.
    pub fn conj<I: IntoIterator<Item = Formula>>(parts: I) -> Self {
        let mut iter = parts.into_iter();
        match iter.next() {
            None => Formula::taut(),
            Some(first) => iter.fold(first, Formula::and),
        }
    }

    /// Disjunction of an iterator; the empty disjunction is a contradiction.
    pub fn disj<I: IntoIterator<Item = Formula>>(parts: I) -> Self {
        let mut iter = parts.into_iter();
        match iter.next() {
            None => Formula::contradiction(),
            Some(first) => iter.fold(first, Formula::or),
        }
    }

    /// A closed tautology over the root atom.
    pub fn taut() -> Self {
        let root = Formula::At(History::root());
        Formula::or(root.clone(), Formula::not(root))
    }

    pub fn contradiction() -> Self {
        Formula::not(Formula::taut())
    }

    /// Number of AST nodes, used to bound instantiation pools.
    pub fn size(&self) -> usize {
        match self {
            Formula::At(_) | Formula::Geq(..) | Formula::SightAtom(_) => 1,
            Formula::Not(f) | Formula::Univ(f) => 1 + f.size(),
            Formula::And(a, b) | Formula::Announce(a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::At(h) => write!(f, "at({h})"),
            Formula::Geq(a, b) => write!(f, "geq({a},{b})"),
            Formula::SightAtom(h) => write!(f, "sg({h})"),
            Formula::Not(inner) => write!(f, "~{inner}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Announce(a, b) => write!(f, "[ann {a}] {b}"),
            Formula::Univ(inner) => write!(f, "A {inner}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::h;

    #[test]
    fn display_matches_the_concrete_syntax() {
        let f = Formula::announce(
            Formula::sight(History::root()),
            Formula::geq(h("L"), h("R")),
        );
        assert_eq!(f.to_string(), "[ann sg(.)] geq(L,R)");
        let g = Formula::univ(Formula::implies(Formula::at(h("L.L")), Formula::at(h("L"))));
        assert_eq!(g.to_string(), "A ~(at(L.L) & ~at(L))");
    }

    use crate::history::History;

    #[test]
    fn sugar_builds_the_core_connectives() {
        let a = Formula::at(h("L"));
        let b = Formula::at(h("R"));
        assert_eq!(
            Formula::or(a.clone(), b.clone()),
            Formula::not(Formula::and(
                Formula::not(a.clone()),
                Formula::not(b.clone())
            ))
        );
        assert_eq!(Formula::conj(Vec::new()), Formula::taut());
        assert_eq!(Formula::disj(Vec::new()), Formula::contradiction());
        assert!(Formula::iff(a, b).size() > 5);
    }
}
