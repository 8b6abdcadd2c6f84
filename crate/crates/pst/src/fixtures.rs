//! Canonical small instances used across tests, the witness hunters, and the
//! CLI docs. Each one isolates a distinct interaction between sight and the
//! solution sets.

use std::collections::BTreeSet;

use crate::history::h;
use crate::payoff::Payoff;
use crate::sight::{RawSight, SightFunction};
use crate::tree::PreferenceTree;

fn ratio(n: i64) -> Payoff {
    Payoff::from_integer(n)
}

fn tree(entries: &[(&str, i64)]) -> PreferenceTree<Payoff> {
    PreferenceTree::new(entries.iter().map(|&(path, value)| (h(path), ratio(value))))
        .expect("fixture tree is valid")
}

fn sight(tree: &PreferenceTree<Payoff>, entries: &[(&str, &[&str])]) -> SightFunction {
    let mut raw: RawSight = tree
        .histories()
        .map(|hist| (hist.clone(), BTreeSet::from([hist.clone()])))
        .collect();
    for (key, members) in entries {
        raw.insert(h(key), members.iter().map(|m| h(m)).collect());
    }
    SightFunction::from_raw(tree, &raw).expect("fixture sight is valid")
}

/// Two-stage binary tree with terminal payoffs ordered
/// `R.R > L.L > R.L > L.R` and indifferent intermediate nodes.
pub fn two_stage() -> PreferenceTree<Payoff> {
    tree(&[
        (".", 0),
        ("L", 0),
        ("R", 0),
        ("L.L", 3),
        ("L.R", 1),
        ("R.L", 2),
        ("R.R", 4),
    ])
}

/// Narrow sight on [`two_stage`]: the agent initially sees only the two
/// crossing paths `L.R` and `R.L`, and discovers `R.R` after moving to `R`.
/// Solving under it reaches the global best outcome `R.R`.
pub fn two_stage_narrow(t: &PreferenceTree<Payoff>) -> SightFunction {
    sight(
        t,
        &[
            (".", &[".", "L", "R", "L.R", "R.L"]),
            ("L", &["L", "L.R"]),
            ("R", &["R", "R.L", "R.R"]),
        ],
    )
}

/// Wide sight on [`two_stage`]: the agent sees `L.L`, `L.R` and `R.L` up
/// front but never discovers `R.R`, and ends at the inferior `L.L`.
pub fn two_stage_wide(t: &PreferenceTree<Payoff>) -> SightFunction {
    sight(
        t,
        &[
            (".", &[".", "L", "R", "L.L", "L.R", "R.L"]),
            ("L", &["L", "L.L", "L.R"]),
            ("R", &["R", "R.L"]),
        ],
    )
}

/// Pointwise superset of [`two_stage_narrow`] that additionally reveals
/// `L.L` at the root and at `L`. The extra sight drags the solution from
/// `R.R` down to `L.L`: seeing more, getting less.
pub fn two_stage_extended(t: &PreferenceTree<Payoff>) -> SightFunction {
    sight(
        t,
        &[
            (".", &[".", "L", "R", "L.L", "L.R", "R.L"]),
            ("L", &["L", "L.L", "L.R"]),
            ("R", &["R", "R.L", "R.R"]),
        ],
    )
}

/// Tree whose best terminal `L.L` is masked by the sight below: the agent at
/// `L` only sees `L.R`, so the globally optimal branch is never taken.
pub fn masked_best() -> PreferenceTree<Payoff> {
    tree(&[
        (".", 1),
        ("L", 1),
        ("R", 2),
        ("L.L", 3),
        ("L.R", 1),
        ("R.L", 2),
    ])
}

/// The masking sight for [`masked_best`]: subjectively consistent, yet the
/// solution under it differs from the sighted-free one.
pub fn masked_best_sight(t: &PreferenceTree<Payoff>) -> SightFunction {
    sight(
        t,
        &[
            (".", &[".", "L"]),
            ("L", &["L", "L.R"]),
            ("R", &["R", "R.L"]),
        ],
    )
}

/// Tree where the objectively worse branch `L` (payoff 1 versus `R`'s 2)
/// leads to the best terminal, so full sight flips the subjective order of
/// `L` and `R` while both solution sets still agree on `L.L`.
pub fn flipped_mid() -> PreferenceTree<Payoff> {
    tree(&[(".", 0), ("L", 1), ("R", 2), ("L.L", 3), ("R.L", 2)])
}

/// The fixture instances as `(tree, sight)` pairs, in a stable order.
pub fn all_fixtures() -> Vec<(PreferenceTree<Payoff>, SightFunction)> {
    let t1 = two_stage();
    let s1a = two_stage_narrow(&t1);
    let s1b = two_stage_wide(&t1);
    let t2 = masked_best();
    let s2 = masked_best_sight(&t2);
    let t3 = flipped_mid();
    let s3 = SightFunction::full(&t3);
    vec![(t1.clone(), s1a), (t1, s1b), (t2, s2), (t3, s3)]
}

/// Names matching [`all_fixtures`] order, for report output.
pub fn fixture_names() -> Vec<&'static str> {
    vec![
        "two_stage/narrow",
        "two_stage/wide",
        "masked_best",
        "flipped_mid",
    ]
}
