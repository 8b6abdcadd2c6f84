//! Seeded random instances, witness hunting, and the sight-versus-payoff
//! sweep.
//!
//! Everything here is deterministic in the seed: per-trial seeds are derived
//! from the master seed by trial index, so a hit is reproducible in
//! isolation and independent of how many trials ran before it.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fixtures;
use crate::history::History;
use crate::logic::{axiom_suite, mk_model, Schema};
use crate::modal::{frame_suite, FrameConfig, FrameProp};
use crate::payoff::Payoff;
use crate::sight::{RawSight, SightFunction};
use crate::solve::scbi_set;
use crate::tree::PreferenceTree;

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

/// How the generated instance's sight is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SightKind {
    Full,
    Horizon(usize),
    /// Per-node random subsets, closed up by repair. The seed is independent
    /// of the tree seed so sights can be varied over a fixed tree.
    Random {
        seed: u64,
    },
}

/// Parameters for one random instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSpec {
    pub depth: usize,
    pub branching: usize,
    /// Payoffs are integers drawn from `0..=payoff_max` unless `distinct`
    /// is set, in which case they are a permutation of `0..n`.
    pub payoff_max: i64,
    pub distinct: bool,
    pub sight: SightKind,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            depth: 3,
            branching: 2,
            payoff_max: 20,
            distinct: true,
            sight: SightKind::Full,
            seed: 0,
        }
    }
}

const ACTIONS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

/// Generates a valid `(tree, sight)` pair, deterministically in the seed.
pub fn random_instance(spec: &GenSpec) -> (PreferenceTree<Payoff>, SightFunction) {
    assert!(spec.branching >= 1 && spec.branching <= ACTIONS.len());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut histories = vec![History::root()];
    let mut frontier = vec![History::root()];
    for depth in 0..spec.depth {
        let mut next = Vec::new();
        for h in frontier {
            let width = if depth == 0 {
                rng.random_range(1..=spec.branching)
            } else {
                rng.random_range(0..=spec.branching)
            };
            for action in ACTIONS.iter().take(width) {
                let child = h.child(action);
                histories.push(child.clone());
                next.push(child);
            }
        }
        frontier = next;
    }
    histories.sort();

    let payoffs: Vec<Payoff> = if spec.distinct {
        let mut values: Vec<i64> = (0..histories.len() as i64).collect();
        for i in (1..values.len()).rev() {
            values.swap(i, rng.random_range(0..=i));
        }
        values.into_iter().map(Payoff::from_integer).collect()
    } else {
        (0..histories.len())
            .map(|_| Payoff::from_integer(rng.random_range(0..=spec.payoff_max)))
            .collect()
    };

    let tree = PreferenceTree::new(histories.into_iter().zip(payoffs))
        .expect("generated histories are prefix-closed");
    let sight = instance_sight(&tree, spec.sight);
    (tree, sight)
}

fn instance_sight(tree: &PreferenceTree<Payoff>, kind: SightKind) -> SightFunction {
    match kind {
        SightKind::Full => SightFunction::full(tree),
        SightKind::Horizon(k) => SightFunction::horizon(tree, k),
        SightKind::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw = random_raw_sight(tree, &mut rng);
            SightFunction::repair(tree, &raw).expect("raw sight extends its keys")
        }
    }
}

fn random_raw_sight(tree: &PreferenceTree<Payoff>, rng: &mut ChaCha8Rng) -> RawSight {
    tree.ids()
        .map(|id| {
            let members: BTreeSet<History> = tree
                .extensions_of(id)
                .into_iter()
                .filter(|&e| e == id || rng.random_bool(0.5))
                .map(|e| tree.history(e).clone())
                .collect();
            (tree.history(id).clone(), members)
        })
        .collect()
}

/// Derives the seed for one trial from the master seed.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    master
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(trial as u64)
        .rotate_left(17)
}

// ---------------------------------------------------------------------------
// Growing-sight witnesses
// ---------------------------------------------------------------------------

/// The three possible orderings between the outcomes under nested sights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SightGrowthCase {
    /// The smaller sight's outcome is strictly better.
    LessSightBetter,
    /// The larger sight's outcome is strictly better.
    MoreSightBetter,
    /// The two outcomes tie.
    Indifferent,
}

impl SightGrowthCase {
    pub fn parse(name: &str) -> Option<SightGrowthCase> {
        match name {
            "fact6-a" => Some(SightGrowthCase::LessSightBetter),
            "fact6-b" => Some(SightGrowthCase::MoreSightBetter),
            "fact6-c" => Some(SightGrowthCase::Indifferent),
            _ => None,
        }
    }

    fn matches(self, ordering: std::cmp::Ordering) -> bool {
        match self {
            SightGrowthCase::LessSightBetter => ordering == std::cmp::Ordering::Greater,
            SightGrowthCase::MoreSightBetter => ordering == std::cmp::Ordering::Less,
            SightGrowthCase::Indifferent => ordering == std::cmp::Ordering::Equal,
        }
    }
}

/// A verified witness: nested sights `s1 ⊆ s2` whose solution outcomes `z1`,
/// `z2` stand in the requested order.
#[derive(Debug, Clone)]
pub struct SightGrowthWitness {
    pub tree: PreferenceTree<Payoff>,
    pub narrow: SightFunction,
    pub wide: SightFunction,
    pub narrow_outcome: History,
    pub wide_outcome: History,
    pub trial: usize,
}

/// Searches random instances for a witness of the requested case, verifying
/// and shrinking it before returning. Deterministic in the seed; the first
/// hit by trial index wins.
pub fn hunt_sight_growth(
    case: SightGrowthCase,
    trials: usize,
    seed: u64,
) -> Option<SightGrowthWitness> {
    for trial in 0..trials {
        let t_seed = trial_seed(seed, trial);
        let spec = GenSpec {
            depth: 1 + trial % 3,
            branching: 2 + (trial / 3) % 2,
            distinct: true,
            sight: SightKind::Random {
                seed: t_seed.wrapping_add(1),
            },
            seed: t_seed,
            ..GenSpec::default()
        };
        let (tree, wide) = random_instance(&spec);
        let narrow = shrink_sight_within(&tree, &wide, t_seed.wrapping_add(2));
        if let Some(witness) = check_growth_case(case, &tree, &narrow, &wide, trial) {
            return Some(shrink_witness(case, witness));
        }
    }
    None
}

/// A random pointwise subset of a valid sight, re-closed. The closure of a
/// subset stays inside the closed superset, so nesting is guaranteed.
fn shrink_sight_within(
    tree: &PreferenceTree<Payoff>,
    wide: &SightFunction,
    seed: u64,
) -> SightFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: RawSight = tree
        .ids()
        .map(|id| {
            let members: BTreeSet<History> = wide
                .set(id)
                .iter()
                .filter(|&&m| m == id || rng.random_bool(0.5))
                .map(|&m| tree.history(m).clone())
                .collect();
            (tree.history(id).clone(), members)
        })
        .collect();
    let narrow = SightFunction::repair(tree, &raw).expect("subset of a sight extends its keys");
    debug_assert!(narrow.pointwise_subset_of(wide));
    narrow
}

fn check_growth_case(
    case: SightGrowthCase,
    tree: &PreferenceTree<Payoff>,
    narrow: &SightFunction,
    wide: &SightFunction,
    trial: usize,
) -> Option<SightGrowthWitness> {
    if !narrow.pointwise_subset_of(wide) {
        return None;
    }
    let narrow_outcomes = scbi_set(tree, narrow);
    let wide_outcomes = scbi_set(tree, wide);
    for &z1 in &narrow_outcomes {
        for &z2 in &wide_outcomes {
            if case.matches(tree.prefer_ids(z1, z2)) {
                return Some(SightGrowthWitness {
                    tree: tree.clone(),
                    narrow: narrow.clone(),
                    wide: wide.clone(),
                    narrow_outcome: tree.history(z1).clone(),
                    wide_outcome: tree.history(z2).clone(),
                    trial,
                });
            }
        }
    }
    None
}

/// Greedy minimization: drop subtrees, then collapse sight entries, as long
/// as the witness property survives.
fn shrink_witness(case: SightGrowthCase, mut witness: SightGrowthWitness) -> SightGrowthWitness {
    loop {
        let mut improved = false;

        // Drop one subtree at a time, deepest candidates first.
        let mut candidates: Vec<History> = witness
            .tree
            .histories()
            .filter(|h| !h.is_empty())
            .cloned()
            .collect();
        candidates.sort_by_key(|h| std::cmp::Reverse(h.len()));
        for dropped in candidates {
            if let Some(smaller) = drop_subtree(&witness, &dropped) {
                if let Some(next) =
                    check_growth_case(case, &smaller.0, &smaller.1, &smaller.2, witness.trial)
                {
                    witness = next;
                    improved = true;
                    break;
                }
            }
        }
        if improved {
            continue;
        }

        // Collapse wide entries down to the narrow ones where validity
        // survives.
        for id in witness.tree.ids() {
            if witness.wide.set(id) == witness.narrow.set(id) {
                continue;
            }
            let mut raw = witness.wide.to_raw(&witness.tree);
            raw.insert(
                witness.tree.history(id).clone(),
                witness
                    .narrow
                    .visible_histories(&witness.tree, witness.tree.history(id))
                    .unwrap(),
            );
            if let Ok(report) = crate::sight::validate_sight(&witness.tree, &raw) {
                if report.is_ok() {
                    let collapsed = SightFunction::from_raw(&witness.tree, &raw).unwrap();
                    if let Some(next) = check_growth_case(
                        case,
                        &witness.tree,
                        &witness.narrow,
                        &collapsed,
                        witness.trial,
                    ) {
                        witness = next;
                        improved = true;
                        break;
                    }
                }
            }
        }
        if !improved {
            return witness;
        }
    }
}

fn drop_subtree(
    witness: &SightGrowthWitness,
    dropped: &History,
) -> Option<(PreferenceTree<Payoff>, SightFunction, SightFunction)> {
    let kept: Vec<(History, Payoff)> = witness
        .tree
        .entries()
        .filter(|(h, _)| !dropped.is_prefix_of(h))
        .map(|(h, p)| (h.clone(), *p))
        .collect();
    if kept.len() == witness.tree.len() || kept.is_empty() {
        return None;
    }
    let tree = PreferenceTree::new(kept).ok()?;
    let restrict = |sight: &SightFunction| -> Option<SightFunction> {
        let raw: RawSight = tree
            .histories()
            .map(|h| {
                let members = sight
                    .visible_histories(&witness.tree, h)
                    .ok()?
                    .into_iter()
                    .filter(|m| tree.contains(m))
                    .collect();
                Some((h.clone(), members))
            })
            .collect::<Option<_>>()?;
        SightFunction::from_raw(&tree, &raw).ok()
    };
    let narrow = restrict(&witness.narrow)?;
    let wide = restrict(&witness.wide)?;
    Some((tree, narrow, wide))
}

// ---------------------------------------------------------------------------
// Schema counterexample hunting
// ---------------------------------------------------------------------------

/// A schema registered for hunting: either an announcement-logic schema or a
/// frame principle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemaTarget {
    Axiom(Schema),
    Frame(FrameProp),
}

impl SchemaTarget {
    pub fn parse(name: &str) -> Option<SchemaTarget> {
        Schema::from_name(name)
            .map(SchemaTarget::Axiom)
            .or_else(|| FrameProp::from_name(name).map(SchemaTarget::Frame))
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemaTarget::Axiom(s) => s.name(),
            SchemaTarget::Frame(p) => p.name(),
        }
    }
}

/// A verified schema counterexample on a concrete instance.
#[derive(Debug, Clone)]
pub struct SchemaCounterexample {
    pub tree: PreferenceTree<Payoff>,
    pub sight: SightFunction,
    pub description: String,
    /// Fixture index or trial number where the instance came from.
    pub trial: usize,
}

/// Hunts a falsifying instance for the schema: the shipped fixtures are
/// tried first, random instances after. Every hit is re-verified by
/// evaluation before it is returned.
pub fn hunt_schema(target: SchemaTarget, trials: usize, seed: u64) -> Option<SchemaCounterexample> {
    let fixture_pool = fixtures::all_fixtures();
    for trial in 0..trials {
        let (tree, sight) = if trial < fixture_pool.len() {
            fixture_pool[trial].clone()
        } else {
            let t_seed = trial_seed(seed, trial);
            let spec = GenSpec {
                depth: 1 + trial % 3,
                branching: 2,
                distinct: false,
                payoff_max: 6,
                sight: SightKind::Random {
                    seed: t_seed.wrapping_add(1),
                },
                seed: t_seed,
            };
            random_instance(&spec)
        };
        match target {
            SchemaTarget::Axiom(schema) => {
                let model = mk_model(&tree, &sight);
                let report = axiom_suite(&model);
                let outcome = report.outcome(schema);
                if let (false, Some(witness)) = (outcome.verified, &outcome.witness) {
                    let verified = !model
                        .eval(&witness.state, &witness.instance)
                        .expect("witness instance evaluates");
                    assert!(verified, "suite witness failed re-verification");
                    return Some(SchemaCounterexample {
                        tree,
                        sight,
                        description: format!(
                            "{} fails at {}: {}",
                            schema.name(),
                            witness.state,
                            witness.instance
                        ),
                        trial,
                    });
                }
            }
            SchemaTarget::Frame(prop) => {
                let config = FrameConfig {
                    random_valuations: 20,
                    seed: trial_seed(seed, trial),
                    uniqueness_node_limit: 0,
                };
                let report = frame_suite(&tree, &sight, &config);
                let outcome = report.outcome(prop);
                if let Some(witness) = &outcome.witness {
                    return Some(SchemaCounterexample {
                        tree,
                        sight,
                        description: format!(
                            "{} fails at {} under p = {:?}: {}",
                            prop.name(),
                            witness.state,
                            witness.valuation,
                            witness.formula
                        ),
                        trial,
                    });
                }
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Sight sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub horizons: RangeInclusive<usize>,
    pub trials: usize,
    pub seed: u64,
    pub depth: usize,
    pub branching: usize,
    pub payoff_max: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub seed: u64,
    pub depth: usize,
    pub branch: usize,
    pub horizon: usize,
    /// Payoff of the lexicographically least solution outcome under the
    /// horizon sight; empty when the horizon leaves no justified move.
    pub scbi_payoff: Option<Payoff>,
    pub bi_payoff: Payoff,
}

/// One row per `(instance, horizon)`. Payoffs are not monotone in the
/// horizon; that non-monotonicity is the point of the experiment.
pub fn sweep(spec: &SweepSpec) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for trial in 0..spec.trials {
        let t_seed = trial_seed(spec.seed, trial);
        let gen = GenSpec {
            depth: spec.depth,
            branching: spec.branching,
            payoff_max: spec.payoff_max,
            distinct: true,
            sight: SightKind::Full,
            seed: t_seed,
        };
        let (tree, _) = random_instance(&gen);
        let bi_payoff = *crate::solve::bi_set(&tree)
            .iter()
            .map(|&z| tree.payoff(z))
            .max()
            .expect("solution set is nonempty");
        for horizon in spec.horizons.clone() {
            let sight = SightFunction::horizon(&tree, horizon);
            let outcomes = scbi_set(&tree, &sight);
            let scbi_payoff = outcomes.iter().next().map(|&z| *tree.payoff(z));
            for &z in &outcomes {
                assert!(
                    bi_payoff >= *tree.payoff(z),
                    "global dominance violated in sweep"
                );
            }
            rows.push(SweepRow {
                seed: t_seed,
                depth: spec.depth,
                branch: spec.branching,
                horizon,
                scbi_payoff,
                bi_payoff,
            });
        }
    }
    rows
}

/// Renders sweep rows in the stable CSV layout.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("seed,depth,branch,horizon,scbi_payoff,bi_payoff\n");
    for row in rows {
        let scbi = row.scbi_payoff.map(|p| p.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.seed, row.depth, row.branch, row.horizon, scbi, row.bi_payoff
        ));
    }
    out
}
