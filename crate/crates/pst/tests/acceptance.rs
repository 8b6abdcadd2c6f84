//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its timing. Run with
//!
//! ```text
//! cargo test --test acceptance -- --nocapture
//! ```
//!
//! The worked-example criteria are exact; the property criteria draw their
//! instances from the seeded generator so every run checks the same 10,000
//! trees. Report artifacts (schema witnesses and the announcement-
//! composition classification) are persisted under the cargo target tmpdir.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::time::Instant;

use pst::equivalence::{
    equivalence_verdict, is_locally_optimal, is_ps_consistent, is_sight_reachable,
};
use pst::fixtures;
use pst::history::{h, History};
use pst::lab::{
    hunt_sight_growth, random_instance, trial_seed, GenSpec, SightGrowthCase, SightKind,
};
use pst::logic::{
    axiom_suite, consistency_formula, equivalence_formula, local_optimality_formula,
    local_rationality_formula, mk_model, sight_reachability_formula, Schema,
};
use pst::modal::{
    bi_axiom_alternative, frame_suite, relation_satisfies_bi_axiom, FrameConfig, FrameProp,
};
use pst::sight::SightFunction;
use pst::solve::{
    bi_set, bi_sight_gfp, classical_bi_relation, local_bi_moves, rats_check, scbi_relation,
    scbi_set,
};
use pst::textio::{parse_formula, parse_pst, serialize_pst, SightHandling};
use pst::tree::{NodeId, PreferenceTree};
use pst::Payoff;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pass(criterion: usize, started: Instant, summary: &str) {
    println!(
        "criterion {criterion}: PASS ({} ms) - {summary}",
        started.elapsed().as_millis()
    );
}

fn histories<P: pst::PayoffValue>(
    tree: &PreferenceTree<P>,
    ids: &BTreeSet<NodeId>,
) -> BTreeSet<History> {
    ids.iter().map(|&z| tree.history(z).clone()).collect()
}

/// The shared 10,000-instance pool for the property criteria: depth at most
/// 4, branching at most 3, pairwise-distinct payoffs, random repaired
/// sights.
fn property_pool() -> Vec<(PreferenceTree<Payoff>, SightFunction)> {
    (0..10_000)
        .map(|i| {
            let seed = trial_seed(0xACCE, i);
            let spec = GenSpec {
                seed,
                depth: 1 + i % 4,
                branching: 2 + i % 2,
                distinct: true,
                sight: SightKind::Random {
                    seed: seed.wrapping_add(1),
                },
                ..GenSpec::default()
            };
            random_instance(&spec)
        })
        .collect()
}

fn model_pool(count: usize, base: u64) -> Vec<(PreferenceTree<Payoff>, SightFunction)> {
    (0..count)
        .map(|i| {
            let seed = trial_seed(base, i);
            let spec = GenSpec {
                seed,
                depth: 1 + i % 3,
                branching: 2,
                distinct: i % 3 == 0,
                payoff_max: 6,
                sight: SightKind::Random {
                    seed: seed.wrapping_add(1),
                },
            };
            random_instance(&spec)
        })
        .collect()
}

#[test]
fn criterion_1_two_stage_solutions() {
    let started = Instant::now();
    let tree = fixtures::two_stage();

    // Both sights are the closure repair of the narrative raw sets: at the
    // start the agent sees just the named paths, and the repair adds the
    // intermediate and remembered histories.
    let raw_narrow: pst::RawSight = [(".", vec!["L.R", "R.L"]), ("R", vec!["R.R", "R.L"])]
        .into_iter()
        .map(|(k, vs)| (h(k), vs.into_iter().map(h).collect()))
        .collect();
    let narrow = SightFunction::repair(&tree, &raw_narrow).unwrap();
    assert_eq!(narrow, fixtures::two_stage_narrow(&tree));
    let scbi_narrow = histories(&tree, &scbi_set(&tree, &narrow));
    assert_eq!(scbi_narrow, BTreeSet::from([h("R.R")]));

    let raw_wide: pst::RawSight = [(".", vec!["L.L", "L.R", "R.L"])]
        .into_iter()
        .map(|(k, vs)| (h(k), vs.into_iter().map(h).collect()))
        .collect();
    let wide = SightFunction::repair(&tree, &raw_wide).unwrap();
    assert_eq!(wide, fixtures::two_stage_wide(&tree));
    let scbi_wide = histories(&tree, &scbi_set(&tree, &wide));
    assert_eq!(scbi_wide, BTreeSet::from([h("L.L")]));

    assert_eq!(
        tree.prefer(&h("R.R"), &h("L.L")).unwrap(),
        std::cmp::Ordering::Greater
    );
    pass(
        1,
        started,
        "narrow sight reaches R.R, wide sight reaches L.L, and R.R is strictly better",
    );
}

#[test]
fn criterion_2_masked_best_report() {
    let started = Instant::now();
    let tree = fixtures::masked_best();
    let sight = fixtures::masked_best_sight(&tree);

    let report = equivalence_verdict(&tree, &sight);
    assert_eq!(report.bi, BTreeSet::from([h("L.L")]));
    assert_eq!(report.scbi, BTreeSet::from([h("L.R")]));
    assert!(report.consistent);
    let check = &report.per_bi_history[&h("L.L")];
    assert!(!check.sight_reachable, "condition I must fail for L.L");
    pass(
        2,
        started,
        "BI={L.L}, SCBI={L.R}, consistent, and condition I fails for L.L",
    );
}

#[test]
fn criterion_3_flipped_mid_report() {
    let started = Instant::now();
    let tree = fixtures::flipped_mid();
    let sight = SightFunction::full(&tree);

    let visible = pst::visible::visible_tree(&tree, &sight, &History::root()).unwrap();
    let l = tree.id_of(&h("L")).unwrap();
    let r = tree.id_of(&h("R")).unwrap();
    assert_eq!(*visible.subjective_payoff(l), Payoff::from_integer(3));
    assert_eq!(*visible.subjective_payoff(r), Payoff::from_integer(2));

    let report = equivalence_verdict(&tree, &sight);
    assert_eq!(report.bi, BTreeSet::from([h("L.L")]));
    assert!(report.equal);
    assert!(!report.consistent);
    assert_eq!(report.consistency_witness, Some((h("."), h("L"), h("R"))));
    pass(
        3,
        started,
        "subjective payoffs L=3 R=2, BI=SCBI={L.L}, inconsistent with witness (., L, R)",
    );
}

#[test]
fn criterion_4_equivalence_theorem_property() {
    let started = Instant::now();
    let pool = property_pool();
    let mut equal_count = 0usize;
    for (tree, sight) in &pool {
        assert!(tree.has_distinct_payoffs());
        // Side one: the solution sets themselves.
        let equal = bi_set(tree) == scbi_set(tree, sight);
        // Side two: the two conditions, computed by the checkers.
        let mut conditions = true;
        for &b in &bi_set(tree) {
            let target = tree.history(b).clone();
            let reach = is_sight_reachable(tree, sight, &target).unwrap();
            if !reach.reachable {
                conditions = false;
                break;
            }
            if !is_locally_optimal(tree, sight, &target).unwrap().optimal {
                conditions = false;
                break;
            }
        }
        assert_eq!(
            equal,
            conditions,
            "theorem disagreement on a distinct-payoff instance:\n{}",
            serialize_pst(tree, sight)
        );
        equal_count += usize::from(equal);
    }
    pass(
        4,
        started,
        &format!("zero disagreements on 10000 instances ({equal_count} with equal solution sets)"),
    );
}

#[test]
fn criterion_5_oracle_equivalences() {
    let started = Instant::now();
    let pool = property_pool();
    for (tree, sight) in &pool {
        // The ternary relation's slices against classical solving of each
        // visible tree.
        let relation = bi_sight_gfp(tree, sight);
        for x in tree.ids() {
            assert_eq!(relation.slice(x), local_bi_moves(tree, sight, x));
        }

        // Diagonal path outcomes against the solution set.
        let diagonal = scbi_relation(tree, sight, &relation);
        let mut reached = BTreeSet::new();
        let mut stack = vec![tree.root()];
        while let Some(id) = stack.pop() {
            match diagonal.get(&id) {
                Some(next) if !next.is_empty() => stack.extend(next.iter().copied()),
                _ if tree.is_terminal(id) => {
                    reached.insert(id);
                }
                _ => {}
            }
        }
        assert_eq!(reached, scbi_set(tree, sight));

        // The two classical constructions coincide (asserted inside), and
        // the backward value at the root is the payoff of the global
        // optimum.
        let solution = classical_bi_relation(tree);
        let best = bi_set(tree).into_iter().next().unwrap();
        assert_eq!(solution.values[tree.root()], *tree.payoff(best));
    }
    pass(
        5,
        started,
        "ternary slices, diagonal outcomes, and both classical constructions agree on 10000 instances",
    );
}

#[test]
fn criterion_6_logic_suite() {
    let started = Instant::now();
    let always_valid = [
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
        Schema::Dual,
    ];

    let mut witness_log = String::new();
    let mut com_log = String::from("announcement-composition classification\n");
    let mut com_refutations = 0usize;
    let mut sp_refuted_on_fixture = false;
    let mut fact7_refuted_on_fixture = false;

    let fixture_instances: Vec<_> = fixtures::all_fixtures();
    let random_instances = model_pool(1000, 0x106);
    let names = fixtures::fixture_names();

    for (index, (tree, sight)) in fixture_instances
        .iter()
        .chain(random_instances.iter())
        .enumerate()
    {
        let label = if index < names.len() {
            names[index].to_string()
        } else {
            format!("random-{}", index - names.len())
        };
        let model = mk_model(tree, sight);
        let report = axiom_suite(&model);
        for schema in always_valid {
            let outcome = report.outcome(schema);
            assert!(
                outcome.verified,
                "{} refuted on {label}: {:?}",
                schema.name(),
                outcome.witness.as_ref().map(|w| w.instance.to_string())
            );
        }
        for schema in [Schema::SightPreference, Schema::VisibleTerminality] {
            let outcome = report.outcome(schema);
            if let Some(witness) = &outcome.witness {
                // Every stored witness re-refutes through the evaluator.
                assert!(!model.eval(&witness.state, &witness.instance).unwrap());
                if index < names.len() {
                    witness_log.push_str(&format!(
                        "{label}: {} refuted at {} by {}\n",
                        schema.name(),
                        witness.state,
                        witness.instance
                    ));
                    match schema {
                        Schema::SightPreference => sp_refuted_on_fixture = true,
                        _ => fact7_refuted_on_fixture = true,
                    }
                }
            }
        }
        let com = report.outcome(Schema::Composition);
        if let Some(witness) = &com.witness {
            assert!(!model.eval(&witness.state, &witness.instance).unwrap());
            com_refutations += 1;
            if com_refutations <= 5 {
                com_log.push_str(&format!(
                    "{label}: refuted at {} by {}\n",
                    witness.state, witness.instance
                ));
            }
        }
    }
    assert!(
        sp_refuted_on_fixture,
        "sight-preference must fail on a fixture"
    );
    assert!(
        fact7_refuted_on_fixture,
        "the visible-terminality schema must fail on a fixture"
    );
    com_log.push_str(&format!(
        "result: {}\n",
        if com_refutations == 0 {
            "verified on every checked model (bounded pools)".to_string()
        } else {
            format!("refuted on {com_refutations} of 1004 models")
        }
    ));

    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR"));
    std::fs::create_dir_all(dir).unwrap();
    let witness_path = dir.join("schema_witnesses.txt");
    std::fs::File::create(&witness_path)
        .unwrap()
        .write_all(witness_log.as_bytes())
        .unwrap();
    let com_path = dir.join("com_classification.txt");
    std::fs::File::create(&com_path)
        .unwrap()
        .write_all(com_log.as_bytes())
        .unwrap();

    pass(
        6,
        started,
        &format!(
            "12 schemas verified on 1004 models; refutation witnesses stored at {}; composition classification ({} refutations) at {}",
            witness_path.display(),
            com_refutations,
            com_path.display()
        ),
    );
}

#[test]
fn criterion_7_characterization_cross_checks() {
    let started = Instant::now();
    // Distinct payoffs keep the equivalence biconditional assertable; a
    // second tie-heavy pool exercises the definitional cross-checks and
    // logs any biconditional divergence verbatim instead of asserting it.
    let distinct_pool: Vec<_> = (0..1000)
        .map(|i| {
            let seed = trial_seed(0xC7, i);
            random_instance(&GenSpec {
                seed,
                depth: 1 + i % 3,
                branching: 2,
                distinct: true,
                sight: SightKind::Random {
                    seed: seed.wrapping_add(1),
                },
                ..GenSpec::default()
            })
        })
        .collect();
    let tied_pool = model_pool(300, 0xC7D);

    let mut checked = 0usize;
    let mut tie_divergences = String::new();
    for (index, (tree, sight)) in fixtures::all_fixtures()
        .iter()
        .chain(distinct_pool.iter())
        .chain(tied_pool.iter())
        .enumerate()
    {
        let model = mk_model(tree, sight);

        let consistency = consistency_formula(tree, sight);
        assert_eq!(
            model.valid(&consistency).unwrap().valid,
            is_ps_consistent(tree, sight).consistent
        );

        for target in tree.terminals() {
            let sr = sight_reachability_formula(tree, &target);
            let checker = is_sight_reachable(tree, sight, &target).unwrap();
            assert_eq!(model.valid(&sr).unwrap().valid, checker.reachable);
            if checker.reachable {
                let lo = local_optimality_formula(tree, sight, &target);
                assert_eq!(
                    model.valid(&lo).unwrap().valid,
                    is_locally_optimal(tree, sight, &target).unwrap().optimal
                );
            }
            checked += 1;
        }

        let equivalence = equivalence_formula(tree, sight);
        let verdict = model.valid(&equivalence).unwrap();
        if tree.has_distinct_payoffs() || index < fixtures::all_fixtures().len() {
            assert!(
                verdict.valid,
                "equivalence characterization failed at {:?} on\n{}",
                verdict.counterexample,
                serialize_pst(tree, sight)
            );
        } else if !verdict.valid {
            tie_divergences.push_str(&format!(
                "# biconditional diverges at {:?} under payoff ties\n{}\n",
                verdict.counterexample,
                serialize_pst(tree, sight)
            ));
        }

        let cfs = local_rationality_formula(tree, sight);
        assert_eq!(
            model.valid(&cfs).unwrap().valid,
            rats_check(tree, sight).holds
        );
    }

    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR"));
    std::fs::create_dir_all(dir).unwrap();
    let divergence_path = dir.join("tie_divergences.txt");
    std::fs::File::create(&divergence_path)
        .unwrap()
        .write_all(tie_divergences.as_bytes())
        .unwrap();

    pass(
        7,
        started,
        &format!(
            "five characterizations agree with the checkers on 1304 instances ({checked} terminals); tie-regime divergences logged verbatim at {}",
            divergence_path.display()
        ),
    );
}

#[test]
fn criterion_8_modal_frame_suite() {
    let started = Instant::now();
    let config = FrameConfig {
        random_valuations: 100,
        seed: 0x70507,
        uniqueness_node_limit: 7,
    };
    let expected_valid = [
        FrameProp::BiAxiom,
        FrameProp::ScbiStepCorrespondence,
        FrameProp::SightRationality,
        FrameProp::BestStepInvariance,
        FrameProp::LocalStepInvariance,
        FrameProp::OutcomeTerminality,
        FrameProp::ScbiOutcomeTerminality,
        FrameProp::BestDominance,
        FrameProp::LocalDominance,
    ];
    let mut refuted: BTreeMap<FrameProp, usize> = BTreeMap::new();

    let instances: Vec<_> = fixtures::all_fixtures()
        .into_iter()
        .chain(model_pool(100, 0xF8))
        .collect();
    for (tree, sight) in &instances {
        let report = frame_suite(tree, sight, &config);
        for prop in expected_valid {
            let outcome = report.outcome(prop);
            assert!(
                outcome.as_expected,
                "{} refuted on\n{}",
                prop.name(),
                serialize_pst(tree, sight)
            );
        }
        assert!(report.outcome(FrameProp::BiAxiomUniqueness).as_expected);
        for prop in [
            FrameProp::BestScbiInvariance,
            FrameProp::BestLocalInvariance,
            FrameProp::VisibleOutcomeTerminality,
            FrameProp::ScbiDominance,
        ] {
            if report.outcome(prop).witness.is_some() {
                *refuted.entry(prop).or_default() += 1;
            }
        }

        // The rationality axiom, checked relationally as well.
        let computed: BTreeMap<NodeId, BTreeSet<NodeId>> =
            classical_bi_relation(tree).relation.pairs().fold(
                BTreeMap::new(),
                |mut acc: BTreeMap<_, BTreeSet<_>>, (y, z)| {
                    acc.entry(y).or_default().insert(z);
                    acc
                },
            );
        assert!(relation_satisfies_bi_axiom(tree, &computed));
    }
    for prop in [
        FrameProp::BestScbiInvariance,
        FrameProp::BestLocalInvariance,
        FrameProp::VisibleOutcomeTerminality,
        FrameProp::ScbiDominance,
    ] {
        assert!(
            refuted.get(&prop).copied().unwrap_or(0) > 0,
            "{} was never refuted",
            prop.name()
        );
    }

    // Uniqueness, exhaustively: every tree shape with at most 7 nodes,
    // every distinct assignment of terminal payoffs.
    let mut assignments = 0usize;
    for n in 1..=7 {
        for shape in shapes(n) {
            let (all, terminals) = shape_histories(&shape);
            for perm in permutations(terminals.len()) {
                assignments += 1;
                let entries: Vec<(History, Payoff)> = all
                    .iter()
                    .map(|hh| {
                        let payoff = terminals
                            .iter()
                            .position(|t| t == hh)
                            .map(|i| perm[i])
                            .unwrap_or(0);
                        (hh.clone(), Payoff::from_integer(payoff))
                    })
                    .collect();
                let tree = PreferenceTree::new(entries).unwrap();
                assert!(
                    bi_axiom_alternative(&tree).is_none(),
                    "a second relation satisfies the axiom on {shape:?} with {perm:?}"
                );
            }
        }
    }
    pass(
        8,
        started,
        &format!(
            "all step/terminality/dominance principles verified on {} instances, the four refutable ones refuted ({:?}), uniqueness confirmed over {assignments} small trees",
            instances.len(),
            refuted.values().sum::<usize>()
        ),
    );
}

#[test]
fn criterion_9_growing_sight_hunts() {
    for (case, name, expected) in [
        (
            SightGrowthCase::LessSightBetter,
            "fact6-a",
            std::cmp::Ordering::Greater,
        ),
        (
            SightGrowthCase::MoreSightBetter,
            "fact6-b",
            std::cmp::Ordering::Less,
        ),
        (
            SightGrowthCase::Indifferent,
            "fact6-c",
            std::cmp::Ordering::Equal,
        ),
    ] {
        let started = Instant::now();
        let witness = hunt_sight_growth(case, 10_000, 0xF6)
            .unwrap_or_else(|| panic!("{name}: no witness within 10000 trials"));
        assert!(witness.narrow.pointwise_subset_of(&witness.wide));
        assert!(witness.tree.histories().all(|h| h.len() <= 3));
        assert_eq!(
            witness
                .tree
                .prefer(&witness.narrow_outcome, &witness.wide_outcome)
                .unwrap(),
            expected
        );
        // Re-verify through the solver.
        let narrow_outcomes = scbi_set(&witness.tree, &witness.narrow);
        let wide_outcomes = scbi_set(&witness.tree, &witness.wide);
        assert!(narrow_outcomes.contains(&witness.tree.id_of(&witness.narrow_outcome).unwrap()));
        assert!(wide_outcomes.contains(&witness.tree.id_of(&witness.wide_outcome).unwrap()));
        assert!(
            started.elapsed().as_secs() < 60,
            "{name} exceeded its time budget"
        );
        pass(
            9,
            started,
            &format!(
                "{name}: witness at trial {} with outcomes {} vs {}",
                witness.trial, witness.narrow_outcome, witness.wide_outcome
            ),
        );
    }
}

#[test]
fn criterion_10_parser_round_trip_and_fuzz() {
    let started = Instant::now();
    for (tree, sight) in fixtures::all_fixtures() {
        let text = serialize_pst(&tree, &sight);
        let reparsed = parse_pst(&text, SightHandling::Strict).unwrap();
        assert_eq!(reparsed.tree, tree);
        assert_eq!(reparsed.sight, sight);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xF022);
    let vocabulary = [
        "h ", "s ", ".", "->", ",", "L", "R", "a1", "0", "7/2", "-3", "#", "\n", " ", "(", ")",
        "at", "geq", "sg", "[ann ", "]", "~", "&", "|", "A ", "<leq>", "[view]", "end",
    ];
    let mut errors = 0usize;
    for i in 0..10_000 {
        let text = if i % 2 == 0 {
            let len = rng.random_range(0..200);
            let bytes: Vec<u8> = (0..len).map(|_| rng.random_range(0..=255)).collect();
            String::from_utf8_lossy(&bytes).into_owned()
        } else {
            let len = rng.random_range(0..40);
            (0..len)
                .map(|_| vocabulary[rng.random_range(0..vocabulary.len())])
                .collect()
        };
        for handling in [SightHandling::Strict, SightHandling::Repair] {
            if let Err(e) = parse_pst(&text, handling) {
                assert!(e.line >= 1 && e.column >= 1, "unpositioned error: {e}");
                errors += 1;
            }
        }
        if let Err(e) = parse_formula(&text) {
            assert!(e.line >= 1 && e.column >= 1, "unpositioned error: {e}");
        }
    }
    pass(
        10,
        started,
        &format!(
            "fixtures round-trip; 10000 fuzz inputs, {errors} positioned rejections, no crashes"
        ),
    );
}

// ---------------------------------------------------------------------------
// Small-tree shape enumeration for the uniqueness criterion
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
struct Shape(Vec<Shape>);

fn shapes(n: usize) -> Vec<Shape> {
    if n == 1 {
        return vec![Shape(Vec::new())];
    }
    let mut out = BTreeSet::new();
    fn go(remaining: usize, current: &mut Vec<Shape>, out: &mut BTreeSet<Shape>) {
        if remaining == 0 {
            let mut children = current.clone();
            children.sort();
            out.insert(Shape(children));
            return;
        }
        for size in 1..=remaining {
            for sub in shapes(size) {
                current.push(sub);
                go(remaining - size, current, out);
                current.pop();
            }
        }
    }
    go(n - 1, &mut Vec::new(), &mut out);
    out.into_iter().collect()
}

fn shape_histories(shape: &Shape) -> (Vec<History>, Vec<History>) {
    let mut all = Vec::new();
    let mut terminals = Vec::new();
    fn walk(shape: &Shape, at: History, all: &mut Vec<History>, terminals: &mut Vec<History>) {
        all.push(at.clone());
        if shape.0.is_empty() {
            terminals.push(at.clone());
        }
        for (i, child) in shape.0.iter().enumerate() {
            let name = ["a", "b", "c", "d", "e", "f"][i];
            walk(child, at.child(name), all, terminals);
        }
    }
    walk(shape, History::root(), &mut all, &mut terminals);
    (all, terminals)
}

fn permutations(k: usize) -> Vec<Vec<i64>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(k - 1) {
        for slot in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(slot, k as i64);
            out.push(p);
        }
    }
    out
}
