//! Command-line interface: validate and solve `.pst` files, inspect visible
//! trees, run the equivalence report, model-check formulas, run the axiom
//! and frame suites, generate random instances, hunt witnesses, and sweep
//! sight horizons.
//!
//! Exit codes: 0 success / property verified, 1 property refuted (witness
//! printed), 2 usage or input error.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pst::equivalence::equivalence_verdict;
use pst::history::History;
use pst::lab::{
    hunt_schema, hunt_sight_growth, random_instance, sweep, sweep_csv, GenSpec, SchemaTarget,
    SightGrowthCase, SightKind, SweepSpec,
};
use pst::logic::{axiom_suite, expected_validity, mk_model};
use pst::modal::{frame_suite, FrameConfig, ModalEvaluator};
use pst::solve::{bi_histories, scbi_histories};
use pst::textio::{
    parse_formula, parse_pst, serialize_pst, to_announcement_formula, PstInstance, SightHandling,
};
use pst::visible::visible_tree;

#[derive(Parser)]
#[command(
    name = "pst",
    version,
    about = "Preference-sight trees: solving and model checking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a .pst file and validate the tree and sight declarations.
    Validate {
        file: PathBuf,
        /// Close invalid sights up instead of rejecting them.
        #[arg(long)]
        repair: bool,
    },
    /// Print the two solution sets.
    Solve {
        file: PathBuf,
        #[arg(long)]
        repair: bool,
    },
    /// Print the visible tree at a history: members, visible terminals, and
    /// subjective payoffs.
    Visible {
        file: PathBuf,
        /// History to view from, as a dot path.
        #[arg(long)]
        at: String,
        #[arg(long)]
        repair: bool,
    },
    /// Print the full equivalence report.
    Check {
        file: PathBuf,
        #[arg(long)]
        repair: bool,
    },
    /// Model-check a formula at a state or for validity.
    Mc {
        file: PathBuf,
        #[arg(long)]
        formula: String,
        /// Evaluate at this state.
        #[arg(long, conflicts_with = "valid")]
        at: Option<String>,
        /// Check truth at every state instead.
        #[arg(long)]
        valid: bool,
        #[arg(long)]
        repair: bool,
    },
    /// Run the announcement-logic axiom suite.
    Axioms {
        file: PathBuf,
        #[arg(long)]
        repair: bool,
    },
    /// Run the modal frame suite.
    Frames {
        file: PathBuf,
        #[arg(long)]
        repair: bool,
        /// Number of random valuations per principle.
        #[arg(long, default_value_t = 100)]
        random: usize,
        #[arg(long, default_value_t = 0x70507)]
        seed: u64,
    },
    /// Generate a random instance and write it as a .pst file.
    Gen {
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        branch: usize,
        #[arg(long, default_value_t = 20)]
        payoff_max: i64,
        /// full | horizon:K | random:SEED
        #[arg(long, default_value = "full")]
        sight: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Force pairwise-distinct payoffs.
        #[arg(long)]
        distinct: bool,
    },
    /// Search for a witness: fact6-a | fact6-b | fact6-c | schema:NAME.
    Hunt {
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 10000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sweep sight horizons over random instances and write a CSV.
    Sweep {
        /// Horizon range K1..K2 (inclusive).
        #[arg(long)]
        horizons: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 2)]
        branch: usize,
        #[arg(long, default_value_t = 20)]
        payoff_max: i64,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn load(file: &PathBuf, repair: bool) -> Result<PstInstance, String> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    let handling = if repair {
        SightHandling::Repair
    } else {
        SightHandling::Strict
    };
    parse_pst(&text, handling).map_err(|e| format!("{}:{e}", file.display()))
}

fn parse_path(path: &str) -> Result<History, String> {
    path.parse()
        .map_err(|e: pst::history::PathError| e.to_string())
}

fn render_set(histories: &BTreeSet<History>) -> String {
    let inner: Vec<String> = histories.iter().map(|h| h.to_string()).collect();
    format!("{{{}}}", inner.join(", "))
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Validate { file, repair } => {
            let instance = load(&file, repair)?;
            println!(
                "ok: {} histories, {} terminals",
                instance.tree.len(),
                instance.tree.terminals().len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve { file, repair } => {
            let instance = load(&file, repair)?;
            let bi = bi_histories(&instance.tree);
            let scbi = scbi_histories(&instance.tree, &instance.sight);
            println!("BI: {}  SCBI: {}", render_set(&bi), render_set(&scbi));
            Ok(ExitCode::SUCCESS)
        }
        Command::Visible { file, at, repair } => {
            let instance = load(&file, repair)?;
            let root = parse_path(&at)?;
            let visible =
                visible_tree(&instance.tree, &instance.sight, &root).map_err(|e| e.to_string())?;
            let members: BTreeSet<History> = visible
                .members()
                .iter()
                .map(|&id| instance.tree.history(id).clone())
                .collect();
            let terminals: BTreeSet<History> = visible
                .terminals()
                .iter()
                .map(|&id| instance.tree.history(id).clone())
                .collect();
            println!("H_h: {}", render_set(&members));
            println!("Z_h: {}", render_set(&terminals));
            let payoffs: Vec<String> = visible
                .members()
                .iter()
                .map(|&id| {
                    format!(
                        "{}={}",
                        instance.tree.history(id),
                        visible.subjective_payoff(id)
                    )
                })
                .collect();
            println!("P_h: {}", payoffs.join(" "));
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { file, repair } => {
            let instance = load(&file, repair)?;
            let report = equivalence_verdict(&instance.tree, &instance.sight);
            println!("BI: {}", render_set(&report.bi));
            println!("SCBI: {}", render_set(&report.scbi));
            println!("equal: {}", report.equal);
            match &report.consistency_witness {
                None => println!("consistent: true"),
                Some((at, h1, h2)) => {
                    println!("consistent: false (at {at}: {h1} vs {h2})")
                }
            }
            for (history, check) in &report.per_bi_history {
                let reachable = match &check.reachability_witness {
                    None => "reachable=true".to_string(),
                    Some((at, step)) => {
                        format!("reachable=false (step {step} invisible at {at})")
                    }
                };
                let optimal = match check.locally_optimal {
                    None => "optimal=skipped".to_string(),
                    Some(true) => "optimal=true".to_string(),
                    Some(false) => format!("optimal=false ({:?})", check.optimality_failure),
                };
                println!("{history}: {reachable}, {optimal}");
            }
            println!(
                "theorem: {}",
                if report.theorem_agrees {
                    "agrees"
                } else {
                    "diverges (payoff ties)"
                }
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Mc {
            file,
            formula,
            at,
            valid,
            repair,
        } => {
            let instance = load(&file, repair)?;
            if !valid && at.is_none() {
                return Err("mc needs either --at PATH or --valid".to_string());
            }
            let parsed = parse_formula(&formula).map_err(|e| e.to_string())?;
            let verdict: (bool, Option<History>) = match to_announcement_formula(&parsed) {
                Some(announcement_formula) => {
                    let model = mk_model(&instance.tree, &instance.sight);
                    if valid {
                        let v = model
                            .valid(&announcement_formula)
                            .map_err(|e| e.to_string())?;
                        (v.valid, v.counterexample)
                    } else {
                        let state = parse_path(at.as_deref().unwrap())?;
                        let t = model
                            .eval(&state, &announcement_formula)
                            .map_err(|e| e.to_string())?;
                        (t, None)
                    }
                }
                None => {
                    let evaluator = ModalEvaluator::new(&instance.tree, &instance.sight);
                    if valid {
                        let counter = evaluator.valid(&parsed).map_err(|e| e.to_string())?;
                        (counter.is_none(), counter)
                    } else {
                        let state = parse_path(at.as_deref().unwrap())?;
                        let t = evaluator.eval(&state, &parsed).map_err(|e| e.to_string())?;
                        (t, None)
                    }
                }
            };
            match verdict {
                (true, _) => {
                    println!("true");
                    Ok(ExitCode::SUCCESS)
                }
                (false, counterexample) => {
                    println!("false");
                    if let Some(state) = counterexample {
                        println!("counterexample: {state}");
                    }
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Axioms { file, repair } => {
            let instance = load(&file, repair)?;
            let model = mk_model(&instance.tree, &instance.sight);
            let report = axiom_suite(&model);
            for outcome in &report.outcomes {
                let expectation = match expected_validity(outcome.schema) {
                    Some(true) => "valid",
                    Some(false) => "invalid",
                    None => "empirical",
                };
                match &outcome.witness {
                    None => println!(
                        "{}: verified ({} instances, {expectation})",
                        outcome.schema.name(),
                        outcome.instances
                    ),
                    Some(w) => println!(
                        "{}: refuted at {} by {} ({expectation})",
                        outcome.schema.name(),
                        w.state,
                        w.instance
                    ),
                }
            }
            if report.sound() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
        Command::Frames {
            file,
            repair,
            random,
            seed,
        } => {
            let instance = load(&file, repair)?;
            let config = FrameConfig {
                random_valuations: random,
                seed,
                ..FrameConfig::default()
            };
            let report = frame_suite(&instance.tree, &instance.sight, &config);
            for outcome in &report.outcomes {
                let status = match (outcome.prop.expected_valid(), outcome.as_expected) {
                    (true, true) => format!("verified ({} instances)", outcome.instances),
                    (true, false) => format!(
                        "REFUTED: {}",
                        outcome
                            .witness
                            .as_ref()
                            .map(|w| format!("{} at {}", w.formula, w.state))
                            .unwrap_or_default()
                    ),
                    (false, true) => format!(
                        "refuted as expected: {}",
                        outcome
                            .witness
                            .as_ref()
                            .map(|w| format!("{} at {}", w.formula, w.state))
                            .unwrap_or_default()
                    ),
                    (false, false) => "no counterexample on this instance".to_string(),
                };
                println!("{}: {status}", outcome.prop.name());
            }
            if report.sound() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
        Command::Gen {
            depth,
            branch,
            payoff_max,
            sight,
            seed,
            out,
            distinct,
        } => {
            let sight_kind = parse_sight_kind(&sight)?;
            let spec = GenSpec {
                depth,
                branching: branch,
                payoff_max,
                distinct,
                sight: sight_kind,
                seed,
            };
            let (tree, sight_fn) = random_instance(&spec);
            let text = serialize_pst(&tree, &sight_fn);
            std::fs::write(&out, text)
                .map_err(|e| format!("cannot write {}: {e}", out.display()))?;
            println!("wrote {} histories to {}", tree.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Hunt {
            target,
            trials,
            seed,
        } => {
            if let Some(case) = SightGrowthCase::parse(&target) {
                match hunt_sight_growth(case, trials, seed) {
                    Some(witness) => {
                        println!(
                            "witness found at trial {}: narrow outcome {} vs wide outcome {}",
                            witness.trial, witness.narrow_outcome, witness.wide_outcome
                        );
                        println!("-- narrow sight instance --");
                        print!("{}", serialize_pst(&witness.tree, &witness.narrow));
                        println!("-- wide sight instance --");
                        print!("{}", serialize_pst(&witness.tree, &witness.wide));
                        Ok(ExitCode::SUCCESS)
                    }
                    None => {
                        eprintln!("no witness within {trials} trials");
                        Ok(ExitCode::from(1))
                    }
                }
            } else if let Some(name) = target.strip_prefix("schema:") {
                let schema =
                    SchemaTarget::parse(name).ok_or_else(|| format!("unknown schema {name:?}"))?;
                match hunt_schema(schema, trials, seed) {
                    Some(counterexample) => {
                        println!(
                            "counterexample at trial {}: {}",
                            counterexample.trial, counterexample.description
                        );
                        print!(
                            "{}",
                            serialize_pst(&counterexample.tree, &counterexample.sight)
                        );
                        Ok(ExitCode::SUCCESS)
                    }
                    None => {
                        eprintln!("no counterexample within {trials} trials");
                        Ok(ExitCode::from(1))
                    }
                }
            } else {
                Err(format!(
                    "unknown target {target:?} (expected fact6-a|fact6-b|fact6-c|schema:NAME)"
                ))
            }
        }
        Command::Sweep {
            horizons,
            trials,
            seed,
            out,
            depth,
            branch,
            payoff_max,
        } => {
            let (lo, hi) = horizons
                .split_once("..")
                .ok_or_else(|| "horizons must look like K1..K2".to_string())?;
            let lo: usize = lo
                .parse()
                .map_err(|_| "bad horizon lower bound".to_string())?;
            let hi: usize = hi
                .parse()
                .map_err(|_| "bad horizon upper bound".to_string())?;
            if lo > hi {
                return Err("empty horizon range".to_string());
            }
            let spec = SweepSpec {
                horizons: lo..=hi,
                trials,
                seed,
                depth,
                branching: branch,
                payoff_max,
            };
            let rows = sweep(&spec);
            std::fs::write(&out, sweep_csv(&rows))
                .map_err(|e| format!("cannot write {}: {e}", out.display()))?;
            println!("wrote {} rows to {}", rows.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn parse_sight_kind(text: &str) -> Result<SightKind, String> {
    if text == "full" {
        return Ok(SightKind::Full);
    }
    if let Some(k) = text.strip_prefix("horizon:") {
        let k: usize = k
            .parse()
            .map_err(|_| format!("bad horizon in --sight {text:?}"))?;
        return Ok(SightKind::Horizon(k));
    }
    if let Some(seed) = text.strip_prefix("random:") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| format!("bad seed in --sight {text:?}"))?;
        return Ok(SightKind::Random { seed });
    }
    Err(format!(
        "unknown --sight {text:?} (expected full, horizon:K or random:SEED)"
    ))
}
