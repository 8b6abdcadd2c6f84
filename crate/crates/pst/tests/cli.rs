//! End-to-end checks of the `pst` binary: output formats, exit codes, and
//! the documented flag surface.

use std::path::PathBuf;
use std::process::{Command, Output};

fn pst(args: &[&str], dir: &std::path::Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pst"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const MASKED: &str = "\
h . 1
h L 1
h R 2
h L.L 3
h L.R 1
h R.L 2
s . -> ., L
s L -> L, L.R
s R -> R, R.L
";

const FLIPPED: &str = "\
h . 0
h L 1
h R 2
h L.L 3
h R.L 2
";

#[test]
fn solve_prints_both_solution_sets() {
    let dir = tmpdir("solve");
    std::fs::write(dir.join("masked.pst"), MASKED).unwrap();
    let out = pst(&["solve", "masked.pst"], &dir);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        "BI: {L.L}  SCBI: {L.R}\n"
    );
}

#[test]
fn visible_prints_the_updated_payoffs() {
    let dir = tmpdir("visible");
    std::fs::write(dir.join("flipped.pst"), FLIPPED).unwrap();
    let out = pst(&["visible", "flipped.pst", "--at", "."], &dir);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("Z_h: {L.L, R.L}"));
    assert!(stdout.contains("L=3"));
    assert!(stdout.contains("R=2"));
}

#[test]
fn mc_evaluates_the_worked_announcement() {
    let dir = tmpdir("mc");
    std::fs::write(dir.join("flipped.pst"), FLIPPED).unwrap();
    let out = pst(
        &[
            "mc",
            "flipped.pst",
            "--formula",
            "[ann sg(.)] geq(L,R)",
            "--at",
            ".",
        ],
        &dir,
    );
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "true\n");

    let out = pst(
        &["mc", "flipped.pst", "--formula", "geq(L,R)", "--at", "."],
        &dir,
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "false\n");

    let out = pst(
        &["mc", "flipped.pst", "--formula", "geq(L,L)", "--valid"],
        &dir,
    );
    assert!(out.status.success());

    let out = pst(
        &[
            "mc",
            "flipped.pst",
            "--formula",
            "[view] [BIv] end",
            "--at",
            ".",
        ],
        &dir,
    );
    assert!(out.status.success(), "modal formulas evaluate too");
}

#[test]
fn check_reports_the_consistency_witness() {
    let dir = tmpdir("check");
    std::fs::write(dir.join("flipped.pst"), FLIPPED).unwrap();
    let out = pst(&["check", "flipped.pst"], &dir);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("equal: true"));
    assert!(stdout.contains("consistent: false (at .: L vs R)"));
    assert!(stdout.contains("theorem: agrees"));
}

#[test]
fn validate_rejects_bad_input_with_position_and_exit_2() {
    let dir = tmpdir("validate");
    std::fs::write(dir.join("bad.pst"), "h . 0\nh L.L 1\n").unwrap();
    let out = pst(&["validate", "bad.pst"], &dir);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.pst:2:"), "stderr: {stderr}");

    std::fs::write(
        dir.join("open.pst"),
        "h . 0\nh L 1\nh L.L 2\ns . -> ., L.L\n",
    )
    .unwrap();
    let out = pst(&["validate", "open.pst"], &dir);
    assert_eq!(out.status.code(), Some(2));
    let out = pst(&["validate", "open.pst", "--repair"], &dir);
    assert!(out.status.success());
}

#[test]
fn axioms_and_frames_exit_clean_on_fixtures() {
    let dir = tmpdir("suites");
    std::fs::write(dir.join("masked.pst"), MASKED).unwrap();
    let out = pst(&["axioms", "masked.pst"], &dir);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("T_s: verified"));

    let out = pst(&["frames", "masked.pst", "--random", "10"], &dir);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("scbi-dominance: refuted as expected"));
}

#[test]
fn gen_output_round_trips_through_validate_and_solve() {
    let dir = tmpdir("gen");
    let out = pst(
        &[
            "gen",
            "--depth",
            "3",
            "--branch",
            "2",
            "--seed",
            "11",
            "--sight",
            "random:4",
            "--distinct",
            "--out",
            "g.pst",
        ],
        &dir,
    );
    assert!(out.status.success());
    assert!(pst(&["validate", "g.pst"], &dir).status.success());
    assert!(pst(&["solve", "g.pst"], &dir).status.success());
}

#[test]
fn hunt_finds_witnesses_and_reports_absence() {
    let dir = tmpdir("hunt");
    let out = pst(
        &[
            "hunt", "--target", "fact6-b", "--trials", "3000", "--seed", "1",
        ],
        &dir,
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("witness found"));

    let out = pst(
        &[
            "hunt",
            "--target",
            "schema:T_s",
            "--trials",
            "20",
            "--seed",
            "1",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(1));

    let out = pst(
        &[
            "hunt",
            "--target",
            "schema:!Sight-Preference",
            "--trials",
            "20",
            "--seed",
            "1",
        ],
        &dir,
    );
    assert!(out.status.success());
}

#[test]
fn sweep_writes_the_documented_csv() {
    let dir = tmpdir("sweep");
    let out = pst(
        &[
            "sweep",
            "--horizons",
            "0..2",
            "--trials",
            "3",
            "--seed",
            "9",
            "--out",
            "rows.csv",
        ],
        &dir,
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.join("rows.csv")).unwrap();
    assert!(csv.starts_with("seed,depth,branch,horizon,scbi_payoff,bi_payoff\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 3);
}
