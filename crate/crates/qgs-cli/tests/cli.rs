//! End-to-end tests of the `qgs` binary: golden transcripts, exit-code
//! contract (0 success, 1 failed audit, 2 usage, 3 io/parse), and
//! byte-identical reruns under a fixed seed.

use assert_cmd::Command;
use predicates::prelude::*;

fn qgs() -> Command {
    Command::cargo_bin("qgs").expect("binary builds")
}

fn fixture(name: &str) -> String {
    format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn cc_recovers_golden() {
    qgs()
        .args([
            "run", "cc", "--scheme", "twothree", "--d", "5", "--secret", "4", "--subset", "2,3",
            "--seed", "1",
        ])
        .assert()
        .success()
        .stdout(predicate::str::contains("audit cc_recovered pass 4"))
        .stdout(predicate::str::contains("recovered 4"));
}

#[test]
fn cc_denies_singleton_with_certificate() {
    qgs()
        .args([
            "run", "cc", "--scheme", "twothree", "--d", "3", "--subset", "3", "--seed", "2",
        ])
        .assert()
        .success()
        .stdout(predicate::str::contains("audit cc_denied pass"))
        .stdout(predicate::str::contains("denied, certificate"));
}

#[test]
fn qq_denies_ring35_pair_exactly() {
    qgs()
        .args([
            "run", "qq", "--scheme", "ring35", "--d", "3", "--subset", "1,2", "--seed", "3",
        ])
        .assert()
        .success()
        .stdout(predicate::str::contains("denied, max trace distance 0.000"));
}

#[test]
fn qq_decodes_authorized_pair() {
    qgs()
        .args([
            "run", "qq", "--scheme", "twothree", "--d", "3", "--secret", "0.6,0.8,0",
            "--subset", "1,2", "--seed", "4",
        ])
        .assert()
        .success()
        .stdout(predicate::str::contains("fidelity 1.000000"));
}

#[test]
fn qq_tree_pair_leak_fails_audit() {
    // The unanimity scheme leaks to sub-threshold subsets; the denial audit
    // must report that honestly and the process must exit 1.
    qgs()
        .args([
            "run", "qq", "--scheme", "tree", "--n", "3", "--d", "3", "--subset", "1,2",
            "--seed", "5",
        ])
        .assert()
        .code(1)
        .stdout(predicate::str::contains("audit qq_denial_max_td fail"))
        .stderr(predicate::str::contains(
            "error: assertion: audit qq_denial_max_td failed",
        ));
}

#[test]
fn cc_transcripts_rerun_byte_identical() {
    let args = [
        "run", "cc", "--scheme", "ring34", "--d", "5", "--secret", "2", "--subset", "1,2,3",
        "--mode", "oracle", "--seed", "11",
    ];
    let first = qgs().args(args).assert().success();
    let second = qgs().args(args).assert().success();
    assert_eq!(
        first.get_output().stdout,
        second.get_output().stdout,
        "same seed must reproduce the transcript byte for byte"
    );
}

#[test]
fn cq_transcripts_rerun_byte_identical() {
    let args = [
        "run", "cq", "--scheme", "twothree", "--d", "3", "--rounds", "60", "--seed", "7",
    ];
    let first = qgs().args(args).assert().success();
    let second = qgs().args(args).assert().success();
    assert_eq!(first.get_output().stdout, second.get_output().stdout);
}

#[test]
fn cq_run_reports_sift_and_verification() {
    qgs()
        .args([
            "run", "cq", "--scheme", "tree", "--n", "3", "--d", "3", "--rounds", "50", "--seed",
            "9",
        ])
        .assert()
        .success()
        .stdout(predicate::str::contains("audit sift_rate pass"))
        .stdout(predicate::str::contains("audit key_agreement pass"))
        .stdout(predicate::str::contains(
            "kept 19 of 50 rounds, key length 13, violations 0 of 6 sacrificed",
        ));
}

#[test]
fn cq_eavesdropper_raises_violations() {
    qgs()
        .args([
            "run", "cq", "--scheme", "tree", "--n", "3", "--d", "3", "--rounds", "400",
            "--eavesdrop", "--seed", "13",
        ])
        .assert()
        .code(1)
        .stdout(predicate::str::contains("audit verification_violations fail"));
}

#[test]
fn output_flag_writes_transcript_to_file() {
    let dir = std::env::temp_dir().join(format!("qgs-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("cc.transcript");
    qgs()
        .args([
            "run", "cc", "--scheme", "twothree", "--d", "5", "--secret", "4", "--subset", "2,3",
            "--seed", "1", "--output",
        ])
        .arg(&path)
        .assert()
        .success()
        .stdout(predicate::str::contains("recovered 4"))
        .stdout(predicate::str::contains("round").not());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.contains("round 0 | role player2"));
    assert!(written.contains("audit cc_recovered pass 4"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn ring34_is_classical_only() {
    for proto in ["cq", "qq"] {
        qgs()
            .args(["run", proto, "--scheme", "ring34", "--d", "3"])
            .assert()
            .code(2)
            .stderr(predicate::str::contains("error: usage:"))
            .stderr(predicate::str::contains("classical-only"));
    }
}

#[test]
fn unknown_flag_is_usage_error() {
    qgs()
        .args(["run", "cc", "--bogus-flag"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("error: usage:"));
}

#[test]
fn missing_graph_file_is_io_error() {
    qgs()
        .args(["graph", "show", "/nonexistent/missing.graph"])
        .assert()
        .code(3)
        .stderr(predicate::str::contains("error: io:"));
}

#[test]
fn malformed_graph_file_is_parse_error() {
    let dir = std::env::temp_dir().join(format!("qgs-cli-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.graph");
    std::fs::write(&path, "d 4\nn 2\nedge 1 2 1\n").unwrap();
    qgs()
        .args(["graph", "show"])
        .arg(&path)
        .assert()
        .code(3)
        .stderr(predicate::str::contains("error: parse:"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn graph_show_is_canonical_fixed_point() {
    let first = qgs()
        .args(["graph", "show", &fixture("pentagon_d7.graph")])
        .assert()
        .success();
    let text = String::from_utf8(first.get_output().stdout.clone()).unwrap();
    assert!(text.contains("edge 2 4 6"));

    let dir = std::env::temp_dir().join(format!("qgs-cli-rt-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("pentagon.graph");
    std::fs::write(&path, &text).unwrap();
    let second = qgs().args(["graph", "show"]).arg(&path).assert().success();
    assert_eq!(first.get_output().stdout, second.get_output().stdout);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn graph_shuffle_moves_label_along_edge() {
    qgs()
        .args(["graph", "shuffle", &fixture("shuffle_square.graph"), "1", "2"])
        .assert()
        .success()
        .stdout(predicate::str::contains("label 2 0 1 0"))
        .stdout(predicate::str::contains("label 3 2 0 0"));
}

#[test]
fn graph_measure_square_golden() {
    qgs()
        .args([
            "graph", "measure", &fixture("square.graph"), "1", "--basis", "X2Z", "--outcome", "2",
        ])
        .assert()
        .success()
        .stdout(predicate::str::contains("edge 2 3 3"))
        .stdout(predicate::str::contains("label 2 0 0 3"))
        .stdout(predicate::str::contains("label 3 0 0 3"))
        .stdout(predicate::str::contains("label 4 1 0 0"));
}

#[test]
fn graph_measure_refuses_s_labelled_vertex() {
    qgs()
        .args([
            "graph", "measure", &fixture("square_slabel.graph"), "1", "--basis", "X2Z",
            "--outcome", "2",
        ])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("S-label"));
}

#[test]
fn verify_suite_reports_checks() {
    qgs()
        .args(["verify", "field", "--seed", "7"])
        .assert()
        .success()
        .stdout(predicate::str::contains("checks passed"))
        .stdout(predicate::str::contains("fail").not());
}

#[test]
fn verify_unknown_suite_is_usage_error() {
    qgs()
        .args(["verify", "nonsense"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("error: usage: unknown suite"));
}
