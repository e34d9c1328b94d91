use std::path::Path;
use std::process::{Command, Output};

use lca_haar::error::{EXIT_BUDGET, EXIT_CONFIG, EXIT_RESOURCE, EXIT_SELF_CHECK};

const LIND_BERNOULLI: &str = r#"
[automaton]
modulus = 2
terms = "1@(-1) + 1@(1)"

[character]
terms = "1@(0)"

[measure]
kind = "bernoulli"
weights = [0.9, 0.1]

[run]
n = 1
window = "0"
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lca-haar"));
    c.env_remove("LCA_HAAR_CONFIG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn lind_rank_trace_has_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let o = run(&[
        "rank-trace",
        "--modulus",
        "2",
        "--automaton",
        "1@-1 + 1@1",
        "--character",
        "1@0",
        "--horizon",
        "64",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "n,rank");
    assert_eq!(rows.len(), 66);
    for (n, row) in rows[1..].iter().enumerate() {
        let rank: u64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(rank, 1 << (n as u64).count_ones(), "n = {n}");
    }
    assert!(text(&o.stdout).contains("density above R=8"));
}

#[test]
fn trivial_character_is_rejected() {
    let o = run(&["rank-trace", "--modulus", "2", "--automaton", "1@-1+1@1", "--character", ""]);
    assert_eq!(code(&o), EXIT_CONFIG);
    assert!(text(&o.stderr).contains("trivial"));
}

#[test]
fn shift_automaton_warns() {
    let o = run(&["rank-trace", "--modulus", "2", "--automaton", "1@1", "--character", "1@0", "--horizon", "4"]);
    assert_eq!(code(&o), 0);
    assert!(text(&o.stderr).contains("trivial LCA"));
}

#[test]
fn cylinder_lind_one_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), LIND_BERNOULLI);
    let out = dir.path().join("law.csv");
    let o = run(&["cylinder", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let rows: Vec<(String, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows[1].0, "1");
    assert!((rows[1].1 - 0.18).abs() < 1e-12);
    assert!((rows.iter().map(|r| r.1).sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(dir.path().join("law.bruteforce.csv").exists());
    assert!(text(&o.stdout).contains("discrepancy tv"));
}

#[test]
fn cylinder_over_enumeration_limit_keeps_inversion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), LIND_BERNOULLI);
    let out = dir.path().join("law.csv");
    let o = run(&[
        "cylinder", "--config", &cfg, "--window", "0,1,2,3", "--n", "20", "--max-enum", "1000", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    assert!(out.exists());
    assert!(!dir.path().join("law.bruteforce.csv").exists());
    assert!(text(&o.stdout).contains("bruteforce: skipped"));
}

#[test]
fn oversized_window_is_a_resource_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), LIND_BERNOULLI);
    let window: Vec<String> = (0..14).map(|i| i.to_string()).collect();
    let o = run(&["cylinder", "--config", &cfg, "--window", &window.join(",")]);
    assert_eq!(code(&o), EXIT_RESOURCE);
}

#[test]
fn uniform_decay_is_zero() {
    let body = LIND_BERNOULLI.replace("kind = \"bernoulli\"\nweights = [0.9, 0.1]", "kind = \"uniform\"");
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &body);
    let out = dir.path().join("decay.csv");
    let o = run(&["decay", "--config", &cfg, "--horizon", "32", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let mut reader = csv::Reader::from_path(&out).unwrap();
    for r in reader.records() {
        let abs: f64 = r.unwrap()[3].parse().unwrap();
        assert_eq!(abs, 0.0);
    }
}

#[test]
fn affine_decay_matches_linear_magnitudes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), LIND_BERNOULLI);
    let lin = dir.path().join("lin.csv");
    let aff = dir.path().join("aff.csv");
    assert_eq!(code(&run(&["decay", "--config", &cfg, "--horizon", "128", "--out", lin.to_str().unwrap()])), 0);
    let o = run(&["decay", "--config", &cfg, "--horizon", "128", "--constant", "1", "--out", aff.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let column = |p: &Path| -> Vec<f64> {
        csv::Reader::from_path(p)
            .unwrap()
            .records()
            .map(|r| r.unwrap()[3].parse().unwrap())
            .collect()
    };
    let (a, b) = (column(&lin), column(&aff));
    assert_eq!(a.len(), 129);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-12);
    }
}

#[test]
fn certify_reports() {
    let dir = tempfile::tempdir().unwrap();
    let point = LIND_BERNOULLI.replace("[0.9, 0.1]", "[1.0, 0.0]");
    let o = run(&["certify", "--config", &write_config(dir.path(), &point)]);
    let out = text(&o.stdout);
    assert_eq!(code(&o), 0);
    assert!(out.contains("base: 1") && out.contains("mixing: FAIL"), "{out}");

    let positive = LIND_BERNOULLI.replace(
        "kind = \"bernoulli\"\nweights = [0.9, 0.1]",
        "kind = \"markov\"\ntransition = [[0.9, 0.1], [0.2, 0.8]]",
    );
    let out = text(&run(&["certify", "--config", &write_config(dir.path(), &positive)]).stdout);
    assert!(out.contains("hypotheses: PASS") && out.contains("mixing: PASS"), "{out}");

    let zero = positive.replace("[0.2, 0.8]", "[1.0, 0.0]");
    let out = text(&run(&["certify", "--config", &write_config(dir.path(), &zero)]).stdout);
    assert!(out.contains("q[1][1] is zero"), "{out}");
}

#[test]
fn gap_scan_targets_one_eighth() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gap.csv");
    let o = run(&["gap-scan", "--modulus", "2", "--automaton", "1@0 + 1@1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let s = text(&o.stdout);
    assert!(s.contains("gamma: 2") && s.contains("target frequency: 0.125"), "{s}");
    let mean: f64 = s
        .lines()
        .find_map(|l| l.strip_prefix("mean frequency: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((mean - 0.125).abs() <= 0.02);
}

#[test]
fn gap_scan_rejects_composite_modulus() {
    let o = run(&["gap-scan", "--modulus", "4", "--automaton", "1@0 + 1@1"]);
    assert_eq!(code(&o), EXIT_CONFIG);
}

#[test]
fn json_output() {
    let o = run(&["rank-trace", "--modulus", "2", "--automaton", "1@-1+1@1", "--character", "1@0", "--horizon", "3", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[3]["rank"], 4);
}

#[test]
fn config_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), LIND_BERNOULLI);
    let o = bin().arg("certify").env("LCA_HAAR_CONFIG", &cfg).output().unwrap();
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("base: 0.8"));
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[automaton]\nmodulus = 2\nbogus = 1\n");
    assert_eq!(code(&run(&["rank-trace", "--config", &cfg])), EXIT_CONFIG);
    let cfg = write_config(dir.path(), &LIND_BERNOULLI.replace("[0.9, 0.1]", "[0.9, 0.2]"));
    assert_eq!(code(&run(&["decay", "--config", &cfg])), EXIT_CONFIG);
}

#[test]
fn missing_config_file_is_a_config_error() {
    assert_eq!(code(&run(&["decay", "--config", "/nonexistent/run.toml"])), EXIT_CONFIG);
}

#[test]
fn selftest_names_injected_fault() {
    let o = run(&["selftest", "--only", "1", "--inject-lucas-fault"]);
    assert_eq!(code(&o), EXIT_SELF_CHECK);
    assert!(text(&o.stderr).contains("criterion 1 [lucas correctness]"));
}

#[test]
fn selftest_budget_has_its_own_exit_code() {
    let o = run(&["selftest", "--only", "2", "--budget", "0"]);
    assert_eq!(code(&o), EXIT_BUDGET);
}

#[test]
fn selftest_passes_quick_criteria() {
    let o = run(&["selftest", "--only", "1,2,4,5"]);
    assert_eq!(code(&o), 0, "{}", text(&o.stdout));
}
