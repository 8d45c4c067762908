use std::path::Path;
use std::process::{Command, Output};

use nodethin::nodeset::{read_nodes, CoordKey};

fn nodethin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nodethin"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = nodethin(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn gen(dir: &Path, seed: &str, out: &str) {
    ok(dir, &["gen", "--scale", "3", "--seed", seed, "--out-dir", out]);
}

#[test]
fn gen_is_deterministic_and_seeded() {
    let t = tempfile::tempdir().unwrap();
    gen(t.path(), "7", "a");
    gen(t.path(), "7", "b");
    gen(t.path(), "8", "c");
    let read = |p: &str| std::fs::read(t.path().join(p)).unwrap();
    assert_eq!(read("a/domain.csv"), read("b/domain.csv"));
    assert_eq!(read("a/boundary.csv"), read("b/boundary.csv"));
    assert_ne!(read("a/domain.csv"), read("c/domain.csv"));
}

#[test]
fn gen_rejects_bad_profile() {
    let t = tempfile::tempdir().unwrap();
    let out = nodethin(t.path(), &["gen", "--rho1", "-0.01"]);
    assert_eq!(out.status.code(), Some(1));
    let out = nodethin(t.path(), &["gen", "--rho1", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn subsample_output_is_subset_and_reports_counts() {
    let t = tempfile::tempdir().unwrap();
    gen(t.path(), "1", "g");
    let stdout = ok(
        t.path(),
        &[
            "subsample",
            "--method",
            "mf",
            "--c",
            "1.5",
            "--k",
            "10",
            "g/domain.csv",
            "out.csv",
            "--summary",
            "s.json",
        ],
    );
    let fine = read_nodes(t.path().join("g/domain.csv")).unwrap();
    let coarse = read_nodes(t.path().join("out.csv")).unwrap();
    let keys: std::collections::HashSet<_> = fine.coords().iter().map(|&p| CoordKey::of(p)).collect();
    assert!(coarse.coords().iter().all(|&p| keys.contains(&CoordKey::of(p))));
    assert!(coarse.len() < fine.len());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(t.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(summary["n_in"], fine.len());
    assert_eq!(summary["n_out"], coarse.len());
    assert!(stdout.contains("\"n_out\""));
}

#[test]
fn poisson_disk_reruns_match() {
    let t = tempfile::tempdir().unwrap();
    gen(t.path(), "2", "g");
    for out in ["a.csv", "b.csv"] {
        ok(
            t.path(),
            &[
                "subsample",
                "--method",
                "pd",
                "--c",
                "1.5",
                "--seed",
                "3",
                "g/domain.csv",
                out,
            ],
        );
    }
    assert_eq!(
        std::fs::read(t.path().join("a.csv")).unwrap(),
        std::fs::read(t.path().join("b.csv")).unwrap()
    );
}

#[test]
fn weighted_target_above_input_size_fails() {
    let t = tempfile::tempdir().unwrap();
    let mut csv = String::from("x,y\n");
    for i in 0..400 {
        csv.push_str(&format!("{},{}\n", i % 20, i / 20));
    }
    std::fs::write(t.path().join("in.csv"), csv).unwrap();
    let out = nodethin(
        t.path(),
        &["subsample", "--method", "w", "--target", "500", "in.csv", "out.csv"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!t.path().join("out.csv").exists());
    ok(
        t.path(),
        &["subsample", "--method", "w", "--target", "100", "in.csv", "out.csv"],
    );
    assert_eq!(read_nodes(t.path().join("out.csv")).unwrap().len(), 100);
}

#[test]
fn metrics_sweep_matches_single_k() {
    let t = tempfile::tempdir().unwrap();
    gen(t.path(), "3", "g");
    ok(t.path(), &["subsample", "g/domain.csv", "c.csv"]);
    let sweep: Vec<serde_json::Value> = serde_json::from_str(&ok(
        t.path(),
        &["metrics", "--k-range", "2:14", "g/domain.csv", "c.csv"],
    ))
    .unwrap();
    assert_eq!(sweep.len(), 13);
    for k in [2, 9, 14] {
        let single: Vec<serde_json::Value> = serde_json::from_str(&ok(
            t.path(),
            &["metrics", "--k", &k.to_string(), "g/domain.csv", "c.csv"],
        ))
        .unwrap();
        assert_eq!(single[0], sweep[k - 2]);
    }
    let same: Vec<serde_json::Value> =
        serde_json::from_str(&ok(t.path(), &["metrics", "g/domain.csv", "g/domain.csv"])).unwrap();
    assert_eq!(same[0]["clr_avg"], 0.0);
    assert_eq!(same[0]["clr_sd"], 0.0);
    let out = nodethin(t.path(), &["metrics", "g/domain.csv", "g/boundary.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_writes_report_and_is_reproducible() {
    let t = tempfile::tempdir().unwrap();
    for dir in ["a", "b"] {
        ok(
            t.path(),
            &[
                "solve",
                "--problem",
                "laplace",
                "--m-l",
                "2",
                "--scale",
                "3",
                "--out-dir",
                dir,
            ],
        );
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(t.path().join("a/report.json")).unwrap()).unwrap();
    assert!(report["error_norms"]["max_relative"].as_f64().unwrap() < 0.1);
    assert!(report["residual_history"].is_array());
    assert!(std::fs::read_to_string(t.path().join("a/residuals.csv"))
        .unwrap()
        .starts_with("iteration,relres,convfactor"));
    assert_eq!(
        std::fs::read(t.path().join("a/solution.csv")).unwrap(),
        std::fs::read(t.path().join("b/solution.csv")).unwrap()
    );
}

#[test]
fn solve_degree_outside_tested_range_warns() {
    let t = tempfile::tempdir().unwrap();
    let out = nodethin(
        t.path(),
        &[
            "solve",
            "--problem",
            "laplace",
            "--m-l",
            "9",
            "--scale",
            "3",
            "--i-max",
            "2",
            "--out-dir",
            "o",
        ],
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert_eq!(nodethin(t.path(), &["solve", "--m-l", "0"]).status.code(), Some(1));
}

#[test]
fn config_file_supplies_flags() {
    let t = tempfile::tempdir().unwrap();
    gen(t.path(), "4", "g");
    std::fs::write(
        t.path().join("run.json"),
        r#"{"command": "subsample", "method": "pd", "c": 1.5, "seed": 3, "args": ["g/domain.csv", "a.csv"]}"#,
    )
    .unwrap();
    ok(t.path(), &["--config", "run.json"]);
    ok(
        t.path(),
        &[
            "subsample",
            "--method",
            "pd",
            "--c",
            "1.5",
            "--seed",
            "3",
            "g/domain.csv",
            "b.csv",
        ],
    );
    assert_eq!(
        std::fs::read(t.path().join("a.csv")).unwrap(),
        std::fs::read(t.path().join("b.csv")).unwrap()
    );
}

#[test]
fn bench_single_repetition_csv() {
    let t = tempfile::tempdir().unwrap();
    let csv = ok(
        t.path(),
        &["bench", "--fine-size", "3000", "--sizes", "800", "--repetitions", "1"],
    );
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "method,n_in,n_out,seconds,mean");
    assert_eq!(lines.len(), 4);
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f.len(), 5);
        assert!(f[3].parse::<f64>().unwrap() >= 0.0);
    }
}

#[test]
fn missing_input_is_io_error() {
    let t = tempfile::tempdir().unwrap();
    assert_eq!(
        nodethin(t.path(), &["subsample", "nope.csv", "out.csv"]).status.code(),
        Some(3)
    );
}
