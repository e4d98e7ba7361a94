use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;
use treedist::distance::{brute_force_distance, distance};
use treedist::io;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

struct Output {
    code: i32,
    out: String,
    err: String,
}

fn treedist(args: &[&str]) -> Output {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("treedist").chain(args.iter().copied());
    let code = treedist_cli::run(argv, &mut out, &mut err);
    Output {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn tmp_path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

fn read_tree(path: &str) -> treedist::Dendrogram {
    io::parse_dendrogram(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn distance_of_identical_files_is_zero() {
    let a = fixture("trees/a.json");
    let r = treedist(&["distance", &a, &a]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.out.trim(), "0.0");
}

#[test]
fn distance_matches_the_library_and_writes_a_plan() {
    let dir = TempDir::new().unwrap();
    let plan = tmp_path(&dir, "plan.json");
    let (a, c) = (fixture("trees/a.json"), fixture("trees/c.json"));
    let r = treedist(&["distance", &a, &c, "--plan", &plan]);
    assert_eq!(r.code, 0, "{}", r.err);
    let printed: f64 = r.out.trim().parse().unwrap();
    let (ta, tc) = (read_tree(&a), read_tree(&c));
    assert_eq!(printed, distance(&ta, &tc).unwrap());
    assert!((printed - brute_force_distance(&ta, &tc, 8).unwrap()).abs() <= 1e-9);
    let p = io::parse_plan(&std::fs::read_to_string(&plan).unwrap()).unwrap();
    assert!((p.evaluate(&ta, &tc).unwrap() - printed).abs() <= 1e-12);
}

#[test]
fn swapped_minima_fields_are_close() {
    let dir = TempDir::new().unwrap();
    let (f, g) = (tmp_path(&dir, "f.json"), tmp_path(&dir, "g.json"));
    for (src, dst) in [("swapped_f.csv", &f), ("swapped_g.csv", &g)] {
        let r = treedist(&["build-field", &fixture(src), "--theta", "L", "--truncate", "1.3", "--out", dst]);
        assert_eq!(r.code, 0, "{}", r.err);
    }
    let r = treedist(&["distance", &f, &g]);
    assert_eq!(r.code, 0, "{}", r.err);
    let d: f64 = r.out.trim().parse().unwrap();
    assert!(d <= 0.9 + 1e-9, "{d}");
}

#[test]
fn build_field_variants() {
    let f = fixture("swapped_f.csv");
    for theta in ["L", "Ln", "1"] {
        let r = treedist(&["build-field", &f, "--theta", theta]);
        assert_eq!(r.code, 0, "{theta}: {}", r.err);
        let d = io::parse_dendrogram(&r.out).unwrap();
        assert!(d.validate().is_empty());
        assert_eq!(d.rank(), 2);
    }
    let low = treedist(&["build-field", &f, "--truncate", "0.5"]);
    assert_eq!(low.code, 2);
    assert!(low.err.contains("truncation height"), "{}", low.err);
}

#[test]
fn build_cloud_gives_cardinality_weights() {
    let r = treedist(&["build-cloud", &fixture("three_points.csv"), "--theta", "c", "--truncate", "5"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let d = io::parse_dendrogram(&r.out).unwrap();
    assert_eq!(d.rank(), 3);
    // 1 + 1 + 2 on the leaves, 2 on the pair, 3 on the root edge over [2, 5).
    assert!((d.tree_norm() - 15.0).abs() < 1e-12);
    for theta in ["cn", "1"] {
        assert_eq!(treedist(&["build-cloud", &fixture("three_points.csv"), "--theta", theta]).code, 0);
    }
}

#[test]
fn decorate_with_betti_table_and_unit_weights() {
    let tree = fixture("merge_tree.json");
    let r = treedist(&["decorate", &tree, "--betti", &fixture("betti.json"), "--truncate", "3"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let d = io::parse_dendrogram(&r.out).unwrap();
    assert_eq!(d.channels(), 2);
    // b0 channel: 2 + 1.5 + 1; b1 channel: 1 on [1, 2) below a.
    assert!((d.tree_norm() - 5.5).abs() < 1e-12);
    let u = treedist(&["decorate", &tree, "--unit", "--truncate", "3"]);
    assert_eq!(u.code, 0, "{}", u.err);
    assert!((io::parse_dendrogram(&u.out).unwrap().tree_norm() - 4.5).abs() < 1e-12);
    assert_eq!(treedist(&["decorate", &tree]).code, 2);
    assert_eq!(treedist(&["decorate", &fixture("trees/a.json"), "--unit"]).code, 2);
}

#[test]
fn truncate_and_prune() {
    let dir = TempDir::new().unwrap();
    let t = tmp_path(&dir, "t.json");
    let r = treedist(&["truncate", &fixture("merge_tree.json"), "--truncate", "4", "--out", &t]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!((read_tree(&t).tree_norm() - 5.5).abs() < 1e-12);
    let p = tmp_path(&dir, "p.json");
    let r = treedist(&["prune", &t, "--prune-eps", "1.6", "--seed", "1", "--out", &p]);
    assert_eq!(r.code, 0, "{}", r.err);
    let summary: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(summary["removed_leaves"], serde_json::json!(["b"]));
    assert_eq!(read_tree(&p).len(), 2);
    assert_eq!(treedist(&["prune", &t]).code, 2);
    let target = treedist(&["prune", &t, "--prune-target-pe", "0.2"]);
    assert_eq!(target.code, 0, "{}", target.err);
}

#[test]
fn matrix_is_symmetric_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let (m, svg) = (tmp_path(&dir, "m.csv"), tmp_path(&dir, "m.svg"));
    let r = treedist(&["matrix", &fixture("trees"), "--out", &m, "--svg", &svg, "--jobs", "2"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let matrix = io::parse_matrix(&std::fs::read_to_string(&m).unwrap()).unwrap();
    assert_eq!(matrix.labels(), ["a", "b", "c"]);
    for i in 0..3 {
        for j in 0..3 {
            assert!((matrix.get(i, j) - matrix.get(j, i)).abs() <= 1e-9);
        }
    }
    let again = treedist(&["matrix", &fixture("trees"), "--jobs", "1"]);
    assert_eq!(again.out, std::fs::read_to_string(&m).unwrap());
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    let pruned = treedist(&["matrix", &fixture("trees"), "--prune-eps", "0.6"]);
    assert_eq!(pruned.code, 0, "{}", pruned.err);
}

#[test]
fn simulations_are_seeded() {
    let dir = TempDir::new().unwrap();
    let m = tmp_path(&dir, "clusters.csv");
    let cfg = fixture("clusters.json");
    let r = treedist(&["simulate-clusters", "--config", &cfg, "--out", &m, "--jobs", "2"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let summary: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(summary["clouds"], 6);
    let again = treedist(&["simulate-clusters", "--config", &cfg, "--jobs", "1"]);
    let summary2: serde_json::Value = serde_json::from_str(&again.out).unwrap();
    assert_eq!(summary, summary2);

    let files: Vec<String> = ["d.csv", "w.csv", "n.csv"].iter().map(|n| tmp_path(&dir, n)).collect();
    let r = treedist(&[
        "simulate-sines",
        "--config",
        &fixture("sines.json"),
        "--out",
        &files[0],
        "--warping-out",
        &files[1],
        "--naive-out",
        &files[2],
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let summary: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(summary["units"], 6);
    let c = treedist(&["correlate", &files[0], &files[1]]);
    assert_eq!(c.code, 0, "{}", c.err);
    let printed: f64 = c.out.trim().parse().unwrap();
    assert_eq!(printed, summary["dendrogram_correlation"].as_f64().unwrap());
    let same = treedist(&["correlate", &files[1], &files[1]]);
    assert!((same.out.trim().parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn check_axioms_on_files_and_random_maps() {
    let r = treedist(&["check-axioms", &fixture("maps.json")]);
    assert_eq!(r.code, 0, "{}", r.err);
    let report: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(report["p1_metric_ok"], true);
    let r = treedist(&["check-axioms", "--samples", "12", "--channels", "2", "--affine", "--seed", "4"]);
    assert_eq!(r.code, 0, "{}", r.err);
}

#[test]
fn invalid_inputs_exit_with_two() {
    let bad = treedist(&["distance", &fixture("bad_edge.json"), &fixture("trees/a.json")]);
    assert_eq!(bad.code, 2);
    assert!(bad.err.contains("edges[0].parent"), "{}", bad.err);
    let zero = treedist(&["distance", &fixture("zero_edge.json"), &fixture("trees/a.json")]);
    assert_eq!(zero.code, 2);
    assert!(zero.err.contains("'x'"), "{}", zero.err);
    let unbounded = treedist(&["distance", &fixture("merge_tree.json"), &fixture("trees/a.json")]);
    assert_eq!(unbounded.code, 2);
    assert!(unbounded.err.contains("truncate"), "{}", unbounded.err);
    let csv = treedist(&["correlate", &fixture("swapped_f.csv"), &fixture("swapped_g.csv")]);
    assert_eq!(csv.code, 2);
    assert_eq!(treedist(&["distance", "--bogus"]).code, 2);
    assert_eq!(treedist(&["frobnicate"]).code, 2);
}

#[test]
fn missing_files_exit_with_one() {
    let r = treedist(&["distance", "/nonexistent/a.json", "/nonexistent/b.json"]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("/nonexistent/a.json"), "{}", r.err);
}

#[test]
fn binary_reports_exit_codes() {
    let bin = PathBuf::from(env!("CARGO_BIN_EXE_treedist"));
    let a = fixture("trees/a.json");
    let ok = Command::new(&bin).args(["distance", &a, &a]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&ok.stdout).trim(), "0.0");
    let bad = Command::new(&bin)
        .args(["distance", &fixture("bad_edge.json"), &a])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let help = Command::new(&bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    let jobs = Command::new(&bin)
        .args(["matrix", &fixture("trees")])
        .env("TREEDIST_JOBS", "1")
        .output()
        .unwrap();
    assert_eq!(jobs.status.code(), Some(0));
}
