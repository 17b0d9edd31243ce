use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dpc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = dpc(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn write_t5(dir: &Path) {
    std::fs::write(dir.join("t5.csv"), "x,y\n0,0\n1,0\n2,0\n10,0\n11,0\n").unwrap();
}

#[test]
fn t5_profile_and_topk() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_t5(d);
    ok(
        d,
        &[
            "build", "--input", "t5.csv", "--index", "list", "--out", "t5.idx",
        ],
    );
    ok(
        d,
        &[
            "profile", "--index", "t5.idx", "--dc", "1.5", "--out", "p.json",
        ],
    );
    let p = read_json(&d.join("p.json"));
    assert_eq!(p["rho"], serde_json::json!([1, 2, 1, 1, 1]));
    assert_eq!(p["delta"], serde_json::json!([1.0, 10.0, 1.0, 8.0, 1.0]));
    assert_eq!(p["mu"], serde_json::json!([1, -1, 1, 2, 3]));
    ok(
        d,
        &[
            "cluster",
            "--profile",
            "p.json",
            "--topk",
            "2",
            "--out",
            "c.json",
        ],
    );
    let c = read_json(&d.join("c.json"));
    assert_eq!(c["centers"], serde_json::json!([1, 3]));
    assert_eq!(c["labels"], serde_json::json!([0, 0, 0, 1, 1]));
}

#[test]
fn every_index_kind_gives_the_same_profile() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "gen", "--blobs", "3", "--n", "200", "--seed", "3", "--out", "g.csv",
        ],
    );
    let mut profiles = Vec::new();
    for (kind, extra) in [
        ("oracle", vec![]),
        ("list", vec![]),
        ("ch", vec!["--w", "0.4"]),
        ("quadtree", vec!["--capacity", "5"]),
        ("rtree", vec!["--fanout", "4"]),
    ] {
        let out = format!("{kind}.idx");
        let mut args = vec!["build", "--input", "g.csv", "--index", kind, "--out", &out];
        args.extend(extra);
        let stats: Value = serde_json::from_str(&ok(d, &args)).unwrap();
        assert_eq!(stats["n"], 200);
        profiles.push(ok(d, &["profile", "--index", &out, "--dc", "2.5"]));
    }
    assert!(profiles.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn bench_reports_one_hash() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "gen", "--blobs", "3", "--n", "300", "--seed", "7", "--out", "g.csv",
        ],
    );
    let out = ok(
        d,
        &[
            "bench", "--input", "g.csv", "--dc", "2", "--runs", "1", "--json",
        ],
    );
    let reports: Vec<Value> = serde_json::from_str(&out).unwrap();
    assert_eq!(reports.len(), 5);
    let hashes: Vec<&Value> = reports.iter().map(|r| &r["profile_hash"]).collect();
    assert!(hashes[0].is_string());
    assert!(hashes.iter().all(|h| *h == hashes[0]));
    let table = ok(
        d,
        &[
            "bench",
            "--input",
            "g.csv",
            "--dc",
            "2",
            "--runs",
            "1",
            "--indexes",
            "list,rtree",
        ],
    );
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn approximate_index_warns_when_degraded() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_t5(d);
    ok(
        d,
        &[
            "build", "--input", "t5.csv", "--index", "list", "--tau", "3", "--out", "rn.idx",
        ],
    );
    let out = dpc(
        d,
        &[
            "profile", "--index", "rn.idx", "--dc", "5", "--out", "p.json",
        ],
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert_eq!(read_json(&d.join("p.json"))["degraded"], true);
    ok(
        d,
        &[
            "profile", "--index", "rn.idx", "--dc", "1.5", "--out", "p.json",
        ],
    );
    let p = read_json(&d.join("p.json"));
    assert_eq!(
        p["resolved"],
        serde_json::json!([true, false, true, false, true])
    );
}

#[test]
fn eval_prints_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("c.json"),
        r#"{"dc":1.0,"centers":[0,2],"labels":[0,0,1,1]}"#,
    )
    .unwrap();
    std::fs::write(d.join("g.json"), r#"{"labels":[0,0,0,1]}"#).unwrap();
    let out = ok(
        d,
        &["eval", "--clustering", "c.json", "--reference", "g.json"],
    );
    assert!(out.contains("precision 0.500000"));
    assert!(out.contains("f1        0.400000"));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_t5(d);
    ok(
        d,
        &[
            "build", "--input", "t5.csv", "--index", "rtree", "--out", "t5.idx",
        ],
    );
    ok(
        d,
        &[
            "profile", "--index", "t5.idx", "--dc", "1.5", "--out", "p.json",
        ],
    );
    let cases: [&[&str]; 8] = [
        &["profile", "--index", "t5.idx", "--dc", "0"],
        &["profile", "--index", "missing.idx", "--dc", "1"],
        &[
            "build",
            "--input",
            "missing.csv",
            "--index",
            "list",
            "--out",
            "x.idx",
        ],
        &[
            "build", "--input", "t5.csv", "--index", "ch", "--out", "x.idx",
        ],
        &[
            "build", "--input", "t5.csv", "--index", "kdtree", "--out", "x.idx",
        ],
        &[
            "cluster",
            "--profile",
            "p.json",
            "--topk",
            "2",
            "--centers",
            "1",
        ],
        &["cluster", "--profile", "p.json", "--centers", "3"],
        &["gen", "--n", "10"],
    ];
    for args in cases {
        let out = dpc(d, args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.csv"), "1,2\n3,a\n").unwrap();
    std::fs::write(d.join("bad.idx"), "not an index").unwrap();
    let out = dpc(
        d,
        &[
            "build", "--input", "bad.csv", "--index", "list", "--out", "x.idx",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    let out = dpc(d, &["profile", "--index", "bad.idx", "--dc", "1"]);
    assert_eq!(out.status.code(), Some(1));
}
