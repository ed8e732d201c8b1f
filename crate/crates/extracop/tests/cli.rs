//! End-to-end checks of the command-line interface: exit codes, file
//! formats, manifests, and reproducibility.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_extracop"))
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("reading {path:?}: {e}"))
}

struct Dir {
    dir: tempfile::TempDir,
}

impl Dir {
    fn new() -> Self {
        Dir {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

#[test]
fn generate_then_analyze_fcc() {
    let d = Dir::new();
    let xyz = d.path("fcc.xyz");
    let status = bin()
        .args(["generate", "--kind", "fcc", "--extent", "4,4,4", "--seed", "1"])
        .arg("--output")
        .arg(&xyz)
        .status()
        .unwrap();
    assert!(status.success());
    let text = read(&xyz);
    assert!(text.starts_with("256\n"), "fcc 4^3 should have 256 particles");
    assert!(text.lines().nth(1).unwrap().contains("Lattice="));

    let csv = d.path("fcc.csv");
    let json = d.path("fcc.json");
    let status = bin()
        .args(["analyze", "--seed", "7"])
        .arg("--input")
        .arg(&xyz)
        .arg("--output")
        .arg(&csv)
        .arg("--json")
        .arg(&json)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let table = read(&csv);
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "index,k,unique_angles,E,delta");
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 5);
        assert_eq!(cols[1], "12");
        assert_eq!(cols[2], "4");
        let e: f64 = cols[3].parse().unwrap();
        assert!((e - 4.0444).abs() < 0.01, "row E = {e}");
        rows += 1;
    }
    assert_eq!(rows, 256);

    // manifest reproduces the effective parameters
    let manifest = read(&d.path("fcc.csv.manifest.json"));
    let m: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(m["command"], "analyze");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["sigma"], 0.1);
    assert_eq!(m["particles"], 256);

    // CSV and JSON carry the same values
    let rows: Vec<serde_json::Value> = serde_json::from_str(&read(&json)).unwrap();
    assert_eq!(rows.len(), 256);
    assert_eq!(rows[0]["k"], 12);
}

#[test]
fn two_particle_file_yields_k1_e0() {
    let d = Dir::new();
    let xyz = d.path("two.xyz");
    std::fs::write(&xyz, "2\ndim=3\nA 0 0 0\nB 1.1 0 0\n").unwrap();
    let csv = d.path("two.csv");
    let status = bin()
        .args(["analyze"])
        .arg("--input")
        .arg(&xyz)
        .arg("--output")
        .arg(&csv)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let table = read(&csv);
    for line in table.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[1], "1");
        assert_eq!(cols[3], "0");
    }
}

#[test]
fn empty_and_malformed_inputs_exit_2() {
    let d = Dir::new();
    let empty = d.path("empty.xyz");
    std::fs::write(&empty, "").unwrap();
    let out = bin()
        .args(["analyze"])
        .arg("--input")
        .arg(&empty)
        .arg("--output")
        .arg(d.path("out.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let bad = d.path("bad.xyz");
    std::fs::write(&bad, "2\ncomment\nA 0 0 0\nB 1 zzz 0\n").unwrap();
    let out = bin()
        .args(["analyze"])
        .arg("--input")
        .arg(&bad)
        .arg("--output")
        .arg(d.path("out.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 4"), "stderr was: {stderr}");

    let missing = d.path("missing.xyz");
    let out = bin()
        .args(["analyze"])
        .arg("--input")
        .arg(&missing)
        .arg("--output")
        .arg(d.path("out.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn equal_seeds_give_byte_identical_outputs_across_thread_counts() {
    let d = Dir::new();
    let xyz = d.path("packing.xyz");
    assert!(bin()
        .args([
            "generate",
            "--kind",
            "poisson-3d",
            "--box",
            "9,9,9",
            "--seed",
            "5",
        ])
        .arg("--output")
        .arg(&xyz)
        .status()
        .unwrap()
        .success());

    let mut outputs = Vec::new();
    for (name, threads) in [("a", "2"), ("b", "2"), ("c", "1")] {
        let csv = d.path(&format!("{name}.csv"));
        let json = d.path(&format!("{name}.json"));
        assert!(bin()
            .args(["analyze", "--seed", "11", "--threads", threads])
            .arg("--input")
            .arg(&xyz)
            .arg("--output")
            .arg(&csv)
            .arg("--json")
            .arg(&json)
            .status()
            .unwrap()
            .success());
        outputs.push((read(&csv), read(&json)));
    }
    assert_eq!(outputs[0], outputs[1], "rerun changed the output");
    assert_eq!(outputs[0], outputs[2], "thread count changed the output");

    // manifests are deterministic too (no timestamps), modulo the output paths
    let ma = read(&d.path("a.csv.manifest.json")).replace("a.csv", "x.csv").replace("a.json", "x.json");
    let mb = read(&d.path("b.csv.manifest.json")).replace("b.csv", "x.csv").replace("b.json", "x.json");
    assert_eq!(ma, mb);
}

#[test]
fn perturb_roundtrip_and_manifest() {
    let d = Dir::new();
    let xyz = d.path("sc.xyz");
    assert!(bin()
        .args(["generate", "--kind", "simple-cubic", "--extent", "5,5,5"])
        .arg("--output")
        .arg(&xyz)
        .status()
        .unwrap()
        .success());
    let out = d.path("hot.xyz");
    let status = bin()
        .args([
            "perturb",
            "--mode",
            "uncorrelated",
            "--temperature",
            "1085",
            "--seed",
            "3",
        ])
        .arg("--input")
        .arg(&xyz)
        .arg("--output")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let m: serde_json::Value =
        serde_json::from_str(&read(&d.path("hot.xyz.manifest.json"))).unwrap();
    let f = m["rms_fraction"].as_f64().unwrap();
    assert!((f - 0.0685).abs() < 5e-4, "rms fraction {f}");
    // positions actually moved
    assert_ne!(read(&xyz), read(&out));
}

#[test]
fn correlated_perturb_over_capacity_exits_3() {
    let d = Dir::new();
    let xyz = d.path("big.xyz");
    assert!(bin()
        .args(["generate", "--kind", "simple-cubic", "--extent", "20,20,20"])
        .arg("--output")
        .arg(&xyz)
        .status()
        .unwrap()
        .success());
    let out = bin()
        .args(["perturb", "--mode", "correlated", "--rms-fraction", "0.03"])
        .arg("--input")
        .arg(&xyz)
        .arg("--output")
        .arg(d.path("hot.xyz"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn interior_margin_filters_hull_rows() {
    let d = Dir::new();
    let xyz = d.path("pack2d.xyz");
    assert!(bin()
        .args(["generate", "--kind", "poisson-2d", "--box", "15,15", "--seed", "2"])
        .arg("--output")
        .arg(&xyz)
        .status()
        .unwrap()
        .success());
    let all = d.path("all.csv");
    let inner = d.path("inner.csv");
    for (path, margin) in [(&all, "0"), (&inner, "2.0")] {
        assert!(bin()
            .args(["analyze", "--seed", "4", "--interior-margin", margin])
            .arg("--input")
            .arg(&xyz)
            .arg("--output")
            .arg(path)
            .status()
            .unwrap()
            .success());
    }
    let n_all = read(&all).lines().count();
    let n_inner = read(&inner).lines().count();
    assert!(n_inner < n_all, "margin dropped nothing ({n_all} vs {n_inner})");
    assert!(n_inner > 1);
}

#[test]
fn validate_quick_passes_and_overcoarse_threshold_fails() {
    let d = Dir::new();
    let report = d.path("report.json");
    let out = bin()
        .args(["validate", "--quick"])
        .arg("--json")
        .arg(&report)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "stdout:\n{stdout}");
    assert!(stdout.contains("[PASS]"));
    let rows: Vec<serde_json::Value> = serde_json::from_str(&read(&report)).unwrap();
    assert!(rows.iter().all(|r| r["passed"].as_bool().unwrap()));

    // an over-coarse discretization merges distinct angle groups and the
    // reference reproductions fail loudly
    let out = bin()
        .args(["validate", "--quick", "--rmse-threshold", "90"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[FAIL]"));
    assert!(stdout.contains("fcc mean E"), "stdout:\n{stdout}");
}

#[test]
fn bench_runs_small() {
    let out = bin()
        .args(["bench", "--particles", "4000", "--seed", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("particles/s"), "stdout: {stdout}");
}
