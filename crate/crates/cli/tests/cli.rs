//! End-to-end runs of the `coupled-ginibre` binary.

use sha2::{Digest, Sha256};
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_coupled-ginibre"));
    cmd.env_remove("COUPLED_GINIBRE_OUT_DIR");
    cmd
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) {
    std::fs::write(dir.join("run.cfg"), text).unwrap();
}

/// Parses a CSV written by the binary into a header and numeric rows.
fn read_table(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

fn manifest(path: &Path) -> serde_json::Value {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    serde_json::from_slice(&std::fs::read(name).unwrap()).unwrap()
}

#[test]
fn zero_samples_give_header_only_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "n = 2\nm = 2\nb = 0.5\n");
    let out = run(dir.path(), &["sample", "--config", "run.cfg", "--samples", "0", "--out", "s.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(dir.path().join("s.csv")).unwrap(), "sample,level,index,value\r\n");
    let m = manifest(&dir.path().join("s.csv"));
    assert_eq!(m["samples"], 0);
    assert_eq!(m["config"]["n"], 2);
}

#[test]
fn manifest_digest_matches_file_and_same_seed_repeats() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "n = 3\nm = 3\nnus = 1, 0\nb = 0.7\nseed = 11\n");
    let mut digests = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = run(dir.path(), &["sample", "--config", "run.cfg", "--samples", "5", "--out", name]);
        assert!(out.status.success());
        let bytes = std::fs::read(dir.path().join(name)).unwrap();
        let digest = format!("{:x}", Sha256::digest(&bytes));
        assert_eq!(manifest(&dir.path().join(name))["outputs"][0]["sha256"], digest.as_str());
        digests.push(digest);
    }
    assert_eq!(digests[0], digests[1]);
    let other = run(dir.path(), &["sample", "--config", "run.cfg", "--samples", "5", "--seed", "12", "--out", "c.csv"]);
    assert!(other.status.success());
    assert_ne!(manifest(&dir.path().join("c.csv"))["outputs"][0]["sha256"], digests[0].as_str());
    let replay = run(dir.path(), &["replay", "--manifest", "a.csv.manifest.json"]);
    assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stdout));
}

#[test]
fn samples_are_positive_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "n = 2\nm = 3\nb = 1.5\nseed = 3\n");
    let out = run(dir.path(), &["sample", "--config", "run.cfg", "--samples", "4", "--out", "s.csv"]);
    assert!(out.status.success());
    let (_, rows) = read_table(&dir.path().join("s.csv"));
    assert_eq!(rows.len(), 4 * 3 * 2);
    assert!(rows.iter().all(|r| r[3] > 0.0 && r[3].is_finite()));
}

#[test]
fn sum_and_contour_agree_and_diagonal_is_nonnegative() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "n = 4\nm = 3\nnus = 1, 2\nb = 0.8\n");
    let out = run(
        dir.path(),
        &["kernel", "--config", "run.cfg", "--r", "3", "--s", "3", "--grid", "0.2:6:5", "--compare", "contour", "--out", "k.csv"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let (header, rows) = read_table(&dir.path().join("k.csv"));
    assert_eq!(header, ["x", "y", "K", "err_estimate", "K_compare", "rel_diff"]);
    assert_eq!(rows.len(), 25);
    for row in &rows {
        assert!(row[5] < 1e-6, "rel_diff {}", row[5]);
        if row[0] == row[1] {
            assert!(row[2] >= 0.0);
        }
    }
}

#[test]
fn comparison_beyond_tolerance_fails() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "n = 3\nm = 2\nb = 0.5\n");
    let out = run(
        dir.path(),
        &["kernel", "--config", "run.cfg", "--r", "2", "--s", "2", "--grid", "0.5:2:3", "--compare", "limit:ginibre", "--out", "k.csv"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(dir.path().join("k.csv").exists());
}

/// J_k(z) from its power series; fine for the small arguments used here.
fn bessel_j(k: u32, z: f64) -> f64 {
    let mut term = (z / 2.0).powi(k as i32) / (1..=k).map(f64::from).product::<f64>();
    let mut sum = term;
    for j in 1..60 {
        term *= -(z * z / 4.0) / (j as f64 * (j + k) as f64);
        sum += term;
    }
    sum
}

#[test]
fn ginibre_limit_matches_bessel_form_on_the_first_level() {
    // At ν = 0 the diagonal of the hard-edge kernel is J_0(2√x)² + J_1(2√x)².
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "n = 2\nm = 2\nb = 1\n");
    let out = run(
        dir.path(),
        &["kernel", "--config", "run.cfg", "--r", "1", "--s", "1", "--grid", "0.5:3:4", "--representation", "limit:ginibre", "--out", "g.csv"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_table(&dir.path().join("g.csv"));
    let diagonal: Vec<_> = rows.iter().filter(|r| r[0] == r[1]).collect();
    assert_eq!(diagonal.len(), 4);
    for row in diagonal {
        let z = 2.0 * row[0].sqrt();
        let expected = bessel_j(0, z).powi(2) + bessel_j(1, z).powi(2);
        assert!((row[2] - expected).abs() < 1e-9 * expected, "K({0},{0}) = {1} vs {expected}", row[0], row[2]);
    }
}

#[test]
fn weak_limit_distances_decrease() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "n = 1\nm = 2\nb = 0\n");
    let out = run(dir.path(), &["limits", "--config", "run.cfg", "--regime", "weak", "--ns", "10,20,40", "--out", "l.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let (header, rows) = read_table(&dir.path().join("l.csv"));
    assert_eq!(header, ["n", "b", "sup_distance", "error_estimate"]);
    assert!(rows.windows(2).all(|w| w[1][2] < w[0][2]));
}

#[test]
fn validate_hankel_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(dir.path())
        .env("COUPLED_GINIBRE_OUT_DIR", dir.path().join("results"))
        .args(["validate", "--suite", "hankel"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    assert!(dir.path().join("results/validation.csv").exists());
    assert!(dir.path().join("results/validation.csv.manifest.json").exists());
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "n = 2\nm = 3\nnus = 1\nb = 0.5\n");
    let out = run(dir.path(), &["sample", "--config", "run.cfg", "--samples", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let missing = run(dir.path(), &["sample", "--config", "absent.cfg", "--samples", "1"]);
    assert!(!missing.status.success());
    write_config(dir.path(), "n = 2\nm = 2\nb = 0.5\n");
    let grid = run(dir.path(), &["kernel", "--config", "run.cfg", "--r", "1", "--s", "1", "--grid", "0:1:3"]);
    assert!(!grid.status.success());
    let rep = run(dir.path(), &["kernel", "--config", "run.cfg", "--r", "1", "--s", "1", "--grid", "1:1:1", "--representation", "bogus"]);
    assert!(!rep.status.success());
}
