use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn polaron(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polaron")).args(args).output().expect("binary runs")
}

fn records(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("bad record {l:?}: {e}")))
        .collect()
}

fn write_config(dir: &Path, potential: &str) -> String {
    let text = format!(
        "[potential]\n{potential}\n\n[grid]\nn = 32\nhalf_length = 64.0\n\n\
         [solver]\ninit = {{ type = \"gaussian\", sigma = 10.0 }}\n\n[output]\ndir = {:?}\n",
        dir.join("out")
    );
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const ISO: &str = "model = \"full\"\nisotropic = 0.5";

#[test]
fn oracle_prints_one_record() {
    let out = polaron(&["oracle", "--s", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&out);
    assert_eq!(recs.len(), 1);
    let r = &recs[0];
    assert_eq!(r["kind"], "oracle");
    for key in ["energy", "mu", "residual", "iterations", "converged", "lambda", "grid", "potential", "version", "config_hash"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert!(r["energy"].as_f64().unwrap() < 0.0);
}

#[test]
fn solve_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), ISO);
    let first = polaron(&["solve", "--config", &cfg]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let rec = &records(&first)[0];
    assert_eq!(rec["kind"], "solve");
    assert_eq!(rec["converged"], true);
    assert!(rec["virial_deviation"].as_f64().unwrap() < 1e-3);
    let field = dir.path().join("out/psi.pfld");
    let bytes = fs::read(&field).unwrap();
    assert!(dir.path().join("out/profile.csv").exists());

    let second = polaron(&["solve", "--config", &cfg]);
    assert!(second.status.success());
    assert_eq!(fs::read(&field).unwrap(), bytes);
    assert_eq!(records(&second)[0]["energy"], rec["energy"]);
    assert_eq!(records(&second)[0]["config_hash"], rec["config_hash"]);
}

#[test]
fn vacuum_exits_with_no_binding() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "model = \"full\"\nisotropic = 1.0");
    let out = polaron(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let rec = &records(&out)[0];
    assert_eq!(rec["kind"], "error");
    assert_eq!(rec["error"], "no-binding");
}

#[test]
fn bad_config_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[potential]\nmodel = \"full\"\nisotropic = 0.5\nunknown = 1\n").unwrap();
    let out = polaron(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(records(&out)[0]["kind"], "error");

    assert_eq!(polaron(&["solve"]).status.code(), Some(1));
    assert_eq!(polaron(&["verify", "--suite", "nonsense"]).status.code(), Some(1));
}

#[test]
fn tn_check_passes() {
    let out = polaron(&["cyl", "--check", "tn"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rec = &records(&out)[0];
    assert_eq!(rec["kind"], "check");
    assert_eq!(rec["id"], 10);
    assert_eq!(rec["status"], "pass");
}

#[test]
fn persistence_suite_on_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), ISO);
    let out = polaron(&["verify", "--config", &cfg, "--suite", "persistence"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let recs = records(&out);
    assert_eq!(recs.last().unwrap()["kind"], "report");
    assert_eq!(recs.last().unwrap()["passed"], true);
}

#[test]
fn symmetry_check_reports_every_direction() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "model = \"full\"\ndiag = [0.6, 0.6, 0.5]");
    let out = polaron(&["symmetry-check", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let recs = records(&out);
    assert!(recs.len() >= 3);
    assert!(recs.iter().all(|r| r["kind"] == "symmetry" && r["pass"] == true));
}
