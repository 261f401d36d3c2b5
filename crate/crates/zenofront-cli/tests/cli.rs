use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zenofront")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn table3(dir: &TempDir) -> PathBuf {
    let inst = path(dir, "table3.json");
    assert_eq!(code(&run(&["gen", "--table", "3", "-o", s(&inst)])), 0);
    inst
}

#[test]
fn exit_codes() {
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["solve", "--bogus"])), 1);
    assert_eq!(code(&run(&["solve", "-i", "/nonexistent/instance.json"])), 2);
}

#[test]
fn solve_reports_table_stats() {
    let dir = TempDir::new().unwrap();
    let inst = table3(&dir);
    let out = run(&["solve", "-i", s(&inst), "--algo", "classic"]);
    assert_eq!(code(&out), 0);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("iterations 30 calls 33 S 9 front 5"), "{stderr}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().next(), Some("cost,makespan"));
    assert_eq!(stdout.lines().count(), 6);
}

#[test]
fn front_files_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let inst = table3(&dir);
    let mut files = Vec::new();
    for (name, workers) in [("a.json", "1"), ("b.json", "1"), ("c.json", "3")] {
        let out = path(&dir, name);
        assert_eq!(code(&run(&["solve", "-i", s(&inst), "--workers", workers, "-o", s(&out)])), 0);
        files.push(fs::read(out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
    let doc: serde_json::Value = serde_json::from_slice(&files[0]).unwrap();
    assert_eq!(doc["points"].as_array().unwrap().len(), 5);
}

#[test]
fn compare_finds_identical_fronts() {
    let dir = TempDir::new().unwrap();
    let inst = table3(&dir);
    let out = run(&["compare", "-i", s(&inst)]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout).unwrap().contains("fronts identical (5 points)"));
}

#[test]
fn crossing_pairs_are_bridged_before_solving() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "crossing.json");
    fs::write(&inst, r#"{"n":2,"t":3,"p":2,"d":[1,3],"dbar":[3,1],"c":[4,1],"central":[[0,2],[2,0]]}"#).unwrap();
    let out = run(&["compare", "-i", s(&inst)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    // the oracle finds (11, 8) only through a bridge plan
    let front = String::from_utf8(run(&["solve", "-i", s(&inst)]).stdout).unwrap();
    assert!(front.lines().any(|l| l == "11,8"), "{front}");
}

#[test]
fn pddl_export_writes_both_files() {
    let dir = TempDir::new().unwrap();
    let inst = table3(&dir);
    let (domain, problem) = (path(&dir, "domain.pddl"), path(&dir, "problem.pddl"));
    assert_eq!(code(&run(&["pddl", "-i", s(&inst), "--domain", s(&domain), "--problem", s(&problem)])), 0);
    assert!(fs::read_to_string(domain).unwrap().contains("(define (domain multi-zeno-travel)"));
    assert!(fs::read_to_string(problem).unwrap().contains("(:metric minimize (total-time))"));
}

#[test]
fn reduce_writes_a_mapping_sidecar() {
    let dir = TempDir::new().unwrap();
    let graph = path(&dir, "hansen.json");
    assert_eq!(code(&run(&["gen", "--hansen", "5", "--t", "2", "--p", "2", "-o", s(&graph)])), 0);
    let clique = path(&dir, "clique.json");
    assert_eq!(code(&run(&["reduce", "-i", s(&graph), "-o", s(&clique)])), 0);
    let sidecar: serde_json::Value = serde_json::from_str(&fs::read_to_string(path(&dir, "clique.mapping.json")).unwrap()).unwrap();
    assert_eq!(sidecar["mode"], "routes");
    let cities = sidecar["mapping"]["cities"].as_array().unwrap().len();
    let inst: serde_json::Value = serde_json::from_str(&fs::read_to_string(&clique).unwrap()).unwrap();
    assert_eq!(inst["n"].as_u64().unwrap() as usize, cities);
    // solving the graph directly reduces it the same way and expands the witnesses
    let out = run(&["solve", "-i", s(&graph), "--format", "json"]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["points"][0]["plan"][0].as_str().unwrap().starts_with("I -> "));
}
