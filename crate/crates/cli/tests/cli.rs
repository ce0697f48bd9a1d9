use std::process::{Command, Output};

fn pmchem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmchem"))
        .args(args)
        .env_remove("PMCHEM_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(pmchem(&["run"]).status.code(), Some(2));
    assert_eq!(pmchem(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(pmchem(&["run", "--preset", "no-such-preset"]).status.code(), Some(2));
    assert_eq!(pmchem(&["verify", "--suite", "everything"]).status.code(), Some(2));
}

#[test]
fn bad_config_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "seed = 1\nnonsense = true\n").unwrap();
    let out = pmchem(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn run_then_report_reproduces_constants() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_str().unwrap();
    let out = pmchem(&[
        "run",
        "--preset",
        "random-chemotaxis",
        "--T",
        "0.5",
        "--grid",
        "32",
        "--out",
        root,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run_dir = stdout(&out).lines().next().unwrap().trim().to_string();
    assert!(std::path::Path::new(&run_dir).join("manifest.json").exists());

    let rep = pmchem(&["report", &run_dir]);
    assert!(rep.status.success(), "{}", stdout(&rep));
    assert!(stdout(&rep).contains("\"reproduced\": true"));
}

#[test]
fn overrides_land_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_str().unwrap();
    let out = pmchem(&[
        "run",
        "--preset",
        "constant-equilibrium",
        "--T",
        "0.3",
        "--eps",
        "0.05",
        "--seed",
        "11",
        "--grid",
        "16",
        "--out",
        root,
    ]);
    assert!(out.status.success());
    let run_dir = stdout(&out).lines().next().unwrap().trim().to_string();
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(std::path::Path::new(&run_dir).join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["config"]["params"]["eps"], 0.05);
    assert_eq!(manifest["config"]["control"]["horizon"], 0.3);
}

#[test]
fn sweep_rejects_increasing_eps() {
    let out = pmchem(&["sweep", "--preset", "random-chemotaxis", "--eps-list", "0.01,0.02,0.04"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_str().unwrap();
    let out = pmchem(&[
        "sweep",
        "--preset",
        "random-chemotaxis",
        "--T",
        "0.5",
        "--grid",
        "32",
        "--eps-list",
        "0.1,0.05,0.025",
        "--out",
        root,
    ]);
    assert!(out.status.code().is_some_and(|c| c == 0 || c == 1));
    let csv = std::fs::read_to_string(dir.path().join("random-chemotaxis-sweep/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("eps_k,eps_k1,distance,ratio"));
}

#[test]
fn cutoff_suite_passes() {
    let out = pmchem(&["verify", "--suite", "cutoff", "--kappa", "0.5,0.1"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn refine_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = pmchem(&["refine", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stdout(&out));
    let csv = std::fs::read_to_string(dir.path().join("refinement.csv")).unwrap();
    assert!(csv.starts_with("oracle,level,h,error,order"));
}
