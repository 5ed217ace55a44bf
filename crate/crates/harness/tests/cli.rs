use std::path::Path;
use std::process::Command;

fn bpre(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bpre")).args(args).env("RUST_LOG", "warn").output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn experiment_run_writes_tables_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "h.toml",
        "experiment = \"harmonicity\"\nreplicates = 20000\ntruncation = 2000\ngrid_max = 4.0\n\n[environment]\nincrements = { kind = \"lattice-ssrw\" }\n",
    );
    let out = dir.path().join("out");
    let (code, stdout) = bpre(&["experiment", "run", &cfg, "--out-dir", out.to_str().unwrap(), "--seed", "3"]);
    assert!(code == 0 || code == 2, "{code}");
    assert!(stdout.starts_with("harmonicity: "));
    let v = std::fs::read_to_string(out.join("harmonicity-v.csv")).unwrap();
    assert!(v.starts_with("x,value,se,K,n_mc\n"));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("harmonicity-summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["seed"], 3);
    assert_eq!(summary["config"]["environment"]["increments"]["kind"], "lattice-ssrw");
    let (again, listing) = bpre(&["report", out.to_str().unwrap()]);
    assert_eq!(again, code);
    assert!(listing.contains("harmonicity"));
}

#[test]
fn statistical_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "m.toml",
        "experiment = \"minima-law\"\nn_grid = [4096]\np_rule = { kind = \"list\", values = [64] }\nr_values = [0.0, 5.0]\nexact = true\n\n[environment]\nincrements = { kind = \"lattice-ssrw\" }\n",
    );
    let (code, stdout) = bpre(&["experiment", "run", &cfg, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stdout.contains("FAIL"));
}

#[test]
fn bad_config_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "experiment = \"harmonicity\"\nunknown_key = 1\n");
    assert_eq!(bpre(&["experiment", "run", &cfg]).0, 1);
    assert_eq!(bpre(&["experiment", "run", "/nonexistent.toml"]).0, 1);
}

#[test]
fn ad_hoc_subcommands_write_the_documented_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, _) = bpre(&[
        "estimate-v",
        "--walk",
        "gaussian",
        "--grid-max",
        "1",
        "--n-mc",
        "2000",
        "--truncation",
        "500",
        "--out-dir",
        d,
    ]);
    assert_eq!(code, 0);
    let v = std::fs::read_to_string(dir.path().join("estimate-v.csv")).unwrap();
    assert!(v.starts_with("x,value,se,K,n_mc\n"));
    let (code, _) = bpre(&["simulate", "--n", "64", "--replicates", "5000", "--out-dir", d, "--all"]);
    assert_eq!(code, 0);
    let sim = std::fs::read_to_string(dir.path().join("simulate-n64.csv")).unwrap();
    assert!(sim.starts_with("replicate,n,p,Z_p,q_pn,Z_pn,survived,scaled_value\n"));
    assert_eq!(sim.lines().count(), 5001);
    let (code, _) = bpre(&["simulate", "--n", "64", "--replicates", "100", "--out-dir", d, "--format", "json"]);
    assert_eq!(code, 0);
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("simulate-n64.json")).unwrap()).unwrap();
    assert!(json.is_array() || json.is_object());
}

#[test]
fn limit_law_routes_schema() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, _) = bpre(&["limit-law", "--walk", "lattice", "--n", "256", "--x", "0.5,1", "--out-dir", d]);
    assert!(code == 0 || code == 2);
    let t = std::fs::read_to_string(dir.path().join("limit-law-routes-routes.csv")).unwrap();
    assert!(t.starts_with("x,route,estimate,se\n"));
    assert!(t.contains("closed-form-brownian") && t.contains("meander-mc") && t.contains("infimum"));
}
