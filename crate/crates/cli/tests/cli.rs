use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clusterstate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn build_block_and_segments() {
    let out = run(&["build", "--block", "7", "7"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["result"]["clusters"], 1);
    assert_eq!(v["result"]["total_sites"], 49);
    assert_eq!(v["seed"], 0);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);

    let dir = tempfile::tempdir().unwrap();
    let spec = write(&dir, "two.json", r#"{"dim": 1, "sites": [[0],[1],[2],[5],[6]]}"#);
    let v = json(&run(&["build", "--spec", &spec]));
    assert_eq!(v["result"]["clusters"], 2);
}

#[test]
fn input_errors_and_empty_lattices() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(&dir, "bad.json", "{\"dim\": 2,\n \"sites\": [[0,0],");
    let out = run(&["build", "--spec", &bad]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
    assert_eq!(code(&run(&["build", "--chain", "0"])), 3);
    let empty = write(&dir, "empty.json", r#"{"dim": 2, "sites": []}"#);
    assert_eq!(code(&run(&["build", "--spec", &empty])), 3);
    assert_eq!(code(&run(&["build", "--chane", "3"])), 2);
}

#[test]
fn resource_limit_exit_code() {
    assert_eq!(code(&run(&["protocol", "reduce", "--chain", "40", "--times", "2"])), 5);
}

#[test]
fn bell_protocol_with_cross_check() {
    let out = run(&["--backend", "both", "protocol", "bell", "--chain", "8", "--pair", "3", "6"]);
    assert_eq!(code(&out), 0);
    let r = &json(&out)["result"];
    assert_eq!(r["all_passed"], true);
    assert_eq!(r["cross_check"]["mismatches"], 0);
    assert_eq!(r["remaining"], serde_json::json!([2, 5]));
}

#[test]
fn ghz_on_the_even_sublattice() {
    let out = run(&["--backend", "tableau", "protocol", "ghz", "--block", "7", "7", "--sublattice", "even", "--samples", "3"]);
    assert_eq!(code(&out), 0);
    let r = &json(&out)["result"];
    assert_eq!(r["remaining"].as_array().unwrap().len(), 16);
    assert_eq!(r["branches"].as_array().unwrap().len(), 3);
    let out = run(&["--backend", "both", "protocol", "ghz", "--block", "3", "3", "--sublattice", "even"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["result"]["dense"]["cross_check"]["mismatches"], 0);
}

#[test]
fn disentangle_even_chain() {
    let out = run(&["protocol", "disentangle-even", "--chain", "9"]);
    assert_eq!(code(&out), 0);
    let r = &json(&out)["result"];
    assert_eq!(r["measurements"].as_array().unwrap().len(), 4);
    assert_eq!(r["branches"].as_array().unwrap().len(), 16);
}

#[test]
fn carve_reduce_and_alpha_beta() {
    let out = run(&["protocol", "carve", "--block", "3", "3", "--path", "0,0;1,0;1,1;1,2"]);
    assert_eq!(code(&out), 0);
    let out = run(&["protocol", "carve", "--block", "3", "3", "--path", "0,0;1,0;1,1;0,1"]);
    assert_eq!(code(&out), 2);
    let out = run(&["protocol", "reduce", "--chain", "6", "--times", "4"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["result"]["branches"].as_array().unwrap().len(), 16);
    let out = run(&[
        "protocol", "alpha-beta", "--block", "3", "3", "--sublattice", "even", "--alpha", "0.5477225575051661",
        "--beta", "0,0.8366600265340756",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn script_target_miss_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(&dir, "ok.json", r#"{"steps":[{"qubit":[2],"basis":"Z"}]}"#);
    let out = run(&["protocol", "script", "--chain", "3", "--script", &ok, "--target", "bell"]);
    assert_eq!(code(&out), 0);
    let miss = write(&dir, "miss.json", r#"{"steps":[{"qubit":[1],"basis":"Z"}]}"#);
    let out = run(&["protocol", "script", "--chain", "3", "--script", &miss, "--target", "bell"]);
    assert_eq!(code(&out), 4);
    // the failing branches are still reported
    assert_eq!(json(&out)["result"]["all_passed"], false);
}

#[test]
fn sweep_phi_csv() {
    let out = run(&["sweep-phi", "--chain", "6", "--steps", "16"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 17);
    assert_eq!(rows[0][4], "true");
    assert_eq!(rows[16][4], "true");
    assert!(rows[1..16].iter().all(|r| r[4] == "false"));
    let alt: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!((alt[8] - 3.0).abs() < 1e-9);
    assert!(alt.iter().all(|&x| x <= alt[8] + 1e-12));

    let out = run(&["sweep-phi", "--chain", "2", "--steps", "1", "--format", "json"]);
    let rows = json(&out)["result"]["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["product"] == true));
}

#[test]
fn analyses() {
    let v = json(&run(&["analyze", "persistency", "--chain", "8"]));
    let cert = &v["result"]["certificate"];
    assert_eq!((cert["lower"].as_u64(), cert["upper"].as_u64(), cert["exact"].as_bool()), (Some(4), Some(4), Some(true)));

    let v = json(&run(&["analyze", "connectedness", "--block", "3", "3"]));
    assert_eq!(v["result"]["pairs_passing"], 36);
    assert_eq!(v["result"]["pairs_total"], 36);

    let v = json(&run(&["analyze", "schmidt", "--w", "4", "--restarts", "4", "--max-iters", "200"]));
    let b = &v["result"]["bounds"];
    assert_eq!(b["lower"], 1.0);
    assert_eq!(b["upper"], 2.0);
    assert_eq!(v["result"]["claimed_value"], 2.0);

    let v = json(&run(&["analyze", "connectedness", "--w", "4"]));
    assert_eq!(v["result"]["pairs_passing"], 0);

    let v = json(&run(&["analyze", "persistency", "--w", "3", "--search", "3"]));
    assert_eq!(v["result"]["pauli_search"]["depth"], 2);
}

#[test]
fn bench_is_deterministic() {
    let args = ["bench", "--chains", "1000", "--squares", "10", "--measurements", "200", "--seed", "5"];
    let digest = |out: Output| -> Vec<String> {
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().to_string())
            .collect()
    };
    let a = digest(run(&args));
    assert_eq!(a.len(), 2);
    assert_eq!(a, digest(run(&args)));
}

#[test]
fn output_file_and_version() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = run(&["build", "--chain", "4", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["command"], "build");
}
