use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn chainkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chainkit"))
        .args(args)
        .env("CHAINKIT_THREADS", "1")
        .output()
        .expect("spawn chainkit")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn grid_file(dir: &Path, points: usize) -> String {
    let coords: Vec<Vec<f64>> = (0..points)
        .map(|k| vec![k as f64 / (points - 1) as f64])
        .collect();
    write(
        dir,
        "grid.json",
        &serde_json::json!({ "coords": coords }).to_string(),
    )
}

fn params_file(dir: &Path, q: f64) -> String {
    let p = serde_json::json!({
        "M": 3.0, "p": 4.0, "q": q, "C": 2.0, "t": 1.0, "beta": 0.1, "diam": 1.0
    });
    write(dir, "params.json", &p.to_string())
}

#[test]
fn cover_reports_exact_count() {
    let dir = TempDir::new().unwrap();
    let g = grid_file(dir.path(), 9);
    let out = chainkit(&["cover", "--input", &g, "--eta", "0.25"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["count"], 2);
    let out = chainkit(&["cover", "--input", &g, "--eta", "0.25", "--greedy"]);
    assert_eq!(code(&out), 0);
    assert!(json(&out)["count"].as_u64().unwrap() >= 2);
}

#[test]
fn chain_and_pairs_pass_their_checks() {
    let dir = TempDir::new().unwrap();
    let g = grid_file(dir.path(), 9);
    let fam = dir.path().join("family.json");
    let out = chainkit(&["chain", "--input", &g, "--out", fam.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let family: Value = serde_json::from_str(&fs::read_to_string(&fam).unwrap()).unwrap();
    assert_eq!(family["n0"], 0);
    assert_eq!(family["n1"], 4);

    let out = chainkit(&[
        "pairs", "--input", &g, "--A", "2", "--r", "4", "--c", "0.125",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!json(&out)["pairs"].as_array().unwrap().is_empty());

    let out = chainkit(&[
        "pairs", "--input", &g, "--A", "2", "--r", "2", "--c", "0.125",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bounds_subcommands() {
    let dir = TempDir::new().unwrap();
    let g = grid_file(dir.path(), 9);
    let p = params_file(dir.path(), 2.0);
    let out = chainkit(&[
        "bound",
        "lemma-b27",
        "--space",
        &g,
        "--delta",
        "0.25",
        "--params",
        &p,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let statement = json(&out)["bound"].as_f64().unwrap();
    let out = chainkit(&[
        "bound",
        "lemma-b27",
        "--space",
        &g,
        "--delta",
        "0.25",
        "--params",
        &p,
        "--prefactor",
        "proof",
    ]);
    let proof = json(&out)["bound"].as_f64().unwrap();
    // 4^{2p+4q+2} / 4^{t+2p+3q+2} = 4^{q-t}
    assert!((proof / statement - 4.0).abs() < 1e-9);

    let out = chainkit(&["bound", "holder", "--params", &p]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let h = json(&out);
    let (l, l1, l2) = (
        h["L"].as_f64().unwrap(),
        h["L1"].as_f64().unwrap(),
        h["L2"].as_f64().unwrap(),
    );
    assert!((l - l1 - l2).abs() <= 1e-12 * l);

    let bad = params_file(dir.path(), 0.5);
    let out = chainkit(&["bound", "holder", "--params", &bad]);
    assert_eq!(code(&out), 2);
}

#[test]
fn simulate_then_verify() {
    let dir = TempDir::new().unwrap();
    let g = grid_file(dir.path(), 9);
    let p = params_file(dir.path(), 2.0);
    let paths = dir.path().join("paths.bin");
    let paths = paths.to_str().unwrap();
    let out = chainkit(&[
        "simulate", "--kind", "fbm", "--H", "0.5", "--space", &g, "--R", "2000", "--seed", "3",
        "--out", paths,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let out = chainkit(&[
        "verify",
        "corollary",
        "--paths",
        paths,
        "--params",
        &p,
        "--deltas",
        "0.5,0.25",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["pass"], true);

    let report = dir.path().join("b27.json");
    let out = chainkit(&[
        "verify",
        "lemma-b27",
        "--paths",
        paths,
        "--params",
        &p,
        "--deltas",
        "0.25",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["pass"], true);

    let out = chainkit(&["verify", "corollary", "--paths", paths, "--deltas", "0.5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn simulated_partial_sums_feed_tightness_and_clt() {
    let dir = TempDir::new().unwrap();
    let g = grid_file(dir.path(), 9);
    let p = serde_json::json!({"M": 1.0, "p": 2.0, "q": 1.0, "C": 2.0, "t": 0.5, "beta": 0.1, "diam": 1.0});
    let p = write(dir.path(), "p2.json", &p.to_string());
    let paths = dir.path().join("sums.bin");
    let paths = paths.to_str().unwrap();
    let out = chainkit(&[
        "simulate",
        "--kind",
        "fbm",
        "--space",
        &g,
        "--R",
        "2000",
        "--seed",
        "5",
        "--n-values",
        "1,4,16",
        "--out",
        paths,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = chainkit(&[
        "verify",
        "tightness",
        "--paths",
        paths,
        "--deltas",
        "0.5,0.25",
        "--epsilons",
        "0.5",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = chainkit(&["verify", "clt", "--paths", paths, "--params", &p]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

fn small_config(dir: &Path, q_minus: bool) -> String {
    let mut cfg: Value =
        serde_json::from_str(include_str!("../configs/bm_corollary.json")).unwrap();
    cfg["space"] = serde_json::json!({"uniform_grid": {"points": 9, "start": 0.0, "end": 1.0}});
    cfg["R"] = 500.into();
    if q_minus {
        // p = 1 gives q = 0.5 <= t = 1
        cfg["p"] = 1.into();
    }
    write(dir, "cfg.json", &cfg.to_string())
}

#[test]
fn pipeline_writes_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path(), false);
    let outdir: PathBuf = dir.path().join("run");
    let out = chainkit(&[
        "pipeline",
        "--config",
        &cfg,
        "--out",
        outdir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(outdir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    let csv = fs::read_to_string(outdir.join("summary.csv")).unwrap();
    assert!(csv.starts_with("statistic,delta,estimate,std_error,bound,margin,pass"));
}

#[test]
fn pipeline_input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path(), true);
    let out = chainkit(&[
        "pipeline",
        "--config",
        &cfg,
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));

    let out = chainkit(&["pipeline", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let out = chainkit(&[
        "cover",
        "--input",
        "/nonexistent/space.json",
        "--eta",
        "0.1",
    ]);
    assert_eq!(code(&out), 2);
}
