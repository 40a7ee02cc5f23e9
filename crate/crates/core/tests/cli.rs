//! End-to-end runs of the `kpcohft` binary: exit codes and output stability.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kpcohft"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn kpcohft")
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kpcohft-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn verify_passes_with_schema() {
    let out = run(&["verify", "inversion", "--w", "-2/7", "--beta", "3", "--order", "10"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["schema_version"], "1");
    assert_eq!(v["pass"], true);
    assert_eq!(v["parameters"]["w"], "-2/7");
}

#[test]
fn mismatched_curve_fails_residual() {
    // dy doubled: omega_{0,3} halves, so TR no longer matches the tau side
    let cfg = scratch(
        "mismatch.toml",
        "scenario = \"tr-compare\"\norder = 4\n[tau]\npreset = \"naive-hodge\"\n[curve]\ndx = [\"1 - z\", \"z\"]\ndy = [\"2\", \"1\"]\n",
    );
    let out = run(&["verify", "tr-compare", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["pass"], false);
    let failed: Vec<_> = v["checks"].as_array().unwrap().iter().filter(|c| c["pass"] == false).map(|c| c["name"].clone()).collect();
    assert!(failed.contains(&serde_json::json!("tr-equals-tau-0-3")), "{failed:?}");
}

#[test]
fn config_errors_exit_2() {
    let unknown = scratch("unknown.toml", "wat = 1\n");
    assert_eq!(run(&["verify", "inversion", "--config", unknown.to_str().unwrap()]).status.code(), Some(2));
    let wrong = scratch("wrong.toml", "scenario = \"moebius\"\n");
    assert_eq!(run(&["verify", "inversion", "--config", wrong.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["verify", "inversion", "--beta", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "no-such-scenario"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "inversion", "--config", "/nonexistent/x.toml"]).status.code(), Some(2));
    let threads = bin().args(["verify", "inversion"]).env("KPCOHFT_THREADS", "0").output().unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn computation_errors_exit_3() {
    // X-expansions are unavailable on the Airy curve (ramification at z = 0)
    let cfg = scratch("airy.toml", "[tau]\npreset = \"naive-hodge\"\n[curve]\npreset = \"airy\"\n");
    let out = run(&["verify", "tr-compare", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn tables_are_byte_stable() {
    let dir = scratch("placeholder", "");
    let out_path = dir.with_file_name("tforms.json");
    let a = run(&["tables", "t-forms", "--out", out_path.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    let first = std::fs::read(&out_path).unwrap();
    let b = bin().args(["tables", "t-forms"]).env("KPCOHFT_THREADS", "1").output().unwrap();
    assert_eq!(first, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["kind"], "t-forms");
    // T_1 = sum S(m+1, m) q_m = q_1 + 3 q_2 + 6 q_3 + ...
    assert!(v["rows"].as_array().unwrap().contains(&serde_json::json!({"k": "1", "m": "3", "value": "6/1"})));
    let csv = run(&["tables", "p-of-q", "--w", "1", "--beta", "1", "--format", "csv"]);
    assert_eq!(csv.status.code(), Some(0));
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("k,m,value\n1,1,1/1\n"), "{text}");
}
