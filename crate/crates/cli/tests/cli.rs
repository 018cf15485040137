use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("relind-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_config(name: &str, text: &str) -> PathBuf {
    let p = scratch(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn relind(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relind")).args(args).output().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn malformed_config_exits_2_with_location() {
    let c = write_config("bad.json", "{\"schema\": 1,\n  \"entropy\": {\"windows\": [2], \"period\": 4, \"eps\": [\"3/5\"], \"perod\": 1}}");
    let out = relind(&["entropy", "--config", arg(&c)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown field `perod`") && err.contains("line 2"), "{err}");

    let c = write_config("schema.json", r#"{"schema": 7}"#);
    assert_eq!(relind(&["transport", "--config", arg(&c)]).status.code(), Some(2));
    assert_eq!(relind(&["entropy", "--config", "/nonexistent/config.json"]).status.code(), Some(2));

    let c = write_config("rule.json", r#"{"schema": 1, "system": {"alphabet": 2, "code": {"radius": 0, "rule": {"0": "1"}}}, "entropy": {"windows": [2], "period": 2}}"#);
    let out = relind(&["entropy", "--config", arg(&c)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("system.code"));
}

#[test]
fn identity_certificate_is_a_named_failure() {
    let c = write_config(
        "identity.json",
        r#"{"schema": 1, "system": {"preset": "identity"},
            "mdim_lower": {"v1": {"offset": 0, "words": ["0"]}, "v2": {"offset": 0, "words": ["1"]}, "r": "1", "runs": [{"h": 1, "window": 48}]}}"#,
    );
    let out = relind(&["mdim-lower", "--config", arg(&c)]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["results"][0]["status"], "failed");
    assert_eq!(r["results"][0]["error"]["kind"], "independence-shortfall");
}

#[test]
fn budgets() {
    let out = relind(&["verify-lemmas", "--seed", "5", "--budget", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: budget 0"));
    let r = report(&out);
    assert!(r["results"].as_array().unwrap().iter().all(|b| b["status"] == "skipped"));

    let out = relind(&["verify-lemmas", "--seed", "5", "--budget", "250"]);
    assert_eq!(out.status.code(), Some(3));
    let r = report(&out);
    assert_eq!(r["results"][0]["status"], "ok");
    assert_eq!(r["results"][1]["status"], "budget-exceeded");
    assert_eq!(r["results"][1]["data"]["checked"], 50);

    let c = write_config("lifts.json", r#"{"schema": 1, "system": {"preset": "full-shift-to-point"},
        "mdim_lower": {"v1": {"offset": 0, "words": ["0"]}, "v2": {"offset": 0, "words": ["1"]}, "r": "1", "runs": [{"h": 1, "window": 48}]}}"#);
    let out = relind(&["mdim-lower", "--config", arg(&c), "--budget", "1000"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(report(&out)["results"][0]["error"]["kind"], "resource-limit");

    assert_eq!(relind(&["verify-lemmas"]).status.code(), Some(2));
}

#[test]
fn transport_of_equal_measures_is_zero() {
    let c = write_config(
        "same.json",
        r#"{"schema": 1, "transport": {"mu": {"atoms": [{"word": "01", "period": 2, "weight": "1"}]},
                                       "nu": {"atoms": [{"word": "01", "weight": "1/1"}]}}}"#,
    );
    let out = relind(&["transport", "--config", arg(&c)]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["results"][0]["data"]["distance"], "0/1");
    assert_eq!(r["results"][1]["data"]["value"], "0/1");
}

#[test]
fn csv_and_side_tables() {
    let out_path = scratch("lebesgue-run.csv");
    let c = write_config("leb.json", r#"{"schema": 1, "verify_lemmas": {"items": ["lebesgue-oracle"], "lebesgue": [{"n": 2, "k": 1, "q": 10}]}}"#);
    let out = relind(&["verify-lemmas", "--config", arg(&c), "--seed", "3", "--format", "csv", "--out", arg(&out_path)]);
    assert_eq!(out.status.code(), Some(0));
    let main = std::fs::read_to_string(&out_path).unwrap();
    assert!(main.starts_with("item,status,instances,checked\nlebesgue-oracle,ok"), "{main}");
    let side = std::fs::read_to_string(scratch("lebesgue-run.csv.lebesgue.csv")).unwrap();
    let rows: Vec<&str> = side.lines().collect();
    assert_eq!(rows.len(), 2);
    let cells: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(&cells[..4], ["2", "1", "10", "3"]);
    assert_eq!(cells[6], "1");
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.file_name().unwrap().to_str().unwrap().ends_with(".system.json") {
            continue;
        }
        relind_cli::Config::load(&p).unwrap();
    }
}
