use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;

use divcheck::report::strip_timing;
use divcheck_core::builtin;
use divcheck_core::literal::parse_structure;
use serde_json::Value;

fn divcheck(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_divcheck")).args(args).env_remove("DIVCHECK_SEED").output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let (code, out, err) = divcheck(&full);
    let v = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out}{err}"));
    (code, v)
}

fn schema() -> jsonschema::JSONSchema {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/report-schema.json");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&v).unwrap()
}

fn assert_schema(v: &Value) {
    let s = schema();
    let msgs: Vec<String> = match s.validate(v) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    panic!("schema violations: {msgs:#?}");
}

fn scenario_file(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name).display().to_string()
}

#[test]
fn list_shows_the_catalog() {
    let (code, out, _) = divcheck(&["list"]);
    assert_eq!(code, 0);
    let names: Vec<&str> = out.lines().collect();
    assert_eq!(names, ["circular_pairs", "generic_function_pairs", "og", "og_sop3", "incidence_4_2"]);
}

#[test]
fn usage_errors_exit_64() {
    for args in [
        &["run", "nonexistent"][..],
        &["frobnicate"],
        &["run"],
        &["run", "og", "--window", "3"],
        &["run", "og", "--k-max", "0"],
        &["sop3", "--n", "1"],
        &["check", "nonsense", "--scenario", "og"],
        &["check", "divides", "--scenario", "og", "--formula", "[x:O] E(x,zz,0)"],
        &["acl", "--scenario", "og", "--set", "nobody"],
        &["suite", "axioms", "og", "--without", "og-9"],
        &["suite", "axioms", "klein-bottle"],
    ] {
        let (code, _, err) = divcheck(args);
        assert_eq!(code, 64, "{args:?}: {err}");
        assert!(!err.is_empty(), "{args:?}");
    }
}

#[test]
fn sop3_exit_codes() {
    let (code, v) = json(&["sop3", "--n", "4"]);
    assert_eq!(code, 0);
    assert_eq!(v["claims"][0]["actual"], Value::Bool(true));
    assert_schema(&v);
    let (code, v) = json(&["sop3", "--n", "3", "--linkage", "complete"]);
    assert_eq!(code, 0);
    assert_eq!(v["claims"][0]["actual"], Value::Bool(false));
    let (code, _) = json(&["sop3", "--n", "3", "--linkage", "complete", "--expect", "true"]);
    assert_eq!(code, 1);
}

#[test]
fn check_reports_and_compares() {
    let phi = "[x:O] E(x,b,0)";
    let (code, v) = json(&["check", "divides", "--scenario", "og", "--formula", phi, "--base", "K", "--expect", "true"]);
    assert_eq!(code, 0);
    assert_schema(&v);
    assert_eq!(v["claims"][0]["certificate"]["k"], 2);
    let (code, _) = json(&["check", "divides", "--scenario", "og", "--formula", phi, "--base", "K", "--expect", "false"]);
    assert_eq!(code, 1);
    let (code, v) = json(&["check", "divides", "--scenario", "og", "--formula", phi]);
    assert_eq!(code, 0);
    assert_eq!(v["claims"][0]["status"], "reported");
    assert_eq!(v["claims"][0]["actual"], Value::Bool(true));

    let file = scenario_file("circular_pairs.structure");
    let (code, v) = json(&[
        "check", "nondividing", "--theory", "circular", "--structure", &file, "--left", "a", "--right", "b", "--expect", "true",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["claims"][0]["certificate"]["kind"], "nondividing");
}

#[test]
fn tiny_budgets_are_inconclusive() {
    let (code, v) = json(&["check", "acl", "--scenario", "generic_function_pairs", "--left", "a d2", "--acl-budget", "1", "--expect", "true"]);
    assert_eq!(code, 2, "{v:#}");
    assert_eq!(v["aggregate"]["inconclusive"], 1);
}

#[test]
fn acl_and_same_type_commands() {
    let file = scenario_file("og.structure");
    let (code, v) = json(&["acl", "--theory", "og", "--structure", &file, "--set", "a"]);
    assert_eq!(code, 0);
    assert_schema(&v);
    assert_eq!(v["claims"][0]["detail"]["closure"], serde_json::json!(["0", "1", "a"]));
    let (code, v) = json(&["same-type", "--scenario", "og", "--left", "0", "--right", "1", "--expect", "true"]);
    assert_eq!(code, 0);
    assert_eq!(v["claims"][0]["actual"], Value::Bool(true));
    let (code, _) = json(&["same-type", "--scenario", "og", "--left", "0", "--right", "1", "--base", "0", "--expect", "true"]);
    assert_eq!(code, 1);
}

#[test]
fn axiom_suite_command() {
    let (code, v) = json(&["suite", "axioms", "og", "--trials", "20", "--size", "4"]);
    assert_eq!(code, 0);
    assert_schema(&v);
    assert_eq!(v["aggregate"]["pass"], 8);
    let (code, v) = json(&["suite", "axioms", "og", "--axiom", "symmetry", "--trials", "5"]);
    assert_eq!(code, 0);
    assert_eq!(v["claims"].as_array().unwrap().len(), 1);
    let (code, _, err) = divcheck(&["suite", "axioms", "circular"]);
    assert_eq!(code, 64, "{err}");
}

#[test]
fn seed_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_divcheck"))
        .args(["--format", "json", "sop3", "--n", "2"])
        .env("DIVCHECK_SEED", "17")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 17);
    let (_, v) = json(&["--seed", "5", "sop3", "--n", "2"]);
    assert_eq!(v["seed"], 5);
}

fn records(v: &Value) -> Vec<&Value> {
    let mut out = Vec::new();
    for s in v["scenarios"].as_array().unwrap() {
        out.extend(s["claims"].as_array().unwrap());
        out.extend(s["invariants"].as_array().unwrap());
    }
    out
}

#[test]
fn catalog_run_is_schema_valid_and_matches_text() {
    let (code, v) = json(&["run", "--all"]);
    assert_eq!(code, 0, "{:#}", v["aggregate"]);
    assert_schema(&v);

    let (code, text, _) = divcheck(&["run", "--all"]);
    assert_eq!(code, 0);
    let from_text: Vec<(String, String)> = text
        .lines()
        .filter(|l| l.starts_with("  "))
        .map(|l| {
            let mut it = l.split_whitespace();
            let status = it.next().unwrap().to_lowercase();
            (it.next().unwrap().to_string(), status)
        })
        .collect();
    let from_json: Vec<(String, String)> = records(&v)
        .iter()
        .map(|r| (r["id"].as_str().unwrap().to_string(), r["status"].as_str().unwrap().to_string()))
        .collect();
    assert_eq!(from_text, from_json);
}

#[test]
fn certificates_reload() {
    let (_, v) = json(&["run", "--all"]);
    let mut reloaded = 0;
    for s in v["scenarios"].as_array().unwrap() {
        let t = builtin(s["theory"].as_str().unwrap()).unwrap();
        for r in s["claims"].as_array().unwrap() {
            let cert = &r["certificate"];
            let mut texts: Vec<&str> = cert["realizations"]
                .as_array()
                .map(|rs| rs.iter().map(|x| x["structure"].as_str().unwrap()).collect())
                .unwrap_or_default();
            texts.extend(cert["structure"].as_str());
            for text in texts {
                let st = parse_structure(t.signature.clone(), text).unwrap_or_else(|e| panic!("{e}\n{text}"));
                assert!(t.accepts(&st), "{text}");
                reloaded += 1;
            }
        }
    }
    assert!(reloaded > 30, "{reloaded}");
}

#[test]
fn overrides_reach_the_report() {
    let (_, v) = json(&["run", "circular_pairs", "--length", "3", "--k-max", "3"]);
    let b = &v["scenarios"][0]["claims"][0]["bounds"];
    assert_eq!((b["length"].as_u64(), b["k_max"].as_u64()), (Some(3), Some(3)));
    let (_, v) = json(&["run", "incidence_4_2"]);
    let b = &v["scenarios"][0]["claims"][0]["bounds"];
    assert_eq!((b["length"].as_u64(), b["validity_length"].as_u64()), (Some(3), Some(6)));
}

#[test]
fn seeded_runs_repeat() {
    let mut runs: BTreeMap<u64, Value> = BTreeMap::new();
    for seed in [3, 3] {
        let (_, mut v) = json(&["--seed", &seed.to_string(), "run", "og"]);
        strip_timing(&mut v);
        if let Some(prev) = runs.get(&seed) {
            assert_eq!(prev, &v);
        }
        runs.insert(seed, v);
    }
}
