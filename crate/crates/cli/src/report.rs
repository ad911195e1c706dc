//! Machine-readable reports. The layout is described by
//! `docs/report-schema.json`.

use std::fmt::Write as _;

use divcheck_core::dividing::Budgets;
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// A bounded search ran out before reaching the expected verdict.
    Inconclusive,
    /// No expectation was given.
    Reported,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
            Status::Reported => "INFO",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub window: usize,
    pub k_max: usize,
    pub length: usize,
    pub pattern_budget: usize,
    pub acl_budget: usize,
    pub mode_cap: usize,
    pub validity_length: usize,
}

impl From<&Budgets> for Bounds {
    fn from(b: &Budgets) -> Self {
        Bounds {
            window: b.window,
            k_max: b.k_max,
            length: b.length,
            pattern_budget: b.pattern_budget,
            acl_budget: b.acl_budget,
            mode_cap: b.mode_cap,
            validity_length: b.validity_length,
        }
    }
}

/// One named side condition of a claim, such as the witness length.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: Value,
    pub actual: Value,
    pub ok: bool,
}

impl Check {
    pub fn new(name: &str, expected: impl Into<Value>, actual: impl Into<Value>) -> Check {
        let (expected, actual) = (expected.into(), actual.into());
        let ok = expected == actual;
        Check { name: name.to_string(), expected, actual, ok }
    }

    pub fn holds(name: &str, ok: bool, actual: impl Into<Value>) -> Check {
        Check { name: name.to_string(), expected: Value::Bool(true), actual: actual.into(), ok }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClaimRecord {
    pub id: String,
    pub relation: String,
    pub args: Value,
    pub expected: Option<bool>,
    /// The relation's verdict, or null when the engine stopped with an error.
    pub actual: Option<bool>,
    pub status: Status,
    pub checks: Vec<Check>,
    pub detail: Value,
    pub certificate: Option<Value>,
    pub bounds: Bounds,
    pub reference: String,
    pub millis: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Aggregate {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
}

impl Aggregate {
    pub fn of<'a>(records: impl IntoIterator<Item = &'a ClaimRecord>) -> Aggregate {
        let mut a = Aggregate::default();
        for r in records {
            match r.status {
                Status::Pass => a.pass += 1,
                Status::Fail => a.fail += 1,
                Status::Inconclusive => a.inconclusive += 1,
                Status::Reported => {}
            }
        }
        a
    }

    pub fn add(&mut self, other: Aggregate) {
        self.pass += other.pass;
        self.fail += other.fail;
        self.inconclusive += other.inconclusive;
    }

    pub fn exit_code(&self) -> i32 {
        if self.fail > 0 {
            1
        } else if self.inconclusive > 0 {
            2
        } else {
            0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub theory: String,
    pub description: String,
    pub claims: Vec<ClaimRecord>,
    pub invariants: Vec<ClaimRecord>,
    pub aggregate: Aggregate,
}

impl ScenarioReport {
    pub fn records(&self) -> impl Iterator<Item = &ClaimRecord> {
        self.claims.iter().chain(&self.invariants)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub schema: u32,
    pub command: Vec<String>,
    pub seed: u64,
    pub scenarios: Vec<ScenarioReport>,
    /// Records of commands that do not run a scenario.
    pub claims: Vec<ClaimRecord>,
    pub aggregate: Aggregate,
}

impl Report {
    pub fn new(command: Vec<String>, seed: u64) -> Report {
        Report {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            schema: SCHEMA_VERSION,
            command,
            seed,
            scenarios: Vec::new(),
            claims: Vec::new(),
            aggregate: Aggregate::default(),
        }
    }

    pub fn push_scenario(&mut self, s: ScenarioReport) {
        self.aggregate.add(s.aggregate);
        self.scenarios.push(s);
    }

    pub fn push_claim(&mut self, r: ClaimRecord) {
        self.aggregate.add(Aggregate::of([&r]));
        self.claims.push(r);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.scenarios {
            let _ = writeln!(out, "scenario {} ({})", s.name, s.theory);
            for r in s.records() {
                line(&mut out, r);
            }
        }
        for r in &self.claims {
            line(&mut out, r);
        }
        let a = self.aggregate;
        let _ = writeln!(out, "total: {} pass, {} fail, {} inconclusive", a.pass, a.fail, a.inconclusive);
        out
    }
}

fn verdict(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "true",
        Some(false) => "false",
        None => "none",
    }
}

fn line(out: &mut String, r: &ClaimRecord) {
    let _ = write!(out, "  {:<12} {} [{}] actual={}", r.status.label(), r.id, r.relation, verdict(r.actual));
    if let Some(e) = r.expected {
        let _ = write!(out, " expected={}", verdict(Some(e)));
    }
    let bad: Vec<&str> = r.checks.iter().filter(|c| !c.ok).map(|c| c.name.as_str()).collect();
    if !bad.is_empty() {
        let _ = write!(out, " failed-checks={}", bad.join(","));
    }
    if let Some(err) = r.detail.get("error").and_then(Value::as_str) {
        let _ = write!(out, " error=\"{err}\"");
    }
    out.push('\n');
}

/// Removes every `millis` field, for comparing runs.
pub fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("millis");
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}
