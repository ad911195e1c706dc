//! Argument parsing and command dispatch.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use divcheck_core::amalgam::{axiom_suite, Axiom};
use divcheck_core::literal::{parse_formula, parse_structure, write_elems};
use divcheck_core::typespace::acl_by_duplication;
use divcheck_core::{builtin, FinStructure, TheorySpec};
use serde_json::{json, Value};

use crate::eval::{evaluate, parse_linkage, run_scenario, Ctx, DEFAULT_DUPLICATION_BOUND};
use crate::report::{Bounds, Check, ClaimRecord, Report, Status};
use crate::scenario::{self, catalog, BudgetOverrides, Claim, Relation};

pub const EXIT_USAGE: i32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "divcheck", version, about = "Bounded checks of dividing, algebraic closure and free amalgamation")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// Seed for sampled claims and suites.
    #[arg(long, env = "DIVCHECK_SEED", default_value_t = 0, global = true)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BudgetArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub window: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k_max: Option<u64>,
    /// Array length for nondividing certificates.
    #[arg(long, short = 'L', value_parser = clap::value_parser!(u64).range(1..))]
    pub length: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub pattern_budget: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub acl_budget: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub mode_cap: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub validity_length: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub size_bound: Option<u64>,
}

impl BudgetArgs {
    fn overrides(&self) -> Result<BudgetOverrides> {
        let u = |v: Option<u64>| v.map(|v| v as usize);
        if let Some(w) = self.window.filter(|&w| w != 2) {
            bail!("only window 2 is supported (got {w})");
        }
        Ok(BudgetOverrides {
            window: u(self.window),
            k_max: u(self.k_max),
            length: u(self.length),
            pattern_budget: u(self.pattern_budget),
            acl_budget: u(self.acl_budget),
            mode_cap: u(self.mode_cap),
            validity_length: u(self.validity_length),
            trials: u(self.trials),
            size_bound: u(self.size_bound),
        })
    }
}

/// Where the configuration comes from: a shipped scenario or a theory plus a
/// structure file.
#[derive(Debug, Clone, Args)]
pub struct Input {
    #[arg(long, conflicts_with_all = ["theory", "structure"])]
    pub scenario: Option<String>,
    #[arg(long, requires = "structure")]
    pub theory: Option<String>,
    #[arg(long, requires = "theory")]
    pub structure: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the shipped scenarios.
    List,
    /// Evaluate a scenario's claims and invariant checks.
    Run {
        #[arg(required_unless_present = "all", conflicts_with = "all")]
        scenario: Option<String>,
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        budgets: BudgetArgs,
    },
    /// Evaluate one relation on a configuration.
    Check {
        relation: String,
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        left: Option<String>,
        #[arg(long)]
        right: Option<String>,
        #[arg(long)]
        base: Option<String>,
        #[arg(long)]
        formula: Option<String>,
        #[arg(long = "disjunct")]
        disjuncts: Vec<String>,
        #[arg(long)]
        bound: Option<usize>,
        #[arg(long)]
        expect: Option<bool>,
        #[command(flatten)]
        budgets: BudgetArgs,
    },
    /// Randomized suites.
    Suite {
        #[command(subcommand)]
        suite: SuiteCommand,
    },
    /// Algebraic closure by the rules, cross-checked by duplication.
    Acl {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "")]
        set: String,
        #[arg(long, default_value_t = DEFAULT_DUPLICATION_BOUND)]
        bound: usize,
        #[command(flatten)]
        budgets: BudgetArgs,
    },
    /// Whether two tuples have the same type over a base.
    SameType {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[arg(long, default_value = "")]
        base: String,
        #[arg(long)]
        expect: Option<bool>,
        #[command(flatten)]
        budgets: BudgetArgs,
    },
    /// The two-formula strict order witness in og.
    Sop3 {
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        n: u64,
        #[arg(long, default_value = "ordered")]
        linkage: String,
        /// Defaults to true for the ordered linkage and false otherwise.
        #[arg(long)]
        expect: Option<bool>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SuiteCommand {
    /// Sampled checks of the independence axioms for a free amalgamation theory.
    Axioms {
        theory: String,
        #[arg(long, default_value = "all")]
        axiom: String,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 5)]
        size: usize,
        /// Drop a class condition before sampling, e.g. og-3.
        #[arg(long)]
        without: Option<String>,
        /// Failures that make the suite exit 0, for self-tests of a broken theory.
        #[arg(long)]
        expect_failure: bool,
    },
}

/// Errors in the request itself rather than in a verdict.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(e: anyhow::Error) -> anyhow::Error {
    anyhow::Error::new(Usage(format!("{e:#}")))
}

pub fn theory_by_name(name: &str) -> Result<TheorySpec> {
    builtin(name).map_err(|e| anyhow!("{e} (known: {})", divcheck_core::theory::BUILTIN_NAMES.join(", ")))
}

struct Loaded {
    theory: TheorySpec,
    amb: FinStructure,
    tuples: BTreeMap<String, Vec<divcheck_core::Elem>>,
    budgets: BudgetOverrides,
}

fn load_input(input: &Input) -> Result<Loaded> {
    if let Some(name) = &input.scenario {
        let s = scenario::load(name)?;
        return Ok(Loaded { theory: s.theory, amb: s.amb, tuples: s.tuples, budgets: s.budgets });
    }
    let (Some(t), Some(path)) = (&input.theory, &input.structure) else {
        bail!("give --scenario or both --theory and --structure");
    };
    let theory = theory_by_name(t)?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let amb = parse_structure(theory.signature.clone(), &text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    theory.in_class(&amb).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    Ok(Loaded { theory, amb, tuples: BTreeMap::new(), budgets: BudgetOverrides::default() })
}

/// Parses `argv` and runs the command, writing the report to `out`.
/// Returns the process exit code.
pub fn run(argv: Vec<OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let command: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(&cli, command) {
        Ok(Output::Report(report)) => {
            let text = match cli.format {
                Format::Json => report.to_json(),
                Format::Text => report.to_text(),
            };
            let _ = out.write_all(text.as_bytes());
            report.aggregate.exit_code()
        }
        Ok(Output::Text(text)) => {
            let _ = out.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            if e.is::<Usage>() {
                EXIT_USAGE
            } else {
                1
            }
        }
    }
}

enum Output {
    Report(Report),
    Text(String),
}

fn dispatch(cli: &Cli, command: Vec<String>) -> Result<Output> {
    let mut report = Report::new(command, cli.seed);
    match &cli.command {
        Command::List => {
            let names = catalog();
            if cli.format == Format::Json {
                let list: Vec<Value> = names
                    .iter()
                    .map(|n| {
                        let s = scenario::load(n).expect("shipped scenario");
                        json!({ "name": n, "theory": s.theory.name, "claims": s.claims.len(), "description": s.description })
                    })
                    .collect();
                return Ok(Output::Text(serde_json::to_string_pretty(&list)? + "\n"));
            }
            return Ok(Output::Text(names.iter().map(|n| format!("{n}\n")).collect()));
        }
        Command::Run { scenario, all, budgets } => {
            let overrides = budgets.overrides().map_err(usage)?;
            let names: Vec<String> = if *all {
                catalog().into_iter().map(String::from).collect()
            } else {
                vec![scenario.clone().expect("required by clap")]
            };
            for n in &names {
                let s = scenario::load(n).map_err(usage)?;
                report.push_scenario(run_scenario(&s, &overrides, cli.seed));
            }
        }
        Command::Check { relation, input, left, right, base, formula, disjuncts, bound, expect, budgets } => {
            let rel = Relation::parse(relation).ok_or_else(|| Usage(format!("unknown relation `{relation}`")))?;
            let l = load_input(input).map_err(usage)?;
            let overrides = l.budgets.layered(&budgets.overrides().map_err(usage)?);
            let mut claim = Claim::bare(&format!("check-{relation}"), rel, expect.unwrap_or(true));
            claim.left = left.clone();
            claim.right = right.clone();
            claim.base = base.clone();
            claim.formula = formula.clone();
            claim.disjuncts = disjuncts.clone();
            claim.bound = *bound;
            claim.reference = format!("ad hoc {relation} check");
            for text in [left, right, base].into_iter().flatten() {
                scenario::resolve(&l.amb, &l.tuples, text).map_err(usage)?;
            }
            for text in formula.iter().chain(disjuncts) {
                parse_formula(&l.amb, text).map_err(|e| Usage(format!("formula `{text}`: {e}")))?;
            }
            let ctx = Ctx::new(&l.theory, &l.amb, &l.tuples, &overrides, cli.seed);
            report.push_claim(evaluate(&ctx, &claim, *expect));
        }
        Command::Suite { suite: SuiteCommand::Axioms { theory, axiom, trials, size, without, expect_failure } } => {
            let mut t = theory_by_name(theory).map_err(usage)?;
            if let Some(cond) = without {
                if !t.conditions.iter().any(|c| c.id() == cond) {
                    return Err(usage(anyhow!("{} has no condition `{cond}`", t.name)));
                }
                t = t.without_condition(cond);
            }
            let axioms: Vec<Axiom> = if axiom == "all" {
                Axiom::ALL.to_vec()
            } else {
                vec![Axiom::parse(axiom).ok_or_else(|| Usage(format!("unknown axiom `{axiom}`")))?]
            };
            let mut failures = 0;
            let mut records = Vec::new();
            for a in axioms {
                let start = std::time::Instant::now();
                let r = axiom_suite(&t, a, *trials, *size, cli.seed).map_err(|e| usage(anyhow!("{e}")))?;
                failures += r.failures.len();
                let dumps: Vec<Value> =
                    r.failures.iter().take(3).map(|f| json!({ "detail": f.detail, "instance": f.instance.dump() })).collect();
                records.push(ClaimRecord {
                    id: format!("axiom-{}", a.id()),
                    relation: format!("axiom:{}", a.id()),
                    args: json!({ "theory": t.name, "trials": trials, "size": size }),
                    expected: Some(true),
                    actual: Some(r.passed()),
                    status: if r.passed() { Status::Pass } else { Status::Fail },
                    checks: vec![Check::holds("failures recheck", r.recheck(&t), r.failures.len())],
                    detail: json!({ "trials": r.trials, "vacuous": r.vacuous, "failures": r.failures.len() }),
                    certificate: (!dumps.is_empty()).then(|| Value::Array(dumps)),
                    bounds: Bounds::from(&divcheck_core::dividing::Budgets::default()),
                    reference: format!("{} holds on sampled configurations", a.id()),
                    millis: start.elapsed().as_millis() as u64,
                });
            }
            if *expect_failure {
                let found = failures > 0;
                for r in &mut records {
                    r.expected = None;
                    r.status = Status::Reported;
                }
                let mut claim = records[0].clone();
                claim.checks.clear();
                claim.certificate = None;
                claim.args = json!({ "theory": t.name, "trials": trials, "size": size, "axiom": axiom });
                claim.id = "self-test".into();
                claim.relation = "suite:expect-failure".into();
                claim.expected = Some(true);
                claim.actual = Some(found);
                claim.status = if found { Status::Pass } else { Status::Fail };
                claim.reference = "the broken theory shows at least one axiom failure".into();
                claim.detail = json!({ "failures": failures });
                records.insert(0, claim);
            }
            for r in records {
                report.push_claim(r);
            }
        }
        Command::Acl { input, set, bound, budgets } => {
            let l = load_input(input).map_err(usage)?;
            scenario::resolve(&l.amb, &l.tuples, set).map_err(usage)?;
            let overrides = l.budgets.layered(&budgets.overrides().map_err(usage)?);
            let ctx = Ctx::new(&l.theory, &l.amb, &l.tuples, &overrides, cli.seed);
            let mut claim = Claim::bare("acl", Relation::Acl, true);
            claim.left = Some(set.clone());
            claim.reference = "closure by the rules".into();
            let mut r = evaluate(&ctx, &claim, None);
            let x = scenario::resolve(&l.amb, &l.tuples, set)?.into_iter().collect();
            let dup = acl_by_duplication(&l.theory, &l.amb, &x, *bound).map_err(|e| anyhow!("{e}"))?;
            let dup_names: Vec<String> = dup.iter().map(|&e| l.amb.label(e)).collect();
            let rules = r.detail.get("closure").cloned().unwrap_or(Value::Null);
            let check = Check::new("duplication oracle", dup_names, rules);
            r.status = if check.ok { Status::Pass } else { Status::Fail };
            r.expected = Some(true);
            r.actual = Some(check.ok);
            r.checks.push(check);
            r.detail["duplication_bound"] = json!(bound);
            r.detail["closure_text"] = json!(write_elems(&l.amb, dup.iter().copied()));
            report.push_claim(r);
        }
        Command::SameType { input, left, right, base, expect, budgets } => {
            let l = load_input(input).map_err(usage)?;
            for text in [left, right, base] {
                scenario::resolve(&l.amb, &l.tuples, text).map_err(usage)?;
            }
            let overrides = l.budgets.layered(&budgets.overrides().map_err(usage)?);
            let ctx = Ctx::new(&l.theory, &l.amb, &l.tuples, &overrides, cli.seed);
            let mut claim = Claim::bare("same-type", Relation::SameType, true);
            claim.left = Some(left.clone());
            claim.right = Some(right.clone());
            claim.base = Some(base.clone());
            claim.reference = "equality of types over the base".into();
            report.push_claim(evaluate(&ctx, &claim, *expect));
        }
        Command::Sop3 { n, linkage, expect } => {
            let link = parse_linkage(linkage).map_err(usage)?;
            let expected = expect.unwrap_or(link == divcheck_core::sop::Linkage::Ordered);
            let mut claim = Claim::bare(&format!("sop3-n{n}-{linkage}"), Relation::Sop3, expected);
            claim.n = Some(*n as usize);
            claim.linkage = Some(linkage.clone());
            claim.reference = "consistent cuts and inconsistent crossed pairs".into();
            let tuples = BTreeMap::new();
            let t = TheorySpec::og();
            let amb = t.constants_only();
            let ctx = Ctx::new(&t, &amb, &tuples, &BudgetOverrides::default(), cli.seed);
            report.push_claim(evaluate(&ctx, &claim, Some(expected)));
        }
    }
    Ok(Output::Report(report))
}
