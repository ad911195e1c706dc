//! Evaluation of claims and of the per-scenario invariant checks.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::time::Instant;

use anyhow::{anyhow, bail, Result};
use divcheck_core::amalgam::sample_structure;
use divcheck_core::dividing::{
    divides, forks_witness, nondividing_certificate, Budgets, DividesVerdict, NonDividing, NonDividingCertificate,
};
use divcheck_core::formula::{ExFormula, QfFormula};
use divcheck_core::indep::{a_indep, da_indep, m_big_indep, m_small_indep, SubsetVerdict};
use divcheck_core::literal::{parse_formula, write_elems, write_qf, write_structure};
use divcheck_core::pattern::{ArrayPattern, PatternSet, RowShape};
use divcheck_core::sop::{sop3_witness, Linkage};
use divcheck_core::typespace::{acl, acl_by_duplication, duplication_test, same_type, Duplication};
use divcheck_core::{Elem, FinStructure, TheorySpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::report::{Aggregate, Bounds, Check, ClaimRecord, ScenarioReport, Status};
use crate::scenario::{resolve, BudgetOverrides, Claim, Family, Relation, Scenario};

pub const DEFAULT_ACL_SAMPLE_TRIALS: usize = 50;
pub const DEFAULT_SAMPLE_SIZE: usize = 6;
pub const DEFAULT_DUPLICATION_BOUND: usize = 4;

type NdKey = (Vec<Elem>, Vec<Elem>, BTreeSet<Elem>);

/// What a claim is evaluated against.
pub struct Ctx<'a> {
    pub theory: &'a TheorySpec,
    pub amb: &'a FinStructure,
    pub tuples: &'a BTreeMap<String, Vec<Elem>>,
    pub budgets: Budgets,
    pub trials: Option<usize>,
    pub size_bound: Option<usize>,
    pub seed: u64,
    nd_cache: RefCell<BTreeMap<NdKey, bool>>,
}

impl<'a> Ctx<'a> {
    pub fn new(
        theory: &'a TheorySpec,
        amb: &'a FinStructure,
        tuples: &'a BTreeMap<String, Vec<Elem>>,
        overrides: &BudgetOverrides,
        seed: u64,
    ) -> Ctx<'a> {
        let mut budgets = Budgets::default();
        overrides.apply(&mut budgets);
        Ctx {
            theory,
            amb,
            tuples,
            budgets,
            trials: overrides.trials,
            size_bound: overrides.size_bound,
            seed,
            nd_cache: RefCell::new(BTreeMap::new()),
        }
    }

    fn tuple(&self, text: Option<&str>) -> Result<Vec<Elem>> {
        resolve(self.amb, self.tuples, text.unwrap_or(""))
    }

    fn set(&self, text: Option<&str>) -> Result<BTreeSet<Elem>> {
        Ok(self.tuple(text)?.into_iter().collect())
    }

    fn names(&self, elems: impl IntoIterator<Item = Elem>) -> Vec<String> {
        elems.into_iter().map(|e| self.amb.label(e)).collect()
    }

    fn closure(&self, x: &BTreeSet<Elem>) -> Result<BTreeSet<Elem>> {
        let r = acl(self.theory, self.amb, x, self.budgets.acl_budget).map_err(engine)?;
        if r.budget_hit {
            bail!("acl did not close within {} rounds", self.budgets.acl_budget);
        }
        Ok(r.closure)
    }

    fn nondividing(&self, a: &[Elem], b: &[Elem], base: &BTreeSet<Elem>) -> Result<NonDividing> {
        let nd = nondividing_certificate(self.theory, self.amb, a, b, base, &self.budgets).map_err(engine)?;
        self.nd_cache.borrow_mut().insert((a.to_vec(), b.to_vec(), base.clone()), nd.succeeded());
        Ok(nd)
    }

    fn nondividing_verdict(&self, a: &[Elem], b: &[Elem], base: &BTreeSet<Elem>) -> Result<bool> {
        let key = (a.to_vec(), b.to_vec(), base.clone());
        if let Some(&v) = self.nd_cache.borrow().get(&key) {
            return Ok(v);
        }
        Ok(self.nondividing(a, b, base)?.succeeded())
    }
}

fn engine(e: impl Display) -> anyhow::Error {
    anyhow!("{e}")
}

struct Outcome {
    verdict: bool,
    checks: Vec<Check>,
    detail: Map<String, Value>,
    certificate: Option<Value>,
    /// The search stopped at a budget without reaching a verdict.
    exhausted: bool,
}

impl Outcome {
    fn new(verdict: bool) -> Outcome {
        Outcome { verdict, checks: Vec::new(), detail: Map::new(), certificate: None, exhausted: false }
    }

    fn with(mut self, key: &str, v: impl Into<Value>) -> Outcome {
        self.detail.insert(key.to_string(), v.into());
        self
    }
}

fn args_of(c: &Claim) -> Value {
    let mut m = Map::new();
    let mut put = |k: &str, v: &Option<String>| {
        if let Some(v) = v {
            m.insert(k.to_string(), Value::String(v.clone()));
        }
    };
    put("left", &c.left);
    put("right", &c.right);
    put("base", &c.base);
    put("formula", &c.formula);
    put("closure", &c.closure);
    put("contains", &c.contains);
    put("failing_base", &c.failing_base);
    put("pattern", &c.pattern);
    put("linkage", &c.linkage);
    if !c.disjuncts.is_empty() {
        m.insert("disjuncts".into(), json!(c.disjuncts));
    }
    for (k, v) in [("k", c.k), ("patterns", c.patterns), ("bound", c.bound), ("max_k", c.max_k), ("trials", c.trials), ("n", c.n)] {
        if let Some(v) = v {
            m.insert(k.into(), json!(v));
        }
    }
    if !c.families.is_empty() {
        let fams: Vec<&str> = c.families.iter().map(|f| f.name.as_str()).collect();
        m.insert("families".into(), json!(fams));
    }
    Value::Object(m)
}

/// Evaluates one claim. Engine errors make the record inconclusive.
pub fn evaluate(ctx: &Ctx, claim: &Claim, expected: Option<bool>) -> ClaimRecord {
    let start = Instant::now();
    let result = outcome(ctx, claim);
    let millis = start.elapsed().as_millis() as u64;
    let (actual, status, checks, detail, certificate) = match result {
        Ok(o) => {
            let status = match expected {
                _ if o.exhausted && Some(o.verdict) != expected => Status::Inconclusive,
                None => Status::Reported,
                Some(e) if e == o.verdict && o.checks.iter().all(|c| c.ok) => Status::Pass,
                Some(_) => Status::Fail,
            };
            (Some(o.verdict), status, o.checks, Value::Object(o.detail), o.certificate)
        }
        Err(e) => (None, Status::Inconclusive, Vec::new(), json!({ "error": format!("{e:#}") }), None),
    };
    ClaimRecord {
        id: claim.id.clone(),
        relation: claim.relation.id().to_string(),
        args: args_of(claim),
        expected,
        actual,
        status,
        checks,
        detail,
        certificate,
        bounds: Bounds::from(&ctx.budgets),
        reference: claim.reference.clone(),
        millis,
    }
}

fn outcome(ctx: &Ctx, c: &Claim) -> Result<Outcome> {
    match c.relation {
        Relation::Acl => eval_acl(ctx, c),
        Relation::AclSample => eval_acl_sample(ctx, c),
        Relation::Duplication => eval_duplication(ctx, c),
        Relation::Divides => eval_divides(ctx, c),
        Relation::Nondividing => eval_nondividing(ctx, c),
        Relation::AIndep => {
            let (a, b, base) = (ctx.set(c.left.as_deref())?, ctx.set(c.right.as_deref())?, ctx.set(c.base.as_deref())?);
            Ok(Outcome::new(a_indep(ctx.theory, ctx.amb, &a, &b, &base, ctx.budgets.acl_budget).map_err(engine)?))
        }
        Relation::MIndep | Relation::SmallMIndep => eval_subsets(ctx, c),
        Relation::DaIndep => {
            let a = ctx.tuple(c.left.as_deref())?;
            let (b, base) = (ctx.set(c.right.as_deref())?, ctx.set(c.base.as_deref())?);
            let nd = da_indep(ctx.theory, ctx.amb, &a, &b, &base, &ctx.budgets).map_err(engine)?;
            let mut o = Outcome::new(nd.succeeded());
            o.exhausted = matches!(nd, NonDividing::FailedPattern { exhaustive: false, .. });
            o.certificate = Some(nondividing_json(ctx, &nd));
            Ok(o)
        }
        Relation::ForksWitness => eval_forks(ctx, c),
        Relation::SameType => {
            let (l, r, base) = (ctx.tuple(c.left.as_deref())?, ctx.tuple(c.right.as_deref())?, ctx.set(c.base.as_deref())?);
            Ok(Outcome::new(same_type(ctx.theory, ctx.amb, &l, &r, &base, ctx.budgets.acl_budget).map_err(engine)?))
        }
        Relation::Sop3 => eval_sop3(c),
    }
}

fn eval_acl(ctx: &Ctx, c: &Claim) -> Result<Outcome> {
    let x = ctx.set(c.left.as_deref())?;
    let closure = ctx.closure(&x)?;
    let mut ok = true;
    if let Some(want) = &c.closure {
        ok &= ctx.set(Some(want))? == closure;
    }
    if let Some(want) = &c.contains {
        ok &= ctx.set(Some(want))?.is_subset(&closure);
    }
    Ok(Outcome::new(ok).with("closure", ctx.names(closure)))
}

fn salt(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

fn eval_acl_sample(ctx: &Ctx, c: &Claim) -> Result<Outcome> {
    let trials = c.trials.or(ctx.trials).unwrap_or(DEFAULT_ACL_SAMPLE_TRIALS);
    let bound = c.bound.unwrap_or(DEFAULT_DUPLICATION_BOUND);
    let size = ctx.size_bound.unwrap_or(DEFAULT_SAMPLE_SIZE);
    let t = ctx.theory;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ salt(&c.id));
    let mut failures = 0;
    let mut first = None;
    for trial in 0..trials {
        let s = sample_structure(t, size, &mut rng);
        let consts = s.constant_elements();
        let x: BTreeSet<Elem> = s.elements().filter(|e| !consts.contains(e) && rng.gen_bool(0.5)).collect();
        let want: BTreeSet<Elem> = x.union(&consts).copied().collect();
        let rules = acl(t, &s, &x, ctx.budgets.acl_budget).map_err(engine)?.closure;
        let dup = acl_by_duplication(t, &s, &x, bound).map_err(engine)?;
        if rules != want || dup != want {
            failures += 1;
            first.get_or_insert_with(|| {
                json!({
                    "trial": trial,
                    "structure": write_structure(&s),
                    "x": write_elems(&s, x.iter().copied()),
                    "rules": write_elems(&s, rules.iter().copied()),
                    "duplication": write_elems(&s, dup.iter().copied()),
                })
            });
        }
    }
    let mut o = Outcome::new(failures == 0).with("trials", trials).with("size_bound", size).with("failures", failures);
    o.certificate = first;
    Ok(o)
}

fn single(ctx: &Ctx, text: Option<&str>) -> Result<Elem> {
    match ctx.tuple(text)?.as_slice() {
        [e] => Ok(*e),
        other => bail!("expected one element, got {}", other.len()),
    }
}

fn eval_duplication(ctx: &Ctx, c: &Claim) -> Result<Outcome> {
    let e = single(ctx, c.left.as_deref())?;
    let base = ctx.set(c.base.as_deref())?;
    let bound = c.bound.unwrap_or(DEFAULT_DUPLICATION_BOUND);
    let d = duplication_test(ctx.theory, ctx.amb, e, &base, bound).map_err(engine)?;
    let mut o = Outcome::new(d.is_algebraic());
    match d {
        Duplication::Algebraic(k) => {
            o = o.with("realizations", k);
            if let Some(max) = c.max_k {
                o.checks.push(Check::holds("max_k", k <= max, k));
            }
        }
        Duplication::NotAlgebraicUpTo(b) => o = o.with("not_algebraic_up_to", b),
    }
    Ok(o)
}

fn qf(ctx: &Ctx, text: &str) -> Result<QfFormula> {
    let ex = parse_formula(ctx.amb, text).map_err(engine)?;
    if ex.free != ex.matrix.vars.len() {
        bail!("`{text}` has witness variables");
    }
    Ok(ex.matrix)
}

fn describe_all(set: &PatternSet) -> Vec<String> {
    set.patterns.iter().map(|p| p.describe(&set.shape)).collect()
}

fn divides_json(ctx: &Ctx, phi: &QfFormula, v: &DividesVerdict) -> Value {
    match v {
        DividesVerdict::Divides(cert) => json!({
            "kind": "divides",
            "formula": write_qf(phi, ctx.amb),
            "k": cert.k,
            "pattern": cert.pattern.describe(&cert.shape),
            "pattern_index": cert.pattern_index,
            "reason": cert.reason,
        }),
        DividesVerdict::NoWitnessFound { patterns, k_max, budget_hit } => json!({
            "kind": "no-witness",
            "formula": write_qf(phi, ctx.amb),
            "patterns": patterns,
            "k_max": k_max,
            "budget_hit": budget_hit,
        }),
    }
}

fn eval_divides(ctx: &Ctx, c: &Claim) -> Result<Outcome> {
    let phi = qf(ctx, c.formula.as_deref().ok_or_else(|| anyhow!("divides needs a formula"))?)?;
    let base = ctx.set(c.base.as_deref())?;
    let v = divides(ctx.theory, ctx.amb, &phi, &base, &ctx.budgets).map_err(engine)?;
    let mut o = Outcome::new(v.divides());
    match &v {
        DividesVerdict::Divides(cert) => {
            if let Some(k) = c.k {
                o.checks.push(Check::new("k", k, cert.k));
            }
            if let Some(p) = &c.pattern {
                o.checks.push(Check::new("pattern", p.as_str(), cert.pattern.describe(&cert.shape)));
            }
            o.checks.push(Check::holds("recheck", cert.recheck(ctx.theory, &phi), "joint search repeated"));
        }
        DividesVerdict::NoWitnessFound { budget_hit, .. } => o.exhausted = *budget_hit,
    }
    o.certificate = Some(divides_json(ctx, &phi, &v));
    Ok(o)
}

fn shape_json(ctx: &Ctx, shape: &RowShape) -> Value {
    json!({
        "base": ctx.names(shape.base.iter().copied()),
        "closure": ctx.names(shape.closure.iter().copied()),
        "coords": ctx.names(shape.coords.iter().copied()),
    })
}

fn nondividing_json(ctx: &Ctx, nd: &NonDividing) -> Value {
    match nd {
        NonDividing::Certificate(cert) => {
            let shape = &cert.patterns.shape;
            let src = &shape.source;
            let modes: Vec<Vec<String>> = cert
                .modes
                .iter()
                .map(|m| m.iter().filter(|(x, y)| x != y).map(|(x, y)| format!("{}->{}", src.label(x), src.label(y))).collect())
                .collect();
            let realizations: Vec<Value> = cert
                .realizations
                .iter()
                .map(|r| {
                    json!({
                        "pattern": r.pattern,
                        "modes": r.modes,
                        "identity": r.uses_only_identity(),
                        "structure": write_structure(&r.structure),
                        "left": write_elems(&r.structure, r.left.iter().copied()),
                        "rows": r.rows.iter().map(|row| write_elems(&r.structure, row.iter().copied())).collect::<Vec<_>>(),
                    })
                })
                .collect();
            json!({
                "kind": "nondividing",
                "window": cert.window,
                "length": cert.length,
                "shape": shape_json(ctx, shape),
                "patterns": describe_all(&cert.patterns),
                "modes": modes,
                "realizations": realizations,
                "skipped": cert.skipped,
            })
        }
        NonDividing::FailedPattern { patterns, index, exhaustive, tried } => json!({
            "kind": "failed-pattern",
            "shape": shape_json(ctx, &patterns.shape),
            "patterns": describe_all(patterns),
            "index": index,
            "pattern": patterns.patterns[*index].describe(&patterns.shape),
            "tried": tried,
            "exhaustive": exhaustive,
        }),
    }
}

fn coord(ctx: &Ctx, shape: &RowShape, name: &str) -> Result<usize> {
    let e = ctx.amb.element_by_name(name).ok_or_else(|| anyhow!("unknown element `{name}`"))?;
    shape.coord_index(e).ok_or_else(|| anyhow!("`{name}` is not a row coordinate"))
}

fn in_family(ctx: &Ctx, shape: &RowShape, p: &ArrayPattern, f: &Family) -> Result<bool> {
    for n in &f.constant {
        if !p.constant[coord(ctx, shape, n)?] {
            return Ok(false);
        }
    }
    for n in &f.varying {
        if p.constant[coord(ctx, shape, n)?] {
            return Ok(false);
        }
    }
    let has_link = |text: &str| p.link.iter().any(|l| p.link_name(shape, l) == text);
    if f.with_link.as_deref().is_some_and(|l| !has_link(l)) || f.without_link.as_deref().is_some_and(has_link) {
        return Ok(false);
    }
    let mut constant = 0;
    for n in &f.coords {
        constant += p.constant[coord(ctx, shape, n)?] as usize;
    }
    let varying = f.coords.len() - constant;
    Ok(f.min_constant.is_none_or(|m| constant >= m) && f.min_varying.is_none_or(|m| varying >= m))
}

/// Every pattern in exactly one family, no family empty, and each family's
/// realization requirement met on its non-constant patterns.
fn family_checks(ctx: &Ctx, cert: &NonDividingCertificate, families: &[Family]) -> Result<(Vec<Check>, Value)> {
    let set = &cert.patterns;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); families.len()];
    let mut stray = Vec::new();
    for (i, p) in set.patterns.iter().enumerate() {
        let mut hits = 0;
        for (fi, f) in families.iter().enumerate() {
            if in_family(ctx, &set.shape, p, f)? {
                members[fi].push(i);
                hits += 1;
            }
        }
        if hits != 1 {
            stray.push(json!({ "pattern": p.describe(&set.shape), "families": hits }));
        }
    }
    let mut checks = vec![Check::holds("families partition the patterns", stray.is_empty(), stray)];
    let mut summary = Vec::new();
    for (f, idx) in families.iter().zip(&members) {
        let mut bad = Vec::new();
        for &i in idx {
            let p = &set.patterns[i];
            let Some(want) = f.realization.as_deref() else { continue };
            if p.is_constant_sequence() {
                continue;
            }
            let identity = match cert.realizations.iter().find(|r| r.pattern == i) {
                Some(r) => r.uses_only_identity(),
                None => {
                    bad.push(format!("{}: not realized", p.describe(&set.shape)));
                    continue;
                }
            };
            let ok = match want {
                "identity" => identity,
                "non-identity" => !identity,
                other => bail!("unknown realization requirement `{other}`"),
            };
            if !ok {
                bad.push(p.describe(&set.shape));
            }
        }
        let ok = !idx.is_empty() && bad.is_empty();
        checks.push(Check::holds(&format!("family {}", f.name), ok, json!({ "patterns": idx.len(), "violations": bad })));
        let described: Vec<String> = idx.iter().map(|&i| set.patterns[i].describe(&set.shape)).collect();
        summary.push(json!({ "name": f.name, "patterns": described }));
    }
    Ok((checks, Value::Array(summary)))
}

fn eval_nondividing(ctx: &Ctx, c: &Claim) -> Result<Outcome> {
    let a = ctx.tuple(c.left.as_deref())?;
    let b = ctx.tuple(c.right.as_deref())?;
    let base = ctx.set(c.base.as_deref())?;
    let nd = ctx.nondividing(&a, &b, &base)?;
    let mut o = Outcome::new(nd.succeeded());
    match &nd {
        NonDividing::Certificate(cert) => {
            let ok = cert.recheck(ctx.theory, ctx.amb, &a, &b, &base, ctx.budgets.acl_budget);
            o.checks.push(Check::holds("recheck", ok, "realizations re-checked against the original pair"));
            if let Some(n) = c.patterns {
                o.checks.push(Check::new("patterns", n, cert.patterns.patterns.len()));
            }
            if !c.families.is_empty() {
                let (checks, summary) = family_checks(ctx, cert, &c.families)?;
                o.checks.extend(checks);
                o = o.with("families", summary);
            }
            let shape = &cert.patterns.shape;
            let swapped: Vec<String> = cert
                .realizations
                .iter()
                .filter(|r| !r.uses_only_identity())
                .map(|r| cert.patterns.patterns[r.pattern].describe(shape))
                .collect();
            o = o.with("patterns", cert.patterns.patterns.len()).with("non_identity", swapped).with("skipped", cert.skipped.len());
        }
        NonDividing::FailedPattern { patterns, index, exhaustive, .. } => {
            o.exhausted = !exhaustive;
            if let Some(p) = &c.pattern {
                o.checks.push(Check::new("pattern", p.as_str(), patterns.patterns[*index].describe(&patterns.shape)));
            }
            o = o.with("patterns", patterns.patterns.len());
        }
    }
    o.certificate = Some(nondividing_json(ctx, &nd));
    Ok(o)
}

fn eval_subsets(ctx: &Ctx, c: &Claim) -> Result<Outcome> {
    let (a, b, base) = (ctx.set(c.left.as_deref())?, ctx.set(c.right.as_deref())?, ctx.set(c.base.as_deref())?);
    let SubsetVerdict { holds, failing_base } = if c.relation == Relation::MIndep {
        m_big_indep(ctx.theory, ctx.amb, &a, &b, &base, ctx.budgets.acl_budget)
    } else {
        m_small_indep(ctx.theory, ctx.amb, &a, &b, &base, ctx.budgets.acl_budget)
    }
    .map_err(engine)?;
    let mut o = Outcome::new(holds);
    if let Some(fb) = &failing_base {
        o = o.with("failing_base", ctx.names(fb.iter().copied()));
    }
    if let (Some(want), Some(got)) = (&c.failing_base, &failing_base) {
        let want = ctx.set(Some(want))?;
        o.checks.push(Check::new("failing_base", ctx.names(want), ctx.names(got.iter().copied())));
    }
    Ok(o)
}

fn eval_forks(ctx: &Ctx, c: &Claim) -> Result<Outcome> {
    let text = c.formula.as_deref().ok_or_else(|| anyhow!("forks-witness needs a formula"))?;
    let phi: ExFormula = parse_formula(ctx.amb, text).map_err(engine)?;
    let disjuncts: Vec<QfFormula> = c.disjuncts.iter().map(|d| qf(ctx, d)).collect::<Result<_>>()?;
    let base = ctx.set(c.base.as_deref())?;
    let w = forks_witness(ctx.theory, ctx.amb, &phi, &disjuncts, &base, &ctx.budgets).map_err(engine)?;
    let mut o = Outcome::new(w.holds()).with("entailed", w.entailed);
    if let Some(u) = &w.uncovered {
        o = o.with("uncovered", ctx.names(u.iter().copied()));
    }
    let mut certs = Vec::new();
    for (dj, v) in disjuncts.iter().zip(&w.verdicts) {
        if let (Some(k), DividesVerdict::Divides(cert)) = (c.k, v) {
            o.checks.push(Check::new(&format!("k of {}", write_qf(dj, ctx.amb)), k, cert.k));
        }
        if let DividesVerdict::NoWitnessFound { budget_hit: true, .. } = v {
            o.exhausted = true;
        }
        certs.push(divides_json(ctx, dj, v));
    }
    o.certificate = Some(json!({ "kind": "forks-witness", "disjuncts": certs }));
    Ok(o)
}

fn eval_sop3(c: &Claim) -> Result<Outcome> {
    let n = c.n.ok_or_else(|| anyhow!("sop3 needs n"))?;
    if n < 2 {
        bail!("sop3 needs n ≥ 2");
    }
    let linkage = parse_linkage(c.linkage.as_deref().unwrap_or("ordered"))?;
    let w = sop3_witness(n, linkage);
    let mut o = Outcome::new(w.holds)
        .with("summary", w.summary())
        .with("consistent_cuts", w.consistent_cuts.clone())
        .with("inconsistent_pairs", w.inconsistent_pairs.iter().map(|&(i, j)| vec![i, j]).collect::<Vec<_>>());
    o.certificate = Some(json!({ "kind": "sop3", "structure": write_structure(&w.structure) }));
    Ok(o)
}

pub fn parse_linkage(s: &str) -> Result<Linkage> {
    match s {
        "ordered" => Ok(Linkage::Ordered),
        "complete" => Ok(Linkage::Complete),
        other => bail!("unknown linkage `{other}` (ordered or complete)"),
    }
}

fn invariant(ctx: &Ctx, id: String, relation: &str, reference: &str, f: impl FnOnce() -> Result<(bool, Value)>) -> ClaimRecord {
    let start = Instant::now();
    let r = f();
    let millis = start.elapsed().as_millis() as u64;
    let (actual, status, detail) = match r {
        Ok((v, d)) => (Some(v), if v { Status::Pass } else { Status::Fail }, d),
        Err(e) => (None, Status::Inconclusive, json!({ "error": format!("{e:#}") })),
    };
    ClaimRecord {
        id,
        relation: format!("invariant:{relation}"),
        args: Value::Object(Map::new()),
        expected: Some(true),
        actual,
        status,
        checks: Vec::new(),
        detail,
        certificate: None,
        bounds: Bounds::from(&ctx.budgets),
        reference: reference.to_string(),
        millis,
    }
}

fn label(ctx: &Ctx, elems: impl IntoIterator<Item = Elem>) -> String {
    ctx.names(elems).join(",")
}

/// Instance checks derived from a scenario's claims:
/// nondividing over the base against `acl(C) \ C`; nondividing over `acl(C)`
/// descends to `C`; a certificate implies algebraic independence; a
/// dividing formula true of a tested tuple rules out a certificate.
pub fn invariants(ctx: &Ctx, claims: &[Claim]) -> Result<Vec<ClaimRecord>> {
    let tested = [Relation::Nondividing, Relation::DaIndep, Relation::AIndep, Relation::MIndep, Relation::SmallMIndep];
    let mut pairs: Vec<(Vec<Elem>, BTreeSet<Elem>)> = Vec::new();
    let mut nd_claims: Vec<(Vec<Elem>, Vec<Elem>, BTreeSet<Elem>)> = Vec::new();
    let mut formulas: Vec<(QfFormula, BTreeSet<Elem>)> = Vec::new();
    for c in claims {
        if tested.contains(&c.relation) {
            let p = (ctx.tuple(c.left.as_deref())?, ctx.set(c.base.as_deref())?);
            if !pairs.contains(&p) {
                pairs.push(p);
            }
        }
        match c.relation {
            Relation::Nondividing => {
                nd_claims.push((ctx.tuple(c.left.as_deref())?, ctx.tuple(c.right.as_deref())?, ctx.set(c.base.as_deref())?))
            }
            Relation::Divides | Relation::ForksWitness => {
                let texts = match c.relation {
                    Relation::Divides => c.formula.iter().cloned().collect(),
                    _ => c.disjuncts.clone(),
                };
                for text in texts {
                    let f = (qf(ctx, &text)?, ctx.set(c.base.as_deref())?);
                    if !formulas.contains(&f) {
                        formulas.push(f);
                    }
                }
            }
            _ => {}
        }
    }

    let mut out = Vec::new();
    for (a, base) in &pairs {
        let id = format!("acl-base:{}/{}", label(ctx, a.iter().copied()), label(ctx, base.iter().copied()));
        out.push(invariant(ctx, id, "acl-base", "every tuple is nondividing over C from acl(C)", || {
            let k = ctx.closure(base)?;
            let right: Vec<Elem> = k.difference(base).copied().collect();
            let v = ctx.nondividing_verdict(a, &right, base)?;
            Ok((v, json!({ "right": ctx.names(right) })))
        }));
    }
    for (a, b, base) in &nd_claims {
        let tag = format!("{}/{}/{}", label(ctx, a.iter().copied()), label(ctx, b.iter().copied()), label(ctx, base.iter().copied()));
        out.push(invariant(ctx, format!("acl-base-descent:{tag}"), "acl-base-descent", "nondividing over acl(C) implies nondividing over C", || {
            let k = ctx.closure(base)?;
            let over = ctx.nondividing_verdict(a, b, &k)?;
            let under = ctx.nondividing_verdict(a, b, base)?;
            Ok((!over || under, json!({ "over_closure": over, "over_base": under })))
        }));
        out.push(invariant(ctx, format!("d-implies-a:{tag}"), "d-implies-a", "a nondividing certificate implies algebraic independence", || {
            let nd = ctx.nondividing_verdict(a, b, base)?;
            let aa: BTreeSet<Elem> = a.iter().copied().collect();
            let bb: BTreeSet<Elem> = b.iter().copied().collect();
            let ai = a_indep(ctx.theory, ctx.amb, &aa, &bb, base, ctx.budgets.acl_budget).map_err(engine)?;
            Ok((!nd || ai, json!({ "nondividing": nd, "algebraic": ai })))
        }));
    }
    let mut lefts: Vec<&Vec<Elem>> = Vec::new();
    for (a, _) in &pairs {
        if !lefts.contains(&a) {
            lefts.push(a);
        }
    }
    for (phi, base) in &formulas {
        for &a in &lefts {
            if a.len() != phi.vars.len() || !phi.well_formed(ctx.amb) || !phi.holds(ctx.amb, a) {
                continue;
            }
            let params: Vec<Elem> = phi.params().into_iter().collect();
            let text: String = write_qf(phi, ctx.amb).split_whitespace().collect();
            let id = format!("cross-oracle:{}|{}/{}", text, label(ctx, a.iter().copied()), label(ctx, base.iter().copied()));
            out.push(invariant(ctx, id, "cross-oracle", "a dividing formula satisfied by a excludes a nondividing certificate", || {
                let dv = divides(ctx.theory, ctx.amb, phi, base, &ctx.budgets).map_err(engine)?.divides();
                let nd = ctx.nondividing_verdict(a, &params, base)?;
                Ok((!(dv && nd), json!({ "divides": dv, "nondividing": nd })))
            }));
        }
    }
    Ok(out)
}

pub fn run_scenario(s: &Scenario, overrides: &BudgetOverrides, seed: u64) -> ScenarioReport {
    let layered = s.budgets.layered(overrides);
    let ctx = Ctx::new(&s.theory, &s.amb, &s.tuples, &layered, seed);
    let claims: Vec<ClaimRecord> = s.claims.iter().map(|c| evaluate(&ctx, c, Some(c.expected))).collect();
    let invariants = match invariants(&ctx, &s.claims) {
        Ok(v) => v,
        Err(e) => vec![invariant(&ctx, "invariants".into(), "setup", "", || Err(e))],
    };
    let aggregate = Aggregate::of(claims.iter().chain(&invariants));
    ScenarioReport {
        name: s.name.clone(),
        theory: s.theory.name.clone(),
        description: s.description.clone(),
        claims,
        invariants,
        aggregate,
    }
}
