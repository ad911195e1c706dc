//! Built-in theories as classes of finite structures.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use thiserror::Error;

use crate::cyclic::{find_cyclic_order, triples_of};
use crate::diagram::Diagram;
use crate::structure::{Atom, Elem, FinStructure, FunId, RelId, Signature, SortId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TheoryKind {
    Circular,
    GenericFunction,
    Og,
    Incidence { m: usize, n: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassViolation {
    pub rule: String,
    pub witness: Vec<Elem>,
    pub description: String,
}

pub type CustomCheck = fn(&FinStructure) -> Vec<ClassViolation>;

#[derive(Clone, Debug)]
pub enum Condition {
    /// `0 ≠ 1` and every element of sort C is a constant.
    OgConstants,
    /// `R(·,·,c)` symmetric, irreflexive, and disjoint across colours.
    OgGraphs,
    /// No `o` with `E(o,v,c)`, `E(o,w,c)` for an edge `R(v,w,c)`.
    OgTriangle,
    /// `cyc` atoms extend to a total cyclic order.
    CyclicOrder,
    /// Each function graph is single-valued.
    Functional,
    /// No `m` points all incident to `n` common lines.
    KmnFree { m: usize, n: usize },
    Custom { id: &'static str, check: CustomCheck },
}

impl PartialEq for Condition {
    fn eq(&self, other: &Self) -> bool {
        self.id() == other.id()
    }
}

impl Condition {
    pub fn id(&self) -> &str {
        match self {
            Condition::OgConstants => "og-1",
            Condition::OgGraphs => "og-2",
            Condition::OgTriangle => "og-3",
            Condition::CyclicOrder => "cyc-order",
            Condition::Functional => "functional",
            Condition::KmnFree { .. } => "kmn-free",
            Condition::Custom { id, .. } => id,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum AclRule {
    FunctionClosure,
    PairBasePoints,
    /// A registered pair whose base points are both closed joins.
    PairsOfClosedPoints,
    /// A point on at least `n` closed lines joins; a line through at least
    /// `m` closed points joins.
    CommonIncidence { m: usize, n: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Flags {
    pub free_amalgamation: bool,
    pub functional: bool,
    pub dense_completion: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TheoryError {
    #[error("unknown theory `{0}`")]
    Unknown(String),
    #[error("incidence parameters must be at least 1 (got m={m}, n={n})")]
    BadIncidence { m: usize, n: usize },
    #[error("structure is over a different signature")]
    SignatureMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassError {
    #[error("structure is over a different signature")]
    SignatureMismatch,
    #[error("{}", describe_violations(.0))]
    Violations(Vec<ClassViolation>),
}

fn describe_violations(v: &[ClassViolation]) -> String {
    let parts: Vec<String> = v.iter().map(|c| format!("{}: {}", c.rule, c.description)).collect();
    format!("not in the class ({})", parts.join("; "))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no completion: {reason}")]
pub struct NoCompletion {
    pub reason: String,
    /// Search nodes visited before giving up.
    pub explored: usize,
}

#[derive(Clone, Debug)]
pub struct TheorySpec {
    pub name: String,
    pub kind: TheoryKind,
    pub signature: Arc<Signature>,
    pub conditions: Vec<Condition>,
    pub acl_rules: Vec<AclRule>,
    pub flags: Flags,
}

pub const BUILTIN_NAMES: [&str; 4] = ["circular", "generic-function", "og", "incidence-4-2"];

pub fn builtin(name: &str) -> Result<TheorySpec, TheoryError> {
    match name {
        "circular" => Ok(TheorySpec::circular()),
        "generic-function" | "generic_function" => Ok(TheorySpec::generic_function()),
        "og" => Ok(TheorySpec::og()),
        _ => {
            let rest = name.strip_prefix("incidence-").or_else(|| name.strip_prefix("incidence_"));
            let parsed = rest.and_then(|r| {
                let mut it = r.split(['-', '_']);
                let m = it.next()?.parse().ok()?;
                let n = it.next()?.parse().ok()?;
                it.next().is_none().then_some((m, n))
            });
            match parsed {
                Some((m, n)) => TheorySpec::incidence(m, n),
                None => Err(TheoryError::Unknown(name.to_string())),
            }
        }
    }
}

impl TheorySpec {
    pub fn circular() -> Self {
        let sig = Signature::builder()
            .sort("O")
            .pair_sort("P", "O")
            .relation("cyc", &["O", "O", "O"])
            .build()
            .expect("static signature");
        TheorySpec {
            name: "circular".into(),
            kind: TheoryKind::Circular,
            signature: Arc::new(sig),
            conditions: alloc::vec![Condition::CyclicOrder],
            acl_rules: alloc::vec![AclRule::PairBasePoints, AclRule::PairsOfClosedPoints],
            flags: Flags { dense_completion: true, ..Flags::default() },
        }
    }

    pub fn generic_function() -> Self {
        let sig = Signature::builder()
            .sort("O")
            .pair_sort("P", "O")
            .function("f", &["O", "O"], "O")
            .build()
            .expect("static signature");
        TheorySpec {
            name: "generic-function".into(),
            kind: TheoryKind::GenericFunction,
            signature: Arc::new(sig),
            conditions: alloc::vec![Condition::Functional],
            acl_rules: alloc::vec![
                AclRule::FunctionClosure,
                AclRule::PairBasePoints,
                AclRule::PairsOfClosedPoints
            ],
            flags: Flags { functional: true, ..Flags::default() },
        }
    }

    pub fn og() -> Self {
        let sig = Signature::builder()
            .sort("O")
            .sort("G")
            .sort("C")
            .constant("0", "C")
            .constant("1", "C")
            .relation("R", &["G", "G", "C"])
            .relation("E", &["O", "G", "C"])
            .build()
            .expect("static signature");
        TheorySpec {
            name: "og".into(),
            kind: TheoryKind::Og,
            signature: Arc::new(sig),
            conditions: alloc::vec![Condition::OgConstants, Condition::OgGraphs, Condition::OgTriangle],
            acl_rules: Vec::new(),
            flags: Flags { free_amalgamation: true, ..Flags::default() },
        }
    }

    pub fn incidence(m: usize, n: usize) -> Result<Self, TheoryError> {
        if m < 1 || n < 1 {
            return Err(TheoryError::BadIncidence { m, n });
        }
        let sig = Signature::builder()
            .sort("P")
            .sort("L")
            .relation("I", &["P", "L"])
            .build()
            .expect("static signature");
        Ok(TheorySpec {
            name: format!("incidence-{}-{}", m, n),
            kind: TheoryKind::Incidence { m, n },
            signature: Arc::new(sig),
            conditions: alloc::vec![Condition::KmnFree { m, n }],
            acl_rules: alloc::vec![AclRule::CommonIncidence { m, n }],
            flags: Flags { free_amalgamation: true, ..Flags::default() },
        })
    }

    /// The same theory with the condition `id` removed from its class.
    pub fn without_condition(&self, id: &str) -> Self {
        let mut t = self.clone();
        t.conditions.retain(|c| c.id() != id);
        t.name = format!("{}-without-{}", self.name, id);
        t
    }

    pub fn with_condition(&self, c: Condition) -> Self {
        let mut t = self.clone();
        t.name = format!("{}-with-{}", self.name, c.id());
        t.conditions.push(c);
        t
    }

    fn has(&self, id: &str) -> bool {
        self.conditions.iter().any(|c| c.id() == id)
    }

    pub fn new_structure(&self) -> FinStructure {
        FinStructure::new(self.signature.clone())
    }

    /// A structure holding just the interpretations of the constants.
    pub fn constants_only(&self) -> FinStructure {
        let mut s = self.new_structure();
        for c in self.signature.constant_ids() {
            let sym = self.signature.constant(c);
            let e = s.add_named(sym.sort, &sym.name);
            s.set_constant(c, e).expect("sort matches");
        }
        s
    }

    pub fn violations(&self, s: &FinStructure) -> Vec<ClassViolation> {
        if let Err(e) = s.validate() {
            return alloc::vec![ClassViolation {
                rule: "structure".into(),
                witness: Vec::new(),
                description: e.to_string(),
            }];
        }
        let mut out = Vec::new();
        for c in &self.conditions {
            match c {
                Condition::OgConstants => og_constants(s, &mut out),
                Condition::OgGraphs => og_graphs(s, &mut out),
                Condition::OgTriangle => og_triangle(s, &mut out),
                Condition::CyclicOrder => cyclic_violation(s, &mut out),
                Condition::Functional => functional(s, &mut out),
                Condition::KmnFree { m, n } => kmn_free(s, *m, *n, &mut out),
                Condition::Custom { check, .. } => out.extend(check(s)),
            }
        }
        out
    }

    pub fn in_class(&self, s: &FinStructure) -> Result<(), ClassError> {
        if *s.signature().as_ref() != *self.signature {
            return Err(ClassError::SignatureMismatch);
        }
        let v = self.violations(s);
        if v.is_empty() {
            Ok(())
        } else {
            Err(ClassError::Violations(v))
        }
    }

    pub fn accepts(&self, s: &FinStructure) -> bool {
        self.in_class(s).is_ok()
    }

    /// Completes a partial diagram to a class member that respects its
    /// negative atoms. Circular: total cyclic order on O. Generic function:
    /// missing values sent to one fresh absorbing element. Otherwise the
    /// diagram's least class closure.
    pub fn complete(&self, d: &Diagram, fresh_budget: usize) -> Result<FinStructure, NoCompletion> {
        let fail = |reason: String, explored: usize| NoCompletion { reason, explored };
        if let Some(a) = d.contradiction() {
            return Err(fail(format!("atom {:?} asserted and denied", a), 0));
        }
        let mut s = d.pos.clone();
        if let Err(e) = s.validate() {
            return Err(fail(e.to_string(), 0));
        }
        let mut explored = 0;
        if self.has("og-2") {
            symmetrize_og(&mut s);
        }
        if self.has("cyc-order") {
            let cyc = s.signature().relation_id("cyc").expect("circular signature");
            let o = s.signature().sort_id("O").expect("circular signature");
            let points: BTreeSet<Elem> = s.elements_of_sort(o).collect();
            let pos: Vec<[Elem; 3]> = s.relation(cyc).iter().map(|t| [t[0], t[1], t[2]]).collect();
            let neg: Vec<[Elem; 3]> = d
                .neg
                .iter()
                .filter_map(|a| match a {
                    Atom::Rel(r, t) if *r == cyc => Some([t[0], t[1], t[2]]),
                    _ => None,
                })
                .collect();
            let found = find_cyclic_order(&points, &pos, &neg);
            explored += found.nodes;
            let Some(order) = found.order else {
                return Err(fail("no cyclic order satisfies the diagram".into(), explored));
            };
            for t in pos {
                s.remove_relation(cyc, &t);
            }
            for t in triples_of(&order) {
                s.add_relation(cyc, t.to_vec()).expect("sorts checked");
            }
        }
        if self.flags.functional {
            let mut v = Vec::new();
            functional(&s, &mut v);
            if let Some(first) = v.first() {
                return Err(fail(first.description.clone(), explored));
            }
            if !fill_functions(&mut s, fresh_budget) {
                return Err(fail("fresh element budget exhausted".into(), explored));
            }
        }
        let v = self.violations(&s);
        if let Some(first) = v.first() {
            return Err(fail(format!("{}: {}", first.rule, first.description), explored));
        }
        if let Some(a) = d.neg.iter().find(|a| s.holds(a)) {
            return Err(fail(format!("completion forces denied atom {:?}", a), explored));
        }
        Ok(s)
    }

    pub fn completable(&self, d: &Diagram) -> bool {
        self.complete(d, 1).is_ok()
    }

    pub fn complete_in_class(&self, s: &FinStructure, fresh_budget: usize, _seed: u64) -> Result<FinStructure, NoCompletion> {
        self.complete(&Diagram::positive(s.clone()), fresh_budget)
    }
}

fn og_ids(s: &FinStructure) -> Option<(RelId, RelId, Option<Elem>, Option<Elem>)> {
    let sig = s.signature();
    let r = sig.relation_id("R")?;
    let e = sig.relation_id("E")?;
    let zero = sig.constant_id("0").and_then(|c| s.constant(c));
    let one = sig.constant_id("1").and_then(|c| s.constant(c));
    Some((r, e, zero, one))
}

fn og_constants(s: &FinStructure, out: &mut Vec<ClassViolation>) {
    let Some((_, _, zero, one)) = og_ids(s) else { return };
    if let (Some(z), Some(o)) = (zero, one) {
        if z == o {
            out.push(ClassViolation { rule: "og-1".into(), witness: alloc::vec![z], description: "0 = 1".into() });
        }
    }
    let c = s.signature().sort_id("C").expect("og signature");
    for e in s.elements_of_sort(c) {
        if Some(e) != zero && Some(e) != one {
            out.push(ClassViolation {
                rule: "og-1".into(),
                witness: alloc::vec![e],
                description: format!("{} in C is neither 0 nor 1", s.label(e)),
            });
        }
    }
}

fn og_graphs(s: &FinStructure, out: &mut Vec<ClassViolation>) {
    let Some((r, _, _, _)) = og_ids(s) else { return };
    for t in s.relation(r) {
        let (v, w, c) = (t[0], t[1], t[2]);
        if v == w {
            out.push(ClassViolation {
                rule: "og-2".into(),
                witness: alloc::vec![v, c],
                description: format!("R({0},{0},{1}) is reflexive", s.label(v), s.label(c)),
            });
        }
        if !s.relation(r).contains(&alloc::vec![w, v, c]) {
            out.push(ClassViolation {
                rule: "og-2".into(),
                witness: alloc::vec![v, w, c],
                description: format!("R({},{},{}) is not symmetric", s.label(v), s.label(w), s.label(c)),
            });
        }
    }
    for t in s.relation(r) {
        let (v, w, c) = (t[0], t[1], t[2]);
        for u in s.relation(r).range(alloc::vec![v, w]..) {
            if u[0] != v || u[1] != w {
                break;
            }
            if u[2] > c {
                out.push(ClassViolation {
                    rule: "og-2".into(),
                    witness: alloc::vec![v, w, c, u[2]],
                    description: format!(
                        "R({},{},·) holds for both {} and {}",
                        s.label(v),
                        s.label(w),
                        s.label(c),
                        s.label(u[2])
                    ),
                });
            }
        }
    }
}

fn og_triangle(s: &FinStructure, out: &mut Vec<ClassViolation>) {
    let Some((r, e, _, _)) = og_ids(s) else { return };
    let mut by_target: BTreeMap<(Elem, Elem), Vec<Elem>> = BTreeMap::new();
    for t in s.relation(e) {
        by_target.entry((t[1], t[2])).or_default().push(t[0]);
    }
    for t in s.relation(r) {
        let (v, w, c) = (t[0], t[1], t[2]);
        if v > w {
            continue;
        }
        let (Some(ov), Some(ow)) = (by_target.get(&(v, c)), by_target.get(&(w, c))) else { continue };
        for o in ov {
            if ow.contains(o) {
                out.push(ClassViolation {
                    rule: "og-3".into(),
                    witness: alloc::vec![*o, v, w, c],
                    description: format!(
                        "E({0},{1},{3}), E({0},{2},{3}) with R({1},{2},{3})",
                        s.label(*o),
                        s.label(v),
                        s.label(w),
                        s.label(c)
                    ),
                });
            }
        }
    }
}

fn cyclic_violation(s: &FinStructure, out: &mut Vec<ClassViolation>) {
    let Some(cyc) = s.signature().relation_id("cyc") else { return };
    let Some(o) = s.signature().sort_id("O") else { return };
    let points: BTreeSet<Elem> = s.elements_of_sort(o).collect();
    let mut pos: Vec<[Elem; 3]> = s.relation(cyc).iter().map(|t| [t[0], t[1], t[2]]).collect();
    if find_cyclic_order(&points, &pos, &[]).order.is_some() {
        return;
    }
    // Shrink to an inclusion-minimal infeasible set of atoms.
    let mut i = 0;
    while i < pos.len() {
        let mut rest = pos.clone();
        rest.remove(i);
        if find_cyclic_order(&points, &rest, &[]).order.is_none() {
            pos = rest;
        } else {
            i += 1;
        }
    }
    let witness: BTreeSet<Elem> = pos.iter().flatten().copied().collect();
    let shown: Vec<String> = pos
        .iter()
        .map(|t| format!("cyc({},{},{})", s.label(t[0]), s.label(t[1]), s.label(t[2])))
        .collect();
    out.push(ClassViolation {
        rule: "cyc-order".into(),
        witness: witness.into_iter().collect(),
        description: format!("no total cyclic order satisfies {}", shown.join(", ")),
    });
}

fn functional(s: &FinStructure, out: &mut Vec<ClassViolation>) {
    let sig = s.signature().clone();
    for f in sig.function_ids() {
        let g = s.function_graph(f);
        let mut prev: Option<&Vec<Elem>> = None;
        for row in g {
            if let Some(p) = prev {
                let n = row.len() - 1;
                if p[..n] == row[..n] {
                    let mut w = row[..n].to_vec();
                    w.push(p[n]);
                    w.push(row[n]);
                    let args: Vec<String> = row[..n].iter().map(|&e| s.label(e)).collect();
                    out.push(ClassViolation {
                        rule: "functional".into(),
                        witness: w,
                        description: format!(
                            "{}({}) has values {} and {}",
                            sig.function(f).name,
                            args.join(","),
                            s.label(p[n]),
                            s.label(row[n])
                        ),
                    });
                }
            }
            prev = Some(row);
        }
    }
}

fn kmn_free(s: &FinStructure, m: usize, n: usize, out: &mut Vec<ClassViolation>) {
    let sig = s.signature();
    let (Some(i), Some(p), Some(l)) = (sig.relation_id("I"), sig.sort_id("P"), sig.sort_id("L")) else { return };
    let lines: Vec<Elem> = s.elements_of_sort(l).collect();
    let points: Vec<Elem> = s.elements_of_sort(p).collect();
    let inc = s.relation(i);
    for combo in combinations(&lines, n) {
        let common: Vec<Elem> = points
            .iter()
            .copied()
            .filter(|&pt| combo.iter().all(|&ln| inc.contains(&alloc::vec![pt, ln])))
            .collect();
        if common.len() >= m {
            let mut w: Vec<Elem> = common[..m].to_vec();
            w.extend(combo.iter().copied());
            out.push(ClassViolation {
                rule: "kmn-free".into(),
                witness: w,
                description: format!("{} points incident to {} common lines", common.len(), n),
            });
        }
    }
}

pub(crate) fn combinations(items: &[Elem], k: usize) -> Vec<Vec<Elem>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(items: &[Elem], k: usize, start: usize, cur: &mut Vec<Elem>, out: &mut Vec<Vec<Elem>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut cur, &mut out);
    out
}

fn symmetrize_og(s: &mut FinStructure) {
    let Some(r) = s.signature().relation_id("R") else { return };
    let extra: Vec<Vec<Elem>> = s.relation(r).iter().map(|t| alloc::vec![t[1], t[0], t[2]]).collect();
    for t in extra {
        let _ = s.add_relation(r, t);
    }
}

/// Makes every function total, sending missing values to one fresh
/// absorbing element per result sort. Returns false if fresh elements are
/// needed but `fresh_budget` is zero.
fn fill_functions(s: &mut FinStructure, fresh_budget: usize) -> bool {
    let sig = s.signature().clone();
    let mut missing: Vec<(FunId, Vec<Elem>)> = Vec::new();
    for f in sig.function_ids() {
        let sym = sig.function(f);
        let pools: Vec<Vec<Elem>> = sym.args.iter().map(|&so| s.elements_of_sort(so).collect()).collect();
        crate::diagram::for_each_tuple(&pools, &mut |t| {
            if s.function_value(f, t).is_none() {
                missing.push((f, t.to_vec()));
            }
        });
    }
    if missing.is_empty() {
        return true;
    }
    if fresh_budget == 0 {
        return false;
    }
    let mut sinks: BTreeMap<SortId, Elem> = BTreeMap::new();
    for f in sig.function_ids() {
        let res = sig.function(f).result;
        sinks.entry(res).or_insert_with(|| s.add_named(res, "⊥"));
    }
    for (f, args) in missing {
        let res = sig.function(f).result;
        s.set_function(f, args, sinks[&res]).expect("sorts match");
    }
    // Entries involving the sinks themselves.
    for f in sig.function_ids() {
        let sym = sig.function(f);
        let pools: Vec<Vec<Elem>> = sym.args.iter().map(|&so| s.elements_of_sort(so).collect()).collect();
        let mut todo = Vec::new();
        crate::diagram::for_each_tuple(&pools, &mut |t| {
            if s.function_value(f, t).is_none() {
                todo.push(t.to_vec());
            }
        });
        for t in todo {
            s.set_function(f, t, sinks[&sym.result]).expect("sorts match");
        }
    }
    true
}
