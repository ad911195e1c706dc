//! Randomized cross-checks: the joint-consistency solver against exhaustive
//! enumeration and its monotonicity, and canonical codes against an
//! embedding search.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::amalgam::sample_structure;
use crate::canon::canonical_code;
use crate::cyclic::triples_of;
use crate::diagram::{for_each_tuple, Diagram};
use crate::dividing::{joint_consistent, Joint};
use crate::embed::find_embeddings;
use crate::literal::write_structure;
use crate::formula::{Literal, QfFormula, Term};
use crate::pattern::{enumerate_patterns, instantiate, ArrayPattern, Instance, RowShape};
use crate::structure::{Atom, Elem, FinStructure, PartialMap, SortId};
use crate::theory::{TheoryKind, TheorySpec};
use crate::typespace::DEFAULT_ACL_BUDGET;

/// Instances larger than this are not enumerated.
pub const MAX_ROWS: usize = 4;
pub const MAX_FRESH: usize = 5;
const MAX_OPEN_ATOMS: usize = 16;
const MAX_POINTS: usize = 8;

/// One joint-consistency question: `phi` against `k` rows of a pattern.
#[derive(Clone, Debug)]
pub struct JointCase {
    pub theory: TheorySpec,
    pub shape: RowShape,
    pub pattern: ArrayPattern,
    pub phi: QfFormula,
    pub k: usize,
}

impl JointCase {
    pub fn describe(&self) -> String {
        format!(
            "{} k={} pattern [{}] phi {:?}",
            self.theory.name,
            self.k,
            self.pattern.describe(&self.shape),
            self.phi.literals
        )
    }

    pub fn with_formula(&self, phi: QfFormula) -> JointCase {
        JointCase { phi, ..self.clone() }
    }

    pub fn with_rows(&self, k: usize) -> JointCase {
        JointCase { k, ..self.clone() }
    }

    /// `None` when the solver rejects the question itself.
    pub fn solve(&self) -> Option<Joint> {
        joint_consistent(&self.theory, &self.shape, &self.pattern, &self.phi, self.k).ok()
    }

    /// Elements outside `acl(C)` in the instance, counting one per variable.
    pub fn fresh_count(&self) -> Option<usize> {
        let inst = instantiate(&self.shape, &self.pattern, self.k).ok()?;
        Some(inst.diagram.pos.len() - self.shape.closure.len() + self.phi.vars.len())
    }
}

pub fn oracle_theories() -> Vec<TheorySpec> {
    alloc::vec![
        TheorySpec::og(),
        TheorySpec::incidence(4, 2).expect("valid parameters"),
        TheorySpec::circular(),
        TheorySpec::generic_function(),
    ]
}

fn random_ambient(t: &TheorySpec, rng: &mut ChaCha8Rng) -> Option<FinStructure> {
    let sig = t.signature.clone();
    match t.kind {
        TheoryKind::GenericFunction => {
            let o = sig.sort_id("O")?;
            let f = sig.function_id("f")?;
            let mut s = t.new_structure();
            let n = rng.gen_range(2..=4);
            let pts: Vec<Elem> = (0..n).map(|i| s.add_named(o, &format!("o{i}"))).collect();
            for &x in &pts {
                for &y in &pts {
                    let v = *pts.choose(rng)?;
                    s.set_function(f, alloc::vec![x, y], v).ok()?;
                }
            }
            t.accepts(&s).then_some(s)
        }
        _ => {
            let mut s = sample_structure(t, 4, rng);
            if let (TheoryKind::Circular, Some(p)) = (&t.kind, sig.sort_id("P")) {
                let o = sig.sort_id("O")?;
                let pts: Vec<Elem> = s.elements_of_sort(o).collect();
                if pts.len() >= 2 && rng.gen_bool(0.3) {
                    let two: Vec<Elem> = pts.choose_multiple(rng, 2).copied().collect();
                    s.add_pair(p, two[0], two[1]).ok()?;
                }
            }
            Some(s)
        }
    }
}

fn term_of_sort(
    sort: SortId,
    vars: &[SortId],
    params: &[Elem],
    src: &FinStructure,
    rng: &mut ChaCha8Rng,
) -> Option<Term> {
    let vs: Vec<usize> = (0..vars.len()).filter(|&i| vars[i] == sort).collect();
    let ps: Vec<Elem> = params.iter().copied().filter(|&e| src.sort_of(e) == Some(sort)).collect();
    if !vs.is_empty() && (ps.is_empty() || rng.gen_bool(0.6)) {
        return vs.choose(rng).map(|&i| Term::Var(i));
    }
    ps.choose(rng).map(|&e| Term::Param(e))
}

/// A random literal over the variables and the elements of `src`.
pub fn random_literal(t: &TheorySpec, vars: &[SortId], src: &FinStructure, rng: &mut ChaCha8Rng) -> Option<Literal> {
    let sig = t.signature.clone();
    let params: Vec<Elem> = src.elements().filter(|&e| !sig.is_pair_sort(src.sort_of(e).expect("element"))).collect();
    let positive = rng.gen_bool(0.5);
    let relational: Vec<_> = sig.relation_ids().collect();
    let functional: Vec<_> = sig.function_ids().collect();
    for _ in 0..8 {
        if rng.gen_bool(0.15) {
            let i = rng.gen_range(0..vars.len());
            let right = term_of_sort(vars[i], vars, &params, src, rng)?;
            return Some(Literal::Eq { left: Term::Var(i), right, positive });
        }
        if !relational.is_empty() && (functional.is_empty() || rng.gen_bool(0.5)) {
            let rel = *relational.choose(rng)?;
            let args: Option<Vec<Term>> =
                sig.relation(rel).arity.iter().map(|&so| term_of_sort(so, vars, &params, src, rng)).collect();
            if let Some(args) = args {
                return Some(Literal::Rel { rel, args, positive });
            }
        } else if let Some(&fun) = functional.choose(rng) {
            let sym = sig.function(fun);
            let args: Option<Vec<Term>> = sym.args.iter().map(|&so| term_of_sort(so, vars, &params, src, rng)).collect();
            let value = term_of_sort(sym.result, vars, &params, src, rng);
            if let (Some(args), Some(value)) = (args, value) {
                return Some(Literal::Fun { fun, args, value, positive });
            }
        }
    }
    None
}

/// A random case: ambient, parameters, base, pattern, formula and row count.
pub fn random_case(t: &TheorySpec, max_rows: usize, rng: &mut ChaCha8Rng) -> Option<JointCase> {
    let amb = random_ambient(t, rng)?;
    let sig = t.signature.clone();
    let consts = amb.constant_elements();
    let pool: Vec<Elem> = amb.elements().filter(|e| !consts.contains(e)).collect();
    if pool.is_empty() {
        return None;
    }
    let nparams = rng.gen_range(1..=pool.len().min(2));
    let params: BTreeSet<Elem> = pool.choose_multiple(rng, nparams).copied().collect();
    let rest: Vec<Elem> = pool.iter().copied().filter(|e| !params.contains(e)).collect();
    let base: BTreeSet<Elem> = match rest.choose(rng) {
        Some(&e) if rng.gen_bool(0.3) => [e].into_iter().collect(),
        _ => BTreeSet::new(),
    };
    let shape = RowShape::new(t, &amb, &base, &params, DEFAULT_ACL_BUDGET).ok()?;
    if shape.coords.len() > 4 {
        return None;
    }
    let set = enumerate_patterns(t, &shape, 3, 2000);
    let pattern = set.patterns.choose(rng)?.clone();
    let sorts: Vec<SortId> = sig.sort_ids().filter(|&so| !sig.is_pair_sort(so) && sig.constants().iter().all(|c| c.sort != so)).collect();
    let nvars = if rng.gen_bool(0.25) { 2 } else { 1 };
    let vars: Vec<SortId> = (0..nvars).map(|_| *sorts.choose(rng).expect("sorts")).collect();
    let nlits = rng.gen_range(1..=3);
    let literals: Vec<Literal> = (0..nlits).filter_map(|_| random_literal(t, &vars, &shape.source, rng)).collect();
    let k = rng.gen_range(1..=max_rows);
    Some(JointCase { theory: t.clone(), shape, pattern, phi: QfFormula::new(vars, literals), k })
}

#[derive(Clone, Copy)]
enum Value {
    Existing(Elem),
    Fresh(usize),
}

/// Every map from the variables to array elements or fresh elements.
fn assignments(case: &JointCase, inst: &Instance) -> Vec<Vec<Value>> {
    let vars = &case.phi.vars;
    let mut out = alloc::vec![Vec::new()];
    for &so in vars {
        let mut opts: Vec<Value> = inst.diagram.pos.elements_of_sort(so).map(Value::Existing).collect();
        opts.extend((0..vars.len()).map(Value::Fresh));
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<Value>| {
                opts.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

/// The array diagram plus `phi` grounded in every row under `values`, or
/// `None` when an equality literal fails.
fn ground(case: &JointCase, inst: &Instance, values: &[Value]) -> Option<Diagram> {
    let phi = &case.phi;
    let mut d = inst.diagram.clone();
    let mut fresh: BTreeMap<usize, Elem> = BTreeMap::new();
    let mut assign = Vec::new();
    for (i, v) in values.iter().enumerate() {
        assign.push(match *v {
            Value::Existing(e) => e,
            Value::Fresh(j) => {
                let e = *fresh.entry(j).or_insert_with(|| d.pos.add_named(phi.vars[i], &format!("v{j}")));
                if d.pos.sort_of(e) != Some(phi.vars[i]) {
                    return None;
                }
                e
            }
        });
    }
    for row in &inst.rows {
        for l in &phi.literals {
            let g = l.map_terms(|t| match t {
                Term::Var(i) => Term::Param(assign[i]),
                Term::Param(p) => Term::Param(row[&p]),
            });
            if let Literal::Eq { .. } = g {
                if !g.holds(&d.pos, &[]) {
                    return None;
                }
                continue;
            }
            let atom = g.atom(&[]).expect("not an equality");
            if g.positive() {
                d.add_pos(&atom).ok()?;
            } else {
                d.add_neg(atom);
            }
        }
    }
    (d.contradiction().is_none()).then_some(d)
}

fn respects(t: &TheorySpec, s: &FinStructure, d: &Diagram) -> bool {
    d.pos.atoms().all(|a| s.holds(&a)) && !d.neg.iter().any(|a| s.holds(a)) && t.accepts(s)
}

fn some_completion_relational(t: &TheorySpec, d: &Diagram) -> Option<bool> {
    let sig = d.pos.signature().clone();
    let mut open = Vec::new();
    for r in sig.relation_ids() {
        let pools: Vec<Vec<Elem>> = sig.relation(r).arity.iter().map(|&so| d.pos.elements_of_sort(so).collect()).collect();
        for_each_tuple(&pools, &mut |tu| {
            let a = Atom::Rel(r, tu.to_vec());
            if !d.pos.holds(&a) && !d.neg.contains(&a) {
                open.push(a);
            }
        });
    }
    if open.len() > MAX_OPEN_ATOMS {
        return None;
    }
    for mask in 0u32..(1 << open.len()) {
        let mut s = d.pos.clone();
        for (i, a) in open.iter().enumerate() {
            if mask & (1 << i) != 0 {
                s.add_atom(a).expect("sorts match");
            }
        }
        if respects(t, &s, d) {
            return Some(true);
        }
    }
    Some(false)
}

fn permutations(rest: &mut Vec<Elem>, seq: &mut Vec<Elem>, f: &mut dyn FnMut(&[Elem]) -> bool) -> bool {
    if rest.is_empty() {
        return f(seq);
    }
    for i in 0..rest.len() {
        let e = rest.remove(i);
        seq.push(e);
        let stop = permutations(rest, seq, f);
        seq.pop();
        rest.insert(i, e);
        if stop {
            return true;
        }
    }
    false
}

fn some_completion_cyclic(t: &TheorySpec, d: &Diagram) -> Option<bool> {
    let sig = d.pos.signature().clone();
    let cyc = sig.relation_id("cyc")?;
    let o = sig.sort_id("O")?;
    let points: Vec<Elem> = d.pos.elements_of_sort(o).collect();
    if points.len() > MAX_POINTS {
        return None;
    }
    let Some((&first, rest)) = points.split_first() else {
        return Some(respects(t, &d.pos, d));
    };
    let mut base = d.pos.clone();
    for tu in d.pos.relation(cyc).clone() {
        base.remove_relation(cyc, &tu);
    }
    let mut rest = rest.to_vec();
    let found = permutations(&mut rest, &mut alloc::vec![first], &mut |seq| {
        let mut s = base.clone();
        for tr in triples_of(seq) {
            s.add_relation(cyc, tr.to_vec()).expect("sorts match");
        }
        respects(t, &s, d)
    });
    Some(found)
}

/// Exhaustive answer to `case`: some class member extends the instance and
/// satisfies the grounded formula in every row. `None` when the case is
/// too large or the theory has function symbols.
pub fn brute_joint(case: &JointCase) -> Option<bool> {
    let t = &case.theory;
    if !t.signature.functions().is_empty() || case.k > MAX_ROWS || case.fresh_count()? > MAX_FRESH {
        return None;
    }
    let inst = match instantiate(&case.shape, &case.pattern, case.k) {
        Ok(i) => i,
        Err(_) => return Some(false),
    };
    let mut any_unknown = false;
    for values in assignments(case, &inst) {
        let Some(d) = ground(case, &inst, &values) else { continue };
        let found = match t.kind {
            TheoryKind::Circular => some_completion_cyclic(t, &d),
            _ => some_completion_relational(t, &d),
        };
        match found {
            Some(true) => return Some(true),
            Some(false) => {}
            None => any_unknown = true,
        }
    }
    if any_unknown {
        None
    } else {
        Some(false)
    }
}

/// Tally of a randomized agreement check.
#[derive(Clone, Debug, Default)]
pub struct Agreement {
    pub compared: usize,
    pub skipped: usize,
    pub disagreements: Vec<String>,
}

impl Agreement {
    pub fn passed(&self, wanted: usize) -> bool {
        self.compared >= wanted && self.disagreements.is_empty()
    }
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
}

/// Compares `joint_consistent` with [`brute_joint`] on `wanted` small cases
/// drawn from the relational theories.
pub fn brute_force_suite(wanted: usize, seed: u64) -> Agreement {
    let theories: Vec<TheorySpec> = oracle_theories().into_iter().filter(|t| t.signature.functions().is_empty()).collect();
    let mut rng = rng_for(seed, 1);
    let mut out = Agreement::default();
    let mut attempts = 0;
    while out.compared < wanted && attempts < wanted * 50 {
        attempts += 1;
        let t = &theories[attempts % theories.len()];
        let Some(case) = random_case(t, MAX_ROWS, &mut rng) else {
            out.skipped += 1;
            continue;
        };
        let (Some(fast), Some(slow)) = (case.solve(), brute_joint(&case)) else {
            out.skipped += 1;
            continue;
        };
        out.compared += 1;
        if fast.is_consistent() != slow {
            out.disagreements.push(format!("solver {} vs enumeration {}: {}", fast.is_consistent(), slow, case.describe()));
        }
    }
    out
}

/// Outcome of the monotonicity checks. A premise is an inconsistent case.
#[derive(Clone, Debug, Default)]
pub struct Monotonicity {
    pub instances: usize,
    pub literal_premises: usize,
    pub row_premises: usize,
    pub violations: Vec<String>,
}

impl Monotonicity {
    pub fn passed(&self, wanted: usize) -> bool {
        self.instances >= wanted && self.violations.is_empty()
    }
}

/// Adding literals or rows never turns an inconsistent case consistent.
pub fn monotonicity_suite(wanted: usize, seed: u64) -> Monotonicity {
    let theories = oracle_theories();
    let mut rng = rng_for(seed, 2);
    let mut out = Monotonicity::default();
    let mut attempts = 0;
    while out.instances < wanted && attempts < wanted * 50 {
        attempts += 1;
        let t = &theories[attempts % theories.len()];
        let Some(case) = random_case(t, 3, &mut rng) else { continue };
        let Some(base) = case.solve() else { continue };
        let Some(extra) = random_literal(t, &case.phi.vars, &case.shape.source, &mut rng) else { continue };
        let stronger = case.with_formula(case.phi.with_literal(extra));
        let longer = case.with_rows(case.k + 1);
        let (Some(s), Some(l)) = (stronger.solve(), longer.solve()) else { continue };
        out.instances += 1;
        if base.is_consistent() {
            continue;
        }
        out.literal_premises += 1;
        out.row_premises += 1;
        if s.is_consistent() {
            out.violations.push(format!("extra literal restores consistency: {}", stronger.describe()));
        }
        if l.is_consistent() {
            out.violations.push(format!("extra row restores consistency: {}", longer.describe()));
        }
    }
    out
}

/// A copy of `s` with shuffled element ids.
pub fn relabel(s: &FinStructure, rng: &mut ChaCha8Rng) -> FinStructure {
    let sig = s.signature().clone();
    let mut out = FinStructure::new(sig.clone());
    let mut plain: Vec<Elem> = s.elements().filter(|&e| s.pair_base(e).is_none()).collect();
    let mut pairs: Vec<Elem> = s.pairs().keys().copied().collect();
    plain.shuffle(rng);
    pairs.shuffle(rng);
    let mut map = BTreeMap::new();
    for e in plain {
        map.insert(e, out.add_element(s.sort_of(e).expect("element")));
    }
    for p in pairs {
        let (x, y) = s.pair_base(p).expect("pair");
        let q = out.add_pair(s.sort_of(p).expect("element"), map[&x], map[&y]).expect("fresh pair");
        map.insert(p, q);
    }
    for c in sig.constant_ids() {
        if let Some(e) = s.constant(c) {
            out.set_constant(c, map[&e]).expect("sorts match");
        }
    }
    for a in s.atoms() {
        if !matches!(a, Atom::Pair(..)) {
            out.add_atom(&a.map(|e| map[&e])).expect("sorts match");
        }
    }
    out
}

/// `s` with one relation tuple toggled or one function value changed.
fn mutate(s: &FinStructure, rng: &mut ChaCha8Rng) -> FinStructure {
    let sig = s.signature().clone();
    let mut out = s.clone();
    if let Some(r) = sig.relation_ids().collect::<Vec<_>>().choose(rng).copied() {
        let pools: Vec<Vec<Elem>> = sig.relation(r).arity.iter().map(|&so| s.elements_of_sort(so).collect()).collect();
        let mut all = Vec::new();
        for_each_tuple(&pools, &mut |tu| all.push(tu.to_vec()));
        if let Some(tu) = all.choose(rng) {
            if !out.remove_relation(r, tu) {
                out.add_relation(r, tu.clone()).expect("sorts match");
            }
        }
    } else if let Some(f) = sig.function_ids().next() {
        let graph: Vec<Vec<Elem>> = s.function_graph(f).iter().cloned().collect();
        let res = sig.function(f).result;
        let targets: Vec<Elem> = s.elements_of_sort(res).collect();
        if let (Some(row), Some(&v)) = (graph.choose(rng), targets.choose(rng)) {
            let (args, _) = row.split_at(row.len() - 1);
            let mut fresh = FinStructure::new(sig.clone());
            for e in s.elements().filter(|&e| s.pair_base(e).is_none()) {
                fresh.insert_element(e, s.sort_of(e).expect("element")).expect("unused id");
            }
            for (&p, &(x, y)) in s.pairs() {
                fresh.insert_element(p, s.sort_of(p).expect("element")).expect("unused id");
                fresh.register_pair(p, x, y).expect("base points present");
            }
            for a in s.atoms() {
                match &a {
                    Atom::Fun(g, xs, _) if *g == f && xs.as_slice() == args => {
                        fresh.set_function(f, args.to_vec(), v).expect("sorts match");
                    }
                    Atom::Pair(..) => {}
                    _ => {
                        fresh.add_atom(&a).expect("sorts match");
                    }
                }
            }
            out = fresh;
        }
    }
    out
}

fn isomorphic_by_search(a: &FinStructure, b: &FinStructure) -> bool {
    a.len() == b.len()
        && a.atom_count() == b.atom_count()
        && find_embeddings(a, b, &PartialMap::new(), 1).is_ok_and(|v| !v.is_empty())
}

/// Equal canonical codes exactly when an embedding search finds an
/// isomorphism, over pairs that are relabelings, one-atom mutations or
/// independent samples.
pub fn canonical_suite(wanted: usize, seed: u64) -> Agreement {
    let theories = oracle_theories();
    let mut rng = rng_for(seed, 3);
    let mut out = Agreement::default();
    let mut attempts = 0;
    while out.compared < wanted && attempts < wanted * 20 {
        attempts += 1;
        let t = &theories[attempts % theories.len()];
        let Some(a) = random_ambient(t, &mut rng) else {
            out.skipped += 1;
            continue;
        };
        let b = match rng.gen_range(0..3) {
            0 => relabel(&a, &mut rng),
            1 => {
                let m = mutate(&a, &mut rng);
                relabel(&m, &mut rng)
            }
            _ => match random_ambient(t, &mut rng) {
                Some(b) => b,
                None => {
                    out.skipped += 1;
                    continue;
                }
            },
        };
        out.compared += 1;
        let by_code = canonical_code(&a) == canonical_code(&b);
        let by_search = isomorphic_by_search(&a, &b);
        if by_code != by_search {
            out.disagreements.push(format!(
                "{}: codes equal {} but isomorphic {}\n{}---\n{}",
                t.name,
                by_code,
                by_search,
                write_structure(&a),
                write_structure(&b)
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relabel_is_isomorphic() {
        let mut rng = rng_for(7, 0);
        for t in oracle_theories() {
            let a = random_ambient(&t, &mut rng).expect("ambient");
            let b = relabel(&a, &mut rng);
            assert!(isomorphic_by_search(&a, &b), "{}", t.name);
            assert_eq!(canonical_code(&a), canonical_code(&b), "{}", t.name);
        }
    }

    #[test]
    fn small_suites_agree() {
        let b = brute_force_suite(20, 1);
        assert!(b.passed(20), "{:?}", b);
        let m = monotonicity_suite(20, 1);
        assert!(m.passed(20), "{:?}", m);
        let c = canonical_suite(20, 1);
        assert!(c.passed(20), "{:?}", c);
    }
}
