//! Algebraic closure and quantifier-free type equality.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use thiserror::Error;

use crate::diagram::{relation_complement, Diagram};
use crate::embed::{automorphisms, find_isomorphism};
use crate::structure::{function_closure, generated_set, Atom, Elem, FinStructure, PartialMap, StructureError};
use crate::theory::{AclRule, TheorySpec};

pub const DEFAULT_ACL_BUDGET: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Justification {
    Input,
    Constant,
    Rule(AclRule),
    /// At most this many realizations of the element's type coexist.
    Duplication(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AclResult {
    pub closure: BTreeSet<Elem>,
    pub justifications: BTreeMap<Elem, Justification>,
    pub budget_hit: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("tuples have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("acl did not close within {0} rounds")]
    AclBudget(usize),
}

fn check_elems(amb: &FinStructure, xs: impl IntoIterator<Item = Elem>) -> Result<(), TypeError> {
    for x in xs {
        if !amb.contains(x) {
            return Err(StructureError::UnknownElement(x).into());
        }
    }
    Ok(())
}

/// Least set containing `x` and the constants closed under the theory's
/// acl rules. `budget` bounds the number of rounds.
pub fn acl(t: &TheorySpec, amb: &FinStructure, x: &BTreeSet<Elem>, budget: usize) -> Result<AclResult, TypeError> {
    check_elems(amb, x.iter().copied())?;
    let mut just: BTreeMap<Elem, Justification> = x.iter().map(|&e| (e, Justification::Input)).collect();
    for c in amb.constant_elements() {
        just.entry(c).or_insert(Justification::Constant);
    }
    let mut closure: BTreeSet<Elem> = just.keys().copied().collect();
    let mut rounds = 0;
    loop {
        let mut added: Vec<(Elem, AclRule)> = Vec::new();
        for &rule in &t.acl_rules {
            apply_rule(amb, &closure, rule, &mut added);
        }
        added.retain(|(e, _)| !closure.contains(e));
        if added.is_empty() {
            return Ok(AclResult { closure, justifications: just, budget_hit: false });
        }
        if rounds >= budget {
            return Ok(AclResult { closure, justifications: just, budget_hit: true });
        }
        rounds += 1;
        for (e, r) in added {
            if closure.insert(e) {
                just.insert(e, Justification::Rule(r));
            }
        }
    }
}

fn apply_rule(amb: &FinStructure, closure: &BTreeSet<Elem>, rule: AclRule, out: &mut Vec<(Elem, AclRule)>) {
    match rule {
        AclRule::FunctionClosure => {
            for f in amb.signature().function_ids() {
                for row in amb.function_graph(f) {
                    let (args, v) = row.split_at(row.len() - 1);
                    if args.iter().all(|a| closure.contains(a)) {
                        out.push((v[0], rule));
                    }
                }
            }
        }
        AclRule::PairBasePoints => {
            for &p in closure {
                if let Some((x, y)) = amb.pair_base(p) {
                    out.push((x, rule));
                    out.push((y, rule));
                }
            }
        }
        AclRule::PairsOfClosedPoints => {
            for (&p, &(x, y)) in amb.pairs() {
                if closure.contains(&x) && closure.contains(&y) {
                    out.push((p, rule));
                }
            }
        }
        AclRule::CommonIncidence { m, n } => {
            let sig = amb.signature();
            let Some(i) = sig.relation_id("I") else { return };
            let mut lines_of: BTreeMap<Elem, usize> = BTreeMap::new();
            let mut points_of: BTreeMap<Elem, usize> = BTreeMap::new();
            for t in amb.relation(i) {
                if closure.contains(&t[1]) {
                    *lines_of.entry(t[0]).or_default() += 1;
                }
                if closure.contains(&t[0]) {
                    *points_of.entry(t[1]).or_default() += 1;
                }
            }
            out.extend(lines_of.into_iter().filter(|&(_, c)| c >= n).map(|(p, _)| (p, rule)));
            out.extend(points_of.into_iter().filter(|&(_, c)| c >= m).map(|(l, _)| (l, rule)));
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Duplication {
    Algebraic(usize),
    NotAlgebraicUpTo(usize),
}

impl Duplication {
    pub fn is_algebraic(self) -> bool {
        matches!(self, Duplication::Algebraic(_))
    }
}

/// Counts how many realizations of the quantifier-free type of `e` over `b`
/// can coexist in a class member, by adding disjoint copies of the part of
/// the structure generated by `e` that lies outside the function closure of
/// `b`.
pub fn duplication_test(
    t: &TheorySpec,
    amb: &FinStructure,
    e: Elem,
    b: &BTreeSet<Elem>,
    bound: usize,
) -> Result<Duplication, TypeError> {
    check_elems(amb, b.iter().copied().chain([e]))?;
    if b.contains(&e) || amb.is_constant(e) {
        return Ok(Duplication::Algebraic(1));
    }
    let mut p = function_closure(amb, b, DEFAULT_ACL_BUDGET)?;
    if p.contains(&e) {
        return Ok(Duplication::Algebraic(1));
    }
    // Base points of pairs over `b` stay movable only when testing them.
    let generated = generated_set(amb, &p, DEFAULT_ACL_BUDGET)?;
    if !generated.contains(&e) {
        p = generated;
    }
    let mut gens = p.clone();
    gens.insert(e);
    let s_set = generated_set(amb, &gens, DEFAULT_ACL_BUDGET)?;
    let s = amb.induced(&s_set);
    let fixed: BTreeSet<Elem> = s.universe().into_iter().filter(|x| p.contains(x)).collect();
    let block: BTreeSet<Elem> = s.universe().difference(&fixed).copied().collect();

    let orbit: BTreeSet<Elem> = automorphisms(&s, &PartialMap::identity(fixed.iter().copied()), usize::MAX)
        .iter()
        .filter_map(|m| m.get(e))
        .collect();
    let orbit = orbit.len().max(1);

    let block_atoms: Vec<Atom> = s.atoms().filter(|a| a.elems().iter().any(|x| block.contains(x))).collect();
    let elems: Vec<Elem> = s.elements().collect();
    let negs = relation_complement(&s, &elems, &block);

    let mut d = Diagram::positive(s.clone());
    for a in &negs {
        d.add_neg(a.clone());
    }
    let mut blocks = 1;
    loop {
        if orbit * blocks > bound {
            return Ok(Duplication::NotAlgebraicUpTo(bound));
        }
        let mut map: BTreeMap<Elem, Elem> = BTreeMap::new();
        for &x in &block {
            let fresh = d.pos.add_element(s.sort_of(x).expect("block element"));
            map.insert(x, fresh);
        }
        let rename = |y: Elem| map.get(&y).copied().unwrap_or(y);
        let mut clash = false;
        for a in &block_atoms {
            if d.add_pos(&a.map(rename)).is_err() {
                clash = true;
            }
        }
        for a in &negs {
            d.add_neg(a.map(rename));
        }
        if clash || !t.completable(&d) {
            return Ok(Duplication::Algebraic(orbit * blocks));
        }
        blocks += 1;
    }
}

/// Closure of `x` under single-step algebraicity as judged by
/// [`duplication_test`], iterated to a fixed point.
pub fn acl_by_duplication(
    t: &TheorySpec,
    amb: &FinStructure,
    x: &BTreeSet<Elem>,
    bound: usize,
) -> Result<BTreeSet<Elem>, TypeError> {
    let mut cur: BTreeSet<Elem> = x.clone();
    cur.extend(amb.constant_elements());
    loop {
        let mut grew = false;
        for e in amb.elements() {
            if !cur.contains(&e) && duplication_test(t, amb, e, &cur, bound)?.is_algebraic() {
                cur.insert(e);
                grew = true;
            }
        }
        if !grew {
            return Ok(cur);
        }
    }
}

pub(crate) fn closed(t: &TheorySpec, s: &FinStructure, x: &BTreeSet<Elem>, budget: usize) -> Result<BTreeSet<Elem>, TypeError> {
    let r = acl(t, s, x, budget)?;
    if r.budget_hit {
        return Err(TypeError::AclBudget(budget));
    }
    Ok(r.closure)
}

/// Whether `left` in `s1` and `right` in `s2` have the same type over `b`:
/// an isomorphism `acl(b ∪ left) → acl(b ∪ right)` fixing `b` pointwise and
/// sending `left` to `right`. The elements of `b` carry the same ids in both
/// structures. Constants and the rest of `acl(b)` may move.
pub fn same_type_across(
    t: &TheorySpec,
    s1: &FinStructure,
    left: &[Elem],
    s2: &FinStructure,
    right: &[Elem],
    b: &BTreeSet<Elem>,
    budget: usize,
) -> Result<bool, TypeError> {
    if left.len() != right.len() {
        return Err(TypeError::LengthMismatch(left.len(), right.len()));
    }
    check_elems(s1, left.iter().copied().chain(b.iter().copied()))?;
    check_elems(s2, right.iter().copied().chain(b.iter().copied()))?;
    let mut pinned: BTreeMap<Elem, Elem> = b.iter().map(|&x| (x, x)).collect();
    for (&l, &r) in left.iter().zip(right) {
        if *pinned.entry(l).or_insert(r) != r {
            return Ok(false);
        }
    }
    let pinned = PartialMap::from_pairs(pinned);
    if !pinned.is_injective() {
        return Ok(false);
    }
    let mut x1 = b.clone();
    x1.extend(left.iter().copied());
    let mut x2 = b.clone();
    x2.extend(right.iter().copied());
    let k1 = s1.induced(&closed(t, s1, &x1, budget)?);
    let k2 = s2.induced(&closed(t, s2, &x2, budget)?);
    Ok(find_isomorphism(&k1, &k2, &pinned)?.is_some())
}

pub fn same_type(
    t: &TheorySpec,
    amb: &FinStructure,
    left: &[Elem],
    right: &[Elem],
    b: &BTreeSet<Elem>,
    budget: usize,
) -> Result<bool, TypeError> {
    same_type_across(t, amb, left, amb, right, b, budget)
}

/// Elements of `amb` with the same type as `e` over `b`, up to `limit`.
pub fn conjugates(
    t: &TheorySpec,
    amb: &FinStructure,
    e: Elem,
    b: &BTreeSet<Elem>,
    limit: usize,
    budget: usize,
) -> Result<Vec<Elem>, TypeError> {
    check_elems(amb, [e])?;
    let sort = amb.sort_of(e);
    let mut out = Vec::new();
    for x in amb.elements() {
        if out.len() >= limit {
            break;
        }
        if amb.sort_of(x) == sort && same_type(t, amb, &[e], &[x], b, budget)? {
            out.push(x);
        }
    }
    Ok(out)
}
