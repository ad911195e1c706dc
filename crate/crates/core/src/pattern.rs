//! Two-row linkage patterns approximating indiscernible sequences.
//!
//! A row is a copy of `acl(C b)` over `K = acl(C)`, which stays fixed
//! pointwise. Each coordinate of `acl(C b) \ K` is either shared by all rows
//! or fresh in every row, and the pattern lists which cross-row relation
//! atoms hold between row `i` and row `j` for `i < j`. Cross-row function
//! entries are not prescribed; completion chooses them.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::canon::canonical_code_colored;
use crate::diagram::{for_each_tuple, relation_complement, Diagram};
use crate::structure::{Atom, Elem, FinStructure, RelId};
use crate::theory::TheorySpec;
use crate::typespace::{acl, TypeError};

/// One row of an array: base, its closure and the row coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowShape {
    pub base: BTreeSet<Elem>,
    /// `acl(C)`, fixed pointwise in every row.
    pub closure: BTreeSet<Elem>,
    /// `acl(C b) \ acl(C)`, as elements of the ambient structure.
    pub coords: Vec<Elem>,
    /// The ambient structure induced on `closure ∪ coords`.
    pub source: FinStructure,
}

impl RowShape {
    pub fn new(
        t: &TheorySpec,
        amb: &FinStructure,
        base: &BTreeSet<Elem>,
        params: &BTreeSet<Elem>,
        acl_budget: usize,
    ) -> Result<RowShape, TypeError> {
        let k = acl(t, amb, base, acl_budget)?;
        if k.budget_hit {
            return Err(TypeError::AclBudget(acl_budget));
        }
        let mut x = base.clone();
        x.extend(params.iter().copied());
        let kb = acl(t, amb, &x, acl_budget)?;
        if kb.budget_hit {
            return Err(TypeError::AclBudget(acl_budget));
        }
        let coords: Vec<Elem> = kb.closure.difference(&k.closure).copied().collect();
        let source = amb.induced(&kb.closure);
        Ok(RowShape { base: base.clone(), closure: k.closure, coords, source })
    }

    pub fn coord_index(&self, e: Elem) -> Option<usize> {
        self.coords.iter().position(|&c| c == e)
    }

    pub fn coord_name(&self, i: usize) -> String {
        self.source.label(self.coords[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Slot {
    Base(Elem),
    /// A coordinate constant across rows.
    Shared(u16),
    /// Coordinate `.1` of the earlier (`0`) or later (`1`) row.
    Row(u8, u16),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct LinkAtom {
    pub rel: RelId,
    pub slots: Vec<Slot>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrayPattern {
    /// Per coordinate of the row shape: shared by all rows.
    pub constant: Vec<bool>,
    /// Cross-row atoms that hold for each `i < j`; all other cross-row
    /// relation atoms fail.
    pub link: Vec<LinkAtom>,
}

impl ArrayPattern {
    pub fn slot_name(&self, shape: &RowShape, s: Slot) -> String {
        match s {
            Slot::Base(e) => shape.source.label(e),
            Slot::Shared(i) => format!("{}@*", shape.coord_name(i as usize)),
            Slot::Row(r, i) => format!("{}@{}", shape.coord_name(i as usize), r),
        }
    }

    pub fn link_name(&self, shape: &RowShape, l: &LinkAtom) -> String {
        let sig = shape.source.signature();
        let args: Vec<String> = l.slots.iter().map(|&s| self.slot_name(shape, s)).collect();
        format!("{}({})", sig.relation(l.rel).name, args.join(","))
    }

    pub fn describe(&self, shape: &RowShape) -> String {
        let consts: Vec<String> =
            (0..shape.coords.len()).filter(|&i| self.constant[i]).map(|i| shape.coord_name(i)).collect();
        let links: Vec<String> = self.link.iter().map(|l| self.link_name(shape, l)).collect();
        format!("constant {{{}}}; links {{{}}}", consts.join(","), links.join(","))
    }

    pub fn is_constant_sequence(&self) -> bool {
        self.constant.iter().all(|&c| c)
    }
}

/// A finite array built from a pattern: the partial diagram and, per row,
/// the map from source elements to instance elements.
#[derive(Clone, Debug)]
pub struct Instance {
    pub diagram: Diagram,
    pub rows: Vec<BTreeMap<Elem, Elem>>,
}

impl Instance {
    pub fn row_image(&self, i: usize, tuple: &[Elem]) -> Vec<Elem> {
        tuple.iter().map(|e| self.rows[i][e]).collect()
    }
}

/// The array diagram is contradictory before completion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Inconsistent(pub String);

/// Cross-row relation tuples over the slots of a constancy vector.
pub fn cross_candidates(shape: &RowShape, constant: &[bool]) -> Vec<LinkAtom> {
    let sig = shape.source.signature().clone();
    let mut slots: Vec<(Slot, Elem)> = shape.closure.iter().map(|&e| (Slot::Base(e), e)).collect();
    for (i, &c) in shape.coords.iter().enumerate() {
        if constant[i] {
            slots.push((Slot::Shared(i as u16), c));
        } else {
            slots.push((Slot::Row(0, i as u16), c));
            slots.push((Slot::Row(1, i as u16), c));
        }
    }
    let mut out = Vec::new();
    for r in sig.relation_ids() {
        let arity = &sig.relation(r).arity;
        // Pools carry slot indices encoded as elements.
        let pools: Vec<Vec<Elem>> = arity
            .iter()
            .map(|&so| {
                (0..slots.len())
                    .filter(|&i| shape.source.sort_of(slots[i].1) == Some(so))
                    .map(|i| Elem(i as u32))
                    .collect()
            })
            .collect();
        for_each_tuple(&pools, &mut |t| {
            let ss: Vec<Slot> = t.iter().map(|e| slots[e.0 as usize].0).collect();
            let early = ss.iter().any(|s| matches!(s, Slot::Row(0, _)));
            let late = ss.iter().any(|s| matches!(s, Slot::Row(1, _)));
            if early && late {
                out.push(LinkAtom { rel: r, slots: ss });
            }
        });
    }
    out
}

struct Builder<'a> {
    shape: &'a RowShape,
    constant: &'a [bool],
}

impl Builder<'_> {
    /// `k` rows; `decided` gives truth values for the cross candidates
    /// (undecided ones are left open).
    fn build(&self, candidates: &[LinkAtom], decided: &[Option<bool>], k: usize) -> Result<Instance, Inconsistent> {
        let shape = self.shape;
        let src = &shape.source;
        let mut pos = src.induced(&shape.closure);
        let mut shared: BTreeMap<usize, Elem> = BTreeMap::new();
        for (i, &c) in shape.coords.iter().enumerate() {
            if self.constant[i] {
                let e = pos.add_named(src.sort_of(c).expect("coord"), &format!("{}@*", src.label(c)));
                shared.insert(i, e);
            }
        }
        let mut rows: Vec<BTreeMap<Elem, Elem>> = Vec::with_capacity(k);
        for r in 0..k {
            let mut m: BTreeMap<Elem, Elem> = shape.closure.iter().map(|&e| (e, e)).collect();
            for (i, &c) in shape.coords.iter().enumerate() {
                let e = match shared.get(&i) {
                    Some(&e) => e,
                    None => pos.add_named(src.sort_of(c).expect("coord"), &format!("{}@{}", src.label(c), r)),
                };
                m.insert(c, e);
            }
            rows.push(m);
        }
        let mut d = Diagram::positive(pos);
        let coord_set: BTreeSet<Elem> = shape.coords.iter().copied().collect();
        let all: Vec<Elem> = src.elements().collect();
        let row_atoms: Vec<Atom> = src.atoms().filter(|a| a.elems().iter().any(|e| coord_set.contains(e))).collect();
        let row_negs = relation_complement(src, &all, &coord_set);
        for m in &rows {
            for a in &row_atoms {
                d.add_pos(&a.map(|e| m[&e])).map_err(|e| Inconsistent(format!("row copies clash: {}", e)))?;
            }
            for a in &row_negs {
                d.add_neg(a.map(|e| m[&e]));
            }
        }
        for i in 0..k {
            for j in i + 1..k {
                for (cand, dec) in candidates.iter().zip(decided) {
                    let Some(truth) = dec else { continue };
                    let tuple: Vec<Elem> = cand
                        .slots
                        .iter()
                        .map(|s| match *s {
                            Slot::Base(e) => e,
                            Slot::Shared(c) => shared[&(c as usize)],
                            Slot::Row(0, c) => rows[i][&shape.coords[c as usize]],
                            Slot::Row(_, c) => rows[j][&shape.coords[c as usize]],
                        })
                        .collect();
                    let atom = Atom::Rel(cand.rel, tuple);
                    if *truth {
                        d.add_pos(&atom).map_err(|e| Inconsistent(format!("{}", e)))?;
                    } else {
                        d.add_neg(atom);
                    }
                }
            }
        }
        if let Some(a) = d.contradiction() {
            return Err(Inconsistent(format!("atom {:?} both required and denied", a)));
        }
        Ok(Instance { diagram: d, rows })
    }
}

/// Builds a `k`-row array for a pattern. Completion is not attempted.
pub fn instantiate(shape: &RowShape, pattern: &ArrayPattern, k: usize) -> Result<Instance, Inconsistent> {
    let candidates = cross_candidates(shape, &pattern.constant);
    let link: BTreeSet<&LinkAtom> = pattern.link.iter().collect();
    let decided: Vec<Option<bool>> = candidates.iter().map(|c| Some(link.contains(c))).collect();
    Builder { shape, constant: &pattern.constant }.build(&candidates, &decided, k)
}

/// A `k`-row array for the pattern that some class member realizes.
pub fn valid_at(t: &TheorySpec, shape: &RowShape, pattern: &ArrayPattern, k: usize) -> bool {
    instantiate(shape, pattern, k).is_ok_and(|inst| t.completable(&inst.diagram))
}

#[derive(Clone, Debug)]
pub struct PatternSet {
    pub shape: RowShape,
    pub patterns: Vec<ArrayPattern>,
    /// Enumeration stopped at the pattern budget.
    pub budget_hit: bool,
    /// Search nodes visited.
    pub explored: usize,
    pub validity_length: usize,
}

/// All patterns realizable as two rows whose `validity_length`-row
/// instantiation is class-consistent, ordered by canonical code.
pub fn enumerate_patterns(t: &TheorySpec, shape: &RowShape, validity_length: usize, pattern_budget: usize) -> PatternSet {
    let n = shape.coords.len();
    let mut found: Vec<(Vec<u8>, ArrayPattern)> = Vec::new();
    let mut explored = 0;
    let mut budget_hit = false;
    'outer: for mask in 0..(1u32 << n) {
        let constant: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
        let candidates = cross_candidates(shape, &constant);
        let b = Builder { shape, constant: &constant };
        let mut decided: Vec<Option<bool>> = alloc::vec![None; candidates.len()];
        let mut leaves = Vec::new();
        let limit = pattern_budget.saturating_sub(found.len());
        search(t, &b, &candidates, &mut decided, 0, &mut explored, &mut leaves, limit);
        for decided in leaves {
            let link: Vec<LinkAtom> = candidates
                .iter()
                .zip(&decided)
                .filter(|(_, d)| **d == Some(true))
                .map(|(c, _)| c.clone())
                .collect();
            let p = ArrayPattern { constant: constant.clone(), link };
            if !valid_at(t, shape, &p, validity_length.max(2)) {
                continue;
            }
            if found.len() >= pattern_budget {
                budget_hit = true;
                break 'outer;
            }
            let code = template_code(shape, &p);
            if found.iter().all(|(c, _)| *c != code) {
                found.push((code, p));
            }
        }
    }
    found.sort_by(|a, b| a.0.cmp(&b.0));
    PatternSet { shape: shape.clone(), patterns: found.into_iter().map(|(_, p)| p).collect(), budget_hit, explored, validity_length }
}

#[allow(clippy::too_many_arguments)]
fn search(
    t: &TheorySpec,
    b: &Builder<'_>,
    candidates: &[LinkAtom],
    decided: &mut Vec<Option<bool>>,
    depth: usize,
    explored: &mut usize,
    leaves: &mut Vec<Vec<Option<bool>>>,
    limit: usize,
) {
    if leaves.len() > limit {
        return;
    }
    *explored += 1;
    let ok = b.build(candidates, decided, 2).is_ok_and(|inst| t.completable(&inst.diagram));
    if !ok {
        return;
    }
    if depth == candidates.len() {
        leaves.push(decided.clone());
        return;
    }
    for v in [false, true] {
        decided[depth] = Some(v);
        search(t, b, candidates, decided, depth + 1, explored, leaves, limit);
    }
    decided[depth] = None;
}

/// Canonical code of the two-row template, with every source element and
/// row position distinguished.
pub fn template_code(shape: &RowShape, p: &ArrayPattern) -> Vec<u8> {
    let inst = instantiate(shape, p, 2).expect("valid pattern");
    let mut colours: BTreeMap<Elem, u32> = BTreeMap::new();
    for (r, m) in inst.rows.iter().enumerate() {
        for (i, (&src, &dst)) in m.iter().enumerate() {
            let shared = shape.coord_index(src).is_some_and(|c| p.constant[c]);
            let row = if shape.closure.contains(&src) || shared { 0 } else { r as u32 + 1 };
            colours.insert(dst, 1 + 3 * i as u32 + row);
        }
    }
    let mut code = alloc::vec![];
    for &c in &p.constant {
        code.push(c as u8);
    }
    code.extend(canonical_code_colored(&inst.diagram.pos, &colours));
    code
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::SortId;

    #[test]
    fn og_vertex_patterns() {
        let t = TheorySpec::og();
        let mut s = t.constants_only();
        let b = s.add_named(SortId(1), "b");
        let c: BTreeSet<Elem> = s.constant_elements();
        let shape = RowShape::new(&t, &s, &c, &[b].into(), 64).unwrap();
        assert_eq!(shape.coords, alloc::vec![b]);
        let ps = enumerate_patterns(&t, &shape, 3, 10_000);
        // Constant, edgeless, R0-clique, R1-clique.
        assert_eq!(ps.patterns.len(), 4);
        let clique = ps.patterns.iter().filter(|p| p.link.len() == 2).count();
        assert_eq!(clique, 2);
        for p in &ps.patterns {
            let inst = instantiate(&shape, p, 3).unwrap();
            assert_eq!(inst.rows.len(), 3);
        }
    }
}
