//! Partial diagrams: positive facts as a structure plus a set of atoms
//! required to be false.

use alloc::collections::BTreeSet;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::structure::{Atom, Elem, FinStructure, Signature, SortId, StructureError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagram {
    pub pos: FinStructure,
    pub neg: BTreeSet<Atom>,
}

impl Diagram {
    pub fn new(sig: Arc<Signature>) -> Self {
        Diagram { pos: FinStructure::new(sig), neg: BTreeSet::new() }
    }

    pub fn positive(s: FinStructure) -> Self {
        Diagram { pos: s, neg: BTreeSet::new() }
    }

    pub fn add_pos(&mut self, a: &Atom) -> Result<bool, StructureError> {
        self.pos.add_atom(a)
    }

    pub fn add_neg(&mut self, a: Atom) -> bool {
        self.neg.insert(a)
    }

    /// A negative atom that is also asserted positively, if any.
    pub fn contradiction(&self) -> Option<&Atom> {
        self.neg.iter().find(|a| self.pos.holds(a))
    }

    /// Negative atoms hold in `s` only if none of them is true there.
    pub fn negatives_respected(&self, s: &FinStructure) -> bool {
        self.neg.iter().all(|a| !s.holds(a))
    }
}

/// All relation atoms over `elems` (sort-correct) that mention at least one
/// element of `focus` and are false in `s`.
pub fn relation_complement(s: &FinStructure, elems: &[Elem], focus: &BTreeSet<Elem>) -> Vec<Atom> {
    let sig = s.signature().clone();
    let mut out = Vec::new();
    for r in sig.relation_ids() {
        let arity = &sig.relation(r).arity;
        let pools: Vec<Vec<Elem>> = arity
            .iter()
            .map(|&so| elems.iter().copied().filter(|&e| s.sort_of(e) == Some(so)).collect())
            .collect();
        for_each_tuple(&pools, &mut |t| {
            if t.iter().any(|e| focus.contains(e)) {
                let a = Atom::Rel(r, t.to_vec());
                if !s.holds(&a) {
                    out.push(a);
                }
            }
        });
    }
    out
}

/// Calls `f` on every tuple of the cartesian product of `pools`.
pub fn for_each_tuple(pools: &[Vec<Elem>], f: &mut dyn FnMut(&[Elem])) {
    let mut cur = Vec::with_capacity(pools.len());
    rec(pools, &mut cur, f);
    fn rec(pools: &[Vec<Elem>], cur: &mut Vec<Elem>, f: &mut dyn FnMut(&[Elem])) {
        if cur.len() == pools.len() {
            f(cur);
            return;
        }
        for &e in &pools[cur.len()] {
            cur.push(e);
            rec(pools, cur, f);
            cur.pop();
        }
    }
}

/// Elements of `s` of the given sort.
pub fn of_sort(s: &FinStructure, elems: &BTreeSet<Elem>, sort: SortId) -> Vec<Elem> {
    elems.iter().copied().filter(|&e| s.sort_of(e) == Some(sort)).collect()
}
