//! The two-formula SOP₃ witness in `og`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::diagram::Diagram;
use crate::structure::{Atom, ConstId, Elem, FinStructure, RelId, SortId};
use crate::theory::TheorySpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Linkage {
    /// `R(b'_i, b_j, 0)` exactly when `i < j`.
    Ordered,
    /// `R(b'_i, b_j, 0)` for all `i ≠ j`; breaks the consistent cuts.
    Complete,
}

#[derive(Clone, Debug)]
pub struct Sop3Witness {
    pub structure: FinStructure,
    pub b: Vec<Elem>,
    pub b_prime: Vec<Elem>,
    /// Cuts `m` whose set of formulas is consistent.
    pub consistent_cuts: Vec<usize>,
    /// Pairs `i < j` with `{E(x,b'_i,0), E(x,b_j,0)}` inconsistent.
    pub inconsistent_pairs: Vec<(usize, usize)>,
    pub holds: bool,
}

impl Sop3Witness {
    pub fn n(&self) -> usize {
        self.b.len()
    }

    pub fn summary(&self) -> String {
        let n = self.n();
        format!(
            "n={n}: {}/{} cuts consistent, {}/{} crossed pairs inconsistent",
            self.consistent_cuts.len(),
            n + 1,
            self.inconsistent_pairs.len(),
            n * (n - 1) / 2
        )
    }
}

fn symbols(t: &TheorySpec) -> (RelId, RelId, SortId, SortId) {
    let sig = &t.signature;
    (
        sig.relation_id("R").expect("og signature"),
        sig.relation_id("E").expect("og signature"),
        sig.sort_id("O").expect("og signature"),
        sig.sort_id("G").expect("og signature"),
    )
}

/// Whether one new `O` element can be `E(·,g,0)`-adjacent to every `g`.
fn consistent(t: &TheorySpec, s: &FinStructure, targets: &[Elem]) -> bool {
    let (_, e, o, _) = symbols(t);
    let zero = s.constant(ConstId(0)).expect("constants");
    let mut d = Diagram::positive(s.clone());
    let x = d.pos.add_named(o, "x");
    for &g in targets {
        if d.add_pos(&Atom::Rel(e, alloc::vec![x, g, zero])).is_err() {
            return false;
        }
    }
    t.complete(&d, 0).is_ok_and(|c| t.accepts(&c))
}

pub fn sop3_witness(n: usize, linkage: Linkage) -> Sop3Witness {
    let t = TheorySpec::og();
    let (r, _, _, g) = symbols(&t);
    let mut s = t.constants_only();
    let zero = s.constant(ConstId(0)).expect("constants");
    let b: Vec<Elem> = (0..n).map(|i| s.add_named(g, &format!("b{i}"))).collect();
    let bp: Vec<Elem> = (0..n).map(|i| s.add_named(g, &format!("b{i}'"))).collect();
    for i in 0..n {
        for j in 0..n {
            let linked = match linkage {
                Linkage::Ordered => i < j,
                Linkage::Complete => i != j,
            };
            if linked {
                s.add_relation(r, alloc::vec![bp[i], b[j], zero]).expect("sorts");
                s.add_relation(r, alloc::vec![b[j], bp[i], zero]).expect("sorts");
            }
        }
    }
    debug_assert!(t.accepts(&s));
    let consistent_cuts: Vec<usize> = (0..=n)
        .filter(|&m| {
            let targets: Vec<Elem> = b[..m].iter().chain(&bp[m..]).copied().collect();
            consistent(&t, &s, &targets)
        })
        .collect();
    let mut inconsistent_pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if !consistent(&t, &s, &[bp[i], b[j]]) {
                inconsistent_pairs.push((i, j));
            }
        }
    }
    let holds = n >= 2 && consistent_cuts.len() == n + 1 && inconsistent_pairs.len() == n * (n - 1) / 2;
    Sop3Witness { structure: s, b, b_prime: bp, consistent_cuts, inconsistent_pairs, holds }
}

/// True iff every cut is consistent and every crossed pair `i < j` is not.
pub fn sop3_witness_check(n: usize, linkage: Linkage) -> bool {
    sop3_witness(n, linkage).holds
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_linkage_witnesses() {
        for n in 2..=4 {
            assert!(sop3_witness_check(n, Linkage::Ordered), "n={n}");
        }
    }

    #[test]
    fn complete_linkage_breaks_cuts() {
        let w = sop3_witness(3, Linkage::Complete);
        assert!(!w.holds);
        assert_eq!(w.consistent_cuts, [0, 3]);
    }
}
