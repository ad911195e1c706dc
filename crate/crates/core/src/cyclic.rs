//! Search for total cyclic orders subject to positive and negative
//! betweenness constraints.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::structure::Elem;

/// True iff `x, y, z` occur in this cyclic order in `seq`.
pub fn is_cyclic(pos: &BTreeMap<Elem, usize>, x: Elem, y: Elem, z: Elem) -> bool {
    let (a, b, c) = (pos[&x], pos[&y], pos[&z]);
    (a < b && b < c) || (b < c && c < a) || (c < a && a < b)
}

#[derive(Clone, Copy)]
struct Constraint {
    t: [Elem; 3],
    positive: bool,
}

/// Outcome of a cyclic-order search, with the number of search nodes.
pub struct CyclicSearch {
    pub order: Option<Vec<Elem>>,
    pub nodes: usize,
}

/// Finds a cyclic arrangement of `points` in which every `pos` triple is
/// cyclically ordered and no `neg` triple is. Triples with a repeated
/// element are false in every arrangement.
pub fn find_cyclic_order(points: &BTreeSet<Elem>, pos: &[[Elem; 3]], neg: &[[Elem; 3]]) -> CyclicSearch {
    if pos.iter().any(|t| t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
        return CyclicSearch { order: None, nodes: 0 };
    }
    let mut cons: Vec<Constraint> = pos.iter().map(|&t| Constraint { t, positive: true }).collect();
    cons.extend(
        neg.iter()
            .filter(|t| t[0] != t[1] && t[1] != t[2] && t[0] != t[2])
            .map(|&t| Constraint { t, positive: false }),
    );

    let mut degree: BTreeMap<Elem, usize> = points.iter().map(|&p| (p, 0)).collect();
    for c in &cons {
        for e in c.t {
            *degree.entry(e).or_insert(0) += 1;
        }
    }
    let mut order: Vec<Elem> = degree.keys().copied().collect();
    order.sort_by(|a, b| degree[b].cmp(&degree[a]).then(a.cmp(b)));
    let rank: BTreeMap<Elem, usize> = order.iter().enumerate().map(|(i, &e)| (e, i)).collect();

    // Each constraint is checked when its last element (in insertion order)
    // is placed; placing later points never changes its truth value.
    let mut by_last: Vec<Vec<Constraint>> = alloc::vec![Vec::new(); order.len()];
    for c in cons {
        let last = c.t.iter().map(|e| rank[e]).max().unwrap();
        by_last[last].push(c);
    }

    let mut seq: Vec<Elem> = Vec::new();
    let mut nodes = 0;
    let found = place(&order, &by_last, 0, &mut seq, &mut nodes);
    CyclicSearch { order: if found { Some(seq) } else { None }, nodes }
}

fn place(order: &[Elem], by_last: &[Vec<Constraint>], depth: usize, seq: &mut Vec<Elem>, nodes: &mut usize) -> bool {
    *nodes += 1;
    if depth == order.len() {
        return true;
    }
    let p = order[depth];
    let slots = if seq.is_empty() { 1 } else { seq.len() };
    for s in 0..slots {
        seq.insert(s + usize::from(!seq.is_empty()), p);
        let pos: BTreeMap<Elem, usize> = seq.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let ok = by_last[depth].iter().all(|c| is_cyclic(&pos, c.t[0], c.t[1], c.t[2]) == c.positive);
        if ok && place(order, by_last, depth + 1, seq, nodes) {
            return true;
        }
        let idx = seq.iter().position(|&e| e == p).unwrap();
        seq.remove(idx);
    }
    false
}

/// All cyclic triples of an arrangement.
pub fn triples_of(seq: &[Elem]) -> Vec<[Elem; 3]> {
    let n = seq.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i != j && j != k && i != k && ((i < j && j < k) || (j < k && k < i) || (k < i && i < j)) {
                    out.push([seq[i], seq[j], seq[k]]);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: u32) -> Elem {
        Elem(i)
    }

    #[test]
    fn three_points_free() {
        let pts: BTreeSet<Elem> = [e(0), e(1), e(2)].into();
        let r = find_cyclic_order(&pts, &[], &[]);
        assert_eq!(r.order.unwrap().len(), 3);
    }

    #[test]
    fn opposite_orientations_conflict() {
        let pts: BTreeSet<Elem> = [e(0), e(1), e(2)].into();
        let r = find_cyclic_order(&pts, &[[e(0), e(1), e(2)], [e(1), e(0), e(2)]], &[]);
        assert!(r.order.is_none());
    }

    #[test]
    fn rotation_is_same_orientation() {
        let pts: BTreeSet<Elem> = [e(0), e(1), e(2)].into();
        let r = find_cyclic_order(&pts, &[[e(0), e(1), e(2)], [e(1), e(2), e(0)]], &[]);
        assert!(r.order.is_some());
        let r = find_cyclic_order(&pts, &[[e(0), e(1), e(2)]], &[[e(2), e(0), e(1)]]);
        assert!(r.order.is_none());
    }

    #[test]
    fn count_arrangements_of_four() {
        let seq = [e(0), e(1), e(2), e(3)];
        assert_eq!(triples_of(&seq).len(), 12);
    }
}
