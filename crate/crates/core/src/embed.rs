//! Embedding and isomorphism search by backtracking.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::structure::{Atom, Elem, FinStructure, PartialMap, StructureError};

struct Indexed {
    atoms: Vec<Atom>,
    incident: BTreeMap<Elem, Vec<usize>>,
}

impl Indexed {
    fn new(s: &FinStructure) -> Self {
        let atoms: Vec<Atom> = s.atoms().collect();
        let mut incident: BTreeMap<Elem, Vec<usize>> = BTreeMap::new();
        for e in s.elements() {
            incident.insert(e, Vec::new());
        }
        for (i, a) in atoms.iter().enumerate() {
            let mut es = a.elems();
            es.sort();
            es.dedup();
            for e in es {
                incident.entry(e).or_default().push(i);
            }
        }
        Indexed { atoms, incident }
    }

    fn degree(&self, e: Elem) -> usize {
        self.incident.get(&e).map_or(0, |v| v.len())
    }
}

struct Search<'a> {
    src: &'a FinStructure,
    dst: &'a FinStructure,
    si: Indexed,
    di: Indexed,
    order: Vec<Elem>,
    candidates: Vec<Vec<Elem>>,
    fwd: BTreeMap<Elem, Elem>,
    back: BTreeMap<Elem, Elem>,
    limit: usize,
    out: Vec<PartialMap>,
}

impl Search<'_> {
    fn consistent(&self, x: Elem, y: Elem) -> bool {
        for &i in &self.si.incident[&x] {
            let atom = &self.si.atoms[i];
            if let Some(img) = atom.try_map(|e| self.fwd.get(&e).copied()) {
                if !self.dst.holds(&img) {
                    return false;
                }
            }
        }
        for &i in &self.di.incident[&y] {
            let atom = &self.di.atoms[i];
            if let Some(pre) = atom.try_map(|e| self.back.get(&e).copied()) {
                if !self.src.holds(&pre) {
                    return false;
                }
            }
        }
        true
    }

    fn run(&mut self, depth: usize) {
        if self.out.len() >= self.limit {
            return;
        }
        if depth == self.order.len() {
            self.out.push(PartialMap::from_pairs(self.fwd.iter().map(|(&a, &b)| (a, b))));
            return;
        }
        let x = self.order[depth];
        for ci in 0..self.candidates[depth].len() {
            let y = self.candidates[depth][ci];
            if self.back.contains_key(&y) {
                continue;
            }
            self.fwd.insert(x, y);
            self.back.insert(y, x);
            if self.consistent(x, y) {
                self.run(depth + 1);
            }
            self.fwd.remove(&x);
            self.back.remove(&y);
            if self.out.len() >= self.limit {
                return;
            }
        }
    }
}

/// Up to `limit` embeddings of `src` into `dst` extending `pinned`. Returns
/// an empty list if `pinned` is not a sort-preserving partial injection.
pub fn find_embeddings(
    src: &FinStructure,
    dst: &FinStructure,
    pinned: &PartialMap,
    limit: usize,
) -> Result<Vec<PartialMap>, StructureError> {
    if !src.same_signature(dst) {
        return Err(StructureError::SignatureMismatch);
    }
    if limit == 0 {
        return Ok(Vec::new());
    }
    let pinned_ok = pinned.is_injective()
        && pinned.iter().all(|(a, b)| {
            src.contains(a) && dst.contains(b) && src.sort_of(a) == dst.sort_of(b)
        });
    if !pinned_ok {
        return Ok(Vec::new());
    }
    let si = Indexed::new(src);
    let di = Indexed::new(dst);

    // Pinned first, then greedily the element most connected to those
    // already ordered, ties broken by degree and id.
    let mut order: Vec<Elem> = pinned.domain().into_iter().collect();
    let mut placed: BTreeSet<Elem> = order.iter().copied().collect();
    let mut links: BTreeMap<Elem, usize> = src.elements().filter(|e| !placed.contains(e)).map(|e| (e, 0)).collect();
    for &p in &order {
        bump_links(&si, p, &placed, &mut links);
    }
    while !links.is_empty() {
        let (&next, _) = links
            .iter()
            .max_by(|(ea, la), (eb, lb)| {
                la.cmp(lb).then(si.degree(**ea).cmp(&si.degree(**eb))).then(eb.cmp(ea))
            })
            .unwrap();
        links.remove(&next);
        placed.insert(next);
        order.push(next);
        bump_links(&si, next, &placed, &mut links);
    }

    let mut candidates = Vec::with_capacity(order.len());
    for &x in &order {
        if let Some(y) = pinned.get(x) {
            candidates.push(alloc::vec![y]);
            continue;
        }
        let sort = src.sort_of(x);
        let konst = src.is_constant(x);
        let deg = si.degree(x);
        let cs: Vec<Elem> = dst
            .elements()
            .filter(|&y| dst.sort_of(y) == sort && dst.is_constant(y) == konst && di.degree(y) >= deg)
            .collect();
        candidates.push(cs);
    }
    for &x in pinned.domain().iter() {
        if src.is_constant(x) != dst.is_constant(pinned.get(x).unwrap()) {
            return Ok(Vec::new());
        }
    }

    let mut search = Search {
        src,
        dst,
        si,
        di,
        order,
        candidates,
        fwd: BTreeMap::new(),
        back: BTreeMap::new(),
        limit,
        out: Vec::new(),
    };
    search.run(0);
    Ok(search.out)
}

fn bump_links(si: &Indexed, e: Elem, placed: &BTreeSet<Elem>, links: &mut BTreeMap<Elem, usize>) {
    for &i in &si.incident[&e] {
        for other in si.atoms[i].elems() {
            if !placed.contains(&other) {
                if let Some(l) = links.get_mut(&other) {
                    *l += 1;
                }
            }
        }
    }
}

/// An isomorphism `a → b` extending `pinned`, if one exists.
pub fn find_isomorphism(
    a: &FinStructure,
    b: &FinStructure,
    pinned: &PartialMap,
) -> Result<Option<PartialMap>, StructureError> {
    if !a.same_signature(b) {
        return Err(StructureError::SignatureMismatch);
    }
    if a.len() != b.len() || a.atom_count() != b.atom_count() {
        return Ok(None);
    }
    Ok(find_embeddings(a, b, pinned, 1)?.pop())
}

pub fn are_isomorphic(a: &FinStructure, b: &FinStructure) -> Result<bool, StructureError> {
    Ok(find_isomorphism(a, b, &PartialMap::new())?.is_some())
}

/// Automorphisms of `s` extending `pinned`.
pub fn automorphisms(s: &FinStructure, pinned: &PartialMap, limit: usize) -> Vec<PartialMap> {
    find_embeddings(s, s, pinned, limit).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{is_embedding, ConstId, RelId, Signature, SortId};
    use alloc::sync::Arc;

    fn points(n: usize) -> FinStructure {
        let sig = Arc::new(Signature::builder().sort("O").build().unwrap());
        let mut s = FinStructure::new(sig);
        for _ in 0..n {
            s.add_element(SortId(0));
        }
        s
    }

    #[test]
    fn single_point_into_three() {
        let one = points(1);
        let three = points(3);
        assert_eq!(find_embeddings(&one, &three, &PartialMap::new(), usize::MAX).unwrap().len(), 3);
    }

    #[test]
    fn pair_element_has_swap() {
        let sig = Arc::new(Signature::builder().sort("O").pair_sort("P", "O").build().unwrap());
        let mut s = FinStructure::new(sig);
        let d1 = s.add_element(SortId(0));
        let d2 = s.add_element(SortId(0));
        s.add_pair(SortId(1), d1, d2).unwrap();
        let maps = find_embeddings(&s, &s, &PartialMap::new(), usize::MAX).unwrap();
        assert_eq!(maps.len(), 2);
        for m in &maps {
            assert!(is_embedding(m, &s, &s).unwrap());
        }
    }

    #[test]
    fn cyclic_fragment_into_illegal_target() {
        let sig = Arc::new(Signature::builder().sort("O").relation("cyc", &["O", "O", "O"]).build().unwrap());
        let mut src = FinStructure::new(sig.clone());
        let x = src.add_element(SortId(0));
        let y = src.add_element(SortId(0));
        let _ = (x, y);
        // Target where every pair of points lies in a reflexive cyc atom,
        // which no two distinct points of the source do.
        let mut dst = FinStructure::new(sig);
        let p = dst.add_element(SortId(0));
        let q = dst.add_element(SortId(0));
        dst.add_relation(RelId(0), alloc::vec![p, q, q]).unwrap();
        dst.add_relation(RelId(0), alloc::vec![q, p, p]).unwrap();
        assert!(find_embeddings(&src, &dst, &PartialMap::new(), usize::MAX).unwrap().is_empty());
    }

    #[test]
    fn constants_map_setwise() {
        let sig = Arc::new(
            Signature::builder().sort("C").constant("0", "C").constant("1", "C").build().unwrap(),
        );
        let mut s = FinStructure::new(sig);
        let z = s.add_element(SortId(0));
        let o = s.add_element(SortId(0));
        s.set_constant(ConstId(0), z).unwrap();
        s.set_constant(ConstId(1), o).unwrap();
        assert_eq!(automorphisms(&s, &PartialMap::new(), usize::MAX).len(), 2);
        assert_eq!(automorphisms(&s, &PartialMap::identity([z]), usize::MAX).len(), 1);
    }
}
