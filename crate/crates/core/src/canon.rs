//! Canonical codes for finite structures.
//!
//! Colour refinement followed by individualization over the full search
//! tree; the code is the lexicographically least leaf encoding. Sibling
//! branches related by a transposition automorphism are skipped.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::structure::{Atom, Elem, FinStructure};

struct Graph {
    elems: Vec<Elem>,
    /// Atoms over positions: `[kind, symbol, positions..]`.
    facts: Vec<Vec<u32>>,
    fact_set: BTreeSet<Vec<u32>>,
    incident: Vec<Vec<usize>>,
    header: Vec<[u32; 3]>,
}

const ARITY_START: usize = 2;

fn encode(atom: &Atom, pos: &BTreeMap<Elem, u32>) -> Vec<u32> {
    match atom {
        Atom::Rel(r, t) => {
            let mut v = alloc::vec![0, r.0 as u32];
            v.extend(t.iter().map(|e| pos[e]));
            v
        }
        Atom::Fun(f, args, val) => {
            let mut v = alloc::vec![1, f.0 as u32];
            v.extend(args.iter().map(|e| pos[e]));
            v.push(pos[val]);
            v
        }
        Atom::Pair(p, x, y) => {
            let (a, b) = (pos[x], pos[y]);
            alloc::vec![2, 0, pos[p], a.min(b), a.max(b)]
        }
    }
}

impl Graph {
    fn new(s: &FinStructure, extra: &BTreeMap<Elem, u32>) -> Graph {
        let elems: Vec<Elem> = s.elements().collect();
        let pos: BTreeMap<Elem, u32> = elems.iter().enumerate().map(|(i, &e)| (e, i as u32)).collect();
        let facts: Vec<Vec<u32>> = s.atoms().map(|a| encode(&a, &pos)).collect();
        let mut incident = alloc::vec![Vec::new(); elems.len()];
        for (i, f) in facts.iter().enumerate() {
            let mut ps: Vec<u32> = f[ARITY_START..].to_vec();
            ps.sort_unstable();
            ps.dedup();
            for p in ps {
                incident[p as usize].push(i);
            }
        }
        let header = elems
            .iter()
            .map(|&e| {
                [
                    s.sort_of(e).unwrap().0 as u32,
                    s.is_constant(e) as u32,
                    extra.get(&e).copied().unwrap_or(0),
                ]
            })
            .collect();
        let fact_set = facts.iter().cloned().collect();
        Graph { elems, facts, fact_set, incident, header }
    }

    fn initial_colours(&self) -> Vec<u32> {
        rank(&self.header.iter().map(|h| h.to_vec()).collect::<Vec<_>>())
    }

    fn refine(&self, mut colours: Vec<u32>) -> Vec<u32> {
        let mut classes = count_classes(&colours);
        loop {
            let cur = &colours;
            let sigs: Vec<Vec<u32>> = (0..self.elems.len())
                .map(|v| {
                    let mut parts: Vec<Vec<u32>> = self.incident[v]
                        .iter()
                        .flat_map(|&fi| {
                            let f = &self.facts[fi];
                            let args = &f[ARITY_START..];
                            args.iter().enumerate().filter(|(_, &p)| p as usize == v).map(move |(slot, _)| {
                                // The two base points of a pair are unordered.
                                let slot = if f[0] == 2 { slot.min(1) } else { slot };
                                let mut part = alloc::vec![f[0], f[1], slot as u32];
                                part.extend(args.iter().map(|&p| cur[p as usize]));
                                if f[0] == 2 {
                                    part[4..].sort_unstable();
                                }
                                part
                            })
                        })
                        .collect();
                    parts.sort();
                    let mut sig = alloc::vec![cur[v]];
                    for p in parts {
                        sig.push(p.len() as u32);
                        sig.extend(p);
                    }
                    sig
                })
                .collect();
            let next = rank(&sigs);
            let n = count_classes(&next);
            if n == classes {
                return colours;
            }
            classes = n;
            colours = next;
        }
    }

    fn leaf_code(&self, colours: &[u32]) -> Vec<u32> {
        let n = self.elems.len();
        let mut by_label = alloc::vec![0usize; n];
        for (v, &c) in colours.iter().enumerate() {
            by_label[c as usize] = v;
        }
        let mut code = alloc::vec![n as u32];
        for &v in &by_label {
            code.extend_from_slice(&self.header[v]);
        }
        let mut facts: Vec<Vec<u32>> = self
            .facts
            .iter()
            .map(|f| {
                let mut g = f[..ARITY_START].to_vec();
                g.extend(f[ARITY_START..].iter().map(|&p| colours[p as usize]));
                if g[0] == 2 {
                    let (a, b) = (g[3], g[4]);
                    g[3] = a.min(b);
                    g[4] = a.max(b);
                }
                g
            })
            .collect();
        facts.sort();
        code.push(facts.len() as u32);
        for f in facts {
            code.push(f.len() as u32);
            code.extend(f);
        }
        code
    }

    fn transposition_is_automorphism(&self, a: usize, b: usize) -> bool {
        if self.header[a] != self.header[b] {
            return false;
        }
        let swap = |p: u32| -> u32 {
            if p as usize == a {
                b as u32
            } else if p as usize == b {
                a as u32
            } else {
                p
            }
        };
        self.incident[a].iter().chain(self.incident[b].iter()).all(|&fi| {
            let f = &self.facts[fi];
            let mut g = f[..ARITY_START].to_vec();
            g.extend(f[ARITY_START..].iter().map(|&p| swap(p)));
            if g[0] == 2 {
                let (x, y) = (g[3], g[4]);
                g[3] = x.min(y);
                g[4] = x.max(y);
            }
            self.fact_set.contains(&g)
        })
    }

    fn search(&self, colours: Vec<u32>, best: &mut Option<Vec<u32>>) {
        let colours = self.refine(colours);
        let mut cells: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (v, &c) in colours.iter().enumerate() {
            cells.entry(c).or_default().push(v);
        }
        let target = cells.iter().find(|(_, vs)| vs.len() > 1).map(|(&c, vs)| (c, vs.clone()));
        let Some((_, cell)) = target else {
            let code = self.leaf_code(&colours);
            if best.as_ref().is_none_or(|b| code < *b) {
                *best = Some(code);
            }
            return;
        };
        let mut explored: Vec<usize> = Vec::new();
        for &v in &cell {
            if explored.iter().any(|&u| self.transposition_is_automorphism(u, v)) {
                continue;
            }
            explored.push(v);
            let next: Vec<u32> =
                colours.iter().enumerate().map(|(u, &c)| if u == v { 2 * c } else { 2 * c + 1 }).collect();
            self.search(rank_single(&next), best);
        }
    }
}

fn rank(sigs: &[Vec<u32>]) -> Vec<u32> {
    let distinct: BTreeSet<&Vec<u32>> = sigs.iter().collect();
    let index: BTreeMap<&Vec<u32>, u32> = distinct.into_iter().enumerate().map(|(i, s)| (s, i as u32)).collect();
    sigs.iter().map(|s| index[s]).collect()
}

fn rank_single(colours: &[u32]) -> Vec<u32> {
    let distinct: BTreeSet<u32> = colours.iter().copied().collect();
    let index: BTreeMap<u32, u32> = distinct.into_iter().enumerate().map(|(i, c)| (c, i as u32)).collect();
    colours.iter().map(|c| index[c]).collect()
}

fn count_classes(colours: &[u32]) -> usize {
    colours.iter().collect::<BTreeSet<_>>().len()
}

fn to_bytes(words: &[u32]) -> Vec<u8> {
    words.iter().flat_map(|w| w.to_be_bytes()).collect()
}

/// Isomorphism-invariant code: equal iff the structures are isomorphic.
pub fn canonical_code(s: &FinStructure) -> Vec<u8> {
    canonical_code_colored(s, &BTreeMap::new())
}

/// Like [`canonical_code`], for structures whose elements carry extra
/// labels that isomorphisms must preserve. Unlisted elements get label 0.
pub fn canonical_code_colored(s: &FinStructure, colours: &BTreeMap<Elem, u32>) -> Vec<u8> {
    let g = Graph::new(s, colours);
    if g.elems.is_empty() {
        return to_bytes(&g.leaf_code(&[]));
    }
    let mut best = None;
    g.search(g.initial_colours(), &mut best);
    to_bytes(&best.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{RelId, Signature, SortId};
    use alloc::sync::Arc;

    fn graph_sig() -> Arc<Signature> {
        Arc::new(Signature::builder().sort("G").relation("R", &["G", "G"]).build().unwrap())
    }

    #[test]
    fn relabeled_edge_same_code() {
        let sig = graph_sig();
        let mut a = FinStructure::new(sig.clone());
        let x = a.add_element(SortId(0));
        let y = a.add_element(SortId(0));
        a.add_relation(RelId(0), alloc::vec![x, y]).unwrap();
        let mut b = FinStructure::new(sig);
        let u = b.add_element(SortId(0));
        let v = b.add_element(SortId(0));
        b.add_relation(RelId(0), alloc::vec![v, u]).unwrap();
        assert_eq!(canonical_code(&a), canonical_code(&b));
    }

    #[test]
    fn edge_differs_from_non_edge() {
        let sig = graph_sig();
        let mut a = FinStructure::new(sig.clone());
        let x = a.add_element(SortId(0));
        let y = a.add_element(SortId(0));
        let b = a.clone();
        a.add_relation(RelId(0), alloc::vec![x, y]).unwrap();
        assert_ne!(canonical_code(&a), canonical_code(&b));
    }

    #[test]
    fn many_twins_terminate() {
        let sig = graph_sig();
        let mut a = FinStructure::new(sig);
        for _ in 0..12 {
            a.add_element(SortId(0));
        }
        let code = canonical_code(&a);
        assert!(!code.is_empty());
    }

    #[test]
    fn colours_distinguish() {
        let sig = graph_sig();
        let mut a = FinStructure::new(sig);
        let x = a.add_element(SortId(0));
        let y = a.add_element(SortId(0));
        a.add_relation(RelId(0), alloc::vec![x, y]).unwrap();
        let cx = canonical_code_colored(&a, &BTreeMap::from([(x, 1)]));
        let cy = canonical_code_colored(&a, &BTreeMap::from([(y, 1)]));
        assert_ne!(cx, cy);
    }
}
