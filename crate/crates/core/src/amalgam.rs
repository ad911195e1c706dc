//! Free amalgamation, the free-independence relation and randomized checks
//! of the free amalgamation theory axioms.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::diagram::Diagram;
use crate::embed::{automorphisms, find_embeddings};
use crate::literal::{write_elems, write_structure};
use crate::structure::{disjoint_union_over, is_embedding, Atom, Elem, FinStructure, PartialMap, StructureError};
use crate::theory::{ClassViolation, Condition, TheorySpec};
use crate::typespace::{closed, same_type_across, TypeError, DEFAULT_ACL_BUDGET};

/// Two structures and embeddings of a common substructure into each.
#[derive(Clone, Debug)]
pub struct AmalgamProblem {
    pub a: FinStructure,
    pub b: FinStructure,
    pub common: FinStructure,
    pub into_a: PartialMap,
    pub into_b: PartialMap,
}

impl AmalgamProblem {
    /// `c` given as a shared set of ids present in both `a` and `b`.
    pub fn over_shared(a: FinStructure, b: FinStructure, c: &BTreeSet<Elem>) -> Self {
        let common = a.induced(c);
        let id = PartialMap::identity(common.elements());
        AmalgamProblem { a, b, common, into_a: id.clone(), into_b: id }
    }
}

#[derive(Clone, Debug)]
pub struct Amalgam {
    pub structure: FinStructure,
    /// `a` keeps its ids.
    pub left: PartialMap,
    pub right: PartialMap,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmalgamError {
    #[error("theory `{0}` is not flagged for free amalgamation")]
    NotFree(String),
    #[error("{0} is not an embedding of the common part")]
    BadIdentification(&'static str),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

pub fn free_amalgam(t: &TheorySpec, p: &AmalgamProblem) -> Result<Amalgam, AmalgamError> {
    if !t.flags.free_amalgamation {
        return Err(AmalgamError::NotFree(t.name.clone()));
    }
    if !is_embedding(&p.into_a, &p.common, &p.a)? {
        return Err(AmalgamError::BadIdentification("into_a"));
    }
    if !is_embedding(&p.into_b, &p.common, &p.b)? {
        return Err(AmalgamError::BadIdentification("into_b"));
    }
    let c = p.into_b.inverse().then(&p.into_a);
    let u = disjoint_union_over(&p.a, &p.b, &c)?;
    Ok(Amalgam { left: PartialMap::identity(p.a.elements()), right: u.right_embedding, structure: u.structure })
}

/// `A` and `B` overlap only inside `C` and the constants, and no atom of
/// `amb` meets both `A∖C` and `B∖C` (constants excluded).
pub fn free_independent(amb: &FinStructure, a: &BTreeSet<Elem>, b: &BTreeSet<Elem>, c: &BTreeSet<Elem>) -> bool {
    let consts = amb.constant_elements();
    let outside = |x: &BTreeSet<Elem>| -> BTreeSet<Elem> {
        x.iter().copied().filter(|e| !c.contains(e) && !consts.contains(e)).collect()
    };
    let (a0, b0) = (outside(a), outside(b));
    if !a0.is_disjoint(&b0) {
        return false;
    }
    if a0.is_empty() || b0.is_empty() {
        return true;
    }
    !amb.atoms().any(|at| {
        let es = at.elems();
        es.iter().any(|e| a0.contains(e)) && es.iter().any(|e| b0.contains(e))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axiom {
    InvarianceSurrogate,
    Monotonicity,
    Symmetry,
    FullTransitivity,
    FullExistenceClosed,
    StationarityClosed,
    Freedom,
    Closure,
}

impl Axiom {
    pub const ALL: [Axiom; 8] = [
        Axiom::InvarianceSurrogate,
        Axiom::Monotonicity,
        Axiom::Symmetry,
        Axiom::FullTransitivity,
        Axiom::FullExistenceClosed,
        Axiom::StationarityClosed,
        Axiom::Freedom,
        Axiom::Closure,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Axiom::InvarianceSurrogate => "invariance-surrogate",
            Axiom::Monotonicity => "monotonicity",
            Axiom::Symmetry => "symmetry",
            Axiom::FullTransitivity => "full-transitivity",
            Axiom::FullExistenceClosed => "full-existence-closed",
            Axiom::StationarityClosed => "stationarity-closed",
            Axiom::Freedom => "freedom",
            Axiom::Closure => "closure",
        }
    }

    pub fn parse(id: &str) -> Option<Axiom> {
        Axiom::ALL.into_iter().find(|a| a.id() == id)
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// One sampled configuration: an ambient structure with named tuples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub amb: FinStructure,
    pub tuples: BTreeMap<String, Vec<Elem>>,
    /// The automorphism used by the invariance check.
    pub map: Option<PartialMap>,
}

impl Instance {
    fn new(amb: FinStructure) -> Self {
        Instance { amb, tuples: BTreeMap::new(), map: None }
    }

    fn with(mut self, name: &str, set: &BTreeSet<Elem>) -> Self {
        self.tuples.insert(name.to_string(), set.iter().copied().collect());
        self
    }

    fn with_tuple(mut self, name: &str, t: Vec<Elem>) -> Self {
        self.tuples.insert(name.to_string(), t);
        self
    }

    pub fn set(&self, name: &str) -> BTreeSet<Elem> {
        self.tuples.get(name).map(|t| t.iter().copied().collect()).unwrap_or_default()
    }

    pub fn tuple(&self, name: &str) -> &[Elem] {
        self.tuples.get(name).map(|t| t.as_slice()).unwrap_or(&[])
    }

    /// The ambient in the structure literal format followed by one comment
    /// line per named tuple.
    pub fn dump(&self) -> String {
        let mut out = write_structure(&self.amb);
        for (name, t) in &self.tuples {
            out.push_str(&format!("# {} = ({})\n", name, write_elems(&self.amb, t.iter().copied())));
        }
        if let Some(m) = &self.map {
            let pairs: Vec<String> = m
                .iter()
                .filter(|(x, y)| x != y)
                .map(|(x, y)| format!("{}->{}", write_elems(&self.amb, [x]), write_elems(&self.amb, [y])))
                .collect();
            out.push_str(&format!("# map = {{{}}}\n", pairs.join(",")));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomFailure {
    pub instance: Instance,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub trials: usize,
    /// Trials whose premise did not hold.
    pub vacuous: usize,
    pub failures: Vec<AxiomFailure>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Re-runs every recorded failure.
    pub fn recheck(&self, t: &TheorySpec) -> bool {
        self.failures.iter().all(|f| matches!(check(t, self.axiom, &f.instance), Ok(Outcome::Fail(_))))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Holds,
    Vacuous,
    Fail(String),
}

fn cl(t: &TheorySpec, s: &FinStructure, x: &BTreeSet<Elem>) -> Result<BTreeSet<Elem>, TypeError> {
    closed(t, s, x, DEFAULT_ACL_BUDGET)
}

fn union(a: &BTreeSet<Elem>, b: &BTreeSet<Elem>) -> BTreeSet<Elem> {
    a.union(b).copied().collect()
}

fn show(s: &FinStructure, x: &BTreeSet<Elem>) -> String {
    format!("{{{}}}", write_elems(s, x.iter().copied()))
}

/// Evaluates one axiom on a recorded instance.
pub fn check(t: &TheorySpec, axiom: Axiom, inst: &Instance) -> Result<Outcome, TypeError> {
    let s = &inst.amb;
    let (a, b, c) = (inst.set("A"), inst.set("B"), inst.set("C"));
    let ind = |x: &BTreeSet<Elem>, y: &BTreeSet<Elem>, z: &BTreeSet<Elem>| free_independent(s, x, y, z);
    Ok(match axiom {
        Axiom::InvarianceSurrogate => {
            let Some(m) = &inst.map else { return Ok(Outcome::Vacuous) };
            let img = |x: &BTreeSet<Elem>| m.apply_set(x).unwrap_or_default();
            if ind(&a, &b, &c) == ind(&img(&a), &img(&b), &img(&c)) {
                Outcome::Holds
            } else {
                Outcome::Fail("verdict changes under an automorphism".into())
            }
        }
        Axiom::Monotonicity => {
            if !ind(&a, &b, &c) {
                return Ok(Outcome::Vacuous);
            }
            let (a1, b1) = (inst.set("A'"), inst.set("B'"));
            if ind(&a1, &b1, &c) {
                Outcome::Holds
            } else {
                Outcome::Fail("independence lost on subsets".into())
            }
        }
        Axiom::Symmetry => {
            if ind(&a, &b, &c) == ind(&b, &a, &c) {
                Outcome::Holds
            } else {
                Outcome::Fail("asymmetric verdict".into())
            }
        }
        Axiom::FullTransitivity => {
            let d = inst.set("D");
            let whole = ind(&a, &b, &d);
            let split = ind(&a, &b, &c) && ind(&a, &c, &d);
            if whole == split {
                Outcome::Holds
            } else {
                Outcome::Fail(format!("A|_D B is {whole} but A|_C B and A|_D C is {split}"))
            }
        }
        Axiom::FullExistenceClosed => {
            if cl(t, s, &c)? != c {
                return Ok(Outcome::Vacuous);
            }
            let tuple = inst.tuple("A");
            let x = s.induced(&cl(t, s, &union(&a, &c))?);
            let u = disjoint_union_over(s, &x, &PartialMap::identity(c.iter().copied()))
                .map_err(TypeError::Structure)?;
            let amb = u.structure;
            let moved: Vec<Elem> = tuple.iter().map(|&e| u.right_embedding.get(e).expect("copied")).collect();
            if !t.accepts(&amb) {
                return Ok(Outcome::Fail("free amalgam over C leaves the class".into()));
            }
            if !same_type_across(t, &amb, &moved, s, tuple, &c, DEFAULT_ACL_BUDGET)? {
                return Ok(Outcome::Fail("copy of A has a different type over C".into()));
            }
            let moved_set: BTreeSet<Elem> = moved.iter().copied().collect();
            if free_independent(&amb, &moved_set, &b, &c) {
                Outcome::Holds
            } else {
                Outcome::Fail("copy of A is not free from B over C".into())
            }
        }
        Axiom::StationarityClosed => {
            if cl(t, s, &c)? != c || cl(t, s, &a)? != a || cl(t, s, &b)? != b || !c.is_subset(&a) || !c.is_subset(&b) {
                return Ok(Outcome::Vacuous);
            }
            if !ind(&a, &b, &c) {
                return Ok(Outcome::Vacuous);
            }
            let a_t: Vec<Elem> = a.iter().copied().collect();
            let b_t: Vec<Elem> = b.iter().copied().collect();
            let src = s.induced(&a);
            let pinned = PartialMap::identity(c.iter().copied());
            let maps = find_embeddings(&src, s, &pinned, 512).map_err(TypeError::Structure)?;
            let mut premise = false;
            for m in maps.into_iter().filter(|m| !m.is_identity()) {
                let a2: Vec<Elem> = a_t.iter().map(|&e| m.get(e).expect("total")).collect();
                let a2_set: BTreeSet<Elem> = a2.iter().copied().collect();
                if cl(t, s, &a2_set)? != a2_set || !ind(&a2_set, &b, &c) {
                    continue;
                }
                if !same_type_across(t, s, &a2, s, &a_t, &c, DEFAULT_ACL_BUDGET)? {
                    continue;
                }
                premise = true;
                let l: Vec<Elem> = a2.iter().chain(&b_t).copied().collect();
                let r: Vec<Elem> = a_t.iter().chain(&b_t).copied().collect();
                if !same_type_across(t, s, &l, s, &r, &c, DEFAULT_ACL_BUDGET)? {
                    return Ok(Outcome::Fail(format!(
                        "{} and {} agree over C and are free from B, but differ jointly with B",
                        show(s, &a),
                        show(s, &a2_set)
                    )));
                }
            }
            if premise {
                Outcome::Holds
            } else {
                Outcome::Vacuous
            }
        }
        Axiom::Freedom => {
            if !ind(&a, &b, &c) {
                return Ok(Outcome::Vacuous);
            }
            let d = inst.set("D");
            let low: BTreeSet<Elem> = c.intersection(&union(&a, &b)).copied().collect();
            if !low.is_subset(&d) || !d.is_subset(&c) {
                return Ok(Outcome::Vacuous);
            }
            if ind(&a, &b, &d) {
                Outcome::Holds
            } else {
                Outcome::Fail("independence lost when shrinking the base".into())
            }
        }
        Axiom::Closure => {
            if cl(t, s, &c)? != c || cl(t, s, &a)? != a || cl(t, s, &b)? != b || !c.is_subset(&a) || !c.is_subset(&b) {
                return Ok(Outcome::Vacuous);
            }
            if !ind(&a, &b, &c) {
                return Ok(Outcome::Vacuous);
            }
            let ab = union(&a, &b);
            let k = cl(t, s, &ab)?;
            if k == ab {
                Outcome::Holds
            } else {
                let extra: BTreeSet<Elem> = k.difference(&ab).copied().collect();
                Outcome::Fail(format!("acl(AB) adds {}", show(s, &extra)))
            }
        }
    })
}

/// Grows `start` by up to `extra` one-point extensions, each candidate atom
/// on the new point kept with probability ½ when the result stays in the
/// class.
pub fn grow(t: &TheorySpec, start: FinStructure, extra: usize, rng: &mut impl Rng) -> FinStructure {
    let sig = t.signature.clone();
    let sorts: Vec<_> = sig.sort_ids().filter(|&so| !sig.is_pair_sort(so)).collect();
    let mut s = start;
    if sorts.is_empty() {
        return s;
    }
    let steps = rng.gen_range(0..=extra);
    for _ in 0..steps {
        let sort = *sorts.choose(rng).expect("nonempty");
        let mut cand = s.clone();
        let e = cand.add_element(sort);
        let name = format!("{}{}", sig.sort(sort).name.to_lowercase(), e.0);
        cand.set_name(e, &name);
        if !t.accepts(&cand) {
            continue;
        }
        for r in sig.relation_ids() {
            let pools: Vec<Vec<Elem>> = sig.relation(r).arity.iter().map(|&so| cand.elements_of_sort(so).collect()).collect();
            let mut tuples = Vec::new();
            crate::diagram::for_each_tuple(&pools, &mut |tu| {
                if tu.contains(&e) {
                    tuples.push(tu.to_vec());
                }
            });
            for tu in tuples {
                if !rng.gen_bool(0.5) {
                    continue;
                }
                let mut next = cand.clone();
                if next.add_atom(&Atom::Rel(r, tu)).is_err() {
                    continue;
                }
                if let Ok(done) = t.complete(&Diagram::positive(next), 0) {
                    if t.accepts(&done) {
                        cand = done;
                    }
                }
            }
        }
        s = cand;
    }
    s
}

pub fn sample_structure(t: &TheorySpec, size_bound: usize, rng: &mut impl Rng) -> FinStructure {
    grow(t, t.constants_only(), size_bound, rng)
}

fn random_subset(pool: &BTreeSet<Elem>, rng: &mut impl Rng) -> BTreeSet<Elem> {
    pool.iter().copied().filter(|_| rng.gen_bool(0.5)).collect()
}

/// An ambient with a random base `C` and two sides, built as a free amalgam
/// over a closed `C` every other time so that the premise usually holds.
fn configuration(t: &TheorySpec, size: usize, free: bool, rng: &mut ChaCha8Rng) -> Result<Instance, TypeError> {
    let x = sample_structure(t, size, rng);
    let consts = x.constant_elements();
    let pool: BTreeSet<Elem> = x.universe().difference(&consts).copied().collect();
    if !free {
        let (a, b, c) = (random_subset(&pool, rng), random_subset(&pool, rng), random_subset(&pool, rng));
        return Ok(Instance::new(x).with("A", &a).with("B", &b).with("C", &c));
    }
    let c = cl(t, &x, &random_subset(&pool, rng))?;
    let y = grow(t, x.induced(&c), size, rng);
    let u = disjoint_union_over(&x, &y, &PartialMap::identity(c.iter().copied())).map_err(TypeError::Structure)?;
    let right: BTreeSet<Elem> = y.elements().filter(|e| !c.contains(e)).map(|e| u.right_embedding.get(e).expect("total")).collect();
    let left: BTreeSet<Elem> = pool.difference(&c).copied().collect();
    let mut a = random_subset(&left, rng);
    let mut b = random_subset(&right, rng);
    a.extend(random_subset(&c, rng));
    b.extend(random_subset(&c, rng));
    Ok(Instance::new(u.structure).with("A", &a).with("B", &b).with("C", &c))
}

fn instance_for(t: &TheorySpec, axiom: Axiom, size: usize, trial: usize, rng: &mut ChaCha8Rng) -> Result<Instance, TypeError> {
    let free = trial % 2 == 1 || matches!(axiom, Axiom::StationarityClosed | Axiom::Closure);
    let inst = configuration(t, size, free, rng)?;
    let s = inst.amb.clone();
    let (a, b, c) = (inst.set("A"), inst.set("B"), inst.set("C"));
    Ok(match axiom {
        Axiom::InvarianceSurrogate => {
            let auts = automorphisms(&s, &PartialMap::new(), 64);
            let m = auts.choose(rng).cloned();
            Instance { map: m, ..inst }
        }
        Axiom::Monotonicity => {
            let (a1, b1) = (random_subset(&a, rng), random_subset(&b, rng));
            inst.with("A'", &a1).with("B'", &b1)
        }
        Axiom::Symmetry => inst,
        Axiom::FullTransitivity => {
            let b2 = union(&b, &c);
            let d = random_subset(&c, rng);
            inst.with("B", &b2).with("D", &d)
        }
        Axiom::FullExistenceClosed => {
            let c2 = cl(t, &s, &c)?;
            let tuple: Vec<Elem> = a.iter().copied().filter(|e| !c2.contains(e)).collect();
            inst.with("C", &c2).with_tuple("A", tuple)
        }
        Axiom::Closure => {
            let a2 = cl(t, &s, &union(&a, &c))?;
            let b2 = cl(t, &s, &union(&b, &c))?;
            inst.with("A", &a2).with("B", &b2)
        }
        Axiom::StationarityClosed => {
            let a2 = cl(t, &s, &union(&a, &c))?;
            let b2 = cl(t, &s, &union(&b, &c))?;
            // A second copy of A free over C, so that a non-trivial a' exists.
            let amb = disjoint_union_over(&s, &s.induced(&a2), &PartialMap::identity(c.iter().copied()))
                .map(|u| u.structure)
                .ok()
                .filter(|u| t.accepts(u))
                .unwrap_or(s);
            Instance { amb, ..inst }.with("A", &a2).with("B", &b2)
        }
        Axiom::Freedom => {
            let low: BTreeSet<Elem> = c.intersection(&union(&a, &b)).copied().collect();
            let d = union(&low, &random_subset(&c, rng));
            inst.with("D", &d)
        }
    })
}

fn axiom_salt(axiom: Axiom) -> u64 {
    Axiom::ALL.iter().position(|&a| a == axiom).expect("listed") as u64
}

/// Samples `trials` configurations with at most `size_bound` non-constant
/// elements per side and checks `axiom` on each.
pub fn axiom_suite(
    t: &TheorySpec,
    axiom: Axiom,
    trials: usize,
    size_bound: usize,
    seed: u64,
) -> Result<AxiomReport, AmalgamError> {
    if !t.flags.free_amalgamation {
        return Err(AmalgamError::NotFree(t.name.clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ axiom_salt(axiom));
    let mut report = AxiomReport { axiom, trials, vacuous: 0, failures: Vec::new() };
    for trial in 0..trials {
        let outcome = instance_for(t, axiom, size_bound, trial, &mut rng).and_then(|inst| {
            let o = check(t, axiom, &inst)?;
            Ok((inst, o))
        });
        match outcome {
            Ok((_, Outcome::Holds)) => {}
            Ok((_, Outcome::Vacuous)) => report.vacuous += 1,
            Ok((instance, Outcome::Fail(detail))) => report.failures.push(AxiomFailure { instance, detail }),
            Err(e) => report.failures.push(AxiomFailure {
                instance: Instance::new(t.constants_only()),
                detail: format!("engine error: {e}"),
            }),
        }
    }
    Ok(report)
}

pub fn axiom_suite_all(t: &TheorySpec, trials: usize, size_bound: usize, seed: u64) -> Result<Vec<AxiomReport>, AmalgamError> {
    Axiom::ALL.iter().map(|&a| axiom_suite(t, a, trials, size_bound, seed)).collect()
}

/// `og` with condition (3) dropped.
pub fn og_without_triangle() -> TheorySpec {
    TheorySpec::og().without_condition("og-3")
}

fn at_most_one_r0_edge(s: &FinStructure) -> Vec<ClassViolation> {
    let sig = s.signature();
    let (Some(r), Some(zero)) = (sig.relation_id("R"), sig.constant_id("0")) else { return Vec::new() };
    let Some(z) = s.constant(zero) else { return Vec::new() };
    let edges: BTreeSet<(Elem, Elem)> =
        s.relation(r).iter().filter(|t| t[2] == z).map(|t| (t[0].min(t[1]), t[0].max(t[1]))).collect();
    if edges.len() <= 1 {
        return Vec::new();
    }
    let witness: Vec<Elem> = edges.iter().take(2).flat_map(|&(x, y)| [x, y]).collect();
    alloc::vec![ClassViolation {
        rule: "one-r0-edge".into(),
        witness,
        description: format!("{} R(·,·,0) edges", edges.len()),
    }]
}

/// `og` with an extra condition that breaks free amalgamation while keeping
/// the flag, used as a second control.
pub fn og_one_edge() -> TheorySpec {
    TheorySpec::og().with_condition(Condition::Custom { id: "one-r0-edge", check: at_most_one_r0_edge })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::SortId;

    fn og_vertices() -> (TheorySpec, FinStructure, Elem, Elem) {
        let t = TheorySpec::og();
        let mut s = t.constants_only();
        let v = s.add_named(SortId(1), "v");
        let w = s.add_named(SortId(1), "w");
        (t, s, v, w)
    }

    #[test]
    fn trivial_amalgam_is_identity() {
        let (t, s, _, _) = og_vertices();
        let p = AmalgamProblem::over_shared(s.clone(), s.clone(), &s.universe());
        let u = free_amalgam(&t, &p).unwrap();
        assert_eq!(u.structure, s);
    }

    #[test]
    fn two_vertices_over_constants() {
        let t = TheorySpec::og();
        let base = t.constants_only();
        let mut a = base.clone();
        a.add_named(SortId(1), "v");
        let mut b = base.clone();
        b.add_named(SortId(1), "w");
        let u = free_amalgam(&t, &AmalgamProblem::over_shared(a, b, &base.universe())).unwrap();
        assert_eq!(u.structure.elements_of_sort(SortId(1)).count(), 2);
        assert_eq!(u.structure.atom_count(), 0);
    }

    #[test]
    fn edge_and_e_atom_amalgam() {
        let t = TheorySpec::og();
        let base = t.constants_only();
        let zero = base.constant(crate::structure::ConstId(0)).unwrap();
        let e = t.signature.relation_id("E").unwrap();
        let r = t.signature.relation_id("R").unwrap();
        let mut a = base.clone();
        let o = a.add_element(SortId(0));
        let g = a.add_element(SortId(1));
        a.add_relation(e, alloc::vec![o, g, zero]).unwrap();
        let mut b = base.clone();
        let v = b.add_element(SortId(1));
        let w = b.add_element(SortId(1));
        b.add_relation(r, alloc::vec![v, w, zero]).unwrap();
        b.add_relation(r, alloc::vec![w, v, zero]).unwrap();
        let u = free_amalgam(&t, &AmalgamProblem::over_shared(a, b, &base.universe())).unwrap();
        assert_eq!(u.structure.len(), 6);
        assert_eq!(u.structure.atom_count(), 3);
        assert!(t.accepts(&u.structure));
    }

    #[test]
    fn rejects_unflagged_theories() {
        let t = TheorySpec::circular();
        let s = t.new_structure();
        assert!(matches!(
            free_amalgam(&t, &AmalgamProblem::over_shared(s.clone(), s, &BTreeSet::new())),
            Err(AmalgamError::NotFree(_))
        ));
    }

    #[test]
    fn independence_examples() {
        let (t, mut s, v, w) = og_vertices();
        let o = s.add_named(SortId(0), "a");
        let zero = s.constant(crate::structure::ConstId(0)).unwrap();
        let set = |xs: &[Elem]| xs.iter().copied().collect::<BTreeSet<_>>();
        assert!(free_independent(&s, &set(&[o]), &set(&[v]), &BTreeSet::new()));
        assert!(free_independent(&s, &set(&[o]), &set(&[v]), &set(&[v, w])));
        s.add_relation(t.signature.relation_id("E").unwrap(), alloc::vec![o, v, zero]).unwrap();
        assert!(!free_independent(&s, &set(&[o]), &set(&[v]), &BTreeSet::new()));
        assert!(free_independent(&s, &set(&[o]), &set(&[w]), &BTreeSet::new()));
    }

    #[test]
    fn sampler_stays_in_class_and_is_seeded() {
        let t = TheorySpec::og();
        for seed in 0..20 {
            let s1 = sample_structure(&t, 5, &mut ChaCha8Rng::seed_from_u64(seed));
            let s2 = sample_structure(&t, 5, &mut ChaCha8Rng::seed_from_u64(seed));
            assert!(t.accepts(&s1));
            assert_eq!(s1, s2);
        }
    }

    #[test]
    fn og_axioms_hold_on_a_small_run() {
        let t = TheorySpec::og();
        for r in axiom_suite_all(&t, 20, 4, 7).unwrap() {
            assert!(r.passed(), "{}: {:?}", r.axiom, r.failures.first().map(|f| f.instance.dump()));
        }
    }

    #[test]
    fn one_edge_control_fails_existence() {
        let t = og_one_edge();
        let r = axiom_suite(&t, Axiom::FullExistenceClosed, 60, 5, 1).unwrap();
        assert!(!r.passed());
        assert!(r.recheck(&t));
    }
}
