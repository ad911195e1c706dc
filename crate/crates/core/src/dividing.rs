//! Dividing witnesses and bounded non-dividing certificates.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::diagram::{relation_complement, Diagram};
use crate::embed::automorphisms;
use crate::formula::{ExFormula, Literal, QfFormula, Term};
use crate::pattern::{enumerate_patterns, instantiate, valid_at, ArrayPattern, PatternSet, RowShape};
use crate::structure::{Atom, Elem, FinStructure, PartialMap};
use crate::theory::TheorySpec;
use crate::typespace::{acl, same_type_across, TypeError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budgets {
    pub window: usize,
    pub k_max: usize,
    /// Array length for non-dividing certificates.
    pub length: usize,
    pub pattern_budget: usize,
    pub acl_budget: usize,
    /// Mode assignments tried per pattern.
    pub mode_cap: usize,
    /// Rows on which every enumerated pattern must be class-consistent.
    pub validity_length: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { window: 2, k_max: 4, length: 4, pattern_budget: 10_000, acl_budget: 64, mode_cap: 512, validity_length: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DivError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("only window 2 is supported (got {0})")]
    Window(usize),
    #[error("parameter {0} is not in the row closure")]
    ParamOutsideRow(Elem),
    #[error("unsupported formula: {0}")]
    Unsupported(String),
}

#[derive(Clone, Debug)]
pub enum Joint {
    Consistent(FinStructure),
    Inconsistent(String),
    ArrayInconsistent(String),
}

impl Joint {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Joint::Consistent(_))
    }
}

struct Classes(Vec<usize>);

impl Classes {
    fn find(&mut self, i: usize) -> usize {
        let p = self.0[i];
        if p == i {
            return i;
        }
        let r = self.find(p);
        self.0[i] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Largest number of variable assignments tried by [`joint_consistent`].
pub const ASSIGNMENT_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Choice {
    Fresh,
    /// The value chosen for an earlier variable class.
    Alias(usize),
    Existing(Elem),
}

/// Whether one assignment of `phi`'s variables satisfies `phi` against all
/// `k` rows of the pattern at once. Each variable is pinned by a positive
/// equality with a row element, or else ranges over fresh elements, the
/// values of other variables and the elements of the array.
pub fn joint_consistent(
    t: &TheorySpec,
    shape: &RowShape,
    pattern: &ArrayPattern,
    phi: &QfFormula,
    k: usize,
) -> Result<Joint, DivError> {
    let src = &shape.source;
    for p in phi.params() {
        if !src.contains(p) {
            return Err(DivError::ParamOutsideRow(p));
        }
    }
    let inst = match instantiate(shape, pattern, k) {
        Ok(i) => i,
        Err(e) => return Ok(Joint::ArrayInconsistent(e.0)),
    };
    if let Err(e) = t.complete(&inst.diagram, 1) {
        return Ok(Joint::ArrayInconsistent(e.reason));
    }
    let n = phi.vars.len();
    let mut classes = Classes((0..n).collect());
    for l in &phi.literals {
        if let Literal::Eq { left: Term::Var(a), right: Term::Var(b), positive: true } = l {
            classes.union(*a, *b);
        }
    }
    let mut pinned: BTreeMap<usize, Elem> = BTreeMap::new();
    for l in &phi.literals {
        let (v, p) = match l {
            Literal::Eq { left: Term::Var(v), right: Term::Param(p), positive: true }
            | Literal::Eq { left: Term::Param(p), right: Term::Var(v), positive: true } => (*v, *p),
            _ => continue,
        };
        let imgs: BTreeSet<Elem> = inst.rows.iter().map(|r| r[&p]).collect();
        if imgs.len() > 1 {
            return Ok(Joint::Inconsistent(format!("x{} must equal a different element in each row", v)));
        }
        let img = *imgs.iter().next().expect("at least one row");
        let root = classes.find(v);
        if pinned.insert(root, img).is_some_and(|old| old != img) {
            return Ok(Joint::Inconsistent(format!("x{} has two forced values", v)));
        }
    }
    let sig = src.signature().clone();
    let roots: Vec<usize> = (0..n).map(|i| classes.find(i)).collect();
    let mut free: Vec<usize> = Vec::new();
    for i in 0..n {
        if roots[i] == i && !pinned.contains_key(&i) && !sig.is_pair_sort(phi.vars[i]) {
            free.push(i);
        }
    }
    let options: Vec<Vec<Choice>> = free
        .iter()
        .enumerate()
        .map(|(j, &r)| {
            let mut o = alloc::vec![Choice::Fresh];
            o.extend((0..j).filter(|&i| phi.vars[free[i]] == phi.vars[r]).map(Choice::Alias));
            o.extend(inst.diagram.pos.elements_of_sort(phi.vars[r]).map(Choice::Existing));
            o
        })
        .collect();
    let total = options.iter().try_fold(1usize, |acc, o| acc.checked_mul(o.len()).filter(|&x| x <= ASSIGNMENT_CAP));
    if total.is_none() {
        return Err(DivError::Unsupported(format!("more than {} variable assignments", ASSIGNMENT_CAP)));
    }
    let mut pick = alloc::vec![0usize; free.len()];
    let mut reason: String;
    loop {
        let mut d = inst.diagram.clone();
        let mut value = pinned.clone();
        let mut chosen: Vec<Elem> = Vec::with_capacity(free.len());
        for (j, &r) in free.iter().enumerate() {
            let e = match options[j][pick[j]] {
                Choice::Fresh => d.pos.add_named(phi.vars[r], &format!("x{}", r)),
                Choice::Alias(i) => chosen[i],
                Choice::Existing(e) => e,
            };
            chosen.push(e);
            value.insert(r, e);
        }
        match ground_rows(&mut d, &inst.rows, phi, &roots, &value, &classes_pairs(phi, &roots))? {
            Ok(()) => match t.complete(&d, 1) {
                Ok(s) => return Ok(Joint::Consistent(s)),
                Err(e) => reason = e.reason,
            },
            Err(r) => reason = r,
        }
        let mut j = 0;
        while j < pick.len() {
            pick[j] += 1;
            if pick[j] < options[j].len() {
                break;
            }
            pick[j] = 0;
            j += 1;
        }
        if j == pick.len() {
            return Ok(Joint::Inconsistent(reason));
        }
    }
}

/// For each pair-sort variable class, the base terms of its first positive
/// pair literal.
fn classes_pairs(phi: &QfFormula, roots: &[usize]) -> BTreeMap<usize, (Term, Term)> {
    let mut out = BTreeMap::new();
    for l in &phi.literals {
        if let Literal::Pair { pair: Term::Var(v), left, right, positive: true } = l {
            out.entry(roots[*v]).or_insert((*left, *right));
        }
    }
    out
}

/// Realizes pair-sort variables and adds every row's grounded literals to
/// `d`. The inner error is an inconsistency reason.
fn ground_rows(
    d: &mut Diagram,
    rows: &[BTreeMap<Elem, Elem>],
    phi: &QfFormula,
    roots: &[usize],
    value: &BTreeMap<usize, Elem>,
    pair_bases: &BTreeMap<usize, (Term, Term)>,
) -> Result<Result<(), String>, DivError> {
    let sig = d.pos.signature().clone();
    let n = phi.vars.len();
    let mut assign: Vec<Option<Elem>> = (0..n).map(|i| value.get(&roots[i]).copied()).collect();
    for i in 0..n {
        if assign[i].is_some() {
            continue;
        }
        let root = roots[i];
        if !sig.is_pair_sort(phi.vars[i]) {
            continue;
        }
        let Some(&(l, r)) = pair_bases.get(&root) else {
            return Err(DivError::Unsupported(format!("pair-sort variable x{} needs a pair literal", i)));
        };
        let mut bases = BTreeSet::new();
        for row in rows {
            let res = |t: Term| match t {
                Term::Param(p) => Some(row[&p]),
                Term::Var(j) => assign[j],
            };
            let (Some(x), Some(y)) = (res(l), res(r)) else {
                return Err(DivError::Unsupported(format!("pair-sort variable x{} over pair-sort variables", i)));
            };
            bases.insert((x.min(y), x.max(y)));
        }
        if bases.len() > 1 {
            return Ok(Err(format!("x{} names a different pair in each row", i)));
        }
        let (x, y) = *bases.iter().next().expect("rows");
        let e = match d.pos.pair_of(x, y) {
            Some(e) if d.pos.sort_of(e) == Some(phi.vars[i]) => e,
            _ => d.pos.add_pair(phi.vars[i], x, y).map_err(TypeError::from)?,
        };
        for j in 0..n {
            if roots[j] == root {
                assign[j] = Some(e);
            }
        }
    }
    let assign: Vec<Elem> = assign.into_iter().map(|e| e.expect("assigned")).collect();
    for row in rows {
        for l in &phi.literals {
            let ground = l.map_terms(|t| match t {
                Term::Var(i) => Term::Param(assign[i]),
                Term::Param(p) => Term::Param(row[&p]),
            });
            match &ground {
                Literal::Eq { .. } => {
                    if !ground.holds(&d.pos, &[]) {
                        return Ok(Err("an equality literal fails".into()));
                    }
                }
                _ => {
                    let atom = ground.atom(&[]).expect("not an equality");
                    if ground.positive() {
                        if let Err(e) = d.add_pos(&atom) {
                            return Ok(Err(format!("{}", e)));
                        }
                    } else {
                        d.add_neg(atom);
                    }
                }
            }
        }
    }
    Ok(Ok(()))
}

#[derive(Clone, Debug)]
pub struct DividingCertificate {
    pub shape: RowShape,
    pub pattern: ArrayPattern,
    pub pattern_index: usize,
    pub k: usize,
    /// Why the `k` rows admit no common solution.
    pub reason: String,
}

impl DividingCertificate {
    /// Re-runs the joint search; true iff it is still inconsistent.
    pub fn recheck(&self, t: &TheorySpec, phi: &QfFormula) -> bool {
        matches!(joint_consistent(t, &self.shape, &self.pattern, phi, self.k), Ok(Joint::Inconsistent(_)))
    }
}

#[derive(Clone, Debug)]
pub enum DividesVerdict {
    Divides(DividingCertificate),
    NoWitnessFound { patterns: usize, k_max: usize, budget_hit: bool },
}

impl DividesVerdict {
    pub fn divides(&self) -> bool {
        matches!(self, DividesVerdict::Divides(_))
    }
}

pub fn pattern_set(
    t: &TheorySpec,
    amb: &FinStructure,
    params: &BTreeSet<Elem>,
    base: &BTreeSet<Elem>,
    budgets: &Budgets,
) -> Result<PatternSet, DivError> {
    if budgets.window != 2 {
        return Err(DivError::Window(budgets.window));
    }
    let shape = RowShape::new(t, amb, base, params, budgets.acl_budget)?;
    Ok(enumerate_patterns(t, &shape, budgets.validity_length.max(3), budgets.pattern_budget))
}

/// Searches for a pattern over `base` along which `phi` is `k`-inconsistent
/// for some `k ≤ k_max`.
pub fn divides(
    t: &TheorySpec,
    amb: &FinStructure,
    phi: &QfFormula,
    base: &BTreeSet<Elem>,
    budgets: &Budgets,
) -> Result<DividesVerdict, DivError> {
    let set = pattern_set(t, amb, &phi.params(), base, budgets)?;
    for (pi, p) in set.patterns.iter().enumerate() {
        for k in 1..=budgets.k_max {
            if k > set.validity_length && !valid_at(t, &set.shape, p, k) {
                break;
            }
            match joint_consistent(t, &set.shape, p, phi, k)? {
                Joint::Consistent(_) => {}
                Joint::ArrayInconsistent(_) => break,
                Joint::Inconsistent(reason) => {
                    return Ok(DividesVerdict::Divides(DividingCertificate {
                        shape: set.shape.clone(),
                        pattern: p.clone(),
                        pattern_index: pi,
                        k,
                        reason,
                    }));
                }
            }
        }
    }
    Ok(DividesVerdict::NoWitnessFound { patterns: set.patterns.len(), k_max: budgets.k_max, budget_hit: set.budget_hit })
}

#[derive(Clone, Debug)]
pub struct Realization {
    pub pattern: usize,
    /// Index into the certificate's modes, per row.
    pub modes: Vec<usize>,
    pub structure: FinStructure,
    /// Image of the left tuple.
    pub left: Vec<Elem>,
    /// Image of the right tuple in each row.
    pub rows: Vec<Vec<Elem>>,
}

impl Realization {
    pub fn uses_only_identity(&self) -> bool {
        self.modes.iter().all(|&m| m == 0)
    }
}

#[derive(Clone, Debug)]
pub struct NonDividingCertificate {
    pub window: usize,
    pub length: usize,
    pub patterns: PatternSet,
    /// Automorphisms of the row source fixing the base and the right tuple;
    /// the identity comes first.
    pub modes: Vec<PartialMap>,
    /// One per pattern valid at the certificate length.
    pub realizations: Vec<Realization>,
    /// Patterns not realizable at the certificate length.
    pub skipped: Vec<usize>,
}

impl NonDividingCertificate {
    /// Re-checks every recorded realization against the original pair.
    pub fn recheck(
        &self,
        t: &TheorySpec,
        amb: &FinStructure,
        a: &[Elem],
        b: &[Elem],
        base: &BTreeSet<Elem>,
        acl_budget: usize,
    ) -> bool {
        let right: Vec<Elem> = a.iter().chain(b).copied().collect();
        self.realizations.iter().all(|r| {
            t.accepts(&r.structure)
                && r.rows.iter().all(|row| {
                    let left: Vec<Elem> = r.left.iter().chain(row).copied().collect();
                    same_type_across(t, &r.structure, &left, amb, &right, base, acl_budget).unwrap_or(false)
                })
        })
    }
}

#[derive(Clone, Debug)]
pub enum NonDividing {
    Certificate(NonDividingCertificate),
    FailedPattern {
        patterns: PatternSet,
        index: usize,
        /// Mode assignments tried; false if the cap cut the search short.
        exhaustive: bool,
        tried: usize,
    },
}

impl NonDividing {
    pub fn succeeded(&self) -> bool {
        matches!(self, NonDividing::Certificate(_))
    }
}

/// For every pattern of copies of `b` over `base`, looks for one `a'` with
/// `a' b_i ≡_base a b` in every row of a `length`-row array.
pub fn nondividing_certificate(
    t: &TheorySpec,
    amb: &FinStructure,
    a: &[Elem],
    b: &[Elem],
    base: &BTreeSet<Elem>,
    budgets: &Budgets,
) -> Result<NonDividing, DivError> {
    let params: BTreeSet<Elem> = b.iter().copied().collect();
    let set = pattern_set(t, amb, &params, base, budgets)?;
    let shape = &set.shape;
    let kr: BTreeSet<Elem> = shape.source.universe();

    let mut pinned: BTreeSet<Elem> = base.clone();
    pinned.extend(b.iter().copied());
    let mut modes = automorphisms(&shape.source, &PartialMap::identity(pinned), usize::MAX);
    modes.sort_by_key(|m| !m.is_identity());

    let mut x = base.clone();
    x.extend(a.iter().copied());
    x.extend(b.iter().copied());
    let full = acl(t, amb, &x, budgets.acl_budget)?;
    if full.budget_hit {
        return Err(TypeError::AclBudget(budgets.acl_budget).into());
    }
    let new: BTreeSet<Elem> = full.closure.difference(&kr).copied().collect();
    let mut xa = base.clone();
    xa.extend(a.iter().copied());
    let over_a = acl(t, amb, &xa, budgets.acl_budget)?;
    if over_a.budget_hit {
        return Err(TypeError::AclBudget(budgets.acl_budget).into());
    }
    let shared: BTreeSet<Elem> = new.intersection(&over_a.closure).copied().collect();
    let whole = amb.induced(&full.closure);
    let atoms: Vec<Atom> = whole.atoms().filter(|at| at.elems().iter().any(|e| new.contains(e))).collect();
    let elems: Vec<Elem> = whole.elements().collect();
    let negs = relation_complement(&whole, &elems, &new);

    let length = budgets.length;
    let m = modes.len();
    let mut realizations = Vec::new();
    let mut skipped = Vec::new();
    for (pi, p) in set.patterns.iter().enumerate() {
        if length > set.validity_length && !valid_at(t, shape, p, length) {
            skipped.push(pi);
            continue;
        }
        let inst = instantiate(shape, p, length).expect("valid pattern");
        let mut tried = 0;
        let mut found = None;
        for assignment in mode_assignments(m, length, budgets.mode_cap) {
            tried += 1;
            let mut hit = None;
            for joint in [&shared, &new] {
                hit = realize(t, amb, a, b, base, &inst, &modes, &assignment, (&new, joint), &atoms, &negs, budgets)?;
                if hit.is_some() || shared.len() == new.len() {
                    break;
                }
            }
            if let Some(r) = hit {
                found = Some(Realization { pattern: pi, ..r });
                break;
            }
        }
        match found {
            Some(r) => realizations.push(r),
            None => {
                let total = m.checked_pow(length as u32).unwrap_or(usize::MAX);
                return Ok(NonDividing::FailedPattern {
                    patterns: set.clone(),
                    index: pi,
                    exhaustive: tried >= total,
                    tried,
                });
            }
        }
    }
    Ok(NonDividing::Certificate(NonDividingCertificate {
        window: budgets.window,
        length,
        patterns: set,
        modes,
        realizations,
        skipped,
    }))
}

/// Uniform assignments first, then the rest in lexicographic order.
fn mode_assignments(m: usize, length: usize, cap: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0..m).map(|i| alloc::vec![i; length]).collect();
    let mut cur = alloc::vec![0usize; length];
    loop {
        if out.len() >= cap.max(m) {
            break;
        }
        if cur.iter().any(|&c| c != cur[0]) {
            out.push(cur.clone());
        }
        let mut i = length;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < m {
                break;
            }
            cur[i] = 0;
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn realize(
    t: &TheorySpec,
    amb: &FinStructure,
    a: &[Elem],
    b: &[Elem],
    base: &BTreeSet<Elem>,
    inst: &crate::pattern::Instance,
    modes: &[PartialMap],
    assignment: &[usize],
    (new, shared): (&BTreeSet<Elem>, &BTreeSet<Elem>),
    atoms: &[Atom],
    negs: &[Atom],
    budgets: &Budgets,
) -> Result<Option<Realization>, DivError> {
    let mut d = inst.diagram.clone();
    let copy = |d: &mut Diagram, e: Elem, tag: &str| {
        d.pos.add_named(amb.sort_of(e).expect("element"), &format!("{}'{tag}", amb.label(e)))
    };
    let fresh: BTreeMap<Elem, Elem> = shared.iter().map(|&e| (e, copy(&mut d, e, ""))).collect();
    let mut phis: Vec<BTreeMap<Elem, Elem>> = Vec::with_capacity(assignment.len());
    for (i, &mi) in assignment.iter().enumerate() {
        let row = &inst.rows[i];
        let mut m: BTreeMap<Elem, Elem> = row.iter().map(|(&s, _)| (s, row[&modes[mi].get(s).unwrap_or(s)])).collect();
        m.extend(fresh.iter().map(|(&x, &y)| (x, y)));
        for &e in new.difference(shared) {
            m.insert(e, copy(&mut d, e, &format!("@{i}")));
        }
        phis.push(m);
    }
    let left: Vec<Elem> = a.iter().map(|e| phis[0][e]).collect();
    if phis.iter().any(|m| a.iter().map(|e| m[e]).ne(left.iter().copied())) {
        return Ok(None);
    }
    for m in &phis {
        for at in atoms {
            if d.add_pos(&at.map(|e| m[&e])).is_err() {
                return Ok(None);
            }
        }
        for at in negs {
            d.add_neg(at.map(|e| m[&e]));
        }
    }
    let Ok(s) = t.complete(&d, 1) else { return Ok(None) };
    let right: Vec<Elem> = a.iter().chain(b).copied().collect();
    let mut rows = Vec::with_capacity(inst.rows.len());
    for i in 0..inst.rows.len() {
        let row_b = inst.row_image(i, b);
        let l: Vec<Elem> = left.iter().chain(&row_b).copied().collect();
        if !same_type_across(t, &s, &l, amb, &right, base, budgets.acl_budget)? {
            return Ok(None);
        }
        rows.push(row_b);
    }
    Ok(Some(Realization { pattern: 0, modes: assignment.to_vec(), structure: s, left, rows }))
}

#[derive(Clone, Debug)]
pub struct ForksWitness {
    /// Every witness assignment implies some disjunct.
    pub entailed: bool,
    /// A witness assignment that implies no disjunct, if any.
    pub uncovered: Option<Vec<Elem>>,
    pub verdicts: Vec<DividesVerdict>,
}

impl ForksWitness {
    pub fn holds(&self) -> bool {
        self.entailed && self.verdicts.iter().all(|v| v.divides())
    }
}

/// Checks that `phi` implies the disjunction literal-wise, witnesses ranging
/// over `acl(base ∪ params)`, and that each disjunct divides over `base`.
pub fn forks_witness(
    t: &TheorySpec,
    amb: &FinStructure,
    phi: &ExFormula,
    disjuncts: &[QfFormula],
    base: &BTreeSet<Elem>,
    budgets: &Budgets,
) -> Result<ForksWitness, DivError> {
    let mut x = base.clone();
    x.extend(phi.params());
    let range = acl(t, amb, &x, budgets.acl_budget)?;
    if range.budget_hit {
        return Err(TypeError::AclBudget(budgets.acl_budget).into());
    }
    let pools: Vec<Vec<Elem>> = phi
        .witness_sorts()
        .iter()
        .map(|&so| range.closure.iter().copied().filter(|&e| amb.sort_of(e) == Some(so)).collect())
        .collect();
    let mut uncovered = None;
    crate::diagram::for_each_tuple(&pools, &mut |w| {
        if uncovered.is_some() {
            return;
        }
        let bound = phi.matrix.bind_from(phi.free, w);
        if bound.literals.iter().any(|l| l.is_ground() && !l.holds(amb, &[])) {
            return;
        }
        let rest: Vec<&Literal> = bound.literals.iter().filter(|l| !l.is_ground()).collect();
        let covered = disjuncts.iter().any(|dj| dj.literals.iter().all(|l| rest.contains(&l) || (l.is_ground() && l.holds(amb, &[]))));
        if !covered {
            uncovered = Some(w.to_vec());
        }
    });
    let mut verdicts = Vec::with_capacity(disjuncts.len());
    for dj in disjuncts {
        verdicts.push(divides(t, amb, dj, base, budgets)?);
    }
    Ok(ForksWitness { entailed: uncovered.is_none(), uncovered, verdicts })
}
