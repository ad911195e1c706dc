//! Ternary independence relations derived from acl and dividing.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::dividing::{nondividing_certificate, Budgets, DivError, NonDividing};
use crate::structure::{Elem, FinStructure};
use crate::theory::TheorySpec;
use crate::typespace::{acl, TypeError};

/// Largest set whose subsets are enumerated by [`m_big_indep`].
pub const SUBSET_GUARD: usize = 16;

fn closure(t: &TheorySpec, amb: &FinStructure, x: &BTreeSet<Elem>, budget: usize) -> Result<BTreeSet<Elem>, TypeError> {
    let r = acl(t, amb, x, budget)?;
    if r.budget_hit {
        return Err(TypeError::AclBudget(budget));
    }
    Ok(r.closure)
}

fn union(a: &BTreeSet<Elem>, b: &BTreeSet<Elem>) -> BTreeSet<Elem> {
    a.union(b).copied().collect()
}

/// `acl(AC) ∩ acl(BC) = acl(C)`.
pub fn a_indep(
    t: &TheorySpec,
    amb: &FinStructure,
    a: &BTreeSet<Elem>,
    b: &BTreeSet<Elem>,
    c: &BTreeSet<Elem>,
    budget: usize,
) -> Result<bool, TypeError> {
    let ka = closure(t, amb, &union(a, c), budget)?;
    let kb = closure(t, amb, &union(b, c), budget)?;
    let kc = closure(t, amb, c, budget)?;
    Ok(ka.intersection(&kb).copied().collect::<BTreeSet<_>>() == kc)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetVerdict {
    pub holds: bool,
    /// First intermediate base where algebraic independence fails.
    pub failing_base: Option<BTreeSet<Elem>>,
}

fn over_subsets(
    t: &TheorySpec,
    amb: &FinStructure,
    a: &BTreeSet<Elem>,
    b: &BTreeSet<Elem>,
    c: &BTreeSet<Elem>,
    pool: Vec<Elem>,
    budget: usize,
) -> Result<SubsetVerdict, DivError> {
    if pool.len() > SUBSET_GUARD {
        return Err(DivError::Unsupported(alloc::format!("{} elements exceed the subset guard", pool.len())));
    }
    for mask in 0u32..(1 << pool.len()) {
        let mut d = c.clone();
        d.extend((0..pool.len()).filter(|i| mask & (1 << i) != 0).map(|i| pool[i]));
        if !a_indep(t, amb, a, b, &d, budget)? {
            return Ok(SubsetVerdict { holds: false, failing_base: Some(d) });
        }
    }
    Ok(SubsetVerdict { holds: true, failing_base: None })
}

/// `A ⫝a_D B` for every `C ⊆ D ⊆ acl(BC)`.
pub fn m_big_indep(
    t: &TheorySpec,
    amb: &FinStructure,
    a: &BTreeSet<Elem>,
    b: &BTreeSet<Elem>,
    c: &BTreeSet<Elem>,
    budget: usize,
) -> Result<SubsetVerdict, DivError> {
    let kbc = closure(t, amb, &union(b, c), budget)?;
    let pool: Vec<Elem> = kbc.difference(c).copied().collect();
    over_subsets(t, amb, a, b, c, pool, budget)
}

/// `A ⫝a_D B` for every `C ⊆ D ⊆ BC`.
pub fn m_small_indep(
    t: &TheorySpec,
    amb: &FinStructure,
    a: &BTreeSet<Elem>,
    b: &BTreeSet<Elem>,
    c: &BTreeSet<Elem>,
    budget: usize,
) -> Result<SubsetVerdict, DivError> {
    let pool: Vec<Elem> = b.difference(c).copied().collect();
    over_subsets(t, amb, a, b, c, pool, budget)
}

/// Non-dividing of `A` against the tuple enumerating `acl(BC)`.
pub fn da_indep(
    t: &TheorySpec,
    amb: &FinStructure,
    a: &[Elem],
    b: &BTreeSet<Elem>,
    c: &BTreeSet<Elem>,
    budgets: &Budgets,
) -> Result<NonDividing, DivError> {
    let kbc = closure(t, amb, &union(b, c), budgets.acl_budget)?;
    let right: Vec<Elem> = kbc.into_iter().collect();
    nondividing_certificate(t, amb, a, &right, c, budgets)
}
