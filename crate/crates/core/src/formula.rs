//! Quantifier-free conjunctions and their existential closures.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::structure::{Atom, Elem, FinStructure, FunId, RelId, SortId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(usize),
    Param(Elem),
}

impl Term {
    fn resolve(self, assign: &[Elem]) -> Elem {
        match self {
            Term::Var(i) => assign[i],
            Term::Param(e) => e,
        }
    }

    fn bind(self, from: usize, values: &[Elem]) -> Term {
        match self {
            Term::Var(i) if i >= from => Term::Param(values[i - from]),
            t => t,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Literal {
    Rel { rel: RelId, args: Vec<Term>, positive: bool },
    Fun { fun: FunId, args: Vec<Term>, value: Term, positive: bool },
    Eq { left: Term, right: Term, positive: bool },
    /// `pair = {left, right}` for a pair-sort term.
    Pair { pair: Term, left: Term, right: Term, positive: bool },
}

impl Literal {
    pub fn positive(&self) -> bool {
        match self {
            Literal::Rel { positive, .. }
            | Literal::Fun { positive, .. }
            | Literal::Eq { positive, .. }
            | Literal::Pair { positive, .. } => *positive,
        }
    }

    pub fn terms(&self) -> Vec<Term> {
        match self {
            Literal::Rel { args, .. } => args.clone(),
            Literal::Fun { args, value, .. } => {
                let mut v = args.clone();
                v.push(*value);
                v
            }
            Literal::Eq { left, right, .. } => alloc::vec![*left, *right],
            Literal::Pair { pair, left, right, .. } => alloc::vec![*pair, *left, *right],
        }
    }

    pub fn map_terms(&self, mut f: impl FnMut(Term) -> Term) -> Literal {
        match self {
            Literal::Rel { rel, args, positive } => {
                Literal::Rel { rel: *rel, args: args.iter().map(|&t| f(t)).collect(), positive: *positive }
            }
            Literal::Fun { fun, args, value, positive } => Literal::Fun {
                fun: *fun,
                args: args.iter().map(|&t| f(t)).collect(),
                value: f(*value),
                positive: *positive,
            },
            Literal::Eq { left, right, positive } => Literal::Eq { left: f(*left), right: f(*right), positive: *positive },
            Literal::Pair { pair, left, right, positive } => {
                Literal::Pair { pair: f(*pair), left: f(*left), right: f(*right), positive: *positive }
            }
        }
    }

    pub fn is_ground(&self) -> bool {
        self.terms().iter().all(|t| matches!(t, Term::Param(_)))
    }

    /// The atom this literal asserts or denies, with every term resolved.
    /// `None` for equalities.
    pub fn atom(&self, assign: &[Elem]) -> Option<Atom> {
        match self {
            Literal::Rel { rel, args, .. } => Some(Atom::Rel(*rel, args.iter().map(|t| t.resolve(assign)).collect())),
            Literal::Fun { fun, args, value, .. } => Some(Atom::Fun(
                *fun,
                args.iter().map(|t| t.resolve(assign)).collect(),
                value.resolve(assign),
            )),
            Literal::Pair { pair, left, right, .. } => {
                Some(Atom::pair(pair.resolve(assign), left.resolve(assign), right.resolve(assign)))
            }
            Literal::Eq { .. } => None,
        }
    }

    pub fn holds(&self, s: &FinStructure, assign: &[Elem]) -> bool {
        let truth = match self {
            Literal::Eq { left, right, .. } => left.resolve(assign) == right.resolve(assign),
            _ => s.holds(&self.atom(assign).expect("not an equality")),
        };
        truth == self.positive()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct QfFormula {
    pub vars: Vec<SortId>,
    pub literals: Vec<Literal>,
}

impl QfFormula {
    pub fn new(vars: Vec<SortId>, literals: Vec<Literal>) -> Self {
        QfFormula { vars, literals }
    }

    /// The empty conjunction in the given variables (`x = x`).
    pub fn top(vars: Vec<SortId>) -> Self {
        QfFormula { vars, literals: Vec::new() }
    }

    pub fn params(&self) -> BTreeSet<Elem> {
        self.literals
            .iter()
            .flat_map(|l| l.terms())
            .filter_map(|t| match t {
                Term::Param(e) => Some(e),
                Term::Var(_) => None,
            })
            .collect()
    }

    /// Well-formed: variables in range and parameters present in `s`.
    pub fn well_formed(&self, s: &FinStructure) -> bool {
        self.literals.iter().flat_map(|l| l.terms()).all(|t| match t {
            Term::Var(i) => i < self.vars.len(),
            Term::Param(e) => s.contains(e),
        })
    }

    pub fn holds(&self, s: &FinStructure, assign: &[Elem]) -> bool {
        self.literals.iter().all(|l| l.holds(s, assign))
    }

    /// Replaces variables `from..` by the given elements.
    pub fn bind_from(&self, from: usize, values: &[Elem]) -> QfFormula {
        QfFormula {
            vars: self.vars[..from].to_vec(),
            literals: self.literals.iter().map(|l| l.map_terms(|t| t.bind(from, values))).collect(),
        }
    }

    pub fn with_literal(&self, l: Literal) -> QfFormula {
        let mut f = self.clone();
        f.literals.push(l);
        f
    }
}

/// `∃ w (matrix(x, w))` with `x` the first `free` variables of the matrix.
/// Witnesses range over the algebraic closure of the base and parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExFormula {
    pub free: usize,
    pub matrix: QfFormula,
}

impl ExFormula {
    pub fn witness_sorts(&self) -> &[SortId] {
        &self.matrix.vars[self.free..]
    }

    pub fn params(&self) -> BTreeSet<Elem> {
        self.matrix.params()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::TheorySpec;

    #[test]
    fn bind_and_hold() {
        let t = TheorySpec::generic_function();
        let mut s = t.new_structure();
        let a = s.add_element(SortId(0));
        let d = s.add_element(SortId(0));
        s.set_function(FunId(0), alloc::vec![a, d], a).unwrap();
        let phi = QfFormula::new(
            alloc::vec![SortId(0), SortId(0)],
            alloc::vec![Literal::Fun { fun: FunId(0), args: alloc::vec![Term::Var(0), Term::Var(1)], value: Term::Var(0), positive: true }],
        );
        assert!(phi.holds(&s, &[a, d]));
        assert!(!phi.holds(&s, &[d, a]));
        let bound = phi.bind_from(1, &[d]);
        assert_eq!(bound.vars.len(), 1);
        assert_eq!(bound.params(), [d].into());
        assert!(bound.holds(&s, &[a]));
    }
}
