#![allow(dead_code)]

use std::collections::BTreeSet;

use divcheck_core::formula::{Literal, QfFormula, Term};
use divcheck_core::{Elem, FinStructure, TheorySpec};

pub fn set(xs: &[Elem]) -> BTreeSet<Elem> {
    xs.iter().copied().collect()
}

pub fn el(s: &FinStructure, name: &str) -> Elem {
    s.element_by_name(name).unwrap_or_else(|| panic!("no element {name}"))
}


pub struct Config {
    pub theory: TheorySpec,
    pub s: FinStructure,
}

impl Config {
    pub fn e(&self, name: &str) -> Elem {
        el(&self.s, name)
    }

    pub fn set(&self, names: &[&str]) -> BTreeSet<Elem> {
        names.iter().map(|n| self.e(n)).collect()
    }
}

fn add(s: &mut FinStructure, sort: &str, name: &str) -> Elem {
    let so = s.signature().sort_id(sort).unwrap();
    s.add_named(so, name)
}

fn r(s: &mut FinStructure, rel: &str, args: &[Elem]) {
    let id = s.signature().relation_id(rel).unwrap();
    s.add_relation(id, args.to_vec()).unwrap();
}

pub fn circular() -> Config {
    let t = TheorySpec::circular();
    let mut s = t.new_structure();
    let a = add(&mut s, "O", "a");
    let d1 = add(&mut s, "O", "d1");
    let d2 = add(&mut s, "O", "d2");
    for tr in [[d1, a, d2], [a, d2, d1], [d2, d1, a]] {
        r(&mut s, "cyc", &tr);
    }
    let p = s.signature().sort_id("P").unwrap();
    let b = s.add_pair(p, d1, d2).unwrap();
    s.set_name(b, "b");
    Config { theory: t, s }
}

pub fn generic() -> Config {
    let t = TheorySpec::generic_function();
    let mut s = t.new_structure();
    let f = s.signature().function_id("f").unwrap();
    let m: Vec<Elem> = (0..2).map(|i| add(&mut s, "O", &format!("m{i}"))).collect();
    let d1 = add(&mut s, "O", "d1");
    let d2 = add(&mut s, "O", "d2");
    let a = add(&mut s, "O", "a");
    let set_f = |s: &mut FinStructure, x: Elem, y: Elem, v: Elem| {
        s.set_function(f, vec![x, y], v).unwrap();
    };
    for &x in &m {
        for &y in &m {
            set_f(&mut s, x, y, x);
        }
    }
    for &d in &[d1, d2] {
        for &e in &[d1, d2] {
            set_f(&mut s, d, e, d);
        }
        for &x in &m {
            set_f(&mut s, x, d, d);
            set_f(&mut s, d, x, d);
        }
    }
    set_f(&mut s, a, a, a);
    for &x in &m {
        set_f(&mut s, a, x, a);
        set_f(&mut s, x, a, a);
    }
    set_f(&mut s, a, d1, a);
    set_f(&mut s, d1, a, a);
    set_f(&mut s, a, d2, d1);
    set_f(&mut s, d2, a, d1);
    let p = s.signature().sort_id("P").unwrap();
    let b = s.add_pair(p, d1, d2).unwrap();
    s.set_name(b, "b");
    Config { theory: t, s }
}

pub fn og() -> Config {
    let t = TheorySpec::og();
    let mut s = t.constants_only();
    let a = add(&mut s, "O", "a");
    let b = add(&mut s, "G", "b");
    let zero = el(&s, "0");
    r(&mut s, "E", &[a, b, zero]);
    Config { theory: t, s }
}

pub fn incidence() -> Config {
    let t = TheorySpec::incidence(4, 2).unwrap();
    let mut s = t.new_structure();
    let a: Vec<Elem> = (0..3).map(|i| add(&mut s, "P", &format!("a{i}"))).collect();
    let d: Vec<Elem> = (0..3).map(|i| add(&mut s, "P", &format!("d{i}"))).collect();
    let b: Vec<Elem> = (0..2).map(|i| add(&mut s, "L", &format!("b{i}"))).collect();
    let e = add(&mut s, "L", "e");
    r(&mut s, "I", &[d[0], e]);
    r(&mut s, "I", &[d[1], e]);
    for &di in &d {
        for &bj in &b {
            r(&mut s, "I", &[di, bj]);
        }
    }
    for &ai in &a {
        r(&mut s, "I", &[ai, e]);
    }
    Config { theory: t, s }
}

pub fn rel_lit(c: &Config, name: &str, args: Vec<Term>, positive: bool) -> Literal {
    Literal::Rel { rel: c.s.signature().relation_id(name).unwrap(), args, positive }
}

pub fn fun_lit(c: &Config, args: Vec<Term>, value: Term) -> Literal {
    Literal::Fun { fun: c.s.signature().function_id("f").unwrap(), args, value, positive: true }
}

pub fn one_var(c: &Config, sort: &str, literals: Vec<Literal>) -> QfFormula {
    QfFormula::new(vec![c.s.signature().sort_id(sort).unwrap()], literals)
}
