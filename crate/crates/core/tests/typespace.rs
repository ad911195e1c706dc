mod common;

use common::*;
use divcheck_core::literal::parse_structure;
use divcheck_core::typespace::*;
use divcheck_core::{FinStructure, TheorySpec};

fn og_text(body: &str) -> FinStructure {
    let t = TheorySpec::og();
    let text = format!("C: 0 1\nconst 0 = 0\nconst 1 = 1\n{body}");
    parse_structure(t.signature.clone(), &text).unwrap()
}

#[test]
fn og_vertex_closure_adds_constants() {
    let c = og();
    let r = acl(&c.theory, &c.s, &c.set(&["b"]), DEFAULT_ACL_BUDGET).unwrap();
    assert_eq!(r.closure, c.set(&["b", "0", "1"]));
    assert!(!r.budget_hit);
}

#[test]
fn generic_closure_follows_f() {
    let c = generic();
    let r = acl(&c.theory, &c.s, &c.set(&["m0", "m1", "a", "d2"]), DEFAULT_ACL_BUDGET).unwrap();
    assert!(r.closure.contains(&c.e("d1")));
}

#[test]
fn incidence_common_points_join_closure() {
    let c = incidence();
    let r = acl(&c.theory, &c.s, &c.set(&["b0", "b1"]), DEFAULT_ACL_BUDGET).unwrap();
    for d in ["d0", "d1", "d2"] {
        assert!(r.closure.contains(&c.e(d)), "{d}");
    }
    for d in ["d0", "d1", "d2"] {
        let v = duplication_test(&c.theory, &c.s, c.e(d), &c.set(&["b0", "b1"]), 4).unwrap();
        let Duplication::Algebraic(k) = v else { panic!("{d} not algebraic") };
        assert!(k <= 3, "{d}: {k}");
    }
}

#[test]
fn duplication_examples() {
    let c = incidence();
    let v = duplication_test(&c.theory, &c.s, c.e("d0"), &c.set(&["b0", "b1", "d1", "d2"]), 4).unwrap();
    assert_eq!(v, Duplication::Algebraic(1));
    let v = duplication_test(&c.theory, &c.s, c.e("d0"), &c.set(&["d0"]), 4).unwrap();
    assert_eq!(v, Duplication::Algebraic(1));

    let g = og();
    for bound in [2, 4] {
        let v = duplication_test(&g.theory, &g.s, g.e("b"), &set(&[]), bound).unwrap();
        assert_eq!(v, Duplication::NotAlgebraicUpTo(bound));
    }
}

#[test]
fn colour_swap_over_empty_base_only() {
    let t = TheorySpec::og();
    let s = og_text("O: a p\nG: b q\nE(a,b,0)\nE(p,q,1)\n");
    let e = |n: &str| s.element_by_name(n).unwrap();
    let (left, right) = ([e("a"), e("b")], [e("p"), e("q")]);
    assert!(same_type(&t, &s, &left, &right, &set(&[]), DEFAULT_ACL_BUDGET).unwrap());
    let k = set(&[e("0"), e("1")]);
    assert!(!same_type(&t, &s, &left, &right, &k, DEFAULT_ACL_BUDGET).unwrap());
    assert!(same_type(&t, &s, &left, &left, &k, DEFAULT_ACL_BUDGET).unwrap());
}

#[test]
fn conjugate_examples() {
    let c = circular();
    let mut got = conjugates(&c.theory, &c.s, c.e("d1"), &c.set(&["b"]), 8, DEFAULT_ACL_BUDGET).unwrap();
    got.sort();
    assert_eq!(got, vec![c.e("d1"), c.e("d2")]);
    let own = conjugates(&c.theory, &c.s, c.e("a"), &c.set(&["a"]), 8, DEFAULT_ACL_BUDGET).unwrap();
    assert_eq!(own, vec![c.e("a")]);

    let g = og();
    let mut zero = conjugates(&g.theory, &g.s, g.e("0"), &set(&[]), 8, DEFAULT_ACL_BUDGET).unwrap();
    zero.sort();
    assert_eq!(zero, vec![g.e("0"), g.e("1")]);
}

#[test]
fn rule_and_duplication_closures_agree_on_fixtures() {
    for c in [og(), circular(), generic(), incidence()] {
        let elems: Vec<_> = c.s.elements().collect();
        let mut bases = vec![set(&[])];
        for (i, &e) in elems.iter().enumerate() {
            bases.push(set(&[e]));
            bases.extend(elems[i + 1..].iter().map(|&f| set(&[e, f])));
        }
        for x in bases {
            let rules = acl(&c.theory, &c.s, &x, DEFAULT_ACL_BUDGET).unwrap().closure;
            let dup = acl_by_duplication(&c.theory, &c.s, &x, 4).unwrap();
            assert_eq!(rules, dup, "{} from {:?}", c.theory.name, x);
        }
    }
}
