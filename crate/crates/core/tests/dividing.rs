mod common;

use common::*;
use divcheck_core::dividing::*;
use divcheck_core::formula::{ExFormula, Literal, QfFormula, Term};
use divcheck_core::indep::*;
use divcheck_core::pattern::{instantiate, ArrayPattern, PatternSet};

fn og_e(c: &Config, colour: &str) -> QfFormula {
    one_var(c, "O", vec![rel_lit(c, "E", vec![Term::Var(0), Term::Param(c.e("b")), Term::Param(c.e(colour))], true)])
}

fn circular_arc(c: &Config) -> QfFormula {
    let (d1, d2) = (c.e("d1"), c.e("d2"));
    one_var(c, "O", vec![rel_lit(c, "cyc", vec![Term::Param(d1), Term::Var(0), Term::Param(d2)], true)])
}

fn og_patterns(c: &Config, base: &[&str]) -> PatternSet {
    pattern_set(&c.theory, &c.s, &c.set(&["b"]), &c.set(base), &Budgets::default()).unwrap()
}

fn clique(ps: &PatternSet) -> (usize, &ArrayPattern) {
    ps.patterns
        .iter()
        .enumerate()
        .find(|(_, p)| {
            let d = p.describe(&ps.shape);
            d.contains("R(b@0,b@1,0)")
        })
        .expect("R(.,.,0) clique pattern")
}

fn edgeless(ps: &PatternSet) -> &ArrayPattern {
    ps.patterns.iter().find(|p| p.link.is_empty() && !p.is_constant_sequence()).expect("edgeless pattern")
}

#[test]
fn og_clique_is_two_inconsistent() {
    let c = og();
    let ps = og_patterns(&c, &["0", "1"]);
    let (_, p) = clique(&ps);
    let phi = og_e(&c, "0");
    assert!(matches!(joint_consistent(&c.theory, &ps.shape, p, &phi, 2).unwrap(), Joint::Inconsistent(_)));
    assert!(joint_consistent(&c.theory, &ps.shape, p, &phi, 1).unwrap().is_consistent());
}

#[test]
fn og_edgeless_rows_share_a_point() {
    let c = og();
    let ps = og_patterns(&c, &["0", "1"]);
    let p = edgeless(&ps);
    assert!(joint_consistent(&c.theory, &ps.shape, p, &og_e(&c, "0"), 5).unwrap().is_consistent());
}

#[test]
fn og_clique_instance_is_a_triangle() {
    let c = og();
    let ps = og_patterns(&c, &["0", "1"]);
    let (_, p) = clique(&ps);
    let inst = instantiate(&ps.shape, p, 3).unwrap();
    let r = c.s.signature().relation_id("R").unwrap();
    assert_eq!(inst.diagram.pos.relation(r).len(), 6);
    let one = instantiate(&ps.shape, p, 1).unwrap();
    assert_eq!(one.diagram.pos.len(), ps.shape.source.len());
}

#[test]
fn generic_constant_d2_blocks_f_value() {
    let c = generic();
    let m0 = c.set(&["m0", "m1"]);
    let ps = pattern_set(&c.theory, &c.s, &c.set(&["d1", "d2"]), &m0, &Budgets::default()).unwrap();
    let d2 = ps.shape.coord_index(c.e("d2")).unwrap();
    let d1 = ps.shape.coord_index(c.e("d1")).unwrap();
    let p = ps.patterns.iter().find(|p| p.constant[d2] && !p.constant[d1]).expect("d2 constant pattern");
    let phi = one_var(&c, "O", vec![fun_lit(&c, vec![Term::Var(0), Term::Param(c.e("d2"))], Term::Param(c.e("d1")))]);
    assert!(matches!(joint_consistent(&c.theory, &ps.shape, p, &phi, 2).unwrap(), Joint::Inconsistent(_)));
}

#[test]
fn og_divides_over_constants_on_the_clique() {
    let c = og();
    let v = divides(&c.theory, &c.s, &og_e(&c, "0"), &c.set(&["0", "1"]), &Budgets::default()).unwrap();
    let DividesVerdict::Divides(cert) = v else { panic!("expected a dividing witness") };
    assert_eq!(cert.k, 2);
    assert_eq!(cert.pattern.describe(&cert.shape), "constant {}; links {R(b@0,b@1,0),R(b@1,b@0,0)}");
    assert!(cert.recheck(&c.theory, &og_e(&c, "0")));
}

#[test]
fn tautology_never_divides() {
    let c = og();
    let o = c.s.signature().sort_id("O").unwrap();
    let phi = QfFormula::new(vec![o], vec![Literal::Eq { left: Term::Var(0), right: Term::Var(0), positive: true }]);
    let v = divides(&c.theory, &c.s, &phi, &set(&[]), &Budgets::default()).unwrap();
    assert!(!v.divides());
}

#[test]
fn circular_arc_divides_at_two() {
    let c = circular();
    let v = divides(&c.theory, &c.s, &circular_arc(&c), &set(&[]), &Budgets::default()).unwrap();
    let DividesVerdict::Divides(cert) = v else { panic!("expected a dividing witness") };
    assert_eq!(cert.k, 2);
}

#[test]
fn og_nondividing_over_empty_base() {
    let c = og();
    let nd = nondividing_certificate(&c.theory, &c.s, &[c.e("a")], &[c.e("b")], &set(&[]), &Budgets::default()).unwrap();
    let NonDividing::Certificate(cert) = &nd else { panic!("expected a certificate") };
    assert_eq!(cert.patterns.patterns.len(), 4);
    let shape = &cert.patterns.shape;
    let swapped: Vec<String> = cert
        .realizations
        .iter()
        .filter(|r| !r.uses_only_identity())
        .map(|r| cert.patterns.patterns[r.pattern].describe(shape))
        .collect();
    assert_eq!(swapped, ["constant {}; links {R(b@0,b@1,0),R(b@1,b@0,0)}"]);
    assert!(cert.recheck(&c.theory, &c.s, &[c.e("a")], &[c.e("b")], &set(&[]), 64));
}

#[test]
fn og_fails_over_constants() {
    let c = og();
    let nd = nondividing_certificate(&c.theory, &c.s, &[c.e("a")], &[c.e("b")], &c.set(&["0", "1"]), &Budgets::default()).unwrap();
    let NonDividing::FailedPattern { patterns, index, .. } = &nd else { panic!("expected a failed pattern") };
    assert_eq!(
        patterns.patterns[*index].describe(&patterns.shape),
        "constant {}; links {R(b@0,b@1,0),R(b@1,b@0,0)}"
    );
}

#[test]
fn circular_nondividing_and_da() {
    let c = circular();
    let b = Budgets::default();
    let nd = nondividing_certificate(&c.theory, &c.s, &[c.e("a")], &[c.e("b")], &set(&[]), &b).unwrap();
    assert!(nd.succeeded());
    let da = da_indep(&c.theory, &c.s, &[c.e("a")], &c.set(&["b"]), &set(&[]), &b).unwrap();
    assert!(!da.succeeded());
}

#[test]
fn circular_forks_witness() {
    let c = circular();
    let o = c.s.signature().sort_id("O").unwrap();
    let cyc = c.s.signature().relation_id("cyc").unwrap();
    let ex = ExFormula {
        free: 1,
        matrix: QfFormula::new(
            vec![o, o, o],
            vec![
                Literal::Pair { pair: Term::Param(c.e("b")), left: Term::Var(1), right: Term::Var(2), positive: true },
                Literal::Rel { rel: cyc, args: vec![Term::Var(1), Term::Var(0), Term::Var(2)], positive: true },
            ],
        ),
    };
    let (d1, d2) = (Term::Param(c.e("d1")), Term::Param(c.e("d2")));
    let arcs = [
        one_var(&c, "O", vec![rel_lit(&c, "cyc", vec![d1, Term::Var(0), d2], true)]),
        one_var(&c, "O", vec![rel_lit(&c, "cyc", vec![d2, Term::Var(0), d1], true)]),
    ];
    let w = forks_witness(&c.theory, &c.s, &ex, &arcs, &set(&[]), &Budgets::default()).unwrap();
    assert!(w.holds());
}

fn generic_forking_formula(c: &Config) -> ExFormula {
    let o = c.s.signature().sort_id("O").unwrap();
    ExFormula {
        free: 1,
        matrix: QfFormula::new(
            vec![o, o, o],
            vec![
                Literal::Pair { pair: Term::Param(c.e("b")), left: Term::Var(1), right: Term::Var(2), positive: true },
                fun_lit(c, vec![Term::Var(0), Term::Var(2)], Term::Var(1)),
            ],
        ),
    }
}

#[test]
fn generic_certificate_and_independence() {
    let c = generic();
    let b = Budgets::default();
    let m0 = c.set(&["m0", "m1"]);
    let nd = nondividing_certificate(&c.theory, &c.s, &[c.e("a")], &[c.e("b")], &m0, &b).unwrap();
    let NonDividing::Certificate(cert) = &nd else { panic!("expected a certificate") };
    let shape = &cert.patterns.shape;
    let d2 = shape.coord_index(c.e("d2")).unwrap();
    for r in &cert.realizations {
        let p = &cert.patterns.patterns[r.pattern];
        let varies = p.constant.iter().any(|&k| !k);
        if p.constant[d2] && varies {
            assert!(!r.uses_only_identity(), "{}", p.describe(shape));
        } else {
            assert!(r.uses_only_identity(), "{}", p.describe(shape));
        }
    }
    let mut md2 = m0.clone();
    md2.insert(c.e("d2"));
    assert!(!a_indep(&c.theory, &c.s, &c.set(&["a"]), &c.set(&["b"]), &md2, 64).unwrap());
    let m = m_big_indep(&c.theory, &c.s, &c.set(&["a"]), &c.set(&["b"]), &m0, 64).unwrap();
    assert!(!m.holds);
    assert_eq!(m.failing_base, Some(md2));
}

#[test]
fn generic_forks_but_disjuncts_divide() {
    let c = generic();
    let (d1, d2) = (Term::Param(c.e("d1")), Term::Param(c.e("d2")));
    let disjuncts = [
        one_var(&c, "O", vec![fun_lit(&c, vec![Term::Var(0), d2], d1)]),
        one_var(&c, "O", vec![fun_lit(&c, vec![Term::Var(0), d1], d2)]),
    ];
    let w = forks_witness(&c.theory, &c.s, &generic_forking_formula(&c), &disjuncts, &c.set(&["m0", "m1"]), &Budgets::default())
        .unwrap();
    assert!(w.holds());
    for v in &w.verdicts {
        let DividesVerdict::Divides(cert) = v else { panic!("disjunct does not divide") };
        assert_eq!(cert.k, 2);
    }
}

#[test]
fn non_dividing_disjunct_breaks_witness() {
    let c = generic();
    let o = c.s.signature().sort_id("O").unwrap();
    let top = QfFormula::new(vec![o], vec![Literal::Eq { left: Term::Var(0), right: Term::Var(0), positive: true }]);
    let w = forks_witness(&c.theory, &c.s, &generic_forking_formula(&c), &[top], &c.set(&["m0", "m1"]), &Budgets::default())
        .unwrap();
    assert!(!w.holds());
}

#[test]
fn og_independence_examples() {
    let c = og();
    let b = Budgets::default();
    let (a, bb) = (c.set(&["a"]), c.set(&["b"]));
    assert!(a_indep(&c.theory, &c.s, &a, &bb, &set(&[]), 64).unwrap());
    assert!(m_small_indep(&c.theory, &c.s, &a, &bb, &set(&[]), 64).unwrap().holds);
    assert!(a_indep(&c.theory, &c.s, &a, &c.set(&["0"]), &set(&[]), 64).unwrap());
    assert!(!da_indep(&c.theory, &c.s, &[c.e("a")], &bb, &set(&[]), &b).unwrap().succeeded());
    assert!(da_indep(&c.theory, &c.s, &[c.e("a")], &c.set(&["0", "1"]), &set(&[]), &b).unwrap().succeeded());
}

#[test]
fn incidence_certificate_covers_every_pattern() {
    let c = incidence();
    let b = Budgets { length: 3, validity_length: 6, ..Budgets::default() };
    let nd = nondividing_certificate(
        &c.theory,
        &c.s,
        &[c.e("a0"), c.e("a1"), c.e("a2")],
        &[c.e("b0"), c.e("b1")],
        &set(&[]),
        &b,
    )
    .unwrap();
    let NonDividing::Certificate(cert) = &nd else { panic!("expected a certificate") };
    assert_eq!(cert.patterns.patterns.len(), 25);
    assert_eq!(cert.realizations.len(), 25);
    assert!(cert.skipped.is_empty());
}

#[test]
fn rejects_wider_window() {
    let c = og();
    let b = Budgets { window: 3, ..Budgets::default() };
    let err = divides(&c.theory, &c.s, &og_e(&c, "0"), &set(&[]), &b).unwrap_err();
    assert_eq!(err, DivError::Window(3));
}

