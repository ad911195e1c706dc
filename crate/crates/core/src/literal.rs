//! Text format for structures and formulas.
//!
//! A structure document is line oriented; `#` begins a comment unless it
//! starts a token.
//!
//! ```text
//! O: a d1 d2          elements of sort O, ids assigned in order
//! G: b#7              element `b` with id 7; a bare `#9` is unnamed
//! const 0 = z         interpretation of a constant symbol
//! pair p = {d1,d2}    pair element over the base sort of d1, d2
//! cyc(d1,a,d2)        relation atom
//! f(a,d2)=d1          function entry
//! ```
//!
//! A formula is `[x:O, y:G | w:O] lit & lit & ...` where the part after
//! `|` lists witness variables. Literals are `R(t,..)`, `f(t,..)=t`,
//! `t=t`, `p={t,t}`, each optionally negated with `!` (or `!=` for the
//! equational forms), and `true` for the empty conjunction. Terms not bound
//! as variables name elements of the ambient structure.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use crate::formula::{ExFormula, Literal, QfFormula, Term};
use crate::structure::{Atom, Elem, FinStructure, Signature, SortId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct LiteralError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> LiteralError {
    LiteralError { line, message: message.into() }
}

const RESERVED: &[char] = &['(', ')', ',', '=', '{', '}', '#', ':', '[', ']', '|', '&', '!'];

fn is_plain_name(s: &str) -> bool {
    !s.is_empty() && s != "const" && s != "pair" && s != "true" && !s.chars().any(|c| c.is_whitespace() || RESERVED.contains(&c))
}

/// How each element is referenced when printing `s`.
fn tokens(s: &FinStructure) -> BTreeMap<Elem, String> {
    let mut count: BTreeMap<&str, usize> = BTreeMap::new();
    for e in s.elements() {
        if let Some(n) = s.name_of(e) {
            *count.entry(n).or_default() += 1;
        }
    }
    s.elements()
        .map(|e| {
            let tok = match s.name_of(e) {
                Some(n) if is_plain_name(n) && count[n] == 1 => n.to_string(),
                _ => format!("{}", e),
            };
            (e, tok)
        })
        .collect()
}

fn join(items: impl IntoIterator<Item = String>) -> String {
    items.into_iter().collect::<Vec<_>>().join(",")
}

pub fn write_structure(s: &FinStructure) -> String {
    let sig = s.signature();
    let tok = tokens(s);
    let mut out = String::new();
    let mut next = 0u32;
    let mut line: Option<(SortId, String)> = None;
    for e in s.elements() {
        let sort = s.sort_of(e).expect("element");
        let decl = match (s.name_of(e), e.0 == next) {
            (Some(n), true) if is_plain_name(n) && tok[&e] == n => n.to_string(),
            (Some(n), _) if is_plain_name(n) => format!("{}{}", n, e),
            _ => format!("{}", e),
        };
        next = e.0 + 1;
        match &mut line {
            Some((so, l)) if *so == sort => {
                l.push(' ');
                l.push_str(&decl);
            }
            _ => {
                if let Some((so, l)) = line.take() {
                    let _ = writeln!(out, "{}: {}", sig.sort(so).name, l);
                }
                line = Some((sort, decl));
            }
        }
    }
    if let Some((so, l)) = line {
        let _ = writeln!(out, "{}: {}", sig.sort(so).name, l);
    }
    for c in sig.constant_ids() {
        if let Some(e) = s.constant(c) {
            let _ = writeln!(out, "const {} = {}", sig.constant(c).name, tok[&e]);
        }
    }
    for (p, (x, y)) in s.pairs() {
        let _ = writeln!(out, "pair {} = {{{},{}}}", tok[p], tok[x], tok[y]);
    }
    for atom in s.atoms() {
        match atom {
            Atom::Rel(r, args) => {
                let _ = writeln!(out, "{}({})", sig.relation(r).name, join(args.iter().map(|e| tok[e].clone())));
            }
            Atom::Fun(f, args, v) => {
                let _ = writeln!(out, "{}({})={}", sig.function(f).name, join(args.iter().map(|e| tok[e].clone())), tok[&v]);
            }
            Atom::Pair(..) => {}
        }
    }
    out
}

/// Splits `name#id`, `#id` or `name`.
fn split_decl(tok: &str, line: usize) -> Result<(Option<&str>, Option<u32>), LiteralError> {
    match tok.find('#') {
        None => Ok((Some(tok), None)),
        Some(i) => {
            let id = tok[i + 1..].parse::<u32>().map_err(|_| err(line, format!("bad element id in `{tok}`")))?;
            let name = &tok[..i];
            Ok(((!name.is_empty()).then_some(name), Some(id)))
        }
    }
}

fn resolve(s: &FinStructure, tok: &str, line: usize) -> Result<Elem, LiteralError> {
    let tok = tok.trim();
    if let Some(id) = tok.strip_prefix('#') {
        let e = Elem(id.parse().map_err(|_| err(line, format!("bad element id `{tok}`")))?);
        return if s.contains(e) { Ok(e) } else { Err(err(line, format!("unknown element `{tok}`"))) };
    }
    s.element_by_name(tok).ok_or_else(|| err(line, format!("unknown element `{tok}`")))
}

/// `name(args)` with the remainder of the line after `)`.
fn call(text: &str) -> Option<(&str, Vec<&str>, &str)> {
    let open = text.find('(')?;
    let close = text.find(')')?;
    if close < open {
        return None;
    }
    let args = text[open + 1..close].split(',').map(str::trim).filter(|a| !a.is_empty()).collect();
    Some((text[..open].trim(), args, text[close + 1..].trim()))
}

fn braces(text: &str) -> Option<(&str, &str)> {
    let inner = text.trim().strip_prefix('{')?.strip_suffix('}')?;
    let (x, y) = inner.split_once(',')?;
    Some((x.trim(), y.trim()))
}

pub fn parse_structure(sig: Arc<Signature>, text: &str) -> Result<FinStructure, LiteralError> {
    let mut s = FinStructure::new(sig.clone());
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("const ") {
            let (name, tok) = rest.split_once('=').ok_or_else(|| err(n, "expected `const NAME = ELEM`"))?;
            let c = sig.constant_id(name.trim()).ok_or_else(|| err(n, format!("unknown constant `{}`", name.trim())))?;
            let e = resolve(&s, tok, n)?;
            s.set_constant(c, e).map_err(|e| err(n, e.to_string()))?;
        } else if let Some(rest) = line.strip_prefix("pair ") {
            let (ptok, body) = rest.split_once('=').ok_or_else(|| err(n, "expected `pair P = {X,Y}`"))?;
            let (x, y) = braces(body).ok_or_else(|| err(n, "expected `{X,Y}`"))?;
            let (x, y) = (resolve(&s, x, n)?, resolve(&s, y, n)?);
            let base = s.sort_of(x).expect("resolved");
            let ptok = ptok.trim();
            match resolve(&s, ptok, n) {
                Ok(p) => s.register_pair(p, x, y).map_err(|e| err(n, e.to_string()))?,
                Err(_) => {
                    let sort = sig.pair_sorts_over(base).next().ok_or_else(|| err(n, "no pair sort over this sort"))?;
                    let (name, id) = split_decl(ptok, n)?;
                    let p = declare(&mut s, sort, name, id, n)?;
                    s.register_pair(p, x, y).map_err(|e| err(n, e.to_string()))?;
                }
            }
        } else if let Some((head, rest)) = line.split_once(':').filter(|(h, _)| !h.contains('(')) {
            let sort = sig.sort_id(head.trim()).ok_or_else(|| err(n, format!("unknown sort `{}`", head.trim())))?;
            for tok in rest.split_whitespace() {
                let (name, id) = split_decl(tok, n)?;
                declare(&mut s, sort, name, id, n)?;
            }
        } else {
            let (name, args, rest) = call(line).ok_or_else(|| err(n, format!("cannot parse `{line}`")))?;
            let elems = args.iter().map(|a| resolve(&s, a, n)).collect::<Result<Vec<_>, _>>()?;
            let res = if let Some(r) = sig.relation_id(name) {
                if !rest.is_empty() {
                    return Err(err(n, "trailing text after relation atom"));
                }
                s.add_relation(r, elems)
            } else if let Some(f) = sig.function_id(name) {
                let v = rest.strip_prefix('=').ok_or_else(|| err(n, "expected `=VALUE`"))?;
                let v = resolve(&s, v, n)?;
                s.set_function(f, elems, v)
            } else {
                return Err(err(n, format!("unknown symbol `{name}`")));
            };
            res.map_err(|e| err(n, e.to_string()))?;
        }
    }
    Ok(s)
}

fn declare(s: &mut FinStructure, sort: SortId, name: Option<&str>, id: Option<u32>, n: usize) -> Result<Elem, LiteralError> {
    if let Some(name) = name {
        if !is_plain_name(name) {
            return Err(err(n, format!("`{name}` is not a valid element name")));
        }
        if s.element_by_name(name).is_some() && id.is_none() {
            return Err(err(n, format!("element `{name}` declared twice")));
        }
    }
    let e = match id {
        Some(id) => {
            s.insert_element(Elem(id), sort).map_err(|e| err(n, e.to_string()))?;
            Elem(id)
        }
        None => s.add_element(sort),
    };
    if let Some(name) = name {
        s.set_name(e, name);
    }
    Ok(e)
}

fn strip_comment(line: &str) -> &str {
    // A `#` that begins a comment is preceded by whitespace or starts the line.
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1] == b' ' || bytes[i - 1] == b'\t') {
            let next = bytes.get(i + 1);
            if !next.is_some_and(|c| c.is_ascii_digit()) {
                return &line[..i];
            }
        }
    }
    line
}

fn term_text(t: Term, vars: &[String], tok: &BTreeMap<Elem, String>) -> String {
    match t {
        Term::Var(i) => vars[i].clone(),
        Term::Param(e) => tok.get(&e).cloned().unwrap_or_else(|| format!("{}", e)),
    }
}

fn literal_text(l: &Literal, amb: &FinStructure, vars: &[String], tok: &BTreeMap<Elem, String>) -> String {
    let sig = amb.signature();
    let t = |x: Term| term_text(x, vars, tok);
    let neg = if l.positive() { "" } else { "!" };
    match l {
        Literal::Rel { rel, args, .. } => format!("{neg}{}({})", sig.relation(*rel).name, join(args.iter().map(|&a| t(a)))),
        Literal::Fun { fun, args, value, .. } => {
            format!("{}({}){}={}", sig.function(*fun).name, join(args.iter().map(|&a| t(a))), neg, t(*value))
        }
        Literal::Eq { left, right, .. } => format!("{}{}={}", t(*left), neg, t(*right)),
        Literal::Pair { pair, left, right, .. } => format!("{}{}={{{},{}}}", t(*pair), neg, t(*left), t(*right)),
    }
}

/// Variable names used when printing: `x0, x1, ...` for free variables and
/// `w0, ...` for witnesses.
fn default_names(free: usize, total: usize) -> Vec<String> {
    (0..total).map(|i| if i < free { format!("x{i}") } else { format!("w{}", i - free) }).collect()
}

pub fn write_formula(phi: &ExFormula, amb: &FinStructure) -> String {
    let sig = amb.signature();
    let vars = default_names(phi.free, phi.matrix.vars.len());
    let decl = |r: core::ops::Range<usize>| {
        r.map(|i| format!("{}:{}", vars[i], sig.sort(phi.matrix.vars[i]).name)).collect::<Vec<_>>().join(", ")
    };
    let mut head = decl(0..phi.free);
    if phi.free < phi.matrix.vars.len() {
        head = format!("{head} | {}", decl(phi.free..phi.matrix.vars.len()));
    }
    let tok = tokens(amb);
    let body = if phi.matrix.literals.is_empty() {
        "true".to_string()
    } else {
        phi.matrix.literals.iter().map(|l| literal_text(l, amb, &vars, &tok)).collect::<Vec<_>>().join(" & ")
    };
    format!("[{head}] {body}")
}

pub fn write_qf(phi: &QfFormula, amb: &FinStructure) -> String {
    write_formula(&ExFormula { free: phi.vars.len(), matrix: phi.clone() }, amb)
}

pub fn parse_formula(amb: &FinStructure, text: &str) -> Result<ExFormula, LiteralError> {
    let sig = amb.signature();
    let text = text.trim();
    let rest = text.strip_prefix('[').ok_or_else(|| err(1, "formula must start with `[`"))?;
    let (head, body) = rest.split_once(']').ok_or_else(|| err(1, "missing `]`"))?;
    let (free_part, wit_part) = match head.split_once('|') {
        Some((f, w)) => (f, w),
        None => (head, ""),
    };
    let mut names: Vec<String> = Vec::new();
    let mut sorts = Vec::new();
    let mut decls = |part: &str, names: &mut Vec<String>| -> Result<usize, LiteralError> {
        let mut count = 0;
        for d in part.split(',').map(str::trim).filter(|d| !d.is_empty()) {
            let (v, so) = d.split_once(':').ok_or_else(|| err(1, format!("expected `VAR:SORT`, got `{d}`")))?;
            let so = sig.sort_id(so.trim()).ok_or_else(|| err(1, format!("unknown sort `{}`", so.trim())))?;
            if names.iter().any(|n| n == v.trim()) {
                return Err(err(1, format!("variable `{}` declared twice", v.trim())));
            }
            names.push(v.trim().to_string());
            sorts.push(so);
            count += 1;
        }
        Ok(count)
    };
    let free = decls(free_part, &mut names)?;
    decls(wit_part, &mut names)?;
    let term = |s: &str| -> Result<Term, LiteralError> {
        let s = s.trim();
        match names.iter().position(|n| n == s) {
            Some(i) => Ok(Term::Var(i)),
            None => resolve(amb, s, 1).map(Term::Param),
        }
    };
    let mut literals = Vec::new();
    let body = body.trim();
    if body != "true" {
        for part in body.split('&').map(str::trim) {
            let (positive, part) = match part.strip_prefix('!') {
                Some(p) => (false, p.trim()),
                None => (true, part),
            };
            literals.push(parse_literal(amb, part, positive, &term)?);
        }
    }
    Ok(ExFormula { free, matrix: QfFormula::new(sorts, literals) })
}

fn parse_literal(
    amb: &FinStructure,
    part: &str,
    positive: bool,
    term: &dyn Fn(&str) -> Result<Term, LiteralError>,
) -> Result<Literal, LiteralError> {
    let sig = amb.signature();
    let (lhs, rhs, eq_positive) = match part.split_once("!=") {
        Some((l, r)) => (l.trim(), Some(r.trim()), false),
        None => match part.split_once('=') {
            Some((l, r)) => (l.trim(), Some(r.trim()), true),
            None => (part, None, true),
        },
    };
    let positive = positive == eq_positive;
    if let Some(rhs) = rhs {
        if let Some((x, y)) = braces(rhs) {
            return Ok(Literal::Pair { pair: term(lhs)?, left: term(x)?, right: term(y)?, positive });
        }
        if let Some((name, args, tail)) = call(lhs) {
            if !tail.is_empty() {
                return Err(err(1, format!("cannot parse `{part}`")));
            }
            let fun = sig.function_id(name).ok_or_else(|| err(1, format!("unknown function `{name}`")))?;
            let args = args.iter().map(|a| term(a)).collect::<Result<_, _>>()?;
            return Ok(Literal::Fun { fun, args, value: term(rhs)?, positive });
        }
        return Ok(Literal::Eq { left: term(lhs)?, right: term(rhs)?, positive });
    }
    let (name, args, tail) = call(lhs).ok_or_else(|| err(1, format!("cannot parse `{part}`")))?;
    if !tail.is_empty() {
        return Err(err(1, format!("cannot parse `{part}`")));
    }
    let rel = sig.relation_id(name).ok_or_else(|| err(1, format!("unknown relation `{name}`")))?;
    let args = args.iter().map(|a| term(a)).collect::<Result<_, _>>()?;
    Ok(Literal::Rel { rel, args, positive })
}

/// Parses a whitespace- or comma-separated list of element references.
pub fn parse_elems(amb: &FinStructure, text: &str) -> Result<Vec<Elem>, LiteralError> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| resolve(amb, t, 1))
        .collect()
}

pub fn write_elems(amb: &FinStructure, elems: impl IntoIterator<Item = Elem>) -> String {
    let tok = tokens(amb);
    elems.into_iter().map(|e| tok.get(&e).cloned().unwrap_or_else(|| format!("{}", e))).collect::<Vec<_>>().join(",")
}

pub fn write_set(amb: &FinStructure, set: &BTreeSet<Elem>) -> String {
    format!("{{{}}}", write_elems(amb, set.iter().copied()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::TheorySpec;

    #[test]
    fn structure_round_trip() {
        let t = TheorySpec::og();
        let text = "O: a\nG: b v#5\nconst 0 = 0\nE(a,b,0)\nR(b,v,1)\nR(v,b,1)\n";
        let mut full = String::from("C: 0 1\nconst 1 = 1\n");
        full.push_str(text);
        let s = parse_structure(t.signature.clone(), &full).unwrap();
        assert_eq!(s.len(), 5);
        let again = parse_structure(t.signature.clone(), &write_structure(&s)).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn pairs_and_functions_round_trip() {
        let t = TheorySpec::circular();
        let s = parse_structure(t.signature.clone(), "O: a d1 d2 # points\npair b = {d1,d2}\ncyc(d1,a,d2)\n").unwrap();
        let b = s.element_by_name("b").unwrap();
        assert!(s.pair_base(b).is_some());
        assert_eq!(parse_structure(t.signature.clone(), &write_structure(&s)).unwrap(), s);

        let g = TheorySpec::generic_function();
        let mut s = parse_structure(g.signature.clone(), "O: a d\nf(a,d)=a\n").unwrap();
        s.add_element(SortId(0));
        let text = write_structure(&s);
        assert!(text.contains("#2"));
        assert_eq!(parse_structure(g.signature.clone(), &text).unwrap(), s);
    }

    #[test]
    fn formula_round_trip() {
        let t = TheorySpec::generic_function();
        let s = parse_structure(t.signature.clone(), "O: m d1 d2\npair b = {d1,d2}\n").unwrap();
        let phi = parse_formula(&s, "[x:O | w:O] f(x,d1)=w & !f(x,d2)=d2 & w!=x & b={d1,d2}").unwrap();
        assert_eq!(phi.free, 1);
        assert_eq!(phi.matrix.literals.len(), 4);
        assert!(!phi.matrix.literals[1].positive());
        assert!(!phi.matrix.literals[2].positive());
        let again = parse_formula(&s, &write_formula(&phi, &s)).unwrap();
        assert_eq!(again, phi);
        assert!(parse_formula(&s, "[x:O] true").unwrap().matrix.literals.is_empty());
        assert!(parse_formula(&s, "[x:O] g(x)=x").is_err());
    }

    #[test]
    fn errors_carry_lines() {
        let t = TheorySpec::og();
        let e = parse_structure(t.signature.clone(), "G: b\nE(b,b,0)\n").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
