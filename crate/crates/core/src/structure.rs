//! Finite multi-sorted structures.
//!
//! A [`FinStructure`] carries per-sort universes, relation tables, function
//! graphs (possibly partial, possibly multi-valued while a structure is still
//! being checked for class membership), constants, and an unordered-pair
//! imaginary sort. Element ids are opaque and scoped to one structure; any
//! cross-structure correspondence goes through a [`PartialMap`].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SortId(pub u16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelId(pub u16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FunId(pub u16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstId(pub u16);

/// Opaque element id, meaningful only inside the structure that owns it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Elem(pub u32);

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("signature mismatch")]
    SignatureMismatch,
    #[error("unknown element {0}")]
    UnknownElement(Elem),
    #[error("element id {0} already in use")]
    DuplicateElement(Elem),
    #[error("element {elem} has the wrong sort for this position")]
    SortMismatch { elem: Elem },
    #[error("arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("sort is not a pair sort")]
    NotAPairSort,
    #[error("pair {{{0}, {1}}} is already registered")]
    DuplicatePair(Elem, Elem),
    #[error("constant {0} is not interpreted")]
    MissingConstant(String),
    #[error("map is not injective")]
    NotInjective,
    #[error("map is not total on the source universe")]
    NotTotal,
    #[error("identified parts do not form a common substructure: {0}")]
    NotCommonSubstructure(String),
    #[error("substructure closure exceeded {0} iterations")]
    BudgetExceeded(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("duplicate symbol name `{0}`")]
    DuplicateName(String),
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortDecl {
    pub name: String,
    /// `Some(base)` when this sort is the unordered-pair sort over `base`.
    pub pair_of: Option<SortId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSymbol {
    pub name: String,
    pub arity: Vec<SortId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSymbol {
    pub name: String,
    pub args: Vec<SortId>,
    pub result: SortId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstantSymbol {
    pub name: String,
    pub sort: SortId,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    sorts: Vec<SortDecl>,
    relations: Vec<RelationSymbol>,
    functions: Vec<FunctionSymbol>,
    constants: Vec<ConstantSymbol>,
}

impl Signature {
    pub fn builder() -> SignatureBuilder {
        SignatureBuilder::default()
    }

    pub fn sorts(&self) -> &[SortDecl] {
        &self.sorts
    }

    pub fn relations(&self) -> &[RelationSymbol] {
        &self.relations
    }

    pub fn functions(&self) -> &[FunctionSymbol] {
        &self.functions
    }

    pub fn constants(&self) -> &[ConstantSymbol] {
        &self.constants
    }

    pub fn sort(&self, id: SortId) -> &SortDecl {
        &self.sorts[id.0 as usize]
    }

    pub fn relation(&self, id: RelId) -> &RelationSymbol {
        &self.relations[id.0 as usize]
    }

    pub fn function(&self, id: FunId) -> &FunctionSymbol {
        &self.functions[id.0 as usize]
    }

    pub fn constant(&self, id: ConstId) -> &ConstantSymbol {
        &self.constants[id.0 as usize]
    }

    pub fn sort_id(&self, name: &str) -> Option<SortId> {
        self.sorts.iter().position(|s| s.name == name).map(|i| SortId(i as u16))
    }

    pub fn relation_id(&self, name: &str) -> Option<RelId> {
        self.relations.iter().position(|s| s.name == name).map(|i| RelId(i as u16))
    }

    pub fn function_id(&self, name: &str) -> Option<FunId> {
        self.functions.iter().position(|s| s.name == name).map(|i| FunId(i as u16))
    }

    pub fn constant_id(&self, name: &str) -> Option<ConstId> {
        self.constants.iter().position(|s| s.name == name).map(|i| ConstId(i as u16))
    }

    pub fn sort_ids(&self) -> impl Iterator<Item = SortId> + '_ {
        (0..self.sorts.len()).map(|i| SortId(i as u16))
    }

    pub fn relation_ids(&self) -> impl Iterator<Item = RelId> + '_ {
        (0..self.relations.len()).map(|i| RelId(i as u16))
    }

    pub fn function_ids(&self) -> impl Iterator<Item = FunId> + '_ {
        (0..self.functions.len()).map(|i| FunId(i as u16))
    }

    pub fn constant_ids(&self) -> impl Iterator<Item = ConstId> + '_ {
        (0..self.constants.len()).map(|i| ConstId(i as u16))
    }

    pub fn is_pair_sort(&self, s: SortId) -> bool {
        self.sort(s).pair_of.is_some()
    }

    /// The pair sorts whose base is `base`.
    pub fn pair_sorts_over(&self, base: SortId) -> impl Iterator<Item = SortId> + '_ {
        self.sort_ids().filter(move |&s| self.sort(s).pair_of == Some(base))
    }

    pub fn is_relational(&self) -> bool {
        self.functions.is_empty()
    }
}

#[derive(Debug, Default)]
pub struct SignatureBuilder {
    sig: Signature,
    names: BTreeSet<String>,
    error: Option<SignatureError>,
}

impl SignatureBuilder {
    fn claim(&mut self, name: &str) {
        if !self.names.insert(name.to_string()) && self.error.is_none() {
            self.error = Some(SignatureError::DuplicateName(name.to_string()));
        }
    }

    fn lookup(&mut self, name: &str) -> SortId {
        match self.sig.sort_id(name) {
            Some(id) => id,
            None => {
                if self.error.is_none() {
                    self.error = Some(SignatureError::UnknownSort(name.to_string()));
                }
                SortId(0)
            }
        }
    }

    pub fn sort(mut self, name: &str) -> Self {
        self.claim(name);
        self.sig.sorts.push(SortDecl { name: name.to_string(), pair_of: None });
        self
    }

    pub fn pair_sort(mut self, name: &str, base: &str) -> Self {
        self.claim(name);
        let base = self.lookup(base);
        self.sig.sorts.push(SortDecl { name: name.to_string(), pair_of: Some(base) });
        self
    }

    pub fn relation(mut self, name: &str, arity: &[&str]) -> Self {
        self.claim(name);
        let arity = arity.iter().map(|s| self.lookup(s)).collect();
        self.sig.relations.push(RelationSymbol { name: name.to_string(), arity });
        self
    }

    pub fn function(mut self, name: &str, args: &[&str], result: &str) -> Self {
        self.claim(name);
        let args = args.iter().map(|s| self.lookup(s)).collect();
        let result = self.lookup(result);
        self.sig.functions.push(FunctionSymbol { name: name.to_string(), args, result });
        self
    }

    pub fn constant(mut self, name: &str, sort: &str) -> Self {
        self.claim(name);
        let sort = self.lookup(sort);
        self.sig.constants.push(ConstantSymbol { name: name.to_string(), sort });
        self
    }

    pub fn build(self) -> Result<Signature, SignatureError> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.sig),
        }
    }
}

/// A ground atomic fact. Function entries are stored as graphs, pairs as
/// `(pair element, smaller base point, larger base point)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Rel(RelId, Vec<Elem>),
    Fun(FunId, Vec<Elem>, Elem),
    Pair(Elem, Elem, Elem),
}

impl Atom {
    pub fn pair(p: Elem, x: Elem, y: Elem) -> Atom {
        if x <= y {
            Atom::Pair(p, x, y)
        } else {
            Atom::Pair(p, y, x)
        }
    }

    pub fn elems(&self) -> Vec<Elem> {
        match self {
            Atom::Rel(_, t) => t.clone(),
            Atom::Fun(_, args, v) => {
                let mut t = args.clone();
                t.push(*v);
                t
            }
            Atom::Pair(p, x, y) => alloc::vec![*p, *x, *y],
        }
    }

    pub fn mentions(&self, e: Elem) -> bool {
        match self {
            Atom::Rel(_, t) => t.contains(&e),
            Atom::Fun(_, args, v) => *v == e || args.contains(&e),
            Atom::Pair(p, x, y) => *p == e || *x == e || *y == e,
        }
    }

    /// Applies `f` to every element, re-normalizing pair atoms.
    pub fn map(&self, mut f: impl FnMut(Elem) -> Elem) -> Atom {
        match self {
            Atom::Rel(r, t) => Atom::Rel(*r, t.iter().map(|&e| f(e)).collect()),
            Atom::Fun(g, args, v) => Atom::Fun(*g, args.iter().map(|&e| f(e)).collect(), f(*v)),
            Atom::Pair(p, x, y) => Atom::pair(f(*p), f(*x), f(*y)),
        }
    }

    pub fn try_map(&self, mut f: impl FnMut(Elem) -> Option<Elem>) -> Option<Atom> {
        Some(match self {
            Atom::Rel(r, t) => {
                Atom::Rel(*r, t.iter().map(|&e| f(e)).collect::<Option<Vec<_>>>()?)
            }
            Atom::Fun(g, args, v) => Atom::Fun(
                *g,
                args.iter().map(|&e| f(e)).collect::<Option<Vec<_>>>()?,
                f(*v)?,
            ),
            Atom::Pair(p, x, y) => Atom::pair(f(*p)?, f(*x)?, f(*y)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinStructure {
    sig: Arc<Signature>,
    sorts: BTreeMap<Elem, SortId>,
    names: BTreeMap<Elem, String>,
    rels: Vec<BTreeSet<Vec<Elem>>>,
    /// Function graphs: each entry is `args ++ [value]`.
    funs: Vec<BTreeSet<Vec<Elem>>>,
    consts: Vec<Option<Elem>>,
    pairs: BTreeMap<Elem, (Elem, Elem)>,
}

impl FinStructure {
    pub fn new(sig: Arc<Signature>) -> Self {
        let rels = alloc::vec![BTreeSet::new(); sig.relations().len()];
        let funs = alloc::vec![BTreeSet::new(); sig.functions().len()];
        let consts = alloc::vec![None; sig.constants().len()];
        FinStructure { sig, sorts: BTreeMap::new(), names: BTreeMap::new(), rels, funs, consts, pairs: BTreeMap::new() }
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn same_signature(&self, other: &FinStructure) -> bool {
        Arc::ptr_eq(&self.sig, &other.sig) || *self.sig == *other.sig
    }

    pub fn len(&self) -> usize {
        self.sorts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorts.is_empty()
    }

    pub fn contains(&self, e: Elem) -> bool {
        self.sorts.contains_key(&e)
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> + '_ {
        self.sorts.keys().copied()
    }

    pub fn universe(&self) -> BTreeSet<Elem> {
        self.sorts.keys().copied().collect()
    }

    pub fn elements_of_sort(&self, s: SortId) -> impl Iterator<Item = Elem> + '_ {
        self.sorts.iter().filter(move |(_, &t)| t == s).map(|(&e, _)| e)
    }

    pub fn sort_of(&self, e: Elem) -> Option<SortId> {
        self.sorts.get(&e).copied()
    }

    pub fn name_of(&self, e: Elem) -> Option<&str> {
        self.names.get(&e).map(|s| s.as_str())
    }

    pub fn set_name(&mut self, e: Elem, name: &str) {
        self.names.insert(e, name.to_string());
    }

    pub fn element_by_name(&self, name: &str) -> Option<Elem> {
        self.names.iter().find(|(_, n)| n.as_str() == name).map(|(&e, _)| e)
    }

    /// Name to show for `e`: its registered name or `#id`.
    pub fn label(&self, e: Elem) -> String {
        match self.names.get(&e) {
            Some(n) => n.clone(),
            None => alloc::format!("{}", e),
        }
    }

    pub fn next_id(&self) -> Elem {
        Elem(self.sorts.keys().next_back().map_or(0, |e| e.0 + 1))
    }

    pub fn add_element(&mut self, sort: SortId) -> Elem {
        let e = self.next_id();
        self.sorts.insert(e, sort);
        e
    }

    pub fn add_named(&mut self, sort: SortId, name: &str) -> Elem {
        let e = self.add_element(sort);
        self.names.insert(e, name.to_string());
        e
    }

    pub fn insert_element(&mut self, e: Elem, sort: SortId) -> Result<(), StructureError> {
        if self.sorts.contains_key(&e) {
            return Err(StructureError::DuplicateElement(e));
        }
        self.sorts.insert(e, sort);
        Ok(())
    }

    fn check_sort(&self, e: Elem, s: SortId) -> Result<(), StructureError> {
        match self.sorts.get(&e) {
            None => Err(StructureError::UnknownElement(e)),
            Some(&t) if t != s => Err(StructureError::SortMismatch { elem: e }),
            Some(_) => Ok(()),
        }
    }

    fn check_tuple(&self, tuple: &[Elem], sorts: &[SortId]) -> Result<(), StructureError> {
        if tuple.len() != sorts.len() {
            return Err(StructureError::Arity { expected: sorts.len(), got: tuple.len() });
        }
        for (&e, &s) in tuple.iter().zip(sorts) {
            self.check_sort(e, s)?;
        }
        Ok(())
    }

    pub fn add_relation(&mut self, r: RelId, tuple: Vec<Elem>) -> Result<bool, StructureError> {
        self.check_tuple(&tuple, &self.sig.relation(r).arity)?;
        Ok(self.rels[r.0 as usize].insert(tuple))
    }

    /// Adds a function-graph entry. Adding a second value for the same
    /// arguments is allowed here and reported by class checks.
    pub fn set_function(&mut self, f: FunId, args: Vec<Elem>, value: Elem) -> Result<bool, StructureError> {
        let sym = self.sig.function(f);
        self.check_tuple(&args, &sym.args)?;
        self.check_sort(value, sym.result)?;
        let mut row = args;
        row.push(value);
        Ok(self.funs[f.0 as usize].insert(row))
    }

    pub fn set_constant(&mut self, c: ConstId, e: Elem) -> Result<(), StructureError> {
        self.check_sort(e, self.sig.constant(c).sort)?;
        self.consts[c.0 as usize] = Some(e);
        Ok(())
    }

    /// Creates a new element of `pair_sort` representing `{x, y}`.
    pub fn add_pair(&mut self, pair_sort: SortId, x: Elem, y: Elem) -> Result<Elem, StructureError> {
        let base = self.sig.sort(pair_sort).pair_of.ok_or(StructureError::NotAPairSort)?;
        self.check_sort(x, base)?;
        self.check_sort(y, base)?;
        let key = if x <= y { (x, y) } else { (y, x) };
        if self.pairs.iter().any(|(&p, &b)| b == key && self.sorts[&p] == pair_sort) {
            return Err(StructureError::DuplicatePair(x, y));
        }
        let p = self.add_element(pair_sort);
        self.pairs.insert(p, key);
        Ok(p)
    }

    /// Registers an existing pair-sort element as `{x, y}`.
    pub fn register_pair(&mut self, p: Elem, x: Elem, y: Elem) -> Result<(), StructureError> {
        let ps = self.sort_of(p).ok_or(StructureError::UnknownElement(p))?;
        let base = self.sig.sort(ps).pair_of.ok_or(StructureError::NotAPairSort)?;
        self.check_sort(x, base)?;
        self.check_sort(y, base)?;
        let key = if x <= y { (x, y) } else { (y, x) };
        if self.pairs.get(&p).is_some_and(|&b| b != key) {
            return Err(StructureError::DuplicatePair(x, y));
        }
        if self.pairs.iter().any(|(&q, &b)| q != p && b == key && self.sorts[&q] == ps) {
            return Err(StructureError::DuplicatePair(x, y));
        }
        self.pairs.insert(p, key);
        Ok(())
    }

    pub fn add_atom(&mut self, atom: &Atom) -> Result<bool, StructureError> {
        match atom {
            Atom::Rel(r, t) => self.add_relation(*r, t.clone()),
            Atom::Fun(f, args, v) => self.set_function(*f, args.clone(), *v),
            Atom::Pair(p, x, y) => {
                if self.pairs.get(p) == Some(&(*x, *y)) {
                    return Ok(false);
                }
                self.register_pair(*p, *x, *y)?;
                Ok(true)
            }
        }
    }

    pub fn remove_relation(&mut self, r: RelId, tuple: &[Elem]) -> bool {
        self.rels[r.0 as usize].remove(tuple)
    }

    pub fn holds(&self, atom: &Atom) -> bool {
        match atom {
            Atom::Rel(r, t) => self.rels[r.0 as usize].contains(t),
            Atom::Fun(f, args, v) => {
                let mut row = args.clone();
                row.push(*v);
                self.funs[f.0 as usize].contains(&row)
            }
            Atom::Pair(p, x, y) => self.pairs.get(p) == Some(&(*x, *y)),
        }
    }

    pub fn relation(&self, r: RelId) -> &BTreeSet<Vec<Elem>> {
        &self.rels[r.0 as usize]
    }

    /// Function graph rows (`args ++ [value]`).
    pub fn function_graph(&self, f: FunId) -> &BTreeSet<Vec<Elem>> {
        &self.funs[f.0 as usize]
    }

    /// All values recorded for `f(args)`.
    pub fn function_values(&self, f: FunId, args: &[Elem]) -> Vec<Elem> {
        let graph = &self.funs[f.0 as usize];
        let mut lo = args.to_vec();
        lo.push(Elem(0));
        graph
            .range(lo..)
            .take_while(|row| &row[..row.len() - 1] == args)
            .map(|row| row[row.len() - 1])
            .collect()
    }

    pub fn function_value(&self, f: FunId, args: &[Elem]) -> Option<Elem> {
        self.function_values(f, args).first().copied()
    }

    pub fn constant(&self, c: ConstId) -> Option<Elem> {
        self.consts[c.0 as usize]
    }

    pub fn constant_elements(&self) -> BTreeSet<Elem> {
        self.consts.iter().flatten().copied().collect()
    }

    pub fn is_constant(&self, e: Elem) -> bool {
        self.consts.iter().any(|&c| c == Some(e))
    }

    pub fn pair_base(&self, p: Elem) -> Option<(Elem, Elem)> {
        self.pairs.get(&p).copied()
    }

    pub fn pairs(&self) -> &BTreeMap<Elem, (Elem, Elem)> {
        &self.pairs
    }

    /// The registered pair element for `{x, y}`, if any.
    pub fn pair_of(&self, x: Elem, y: Elem) -> Option<Elem> {
        let key = if x <= y { (x, y) } else { (y, x) };
        self.pairs.iter().find(|(_, &b)| b == key).map(|(&p, _)| p)
    }

    pub fn atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        let rels = self
            .rels
            .iter()
            .enumerate()
            .flat_map(|(i, set)| set.iter().map(move |t| Atom::Rel(RelId(i as u16), t.clone())));
        let funs = self.funs.iter().enumerate().flat_map(|(i, set)| {
            set.iter().map(move |row| {
                let (args, v) = row.split_at(row.len() - 1);
                Atom::Fun(FunId(i as u16), args.to_vec(), v[0])
            })
        });
        let pairs = self.pairs.iter().map(|(&p, &(x, y))| Atom::Pair(p, x, y));
        rels.chain(funs).chain(pairs)
    }

    pub fn atom_count(&self) -> usize {
        self.rels.iter().map(|s| s.len()).sum::<usize>()
            + self.funs.iter().map(|s| s.len()).sum::<usize>()
            + self.pairs.len()
    }

    /// Substructure on `set`, automatically adding constants and the base
    /// points of any pair element in `set`.
    pub fn induced(&self, set: &BTreeSet<Elem>) -> FinStructure {
        let mut keep: BTreeSet<Elem> = set.iter().copied().filter(|e| self.contains(*e)).collect();
        keep.extend(self.constant_elements());
        let pair_bases: Vec<Elem> = keep
            .iter()
            .filter_map(|p| self.pairs.get(p))
            .flat_map(|&(x, y)| [x, y])
            .collect();
        keep.extend(pair_bases);
        let mut out = FinStructure::new(self.sig.clone());
        for &e in &keep {
            out.sorts.insert(e, self.sorts[&e]);
            if let Some(n) = self.names.get(&e) {
                out.names.insert(e, n.clone());
            }
        }
        for (i, set) in self.rels.iter().enumerate() {
            out.rels[i] = set.iter().filter(|t| t.iter().all(|e| keep.contains(e))).cloned().collect();
        }
        for (i, set) in self.funs.iter().enumerate() {
            out.funs[i] = set.iter().filter(|t| t.iter().all(|e| keep.contains(e))).cloned().collect();
        }
        out.consts = self.consts.clone();
        out.pairs = self.pairs.iter().filter(|(p, _)| keep.contains(p)).map(|(&p, &b)| (p, b)).collect();
        out
    }

    /// Copies `e` (with sort and name) from `other` into `self`.
    pub fn adopt_element(&mut self, other: &FinStructure, e: Elem) -> Result<(), StructureError> {
        let s = other.sort_of(e).ok_or(StructureError::UnknownElement(e))?;
        self.insert_element(e, s)?;
        if let Some(n) = other.name_of(e) {
            self.names.insert(e, n.to_string());
        }
        Ok(())
    }

    /// Checks the representation invariants.
    pub fn validate(&self) -> Result<(), StructureError> {
        for (i, set) in self.rels.iter().enumerate() {
            let arity = &self.sig.relations()[i].arity;
            for t in set {
                self.check_tuple(t, arity)?;
            }
        }
        for (i, set) in self.funs.iter().enumerate() {
            let sym = &self.sig.functions()[i];
            for row in set {
                let (args, v) = row.split_at(row.len() - 1);
                self.check_tuple(args, &sym.args)?;
                self.check_sort(v[0], sym.result)?;
            }
        }
        for (i, c) in self.consts.iter().enumerate() {
            let sym = &self.sig.constants()[i];
            match c {
                None => return Err(StructureError::MissingConstant(sym.name.clone())),
                Some(e) => self.check_sort(*e, sym.sort)?,
            }
        }
        let mut seen = BTreeSet::new();
        for (&e, &s) in &self.sorts {
            if let Some(base) = self.sig.sort(s).pair_of {
                let (x, y) = self.pairs.get(&e).copied().ok_or(StructureError::UnknownElement(e))?;
                self.check_sort(x, base)?;
                self.check_sort(y, base)?;
                if !seen.insert((s, x, y)) {
                    return Err(StructureError::DuplicatePair(x, y));
                }
            }
        }
        for &p in self.pairs.keys() {
            let s = self.sort_of(p).ok_or(StructureError::UnknownElement(p))?;
            if !self.sig.is_pair_sort(s) {
                return Err(StructureError::NotAPairSort);
            }
        }
        Ok(())
    }
}

/// A partial injection between the universes of two structures.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartialMap {
    map: BTreeMap<Elem, Elem>,
}

impl PartialMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn identity<I: IntoIterator<Item = Elem>>(elems: I) -> Self {
        PartialMap { map: elems.into_iter().map(|e| (e, e)).collect() }
    }

    pub fn from_pairs<I: IntoIterator<Item = (Elem, Elem)>>(pairs: I) -> Self {
        PartialMap { map: pairs.into_iter().collect() }
    }

    pub fn insert(&mut self, from: Elem, to: Elem) -> Option<Elem> {
        self.map.insert(from, to)
    }

    pub fn get(&self, e: Elem) -> Option<Elem> {
        self.map.get(&e).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Elem, Elem)> + '_ {
        self.map.iter().map(|(&a, &b)| (a, b))
    }

    pub fn domain(&self) -> BTreeSet<Elem> {
        self.map.keys().copied().collect()
    }

    pub fn image(&self) -> BTreeSet<Elem> {
        self.map.values().copied().collect()
    }

    pub fn is_injective(&self) -> bool {
        self.image().len() == self.map.len()
    }

    pub fn inverse(&self) -> PartialMap {
        PartialMap { map: self.map.iter().map(|(&a, &b)| (b, a)).collect() }
    }

    /// `other ∘ self`, defined where both are.
    pub fn then(&self, other: &PartialMap) -> PartialMap {
        PartialMap { map: self.map.iter().filter_map(|(&a, &b)| other.get(b).map(|c| (a, c))).collect() }
    }

    /// Applies the map to a set, failing if some element is unmapped.
    pub fn apply_set(&self, set: &BTreeSet<Elem>) -> Option<BTreeSet<Elem>> {
        set.iter().map(|&e| self.get(e)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().all(|(a, b)| a == b)
    }
}

/// True iff `map` is an embedding of `src` into `dst`: total on `src`,
/// injective, sort-preserving, and preserving and reflecting every relation,
/// function graph and registered pair on its image. Constant elements must
/// go to constant elements and nothing else may.
pub fn is_embedding(map: &PartialMap, src: &FinStructure, dst: &FinStructure) -> Result<bool, StructureError> {
    if !src.same_signature(dst) {
        return Err(StructureError::SignatureMismatch);
    }
    if src.elements().any(|e| map.get(e).is_none()) {
        return Err(StructureError::NotTotal);
    }
    if !map.is_injective() {
        return Ok(false);
    }
    for e in src.elements() {
        let img = map.get(e).unwrap();
        if dst.sort_of(img) != src.sort_of(e) {
            return Ok(false);
        }
        if src.is_constant(e) != dst.is_constant(img) {
            return Ok(false);
        }
    }
    for atom in src.atoms() {
        let img = atom.map(|e| map.get(e).unwrap());
        if !dst.holds(&img) {
            return Ok(false);
        }
    }
    let inv = map.inverse();
    for atom in dst.atoms() {
        if let Some(pre) = atom.try_map(|e| inv.get(e)) {
            if !src.holds(&pre) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Smallest substructure containing `generators` and the constants, closed
/// under the recorded function entries and under taking base points of pair
/// elements.
pub fn generated_substructure(
    ambient: &FinStructure,
    generators: &BTreeSet<Elem>,
    depth_budget: usize,
) -> Result<FinStructure, StructureError> {
    let set = generated_set(ambient, generators, depth_budget)?;
    Ok(ambient.induced(&set))
}

pub(crate) fn generated_set(
    ambient: &FinStructure,
    generators: &BTreeSet<Elem>,
    depth_budget: usize,
) -> Result<BTreeSet<Elem>, StructureError> {
    closure_set(ambient, generators, depth_budget, true)
}

/// Closure of `generators` and the constants under function entries only.
pub(crate) fn function_closure(
    ambient: &FinStructure,
    generators: &BTreeSet<Elem>,
    depth_budget: usize,
) -> Result<BTreeSet<Elem>, StructureError> {
    closure_set(ambient, generators, depth_budget, false)
}

fn closure_set(
    ambient: &FinStructure,
    generators: &BTreeSet<Elem>,
    depth_budget: usize,
    follow_pairs: bool,
) -> Result<BTreeSet<Elem>, StructureError> {
    for &g in generators {
        if !ambient.contains(g) {
            return Err(StructureError::UnknownElement(g));
        }
    }
    let mut set: BTreeSet<Elem> = generators.clone();
    set.extend(ambient.constant_elements());
    let mut rounds = 0;
    loop {
        let mut added = Vec::new();
        for p in set.iter().filter(|_| follow_pairs) {
            if let Some((x, y)) = ambient.pair_base(*p) {
                added.push(x);
                added.push(y);
            }
        }
        for f in ambient.signature().function_ids() {
            for row in ambient.function_graph(f) {
                let (args, v) = row.split_at(row.len() - 1);
                if args.iter().all(|a| set.contains(a)) {
                    added.push(v[0]);
                }
            }
        }
        added.retain(|e| !set.contains(e));
        if added.is_empty() {
            return Ok(set);
        }
        rounds += 1;
        if rounds > depth_budget {
            return Err(StructureError::BudgetExceeded(depth_budget));
        }
        set.extend(added);
    }
}

/// Result of [`disjoint_union_over`]: the union and the embedding of the
/// right-hand structure into it. The left-hand structure keeps its ids.
#[derive(Clone, Debug)]
pub struct Union {
    pub structure: FinStructure,
    pub right_embedding: PartialMap,
}

/// `a ⊔_c b`: `c` maps part of `b` onto part of `a`; unmapped elements of
/// `b` get fresh ids. No atoms are added beyond the union of both tables.
pub fn disjoint_union_over(a: &FinStructure, b: &FinStructure, c: &PartialMap) -> Result<Union, StructureError> {
    if !a.same_signature(b) {
        return Err(StructureError::SignatureMismatch);
    }
    if !c.is_injective() {
        return Err(StructureError::NotInjective);
    }
    for (x, y) in c.iter() {
        if !b.contains(x) || !a.contains(y) {
            return Err(StructureError::NotCommonSubstructure(alloc::format!("{} or {} missing", x, y)));
        }
    }
    for k in a.signature().constant_ids() {
        match (b.constant(k), a.constant(k)) {
            (Some(cb), Some(ca)) if c.get(cb) == Some(ca) => {}
            (None, None) => {}
            _ => {
                return Err(StructureError::NotCommonSubstructure(alloc::format!(
                    "constant {} not identified",
                    a.signature().constant(k).name
                )))
            }
        }
    }
    let b_common = b.induced(&c.domain());
    let a_common = a.induced(&c.image());
    if b_common.len() != c.len() || a_common.len() != c.len() {
        return Err(StructureError::NotCommonSubstructure("identified set not closed".into()));
    }
    if !is_embedding(c, &b_common, &a_common)? {
        return Err(StructureError::NotCommonSubstructure("identified parts disagree".into()));
    }
    let mut out = a.clone();
    let mut emb = c.clone();
    for e in b.elements() {
        if emb.get(e).is_none() {
            let n = out.add_element(b.sort_of(e).unwrap());
            if let Some(name) = b.name_of(e) {
                if out.element_by_name(name).is_none() {
                    out.set_name(n, name);
                }
            }
            emb.insert(e, n);
        }
    }
    for atom in b.atoms() {
        let img = atom.map(|e| emb.get(e).unwrap());
        out.add_atom(&img).map_err(|e| StructureError::NotCommonSubstructure(e.to_string()))?;
    }
    Ok(Union { structure: out, right_embedding: emb })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn og_sig() -> Arc<Signature> {
        Arc::new(
            Signature::builder()
                .sort("O")
                .sort("G")
                .sort("C")
                .constant("0", "C")
                .constant("1", "C")
                .relation("R", &["G", "G", "C"])
                .relation("E", &["O", "G", "C"])
                .build()
                .unwrap(),
        )
    }

    fn og_base() -> (FinStructure, Elem, Elem) {
        let sig = og_sig();
        let mut s = FinStructure::new(sig.clone());
        let c = sig.sort_id("C").unwrap();
        let z = s.add_named(c, "0");
        let o = s.add_named(c, "1");
        s.set_constant(ConstId(0), z).unwrap();
        s.set_constant(ConstId(1), o).unwrap();
        (s, z, o)
    }

    #[test]
    fn duplicate_names_rejected() {
        let err = Signature::builder().sort("O").relation("O", &["O"]).build().unwrap_err();
        assert_eq!(err, SignatureError::DuplicateName("O".into()));
        let err = Signature::builder().relation("R", &["X"]).build().unwrap_err();
        assert_eq!(err, SignatureError::UnknownSort("X".into()));
    }

    #[test]
    fn identity_is_embedding() {
        let (mut s, z, _) = og_base();
        let g = s.signature().sort_id("G").unwrap();
        let v = s.add_element(g);
        let w = s.add_element(g);
        s.add_relation(RelId(0), alloc::vec![v, w, z]).unwrap();
        s.add_relation(RelId(0), alloc::vec![w, v, z]).unwrap();
        let id = PartialMap::identity(s.elements());
        assert!(is_embedding(&id, &s, &s).unwrap());
    }

    #[test]
    fn constant_swap_is_embedding() {
        let (mut s, z, o) = og_base();
        let g = s.signature().sort_id("G").unwrap();
        let v = s.add_element(g);
        let swap = PartialMap::from_pairs([(z, o), (o, z), (v, v)]);
        assert!(is_embedding(&swap, &s, &s).unwrap());
    }

    #[test]
    fn edge_onto_non_edge_rejected() {
        let (mut s, z, o) = og_base();
        let g = s.signature().sort_id("G").unwrap();
        let v = s.add_element(g);
        let w = s.add_element(g);
        s.add_relation(RelId(0), alloc::vec![v, w, z]).unwrap();
        s.add_relation(RelId(0), alloc::vec![w, v, z]).unwrap();
        let (mut t, tz, to) = og_base();
        let v2 = t.add_element(g);
        let w2 = t.add_element(g);
        let m = PartialMap::from_pairs([(z, tz), (o, to), (v, v2), (w, w2)]);
        assert!(!is_embedding(&m, &s, &t).unwrap());
    }

    #[test]
    fn is_embedding_signature_mismatch() {
        let (s, _, _) = og_base();
        let other = FinStructure::new(Arc::new(Signature::builder().sort("O").build().unwrap()));
        assert_eq!(is_embedding(&PartialMap::new(), &other, &s), Err(StructureError::SignatureMismatch));
    }

    #[test]
    fn generated_adds_constants() {
        let (mut s, z, o) = og_base();
        let g = s.signature().sort_id("G").unwrap();
        let v = s.add_element(g);
        let _w = s.add_element(g);
        let sub = generated_substructure(&s, &BTreeSet::from([v]), 64).unwrap();
        assert_eq!(sub.universe(), BTreeSet::from([v, z, o]));
    }

    #[test]
    fn generated_empty_without_constants() {
        let sig = Arc::new(Signature::builder().sort("O").build().unwrap());
        let mut s = FinStructure::new(sig);
        s.add_element(SortId(0));
        let sub = generated_substructure(&s, &BTreeSet::new(), 64).unwrap();
        assert!(sub.is_empty());
    }

    #[test]
    fn generated_follows_functions_and_budget() {
        let sig = Arc::new(Signature::builder().sort("O").function("s", &["O"], "O").build().unwrap());
        let mut s = FinStructure::new(sig);
        let xs: Vec<Elem> = (0..5).map(|_| s.add_element(SortId(0))).collect();
        for w in xs.windows(2) {
            s.set_function(FunId(0), alloc::vec![w[0]], w[1]).unwrap();
        }
        let sub = generated_substructure(&s, &BTreeSet::from([xs[0]]), 64).unwrap();
        assert_eq!(sub.len(), 5);
        assert_eq!(
            generated_substructure(&s, &BTreeSet::from([xs[0]]), 2).unwrap_err(),
            StructureError::BudgetExceeded(2)
        );
    }

    #[test]
    fn pairs_are_unordered_and_unique() {
        let sig = Arc::new(Signature::builder().sort("O").pair_sort("P", "O").build().unwrap());
        let mut s = FinStructure::new(sig);
        let x = s.add_element(SortId(0));
        let y = s.add_element(SortId(0));
        let p = s.add_pair(SortId(1), y, x).unwrap();
        assert_eq!(s.pair_base(p), Some((x, y)));
        assert_eq!(s.pair_of(x, y), Some(p));
        assert!(s.add_pair(SortId(1), x, y).is_err());
        let q = s.add_pair(SortId(1), x, x).unwrap();
        assert_eq!(s.pair_base(q), Some((x, x)));
        s.validate().unwrap();
    }

    #[test]
    fn union_over_constants_only() {
        let (mut a, z, o) = og_base();
        let g = a.signature().sort_id("G").unwrap();
        a.add_element(g);
        let (mut b, bz, bo) = og_base();
        b.add_element(g);
        let c = PartialMap::from_pairs([(bz, z), (bo, o)]);
        let u = disjoint_union_over(&a, &b, &c).unwrap();
        assert_eq!(u.structure.elements_of_sort(g).count(), 2);
        assert_eq!(u.structure.relation(RelId(0)).len(), 0);

        let (b2, bz2, bo2) = og_base();
        let u2 = disjoint_union_over(&a, &b2, &PartialMap::from_pairs([(bz2, z), (bo2, o)])).unwrap();
        assert_eq!(u2.structure, a);
    }

    #[test]
    fn union_rejects_disagreeing_identification() {
        let (mut a, z, o) = og_base();
        let g = a.signature().sort_id("G").unwrap();
        let v = a.add_element(g);
        let w = a.add_element(g);
        a.add_relation(RelId(0), alloc::vec![v, w, z]).unwrap();
        a.add_relation(RelId(0), alloc::vec![w, v, z]).unwrap();
        let (mut b, bz, bo) = og_base();
        let v2 = b.add_element(g);
        let w2 = b.add_element(g);
        let c = PartialMap::from_pairs([(bz, z), (bo, o), (v2, v), (w2, w)]);
        assert!(matches!(disjoint_union_over(&a, &b, &c), Err(StructureError::NotCommonSubstructure(_))));
    }
}
