//! The shipped scenario catalog: configurations plus claim manifests.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use anyhow::{anyhow, bail, Context, Result};
use divcheck_core::dividing::Budgets;
use divcheck_core::literal::parse_structure;
use divcheck_core::{builtin, Elem, FinStructure, TheorySpec};
use serde::Deserialize;

struct Shipped {
    name: &'static str,
    manifest: &'static str,
    structure: &'static str,
}

macro_rules! shipped {
    ($name:literal) => {
        Shipped {
            name: $name,
            manifest: include_str!(concat!("../scenarios/", $name, ".toml")),
            structure: include_str!(concat!("../scenarios/", $name, ".structure")),
        }
    };
}

const CATALOG: [Shipped; 5] = [
    shipped!("circular_pairs"),
    shipped!("generic_function_pairs"),
    shipped!("og"),
    shipped!("og_sop3"),
    shipped!("incidence_4_2"),
];

pub fn catalog() -> Vec<&'static str> {
    CATALOG.iter().map(|s| s.name).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Acl,
    AclSample,
    Duplication,
    Divides,
    Nondividing,
    #[serde(rename = "a")]
    AIndep,
    #[serde(rename = "M")]
    MIndep,
    #[serde(rename = "m")]
    SmallMIndep,
    #[serde(rename = "da")]
    DaIndep,
    ForksWitness,
    SameType,
    Sop3,
}

impl Relation {
    pub fn id(self) -> &'static str {
        match self {
            Relation::Acl => "acl",
            Relation::AclSample => "acl-sample",
            Relation::Duplication => "duplication",
            Relation::Divides => "divides",
            Relation::Nondividing => "nondividing",
            Relation::AIndep => "a",
            Relation::MIndep => "M",
            Relation::SmallMIndep => "m",
            Relation::DaIndep => "da",
            Relation::ForksWitness => "forks-witness",
            Relation::SameType => "same-type",
            Relation::Sop3 => "sop3",
        }
    }

    pub fn parse(id: &str) -> Option<Relation> {
        const ALL: [Relation; 12] = [
            Relation::Acl,
            Relation::AclSample,
            Relation::Duplication,
            Relation::Divides,
            Relation::Nondividing,
            Relation::AIndep,
            Relation::MIndep,
            Relation::SmallMIndep,
            Relation::DaIndep,
            Relation::ForksWitness,
            Relation::SameType,
            Relation::Sop3,
        ];
        ALL.into_iter().find(|r| r.id() == id)
    }
}

/// A set of patterns singled out by coordinate behaviour and links.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Family {
    pub name: String,
    #[serde(default)]
    pub constant: Vec<String>,
    #[serde(default)]
    pub varying: Vec<String>,
    pub with_link: Option<String>,
    pub without_link: Option<String>,
    /// Coordinates counted by `min_constant` and `min_varying`.
    #[serde(default)]
    pub coords: Vec<String>,
    pub min_constant: Option<usize>,
    pub min_varying: Option<usize>,
    /// `identity` or `non-identity`; constant sequences are exempt.
    pub realization: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Claim {
    pub id: String,
    pub relation: Relation,
    pub left: Option<String>,
    pub right: Option<String>,
    pub base: Option<String>,
    pub formula: Option<String>,
    #[serde(default)]
    pub disjuncts: Vec<String>,
    pub expected: bool,
    pub k: Option<usize>,
    pub pattern: Option<String>,
    pub patterns: Option<usize>,
    pub closure: Option<String>,
    pub contains: Option<String>,
    pub bound: Option<usize>,
    pub max_k: Option<usize>,
    pub trials: Option<usize>,
    pub n: Option<usize>,
    pub linkage: Option<String>,
    pub failing_base: Option<String>,
    #[serde(default)]
    pub families: Vec<Family>,
    pub reference: String,
}

impl Claim {
    pub fn bare(id: &str, relation: Relation, expected: bool) -> Claim {
        Claim {
            id: id.to_string(),
            relation,
            left: None,
            right: None,
            base: None,
            formula: None,
            disjuncts: Vec::new(),
            expected,
            k: None,
            pattern: None,
            patterns: None,
            closure: None,
            contains: None,
            bound: None,
            max_k: None,
            trials: None,
            n: None,
            linkage: None,
            failing_base: None,
            families: Vec::new(),
            reference: String::new(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct BudgetOverrides {
    pub window: Option<usize>,
    pub k_max: Option<usize>,
    pub length: Option<usize>,
    pub pattern_budget: Option<usize>,
    pub acl_budget: Option<usize>,
    pub mode_cap: Option<usize>,
    pub validity_length: Option<usize>,
    pub trials: Option<usize>,
    pub size_bound: Option<usize>,
}

impl BudgetOverrides {
    pub fn apply(&self, b: &mut Budgets) {
        let set = |slot: &mut usize, v: Option<usize>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut b.window, self.window);
        set(&mut b.k_max, self.k_max);
        set(&mut b.length, self.length);
        set(&mut b.pattern_budget, self.pattern_budget);
        set(&mut b.acl_budget, self.acl_budget);
        set(&mut b.mode_cap, self.mode_cap);
        set(&mut b.validity_length, self.validity_length);
    }

    /// `other` wins where both are set.
    pub fn layered(&self, other: &BudgetOverrides) -> BudgetOverrides {
        BudgetOverrides {
            window: other.window.or(self.window),
            k_max: other.k_max.or(self.k_max),
            length: other.length.or(self.length),
            pattern_budget: other.pattern_budget.or(self.pattern_budget),
            acl_budget: other.acl_budget.or(self.acl_budget),
            mode_cap: other.mode_cap.or(self.mode_cap),
            validity_length: other.validity_length.or(self.validity_length),
            trials: other.trials.or(self.trials),
            size_bound: other.size_bound.or(self.size_bound),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    name: String,
    theory: String,
    structure: String,
    description: String,
    #[serde(default)]
    budgets: BudgetOverrides,
    #[serde(default)]
    tuples: BTreeMap<String, String>,
    #[serde(default)]
    claims: Vec<Claim>,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub theory: TheorySpec,
    pub description: String,
    pub amb: FinStructure,
    pub tuples: BTreeMap<String, Vec<Elem>>,
    pub budgets: BudgetOverrides,
    pub claims: Vec<Claim>,
}

impl Scenario {
    /// Resolves tuple names and element names, in order.
    pub fn resolve(&self, text: &str) -> Result<Vec<Elem>> {
        resolve(&self.amb, &self.tuples, text)
    }

    pub fn resolve_set(&self, text: Option<&str>) -> Result<BTreeSet<Elem>> {
        Ok(self.resolve(text.unwrap_or(""))?.into_iter().collect())
    }
}

pub fn resolve(amb: &FinStructure, tuples: &BTreeMap<String, Vec<Elem>>, text: &str) -> Result<Vec<Elem>> {
    let mut out = Vec::new();
    for tok in text.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
        match tuples.get(tok) {
            Some(t) => out.extend(t.iter().copied()),
            None => out.extend(
                divcheck_core::literal::parse_elems(amb, tok).map_err(|_| anyhow!("unknown element or tuple `{tok}`"))?,
            ),
        }
    }
    Ok(out)
}

/// Parses a manifest and its configuration, checking class membership and
/// that every named tuple and claim argument resolves.
pub fn parse_scenario(manifest: &str, structure: &str) -> Result<Scenario> {
    let m: Manifest = toml::from_str(manifest).context("manifest")?;
    let theory = builtin(&m.theory).map_err(|e| anyhow!("{e}"))?;
    let amb = parse_structure(theory.signature.clone(), structure).map_err(|e| anyhow!("{}: {e}", m.structure))?;
    theory.in_class(&amb).map_err(|e| anyhow!("{}: {e}", m.structure))?;
    let mut tuples = BTreeMap::new();
    for (name, text) in &m.tuples {
        if amb.element_by_name(name).is_some() {
            bail!("tuple `{name}` shadows an element");
        }
        let t = resolve(&amb, &BTreeMap::new(), text).with_context(|| format!("tuple `{name}`"))?;
        tuples.insert(name.clone(), t);
    }
    let s = Scenario {
        name: m.name,
        theory,
        description: m.description,
        amb,
        tuples,
        budgets: m.budgets,
        claims: m.claims,
    };
    for c in &s.claims {
        for text in [&c.left, &c.right, &c.base, &c.closure, &c.contains, &c.failing_base].into_iter().flatten() {
            s.resolve(text).with_context(|| format!("claim `{}`", c.id))?;
        }
    }
    Ok(s)
}

pub fn load(name: &str) -> Result<Scenario> {
    let sh = CATALOG.iter().find(|s| s.name == name).ok_or_else(|| anyhow!("unknown scenario `{name}`"))?;
    parse_scenario(sh.manifest, sh.structure).with_context(|| format!("scenario {name}"))
}

/// The configuration text of a shipped scenario.
pub fn structure_text(name: &str) -> Option<&'static str> {
    CATALOG.iter().find(|s| s.name == name).map(|s| s.structure)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_shipped_scenario_loads() {
        assert_eq!(catalog().len(), 5);
        for name in catalog() {
            let s = load(name).unwrap();
            assert_eq!(s.name, name);
            assert!(s.theory.accepts(&s.amb));
        }
    }

    #[test]
    fn tuples_expand_in_place() {
        let s = load("generic_function_pairs").unwrap();
        let got = s.resolve("M0 a").unwrap();
        let names: Vec<&str> = got.iter().map(|&e| s.amb.name_of(e).unwrap()).collect();
        assert_eq!(names, ["m0", "m1", "a"]);
        assert!(s.resolve("nowhere").is_err());
    }

    #[test]
    fn relation_ids_round_trip() {
        for id in ["acl", "M", "m", "da", "forks-witness", "sop3"] {
            assert_eq!(Relation::parse(id).unwrap().id(), id);
        }
    }
}
