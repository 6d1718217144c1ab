//! Brute-force realization of a finite multiplicity set E as L(G,H,v)
//! over small finite abelian groups, and the text formats for triples.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::orbits::{multiplicity_set, naive_multiplicity_set};
use super::types::{Automorphism, Element, FinAbGroup, Subgroup};
use crate::error::{Error, Result};

/// A group, a subgroup and an automorphism.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupTriple {
    pub group: FinAbGroup,
    pub subgroup: Subgroup,
    pub aut: Automorphism,
}

/// On-disk form: `group = [..]`, `subgroup_gens = [[..], ..]`, `aut = [[..], ..]`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TripleRecord {
    pub group: Vec<u64>,
    pub subgroup_gens: Vec<Vec<u64>>,
    pub aut: Vec<Vec<i64>>,
}

impl GroupTriple {
    pub fn record(&self) -> TripleRecord {
        TripleRecord {
            group: self.group.factors().to_vec(),
            subgroup_gens: self.subgroup.generators().iter().map(|g| g.0.clone()).collect(),
            aut: self.aut.matrix().to_vec(),
        }
    }

    pub fn from_record(rec: &TripleRecord) -> Result<GroupTriple> {
        let group = if rec.group.is_empty() { FinAbGroup::trivial() } else { FinAbGroup::new(rec.group.clone())? };
        let gens = rec.subgroup_gens.iter().map(|g| Element(g.clone())).collect();
        let subgroup = Subgroup::generated_by(&group, gens)?;
        let aut = Automorphism::new(&group, rec.aut.clone())?;
        Ok(GroupTriple { group, subgroup, aut })
    }

    pub fn to_text(&self) -> String {
        toml::to_string(&self.record()).expect("triple serializes")
    }

    pub fn from_text(s: &str) -> Result<GroupTriple> {
        let rec: TripleRecord = toml::from_str(s).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
        GroupTriple::from_record(&rec)
    }

    pub fn multiplicity_set(&self) -> BTreeSet<usize> {
        multiplicity_set(&self.subgroup, &self.aut).expect("consistent triple")
    }
}

/// Invariant-factor types of abelian groups of the given order, in
/// lexicographic order.
pub fn group_types(order: u64) -> Vec<Vec<u64>> {
    fn rec(remaining: u64, last: u64, acc: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if remaining == 1 {
            out.push(acc.clone());
            return;
        }
        // choose the next factor d with last | d and d | remaining, and the
        // remaining product must be divisible by d again (d_{i+1} multiple of d_i)
        for d in 2..=remaining {
            if d % last != 0 || remaining % d != 0 {
                continue;
            }
            let rest = remaining / d;
            if rest != 1 && rest % d != 0 {
                continue;
            }
            acc.push(d);
            rec(rest, d, acc, out);
            acc.pop();
        }
    }
    let mut out = vec![];
    if order >= 2 {
        rec(order, 1, &mut vec![], &mut out);
    }
    out.sort();
    out
}

/// All automorphisms, by enumerating images of the basis vectors in
/// element order. The image of e_j must have order exactly d_j, and each
/// partial choice must be injective on the span of the chosen basis vectors.
pub fn automorphisms(group: &FinAbGroup) -> Vec<Automorphism> {
    let r = group.rank();
    let elements = group.elements();
    let d = group.factors();
    let candidates: Vec<Vec<Element>> =
        (0..r).map(|j| elements.iter().filter(|x| group.element_order(x) == d[j]).cloned().collect()).collect();
    let mut out = vec![];
    let mut chosen: Vec<Element> = vec![];
    fn rec(group: &FinAbGroup, candidates: &[Vec<Element>], chosen: &mut Vec<Element>, out: &mut Vec<Automorphism>) {
        let j = chosen.len();
        let r = group.rank();
        if j == r {
            let m: Vec<Vec<i64>> = (0..r).map(|i| (0..r).map(|k| chosen[k].0[i] as i64).collect()).collect();
            if let Ok(a) = Automorphism::new(group, m) {
                out.push(a);
            }
            return;
        }
        for c in &candidates[j] {
            chosen.push(c.clone());
            let span = Subgroup::generated_by(group, chosen.clone()).expect("valid");
            let expected: u64 = group.factors()[..=j].iter().product();
            if span.order() == expected {
                rec(group, candidates, chosen, out);
            }
            chosen.pop();
        }
    }
    rec(group, &candidates, &mut chosen, &mut out);
    out
}

/// First triple (G, H, v) with L(G,H,v) = E among groups of order ≤ bound.
///
/// Groups are visited by order, then invariant-factor type; within a group,
/// automorphisms in enumeration order, then nontrivial subgroups by size.
/// The hit is re-verified with [`naive_multiplicity_set`] before return.
pub fn catalog_search(target: &BTreeSet<usize>, bound: u64) -> Result<GroupTriple> {
    if target.is_empty() || target.contains(&0) {
        return Err(Error::Invalid("E must be a nonempty set of positive integers".into()));
    }
    let max_e = *target.iter().max().expect("nonempty") as u64;
    for order in 2..=bound {
        if order < max_e {
            continue;
        }
        for factors in group_types(order) {
            let group = FinAbGroup::new(factors)?;
            let subgroups: Vec<Subgroup> = Subgroup::all(&group).into_iter().filter(|h| !h.is_trivial()).collect();
            for aut in automorphisms(&group) {
                if (aut.order() as usize) < max_e as usize {
                    continue;
                }
                for h in &subgroups {
                    if &multiplicity_set(h, &aut)? == target {
                        if &naive_multiplicity_set(&group, h, &aut) != target {
                            return Err(Error::Invalid("recount disagrees with orbit cache".into()));
                        }
                        return Ok(GroupTriple { group: group.clone(), subgroup: h.clone(), aut });
                    }
                }
            }
        }
    }
    Err(Error::NotFound)
}

/// One verified catalog record.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CatalogEntry {
    #[serde(rename = "E")]
    pub e: Vec<usize>,
    pub group: Vec<u64>,
    pub subgroup_gens: Vec<Vec<u64>>,
    pub aut: Vec<Vec<i64>>,
    pub verified: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Catalog {
    pub version: u32,
    #[serde(default, rename = "entry")]
    pub entries: Vec<CatalogEntry>,
}

impl Catalog {
    pub const VERSION: u32 = 1;

    pub fn new() -> Catalog {
        Catalog { version: Catalog::VERSION, entries: vec![] }
    }

    /// Adds a record; `verified` is set only after an independent recount.
    pub fn push(&mut self, target: &BTreeSet<usize>, triple: &GroupTriple) {
        let rec = triple.record();
        let verified = &naive_multiplicity_set(&triple.group, &triple.subgroup, &triple.aut) == target;
        self.entries.push(CatalogEntry {
            e: target.iter().copied().collect(),
            group: rec.group,
            subgroup_gens: rec.subgroup_gens,
            aut: rec.aut,
            verified,
        });
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("catalog serializes")
    }

    pub fn from_text(s: &str) -> Result<Catalog> {
        let c: Catalog = toml::from_str(s).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
        if c.version != Catalog::VERSION {
            return Err(Error::Parse { line: 0, msg: format!("unsupported catalog version {}", c.version) });
        }
        Ok(c)
    }
}

impl Default for Catalog {
    fn default() -> Self {
        Catalog::new()
    }
}
