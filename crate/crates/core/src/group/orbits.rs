//! Orbit combinatorics: M_v^h, the multiplicity set L(G,H,v), orbit
//! averages of characters and separation witnesses.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::types::{Automorphism, Character, Element, FinAbGroup, Subgroup};
use crate::cyclo::{Cyclo, CycloField};
use crate::error::{Error, Result};

/// The distinct elements v^i(g), i ∈ ℤ, in order of first appearance.
pub fn orbit(v: &Automorphism, g: &Element) -> Result<Vec<Element>> {
    let group = v.group();
    group.check(g)?;
    let start = group.index_of(g);
    let mut out = vec![g.clone()];
    let mut i = v.apply_index(start);
    while i != start {
        out.push(group.element_at(i));
        i = v.apply_index(i);
    }
    Ok(out)
}

/// Least period of g under v.
pub fn period(v: &Automorphism, g: &Element) -> Result<u64> {
    Ok(orbit(v, g)?.len() as u64)
}

/// M_v^h = #(orbit(v,h) ∩ H).
pub fn orbit_count_in_subgroup(v: &Automorphism, h: &Element, sub: &Subgroup) -> Result<usize> {
    if v.group() != sub.group() {
        return Err(Error::Invalid("automorphism and subgroup live in different groups".into()));
    }
    if !sub.contains(h) {
        return Err(Error::NotInSubgroup);
    }
    Ok(orbit(v, h)?.iter().filter(|x| sub.contains(x)).count())
}

/// L(G,H,v) = { M_v^h : h ∈ H \ {0} }. Empty when H is trivial.
pub fn multiplicity_set(sub: &Subgroup, v: &Automorphism) -> Result<BTreeSet<usize>> {
    let group = v.group();
    if group != sub.group() {
        return Err(Error::Invalid("automorphism and subgroup live in different groups".into()));
    }
    let n = group.order() as usize;
    // orbit cache: each orbit is walked once and its H-count shared by its members
    let mut count = vec![usize::MAX; n];
    let mut out = BTreeSet::new();
    for start in 1..n {
        if !sub.contains_index(start) {
            continue;
        }
        if count[start] == usize::MAX {
            let mut members = vec![start];
            let mut i = v.apply_index(start);
            while i != start {
                members.push(i);
                i = v.apply_index(i);
            }
            let c = members.iter().filter(|&&m| sub.contains_index(m)).count();
            for m in members {
                count[m] = c;
            }
        }
        out.insert(count[start]);
    }
    Ok(out)
}

/// Every element with its least period under v. In a finite group every
/// element is periodic, so this enumerates the whole group.
pub fn periodic_set(v: &Automorphism) -> Vec<(Element, u64)> {
    v.group()
        .elements()
        .into_iter()
        .map(|g| {
            let p = period(v, &g).expect("element of the group");
            (g, p)
        })
        .collect()
}

/// l_χ(b) = (1/p) Σ_{i<p} χ(v^i b), p the least period of b.
pub fn l_value(field: &CycloField, chi: &Character, b: &Element, v: &Automorphism) -> Result<Cyclo> {
    l_value_over(field, chi, b, v, period(v, b)?)
}

/// Same average taken over `len` steps; equal to [`l_value`] whenever
/// `len` is a multiple of the least period.
pub fn l_value_over(field: &CycloField, chi: &Character, b: &Element, v: &Automorphism, len: u64) -> Result<Cyclo> {
    let group = v.group();
    group.check(b)?;
    group.check(&chi.0)?;
    if len == 0 {
        return Err(Error::Invalid("averaging length must be positive".into()));
    }
    let mut acc = field.zero();
    let mut x = b.clone();
    for _ in 0..len {
        acc = &acc + &chi.value(field, group, &x);
        x = v.apply(&x)?;
    }
    Ok(acc.scale(&BigRational::new(BigInt::from(1), BigInt::from(len))))
}

/// A periodic b with l_χ(b) ≠ l_ξ(b), for χ, ξ on distinct v̂-orbits.
///
/// `v` acts on the group carrying b; the characters are moved by its dual.
/// The first witness in enumeration order is returned.
pub fn separation_witness(field: &CycloField, chi: &Character, xi: &Character, v: &Automorphism) -> Result<Element> {
    let vd = v.dual();
    if orbit(&vd, &chi.0)?.contains(&xi.0) {
        return Err(Error::SameOrbit);
    }
    for b in v.group().elements() {
        if l_value(field, chi, &b, v)? != l_value(field, xi, &b, v)? {
            return Ok(b);
        }
    }
    Err(Error::NotFound)
}

/// Characters of the ambient group that are trivial on H.
pub fn annihilator(sub: &Subgroup) -> Vec<Character> {
    let group = sub.group();
    let members = sub.members();
    Character::all(group).into_iter().filter(|chi| members.iter().all(|h| chi.exponent_at(group, h) == 0)).collect()
}

/// The annihilator as a subgroup of the dual group (same invariant factors).
pub fn annihilator_subgroup(sub: &Subgroup) -> Subgroup {
    let gens = annihilator(sub).into_iter().map(|c| c.0).collect();
    Subgroup::generated_by(sub.group(), gens).expect("characters are elements of the dual")
}

/// Orbits of the dual automorphism on a set of characters.
pub fn character_orbits(chars: &[Character], v: &Automorphism) -> Vec<Vec<Character>> {
    let vd = v.dual();
    let mut seen = BTreeSet::new();
    let mut out = vec![];
    for c in chars {
        if seen.contains(c) {
            continue;
        }
        let orb: Vec<Character> = orbit(&vd, &c.0).expect("character coords").into_iter().map(Character).collect();
        for o in &orb {
            seen.insert(o.clone());
        }
        out.push(orb);
    }
    out
}

/// Independent recount of L(G,H,v) used to certify catalog entries: it
/// iterates the raw matrix and recomputes membership from the generators.
pub fn naive_multiplicity_set(group: &FinAbGroup, sub: &Subgroup, v: &Automorphism) -> BTreeSet<usize> {
    let mut members = BTreeSet::new();
    let mut frontier = vec![group.zero()];
    members.insert(group.zero());
    while let Some(x) = frontier.pop() {
        for g in sub.generators() {
            let y = group.add(&x, g);
            if members.insert(y.clone()) {
                frontier.push(y);
            }
        }
    }
    let mut out = BTreeSet::new();
    for h in members.iter().filter(|h| **h != group.zero()) {
        let mut seen = BTreeSet::new();
        let mut x = h.clone();
        for _ in 0..=group.order() {
            seen.insert(x.clone());
            x = super::types::apply_matrix(group, v.matrix(), &x);
        }
        out.insert(seen.iter().filter(|y| members.contains(*y)).count());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;

    fn z(n: u64) -> FinAbGroup {
        FinAbGroup::cyclic(n)
    }

    #[test]
    fn orbit_examples() {
        let g = z(5);
        let v = Automorphism::scalar(&g, 2).unwrap();
        let o: Vec<u64> = orbit(&v, &Element(vec![1])).unwrap().iter().map(|e| e.0[0]).collect();
        assert_eq!(o, vec![1, 2, 4, 3]);
        assert_eq!(orbit(&v, &g.zero()).unwrap(), vec![g.zero()]);
        let id = Automorphism::identity(&g);
        assert_eq!(orbit(&id, &Element(vec![3])).unwrap().len(), 1);
        assert!(orbit(&v, &Element(vec![1, 0])).is_err());
    }

    #[test]
    fn orbit_counts() {
        let g = z(5);
        let v = Automorphism::scalar(&g, 2).unwrap();
        let h = Subgroup::whole(&g);
        assert_eq!(orbit_count_in_subgroup(&v, &Element(vec![1]), &h).unwrap(), 4);
        let g6 = z(6);
        // ℤ/2⊕ℤ/3 ≅ ℤ/6 by CRT; (id, negation) becomes x ↦ 5x and (0,1) becomes 4
        let v6 = Automorphism::scalar(&g6, 5).unwrap();
        let h6 = Subgroup::whole(&g6);
        assert_eq!(orbit_count_in_subgroup(&v6, &Element(vec![4]), &h6).unwrap(), 2);
        let trivial = Subgroup::trivial(&g);
        assert_eq!(orbit_count_in_subgroup(&v, &Element(vec![1]), &trivial), Err(Error::NotInSubgroup));
    }

    #[test]
    fn multiplicity_set_examples() {
        let g2 = z(2);
        assert_eq!(multiplicity_set(&Subgroup::whole(&g2), &Automorphism::identity(&g2)).unwrap(), [1].into());
        let g5 = z(5);
        let v = Automorphism::scalar(&g5, 2).unwrap();
        assert_eq!(multiplicity_set(&Subgroup::whole(&g5), &v).unwrap(), [4].into());
        // (id, negation) on ℤ/2⊕ℤ/3
        let g6 = z(6);
        let v6 = Automorphism::scalar(&g6, 5).unwrap();
        assert_eq!(multiplicity_set(&Subgroup::whole(&g6), &v6).unwrap(), [1, 2].into());
        assert!(multiplicity_set(&Subgroup::trivial(&g6), &v6).unwrap().is_empty());
    }

    #[test]
    fn l_value_examples() {
        let k = z(3);
        let f = k.character_field();
        let neg = Automorphism::scalar(&k, -1).unwrap();
        let chi = Character(Element(vec![1]));
        assert_eq!(l_value(&f, &chi, &Element(vec![1]), &neg).unwrap().as_rational(), Some(q(-1, 2)));
        assert_eq!(l_value(&f, &chi, &k.zero(), &neg).unwrap(), f.one());
        assert_eq!(l_value(&f, &Character::trivial(&k), &Element(vec![2]), &neg).unwrap(), f.one());
        // averaging over a multiple of the period gives the same value
        assert_eq!(
            l_value_over(&f, &chi, &Element(vec![1]), &neg, 6).unwrap(),
            l_value(&f, &chi, &Element(vec![1]), &neg).unwrap()
        );
    }

    #[test]
    fn separation_examples() {
        let k = z(3);
        let f = k.character_field();
        let id = Automorphism::identity(&k);
        let chi = Character(Element(vec![1]));
        let triv = Character::trivial(&k);
        let b = separation_witness(&f, &chi, &triv, &id).unwrap();
        assert_eq!(b, Element(vec![1]));
        assert_eq!(l_value(&f, &chi, &b, &id).unwrap(), f.root(1));
        let neg = Automorphism::scalar(&k, -1).unwrap();
        let chi2 = Character(Element(vec![2]));
        assert_eq!(separation_witness(&f, &chi, &chi2, &neg), Err(Error::SameOrbit));
    }

    #[test]
    fn annihilator_examples() {
        let k = z(4);
        let h = Subgroup::generated_by(&k, vec![Element(vec![2])]).unwrap();
        let ann = annihilator(&h);
        assert_eq!(ann, vec![Character(Element(vec![0])), Character(Element(vec![2]))]);
        assert_eq!(annihilator(&Subgroup::whole(&k)), vec![Character::trivial(&k)]);
        assert_eq!(annihilator(&Subgroup::trivial(&k)).len(), 4);
    }
}
