use std::collections::BTreeSet;
use std::fmt;

use crate::cyclo::{Cyclo, CycloField};
use crate::error::{Error, Result};

/// A finite abelian group ℤ/d₁ ⊕ ⋯ ⊕ ℤ/d_r in invariant-factor form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FinAbGroup {
    factors: Vec<u64>,
    order: u64,
}

/// Coordinates of a group element, `coords[i] ∈ [0, d_i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element(pub Vec<u64>);

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl FinAbGroup {
    pub fn new(factors: Vec<u64>) -> Result<FinAbGroup> {
        if factors.iter().any(|&d| d < 2) {
            return Err(Error::InvalidGroup(format!("invariant factors must be >= 2: {factors:?}")));
        }
        if factors.windows(2).any(|w| w[1] % w[0] != 0) {
            return Err(Error::InvalidGroup(format!("factors must divide each other in order: {factors:?}")));
        }
        let order = factors.iter().product();
        Ok(FinAbGroup { factors, order })
    }

    pub fn trivial() -> FinAbGroup {
        FinAbGroup { factors: vec![], order: 1 }
    }

    pub fn cyclic(n: u64) -> FinAbGroup {
        if n == 1 {
            FinAbGroup::trivial()
        } else {
            FinAbGroup::new(vec![n]).expect("cyclic group")
        }
    }

    pub fn factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    /// Exponent of the group (largest invariant factor, or 1).
    pub fn exponent(&self) -> u64 {
        self.factors.last().copied().unwrap_or(1)
    }

    /// Field containing every character value.
    pub fn character_field(&self) -> CycloField {
        CycloField::new(self.exponent() as u32)
    }

    pub fn zero(&self) -> Element {
        Element(vec![0; self.rank()])
    }

    pub fn check(&self, g: &Element) -> Result<()> {
        if g.0.len() != self.rank() {
            return Err(Error::DimensionMismatch { expected: self.rank(), got: g.0.len() });
        }
        if g.0.iter().zip(&self.factors).any(|(c, d)| c >= d) {
            return Err(Error::Invalid(format!("coordinates of {g} out of range for {:?}", self.factors)));
        }
        Ok(())
    }

    /// Reduces arbitrary integer coordinates into canonical form.
    pub fn element(&self, coords: &[i64]) -> Result<Element> {
        if coords.len() != self.rank() {
            return Err(Error::DimensionMismatch { expected: self.rank(), got: coords.len() });
        }
        Ok(Element(coords.iter().zip(&self.factors).map(|(&c, &d)| c.rem_euclid(d as i64) as u64).collect()))
    }

    pub fn add(&self, a: &Element, b: &Element) -> Element {
        Element(a.0.iter().zip(&b.0).zip(&self.factors).map(|((x, y), d)| (x + y) % d).collect())
    }

    pub fn neg(&self, a: &Element) -> Element {
        Element(a.0.iter().zip(&self.factors).map(|(x, d)| (d - x) % d).collect())
    }

    pub fn sub(&self, a: &Element, b: &Element) -> Element {
        self.add(a, &self.neg(b))
    }

    pub fn scalar(&self, k: i64, a: &Element) -> Element {
        Element(a.0.iter().zip(&self.factors).map(|(&x, &d)| ((x as i64 * k).rem_euclid(d as i64)) as u64).collect())
    }

    /// Position of an element in the lexicographic enumeration.
    pub fn index_of(&self, g: &Element) -> usize {
        g.0.iter().zip(&self.factors).fold(0usize, |acc, (&c, &d)| acc * d as usize + c as usize)
    }

    pub fn element_at(&self, mut idx: usize) -> Element {
        let mut coords = vec![0u64; self.rank()];
        for i in (0..self.rank()).rev() {
            let d = self.factors[i] as usize;
            coords[i] = (idx % d) as u64;
            idx /= d;
        }
        Element(coords)
    }

    /// All elements in lexicographic order of coordinates.
    pub fn elements(&self) -> Vec<Element> {
        (0..self.order as usize).map(|i| self.element_at(i)).collect()
    }

    /// Additive order of an element.
    pub fn element_order(&self, g: &Element) -> u64 {
        g.0.iter().zip(&self.factors).map(|(&c, &d)| d / num_integer::gcd(c, d)).fold(1, num_integer::lcm)
    }

    /// Standard basis vector e_i.
    pub fn basis(&self, i: usize) -> Element {
        let mut e = self.zero();
        e.0[i] = 1;
        e
    }
}

/// A group automorphism given by an integer matrix acting on coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automorphism {
    group: FinAbGroup,
    matrix: Vec<Vec<i64>>,
    /// `image[i]` is the index of v(element_at(i)).
    image: Vec<usize>,
}

impl Automorphism {
    /// Validates the matrix: well-defined on each cyclic factor and bijective.
    pub fn new(group: &FinAbGroup, matrix: Vec<Vec<i64>>) -> Result<Automorphism> {
        let r = group.rank();
        if matrix.len() != r || matrix.iter().any(|row| row.len() != r) {
            return Err(Error::DimensionMismatch { expected: r, got: matrix.len() });
        }
        let d = group.factors();
        let mut m = matrix;
        for i in 0..r {
            for j in 0..r {
                m[i][j] = m[i][j].rem_euclid(d[i] as i64);
                // column j must be killed by d_j
                if (m[i][j] as u128 * d[j] as u128) % d[i] as u128 != 0 {
                    return Err(Error::NotAutomorphism(format!("entry ({i},{j}) not compatible with factors {d:?}")));
                }
            }
        }
        let image: Vec<usize> = group.elements().iter().map(|g| group.index_of(&apply_matrix(group, &m, g))).collect();
        let mut seen = vec![false; image.len()];
        for &i in &image {
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::NotAutomorphism("matrix is not injective".into()));
            }
        }
        Ok(Automorphism { group: group.clone(), matrix: m, image })
    }

    pub fn identity(group: &FinAbGroup) -> Automorphism {
        let r = group.rank();
        let m = (0..r).map(|i| (0..r).map(|j| i64::from(i == j)).collect()).collect();
        Automorphism::new(group, m).expect("identity")
    }

    /// Multiplication by a unit k on every coordinate.
    pub fn scalar(group: &FinAbGroup, k: i64) -> Result<Automorphism> {
        let r = group.rank();
        let m = (0..r).map(|i| (0..r).map(|j| if i == j { k } else { 0 }).collect()).collect();
        Automorphism::new(group, m)
    }

    pub fn group(&self) -> &FinAbGroup {
        &self.group
    }

    pub fn matrix(&self) -> &[Vec<i64>] {
        &self.matrix
    }

    pub fn apply(&self, g: &Element) -> Result<Element> {
        self.group.check(g)?;
        Ok(self.group.element_at(self.image[self.group.index_of(g)]))
    }

    pub(crate) fn apply_index(&self, i: usize) -> usize {
        self.image[i]
    }

    /// v^k(g) for k ≥ 0.
    pub fn apply_power(&self, k: u64, g: &Element) -> Result<Element> {
        self.group.check(g)?;
        let mut i = self.group.index_of(g);
        for _ in 0..k {
            i = self.image[i];
        }
        Ok(self.group.element_at(i))
    }

    /// Composition `self ∘ other`.
    pub fn compose(&self, other: &Automorphism) -> Result<Automorphism> {
        if self.group != other.group {
            return Err(Error::Invalid("automorphisms of different groups".into()));
        }
        let r = self.group.rank();
        let mut m = vec![vec![0i64; r]; r];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = (0..r).map(|k| self.matrix[i][k] * other.matrix[k][j]).sum();
            }
        }
        Automorphism::new(&self.group, m)
    }

    pub fn inverse(&self) -> Automorphism {
        let g = &self.group;
        let mut inv = vec![0usize; self.image.len()];
        for (i, &j) in self.image.iter().enumerate() {
            inv[j] = i;
        }
        let r = g.rank();
        let mut m = vec![vec![0i64; r]; r];
        for j in 0..r {
            let col = g.element_at(inv[g.index_of(&g.basis(j))]);
            for i in 0..r {
                m[i][j] = col.0[i] as i64;
            }
        }
        Automorphism::new(g, m).expect("inverse of an automorphism")
    }

    /// Multiplicative order of the automorphism.
    pub fn order(&self) -> u64 {
        let n = self.image.len();
        let mut seen = vec![false; n];
        let mut ord = 1u64;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut len = 0u64;
            let mut i = s;
            while !seen[i] {
                seen[i] = true;
                i = self.image[i];
                len += 1;
            }
            ord = num_integer::lcm(ord, len);
        }
        ord
    }

    /// The dual automorphism χ ↦ χ∘v, written on character coordinates.
    pub fn dual(&self) -> Automorphism {
        let d = self.group.factors();
        let r = d.len();
        let mut w = vec![vec![0i64; r]; r];
        for i in 0..r {
            for j in 0..r {
                // W_ij = M_ji · d_i / d_j, integral by well-definedness of M
                w[i][j] = ((self.matrix[j][i] as i128 * d[i] as i128) / d[j] as i128) as i64;
            }
        }
        Automorphism::new(&self.group, w).expect("dual of an automorphism")
    }
}

pub(crate) fn apply_matrix(group: &FinAbGroup, m: &[Vec<i64>], g: &Element) -> Element {
    let d = group.factors();
    Element(
        (0..group.rank())
            .map(|i| {
                let s: i128 = (0..group.rank()).map(|j| m[i][j] as i128 * g.0[j] as i128).sum();
                s.rem_euclid(d[i] as i128) as u64
            })
            .collect(),
    )
}

/// A subgroup, materialized as a membership table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgroup {
    group: FinAbGroup,
    generators: Vec<Element>,
    member: Vec<bool>,
    order: u64,
}

impl Subgroup {
    pub fn generated_by(group: &FinAbGroup, generators: Vec<Element>) -> Result<Subgroup> {
        for g in &generators {
            group.check(g)?;
        }
        let mut member = vec![false; group.order() as usize];
        member[0] = true;
        let mut list = vec![group.zero()];
        for gen in &generators {
            // add multiples of gen to the current span
            let mut frontier = list.clone();
            while !frontier.is_empty() {
                let mut next = vec![];
                for x in &frontier {
                    let y = group.add(x, gen);
                    let iy = group.index_of(&y);
                    if !member[iy] {
                        member[iy] = true;
                        list.push(y.clone());
                        next.push(y);
                    }
                }
                frontier = next;
            }
        }
        let order = list.len() as u64;
        Ok(Subgroup { group: group.clone(), generators, member, order })
    }

    pub fn trivial(group: &FinAbGroup) -> Subgroup {
        Subgroup::generated_by(group, vec![]).expect("trivial subgroup")
    }

    pub fn whole(group: &FinAbGroup) -> Subgroup {
        let gens = (0..group.rank()).map(|i| group.basis(i)).collect();
        Subgroup::generated_by(group, gens).expect("whole group")
    }

    pub fn group(&self) -> &FinAbGroup {
        &self.group
    }

    pub fn generators(&self) -> &[Element] {
        &self.generators
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }

    pub fn contains(&self, g: &Element) -> bool {
        self.group.check(g).is_ok() && self.member[self.group.index_of(g)]
    }

    pub(crate) fn contains_index(&self, i: usize) -> bool {
        self.member[i]
    }

    pub fn members(&self) -> Vec<Element> {
        self.member.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| self.group.element_at(i)).collect()
    }

    /// Every subgroup, ordered by size then by member list.
    pub fn all(group: &FinAbGroup) -> Vec<Subgroup> {
        let elements = group.elements();
        let mut seen: BTreeSet<Vec<bool>> = BTreeSet::new();
        let mut out = vec![];
        let mut frontier = vec![Subgroup::trivial(group)];
        seen.insert(frontier[0].member.clone());
        while let Some(h) = frontier.pop() {
            out.push(h.clone());
            for (i, g) in elements.iter().enumerate() {
                if h.member[i] {
                    continue;
                }
                let mut gens = h.generators.clone();
                gens.push(g.clone());
                let k = Subgroup::generated_by(group, gens).expect("valid");
                if seen.insert(k.member.clone()) {
                    frontier.push(k);
                }
            }
        }
        out.sort_by(|a, b| a.order.cmp(&b.order).then_with(|| b.member.cmp(&a.member)));
        out
    }
}

/// A character of a finite abelian group, in dual coordinates:
/// χ(g) = exp(2πi Σ_j χ_j g_j / d_j).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Character(pub Element);

impl Character {
    pub fn trivial(group: &FinAbGroup) -> Character {
        Character(group.zero())
    }

    /// Exponent j with χ(g) = ζ_e^j, e the group exponent.
    pub fn exponent_at(&self, group: &FinAbGroup, g: &Element) -> u64 {
        let e = group.exponent();
        let s: u128 = self
            .0
             .0
            .iter()
            .zip(&g.0)
            .zip(group.factors())
            .map(|((&c, &x), &d)| c as u128 * x as u128 * (e / d) as u128)
            .sum();
        (s % e as u128) as u64
    }

    pub fn value(&self, field: &CycloField, group: &FinAbGroup, g: &Element) -> Cyclo {
        field.root(self.exponent_at(group, g) as i64)
    }

    pub fn is_trivial(&self) -> bool {
        self.0 .0.iter().all(|&c| c == 0)
    }

    /// All characters of the group, in the same order as `elements()`.
    pub fn all(group: &FinAbGroup) -> Vec<Character> {
        group.elements().into_iter().map(Character).collect()
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "chi{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_factors() {
        assert!(FinAbGroup::new(vec![2, 3]).is_err());
        assert!(FinAbGroup::new(vec![1]).is_err());
        assert_eq!(FinAbGroup::new(vec![2, 4]).unwrap().order(), 8);
    }

    #[test]
    fn enumeration_matches_order() {
        let g = FinAbGroup::new(vec![2, 6]).unwrap();
        let els = g.elements();
        assert_eq!(els.len(), 12);
        for (i, e) in els.iter().enumerate() {
            assert_eq!(g.index_of(e), i);
        }
    }

    #[test]
    fn automorphism_validation() {
        let g = FinAbGroup::new(vec![2, 4]).unwrap();
        // e1 -> e1 + 2e2 is well defined (2e2 has order 2)
        assert!(Automorphism::new(&g, vec![vec![1, 0], vec![2, 1]]).is_ok());
        // e1 -> e2 is not: e2 has order 4
        assert!(Automorphism::new(&g, vec![vec![0, 0], vec![1, 1]]).is_err());
        let z5 = FinAbGroup::cyclic(5);
        assert!(Automorphism::new(&z5, vec![vec![0]]).is_err());
    }

    #[test]
    fn inverse_and_compose() {
        let g = FinAbGroup::new(vec![2, 4]).unwrap();
        let v = Automorphism::new(&g, vec![vec![1, 1], vec![2, 3]]).unwrap();
        let id = v.compose(&v.inverse()).unwrap();
        assert_eq!(id, Automorphism::identity(&g));
        assert_eq!(Automorphism::scalar(&FinAbGroup::cyclic(5), 2).unwrap().order(), 4);
    }

    #[test]
    fn dual_satisfies_pairing_identity() {
        let g = FinAbGroup::new(vec![2, 4]).unwrap();
        let v = Automorphism::new(&g, vec![vec![1, 1], vec![2, 3]]).unwrap();
        let vd = v.dual();
        for chi in Character::all(&g) {
            let chi_v = Character(vd.apply(&chi.0).unwrap());
            for x in g.elements() {
                assert_eq!(chi_v.exponent_at(&g, &x), chi.exponent_at(&g, &v.apply(&x).unwrap()));
            }
        }
        assert_eq!(vd.dual(), v);
    }

    #[test]
    fn subgroup_lattice_of_z4() {
        let g = FinAbGroup::cyclic(4);
        let subs = Subgroup::all(&g);
        assert_eq!(subs.iter().map(|s| s.order()).collect::<Vec<_>>(), vec![1, 2, 4]);
        let k = FinAbGroup::new(vec![2, 2]).unwrap();
        assert_eq!(Subgroup::all(&k).len(), 5);
    }

    #[test]
    fn character_is_homomorphism() {
        let g = FinAbGroup::new(vec![2, 6]).unwrap();
        let e = g.exponent();
        for chi in Character::all(&g) {
            for a in g.elements() {
                for b in g.elements() {
                    let lhs = chi.exponent_at(&g, &g.add(&a, &b));
                    assert_eq!(lhs, (chi.exponent_at(&g, &a) + chi.exponent_at(&g, &b)) % e);
                }
            }
        }
    }
}
