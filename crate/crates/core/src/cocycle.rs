//! The cocycle of a tower, skew products over it and the shift S_z̄.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cf::{decompose, CFPoint, Tower};
use crate::error::{Error, Result};
use crate::exact::{q, Q};
use crate::group::{Element, FinAbGroup, Subgroup};

/// X_0-representative of p: the minimal decomposition with the F-coordinate
/// and every lower coordinate set to 0.
pub fn pi_projection(tower: &Tower, p: &CFPoint) -> Result<CFPoint> {
    let n = p.truncation();
    let d = decompose(tower, p.top_rung(), n)?;
    let mut tail = vec![0; d.n_min];
    tail.extend(d.coords);
    Ok(CFPoint { level: 0, f: 0, tail })
}

/// Σ_m α_m(c_m) over the coordinates of π(x), for the level-N rung f.
pub fn phi(tower: &Tower, f: i128, level: usize) -> Result<Element> {
    let k = tower.k();
    let d = decompose(tower, f, level)?;
    let mut acc = k.zero();
    for m in 1..=level {
        let c = d.coord(m).unwrap_or(0);
        let l = tower.level(m)?;
        acc = k.add(&acc, l.alpha_at(c).expect("decomposition coordinates lie in C"));
    }
    Ok(acc)
}

/// α(x, y) for points with equal truncation.
pub fn cocycle_eval(tower: &Tower, x: &CFPoint, y: &CFPoint) -> Result<Element> {
    let n = x.truncation();
    if y.truncation() != n {
        return Err(Error::NotEquivalent);
    }
    let a = phi(tower, x.top_rung(), n)?;
    let b = phi(tower, y.top_rung(), n)?;
    Ok(tower.k().sub(&a, &b))
}

/// α(T^m p, p), or None when T^m p leaves the truncated tower.
pub fn cocycle_along_orbit(tower: &Tower, p: &CFPoint, m: i128) -> Result<Option<Element>> {
    match crate::cf::apply_t(tower, p, m) {
        Some(q) => cocycle_eval(tower, &q, &p.embedded()).map(Some),
        None => Ok(None),
    }
}

/// K/H with canonical representatives (the least element of each coset).
#[derive(Clone, Debug)]
pub struct CosetSpace {
    k: FinAbGroup,
    h: Subgroup,
    reps: Vec<Element>,
    coset_of: Vec<usize>,
}

impl CosetSpace {
    pub fn new(h: &Subgroup) -> CosetSpace {
        let k = h.group().clone();
        let members = h.members();
        let mut coset_of = vec![usize::MAX; k.order() as usize];
        let mut reps = vec![];
        for g in k.elements() {
            let i = k.index_of(&g);
            if coset_of[i] != usize::MAX {
                continue;
            }
            for x in &members {
                coset_of[k.index_of(&k.add(&g, x))] = reps.len();
            }
            reps.push(g);
        }
        CosetSpace { k, h: h.clone(), reps, coset_of }
    }

    pub fn group(&self) -> &FinAbGroup {
        &self.k
    }

    pub fn subgroup(&self) -> &Subgroup {
        &self.h
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn reps(&self) -> &[Element] {
        &self.reps
    }

    pub fn index(&self, g: &Element) -> usize {
        self.coset_of[self.k.index_of(g)]
    }

    pub fn rep(&self, g: &Element) -> &Element {
        &self.reps[self.index(g)]
    }

    /// Haar weight of one coset.
    pub fn weight(&self) -> Q {
        q(1, self.len() as i128)
    }
}

/// A point of X × K/H; the fiber is a canonical coset representative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkewPoint {
    pub base: CFPoint,
    pub fiber: Element,
}

/// T_{α,H}^m (x, k + H) = (T^m x, α(T^m x, x) + k + H).
pub fn skew_apply(tower: &Tower, cosets: &CosetSpace, sp: &SkewPoint, m: i128) -> Result<Option<SkewPoint>> {
    let Some(a) = cocycle_along_orbit(tower, &sp.base, m)? else { return Ok(None) };
    let base = crate::cf::apply_t(tower, &sp.base, m).expect("defined above");
    let fiber = cosets.rep(&cosets.group().add(&a, &sp.fiber)).clone();
    Ok(Some(SkewPoint { base, fiber }))
}

/// Z_n = z_1 + ⋯ + z_n.
pub fn z_sum(tower: &Tower, n: usize) -> i128 {
    tower.levels()[..n].iter().map(|l| l.z).sum()
}

/// S_z̄ on a level-N rung: defined when f + Z_N < h_N, with the tail beyond
/// N understood to be shifted along.
pub fn sz_apply(tower: &Tower, p: &CFPoint) -> Option<CFPoint> {
    let n = p.truncation();
    let f = p.top_rung() + z_sum(tower, n);
    (f < tower.h(n)).then(|| CFPoint::rung(n, f))
}

/// μ of level-N rungs outside the domain of [`sz_apply`].
pub fn sz_undefined_mass(tower: &Tower, n: usize) -> Q {
    let z = z_sum(tower, n).min(tower.h(n));
    q(z, tower.card_product(n))
}

/// 2 Σ_{n<m≤N} z_m/#C_m, the estimate for the undefined set quoted with S_z̄.
pub fn sz_mass_estimate(tower: &Tower, n: usize, depth: usize) -> Q {
    (n + 1..=depth).map(|m| q(2 * tower.levels()[m - 1].z, tower.levels()[m - 1].card())).sum()
}

/// C_n° = {c ∈ C_n ∩ (C_n − z_n) : α_n(c + z_n) = v(α_n(c))}.
pub fn c_circ(tower: &Tower, n: usize) -> Result<Vec<i128>> {
    let l = tower.level(n)?;
    let v = tower.v();
    Ok(l.c
        .iter()
        .zip(&l.alpha)
        .filter(|&(&c, a)| l.alpha_at(c + l.z).is_some_and(|b| v.apply(a).ok().as_ref() == Some(b)))
        .map(|(&c, _)| c)
        .collect())
}

/// One term 1 − #C_n°/#C_n with its expected value at recipe levels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoboundaryTerm {
    pub n: usize,
    pub term: Q,
    pub partial_sum: Q,
    pub expected: Option<Q>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoboundaryReport {
    pub terms: Vec<CoboundaryTerm>,
}

impl CoboundaryReport {
    /// Every recipe-level term equals 1/n² and the partial sums stay below 1.
    pub fn passed(&self) -> bool {
        self.terms.iter().all(|t| t.expected.as_ref().is_none_or(|e| *e == t.term))
            && self.terms.last().is_none_or(|t| t.partial_sum < q(1, 1))
    }
}

pub fn check_coboundary_condition(tower: &Tower) -> Result<CoboundaryReport> {
    let mut terms = vec![];
    let mut acc = q(0, 1);
    for l in tower.levels() {
        let circ = c_circ(tower, l.n)?.len() as i128;
        let term = q(1, 1) - q(circ, l.card());
        acc += &term;
        let expected = l.tag.as_ref().map(|_| q(1, (l.step() * l.step()) as i128));
        terms.push(CoboundaryTerm { n: l.n, term, partial_sum: acc.clone(), expected });
    }
    Ok(CoboundaryReport { terms })
}

/// Counts of a sampled exact identity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleCheck {
    pub tested: usize,
    pub failures: usize,
}

impl SampleCheck {
    pub fn passed(&self) -> bool {
        self.tested > 0 && self.failures == 0
    }
}

/// α(x,y) + α(y,z) = α(x,z) and α(x,x) = 0 on seeded triples of level-N rungs.
pub fn check_cocycle_identity(tower: &Tower, level: usize, samples: usize, seed: u64) -> Result<SampleCheck> {
    let k = tower.k();
    let h = tower.h(level);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..samples {
        let [x, y, z] = [0; 3].map(|_| CFPoint::rung(level, rng.gen_range(0..h)));
        let xy = cocycle_eval(tower, &x, &y)?;
        let yz = cocycle_eval(tower, &y, &z)?;
        let xz = cocycle_eval(tower, &x, &z)?;
        if k.add(&xy, &yz) != xz || cocycle_eval(tower, &x, &x)? != k.zero() {
            failures += 1;
        }
    }
    Ok(SampleCheck { tested: samples, failures })
}

/// S_z̄(T x) = T(S_z̄ x) on seeded level-N rungs where both sides are defined.
pub fn check_sz_commutation(tower: &Tower, level: usize, samples: usize, seed: u64) -> Result<SampleCheck> {
    let h = tower.h(level);
    let z = z_sum(tower, level);
    if z + 1 >= h {
        return Err(Error::InsufficientDepth { required: level + 1, available: level });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..samples {
        let p = CFPoint::rung(level, rng.gen_range(0..h - z - 1));
        let a = crate::cf::apply_t(tower, &p, 1).and_then(|x| sz_apply(tower, &x));
        let b = sz_apply(tower, &p).and_then(|x| crate::cf::apply_t(tower, &x, 1));
        if a.is_none() || a != b {
            failures += 1;
        }
    }
    Ok(SampleCheck { tested: samples, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::ScheduleTag;
    use crate::group::Automorphism;

    fn tower() -> Tower {
        let k = FinAbGroup::cyclic(2);
        let v = Automorphism::identity(&k);
        Tower::build(k, v, &[ScheduleTag::CaseI { a: Element(vec![1]) }], 3).unwrap()
    }

    #[test]
    fn projection() {
        let t = tower();
        let p = CFPoint::new(&t, 0, 0, vec![1, 3, 24]).unwrap();
        assert_eq!(pi_projection(&t, &p).unwrap(), p);
        let q = CFPoint::rung(3, 2);
        let pq = pi_projection(&t, &q).unwrap();
        assert_eq!(pq.tail, vec![0, 0, 0]);
        let pp = pi_projection(&t, &pq).unwrap();
        assert_eq!(pp, pq);
    }

    #[test]
    fn cocycle_single_coordinate() {
        let t = tower();
        let x = CFPoint::new(&t, 2, 5, vec![24]).unwrap();
        let y = CFPoint::new(&t, 2, 5, vec![48]).unwrap();
        assert_eq!(cocycle_eval(&t, &x, &y).unwrap(), Element(vec![1]));
        assert_eq!(cocycle_eval(&t, &x, &x).unwrap(), Element(vec![0]));
        assert_eq!(cocycle_eval(&t, &x, &CFPoint::rung(2, 0)), Err(Error::NotEquivalent));
    }

    #[test]
    fn coboundary_terms() {
        let t = tower();
        let rep = check_coboundary_condition(&t).unwrap();
        assert_eq!(rep.terms[2].term, q(1, 4));
        assert!(rep.passed());
        let mut bad = t.clone();
        bad.set_alpha(3, 48, Element(vec![1])).unwrap();
        let rep = check_coboundary_condition(&bad).unwrap();
        assert!(rep.terms[2].term > q(1, 4));
        assert!(!rep.passed());
    }

    #[test]
    fn sz_commutes_with_t() {
        let t = tower();
        let z = z_sum(&t, 3);
        assert_eq!(z, 48);
        for f in 0..t.h(3) - 1 {
            let p = CFPoint::rung(3, f);
            let a = crate::cf::apply_t(&t, &p, 1).and_then(|x| sz_apply(&t, &x));
            let b = sz_apply(&t, &p).and_then(|x| crate::cf::apply_t(&t, &x, 1));
            if let (Some(a), Some(b)) = (&a, &b) {
                assert_eq!(a, b);
            }
            assert_eq!(sz_apply(&t, &p).is_some(), f + z < t.h(3));
        }
    }

    #[test]
    fn sampled_identities() {
        let t = tower();
        assert!(check_cocycle_identity(&t, 3, 200, 1).unwrap().passed());
        assert!(check_sz_commutation(&t, 3, 200, 1).unwrap().passed());
    }

    #[test]
    fn cosets() {
        let k = FinAbGroup::cyclic(4);
        let h = Subgroup::generated_by(&k, vec![Element(vec![2])]).unwrap();
        let cs = CosetSpace::new(&h);
        assert_eq!(cs.len(), 2);
        assert_eq!(cs.rep(&Element(vec![3])), &Element(vec![1]));
        assert_eq!(cs.weight(), q(1, 2));
    }
}
