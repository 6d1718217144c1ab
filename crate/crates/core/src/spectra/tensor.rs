use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::perm::{is_free, tuple_orbits, PermSubgroup};
use super::unitary::{multiplicity_function, FiniteUnitary};
use crate::cyclo::{Cyclo, CycloField};
use crate::error::{Error, Result};
use crate::exact::q;

/// Prime modulus for generic angles 2π·ℓ/Q.
pub const GENERIC_MODULUS: u64 = 1_000_003;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Eigenvalues read off the angle labels.
    Exact,
    /// V conjugated by a seeded Haar unitary, eigenvalues by Schur form.
    Floating { seed: u64 },
}

/// Sorted index multisets of size s over 0..d.
pub fn multisets(d: usize, s: usize) -> Vec<Vec<usize>> {
    tuple_orbits(d, &PermSubgroup::symmetric(s)).into_iter().map(|o| o[0].clone()).collect()
}

/// diag(exp(2πi ℓ_j / Q)).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenericDiagonal {
    labels: Vec<u64>,
    modulus: u64,
}

impl GenericDiagonal {
    pub fn new(labels: Vec<u64>, modulus: u64) -> GenericDiagonal {
        GenericDiagonal { labels, modulus }
    }

    /// Random labels with no collision among multiset sums of size ≤ k.
    pub fn random(d: usize, k: usize, seed: u64) -> Result<GenericDiagonal> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..64 {
            let labels: Vec<u64> = (0..d).map(|_| rng.gen_range(1..GENERIC_MODULUS)).collect();
            let g = GenericDiagonal::new(labels, GENERIC_MODULUS);
            if g.relation(k).is_none() {
                return Ok(g);
            }
        }
        Err(Error::HypothesisFail(format!("no generic labels for d={d}, k={k}")))
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn label_sum(&self, t: &[usize]) -> u64 {
        t.iter().map(|&i| self.labels[i]).sum::<u64>() % self.modulus
    }

    /// Two distinct multisets of size ≤ k with equal label sums, if any.
    pub fn relation(&self, k: usize) -> Option<(Vec<usize>, Vec<usize>)> {
        let mut seen: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for s in 0..=k {
            for m in multisets(self.dim(), s) {
                if let Some(prev) = seen.insert(self.label_sum(&m), m.clone()) {
                    return Some((prev, m));
                }
            }
        }
        None
    }

    pub fn unitary(&self) -> FiniteUnitary {
        FiniteUnitary::diagonal(self.labels.clone(), self.modulus)
    }
}

/// V^{⊗k} on the Γ-invariant tensors, in the orthonormal orbit-sum basis.
/// A labelled diagonal input stays diagonal; otherwise eigenvalue labels of
/// the input (if known) are carried over as orbit label sums.
pub fn gamma_invariant_restriction(v: &FiniteUnitary, k: usize, gamma: &PermSubgroup) -> Result<FiniteUnitary> {
    if gamma.k() != k {
        return Err(Error::DimensionMismatch { expected: k, got: gamma.k() });
    }
    if k > 4 {
        return Err(Error::Invalid(format!("tensor power {k} exceeds 4")));
    }
    let d = v.dim();
    let orbits = tuple_orbits(d, gamma);
    let modulus = v.modulus();
    let orbit_labels = v
        .labels()
        .map(|ls| orbits.iter().map(|o| o[0].iter().map(|&i| ls[i]).sum::<u64>() % modulus).collect::<Vec<u64>>());
    if let (true, Some(labels)) = (v.is_diagonal(), orbit_labels.clone()) {
        return Ok(FiniteUnitary::diagonal(labels, modulus));
    }
    let m = v.matrix();
    let n = orbits.len();
    let mut r = DMatrix::<Complex64>::zeros(n, n);
    for (i, oi) in orbits.iter().enumerate() {
        for (j, oj) in orbits.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in oi {
                for s in oj {
                    acc += t.iter().zip(s).map(|(&a, &b)| m[(a, b)]).product::<Complex64>();
                }
            }
            r[(i, j)] = acc / ((oi.len() * oj.len()) as f64).sqrt();
        }
    }
    Ok(match orbit_labels {
        Some(labels) => FiniteUnitary::with_labels(r, labels, modulus, false),
        None => FiniteUnitary::from_matrix(r)?,
    })
}

/// Multiplicities split by whether the eigenvalue comes from a multiset of
/// distinct indices (the free part) or one with a repeated index.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantReport {
    pub d: usize,
    pub k: usize,
    pub gamma_order: usize,
    pub dim: usize,
    pub orbit_count: usize,
    pub expected: usize,
    pub free: BTreeSet<usize>,
    pub diagonal: BTreeSet<usize>,
    pub unmatched: usize,
    pub exact: bool,
    pub stable: bool,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.dim == self.orbit_count
            && self.unmatched == 0
            && self.stable
            && self.free.len() == 1
            && self.free.contains(&self.expected)
    }
}

pub fn check_invariant_multiplicity(
    v: &GenericDiagonal,
    k: usize,
    gamma: &PermSubgroup,
    mode: Mode,
) -> Result<InvariantReport> {
    let d = v.dim();
    let sym = gamma_invariant_restriction(&v.unitary(), k, &PermSubgroup::symmetric(k))?;
    let sym_mf = multiplicity_function(&sym)?;
    if !sym_mf.is_simple() {
        return Err(Error::HypothesisFail(format!("symmetric power {k} of V is not simple")));
    }
    let u = match mode {
        Mode::Exact => v.unitary(),
        Mode::Floating { seed } => v.unitary().conjugated(&mut ChaCha8Rng::seed_from_u64(seed)),
    };
    let r = gamma_invariant_restriction(&u, k, gamma)?;
    let mf = multiplicity_function(&r)?;
    let by_label: BTreeMap<u64, Vec<usize>> = multisets(d, k).into_iter().map(|m| (v.label_sum(&m), m)).collect();
    let mut rep = InvariantReport {
        d,
        k,
        gamma_order: gamma.order(),
        dim: r.dim(),
        orbit_count: gamma.burnside_count(d),
        expected: (1..=k).product::<usize>() / gamma.order(),
        free: BTreeSet::new(),
        diagonal: BTreeSet::new(),
        unmatched: 0,
        exact: mf.exact,
        stable: mf.stable,
    };
    for c in &mf.clusters {
        match c.label.and_then(|l| by_label.get(&l)) {
            Some(m) if is_free(m) => rep.free.insert(c.multiplicity),
            Some(_) => rep.diagonal.insert(c.multiplicity),
            None => {
                rep.unmatched += 1;
                false
            }
        };
    }
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricPowerReport {
    pub invariant: InvariantReport,
    pub identity: IdentityReport,
}

impl SymmetricPowerReport {
    pub fn passed(&self) -> bool {
        self.invariant.passed() && self.identity.passed()
    }
}

/// V^{⊙(k−1)} ⊗ V as the 𝔖_{k−1}-invariant part of V^{⊗k}; expected multiplicity k.
pub fn symmetric_power_check(v: &GenericDiagonal, k: usize, mode: Mode) -> Result<SymmetricPowerReport> {
    if k == 0 {
        return Err(Error::Invalid("k must be positive".into()));
    }
    let invariant = check_invariant_multiplicity(v, k, &PermSubgroup::fixing_last(k), mode)?;
    let identity = restriction_identity_check(v.dim(), k)?;
    Ok(SymmetricPowerReport { invariant, identity })
}

/// Unitary with entries in ℚ(ζ_8): Hadamard blocks on index pairs, a
/// diagonal of eighth roots of unity and a cyclic shift of the rows.
pub fn cyclotomic_unitary(d: usize) -> Vec<Vec<Cyclo>> {
    let f = CycloField::new(8);
    let inv_sqrt2 = (f.root(1) + f.root(-1)).scale(&q(1, 2));
    let mut h = vec![vec![f.zero(); d]; d];
    let mut i = 0;
    while i + 1 < d {
        h[i][i] = inv_sqrt2.clone();
        h[i][i + 1] = inv_sqrt2.clone();
        h[i + 1][i] = inv_sqrt2.clone();
        h[i + 1][i + 1] = -&inv_sqrt2;
        i += 2;
    }
    if i < d {
        h[i][i] = f.root(3);
    }
    (0..d).map(|r| (0..d).map(|c| &f.root((r as i64 * 3 + 1) % 8) * &h[(r + 1) % d][c]).collect()).collect()
}

fn is_exactly_unitary(v: &[Vec<Cyclo>]) -> bool {
    let d = v.len();
    (0..d).all(|i| {
        (0..d).all(|j| {
            let s = (0..d).fold(v[0][0].scale(&q(0, 1)), |acc, l| acc + &v[i][l] * &v[j][l].conj());
            s.as_rational() == Some(q((i == j) as i128, 1))
        })
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    pub d: usize,
    pub k: usize,
    pub dim: usize,
    pub unitary: bool,
    pub mismatches: usize,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.unitary && self.mismatches == 0
    }
}

/// Compares, entry by entry in ℚ(ζ_8), the matrix of V^{⊗k} on
/// 𝔖_{k−1}-invariant tensors with that of (symmetric power k−1 of V) ⊗ V,
/// the latter computed by substitution x_j ↦ Σ_i V_ij x_i on monomials.
pub fn restriction_identity_check(d: usize, k: usize) -> Result<IdentityReport> {
    if k == 0 || k > 4 || d == 0 {
        return Err(Error::Invalid(format!("unsupported d={d}, k={k}")));
    }
    let v = cyclotomic_unitary(d);
    let zero = v[0][0].scale(&q(0, 1));
    let orbits = tuple_orbits(d, &PermSubgroup::fixing_last(k));
    let route1 = |r: usize, c: usize| -> Cyclo {
        let rep = &orbits[r][0];
        orbits[c].iter().fold(zero.clone(), |acc, t| {
            let term = rep.iter().zip(t).fold(None::<Cyclo>, |p, (&a, &b)| {
                Some(match p {
                    None => v[a][b].clone(),
                    Some(p) => &p * &v[a][b],
                })
            });
            acc + term.expect("k ≥ 1")
        })
    };

    let monos = multisets(d, k - 1);
    let mono_index: BTreeMap<Vec<usize>, usize> = monos.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
    let mut poly = vec![vec![zero.clone(); monos.len()]; monos.len()];
    for (ci, c) in monos.iter().enumerate() {
        for choice in 0..d.pow(c.len() as u32) {
            let mut x = choice;
            let mut idx = Vec::with_capacity(c.len());
            let mut coeff: Option<Cyclo> = None;
            for &cj in c {
                let i = x % d;
                x /= d;
                idx.push(i);
                coeff = Some(match coeff {
                    None => v[i][cj].clone(),
                    Some(p) => &p * &v[i][cj],
                });
            }
            idx.sort_unstable();
            let coeff = coeff.unwrap_or_else(|| one_like(&zero));
            let ri = mono_index[&idx];
            poly[ri][ci] = &poly[ri][ci] + &coeff;
        }
    }

    let mut mismatches = 0;
    for (r, or) in orbits.iter().enumerate() {
        let (mr, ir) = split_last(&or[0]);
        for (c, oc) in orbits.iter().enumerate() {
            let (mc, ic) = split_last(&oc[0]);
            let (ri, ci) = (mono_index[&mr], mono_index[&mc]);
            let scale = q(rearrangements(&mc) as i128, rearrangements(&mr) as i128);
            let route2 = &poly[ri][ci].scale(&scale) * &v[ir][ic];
            if route1(r, c) != route2 {
                mismatches += 1;
            }
        }
    }
    Ok(IdentityReport { d, k, dim: orbits.len(), unitary: is_exactly_unitary(&v), mismatches })
}

fn one_like(z: &Cyclo) -> Cyclo {
    CycloField::new(z.order()).one()
}

fn split_last(t: &[usize]) -> (Vec<usize>, usize) {
    let (last, head) = t.split_last().expect("k ≥ 1");
    let mut head = head.to_vec();
    head.sort_unstable();
    (head, *last)
}

/// Number of distinct rearrangements of a multiset.
fn rearrangements(m: &[usize]) -> usize {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &x in m {
        *counts.entry(x).or_default() += 1;
    }
    counts.values().fold((1..=m.len()).product::<usize>(), |acc, &c| acc / (1..=c).product::<usize>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restriction_dimensions() {
        let v = GenericDiagonal::random(2, 3, 1).unwrap().unitary();
        let r = gamma_invariant_restriction(&v, 3, &PermSubgroup::cyclic(3)).unwrap();
        assert_eq!(r.dim(), 4);
        let v5 = GenericDiagonal::random(5, 2, 1).unwrap().unitary();
        assert_eq!(gamma_invariant_restriction(&v5, 2, &PermSubgroup::symmetric(2)).unwrap().dim(), 15);
        assert_eq!(gamma_invariant_restriction(&v5, 2, &PermSubgroup::trivial(2)).unwrap().dim(), 25);
    }

    #[test]
    fn invariant_examples() {
        let v = GenericDiagonal::random(5, 2, 7).unwrap();
        let sym = check_invariant_multiplicity(&v, 2, &PermSubgroup::symmetric(2), Mode::Exact).unwrap();
        assert!(sym.passed());
        assert_eq!(sym.free, [1].into());
        let triv = check_invariant_multiplicity(&v, 2, &PermSubgroup::trivial(2), Mode::Exact).unwrap();
        assert!(triv.passed());
        assert_eq!(triv.free, [2].into());
        assert_eq!(triv.diagonal, [1].into());
        let v4 = GenericDiagonal::random(4, 3, 7).unwrap();
        let c3 = check_invariant_multiplicity(&v4, 3, &PermSubgroup::cyclic(3), Mode::Floating { seed: 3 }).unwrap();
        assert!(c3.passed(), "{c3:?}");
        assert_eq!(c3.free, [2].into());
    }

    #[test]
    fn hypothesis_failure() {
        let v = GenericDiagonal::new(vec![1, 2, 3], 101);
        assert!(v.relation(2).is_some());
        assert!(matches!(
            check_invariant_multiplicity(&v, 2, &PermSubgroup::trivial(2), Mode::Exact),
            Err(Error::HypothesisFail(_))
        ));
    }

    #[test]
    fn symmetric_power_examples() {
        let v = GenericDiagonal::random(5, 2, 11).unwrap();
        let r = symmetric_power_check(&v, 2, Mode::Exact).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.invariant.free, [2].into());
        let v1 = GenericDiagonal::random(5, 1, 11).unwrap();
        let r1 = symmetric_power_check(&v1, 1, Mode::Exact).unwrap();
        assert_eq!(r1.invariant.free, [1].into());
        assert!(r1.passed());
    }

    #[test]
    fn identity_is_exact() {
        for (d, k) in [(2, 2), (3, 2), (4, 3)] {
            let r = restriction_identity_check(d, k).unwrap();
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn rearrangement_counts() {
        assert_eq!(rearrangements(&[0, 0, 1]), 3);
        assert_eq!(rearrangements(&[]), 1);
        assert_eq!(rearrangements(&[0, 1, 2]), 6);
    }
}
