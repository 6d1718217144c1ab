//! Weighted Koopman pairings ⟨U_{T,χ}^m 1_A, 1_B⟩ on cylinder indicators,
//! computed exactly at a finite depth with a certified truncation error.
//!
//! Convention: (U^m F)(x) = χ(α(T^m x, x)) F(T^m x), so the pairing sums
//! over x ∈ B with T^m x ∈ A. Rungs of B that T^m pushes out of [0, h_N)
//! form the error mass.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_traits::Signed;

use crate::cf::{embed, measure, Cylinder, ScheduleTag, Tower};
use crate::cocycle::{phi, z_sum, CosetSpace};
use crate::cyclo::{Cyclo, CycloField};
use crate::error::{Error, Result};
use crate::exact::{q, qi, render, Q};
use crate::group::{l_value, orbit, Character, Element, Subgroup};

/// A pairing value with |true − value| ≤ error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelPairing {
    pub value: Cyclo,
    pub error: Q,
}

/// The cocycle distribution of one pairing: `counts[i]` rungs of B carry
/// the cocycle value with K-index i. Valid for every character at once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairingCounts {
    pub counts: Vec<i128>,
    pub error_count: i128,
    pub rung: Q,
}

impl PairingCounts {
    pub fn value(&self, tower: &Tower, field: &CycloField, chi: &Character) -> Cyclo {
        let k = tower.k();
        let e = k.exponent() as usize;
        let mut by_exp = vec![0i128; e];
        for (i, &c) in self.counts.iter().enumerate() {
            if c != 0 {
                by_exp[chi.exponent_at(k, &k.element_at(i)) as usize] += c;
            }
        }
        let mut acc = field.zero();
        for (j, &c) in by_exp.iter().enumerate() {
            if c != 0 {
                acc = &acc + &field.root(j as i64).scale(&qi(c));
            }
        }
        acc.scale(&self.rung)
    }

    pub fn error(&self) -> Q {
        &self.rung * qi(self.error_count)
    }

    pub fn pairing(&self, tower: &Tower, field: &CycloField, chi: &Character) -> LevelPairing {
        LevelPairing { value: self.value(tower, field, chi), error: self.error() }
    }
}

/// Shared recursion state for pairings of cylinders at level ≤ `base`,
/// evaluated at `depth`. The memo depends only on the tower, so one engine
/// serves every (m, A, B).
pub struct PairingEngine<'a> {
    tower: &'a Tower,
    base: usize,
    depth: usize,
    add: Vec<Vec<usize>>,
    neg: Vec<usize>,
    memo: HashMap<(usize, i128), Vec<i128>>,
    phi_cache: HashMap<i128, usize>,
}

impl<'a> PairingEngine<'a> {
    pub fn new(tower: &'a Tower, base: usize, depth: usize) -> Result<PairingEngine<'a>> {
        if depth > tower.depth() {
            return Err(Error::BeyondDepth { level: depth, depth: tower.depth() });
        }
        if base > depth {
            return Err(Error::Invalid("base level above pairing depth".into()));
        }
        let k = tower.k();
        let els = k.elements();
        let add = els.iter().map(|a| els.iter().map(|b| k.index_of(&k.add(a, b))).collect()).collect();
        let neg = els.iter().map(|a| k.index_of(&k.neg(a))).collect();
        Ok(PairingEngine { tower, base, depth, add, neg, memo: HashMap::new(), phi_cache: HashMap::new() })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn phi_index(&mut self, g: i128) -> usize {
        if let Some(&i) = self.phi_cache.get(&g) {
            return i;
        }
        let e = phi(self.tower, g, self.base).expect("rung below h_base");
        let i = self.tower.k().index_of(&e);
        self.phi_cache.insert(g, i);
        i
    }

    /// Distribution of Σ_{base<j≤L} (α_j(c'_j) − α_j(c_j)) over coordinate
    /// pairs with Σ (c'_j − c_j) = s.
    fn v(&mut self, level: usize, s: i128) -> Vec<i128> {
        let size = self.add.len();
        if level == self.base {
            let mut out = vec![0; size];
            if s == 0 {
                out[0] = 1;
            }
            return out;
        }
        if let Some(x) = self.memo.get(&(level, s)) {
            return x.clone();
        }
        let tower = self.tower;
        let l = &tower.levels()[level - 1];
        let hp = tower.h(level - 1);
        let k = tower.k();
        let idx: Vec<usize> = l.alpha.iter().map(|a| k.index_of(a)).collect();
        let mut out = vec![0i128; size];
        for (i, &c) in l.c.iter().enumerate() {
            // c' − c must lie within h_{L-1} of s
            let lo = l.c.partition_point(|&x| x <= s + c - hp);
            let hi = l.c.partition_point(|&x| x < s + c + hp);
            for j in lo..hi {
                let t = s - (l.c[j] - c);
                let sub = self.v(level - 1, t);
                let shift = self.add[idx[j]][self.neg[idx[i]]];
                for (u, &cnt) in sub.iter().enumerate() {
                    if cnt != 0 {
                        out[self.add[u][shift]] += cnt;
                    }
                }
            }
        }
        self.memo.insert((level, s), out.clone());
        out
    }

    /// #{(g, c_{base+1..L}) : g ∈ bs, g + Σ c ≥ t}.
    fn count_ge(&self, level: usize, t: i128, bs: &[i128]) -> i128 {
        if level == self.base {
            return (bs.len() - bs.partition_point(|&g| g < t)) as i128;
        }
        let l = &self.tower.levels()[level - 1];
        let hp = self.tower.h(level - 1);
        let full =
            bs.len() as i128 * self.tower.levels()[self.base..level - 1].iter().map(|x| x.card()).product::<i128>();
        let mut acc = 0;
        for &c in &l.c {
            let u = t - c;
            if u <= 0 {
                acc += full;
            } else if u < hp {
                acc += self.count_ge(level - 1, u, bs);
            }
        }
        acc
    }

    fn base_set(&self, cyl: &Cylinder) -> Result<Vec<i128>> {
        if cyl.level > self.base {
            return Err(Error::Invalid(format!("cylinder at level {} above engine base {}", cyl.level, self.base)));
        }
        Ok(embed(self.tower, cyl, self.base)?.a)
    }

    pub fn counts(&mut self, m: i128, a: &Cylinder, b: &Cylinder) -> Result<PairingCounts> {
        let n = self.depth;
        let h = self.tower.h(n);
        if m.abs() >= h {
            return Err(Error::ShiftTooLarge { shift: m, depth: n });
        }
        let a0 = self.base_set(a)?;
        let b0 = self.base_set(b)?;
        let size = self.add.len();
        let mut counts = vec![0i128; size];
        let pa: Vec<usize> = a0.iter().map(|&g| self.phi_index(g)).collect();
        let pb: Vec<usize> = b0.iter().map(|&g| self.phi_index(g)).collect();
        for (gi, &g) in b0.iter().enumerate() {
            for (gj, &gp) in a0.iter().enumerate() {
                let dist = self.v(n, g + m - gp);
                let shift = self.add[pa[gj]][self.neg[pb[gi]]];
                for (u, &cnt) in dist.iter().enumerate() {
                    if cnt != 0 {
                        counts[self.add[u][shift]] += cnt;
                    }
                }
            }
        }
        let total = b0.len() as i128 * self.tower.levels()[self.base..n].iter().map(|x| x.card()).product::<i128>();
        let error_count = if m > 0 {
            self.count_ge(n, h - m, &b0)
        } else if m < 0 {
            total - self.count_ge(n, -m, &b0)
        } else {
            0
        };
        Ok(PairingCounts { counts, error_count, rung: q(1, self.tower.card_product(n)) })
    }
}

/// ⟨U_{T,χ}^m 1_A, 1_B⟩ at depth N.
pub fn pairing(
    tower: &Tower,
    chi: &Character,
    m: i128,
    a: &Cylinder,
    b: &Cylinder,
    depth: usize,
) -> Result<LevelPairing> {
    let base = a.level.max(b.level);
    let mut eng = PairingEngine::new(tower, base, depth)?;
    let field = tower.k().character_field();
    Ok(eng.counts(m, a, b)?.pairing(tower, &field, chi))
}

/// μ(A ∩ B).
pub fn overlap(tower: &Tower, a: &Cylinder, b: &Cylinder) -> Result<Q> {
    let n = a.level.max(b.level);
    let ea = embed(tower, a, n)?;
    let eb = embed(tower, b, n)?;
    let common: Vec<i128> = ea.a.iter().copied().filter(|x| eb.a.binary_search(x).is_ok()).collect();
    measure(tower, &Cylinder::new(n, common))
}

/// A certified upper bound on a deviation, with the truncation part shown.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Residual {
    pub bound: Q,
    pub error: Q,
}

fn tag_at(tower: &Tower, n: usize) -> Result<&ScheduleTag> {
    let l = tower.level(n + 1)?;
    l.tag.as_ref().ok_or(Error::WrongTag(n))
}

/// Deviation of ⟨U_{T,χ}^{2h_n} 1_A, 1_B⟩ from l_χ(a)·μ(A∩B), where step n
/// (the construction of level n+1) carries CaseI(a).
pub fn weak_limit_residual_i(
    eng: &mut PairingEngine,
    tower: &Tower,
    field: &CycloField,
    chi: &Character,
    a: &Cylinder,
    b: &Cylinder,
    n: usize,
) -> Result<Residual> {
    let ScheduleTag::CaseI { a: g } = tag_at(tower, n)? else { return Err(Error::WrongTag(n)) };
    let l = l_value(field, chi, g, tower.v())?;
    let p = eng.counts(2 * tower.h(n), a, b)?.pairing(tower, field, chi);
    let target = l.scale(&overlap(tower, a, b)?);
    let bound = (&p.value - &target).modulus_upper() + &p.error;
    Ok(Residual { bound, error: p.error })
}

/// Deviation from l_χ(b)/(k+1)·μ(A∩B) + k/(k+1)·⟨U_{T,χ}^{-1} 1_A, 1_B⟩ at
/// a CaseII(b,k) step n.
pub fn weak_limit_residual_ii(
    eng: &mut PairingEngine,
    tower: &Tower,
    field: &CycloField,
    chi: &Character,
    a: &Cylinder,
    b: &Cylinder,
    n: usize,
) -> Result<Residual> {
    let ScheduleTag::CaseII { b: g, k } = tag_at(tower, n)? else { return Err(Error::WrongTag(n)) };
    let k = *k as i128;
    let l = l_value(field, chi, g, tower.v())?;
    let p = eng.counts(2 * tower.h(n), a, b)?.pairing(tower, field, chi);
    let back = eng.counts(-1, a, b)?.pairing(tower, field, chi);
    let target = &l.scale(&(overlap(tower, a, b)? * q(1, k + 1))) + &back.value.scale(&q(k, k + 1));
    let error = &p.error + &back.error * q(k, k + 1);
    let bound = (&p.value - &target).modulus_upper() + &error;
    Ok(Residual { bound, error })
}

/// ⟨U_{S_z̄} 1_A, 1_B⟩, exactly.
///
/// At a level L ≥ 2 from which every further level is a recipe level, a
/// point of [B]_L lands in [A]_L iff its rung moves to g + Z_L ∈ A below h_L
/// and every later coordinate satisfies c_m + z_m ∈ C_m. The latter has
/// probability ∏_{j≥L} (1 − 1/j²) = (L−1)/L.
pub fn sz_pairing(tower: &Tower, a: &Cylinder, b: &Cylinder) -> Result<Q> {
    let base = a.level.max(b.level).max(tower.seed_depth());
    let ea = embed(tower, a, base)?;
    let eb = embed(tower, b, base)?;
    let z = z_sum(tower, base);
    let h = tower.h(base);
    let hits = eb.a.iter().filter(|&&g| g + z < h && ea.a.binary_search(&(g + z)).is_ok()).count() as i128;
    let b = base as i128;
    Ok(q(hits * (b - 1), tower.card_product(base) * b))
}

/// |⟨U_T^{Z_n} 1_A, 1_B⟩ − ⟨U_{S_z̄} 1_A, 1_B⟩| plus truncation error.
pub fn sz_weak_limit_residual(
    eng: &mut PairingEngine,
    tower: &Tower,
    a: &Cylinder,
    b: &Cylinder,
    n: usize,
) -> Result<Residual> {
    let z = z_sum(tower, n);
    if z >= tower.h(eng.depth()) {
        return Err(Error::InsufficientDepth { required: n, available: eng.depth() });
    }
    let k = tower.k();
    let field = k.character_field();
    let p = eng.counts(z, a, b)?.pairing(tower, &field, &Character::trivial(k));
    let exact = sz_pairing(tower, a, b)?;
    let vt = p.value.as_rational().expect("trivial character gives a rational pairing");
    let bound = (vt - exact).abs() + &p.error;
    Ok(Residual { bound, error: p.error })
}

/// Certified limits for two characters at a CaseI(a) step and the gap
/// between the two limit scalars.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparationReport {
    pub bound_chi: Q,
    pub bound_xi: Q,
    /// Lower bound on |l_χ(a) − l_ξ(a)|·μ(A∩B).
    pub gap: Q,
}

impl SeparationReport {
    pub fn certified(&self) -> bool {
        self.gap > &self.bound_chi + &self.bound_xi
    }
}

#[allow(clippy::too_many_arguments)]
pub fn separation_check(
    eng: &mut PairingEngine,
    tower: &Tower,
    field: &CycloField,
    chi: &Character,
    xi: &Character,
    a: &Cylinder,
    b: &Cylinder,
    n: usize,
) -> Result<SeparationReport> {
    let vd = tower.v().dual();
    if orbit(&vd, &chi.0)?.contains(&xi.0) {
        return Err(Error::SameOrbit);
    }
    let ScheduleTag::CaseI { a: g } = tag_at(tower, n)? else { return Err(Error::WrongTag(n)) };
    let rc = weak_limit_residual_i(eng, tower, field, chi, a, b, n)?;
    let rx = weak_limit_residual_i(eng, tower, field, xi, a, b, n)?;
    let diff = &l_value(field, chi, g, tower.v())? - &l_value(field, xi, g, tower.v())?;
    let gap = diff.modulus_lower() * overlap(tower, a, b)?;
    Ok(SeparationReport { bound_chi: rc.bound, bound_xi: rx.bound, gap })
}

/// Outcome of the block decomposition of the skew-product operator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionReport {
    pub blocks: usize,
    pub rungs_checked: usize,
    pub mismatches: usize,
    pub skew_error: Q,
    pub block_errors: Vec<Q>,
}

impl DecompositionReport {
    pub fn passed(&self) -> bool {
        self.mismatches == 0 && self.block_errors.iter().all(|e| *e == self.skew_error)
    }
}

/// Conjugates the level-N matrix of U_{T_{α,H}}^m by the fiberwise character
/// transform and compares each diagonal block with U_{T,χ}^m, χ ∈ (K/H)^.
///
/// The fiber part of the matrix at rung f is the permutation κ ↦ κ + α
/// of K/H; its conjugate is computed once per distinct α and must be
/// diagonal with entries χ(α).
pub fn skew_decomposition_check(tower: &Tower, h: &Subgroup, depth: usize, m: i128) -> Result<DecompositionReport> {
    let k = tower.k();
    let field = k.character_field();
    let cosets = CosetSpace::new(h);
    let chars = crate::group::annihilator(h);
    let nq = cosets.len();
    if chars.len() != nq {
        return Err(Error::Invalid("annihilator size does not match K/H".into()));
    }
    let hn = tower.h(depth);
    if m.abs() >= hn {
        return Err(Error::ShiftTooLarge { shift: m, depth });
    }
    let reps = cosets.reps().to_vec();
    // X[κ][χ] = χ(κ), X^{-1}[χ][κ] = conj(χ(κ)) / #(K/H)
    let x: Vec<Vec<Cyclo>> = reps.iter().map(|r| chars.iter().map(|c| c.value(&field, k, r)).collect()).collect();
    let w = cosets.weight();
    let mut block_of: HashMap<Element, Vec<Vec<Cyclo>>> = HashMap::new();
    let mut conj_block = |alpha: &Element| -> Vec<Vec<Cyclo>> {
        block_of
            .entry(alpha.clone())
            .or_insert_with(|| {
                let perm: Vec<usize> = reps.iter().map(|r| cosets.index(&k.add(r, alpha))).collect();
                (0..nq)
                    .map(|a| {
                        (0..nq)
                            .map(|b| {
                                let mut acc = field.zero();
                                for kk in 0..nq {
                                    acc = &acc + &(&x[kk][a].conj() * &x[perm[kk]][b]);
                                }
                                acc.scale(&w)
                            })
                            .collect()
                    })
                    .collect()
            })
            .clone()
    };
    let mut mismatches = 0;
    let mut checked = 0;
    let mut undefined = 0i128;
    for f in 0..hn {
        let g = f + m;
        if g < 0 || g >= hn {
            undefined += 1;
            continue;
        }
        let alpha = k.sub(&phi(tower, g, depth)?, &phi(tower, f, depth)?);
        let blk = conj_block(&alpha);
        checked += 1;
        for (a, chi) in chars.iter().enumerate() {
            for (b, entry) in blk[a].iter().enumerate() {
                let expected = if a == b { chi.value(&field, k, &alpha) } else { field.zero() };
                if *entry != expected {
                    mismatches += 1;
                }
            }
        }
    }
    let rung = q(1, tower.card_product(depth));
    let skew_error = &rung * qi(undefined);
    let block_errors = vec![skew_error.clone(); chars.len()];
    Ok(DecompositionReport { blocks: chars.len(), rungs_checked: checked, mismatches, skew_error, block_errors })
}

/// One CSV row of the weak-limit grid.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct WeakLimitRow {
    pub n: usize,
    pub tag: String,
    pub chi_id: String,
    pub a_id: String,
    pub b_id: String,
    pub residual: Q,
    pub error: Q,
}

pub fn weak_limit_csv(rows: &[WeakLimitRow]) -> String {
    let mut rows = rows.to_vec();
    rows.sort_by(|x, y| (x.n, &x.tag, &x.chi_id, &x.a_id, &x.b_id).cmp(&(y.n, &y.tag, &y.chi_id, &y.a_id, &y.b_id)));
    let mut s = String::from("n,tag,chi_id,A_id,B_id,residual_num,residual_den,error_num,error_den\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            r.tag,
            r.chi_id,
            r.a_id,
            r.b_id,
            r.residual.numer(),
            r.residual.denom(),
            r.error.numer(),
            r.error.denom()
        )
        .unwrap();
    }
    s
}

/// X_0 plus every singleton rung at levels 1 and 2, with printable ids.
pub fn cylinder_family(tower: &Tower) -> Vec<(String, Cylinder)> {
    let mut out = vec![("X0".to_string(), Cylinder::new(0, vec![0]))];
    for n in 1..=2.min(tower.depth()) {
        for f in 0..tower.h(n) {
            out.push((format!("L{n}f{f}"), Cylinder::new(n, vec![f])));
        }
    }
    out
}

/// Printable character id: its coordinates joined by '.'.
pub fn character_id(chi: &Character) -> String {
    let parts: Vec<String> = chi.0 .0.iter().map(|c| c.to_string()).collect();
    if parts.is_empty() {
        "triv".into()
    } else {
        parts.join(".")
    }
}

/// Max of `bound` over a list, as rendered text.
pub fn render_max(xs: &[Residual]) -> String {
    xs.iter().map(|r| r.bound.clone()).max().map(|b| render(&b)).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Automorphism, FinAbGroup};

    fn z3_tower(depth: usize) -> Tower {
        let k = FinAbGroup::cyclic(3);
        let v = Automorphism::scalar(&k, -1).unwrap();
        let sched = [ScheduleTag::CaseI { a: Element(vec![1]) }, ScheduleTag::CaseII { b: Element(vec![1]), k: 1 }];
        Tower::build(k, v, &sched, depth).unwrap()
    }

    /// Direct rung enumeration at depth N.
    fn brute(t: &Tower, chi: &Character, m: i128, a: &Cylinder, b: &Cylinder, n: usize) -> LevelPairing {
        let field = t.k().character_field();
        let ea = embed(t, a, n).unwrap();
        let eb = embed(t, b, n).unwrap();
        let mut value = field.zero();
        let mut err = 0;
        for &x in &eb.a {
            let y = x + m;
            if y < 0 || y >= t.h(n) {
                err += 1;
                continue;
            }
            if ea.a.binary_search(&y).is_ok() {
                let al = t.k().sub(&phi(t, y, n).unwrap(), &phi(t, x, n).unwrap());
                value = &value + &chi.value(&field, t.k(), &al);
            }
        }
        let rung = q(1, t.card_product(n));
        LevelPairing { value: value.scale(&rung), error: rung * qi(err) }
    }

    #[test]
    fn recursion_matches_enumeration() {
        let t = z3_tower(4);
        let chi = Character(Element(vec![1]));
        let a = Cylinder::new(1, vec![0, 2]);
        let b = Cylinder::new(2, vec![1, 5, 9]);
        for &m in &[0, 1, -1, 7, 24, -24, 384, 768, -2000] {
            for n in 2..=4 {
                if (m as i128).abs() < t.h(n) {
                    assert_eq!(pairing(&t, &chi, m, &a, &b, n).unwrap(), brute(&t, &chi, m, &a, &b, n), "m={m} n={n}");
                }
            }
        }
    }

    #[test]
    fn pairing_examples() {
        let t = z3_tower(4);
        let triv = Character::trivial(t.k());
        let a = Cylinder::new(2, vec![3]);
        let b = Cylinder::new(2, vec![4]);
        let p = pairing(&t, &triv, 0, &a, &a, 4).unwrap();
        assert_eq!(p.value.as_rational(), Some(q(1, 6)));
        assert_eq!(p.error, qi(0));
        assert!(pairing(&t, &triv, 0, &a, &b, 4).unwrap().value.is_zero());
        let back = pairing(&t, &triv, -1, &a, &b, 4).unwrap();
        assert!((back.value.as_rational().unwrap() - q(1, 6)).abs() <= back.error);
        assert!(pairing(&t, &triv, t.h(3), &a, &b, 3).is_err());
    }

    #[test]
    fn sz_residual_examples() {
        let t = z3_tower(5);
        let a = Cylinder::new(1, vec![0]);
        let mut eng = PairingEngine::new(&t, 1, 5).unwrap();
        let r3 = sz_weak_limit_residual(&mut eng, &t, &a, &a, 3).unwrap();
        let r4 = sz_weak_limit_residual(&mut eng, &t, &a, &a, 4).unwrap();
        assert!(r4.bound < r3.bound);
    }

    #[test]
    fn decomposition_blocks() {
        let t = z3_tower(3);
        for h in [Subgroup::whole(t.k()), Subgroup::trivial(t.k())] {
            for m in [0, 1, -1, 24] {
                let rep = skew_decomposition_check(&t, &h, 3, m).unwrap();
                assert!(rep.passed(), "{rep:?}");
            }
        }
        assert_eq!(skew_decomposition_check(&t, &Subgroup::trivial(t.k()), 3, 0).unwrap().blocks, 3);
    }

    #[test]
    fn separation_gap_value() {
        let k = FinAbGroup::cyclic(3);
        let f = k.character_field();
        let id = Automorphism::identity(&k);
        let chi = Character(Element(vec![1]));
        let d = &l_value(&f, &chi, &Element(vec![1]), &id).unwrap()
            - &l_value(&f, &Character::trivial(&k), &Element(vec![1]), &id).unwrap();
        assert_eq!(d.modulus_sq_bounds(), (qi(3), qi(3)));
    }
}
