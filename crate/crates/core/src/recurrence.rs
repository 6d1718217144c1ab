//! Finite combinatorial inputs to ergodicity of products and of the skew
//! product, and truncated multiple-recurrence searches.

use std::collections::{BTreeSet, HashMap};

use crate::cf::{embed, locate, measure, CFLevel, CFPoint, Cylinder, ScheduleTag, Tower};
use crate::cocycle::cocycle_eval;
use crate::error::{Error, Result};
use crate::exact::{q, qi, Q};
use crate::group::{period, Element};

/// [A_1]_n × ⋯ × [A_p]_n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductCylinder {
    factors: Vec<Cylinder>,
}

impl ProductCylinder {
    pub fn new(factors: Vec<Cylinder>) -> Result<ProductCylinder> {
        let level = factors.first().map(|c| c.level);
        if factors.is_empty() || factors.iter().any(|c| Some(c.level) != level) {
            return Err(Error::Invalid("product factors must share one level".into()));
        }
        Ok(ProductCylinder { factors })
    }

    /// The product of single rungs.
    pub fn rungs(level: usize, f: &[i128]) -> Result<ProductCylinder> {
        ProductCylinder::new(f.iter().map(|&x| Cylinder::new(level, vec![x])).collect())
    }

    pub fn arity(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Cylinder] {
        &self.factors
    }

    pub fn measure(&self, tower: &Tower) -> Result<Q> {
        self.factors.iter().try_fold(qi(1), |acc, c| Ok(acc * measure(tower, c)?))
    }
}

/// C′ = {c ∈ C : c + 2h ∈ C} and C″ = {c ∈ C : c + 2h + 1 ∈ C} on a level
/// tagged II(b;1), with h the height one level down.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetTriple {
    pub level: usize,
    pub c_prime: Vec<i128>,
    pub c_double: Vec<i128>,
    pub card: i128,
}

impl SubsetTriple {
    pub fn density_prime(&self) -> Q {
        q(self.c_prime.len() as i128, self.card)
    }

    pub fn density_double(&self) -> Q {
        q(self.c_double.len() as i128, self.card)
    }

    pub fn certified(&self) -> bool {
        self.density_prime() >= q(1, 3) && self.density_double() >= q(1, 3)
    }
}

/// {c ∈ C : c + s ∈ C}.
fn forward(level: &CFLevel, s: i128) -> Vec<i128> {
    level.shifted_back(-s)
}

fn is_ii_1(tag: &Option<ScheduleTag>) -> Option<&Element> {
    match tag {
        Some(ScheduleTag::CaseII { b, k: 1 }) => Some(b),
        _ => None,
    }
}

pub fn primes_subsets(tower: &Tower, level: usize) -> Result<SubsetTriple> {
    let l = tower.level(level)?;
    if is_ii_1(&l.tag).is_none() {
        return Err(Error::WrongTag(level));
    }
    let h = tower.h(level - 1);
    Ok(SubsetTriple { level, c_prime: forward(l, 2 * h), c_double: forward(l, 2 * h + 1), card: l.card() })
}

/// One level used by a witness: every coordinate moves by 2h·j; the
/// coordinates flagged `decreasing` move by a further j and so drop j rungs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftStep {
    pub level: usize,
    pub j: i128,
    pub decreasing: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErgodicityWitness {
    pub n: usize,
    pub f: Vec<i128>,
    pub f_prime: Vec<i128>,
    pub top: usize,
    pub shift: i128,
    pub steps: Vec<ShiftStep>,
    /// μ^p(A) / μ^p([f_1]_n × ⋯ × [f_p]_n).
    pub ratio: Q,
    /// The rung offsets were absorbed into the time shift rather than
    /// spread one per level.
    pub compressed: bool,
}

#[derive(Clone, Copy, Debug)]
struct Window {
    level: usize,
    max_j: i128,
}

fn windows(tower: &Tower, n: usize) -> Vec<Window> {
    tower
        .levels()
        .iter()
        .filter(|l| l.n > n)
        .filter_map(|l| {
            let b = is_ii_1(&l.tag)?;
            let m = period(tower.v(), b).ok()? as i128;
            let max_j = l.step() as i128 * m - 1;
            (max_j >= 1).then_some(Window { level: l.n, max_j })
        })
        .collect()
}

/// Cached factor sets {c ∈ C_L : c + 2h_{L−1}·j + o ∈ C_L}.
#[derive(Default)]
pub struct ShiftSets {
    cache: HashMap<(usize, i128, bool), Vec<i128>>,
}

impl ShiftSets {
    pub fn new() -> ShiftSets {
        ShiftSets::default()
    }

    pub fn get(&mut self, tower: &Tower, level: usize, j: i128, decreasing: bool) -> Result<&[i128]> {
        let l = tower.level(level)?;
        let h = tower.h(level - 1);
        Ok(self.cache.entry((level, j, decreasing)).or_insert_with(|| {
            let s = 2 * h * j + if decreasing { j } else { 0 };
            forward(l, s)
        }))
    }
}

fn plan(targets: &[i128], windows: &[Window]) -> Option<Vec<ShiftStep>> {
    let thresholds: BTreeSet<i128> = targets.iter().copied().filter(|&t| t > 0).collect();
    let mut steps = vec![];
    let mut w = windows.iter();
    let mut below = 0;
    for u in thresholds {
        let decreasing: Vec<bool> = targets.iter().map(|&t| t >= u).collect();
        let mut left = u - below;
        while left > 0 {
            let win = w.next()?;
            let j = left.min(win.max_j);
            steps.push(ShiftStep { level: win.level, j, decreasing: decreasing.clone() });
            left -= j;
        }
        below = u;
    }
    Some(steps)
}

fn check_rungs(tower: &Tower, n: usize, f: &[i128]) -> Result<()> {
    let h = tower.h(n);
    match f.iter().find(|&&x| x < 0 || x >= h) {
        Some(x) => Err(Error::Invalid(format!("rung {x} outside [0, {h})"))),
        None => Ok(()),
    }
}

/// A ⊂ [f_1]_n × ⋯ × [f_p]_n and s with (T^{×p})^s A ⊂ [f′_1]_n × ⋯ × [f′_p]_n.
///
/// Each level tagged II(b;1) above n offers windows j < n·m_b. The rung
/// offsets f_i − f′_i (plus a common e) are paid off level by level; first
/// with e ≥ 0 as small as possible, then with e = −min(f_i − f′_i).
pub fn ergodicity_witness(tower: &Tower, n: usize, f: &[i128], f_prime: &[i128]) -> Result<ErgodicityWitness> {
    ergodicity_witness_with(tower, n, f, f_prime, &mut ShiftSets::new())
}

pub fn ergodicity_witness_with(
    tower: &Tower,
    n: usize,
    f: &[i128],
    f_prime: &[i128],
    sets: &mut ShiftSets,
) -> Result<ErgodicityWitness> {
    if f.len() != f_prime.len() || f.is_empty() {
        return Err(Error::DimensionMismatch { expected: f.len(), got: f_prime.len() });
    }
    tower.level(n.max(1))?;
    check_rungs(tower, n, f)?;
    check_rungs(tower, n, f_prime)?;
    let delta: Vec<i128> = f.iter().zip(f_prime).map(|(a, b)| a - b).collect();
    let min = *delta.iter().min().expect("nonempty");
    let ws = windows(tower, n);
    for (compressed, e) in [(false, (-min).max(0)), (true, -min)] {
        if compressed && e == (-min).max(0) {
            break;
        }
        let targets: Vec<i128> = delta.iter().map(|d| d + e).collect();
        let Some(steps) = plan(&targets, &ws) else { continue };
        let mut ratio = qi(1);
        let mut shift = e;
        for s in &steps {
            let card = tower.level(s.level)?.card();
            for &dec in &s.decreasing {
                ratio *= q(sets.get(tower, s.level, s.j, dec)?.len() as i128, card);
            }
            shift += 2 * tower.h(s.level - 1) * s.j;
        }
        if ratio == qi(0) {
            continue;
        }
        let top = steps.last().map_or(n, |s| s.level);
        return Ok(ErgodicityWitness {
            n,
            f: f.to_vec(),
            f_prime: f_prime.to_vec(),
            top,
            shift,
            steps,
            ratio,
            compressed,
        });
    }
    Err(Error::InsufficientDepth { required: tower.depth() + 1, available: tower.depth() })
}

impl ErgodicityWitness {
    /// Per coordinate, the sets A_L for L = n+1..=top.
    pub fn factors(&self, tower: &Tower, sets: &mut ShiftSets) -> Result<Vec<Vec<Vec<i128>>>> {
        let mut out = vec![];
        for i in 0..self.f.len() {
            let mut per = vec![];
            for l in self.n + 1..=self.top {
                match self.steps.iter().find(|s| s.level == l) {
                    Some(s) => per.push(sets.get(tower, l, s.j, s.decreasing[i])?.to_vec()),
                    None => per.push(tower.level(l)?.c.clone()),
                }
            }
            out.push(per);
        }
        Ok(out)
    }

    /// Rung bookkeeping: f_i + e − Σ o_i = f′_i for the e implied by the shift,
    /// and every factor set is nonempty and lands in C_L after its move.
    pub fn verify(&self, tower: &Tower, sets: &mut ShiftSets) -> Result<bool> {
        let mut e = self.shift;
        for s in &self.steps {
            e -= 2 * tower.h(s.level - 1) * s.j;
        }
        for i in 0..self.f.len() {
            let drop: i128 = self.steps.iter().filter(|s| s.decreasing[i]).map(|s| s.j).sum();
            if self.f[i] + e - drop != self.f_prime[i] {
                return Ok(false);
            }
        }
        for s in &self.steps {
            let l = tower.level(s.level)?;
            let h = tower.h(s.level - 1);
            for &dec in &s.decreasing {
                let move_by = 2 * h * s.j + if dec { s.j } else { 0 };
                let set = sets.get(tower, s.level, s.j, dec)?;
                if set.is_empty() || set.iter().any(|&c| !l.contains(c + move_by)) {
                    return Ok(false);
                }
            }
        }
        Ok(self.ratio > qi(0))
    }

    /// Enumerates every level-`top` rung of each factor cylinder, moves it by
    /// the shift and reads its level-n rung by peeling C-coordinates off the
    /// top. Returns None when more than `cap` rungs would be visited.
    pub fn verify_brute(&self, tower: &Tower, cap: usize) -> Result<Option<bool>> {
        let mut sets = ShiftSets::new();
        let factors = self.factors(tower, &mut sets)?;
        let size: usize = factors.iter().map(|per| per.iter().map(|s| s.len()).product::<usize>()).sum();
        if size > cap {
            return Ok(None);
        }
        let h_top = tower.h(self.top);
        let mut ratio = qi(1);
        for (i, per) in factors.iter().enumerate() {
            let mut rungs = vec![self.f[i]];
            for set in per {
                rungs = rungs.iter().flat_map(|&x| set.iter().map(move |&c| x + c)).collect();
            }
            for &x in &rungs {
                if rung_at(tower, x, self.top, self.n) != Some(self.f[i]) {
                    return Ok(Some(false));
                }
                let y = x + self.shift;
                if y < 0 || y >= h_top || rung_at(tower, y, self.top, self.n) != Some(self.f_prime[i]) {
                    return Ok(Some(false));
                }
            }
            ratio *= q(rungs.len() as i128, tower.card_product(self.top) / tower.card_product(self.n));
        }
        Ok(Some(ratio == self.ratio))
    }
}

/// The level-n rung under the level-`top` rung y.
fn rung_at(tower: &Tower, mut y: i128, top: usize, n: usize) -> Option<i128> {
    for m in (n + 1..=top).rev() {
        y -= locate(tower, m, y)?;
    }
    (0..tower.h(n)).contains(&y).then_some(y)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepRow {
    pub f: Vec<i128>,
    pub f_prime: Vec<i128>,
    pub levels_used: usize,
    pub shift: i128,
    pub ratio: Q,
    pub verified: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepReport {
    pub n: usize,
    pub p: usize,
    pub rows: Vec<SweepRow>,
    /// Pairs for which no witness fits in the tower.
    pub missing: Vec<(Vec<i128>, Vec<i128>)>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        !self.rows.is_empty() && self.missing.is_empty() && self.rows.iter().all(|r| r.verified)
    }

    pub fn min_ratio(&self) -> Option<&Q> {
        self.rows.iter().map(|r| &r.ratio).min()
    }
}

fn tuples(h: i128, p: usize) -> Vec<Vec<i128>> {
    let mut out = vec![vec![]];
    for _ in 0..p {
        out = out.into_iter().flat_map(|t| (0..h).map(move |x| [t.clone(), vec![x]].concat())).collect();
    }
    out
}

/// Witnesses for every pair of rung tuples at level n with all |f_i − f′_i|
/// at most `max_gap` (every pair when None).
pub fn ergodicity_sweep(tower: &Tower, p: usize, n: usize, max_gap: Option<i128>) -> Result<SweepReport> {
    let mut sets = ShiftSets::new();
    let mut rows = vec![];
    let mut missing = vec![];
    let all = tuples(tower.h(n), p);
    for f in &all {
        for fp in &all {
            if max_gap.is_some_and(|g| f.iter().zip(fp).any(|(a, b)| (a - b).abs() > g)) {
                continue;
            }
            let w = match ergodicity_witness_with(tower, n, f, fp, &mut sets) {
                Ok(w) => w,
                Err(Error::InsufficientDepth { .. }) => {
                    missing.push((f.clone(), fp.clone()));
                    continue;
                }
                Err(e) => return Err(e),
            };
            let verified = w.verify(tower, &mut sets)?;
            rows.push(SweepRow {
                f: f.clone(),
                f_prime: fp.clone(),
                levels_used: w.steps.len(),
                shift: w.shift,
                ratio: w.ratio,
                verified,
            });
        }
    }
    Ok(SweepReport { n, p, rows, missing })
}

/// δ(g) = scale · base^{−Σ|g_i|}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeometricWeight {
    pub scale: Q,
    pub base: i128,
}

impl GeometricWeight {
    /// (1/8)·4^{−Σ|g_i|}
    pub fn standard() -> GeometricWeight {
        GeometricWeight { scale: q(1, 8), base: 4 }
    }

    pub fn at(&self, g: &[i128]) -> Q {
        let e: i128 = g.iter().map(|x| x.abs()).sum();
        &self.scale / qi(self.base.pow(e as u32))
    }

    /// Σ over all of ℤ^p: scale·((base+1)/(base−1))^p.
    pub fn total(&self, p: usize) -> Q {
        (0..p).fold(self.scale.clone(), |acc, _| acc * q(self.base + 1, self.base - 1))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightAuditReport {
    pub p: usize,
    pub n: usize,
    pub weight_total: Q,
    pub tested: usize,
    /// Pairs whose witness ratio does not exceed δ(f − f′).
    pub violations: Vec<(Vec<i128>, Vec<i128>)>,
    /// Pairs for which no witness fits in the tower.
    pub missing: Vec<(Vec<i128>, Vec<i128>)>,
}

impl WeightAuditReport {
    pub fn passed(&self) -> bool {
        self.weight_total < q(1, 2) && self.violations.is_empty() && self.missing.is_empty()
    }
}

pub fn weight_audit(
    tower: &Tower,
    p: usize,
    n: usize,
    max_gap: i128,
    weight: &GeometricWeight,
) -> Result<WeightAuditReport> {
    let weight_total = weight.total(p);
    if weight_total >= q(1, 2) {
        return Err(Error::HypothesisFail(format!("Σδ = {weight_total} is not below 1/2")));
    }
    let mut sets = ShiftSets::new();
    let mut rep = WeightAuditReport { p, n, weight_total, tested: 0, violations: vec![], missing: vec![] };
    let all = tuples(tower.h(n), p);
    for f in &all {
        for fp in &all {
            let g: Vec<i128> = f.iter().zip(fp).map(|(a, b)| a - b).collect();
            if g.iter().any(|x| x.abs() > max_gap) {
                continue;
            }
            rep.tested += 1;
            match ergodicity_witness_with(tower, n, f, fp, &mut sets) {
                Ok(w) => {
                    if !(w.verify(tower, &mut sets)? && w.ratio > weight.at(&g)) {
                        rep.violations.push((f.clone(), fp.clone()));
                    }
                }
                Err(Error::InsufficientDepth { .. }) => rep.missing.push((f.clone(), fp.clone())),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkewWitness {
    pub n: usize,
    pub level: usize,
    pub rungs: Vec<i128>,
    pub a: Element,
    pub shift: i128,
    pub ratio: Q,
    pub bound: Q,
    pub contained: bool,
    pub sampled: usize,
    pub cocycle_ok: bool,
}

impl SkewWitness {
    pub fn passed(&self) -> bool {
        self.contained && self.cocycle_ok && self.ratio > self.bound
    }
}

/// A_i = f_i + C_{n+1} + ⋯ + C_{L−1} + C_{L,0} at the first level L > n
/// tagged I(a) whose C_{L,0} = {c : c − 2h_{L−1} ∈ C_L, α_L(c) = α_L(c − 2h_{L−1}) + a}
/// beats the ratio bound. The shift is −2h_{L−1}.
pub fn skew_witness(
    tower: &Tower,
    p: usize,
    n: usize,
    rungs: &[i128],
    a: &Element,
    samples: usize,
) -> Result<SkewWitness> {
    if rungs.len() != p || p == 0 {
        return Err(Error::DimensionMismatch { expected: p, got: rungs.len() });
    }
    check_rungs(tower, n, rungs)?;
    let k = tower.k();
    k.check(a)?;
    let m = period(tower.v(), a)? as i128;
    let bound = (0..p).fold(qi(1), |acc, _| acc * q(1, 2 * m));
    let tag = ScheduleTag::CaseI { a: a.clone() };
    for l in tower.levels().iter().filter(|l| l.n > n && l.tag.as_ref() == Some(&tag)) {
        let h = tower.h(l.n - 1);
        let c0: Vec<i128> =
            l.c.iter()
                .zip(&l.alpha)
                .filter(|&(&c, al)| l.alpha_at(c - 2 * h).is_some_and(|prev| &k.add(prev, a) == al))
                .map(|(&c, _)| c)
                .collect();
        let one = q(c0.len() as i128, l.card());
        let ratio = (0..p).fold(qi(1), |acc, _| acc * &one);
        if ratio <= bound {
            continue;
        }
        let contained = c0.iter().all(|&c| l.contains(c - 2 * h));
        let mut sampled = 0;
        let mut cocycle_ok = true;
        for s in 0..samples {
            let mut x = rungs[s % p];
            for m_lvl in n + 1..l.n {
                let cs = &tower.level(m_lvl)?.c;
                x += cs[(s * 7919 + m_lvl * 31) % cs.len()];
            }
            x += c0[s % c0.len()];
            let got = cocycle_eval(tower, &CFPoint::rung(l.n, x), &CFPoint::rung(l.n, x - 2 * h))?;
            sampled += 1;
            cocycle_ok &= &got == a && rung_at(tower, x - 2 * h, l.n, n) == Some(rungs[s % p]);
        }
        return Ok(SkewWitness {
            n,
            level: l.n,
            rungs: rungs.to_vec(),
            a: a.clone(),
            shift: -2 * h,
            ratio,
            bound,
            contained,
            sampled,
            cocycle_ok,
        });
    }
    Err(Error::NotFound)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecurrenceHit {
    pub k: i128,
    pub depth: usize,
    /// Level-N rungs x with x, x − k, …, x − pk all in A.
    pub count: usize,
    /// Lower bound for μ(A ∩ T^k A ∩ ⋯ ∩ T^{pk} A).
    pub measure: Q,
}

/// Least k ≤ k_max for which the (p+1)-fold intersection has positive
/// measure, judged by whole rungs of the level-N tower.
pub fn multiple_recurrence_search(
    tower: &Tower,
    a: &Cylinder,
    p: usize,
    k_max: i128,
    depth: usize,
) -> Result<RecurrenceHit> {
    if k_max * p as i128 >= tower.h(depth.min(tower.depth())) {
        return Err(Error::Invalid(format!("k_max·p must stay below h_{depth}")));
    }
    let r = embed(tower, a, depth)?.a;
    let set: std::collections::HashSet<i128> = r.iter().copied().collect();
    for k in 1..=k_max {
        let count = r.iter().filter(|&&x| (1..=p as i128).all(|i| set.contains(&(x - i * k)))).count();
        if count > 0 {
            return Ok(RecurrenceHit { k, depth, count, measure: q(count as i128, tower.card_product(depth)) });
        }
    }
    Err(Error::NotFound)
}
