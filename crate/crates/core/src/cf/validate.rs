use std::fmt;

use num_traits::Signed;

use super::tower::{CFLevel, ScheduleTag, Tower};
use crate::exact::{q, qi, render, Q};
use crate::group::{period, Automorphism};

/// Outcome of one exact check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub offenders: Vec<i128>,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
        Check { name: name.into(), pass, detail: detail.into(), offenders: vec![] }
    }
}

/// A list of checks; passes when every entry passes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            write!(f, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail)?;
            if !c.offenders.is_empty() {
                let shown: Vec<String> = c.offenders.iter().take(8).map(|x| x.to_string()).collect();
                write!(f, " [at {}{}]", shown.join(","), if c.offenders.len() > 8 { ",..." } else { "" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn band(name: String, count: usize, total: usize, target: Q, width: Q) -> Check {
    let freq = q(count as i128, total as i128);
    let dev = (&freq - &target).abs();
    let pass = dev < width;
    Check::new(name, pass, format!("{count}/{total}, target {} ± {}", render(&target), render(&width)))
}

/// Checks the α conditions on a recipe level against h_{n-1} = `h_prev`.
///
/// The v-equivariance along z is checked exactly on C ∩ (C − z). The
/// increment sets are taken maximal and their frequencies compared with
/// the bands as exact rational inequalities.
pub fn validate_alpha(level: &CFLevel, h_prev: i128, v: &Automorphism) -> Report {
    let mut rep = Report::default();
    let tag = match &level.tag {
        Some(t) => t,
        None => return rep,
    };
    let k = v.group();
    let label = if tag.is_case_i() { ("A1", "A2") } else { ("A3", "A4") };
    let mut equiv = Check::new(format!("{} level {}", label.0, level.n), true, String::new());
    let mut tested = 0;
    for (i, &c) in level.c.iter().enumerate() {
        if let Some(y) = level.alpha_at(c + level.z) {
            tested += 1;
            if v.apply(&level.alpha[i]).ok().as_ref() != Some(y) {
                equiv.offenders.push(c);
            }
        }
    }
    equiv.pass = equiv.offenders.is_empty();
    equiv.detail = format!("{} violations on {} translated points", equiv.offenders.len(), tested);
    rep.checks.push(equiv);

    let g = tag.element();
    let m = period(v, g).expect("tag element lies in K") as usize;
    let n = level.step() as i128;
    let total = level.c.len();
    let (target, width) = match tag {
        ScheduleTag::CaseI { .. } => (q(1, m as i128), q(2, n * m as i128)),
        ScheduleTag::CaseII { k: kk, .. } => (q(1, (*kk as i128 + 1) * m as i128), q(2, n * m as i128)),
    };
    for i in 0..m {
        let inc = v.apply_power(i as u64, g).expect("tag element lies in K");
        let count = level
            .c
            .iter()
            .enumerate()
            .filter(|&(j, &c)| match level.alpha_at(c - 2 * h_prev) {
                Some(prev) => k.add(prev, &inc) == level.alpha[j],
                None => false,
            })
            .count();
        rep.checks.push(band(
            format!("{} level {} i={}", label.1, level.n, i),
            count,
            total,
            target.clone(),
            width.clone(),
        ));
    }
    if let ScheduleTag::CaseII { k: kk, .. } = tag {
        let kk = *kk as i128;
        let count = level
            .c
            .iter()
            .enumerate()
            .filter(|&(j, &c)| level.alpha_at(c - 2 * h_prev - 1) == Some(&level.alpha[j]))
            .count();
        rep.checks.push(band(format!("A5 level {}", level.n), count, total, q(kk, kk + 1), q(2, n)));
    }
    rep
}

/// Structural checks on every level: containment, disjointness, 0 ∈ C,
/// #C > 1, #C = r, the D-decomposition in Case II, and growth of μ(X_n).
pub fn validate_structure(tower: &Tower) -> Report {
    let mut rep = Report::default();
    let mut prev_mass = qi(1);
    for l in tower.levels() {
        let n = l.n;
        let hp = tower.h(n - 1);
        let top = l.c.last().copied().unwrap_or(0) + hp;
        rep.checks.push(Check::new(
            format!("containment level {n}"),
            top <= l.h,
            format!("max(F_{} + C_{n}) = {} vs h_{n} = {}", n - 1, top - 1, l.h),
        ));
        let mut gaps = Check::new(format!("disjointness level {n}"), true, String::new());
        let sorted = l.c.windows(2).all(|w| w[0] < w[1]);
        for w in l.c.windows(2) {
            if w[1] - w[0] < hp {
                gaps.offenders.push(w[1]);
            }
        }
        gaps.pass = sorted && gaps.offenders.is_empty();
        gaps.detail = format!("{} overlaps, sorted = {sorted}", gaps.offenders.len());
        rep.checks.push(gaps);
        rep.checks.push(Check::new(
            format!("shape level {n}"),
            l.c.first() == Some(&0) && l.c.len() > 1 && l.card() == l.r,
            format!("#C = {}, r = {}", l.c.len(), l.r),
        ));
        if let (Some(d), Some(ScheduleTag::CaseII { .. })) = (&l.d, &l.tag) {
            let s = (n - 1) as i128;
            let mut sum: Vec<i128> = (0..s * s).flat_map(|q| d.iter().map(move |x| x + q * l.z)).collect();
            sum.sort();
            sum.dedup();
            rep.checks.push(Check::new(format!("D + z level {n}"), sum == l.c, format!("#D = {}", d.len())));
        }
        let mass = q(l.h, tower.card_product(n));
        if n > tower.seed_depth() {
            let doubling = mass >= &prev_mass * qi(2);
            let floor = &mass >= &qi(1 << (n - tower.seed_depth()).min(120));
            rep.checks.push(Check::new(
                format!("growth level {n}"),
                doubling && floor,
                format!("μ(X_{n}) = {} vs μ(X_{}) = {}", render(&mass), n - 1, render(&prev_mass)),
            ));
        } else {
            rep.checks.push(Check::new(
                format!("growth level {n}"),
                mass >= prev_mass,
                format!("μ(X_{n}) = {}", render(&mass)),
            ));
        }
        prev_mass = mass;
    }
    rep
}

/// Structure and α checks on the whole tower.
pub fn validate_tower(tower: &Tower) -> Report {
    let mut rep = validate_structure(tower);
    for l in tower.levels() {
        rep.extend(validate_alpha(l, tower.h(l.n - 1), tower.v()));
    }
    rep
}
