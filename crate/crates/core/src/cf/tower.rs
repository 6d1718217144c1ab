use std::fmt;

use crate::error::{Error, Result};
use crate::group::{period, Automorphism, Element, FinAbGroup};

/// Which recipe built a level. Seed levels carry no tag.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ScheduleTag {
    CaseI { a: Element },
    CaseII { b: Element, k: u64 },
}

impl ScheduleTag {
    pub fn is_case_i(&self) -> bool {
        matches!(self, ScheduleTag::CaseI { .. })
    }

    /// The element driving the increments (a or b).
    pub fn element(&self) -> &Element {
        match self {
            ScheduleTag::CaseI { a } => a,
            ScheduleTag::CaseII { b, .. } => b,
        }
    }
}

impl fmt::Display for ScheduleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coords = |e: &Element| e.0.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
        match self {
            ScheduleTag::CaseI { a } => write!(f, "I({})", coords(a)),
            ScheduleTag::CaseII { b, k } => write!(f, "II({};{k})", coords(b)),
        }
    }
}

impl ScheduleTag {
    /// Parses `I(a)` or `II(b;k)` with comma-separated coordinates.
    pub fn parse(s: &str, k: &FinAbGroup) -> Result<ScheduleTag> {
        let bad = || Error::Invalid(format!("bad schedule tag `{s}`"));
        let elem = |body: &str| -> Result<Element> {
            let coords: Vec<u64> = if body.trim().is_empty() {
                vec![]
            } else {
                body.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
            };
            let e = Element(coords);
            k.check(&e)?;
            Ok(e)
        };
        let s = s.trim();
        if let Some(body) = s.strip_prefix("II(").and_then(|r| r.strip_suffix(')')) {
            let (b, kk) = body.split_once(';').ok_or_else(bad)?;
            let kk: u64 = kk.trim().parse().map_err(|_| bad())?;
            if kk == 0 {
                return Err(bad());
            }
            return Ok(ScheduleTag::CaseII { b: elem(b)?, k: kk });
        }
        if let Some(body) = s.strip_prefix("I(").and_then(|r| r.strip_suffix(')')) {
            return Ok(ScheduleTag::CaseI { a: elem(body)? });
        }
        Err(bad())
    }
}

/// One level of the tower: C_n, h_n, z_n and α_n.
///
/// `alpha[i]` is the value at `c[i]`. For recipe levels `r = #C` and the
/// recipe step is `n - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CFLevel {
    pub n: usize,
    pub c: Vec<i128>,
    pub h: i128,
    pub z: i128,
    pub alpha: Vec<Element>,
    pub r: i128,
    pub d: Option<Vec<i128>>,
    pub tag: Option<ScheduleTag>,
}

impl CFLevel {
    /// Index of `x` in C.
    pub fn position(&self, x: i128) -> Option<usize> {
        self.c.binary_search(&x).ok()
    }

    pub fn contains(&self, x: i128) -> bool {
        self.position(x).is_some()
    }

    pub fn alpha_at(&self, x: i128) -> Option<&Element> {
        self.position(x).map(|i| &self.alpha[i])
    }

    pub fn card(&self) -> i128 {
        self.c.len() as i128
    }

    /// The recipe step that produced this level.
    pub fn step(&self) -> usize {
        self.n - 1
    }

    /// {c ∈ C : c − shift ∈ C}.
    pub fn shifted_back(&self, shift: i128) -> Vec<i128> {
        self.c.iter().copied().filter(|&x| self.contains(x - shift)).collect()
    }
}

/// A finite stack of levels together with the group data (K, v).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tower {
    k: FinAbGroup,
    v: Automorphism,
    seed_depth: usize,
    levels: Vec<CFLevel>,
}

impl Tower {
    /// The default two-level seed: C_1 = {0,1}, h_1 = 3, C_2 = {0,3,6}, h_2 = 12.
    pub fn seed(k: FinAbGroup, v: Automorphism) -> Result<Tower> {
        let zero = k.zero();
        let l1 = CFLevel { n: 1, c: vec![0, 1], h: 3, z: 0, alpha: vec![zero.clone(); 2], r: 2, d: None, tag: None };
        let l2 = CFLevel { n: 2, c: vec![0, 3, 6], h: 12, z: 0, alpha: vec![zero; 3], r: 3, d: None, tag: None };
        Tower::with_seed(k, v, vec![l1, l2])
    }

    pub fn with_seed(k: FinAbGroup, v: Automorphism, seed: Vec<CFLevel>) -> Result<Tower> {
        if v.group() != &k {
            return Err(Error::Invalid("automorphism does not act on K".into()));
        }
        if seed.len() < 2 {
            return Err(Error::InsufficientDepth { required: 2, available: seed.len() });
        }
        for (i, l) in seed.iter().enumerate() {
            if l.n != i + 1 || l.c.len() != l.alpha.len() || l.tag.is_some() {
                return Err(Error::Invalid(format!("malformed seed level {}", i + 1)));
            }
        }
        let seed_depth = seed.len();
        Ok(Tower { k, v, seed_depth, levels: seed })
    }

    /// Assembles a tower from parsed levels; the first `seed_depth` are seed.
    pub fn from_parts(k: FinAbGroup, v: Automorphism, seed_depth: usize, levels: Vec<CFLevel>) -> Result<Tower> {
        if seed_depth > levels.len() {
            return Err(Error::InsufficientDepth { required: seed_depth, available: levels.len() });
        }
        for (i, l) in levels.iter().enumerate() {
            if l.n != i + 1 || l.c.len() != l.alpha.len() {
                return Err(Error::Invalid(format!("malformed level {}", i + 1)));
            }
            for x in &l.alpha {
                k.check(x)?;
            }
        }
        Ok(Tower { k, v, seed_depth, levels })
    }

    /// Seed, then `depth - seed_depth` recipe levels cycling through `schedule`.
    pub fn build(k: FinAbGroup, v: Automorphism, schedule: &[ScheduleTag], depth: usize) -> Result<Tower> {
        let mut t = Tower::seed(k, v)?;
        if schedule.is_empty() && depth > t.depth() {
            return Err(Error::Invalid("empty schedule".into()));
        }
        let mut i = 0;
        while t.depth() < depth {
            t.extend(&schedule[i % schedule.len()])?;
            i += 1;
        }
        Ok(t)
    }

    pub fn k(&self) -> &FinAbGroup {
        &self.k
    }

    pub fn v(&self) -> &Automorphism {
        &self.v
    }

    pub fn seed_depth(&self) -> usize {
        self.seed_depth
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[CFLevel] {
        &self.levels
    }

    /// Level n, 1 ≤ n ≤ depth.
    pub fn level(&self, n: usize) -> Result<&CFLevel> {
        if n == 0 || n > self.depth() {
            return Err(Error::BeyondDepth { level: n, depth: self.depth() });
        }
        Ok(&self.levels[n - 1])
    }

    /// h_n, with h_0 = 1.
    pub fn h(&self, n: usize) -> i128 {
        if n == 0 {
            1
        } else {
            self.levels[n - 1].h
        }
    }

    /// #C_1 ⋯ #C_n, the inverse measure of one rung at level n.
    pub fn card_product(&self, n: usize) -> i128 {
        self.levels[..n].iter().map(|l| l.card()).product()
    }

    /// Levels produced by the recipe with the given tag.
    pub fn levels_tagged(&self, tag: &ScheduleTag) -> Vec<usize> {
        self.levels.iter().filter(|l| l.tag.as_ref() == Some(tag)).map(|l| l.n).collect()
    }

    /// Builds level n+1 with [`extend_level`] and appends it.
    pub fn extend(&mut self, tag: &ScheduleTag) -> Result<&CFLevel> {
        let l = extend_level(self, tag)?;
        self.levels.push(l);
        Ok(self.levels.last().expect("just pushed"))
    }

    /// Replaces α on level n; used to construct violations in tests.
    pub fn set_alpha(&mut self, n: usize, x: i128, value: Element) -> Result<()> {
        let depth = self.depth();
        let l = self.levels.get_mut(n.wrapping_sub(1)).ok_or(Error::BeyondDepth { level: n, depth })?;
        let i = l.position(x).ok_or_else(|| Error::Invalid(format!("{x} is not in C_{n}")))?;
        l.alpha[i] = value;
        Ok(())
    }

    /// Overrides h_n; used to construct violations in tests.
    pub fn set_height(&mut self, n: usize, h: i128) -> Result<()> {
        let depth = self.depth();
        let l = self.levels.get_mut(n.wrapping_sub(1)).ok_or(Error::BeyondDepth { level: n, depth })?;
        l.h = h;
        Ok(())
    }
}

fn mul(a: i128, b: i128) -> Result<i128> {
    a.checked_mul(b).ok_or_else(|| Error::Invalid("tower height overflows i128".into()))
}

/// Builds level n+1 from the top level n of the tower.
pub fn extend_level(tower: &Tower, tag: &ScheduleTag) -> Result<CFLevel> {
    let n = tower.depth();
    if n < 2 {
        return Err(Error::InsufficientDepth { required: 2, available: n });
    }
    let k = tower.k();
    let v = tower.v();
    k.check(tag.element())?;
    let m = period(v, tag.element())? as i128;
    let h = tower.h(n);
    let ni = n as i128;
    let n3 = mul(mul(ni, ni)?, ni)?;
    let (c, z, r, d, h_next) = match tag {
        ScheduleTag::CaseI { .. } => {
            let z = mul(mul(2 * m, ni)?, h)?;
            let r = mul(n3, m)?;
            let c: Vec<i128> = (0..r).map(|j| 2 * h * j).collect();
            let h_next = mul(mul(2, r)?, h)?;
            (c, z, r, None, h_next)
        }
        ScheduleTag::CaseII { k: kk, .. } => {
            if *kk == 0 {
                return Err(Error::Invalid("k must be positive".into()));
            }
            let kk = *kk as i128;
            let z = mul(mul(m, ni)?, mul(2 * h, kk + 1)? + kk)?;
            let r = mul(mul(n3, kk + 1)?, m)?;
            let nm = ni * m;
            let mut d: Vec<i128> = (0..nm).map(|j| 2 * h * j).collect();
            d.extend((1..=nm * kk).map(|j| (2 * h + 1) * j + 2 * h * (nm - 1)));
            let mut c = Vec::with_capacity(r as usize);
            for q in 0..ni * ni {
                c.extend(d.iter().map(|x| x + q * z));
            }
            assert_eq!(kk * r % (kk + 1), 0);
            let h_next = mul(mul(2, r)?, h)? + kk * r / (kk + 1);
            (c, z, r, Some(d), h_next)
        }
    };
    debug_assert_eq!(c.len() as i128, r);
    let mut level = CFLevel { n: n + 1, c, h: h_next, z, alpha: vec![], r, d, tag: Some(tag.clone()) };
    level.alpha = make_alpha(&level, h, k, v)?;
    Ok(level)
}

/// α on a freshly sized level (C, z, D fixed).
///
/// Positions are split as c = d_t + q·z. On the block of 2h_n-spaced
/// entries the value advances by v^{t-1 mod m}(a); on the (2h_n+1)-spaced
/// entries of Case II it is held constant; the block q is the image of
/// block 0 under v^q. If the pattern fails validation, rotations of the
/// starting orbit point are tried.
pub fn make_alpha(level: &CFLevel, h_prev: i128, k: &FinAbGroup, v: &Automorphism) -> Result<Vec<Element>> {
    let tag = level.tag.as_ref().ok_or(Error::WrongTag(level.n))?;
    let g = tag.element();
    let m = period(v, g)? as usize;
    let step = level.step();
    let block = match tag {
        ScheduleTag::CaseI { .. } => step * m,
        ScheduleTag::CaseII { k: kk, .. } => step * m * (1 + *kk as usize),
    };
    let ramp = step * m;
    for shift in 0..m {
        let mut beta = vec![k.zero()];
        for t in 1..block {
            let prev = beta[t - 1].clone();
            let next = if t < ramp { k.add(&prev, &v.apply_power(((t - 1 + shift) % m) as u64, g)?) } else { prev };
            beta.push(next);
        }
        let mut alpha = Vec::with_capacity(level.c.len());
        for i in 0..level.c.len() {
            let (q, t) = (i / block, i % block);
            alpha.push(v.apply_power(q as u64, &beta[t])?);
        }
        let mut candidate = level.clone();
        candidate.alpha = alpha;
        if super::validate::validate_alpha(&candidate, h_prev, v).passed() {
            return Ok(candidate.alpha);
        }
    }
    Err(Error::GeneratorExhausted(level.n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2_id() -> (FinAbGroup, Automorphism) {
        let k = FinAbGroup::cyclic(2);
        let v = Automorphism::identity(&k);
        (k, v)
    }

    #[test]
    fn tag_text() {
        let k = FinAbGroup::new(vec![2, 4]).unwrap();
        for t in [ScheduleTag::CaseI { a: Element(vec![1, 3]) }, ScheduleTag::CaseII { b: Element(vec![0, 2]), k: 2 }] {
            assert_eq!(ScheduleTag::parse(&t.to_string(), &k).unwrap(), t);
        }
        assert_eq!(ScheduleTag::CaseII { b: Element(vec![1, 0]), k: 1 }.to_string(), "II(1,0;1)");
        assert!(ScheduleTag::parse("II(1,0;0)", &k).is_err());
        assert!(ScheduleTag::parse("I(5,0)", &k).is_err());
        assert!(ScheduleTag::parse("III(1)", &k).is_err());
    }

    #[test]
    fn case_i_example() {
        let (k, v) = z2_id();
        let t = Tower::seed(k, v).unwrap();
        let l = extend_level(&t, &ScheduleTag::CaseI { a: Element(vec![1]) }).unwrap();
        assert_eq!((l.z, l.r, l.h), (48, 8, 192));
        assert_eq!(l.c, (0..8).map(|j| 24 * j).collect::<Vec<_>>());
        let a: Vec<u64> = l.alpha.iter().map(|e| e.0[0]).collect();
        assert_eq!(a, vec![0, 1, 0, 1, 0, 1, 0, 1]);
    }

    #[test]
    fn case_ii_example() {
        let (k, v) = z2_id();
        let t = Tower::seed(k, v).unwrap();
        let l = extend_level(&t, &ScheduleTag::CaseII { b: Element(vec![0]), k: 1 }).unwrap();
        assert_eq!((l.z, l.r, l.h), (98, 16, 392));
        assert_eq!(l.d.as_deref(), Some(&[0, 24, 49, 74][..]));
        assert_eq!(l.c.len(), 16);
        assert_eq!(*l.c.last().unwrap(), 74 + 3 * 98);
    }

    #[test]
    fn zero_increment_gives_zero_map() {
        let (k, v) = z2_id();
        let t = Tower::seed(k.clone(), v).unwrap();
        let l = extend_level(&t, &ScheduleTag::CaseI { a: k.zero() }).unwrap();
        assert!(l.alpha.iter().all(|x| *x == k.zero()));
    }

    #[test]
    fn cardinality_is_r() {
        let k = FinAbGroup::cyclic(3);
        let v = Automorphism::scalar(&k, -1).unwrap();
        let sched = vec![ScheduleTag::CaseI { a: Element(vec![1]) }, ScheduleTag::CaseII { b: Element(vec![1]), k: 2 }];
        let t = Tower::build(k, v, &sched, 5).unwrap();
        for l in &t.levels()[2..] {
            assert_eq!(l.card(), l.r);
        }
        assert_eq!(t.levels_tagged(&sched[1]), vec![4]);
    }
}
