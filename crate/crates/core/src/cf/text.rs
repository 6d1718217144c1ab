//! Line-oriented text form of a tower.
//!
//! ```text
//! cftower 1
//! K 2
//! v 1
//! seed 2
//! level 3
//! tag I a=1
//! h 192
//! z 48
//! r 8
//! C 0:24:8
//! alpha 0=0 24=1 ...
//! end
//! ```
//!
//! Sets are written as arithmetic-progression blocks `start:step:count`.
//! Element coordinates are comma separated; the trivial group has none.

use std::fmt::Write as _;

use super::tower::{CFLevel, ScheduleTag, Tower};
use crate::error::{Error, Result};
use crate::group::{Automorphism, Element, FinAbGroup};

const MAGIC: &str = "cftower 1";

fn coords<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Splits a sorted list into maximal arithmetic-progression blocks.
pub fn ap_blocks(xs: &[i128]) -> Vec<(i128, i128, usize)> {
    let mut out = vec![];
    let mut i = 0;
    while i < xs.len() {
        if i + 1 == xs.len() {
            out.push((xs[i], 1, 1));
            break;
        }
        let step = xs[i + 1] - xs[i];
        let mut j = i + 1;
        while j + 1 < xs.len() && xs[j + 1] - xs[j] == step {
            j += 1;
        }
        out.push((xs[i], step, j - i + 1));
        i = j + 1;
    }
    out
}

fn write_set(xs: &[i128]) -> String {
    ap_blocks(xs).iter().map(|(s, d, n)| format!("{s}:{d}:{n}")).collect::<Vec<_>>().join(" ")
}

fn write_tag(tag: &Option<ScheduleTag>) -> String {
    match tag {
        None => "seed".into(),
        Some(ScheduleTag::CaseI { a }) => format!("I a={}", coords(&a.0)),
        Some(ScheduleTag::CaseII { b, k }) => format!("II b={} k={k}", coords(&b.0)),
    }
}

pub fn to_text(tower: &Tower) -> String {
    let mut s = String::new();
    writeln!(s, "{MAGIC}").unwrap();
    writeln!(s, "K {}", coords(tower.k().factors())).unwrap();
    let rows: Vec<String> = tower.v().matrix().iter().map(|r| coords(r)).collect();
    writeln!(s, "v {}", rows.join(";")).unwrap();
    writeln!(s, "seed {}", tower.seed_depth()).unwrap();
    for l in tower.levels() {
        writeln!(s, "level {}", l.n).unwrap();
        writeln!(s, "tag {}", write_tag(&l.tag)).unwrap();
        writeln!(s, "h {}", l.h).unwrap();
        writeln!(s, "z {}", l.z).unwrap();
        writeln!(s, "r {}", l.r).unwrap();
        writeln!(s, "C {}", write_set(&l.c)).unwrap();
        if let Some(d) = &l.d {
            writeln!(s, "D {}", write_set(d)).unwrap();
        }
        let pairs: Vec<String> = l.c.iter().zip(&l.alpha).map(|(c, a)| format!("{c}={}", coords(&a.0))).collect();
        writeln!(s, "alpha {}", pairs.join(" ")).unwrap();
        writeln!(s, "end").unwrap();
    }
    s
}

struct Lines<'a> {
    it: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, msg: msg.into() }
    }

    fn next_line(&mut self) -> Option<&'a str> {
        loop {
            let (i, l) = self.it.next()?;
            self.line = i + 1;
            let l = l.trim();
            if !l.is_empty() && !l.starts_with('#') {
                return Some(l);
            }
        }
    }

    fn field(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next_line().ok_or_else(|| self.err(format!("expected `{key}`, found end of input")))?;
        match l.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest.trim()),
            None if l == key => Ok(""),
            _ => Err(self.err(format!("expected `{key}`, found `{l}`"))),
        }
    }

    fn int<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.trim().parse().map_err(|_| self.err(format!("bad integer `{s}`")))
    }

    fn list<T: std::str::FromStr>(&self, s: &str) -> Result<Vec<T>> {
        if s.trim().is_empty() {
            return Ok(vec![]);
        }
        s.split(',').map(|x| self.int(x)).collect()
    }

    fn set(&self, s: &str) -> Result<Vec<i128>> {
        let mut out = vec![];
        for block in s.split_whitespace() {
            let parts: Vec<&str> = block.split(':').collect();
            if parts.len() != 3 {
                return Err(self.err(format!("bad block `{block}`")));
            }
            let (start, step, count): (i128, i128, usize) =
                (self.int(parts[0])?, self.int(parts[1])?, self.int(parts[2])?);
            out.extend((0..count as i128).map(|j| start + step * j));
        }
        Ok(out)
    }
}

pub fn from_text(s: &str) -> Result<Tower> {
    let mut p = Lines { it: s.lines().enumerate().peekable(), line: 0 };
    if p.next_line() != Some(MAGIC) {
        return Err(p.err("missing `cftower 1` header"));
    }
    let factors: Vec<u64> = {
        let f = p.field("K")?;
        p.list(f)?
    };
    let k = if factors.is_empty() { FinAbGroup::trivial() } else { FinAbGroup::new(factors)? };
    let rows = p.field("v")?;
    let matrix: Vec<Vec<i64>> =
        if rows.is_empty() { vec![] } else { rows.split(';').map(|r| p.list(r)).collect::<Result<_>>()? };
    let v = Automorphism::new(&k, matrix)?;
    let seed_depth: usize = {
        let f = p.field("seed")?;
        p.int(f)?
    };
    let mut levels = vec![];
    while p.it.peek().is_some() {
        let Some(head) = p.next_line() else { break };
        let n: usize = match head.split_once(' ') {
            Some(("level", rest)) => p.int(rest)?,
            _ => return Err(p.err(format!("expected `level`, found `{head}`"))),
        };
        let tag_s = p.field("tag")?;
        let tag = parse_tag(&p, tag_s, &k)?;
        let f = p.field("h")?;
        let h = p.int(f)?;
        let f = p.field("z")?;
        let z = p.int(f)?;
        let f = p.field("r")?;
        let r = p.int(f)?;
        let f = p.field("C")?;
        let c = p.set(f)?;
        let mut next = p.next_line().ok_or_else(|| p.err("truncated level"))?;
        let mut d = None;
        if let Some(rest) = next.strip_prefix("D ") {
            d = Some(p.set(rest)?);
            next = p.next_line().ok_or_else(|| p.err("truncated level"))?;
        }
        let pairs = next.strip_prefix("alpha").ok_or_else(|| p.err("expected `alpha`"))?;
        let mut alpha = vec![k.zero(); c.len()];
        let mut seen = 0;
        for pair in pairs.split_whitespace() {
            let (x, val) = pair.split_once('=').ok_or_else(|| p.err(format!("bad pair `{pair}`")))?;
            let x: i128 = p.int(x)?;
            let i = c.binary_search(&x).map_err(|_| p.err(format!("alpha at {x} outside C")))?;
            let e = Element(p.list(val)?);
            k.check(&e).map_err(|e| p.err(e.to_string()))?;
            alpha[i] = e;
            seen += 1;
        }
        if seen != c.len() {
            return Err(p.err(format!("alpha has {seen} values for {} points", c.len())));
        }
        if p.next_line() != Some("end") {
            return Err(p.err("expected `end`"));
        }
        levels.push(CFLevel { n, c, h, z, alpha, r, d, tag });
    }
    Tower::from_parts(k, v, seed_depth, levels)
}

fn parse_tag(p: &Lines, s: &str, k: &FinAbGroup) -> Result<Option<ScheduleTag>> {
    let mut parts = s.split_whitespace();
    let kind = parts.next().unwrap_or("");
    let mut kv = std::collections::BTreeMap::new();
    for part in parts {
        let (a, b) = part.split_once('=').ok_or_else(|| p.err(format!("bad tag field `{part}`")))?;
        kv.insert(a, b);
    }
    let elem = |key: &str| -> Result<Element> {
        let e = Element(p.list(kv.get(key).copied().unwrap_or(""))?);
        k.check(&e).map_err(|e| p.err(e.to_string()))?;
        Ok(e)
    };
    match kind {
        "seed" => Ok(None),
        "I" => Ok(Some(ScheduleTag::CaseI { a: elem("a")? })),
        "II" => {
            let kk = p.int(kv.get("k").ok_or_else(|| p.err("missing k"))?)?;
            Ok(Some(ScheduleTag::CaseII { b: elem("b")?, k: kk }))
        }
        other => Err(p.err(format!("unknown tag `{other}`"))),
    }
}
