//! Experiment configuration, tower building from a target set E, the
//! on-disk artifacts and the report drivers behind the command line.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cf::{self, validate_tower, Check, Cylinder, Report, ScheduleTag, Tower};
use crate::cocycle::{check_coboundary_condition, check_cocycle_identity, z_sum};
use crate::error::{Error, Result};
use crate::exact::{render, Q};
use crate::group::{
    annihilator, annihilator_subgroup, catalog_search, character_orbits, separation_witness, Automorphism, Catalog,
    Character, Element, FinAbGroup, GroupTriple, Subgroup, TripleRecord,
};
use crate::koopman::{
    character_id, cylinder_family, skew_decomposition_check, sz_weak_limit_residual, weak_limit_csv,
    weak_limit_residual_i, weak_limit_residual_ii, PairingEngine, WeakLimitRow,
};
use crate::recurrence::{
    ergodicity_sweep, multiple_recurrence_search, primes_subsets, skew_witness, weight_audit, GeometricWeight,
};
use crate::spectra::{check_invariant_multiplicity, symmetric_power_check, GenericDiagonal, Mode, PermSubgroup};

pub const TOWER_FILE: &str = "tower.cft";
pub const SKEW_FILE: &str = "skew.toml";
pub const WEAKLIMITS_FILE: &str = "weaklimits.csv";
pub const RECUR_FILE: &str = "recur.txt";
pub const CATALOG_FILE: &str = "catalog.toml";

/// Overrides the configured output directory when set.
pub const OUT_ENV: &str = "CFMULT_OUT";

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), msg: e.to_string() }
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn default_group() -> String {
    "auto".into()
}

fn default_bound() -> u64 {
    40
}

fn default_schedule() -> String {
    "auto".into()
}

fn default_out() -> String {
    "out".into()
}

/// Keys: `E`, `m`, `group` (`auto` or a triple file), `bound`, `depth`,
/// `schedule` (`auto` or tags such as `I(1) II(1;1)`), `seed`, `out`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "E")]
    pub e: Vec<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default = "default_group")]
    pub group: String,
    #[serde(default = "default_bound")]
    pub bound: u64,
    pub depth: usize,
    #[serde(default = "default_schedule")]
    pub schedule: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: String,
}

impl ExperimentConfig {
    pub fn from_text(s: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            toml::from_str(s).map_err(|e| Error::Parse { line: 0, msg: e.message().to_string() })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parse { line: 0, msg });
        if self.e.is_empty() || self.e.contains(&0) {
            return bad("E must be a nonempty set of positive integers".into());
        }
        if self.depth < 3 {
            return bad(format!("depth {} leaves no recipe level", self.depth));
        }
        if let Some(m) = self.m {
            if m == 0 || !self.targets().contains(&(m + 1)) {
                return bad(format!("m = {m} needs m > 0 and m + 1 in E"));
            }
        } else if !self.is_rank_one() && self.resolved_m().is_none() {
            return bad("E has no element above 1".into());
        }
        Ok(())
    }

    pub fn targets(&self) -> BTreeSet<usize> {
        self.e.iter().copied().collect()
    }

    pub fn is_rank_one(&self) -> bool {
        self.targets() == BTreeSet::from([1])
    }

    /// The configured m, or the least m > 0 with m + 1 ∈ E.
    pub fn resolved_m(&self) -> Option<usize> {
        self.m.or_else(|| self.targets().into_iter().find(|&x| x > 1).map(|x| x - 1))
    }

    /// Output directory: the environment override, else `out` relative to `base`.
    pub fn out_dir(&self, base: &Path) -> PathBuf {
        match std::env::var_os(OUT_ENV) {
            Some(dir) => PathBuf::from(dir),
            None => base.join(&self.out),
        }
    }
}

/// Reads a config; relative paths inside it resolve against its directory.
pub fn load_config(path: &Path) -> Result<(ExperimentConfig, PathBuf)> {
    let cfg = ExperimentConfig::from_text(&read_file(path)?)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

/// The triple (G, H, v) named by the config.
pub fn resolve_triple(cfg: &ExperimentConfig, base: &Path) -> Result<GroupTriple> {
    if cfg.group == "auto" {
        catalog_search(&cfg.targets(), cfg.bound)
    } else {
        GroupTriple::from_text(&read_file(&base.join(&cfg.group))?)
    }
}

/// (K, v_K, H_K) = (Ĝ, v̂, H^⊥).
pub fn dualize(triple: &GroupTriple) -> (FinAbGroup, Automorphism, Subgroup) {
    (triple.group.clone(), triple.aut.dual(), annihilator_subgroup(&triple.subgroup))
}

/// Case I tags on the basis of K and on separation witnesses between
/// v̂-orbits of (K/H)^; Case II tags II(b;k) for k = 1..m with b the first
/// basis element. The two lists are interleaved, the shorter one cycled.
pub fn schedule_policy(k: &FinAbGroup, v: &Automorphism, h: &Subgroup, m: usize) -> Result<Vec<ScheduleTag>> {
    let mut firsts: Vec<Element> = (0..k.rank()).map(|i| k.basis(i)).collect();
    let field = k.character_field();
    let orbits = character_orbits(&annihilator(h), v);
    for (i, oi) in orbits.iter().enumerate() {
        for oj in &orbits[i + 1..] {
            let a = separation_witness(&field, &oi[0], &oj[0], v)?;
            if !firsts.contains(&a) {
                firsts.push(a);
            }
        }
    }
    if firsts.is_empty() {
        firsts.push(k.zero());
    }
    let b = firsts[0].clone();
    let seconds: Vec<ScheduleTag> =
        (1..=m.max(1) as u64).map(|kk| ScheduleTag::CaseII { b: b.clone(), k: kk }).collect();
    let len = firsts.len().max(seconds.len());
    let mut out = vec![];
    for i in 0..len {
        out.push(ScheduleTag::CaseI { a: firsts[i % firsts.len()].clone() });
        out.push(seconds[i % seconds.len()].clone());
    }
    Ok(out)
}

pub fn parse_schedule(s: &str, k: &FinAbGroup) -> Result<Vec<ScheduleTag>> {
    let tags: Vec<ScheduleTag> = s
        .split_whitespace()
        .map(|t| ScheduleTag::parse(t, k))
        .collect::<Result<_>>()
        .map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
    if tags.is_empty() {
        return Err(Error::Parse { line: 0, msg: "empty schedule".into() });
    }
    Ok(tags)
}

/// Skew-product data accompanying a tower.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkewData {
    pub e: Vec<usize>,
    pub m: usize,
    pub h: Subgroup,
    pub source: Option<GroupTriple>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
struct SkewRecord {
    #[serde(rename = "E")]
    e: Vec<usize>,
    m: usize,
    h_gens: Vec<Vec<u64>>,
    source: Option<TripleRecord>,
}

/// A built tower, with skew data unless E = {1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Experiment {
    pub tower: Tower,
    pub skew: Option<SkewData>,
}

/// Builds the tower for a config and runs the validators; a failing
/// validator aborts with its report.
pub fn build(cfg: &ExperimentConfig, base: &Path) -> Result<Experiment> {
    let (k, v, skew) = if cfg.is_rank_one() {
        let k = FinAbGroup::trivial();
        let v = Automorphism::identity(&k);
        (k, v, None)
    } else {
        let triple = resolve_triple(cfg, base)?;
        let (k, v, h) = dualize(&triple);
        let m = cfg.resolved_m().expect("checked with the config");
        (k, v, Some(SkewData { e: cfg.e.clone(), m, h, source: Some(triple) }))
    };
    let schedule = if cfg.schedule != "auto" {
        parse_schedule(&cfg.schedule, &k)?
    } else if let Some(s) = &skew {
        schedule_policy(&k, &v, &s.h, s.m)?
    } else {
        vec![ScheduleTag::CaseI { a: k.zero() }, ScheduleTag::CaseII { b: k.zero(), k: 1 }]
    };
    let tower = Tower::build(k, v, &schedule, cfg.depth)?;
    let report = validate_tower(&tower);
    if !report.passed() {
        return Err(Error::HypothesisFail(format!("validator failure\n{report}")));
    }
    Ok(Experiment { tower, skew })
}

impl Experiment {
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_file(&dir.join(TOWER_FILE), &cf::to_text(&self.tower))?;
        let skew_path = dir.join(SKEW_FILE);
        match &self.skew {
            Some(s) => {
                let rec = SkewRecord {
                    e: s.e.clone(),
                    m: s.m,
                    h_gens: s.h.generators().iter().map(|g| g.0.clone()).collect(),
                    source: s.source.as_ref().map(|t| t.record()),
                };
                write_file(&skew_path, &toml::to_string(&rec).expect("skew record serializes"))
            }
            None if skew_path.exists() => fs::remove_file(&skew_path).map_err(|e| io_err(&skew_path, e)),
            None => Ok(()),
        }
    }

    pub fn read(dir: &Path) -> Result<Experiment> {
        let tower = cf::from_text(&read_file(&dir.join(TOWER_FILE))?)?;
        let skew_path = dir.join(SKEW_FILE);
        let skew = if skew_path.exists() {
            let rec: SkewRecord = toml::from_str(&read_file(&skew_path)?)
                .map_err(|e| Error::Parse { line: 0, msg: e.message().to_string() })?;
            let gens = rec.h_gens.into_iter().map(Element).collect();
            let h = Subgroup::generated_by(tower.k(), gens)?;
            let source = rec.source.as_ref().map(GroupTriple::from_record).transpose()?;
            Some(SkewData { e: rec.e, m: rec.m, h, source })
        } else {
            None
        };
        Ok(Experiment { tower, skew })
    }

    /// Characters of K/H, or the trivial character alone without skew data.
    pub fn characters(&self) -> Vec<Character> {
        match &self.skew {
            Some(s) => annihilator(&s.h),
            None => vec![Character::trivial(self.tower.k())],
        }
    }
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), pass, detail: detail.into(), offenders: vec![] }
}

/// Structure and α validators, sampled cocycle identity, the coboundary
/// terms and the skew-product block decomposition.
pub fn verify(exp: &Experiment, samples: usize, seed: u64) -> Result<Report> {
    let t = &exp.tower;
    let mut rep = validate_tower(t);
    let level = t.depth().min(4);
    let ci = check_cocycle_identity(t, level, samples, seed)?;
    rep.checks.push(check(
        format!("cocycle identity level {level}"),
        ci.passed(),
        format!("{} failures in {} sampled triples", ci.failures, ci.tested),
    ));
    let cob = check_coboundary_condition(t)?;
    let last = cob.terms.last().map(|x| render(&x.partial_sum)).unwrap_or_default();
    rep.checks.push(check(
        "coboundary terms",
        cob.passed(),
        format!("terms 1/n² at recipe levels, partial sum {last}"),
    ));
    if let Some(s) = &exp.skew {
        let depth = t.depth().min(3);
        let d = skew_decomposition_check(t, &s.h, depth, 1)?;
        rep.checks.push(check(
            format!("skew decomposition depth {depth}"),
            d.passed(),
            format!("{} blocks, {} mismatches on {} rungs", d.blocks, d.mismatches, d.rungs_checked),
        ));
    }
    Ok(rep)
}

/// Max certified residual per scheduled subsequence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WeakLimitSummary {
    pub series: BTreeMap<String, Vec<(usize, Q)>>,
}

impl WeakLimitSummary {
    pub fn from_rows(rows: &[WeakLimitRow]) -> WeakLimitSummary {
        let mut worst: BTreeMap<(String, usize), Q> = BTreeMap::new();
        for r in rows {
            let e = worst.entry((r.tag.clone(), r.n)).or_insert_with(|| r.residual.clone());
            if r.residual > *e {
                *e = r.residual.clone();
            }
        }
        let mut series: BTreeMap<String, Vec<(usize, Q)>> = BTreeMap::new();
        for ((tag, n), v) in worst {
            series.entry(tag).or_default().push((n, v));
        }
        WeakLimitSummary { series }
    }

    pub fn strictly_decreasing(&self, tag: &str) -> bool {
        self.series.get(tag).is_some_and(|s| s.windows(2).all(|w| w[1].1 < w[0].1))
    }

    pub fn deepest(&self, tag: &str) -> Option<&Q> {
        self.series.get(tag).and_then(|s| s.last()).map(|x| &x.1)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (tag, pts) in &self.series {
            let vals: Vec<String> = pts.iter().map(|(n, v)| format!("{n}:{}", render(v))).collect();
            let mark = if self.strictly_decreasing(tag) { "decreasing" } else { "NOT decreasing" };
            writeln!(s, "{tag} {mark} {}", vals.join(" ")).unwrap();
        }
        s
    }
}

/// Residual rows over the cylinder family, the characters of K/H and every
/// recipe step, plus S_z̄ rows tagged `Sz`.
pub fn weak_limits(exp: &Experiment) -> Result<Vec<WeakLimitRow>> {
    let t = &exp.tower;
    let depth = t.depth();
    let family = cylinder_family(t);
    let base = 2.min(depth);
    let mut eng = PairingEngine::new(t, base, depth)?;
    let field = t.k().character_field();
    let chars = exp.characters();
    let mut rows = vec![];
    for l in t.levels().iter().filter(|l| l.tag.is_some()) {
        let n = l.step();
        let tag = l.tag.as_ref().expect("filtered");
        for chi in &chars {
            for (ida, a) in &family {
                for (idb, b) in &family {
                    let r = if tag.is_case_i() {
                        weak_limit_residual_i(&mut eng, t, &field, chi, a, b, n)?
                    } else {
                        weak_limit_residual_ii(&mut eng, t, &field, chi, a, b, n)?
                    };
                    rows.push(row(n, tag.to_string(), character_id(chi), ida, idb, r.bound, r.error));
                }
            }
        }
    }
    for n in t.seed_depth()..depth {
        if z_sum(t, n) >= t.h(depth) {
            break;
        }
        for (ida, a) in &family {
            for (idb, b) in &family {
                let r = sz_weak_limit_residual(&mut eng, t, a, b, n)?;
                rows.push(row(n, "Sz".into(), "triv".into(), ida, idb, r.bound, r.error));
            }
        }
    }
    Ok(rows)
}

fn row(n: usize, tag: String, chi_id: String, a: &str, b: &str, residual: Q, error: Q) -> WeakLimitRow {
    WeakLimitRow { n, tag, chi_id, a_id: a.into(), b_id: b.into(), residual, error }
}

pub fn weak_limits_csv(rows: &[WeakLimitRow]) -> String {
    weak_limit_csv(rows)
}

/// Catalog entries for each target set, with a printable summary.
pub fn groups_report(targets: &[BTreeSet<usize>], bound: u64) -> Result<(Catalog, String)> {
    let mut cat = Catalog::new();
    let mut text = String::new();
    for e in targets {
        let triple = catalog_search(e, bound)?;
        cat.push(e, &triple);
        let entry = cat.entries.last().expect("just pushed");
        writeln!(
            text,
            "E={:?} G=Z{:?} H=<{:?}> v={:?} L={:?} {}",
            e,
            triple.group.factors(),
            entry.subgroup_gens,
            entry.aut,
            triple.multiplicity_set(),
            if entry.verified { "verified" } else { "UNVERIFIED" }
        )
        .unwrap();
    }
    Ok((cat, text))
}

/// Multiplicity table of V^{⊗k} on Γ-invariants for every Γ ≤ S_k, in
/// exact and floating mode, then the S_{k−1} row with the exact identity.
pub fn spectra_table(k: usize, d: usize, seed: u64) -> Result<(String, bool)> {
    let v = GenericDiagonal::random(d, k, seed)?;
    let mut s = String::from("k,d,gamma_order,gamma,dim,expected,free_exact,free_float,repeated_exact,stable,pass\n");
    let mut ok = true;
    let fmt = |xs: &BTreeSet<usize>| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    for g in PermSubgroup::all(k) {
        let ex = check_invariant_multiplicity(&v, k, &g, Mode::Exact)?;
        let fl = check_invariant_multiplicity(&v, k, &g, Mode::Floating { seed })?;
        let pass = ex.passed() && fl.passed() && ex.free == fl.free;
        ok &= pass;
        let name: Vec<String> =
            g.elements().iter().map(|p| p.iter().map(|x| x.to_string()).collect::<String>()).collect();
        writeln!(
            s,
            "{k},{d},{},{},{},{},{},{},{},{},{}",
            g.order(),
            name.join("|"),
            ex.dim,
            ex.expected,
            fmt(&ex.free),
            fmt(&fl.free),
            fmt(&ex.diagonal),
            fl.stable,
            if pass { "PASS" } else { "FAIL" }
        )
        .unwrap();
    }
    let c = symmetric_power_check(&v, k, Mode::Exact)?;
    ok &= c.passed();
    writeln!(
        s,
        "# symmetric power {} tensor V: multiplicities {}, expected {}, identity mismatches {} over {} entries: {}",
        k - 1,
        fmt(&c.invariant.free),
        k,
        c.identity.mismatches,
        c.identity.dim * c.identity.dim,
        if c.passed() { "PASS" } else { "FAIL" }
    )
    .unwrap();
    Ok((s, ok))
}

/// Density certificates, ergodicity witnesses at level 2, the weight audit,
/// skew witnesses per Case I element and a multiple-recurrence search.
pub fn recurrence_report(exp: &Experiment) -> Result<(String, bool)> {
    let t = &exp.tower;
    let mut s = String::new();
    let mut ok = true;
    let mut line = |s: &mut String, pass: bool, text: String| {
        ok &= pass;
        writeln!(s, "{} {text}", if pass { "PASS" } else { "FAIL" }).unwrap();
    };
    for l in t.levels() {
        if let Some(ScheduleTag::CaseII { k: 1, .. }) = &l.tag {
            let st = primes_subsets(t, l.n)?;
            line(
                &mut s,
                st.certified(),
                format!(
                    "primes level {}: C' {} C'' {}",
                    l.n,
                    render(&st.density_prime()),
                    render(&st.density_double())
                ),
            );
        }
    }
    let n = 2.min(t.depth());
    for p in 1..=2 {
        let sw = ergodicity_sweep(t, p, n, None)?;
        let min = sw.min_ratio().map(render).unwrap_or_default();
        line(
            &mut s,
            sw.passed(),
            format!("sweep p={p} n={n}: {} witnesses, {} missing, min ratio {min}", sw.rows.len(), sw.missing.len()),
        );
    }
    let w = GeometricWeight::standard();
    for (p, gap) in [(1, 3), (2, 2)] {
        let a = weight_audit(t, p, n, gap, &w)?;
        line(
            &mut s,
            a.passed(),
            format!(
                "weight audit p={p} gap<={gap}: sum {} tested {} violations {} missing {}",
                render(&a.weight_total),
                a.tested,
                a.violations.len(),
                a.missing.len()
            ),
        );
    }
    let mut firsts: Vec<Element> = vec![];
    for l in t.levels() {
        if let Some(ScheduleTag::CaseI { a }) = &l.tag {
            if !firsts.contains(a) {
                firsts.push(a.clone());
            }
        }
    }
    for a in &firsts {
        for p in 1..=2 {
            let rungs: Vec<i128> = (0..p as i128).map(|i| (5 * i) % t.h(n)).collect();
            match skew_witness(t, p, n, &rungs, a, 64) {
                Ok(wt) => line(
                    &mut s,
                    wt.passed(),
                    format!(
                        "skew a={a} p={p} level {}: ratio {} bound {} cocycle {} on {} samples",
                        wt.level,
                        render(&wt.ratio),
                        render(&wt.bound),
                        if wt.cocycle_ok { "exact" } else { "WRONG" },
                        wt.sampled
                    ),
                ),
                Err(Error::NotFound) => line(&mut s, false, format!("skew a={a} p={p}: no I(a) level in range")),
                Err(e) => return Err(e),
            }
        }
    }
    let a = Cylinder::new(1, vec![0]);
    let mut prev: Option<i128> = None;
    for depth in 3..=t.depth().min(5) {
        let k_max = (t.h(3) * 2).min((t.h(depth) - 1) / 2);
        match multiple_recurrence_search(t, &a, 2, k_max, depth) {
            Ok(hit) => {
                let monotone = prev.is_none_or(|k| hit.k <= k);
                prev = Some(hit.k);
                line(
                    &mut s,
                    monotone,
                    format!("recurrence A=[0]_1 p=2 depth {depth}: k={} measure>={}", hit.k, render(&hit.measure)),
                );
            }
            Err(Error::NotFound) => line(&mut s, prev.is_none(), format!("recurrence A=[0]_1 p=2 depth {depth}: none")),
            Err(e) => return Err(e),
        }
    }
    Ok((s, ok))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(e: &[usize], depth: usize) -> ExperimentConfig {
        ExperimentConfig::from_text(&format!("E = {e:?}\ndepth = {depth}\n")).unwrap()
    }

    #[test]
    fn config_rules() {
        let c = cfg(&[1, 4], 4);
        assert_eq!(c.resolved_m(), Some(3));
        assert_eq!(c.group, "auto");
        assert!(cfg(&[1], 4).is_rank_one());
        assert!(ExperimentConfig::from_text("E = [2]\ndepth = 4\nm = 2\n").is_err());
        assert!(ExperimentConfig::from_text("E = []\ndepth = 4\n").is_err());
        assert!(ExperimentConfig::from_text("E = [2]\ndepth = 4\ncolour = 1\n").is_err());
        assert_eq!(ExperimentConfig::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn build_roundtrip() {
        let dir = std::env::temp_dir().join(format!("cfmult-pipeline-{}", std::process::id()));
        let exp = build(&cfg(&[2], 4), Path::new(".")).unwrap();
        assert!(exp.skew.is_some());
        exp.write(&dir).unwrap();
        assert_eq!(Experiment::read(&dir).unwrap(), exp);
        assert!(verify(&exp, 100, 1).unwrap().passed());
        let rank_one = build(&cfg(&[1], 4), Path::new(".")).unwrap();
        assert!(rank_one.skew.is_none());
        assert_eq!(rank_one.tower.k().order(), 1);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn explicit_schedule() {
        let k = FinAbGroup::cyclic(3);
        let s = parse_schedule("I(1) II(1;1)", &k).unwrap();
        assert_eq!(s.len(), 2);
        assert!(parse_schedule("", &k).is_err());
    }
}
