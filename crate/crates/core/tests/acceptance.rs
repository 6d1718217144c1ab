//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use cfmult_core::cf::{defect_fraction, validate_alpha, validate_structure, Cylinder, ScheduleTag, Tower};
use cfmult_core::cocycle::{check_coboundary_condition, check_cocycle_identity, check_sz_commutation};
use cfmult_core::exact::{q, render, Q};
use cfmult_core::group::{
    catalog_search, character_orbits, l_value, naive_multiplicity_set, separation_witness, Automorphism, Character,
    Element, FinAbGroup, Subgroup,
};
use cfmult_core::koopman::{cylinder_family, separation_check, skew_decomposition_check, PairingEngine};
use cfmult_core::pipeline::{build, weak_limits, ExperimentConfig, WeakLimitSummary};
use cfmult_core::recurrence::{ergodicity_sweep, multiple_recurrence_search, primes_subsets, skew_witness};
use cfmult_core::spectra::{
    check_invariant_multiplicity, factorial, symmetric_power_check, GenericDiagonal, Mode, PermSubgroup,
};

type Outcome = Result<String, String>;

fn desk(depth: usize) -> Tower {
    let k = FinAbGroup::cyclic(3);
    let v = Automorphism::scalar(&k, -1).unwrap();
    let sched = [ScheduleTag::CaseI { a: Element(vec![1]) }, ScheduleTag::CaseII { b: Element(vec![1]), k: 1 }];
    Tower::build(k, v, &sched, depth).unwrap()
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn within(t: Instant, limit: Duration) -> Outcome {
    ensure(t.elapsed() <= limit, format!("{:.2?} of {:?}", t.elapsed(), limit))
}

fn group_realization() -> Outcome {
    let t0 = Instant::now();
    let targets: [&[usize]; 6] = [&[1], &[2], &[4], &[1, 2], &[1, 4], &[2, 4]];
    let mut found = vec![];
    for e in targets {
        let e: BTreeSet<usize> = e.iter().copied().collect();
        let tr = catalog_search(&e, 40).map_err(|err| format!("E={e:?}: {err}"))?;
        let naive = naive_multiplicity_set(&tr.group, &tr.subgroup, &tr.aut);
        if naive != e {
            return Err(format!("E={e:?}: recount gives {naive:?}"));
        }
        found.push(format!("{e:?}->Z{:?}", tr.group.factors()));
    }
    let time = within(t0, Duration::from_secs(60))?;
    Ok(format!("{} ({time})", found.join(" ")))
}

fn invariant_table() -> Outcome {
    let t0 = Instant::now();
    let v = GenericDiagonal::random(5, 3, 11).map_err(|e| e.to_string())?;
    let mut rows = 0;
    for k in [2, 3] {
        for g in PermSubgroup::all(k) {
            let expected = factorial(k) / g.order();
            for mode in [Mode::Exact, Mode::Floating { seed: 5 }] {
                let r = check_invariant_multiplicity(&v, k, &g, mode).map_err(|e| e.to_string())?;
                if !r.passed() || r.free != BTreeSet::from([expected]) || r.exact != matches!(mode, Mode::Exact) {
                    return Err(format!("k={k} #Γ={}: {r:?}", g.order()));
                }
                rows += 1;
            }
        }
    }
    let time = within(t0, Duration::from_secs(30))?;
    Ok(format!("{rows} (k, Γ, mode) cases constant k!/#Γ ({time})"))
}

fn symmetric_power() -> Outcome {
    let v = GenericDiagonal::random(5, 3, 11).map_err(|e| e.to_string())?;
    let mut parts = vec![];
    for k in [2, 3] {
        let c = symmetric_power_check(&v, k, Mode::Exact).map_err(|e| e.to_string())?;
        ensure(
            c.passed() && c.invariant.free == BTreeSet::from([k]) && c.identity.mismatches == 0,
            format!("k={k}: multiplicities {:?}, identity mismatches {}", c.invariant.free, c.identity.mismatches),
        )?;
        parts.push(format!("k={k}: {{{k}}}, {}x{} identity exact", c.identity.dim, c.identity.dim));
    }
    Ok(parts.join("; "))
}

fn structural() -> Outcome {
    let t0 = Instant::now();
    let cfg = ExperimentConfig::from_text("E = [1, 2]\ndepth = 10\n").unwrap();
    let t = build(&cfg, Path::new(".")).map_err(|e| e.to_string())?.tower;
    let recipe: Vec<usize> = t.levels().iter().filter(|l| l.tag.is_some()).map(|l| l.n).collect();
    ensure(recipe.len() >= 8, format!("{} recipe levels", recipe.len()))?;
    let s = validate_structure(&t);
    if let Some(c) = s.failures().next() {
        return Err(format!("{}: {}", c.name, c.detail));
    }
    for l in t.levels() {
        ensure(l.card() == l.r, format!("#C_{} = {} vs r = {}", l.n, l.card(), l.r))?;
        if l.tag.is_some() {
            let n = l.step() as i128;
            let d = defect_fraction(&t, l.n).map_err(|e| e.to_string())?;
            ensure(d == q(2, n * n), format!("defect at level {} is {}", l.n, render(&d)))?;
        }
        let a = validate_alpha(l, t.h(l.n - 1), t.v());
        let bad: Vec<String> = a.failures().map(|c| format!("{}: {}", c.name, c.detail)).collect();
        ensure(bad.is_empty(), bad.join("; "))?;
    }
    let time = within(t0, Duration::from_secs(120))?;
    Ok(format!("levels {recipe:?}, {} structural checks ({time})", s.checks.len()))
}

fn cocycle_suite() -> Outcome {
    let t = desk(6);
    let ci = check_cocycle_identity(&t, 5, 10_000, 1).map_err(|e| e.to_string())?;
    ensure(ci.passed(), format!("cocycle identity {} failures", ci.failures))?;
    let sz = check_sz_commutation(&t, 5, 10_000, 2).map_err(|e| e.to_string())?;
    ensure(sz.passed() && sz.tested == 10_000, format!("commutation {} failures of {}", sz.failures, sz.tested))?;
    let cob = check_coboundary_condition(&t).map_err(|e| e.to_string())?;
    let recipe = cob.terms.iter().filter(|x| x.expected.is_some()).count();
    ensure(cob.passed() && recipe >= 4, format!("coboundary terms {:?}", cob.terms))?;
    Ok(format!("{} + {} samples exact, {recipe} terms 1/n²", ci.tested, sz.tested))
}

fn weak_limit_curves() -> Outcome {
    let t0 = Instant::now();
    let cfg = ExperimentConfig::from_text("E = [2]\ndepth = 8\n").unwrap();
    let exp = build(&cfg, Path::new(".")).map_err(|e| e.to_string())?;
    let rows = weak_limits(&exp).map_err(|e| e.to_string())?;
    let s = WeakLimitSummary::from_rows(&rows);
    let threshold = q(1, 10);
    let mut parts = vec![];
    for tag in ["I(1)", "II(1;1)", "Sz"] {
        let pts = s.series.get(tag).ok_or(format!("no {tag} rows"))?;
        let deepest = s.deepest(tag).unwrap();
        ensure(pts.len() >= 3 && s.strictly_decreasing(tag) && *deepest < threshold, format!("{tag}: {}", s.render()))?;
        parts.push(format!("{tag} {} pts -> {:.5}", pts.len(), cfmult_core::exact::to_f64(deepest)));
    }
    let time = within(t0, Duration::from_secs(600))?;
    Ok(format!("{} ({time})", parts.join(", ")))
}

fn separation() -> Outcome {
    let t = desk(8);
    let k = t.k();
    let field = k.character_field();
    let orbits = character_orbits(&Character::all(k), t.v());
    ensure(orbits.len() >= 2, format!("{} orbits", orbits.len()))?;
    let n = t.levels_tagged(&ScheduleTag::CaseI { a: Element(vec![1]) }).last().map(|&l| l - 1).unwrap();
    let family = cylinder_family(&t);
    let mut eng = PairingEngine::new(&t, 2, 8).map_err(|e| e.to_string())?;
    let mut parts = vec![];
    for (i, oi) in orbits.iter().enumerate() {
        for oj in &orbits[i + 1..] {
            let (chi, xi) = (&oi[0], &oj[0]);
            let a = separation_witness(&field, chi, xi, t.v()).map_err(|e| e.to_string())?;
            let diff = &l_value(&field, chi, &a, t.v()).unwrap() - &l_value(&field, xi, &a, t.v()).unwrap();
            ensure(diff.modulus_lower() > Q::from_integer(0.into()), "zero l-value gap".into())?;
            let mut best: Option<Q> = None;
            for (_, cyl) in &family {
                let r = separation_check(&mut eng, &t, &field, chi, xi, cyl, cyl, n).map_err(|e| e.to_string())?;
                if r.certified() {
                    let margin = &r.gap - &r.bound_chi - &r.bound_xi;
                    if best.as_ref().is_none_or(|b| margin > *b) {
                        best = Some(margin);
                    }
                }
            }
            let best = best.ok_or(format!("no certified gap at step {n}"))?;
            parts.push(format!("a={a} margin {:.4}", cfmult_core::exact::to_f64(&best)));
        }
    }
    Ok(format!("step {n}: {}", parts.join(", ")))
}

fn decomposition() -> Outcome {
    let t = desk(4);
    let k = t.k();
    let subs = [Subgroup::generated_by(k, vec![Element(vec![1])]).unwrap(), Subgroup::trivial(k)];
    let mut n = 0;
    for h in &subs {
        for m in [0, 1, -1, 2 * t.h(3)] {
            let r = skew_decomposition_check(&t, h, 4, m).map_err(|e| e.to_string())?;
            ensure(r.passed(), format!("#H={} m={m}: {r:?}", h.order()))?;
            n += 1;
        }
    }
    Ok(format!("{n} (H, m) cases block-exact"))
}

fn ergodicity() -> Outcome {
    let t = desk(8);
    let mut levels = vec![];
    for l in t.levels() {
        if let Some(ScheduleTag::CaseII { k: 1, .. }) = &l.tag {
            let s = primes_subsets(&t, l.n).map_err(|e| e.to_string())?;
            ensure(s.certified(), format!("level {}: {} {}", l.n, s.density_prime(), s.density_double()))?;
            levels.push(l.n);
        }
    }
    let mut sweeps = vec![];
    for p in 1..=2 {
        let sw = ergodicity_sweep(&t, p, 2, None).map_err(|e| e.to_string())?;
        ensure(sw.passed(), format!("sweep p={p}: {} rows, {} missing", sw.rows.len(), sw.missing.len()))?;
        sweeps.push(sw.rows.len());
    }
    let a = Element(vec![1]);
    for p in 1..=2 {
        let rungs: Vec<i128> = (0..p as i128).map(|i| 3 * i + 1).collect();
        let w = skew_witness(&t, p, 2, &rungs, &a, 200).map_err(|e| e.to_string())?;
        let bound = (0..p).fold(q(1, 1), |acc, _| acc * q(1, 4));
        ensure(w.passed() && w.ratio > bound && w.cocycle_ok, format!("skew p={p}: {w:?}"))?;
    }
    Ok(format!("primes at levels {levels:?}, sweeps {sweeps:?} witnesses, skew p=1,2 certified"))
}

fn recurrence() -> Outcome {
    let t = desk(6);
    let a = Cylinder::new(1, vec![0]);
    let k_max = 2 * t.h(3);
    let h4 = multiple_recurrence_search(&t, &a, 2, k_max, 4).map_err(|e| e.to_string())?;
    ensure(h4.measure > Q::from_integer(0.into()), "zero measure".into())?;
    let mut prev = h4.clone();
    for depth in [5] {
        let d = multiple_recurrence_search(&t, &a, 2, k_max, depth).map_err(|e| e.to_string())?;
        ensure(d.k <= prev.k && d.measure >= prev.measure, format!("depth {depth}: {d:?} after {prev:?}"))?;
        prev = d;
    }
    Ok(format!("k={} at depth 4 with measure >= {}, stable at depth 5", h4.k, render(&h4.measure)))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("group realization", group_realization),
        ("tensor multiplicities", invariant_table),
        ("symmetric tensor multiplicities", symmetric_power),
        ("structural suite", structural),
        ("cocycle suite", cocycle_suite),
        ("weak limits", weak_limit_curves),
        ("separation", separation),
        ("koopman decomposition", decomposition),
        ("ergodicity inputs", ergodicity),
        ("multiple recurrence", recurrence),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let out = f();
        let el = t0.elapsed();
        match out {
            Ok(msg) => println!("PASS criterion {} {name}: {msg} [{el:.2?}]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {} {name}: {msg} [{el:.2?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
