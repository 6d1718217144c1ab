use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// A subgroup Γ of S_k, stored as its full element list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermSubgroup {
    k: usize,
    elements: Vec<Vec<usize>>,
}

fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&i| a[i]).collect()
}

fn is_perm(p: &[usize], k: usize) -> bool {
    let mut seen = vec![false; k];
    p.len() == k && p.iter().all(|&i| i < k && !std::mem::replace(&mut seen[i], true))
}

pub fn factorial(n: usize) -> usize {
    (1..=n).product()
}

impl PermSubgroup {
    /// Closure of the generators under composition.
    pub fn generated_by(k: usize, gens: Vec<Vec<usize>>) -> Result<PermSubgroup> {
        for g in &gens {
            if !is_perm(g, k) {
                return Err(Error::Invalid(format!("{g:?} is not a permutation of {k} points")));
            }
        }
        let mut set: BTreeSet<Vec<usize>> = BTreeSet::new();
        let id: Vec<usize> = (0..k).collect();
        set.insert(id.clone());
        let mut frontier = vec![id];
        while let Some(x) = frontier.pop() {
            for g in &gens {
                let y = compose(g, &x);
                if set.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
        Ok(PermSubgroup { k, elements: set.into_iter().collect() })
    }

    pub fn trivial(k: usize) -> PermSubgroup {
        PermSubgroup { k, elements: vec![(0..k).collect()] }
    }

    pub fn symmetric(k: usize) -> PermSubgroup {
        let mut gens = vec![];
        if k >= 2 {
            let mut swap: Vec<usize> = (0..k).collect();
            swap.swap(0, 1);
            gens.push(swap);
            gens.push((1..k).chain(std::iter::once(0)).collect());
        }
        PermSubgroup::generated_by(k, gens).expect("valid generators")
    }

    /// The rotation subgroup C_k.
    pub fn cyclic(k: usize) -> PermSubgroup {
        let rot: Vec<usize> = (1..k).chain(std::iter::once(0)).collect();
        PermSubgroup::generated_by(k, if k > 0 { vec![rot] } else { vec![] }).expect("valid generator")
    }

    /// S_{k-1} acting on the first k−1 slots, fixing the last.
    pub fn fixing_last(k: usize) -> PermSubgroup {
        let mut out = PermSubgroup::symmetric(k.saturating_sub(1));
        out.k = k;
        for p in &mut out.elements {
            p.push(k - 1);
        }
        out
    }

    /// Every subgroup of S_k (k ≤ 4), each generated by at most two elements.
    pub fn all(k: usize) -> Vec<PermSubgroup> {
        let sym = PermSubgroup::symmetric(k);
        let mut found: BTreeMap<Vec<Vec<usize>>, PermSubgroup> = BTreeMap::new();
        for a in &sym.elements {
            for b in &sym.elements {
                let g = PermSubgroup::generated_by(k, vec![a.clone(), b.clone()]).expect("elements of S_k");
                found.entry(g.elements.clone()).or_insert(g);
            }
        }
        let mut out: Vec<PermSubgroup> = found.into_values().collect();
        out.sort_by_key(|g| (g.order(), g.elements.clone()));
        out
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    /// Number of Γ-orbits on {0..d}^k by Burnside's lemma.
    pub fn burnside_count(&self, d: usize) -> usize {
        let total: usize = self.elements.iter().map(|p| d.pow(cycles(p) as u32)).sum();
        total / self.order()
    }
}

fn cycles(p: &[usize]) -> usize {
    let mut seen = vec![false; p.len()];
    let mut n = 0;
    for i in 0..p.len() {
        if !seen[i] {
            n += 1;
            let mut j = i;
            while !seen[j] {
                seen[j] = true;
                j = p[j];
            }
        }
    }
    n
}

/// Γ-orbits on index tuples {0..d}^k, each sorted, ordered by least member.
pub fn tuple_orbits(d: usize, gamma: &PermSubgroup) -> Vec<Vec<Vec<usize>>> {
    let k = gamma.k();
    let mut seen = BTreeSet::new();
    let mut out = vec![];
    let total = d.pow(k as u32);
    for idx in 0..total {
        let mut t = vec![0; k];
        let mut x = idx;
        for slot in (0..k).rev() {
            t[slot] = x % d;
            x /= d;
        }
        if seen.contains(&t) {
            continue;
        }
        let orbit: BTreeSet<Vec<usize>> = gamma.elements().iter().map(|p| p.iter().map(|&i| t[i]).collect()).collect();
        for o in &orbit {
            seen.insert(o.clone());
        }
        out.push(orbit.into_iter().collect());
    }
    out
}

/// Whether the entries of a tuple are pairwise distinct.
pub fn is_free(t: &[usize]) -> bool {
    let s: BTreeSet<&usize> = t.iter().collect();
    s.len() == t.len()
}
