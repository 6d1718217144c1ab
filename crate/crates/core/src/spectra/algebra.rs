use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{q, Q};

/// Polynomial in k variables: exponent vector ↦ coefficient.
pub type Poly = BTreeMap<Vec<u32>, Q>;

fn add_into(acc: &mut Poly, p: &Poly, s: &Q) {
    for (e, c) in p {
        let x = acc.entry(e.clone()).or_insert_with(Q::zero);
        *x += c * s;
        if x.is_zero() {
            acc.remove(e);
        }
    }
}

pub fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            add_into(&mut out, &BTreeMap::from([(e, ca * cb)]), &Q::one());
        }
    }
    out
}

pub fn poly_const(k: usize, c: Q) -> Poly {
    if c.is_zero() {
        Poly::new()
    } else {
        BTreeMap::from([(vec![0; k], c)])
    }
}

/// The elementary symmetric polynomial e_l in k variables.
pub fn elementary(k: usize, l: usize) -> Poly {
    let mut out = Poly::new();
    for mask in 0u32..(1 << k) {
        if mask.count_ones() as usize == l {
            let e: Vec<u32> = (0..k).map(|i| (mask >> i) & 1).collect();
            out.insert(e, Q::one());
        }
    }
    out
}

/// Rank over ℚ by row reduction.
pub fn rank(mut rows: Vec<Vec<Q>>) -> usize {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        let pivot = rows[r][c].clone();
        for i in r + 1..rows.len() {
            if rows[i][c].is_zero() {
                continue;
            }
            let f = &rows[i][c] / &pivot;
            for j in c..cols {
                let t = &rows[r][j] * &f;
                rows[i][j] -= t;
            }
        }
        r += 1;
    }
    r
}

/// Sorted exponent vectors of total degree ≤ cap (monomial orbits under 𝔖_k).
fn partitions(k: usize, cap: u32) -> Vec<Vec<u32>> {
    fn go(k: usize, max: u32, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in 0..=max.min(left) {
            cur.push(x);
            go(k, x, left - x, cur, out);
            cur.pop();
        }
    }
    let mut out = vec![];
    go(k, cap, cap, &mut vec![], &mut out);
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymPolyReport {
    pub k: usize,
    pub degree_cap: u32,
    pub generators: usize,
    pub rank: usize,
    pub expected: usize,
}

impl SymPolyReport {
    pub fn passed(&self) -> bool {
        self.rank == self.expected
    }
}

/// Rank of all products of P_l = e_{k−l} of degree ≤ cap against the
/// dimension of symmetric polynomials of degree ≤ cap.
pub fn symmetric_poly_generation_check(k: usize, degree_cap: u32) -> Result<SymPolyReport> {
    if k == 0 || k > 4 || degree_cap > 6 {
        return Err(Error::Invalid(format!("unsupported k={k}, degree cap {degree_cap}")));
    }
    let e: Vec<Poly> = (0..=k).map(|l| elementary(k, l)).collect();
    let mut products: Vec<Poly> = vec![];
    // multiplicities m_1..m_k of e_1..e_k with Σ l·m_l ≤ cap
    fn go(l: usize, k: usize, left: u32, cur: Poly, e: &[Poly], out: &mut Vec<Poly>) {
        if l > k {
            out.push(cur);
            return;
        }
        let mut p = cur;
        let mut used = 0;
        loop {
            go(l + 1, k, left - used, p.clone(), e, out);
            used += l as u32;
            if used > left {
                break;
            }
            p = poly_mul(&p, &e[l]);
        }
    }
    go(1, k, degree_cap, poly_const(k, Q::one()), &e, &mut products);
    let monomials: BTreeSet<Vec<u32>> = products.iter().flat_map(|p| p.keys().cloned()).collect();
    let rows: Vec<Vec<Q>> = products
        .iter()
        .map(|p| monomials.iter().map(|m| p.get(m).cloned().unwrap_or_else(Q::zero)).collect())
        .collect();
    Ok(SymPolyReport {
        k,
        degree_cap,
        generators: products.len(),
        rank: rank(rows),
        expected: partitions(k, degree_cap).len(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VandermondeReport {
    pub k: usize,
    pub determinant: Q,
    /// Each solved P_l equals e_{k−l}.
    pub recovered: bool,
}

impl VandermondeReport {
    pub fn passed(&self) -> bool {
        !self.determinant.is_zero() && self.recovered
    }
}

/// Solves Σ_l r_i^l P_l = ∏_j (r_i + z_j) for i = 1..k together with P_k = 1.
pub fn vandermonde_extraction_check(ratios: &[Q]) -> Result<VandermondeReport> {
    let k = ratios.len();
    let distinct: BTreeSet<&Q> = ratios.iter().collect();
    if distinct.len() != k {
        return Err(Error::Invalid("ratios are not pairwise distinct".into()));
    }
    let n = k + 1;
    let mut a: Vec<Vec<Q>> = vec![];
    let mut b: Vec<Poly> = vec![];
    for r in ratios {
        let mut row = vec![Q::one()];
        for l in 1..n {
            row.push(&row[l - 1] * r);
        }
        a.push(row);
        let mut p = poly_const(k, Q::one());
        for j in 0..k {
            let mut lin = poly_const(k, r.clone());
            let mut e = vec![0; k];
            e[j] = 1;
            lin.insert(e, Q::one());
            p = poly_mul(&p, &lin);
        }
        b.push(p);
    }
    let mut last = vec![Q::zero(); n];
    last[k] = Q::one();
    a.push(last);
    b.push(poly_const(k, Q::one()));

    let mut det = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return Ok(VandermondeReport { k, determinant: Q::zero(), recovered: false });
        };
        if p != c {
            a.swap(p, c);
            b.swap(p, c);
            det = -det;
        }
        let pivot = a[c][c].clone();
        det *= &pivot;
        let inv = Q::one() / &pivot;
        for x in a[c].iter_mut() {
            *x *= &inv;
        }
        let bc: Poly = b[c].iter().map(|(e, x)| (e.clone(), x * &inv)).collect();
        b[c] = bc;
        for i in 0..n {
            if i == c || a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].clone();
            for j in 0..n {
                let t = &a[c][j] * &f;
                a[i][j] -= t;
            }
            let bc = b[c].clone();
            add_into(&mut b[i], &bc, &-f);
        }
    }
    let recovered = (0..n).all(|l| b[l] == elementary(k, k - l));
    Ok(VandermondeReport { k, determinant: det, recovered })
}

/// κ_k/δ_k with κ_k = 1/(k+1), δ_k = k/(k+1), for k = 1..m.
pub fn weight_ratios(m: usize) -> Vec<Q> {
    (1..=m as i128).map(|k| q(1, k + 1) / q(k, k + 1)).collect()
}
