//! Exact arithmetic in the cyclotomic field ℚ(ζ_e).
//!
//! Elements are stored in the power basis `1, ζ, …, ζ^{φ(e)-1}` reduced
//! modulo the cyclotomic polynomial Φ_e, so two elements are equal exactly
//! when their coefficient vectors are equal. Moduli are never computed as
//! floats: [`Cyclo::modulus_sq_bounds`] returns a rational interval that is
//! exact whenever |z|² happens to be rational.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::exact::{self, Q};

#[derive(Debug, PartialEq, Eq)]
struct Field {
    order: u32,
    degree: usize,
    /// `powers[j]` is ζ^j reduced to the power basis, for `0 <= j < order`.
    powers: Vec<Vec<i64>>,
}

fn cyclotomic_poly(n: u32) -> Vec<i64> {
    // x^n - 1 divided by Φ_d for every proper divisor d of n.
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if n % d == 0 {
            let div = cyclotomic_poly(d);
            num = poly_div_exact(&num, &div);
        }
    }
    num
}

fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dn = den.len() - 1;
    let mut out = vec![0i64; rem.len() - dn];
    for i in (0..out.len()).rev() {
        let c = rem[i + dn];
        out[i] = c;
        for (j, &dj) in den.iter().enumerate() {
            rem[i + j] -= c * dj;
        }
    }
    debug_assert!(rem.iter().all(|&r| r == 0));
    out
}

impl Field {
    fn new(order: u32) -> Field {
        assert!(order >= 1);
        let phi = cyclotomic_poly(order);
        let degree = phi.len() - 1;
        let mut powers = Vec::with_capacity(order as usize);
        let mut cur = vec![0i64; degree];
        cur[0] = 1;
        for _ in 0..order {
            powers.push(cur.clone());
            // multiply by x and reduce with the monic Φ
            let mut next = vec![0i64; degree + 1];
            next[1..=degree].copy_from_slice(&cur);
            let top = next[degree];
            for j in 0..degree {
                next[j] -= top * phi[j];
            }
            next.truncate(degree);
            cur = next;
        }
        Field { order, degree, powers }
    }
}

/// An element of ℚ(ζ_order).
#[derive(Clone, PartialEq, Eq)]
pub struct Cyclo {
    field: Arc<Field>,
    coeffs: Vec<Q>,
}

/// A handle for building elements of one field without recomputing Φ.
#[derive(Clone, Debug)]
pub struct CycloField(Arc<Field>);

impl CycloField {
    pub fn new(order: u32) -> CycloField {
        CycloField(Arc::new(Field::new(order)))
    }

    pub fn order(&self) -> u32 {
        self.0.order
    }

    pub fn degree(&self) -> usize {
        self.0.degree
    }

    pub fn zero(&self) -> Cyclo {
        Cyclo { field: self.0.clone(), coeffs: vec![Q::zero(); self.0.degree] }
    }

    pub fn rational(&self, x: Q) -> Cyclo {
        let mut z = self.zero();
        z.coeffs[0] = x;
        z
    }

    pub fn one(&self) -> Cyclo {
        self.rational(Q::one())
    }

    /// ζ^j for any integer j.
    pub fn root(&self, j: i64) -> Cyclo {
        let e = self.0.order as i64;
        let idx = j.rem_euclid(e) as usize;
        let coeffs = self.0.powers[idx].iter().map(|&c| Q::from_integer(BigInt::from(c))).collect();
        Cyclo { field: self.0.clone(), coeffs }
    }
}

impl Cyclo {
    pub fn order(&self) -> u32 {
        self.field.order
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn scale(&self, k: &Q) -> Cyclo {
        Cyclo { field: self.field.clone(), coeffs: self.coeffs.iter().map(|c| c * k).collect() }
    }

    /// Returns the rational value when the element lies in ℚ.
    pub fn as_rational(&self) -> Option<Q> {
        self.coeffs[1..].iter().all(Zero::is_zero).then(|| self.coeffs[0].clone())
    }

    /// Complex conjugate: ζ^j ↦ ζ^{-j}.
    pub fn conj(&self) -> Cyclo {
        let e = self.field.order as usize;
        let mut out = vec![Q::zero(); self.field.degree];
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let p = &self.field.powers[(e - j % e) % e];
            for (o, &pk) in out.iter_mut().zip(p) {
                if pk != 0 {
                    *o += c * Q::from_integer(BigInt::from(pk));
                }
            }
        }
        Cyclo { field: self.field.clone(), coeffs: out }
    }

    fn check_same(&self, other: &Cyclo) {
        assert_eq!(self.field.order, other.field.order, "cyclotomic order mismatch");
    }

    /// Rational interval `[lo, hi]` containing |z|². Exact (`lo == hi`)
    /// when |z|² is rational, which always holds for orders 1, 2, 3, 4, 6.
    pub fn modulus_sq_bounds(&self) -> (Q, Q) {
        let w = self * &self.conj();
        if let Some(r) = w.as_rational() {
            return (r.clone(), r);
        }
        // w is real: Re(Σ w_j ζ^j) = Σ w_j cos(2πj/e).
        let e = self.field.order;
        let (mut lo, mut hi) = (Q::zero(), Q::zero());
        for (j, c) in w.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (clo, chi) = cos_interval(j as u32, e);
            let (a, b) = (c * &clo, c * &chi);
            if a <= b {
                lo += a;
                hi += b;
            } else {
                lo += b;
                hi += a;
            }
        }
        if lo.is_negative() {
            lo = Q::zero();
        }
        (lo, hi)
    }

    /// A certified rational upper bound on |z|.
    pub fn modulus_upper(&self) -> Q {
        exact::sqrt_upper(&self.modulus_sq_bounds().1)
    }

    /// A certified rational lower bound on |z|.
    pub fn modulus_lower(&self) -> Q {
        exact::sqrt_lower(&self.modulus_sq_bounds().0)
    }

    /// Floating rendering, for display only.
    pub fn to_complex(&self) -> num_complex::Complex64 {
        let e = self.field.order as f64;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                num_complex::Complex64::from_polar(exact::to_f64(c), 2.0 * std::f64::consts::PI * j as f64 / e)
            })
            .sum()
    }
}

/// Interval containing cos(2πj/e). Exact at the rational values of cosine.
fn cos_interval(j: u32, e: u32) -> (Q, Q) {
    let j = j % e;
    // cos(2π·j/e) is rational iff the angle is a multiple of 1/4 or 1/6 turn.
    if (12 * j) % e == 0 {
        let twelfths = 12 * j / e;
        let v = match twelfths {
            0 => Some(exact::qi(1)),
            2 | 10 => Some(exact::q(1, 2)),
            3 | 9 => Some(exact::qi(0)),
            4 | 8 => Some(exact::q(-1, 2)),
            6 => Some(exact::qi(-1)),
            _ => None,
        };
        if let Some(v) = v {
            return (v.clone(), v);
        }
    }
    let c = (2.0 * std::f64::consts::PI * j as f64 / e as f64).cos();
    let pad = 1e-14;
    (BigRational::from_float(c - pad).expect("finite"), BigRational::from_float(c + pad).expect("finite"))
}

impl<'a> Add<&'a Cyclo> for &'a Cyclo {
    type Output = Cyclo;
    fn add(self, o: &Cyclo) -> Cyclo {
        self.check_same(o);
        Cyclo { field: self.field.clone(), coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect() }
    }
}

impl<'a> Sub<&'a Cyclo> for &'a Cyclo {
    type Output = Cyclo;
    fn sub(self, o: &Cyclo) -> Cyclo {
        self.check_same(o);
        Cyclo { field: self.field.clone(), coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &Cyclo {
    type Output = Cyclo;
    fn neg(self) -> Cyclo {
        Cyclo { field: self.field.clone(), coeffs: self.coeffs.iter().map(|a| -a).collect() }
    }
}

impl<'a> Mul<&'a Cyclo> for &'a Cyclo {
    type Output = Cyclo;
    fn mul(self, o: &Cyclo) -> Cyclo {
        self.check_same(o);
        let e = self.field.order as usize;
        let mut out = vec![Q::zero(); self.field.degree];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let ab = a * b;
                for (slot, &p) in out.iter_mut().zip(&self.field.powers[(i + j) % e]) {
                    if p != 0 {
                        *slot += &ab * Q::from_integer(BigInt::from(p));
                    }
                }
            }
        }
        Cyclo { field: self.field.clone(), coeffs: out }
    }
}

impl Add for Cyclo {
    type Output = Cyclo;
    fn add(self, o: Cyclo) -> Cyclo {
        &self + &o
    }
}

impl Sub for Cyclo {
    type Output = Cyclo;
    fn sub(self, o: Cyclo) -> Cyclo {
        &self - &o
    }
}

impl Mul for Cyclo {
    type Output = Cyclo;
    fn mul(self, o: Cyclo) -> Cyclo {
        &self * &o
    }
}

impl fmt::Debug for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(j, c)| match j {
                0 => exact::render(c),
                _ => format!("({})z^{}", exact::render(c), j),
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{} [z=e^(2pi i/{})]", terms.join(" + "), self.field.order)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;

    #[test]
    fn cyclotomic_polynomials() {
        assert_eq!(cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(cyclotomic_poly(3), vec![1, 1, 1]);
        assert_eq!(cyclotomic_poly(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn roots_of_unity_sum_to_zero() {
        for e in [2u32, 3, 5, 6, 8, 12] {
            let f = CycloField::new(e);
            let s = (0..e as i64).fold(f.zero(), |acc, j| &acc + &f.root(j));
            assert!(s.is_zero(), "order {e}");
            assert_eq!(&f.root(1) * &f.root(e as i64 - 1), f.one());
        }
    }

    #[test]
    fn omega_plus_omega_sq_is_minus_one() {
        let f = CycloField::new(3);
        let s = (&f.root(1) + &f.root(2)).scale(&q(1, 2));
        assert_eq!(s.as_rational(), Some(q(-1, 2)));
    }

    #[test]
    fn modulus_of_omega_minus_one_is_sqrt3() {
        let f = CycloField::new(3);
        let d = &f.root(1) - &f.one();
        assert_eq!(d.modulus_sq_bounds(), (q(3, 1), q(3, 1)));
        let up = exact::to_f64(&d.modulus_upper());
        assert!((up - 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn irrational_modulus_is_bracketed() {
        let f = CycloField::new(5);
        let z = &f.root(1) + &f.one();
        let (lo, hi) = z.modulus_sq_bounds();
        let true_val = (z.to_complex()).norm_sqr();
        assert!(exact::to_f64(&lo) <= true_val && true_val <= exact::to_f64(&hi));
        assert!(exact::to_f64(&hi) - exact::to_f64(&lo) < 1e-12);
    }
}
