//! Exact rational helpers shared by the measure and pairing code.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i128, d: i128) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i128) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn exact_sqrt(x: &Q) -> Option<Q> {
    let (n, d) = (x.numer(), x.denom());
    let (sn, sd) = (n.sqrt(), d.sqrt());
    (&sn * &sn == *n && &sd * &sd == *d).then(|| BigRational::new(sn, sd))
}

/// A rational `r` with `r * r >= x`, tight to roughly twelve digits.
pub fn sqrt_upper(x: &Q) -> Q {
    if !x.is_positive() {
        return Q::zero();
    }
    if let Some(r) = exact_sqrt(x) {
        return r;
    }
    let mut f = to_f64(x).sqrt() * (1.0 + 1e-12);
    loop {
        let r = BigRational::from_float(f).expect("finite");
        if &r * &r >= *x {
            return r;
        }
        f *= 1.0 + 1e-9;
    }
}

/// A rational `r >= 0` with `r * r <= x`.
pub fn sqrt_lower(x: &Q) -> Q {
    if !x.is_positive() {
        return Q::zero();
    }
    if let Some(r) = exact_sqrt(x) {
        return r;
    }
    let mut f = to_f64(x).sqrt() * (1.0 - 1e-12);
    loop {
        let r = BigRational::from_float(f).expect("finite");
        if &r * &r <= *x {
            return r;
        }
        f *= 1.0 - 1e-9;
    }
}

/// Renders `num/den` with the denominator positive.
pub fn render(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse(s: &str) -> Option<Q> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n.trim().parse().ok()?, d))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_bounds_bracket() {
        for (n, d) in [(2, 1), (1, 3), (7, 11), (1, 4), (9, 16), (10_000_001, 3)] {
            let x = q(n, d);
            let (lo, hi) = (sqrt_lower(&x), sqrt_upper(&x));
            assert!(&lo * &lo <= x && &hi * &hi >= x);
            assert!(to_f64(&hi) - to_f64(&lo) < 1e-8 * (1.0 + to_f64(&hi)));
        }
        assert_eq!(sqrt_upper(&q(1, 4)), q(1, 2));
    }

    #[test]
    fn render_parse_roundtrip() {
        for x in [q(3, 4), q(-5, 7), qi(12), q(0, 5)] {
            assert_eq!(parse(&render(&x)).unwrap(), x);
        }
        assert!(parse("1/0").is_none());
    }
}
