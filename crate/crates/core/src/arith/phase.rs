use std::f64::consts::PI;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

const PI_DIGITS: &str = "31415926535897932384626433832795028841971693993751\
05820974944592307816406286208998628034825342117067\
98214808651328230664709384460955058223172535940812\
84811174502841027019385211055596446229489549303819";

/// `π` as a rational accurate to 200 decimal places.
pub fn rational_pi() -> &'static BigRational {
    static PI_Q: OnceLock<BigRational> = OnceLock::new();
    PI_Q.get_or_init(|| {
        let num: BigInt = PI_DIGITS.parse().expect("digits");
        let den = num_traits::pow(BigInt::from(10), PI_DIGITS.len() - 1);
        BigRational::new(num, den)
    })
}

/// Reduces a real phase to `(-π, π]`.
pub fn normalize_phase(x: f64) -> f64 {
    if x > -PI && x <= PI {
        return x;
    }
    if !x.is_finite() {
        return 0.0;
    }
    if x.abs() > 1e4 {
        let exact = BigRational::from_float(x).expect("finite");
        return reduce_rational_phase(&exact).0;
    }
    let tau = 2.0 * PI;
    let mut p = x.rem_euclid(tau);
    if p > PI {
        p -= tau;
    }
    if p <= -PI {
        p = PI;
    }
    p
}

/// Reduces an exact rational angle modulo `2π` against the 200-digit `π`.
///
/// Returns the reduced angle in `(-π, π]` and the winding `q` with
/// `x = reduced + 2πq`.
pub fn reduce_rational_phase(x: &BigRational) -> (f64, BigInt) {
    let pi = rational_pi();
    let two_pi = pi * BigRational::from_integer(BigInt::from(2));
    // q = ceil((x - π) / 2π), so x - 2πq lies in (-π, π]
    let q = ((x - pi) / &two_pi).ceil().to_integer();
    let r = x - &two_pi * BigRational::from_integer(q.clone());
    let mut f = rational_to_f64(&r);
    if f > PI {
        f = PI;
    }
    if f <= -PI {
        f = PI;
    }
    (f, q)
}

fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    // scale to keep ~60 significant bits before dividing
    let (n, d) = (r.numer(), r.denom());
    let shift = d.bits() as i64 - n.bits() as i64 + 64;
    let scaled = if shift >= 0 { n << (shift as usize) } else { n >> ((-shift) as usize) };
    let (quot, _) = scaled.div_rem(d);
    quot.to_f64().unwrap_or(0.0) * 2f64.powi(-(shift as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Signed};

    // arctan(1/k) by its alternating series, truncated once terms fall below 10^-digits
    fn arctan_inv(k: u64, digits: u32) -> BigRational {
        let eps = BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(10), digits as usize));
        let k2 = BigInt::from(k * k);
        let mut pow = BigRational::new(BigInt::one(), BigInt::from(k));
        let mut sum = BigRational::zero();
        let mut n = 0u64;
        loop {
            let term = &pow / BigRational::from_integer(BigInt::from(2 * n + 1));
            if term.abs() < eps {
                break;
            }
            if n % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
            pow /= BigRational::from_integer(k2.clone());
            n += 1;
        }
        sum
    }

    #[test]
    fn pi_matches_machin_formula() {
        let machin = BigRational::from_integer(BigInt::from(16)) * arctan_inv(5, 210)
            - BigRational::from_integer(BigInt::from(4)) * arctan_inv(239, 210);
        let diff = (machin - rational_pi()).abs();
        let bound = BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(10), 198));
        assert!(diff < bound);
    }

    #[test]
    fn reduction_of_pi_multiples() {
        let pi = rational_pi().clone();
        let (r, q) = reduce_rational_phase(&(pi.clone() * BigRational::from_integer(3.into())));
        assert_eq!(r, PI);
        assert_eq!(q, BigInt::one());
        let (r, q) = reduce_rational_phase(&(-pi));
        assert_eq!(r, PI);
        assert_eq!(q, -BigInt::one());
    }

    #[test]
    fn huge_multiplier_keeps_phase() {
        // x = 2π·10^60 + 0.25 reduces to 0.25
        let pi = rational_pi().clone();
        let big = num_traits::pow(BigInt::from(10), 60);
        let x = pi * BigRational::from_integer(BigInt::from(2) * big)
            + BigRational::new(1.into(), 4.into());
        let (r, _) = reduce_rational_phase(&x);
        assert!((r - 0.25).abs() < 1e-15);
    }

    #[test]
    fn normalize_small_values() {
        assert_eq!(normalize_phase(-PI), PI);
        assert!((normalize_phase(3.0 * PI) - PI).abs() < 1e-14 || normalize_phase(3.0 * PI) < -PI + 1e-14);
        assert!((normalize_phase(7.0) - (7.0 - 2.0 * PI)).abs() < 1e-15);
        let p = normalize_phase(1e10);
        assert!(p > -PI && p <= PI);
    }
}
