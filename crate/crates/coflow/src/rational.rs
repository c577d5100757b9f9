//! Exact rational arithmetic used throughout the solver.
//!
//! All LP values, deadlines, costs and certificate coefficients are
//! `Rational`; nothing downstream of instance parsing touches floating
//! point except human-readable summaries.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat_u64(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn is_integral(x: &Rational) -> bool {
    x.denom().is_one()
}

/// Smallest integer >= x, as u64. Panics on negative input.
pub fn ceil_u64(x: &Rational) -> u64 {
    assert!(!x.is_negative(), "ceil_u64 on negative rational");
    x.ceil().to_integer().to_u64().expect("ceil out of u64 range")
}

pub fn floor_u64(x: &Rational) -> u64 {
    assert!(!x.is_negative(), "floor_u64 on negative rational");
    x.floor().to_integer().to_u64().expect("floor out of u64 range")
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parses "p/q", "p", or "-p/q" into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (s, None),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| format!("invalid rational numerator: {s:?}"))?;
    let d: BigInt = match den {
        Some(d) => d
            .parse()
            .map_err(|_| format!("invalid rational denominator: {s:?}"))?,
        None => BigInt::one(),
    };
    if d.is_zero() {
        return Err(format!("zero denominator in rational: {s:?}"));
    }
    Ok(Rational::new(n, d))
}

/// Renders as "p/q", or just "p" when integral. Inverse of `parse_rational`.
pub fn format_rational(x: &Rational) -> String {
    if is_integral(x) {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Truncation precision for irrational square roots, in fractional bits.
pub const SQRT_FRACTIONAL_BITS: u32 = 64;

/// floor(sqrt(x) * 2^64) / 2^64 for x in [0, 1].
///
/// The result is an exact rational underestimate of sqrt(x) within 2^-64,
/// clamped into (0, 1] whenever x > 0.
pub fn sqrt_trunc(x: &Rational) -> Rational {
    assert!(!x.is_negative() && *x <= Rational::one(), "sqrt_trunc domain is [0,1]");
    if x.is_zero() {
        return Rational::zero();
    }
    let shift = 2 * SQRT_FRACTIONAL_BITS as usize;
    // floor(x * 2^128), then integer sqrt: floor(sqrt(floor(x * 2^128)))
    // <= floor(sqrt(x) * 2^64), so the truncation never overshoots.
    let scaled = (x.numer().to_biguint().unwrap() << shift) / x.denom().to_biguint().unwrap();
    let root = scaled.sqrt();
    let root = if root.is_zero() { BigUint::one() } else { root };
    Rational::new(root.into(), BigInt::one() << SQRT_FRACTIONAL_BITS as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["3/4", "-7/2", "5", "0", "1000000007/13"] {
            let r = parse_rational(s).unwrap();
            assert_eq!(format_rational(&r), s);
        }
        assert_eq!(parse_rational("6/4").unwrap(), rat(3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn sqrt_trunc_brackets_true_root() {
        for (n, d) in [(1i64, 2i64), (1, 4), (3, 4), (1, 1), (1, 1_000_000)] {
            let x = rat(n, d);
            let s = sqrt_trunc(&x);
            assert!(&s * &s <= x, "underestimate violated for {n}/{d}");
            let step = Rational::new(BigInt::one(), BigInt::one() << 64);
            let s_up = &s + &step;
            assert!(&s_up * &s_up > x, "truncation too coarse for {n}/{d}");
            assert!(s > Rational::zero() && s <= Rational::one());
        }
        assert_eq!(sqrt_trunc(&rat(1, 4)), rat(1, 2));
        assert_eq!(sqrt_trunc(&rat_int(1)), rat_int(1));
    }
}
