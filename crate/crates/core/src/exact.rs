//! Exact rational helpers shared by every module.
//!
//! Probabilities live as [`Rational`] end to end; floating point only
//! appears when a logarithm is reported.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `base^exp` for a non-negative integer exponent.
pub fn pow(base: &Rational, exp: usize) -> Rational {
    num_traits::pow(base.clone(), exp)
}

/// log2 of a big integer, accurate to f64 precision even past f64 range.
fn log2_bigint(n: &BigInt) -> f64 {
    debug_assert!(n.sign() == Sign::Plus);
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).log2();
    }
    let shift = bits - 64;
    let top: BigInt = n >> shift;
    top.to_f64().unwrap().log2() + shift as f64
}

/// log2 of a positive rational. Returns `-inf` for zero.
pub fn log2(q: &Rational) -> f64 {
    if q.is_zero() {
        return f64::NEG_INFINITY;
    }
    assert!(q.is_positive(), "log2 of a negative rational");
    log2_bigint(q.numer()) - log2_bigint(q.denom())
}

/// Natural log of a positive rational.
pub fn ln(q: &Rational) -> f64 {
    log2(q) * std::f64::consts::LN_2
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| 2f64.powf(log2(q)))
}

/// Parses `p/q`, an integer, or a plain decimal literal (`0.535`, `1e-3`)
/// into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty numeric literal".into()));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let q: BigInt = q
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(p, q));
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("not a number: {s:?}"));
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    if neg {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Best rational approximation of `x` with denominator at most `max_den`
/// (continued-fraction convergents and semiconvergents).
pub fn approximate(x: f64, max_den: u64) -> Rational {
    assert!(x.is_finite() && x >= 0.0);
    let (mut p0, mut q0, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
    let mut frac = x;
    let max_den = max_den as u128;
    loop {
        let a = frac.floor();
        if a > 1e18 {
            break;
        }
        let a = a as u128;
        let p2 = a * p1 + p0;
        let q2 = a * q1 + q0;
        if q2 > max_den {
            // largest semiconvergent that still fits
            let k = (max_den - q0) / q1.max(1);
            if q1 > 0 && k * 2 >= a {
                let ps = k * p1 + p0;
                let qs = k * q1 + q0;
                let semi = ps as f64 / qs as f64;
                let conv = p1 as f64 / q1 as f64;
                if (semi - x).abs() < (conv - x).abs() {
                    return Rational::new(BigInt::from(ps), BigInt::from(qs));
                }
            }
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let rem = frac - a as f64;
        if rem.abs() < 1e-15 {
            break;
        }
        frac = 1.0 / rem;
    }
    Rational::new(BigInt::from(p1), BigInt::from(q1.max(1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("2/7").unwrap(), rat(2, 7));
        assert_eq!(parse_rational("0.535").unwrap(), rat(535, 1000));
        assert_eq!(parse_rational("1").unwrap(), rat(1, 1));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("2.5e-1").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("-0.25").unwrap(), rat(-1, 4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn log2_of_large_rationals() {
        let big = pow(&rat(7, 3), 2000);
        let expected = 2000.0 * (7f64 / 3.0).log2();
        assert!((log2(&big) - expected).abs() < 1e-9 * expected);
        assert_eq!(log2(&rat(1, 8)), -3.0);
    }

    #[test]
    fn continued_fraction_approximation() {
        assert_eq!(approximate(0.5, 1000), rat(1, 2));
        let q = approximate((-1.0f64).exp(), 1_000_000);
        assert!((to_f64(&q) - (-1.0f64).exp()).abs() < 1e-11);
        assert!(q.denom() <= &BigInt::from(1_000_000));
    }
}
