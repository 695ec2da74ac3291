//! Dual-mode arithmetic: 64-bit floats for fast tolerance-based checks,
//! exact rationals for identification verdicts on small models.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Probability-valued scalar usable by every engine operation.
///
/// Implemented by `f64` (default mode) and [`BigRational`] (exact mode).
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Exact value of a plain decimal literal such as `0.125` or `-3e-2`.
    fn from_decimal_str(s: &str) -> Option<Self>;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    /// Whether arithmetic in this mode is exact (no rounding).
    fn exact() -> bool;
    /// Render as a spec-file probability literal: a fraction string in exact
    /// mode, a decimal literal in float mode. [`Scalar::from_literal`]
    /// inverts this exactly.
    fn to_literal(&self) -> String;
    /// Parse a probability literal: either a fraction `n/d` or a decimal.
    fn from_literal(s: &str) -> Option<Self> {
        match s.split_once('/') {
            Some((n, d)) => {
                let n = Self::from_decimal_str(n.trim())?;
                let d = Self::from_decimal_str(d.trim())?;
                if d.is_zero() {
                    return None;
                }
                Some(n / d)
            }
            None => Self::from_decimal_str(s),
        }
    }

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_decimal_str(s: &str) -> Option<Self> {
        s.parse().ok()
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn exact() -> bool {
        false
    }
    fn to_literal(&self) -> String {
        // shortest decimal that round-trips through f64
        format!("{self}")
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_decimal_str(s: &str) -> Option<Self> {
        parse_decimal_rational(s)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn exact() -> bool {
        true
    }
    fn to_literal(&self) -> String {
        format!("{self}")
    }
}

/// Parse a decimal literal (optional sign, fraction, exponent) into an exact rational.
fn parse_decimal_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().ok()?),
        None => (s, 0i64),
    };
    let (mantissa, sign) = match mantissa.strip_prefix('-') {
        Some(rest) => (rest, -1),
        None => (mantissa.strip_prefix('+').unwrap_or(mantissa), 1),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let numer = numer * BigInt::from(sign);
    let scale = frac_part.len() as i64 - exp;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::new(numer, num_traits::pow::pow(ten, scale as usize))
    } else {
        BigRational::from_integer(numer * num_traits::pow::pow(ten, (-scale) as usize))
    };
    Some(value)
}

/// Sum a sequence of scalars.
pub fn sum<P: Scalar>(iter: impl IntoIterator<Item = P>) -> P {
    iter.into_iter().fold(P::zero(), |acc, x| acc + x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing_is_exact() {
        let r = BigRational::from_decimal_str("0.3").unwrap();
        assert_eq!(r, BigRational::from_ratio(3, 10));
        let r = BigRational::from_decimal_str("-1.25e-2").unwrap();
        assert_eq!(r, BigRational::from_ratio(-125, 10_000));
        let r = BigRational::from_decimal_str("42").unwrap();
        assert_eq!(r, BigRational::from_ratio(42, 1));
        assert!(BigRational::from_decimal_str("abc").is_none());
    }

    #[test]
    fn float_round_trip() {
        assert_eq!(f64::from_decimal_str("0.5"), Some(0.5));
        assert_eq!(f64::from_ratio(1, 4), 0.25);
    }
}
