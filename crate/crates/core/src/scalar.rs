//! Numeric abstraction for probability masses.
//!
//! Everything above this module is generic over [`Probability`], so the same
//! semantics can be evaluated in `f64`, `f32`, or exact [`BigRational`]
//! arithmetic.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, ToPrimitive, Zero};

/// A scalar that can carry probability mass.
pub trait Probability:
    Num + Clone + PartialOrd + Debug + Display + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// `numer / denom`; `None` when `denom == 0`.
    fn from_ratio(numer: i64, denom: i64) -> Option<Self> {
        if denom == 0 {
            return None;
        }
        Some(Self::from_i64(numer)? / Self::from_i64(denom)?)
    }

    /// Parses a decimal (`0.95`, `1`, `.5`, `1e-3`) or a fraction (`3/10`).
    fn parse_literal(text: &str) -> Option<Self> {
        if let Some((n, d)) = text.split_once('/') {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            return Self::from_ratio(n, d);
        }
        let (numer, denom) = decimal_to_ratio(text)?;
        let numer = Self::from_i128(numer)?;
        let denom = Self::from_i128(denom)?;
        Some(numer / denom)
    }

    /// Lossy view used for sampling and tolerance checks.
    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn approx_eq(&self, other: &Self, tolerance: f64) -> bool {
        (self.as_f64() - other.as_f64()).abs() <= tolerance
    }
}

impl Probability for f64 {
    fn parse_literal(text: &str) -> Option<Self> {
        if let Some((n, d)) = text.split_once('/') {
            let n: f64 = n.trim().parse().ok()?;
            let d: f64 = d.trim().parse().ok()?;
            return (d != 0.0).then(|| n / d);
        }
        text.parse().ok().filter(|v: &f64| v.is_finite())
    }

    fn approx_eq(&self, other: &Self, tolerance: f64) -> bool {
        (self - other).abs() <= tolerance
    }
}

impl Probability for f32 {
    fn parse_literal(text: &str) -> Option<Self> {
        if let Some((n, d)) = text.split_once('/') {
            let n: f32 = n.trim().parse().ok()?;
            let d: f32 = d.trim().parse().ok()?;
            return (d != 0.0).then(|| n / d);
        }
        text.parse().ok().filter(|v: &f32| v.is_finite())
    }
}

impl Probability for BigRational {
    fn from_ratio(numer: i64, denom: i64) -> Option<Self> {
        (denom != 0).then(|| BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    fn approx_eq(&self, other: &Self, tolerance: f64) -> bool {
        if self == other {
            return true;
        }
        let diff = self - other;
        let diff = if diff < BigRational::zero() { -diff } else { diff };
        diff.to_f64().is_some_and(|d| d <= tolerance)
    }
}

/// Exact decimal parsing: `"0.95"` becomes `(95, 100)`.
fn decimal_to_ratio(text: &str) -> Option<(i128, i128)> {
    let text = text.trim();
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer: i128 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
    let mut scale = exponent - frac_part.len() as i32;
    let mut denom: i128 = 1;
    while scale > 0 {
        numer = numer.checked_mul(10)?;
        scale -= 1;
    }
    while scale < 0 {
        denom = denom.checked_mul(10)?;
        scale += 1;
    }
    if negative {
        numer = -numer;
    }
    Some((numer, denom))
}

/// Sums an iterator of probabilities starting from zero.
pub fn sum<'a, P: Probability>(values: impl IntoIterator<Item = &'a P>) -> P {
    values.into_iter().fold(P::zero(), |acc, v| acc + v.clone())
}

/// `x` to nine decimals without trailing zeros, hiding float noise in
/// diagnostics.
pub(crate) fn short_decimal(x: f64) -> String {
    let text = format!("{x:.9}");
    text.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub(crate) fn in_unit_interval<P: Probability>(value: &P) -> bool {
    *value > P::zero() && *value <= P::one()
}

pub(crate) fn is_one_within<P: Probability>(value: &P, tolerance: f64) -> bool {
    value.approx_eq(&P::one(), tolerance)
}

#[cfg(test)]
mod tests {
    use num_traits::One;

    use super::*;

    #[test]
    fn decimals_parse_exactly_as_rationals() {
        let p = BigRational::parse_literal("0.95").unwrap();
        assert_eq!(p, BigRational::new(95.into(), 100.into()));
        let q = BigRational::parse_literal("3/10").unwrap();
        assert_eq!(q, BigRational::new(3.into(), 10.into()));
        let r = BigRational::parse_literal("25e-2").unwrap();
        assert_eq!(r, BigRational::new(1.into(), 4.into()));
    }

    #[test]
    fn float_parsing_matches_std() {
        assert_eq!(f64::parse_literal("0.95"), Some(0.95));
        assert_eq!(f64::parse_literal("3/10"), Some(0.3));
        assert_eq!(f64::parse_literal("1/0"), None);
        assert_eq!(f64::parse_literal("abc"), None);
        assert_eq!(f64::parse_literal("inf"), None);
    }

    #[test]
    fn malformed_decimals_are_rejected() {
        for bad in ["", ".", "1.2.3", "0x10", "1e", "--1"] {
            assert!(BigRational::parse_literal(bad).is_none(), "{bad:?}");
        }
    }

    #[test]
    fn unit_interval_is_half_open_at_zero() {
        assert!(!in_unit_interval(&0.0));
        assert!(in_unit_interval(&1.0));
        assert!(!in_unit_interval(&1.5));
        assert!(is_one_within(&(0.3 + 0.7), 1e-9));
        assert!(BigRational::one().approx_eq(&BigRational::one(), 0.0));
    }
}
