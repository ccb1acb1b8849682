//! Exact rational helpers: text parsing, canonical `p/q` rendering and
//! best approximation under a denominator bound.

use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRationalError {
    #[error("empty probability string")]
    Empty,
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
    #[error("malformed number {0:?}")]
    Malformed(String),
}

/// Parses `"p/q"`, an integer, or a plain decimal (`"0.25"`, `"-1.5"`, `".5"`)
/// into an exact rational. Decimals are converted digit-for-digit.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = parse_integer(num.trim()).ok_or_else(|| ParseRationalError::Malformed(s.into()))?;
        let d = parse_integer(den.trim()).ok_or_else(|| ParseRationalError::Malformed(s.into()))?;
        if d.is_zero() {
            return Err(ParseRationalError::ZeroDenominator(s.into()));
        }
        return Ok(Rational::new(n, d));
    }
    parse_decimal(s).ok_or_else(|| ParseRationalError::Malformed(s.into()))
}

fn parse_integer(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    BigInt::from_str(s.strip_prefix('+').unwrap_or(s)).ok()
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (negative, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) || !all_digits(frac_part) {
        return None;
    }
    let mut mantissa = String::with_capacity(int_part.len() + frac_part.len());
    mantissa.push_str(int_part);
    mantissa.push_str(frac_part);
    let numer = if mantissa.is_empty() {
        BigInt::zero()
    } else {
        BigInt::from_str(&mantissa).ok()?
    };
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let value = Rational::new(numer, denom);
    Some(if negative { -value } else { value })
}

/// Canonical rendering: always `p/q` in lowest terms, `q > 0`.
pub fn format_rational(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Fixed-point decimal rendering for human-facing reports.
pub fn decimal_string(value: &Rational, digits: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10u32), digits);
    let scaled = (value * Rational::from_integer(scale)).round().to_integer();
    let negative = scaled.is_negative();
    let mut magnitude = scaled.abs().to_string();
    if magnitude.len() <= digits {
        magnitude = format!("{}{}", "0".repeat(digits + 1 - magnitude.len()), magnitude);
    }
    let split = magnitude.len() - digits;
    let (int_part, frac_part) = magnitude.split_at(split);
    let sign = if negative { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    }
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Exact value of a finite `f64`.
pub fn from_f64(value: f64) -> Option<Rational> {
    Rational::from_float(value)
}

/// Closest rational to `value` whose denominator does not exceed `max_denominator`.
///
/// Continued-fraction convergents plus the best semiconvergent; ties go to the
/// candidate with the smaller denominator.
pub fn limit_denominator(value: &Rational, max_denominator: &BigInt) -> Rational {
    assert!(max_denominator >= &BigInt::one(), "denominator bound must be positive");
    if value.denom() <= max_denominator {
        return value.clone();
    }
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let mut n = value.numer().clone();
    let mut d = value.denom().clone();
    loop {
        let (a, r) = n.div_mod_floor(&d);
        let q2 = &q0 + &a * &q1;
        if &q2 > max_denominator {
            break;
        }
        let p2 = &p0 + &a * &p1;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        n = std::mem::replace(&mut d, r);
        if d.is_zero() {
            break;
        }
    }
    let k = (max_denominator - &q0).div_floor(&q1);
    let semi = Rational::new(&p0 + &k * &p1, &q0 + &k * &q1);
    let conv = Rational::new(p1, q1);
    let semi_err = (&semi - value).abs();
    let conv_err = (&conv - value).abs();
    if semi_err < conv_err {
        semi
    } else {
        conv
    }
}
