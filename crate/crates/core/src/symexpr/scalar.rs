//! Gaussian rationals `a + b·i` with `a, b ∈ ℚ`.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt::Write;

/// Exact coefficient type for every ring element and every evaluated fiber.
pub type Scalar = Complex<BigRational>;

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Scalar {
    Complex::new(
        BigRational::from_integer(BigInt::from(v)),
        BigRational::zero(),
    )
}

pub fn real(v: BigRational) -> Scalar {
    Complex::new(v, BigRational::zero())
}

pub fn frac(num: i64, den: i64) -> Scalar {
    real(rational(num, den))
}

pub fn imag_unit() -> Scalar {
    Complex::new(BigRational::zero(), BigRational::one())
}

/// `i^k` for any integer `k`.
pub fn i_pow(k: i64) -> Scalar {
    match k.rem_euclid(4) {
        0 => int(1),
        1 => imag_unit(),
        2 => int(-1),
        _ => -imag_unit(),
    }
}

pub fn is_real(s: &Scalar) -> bool {
    s.im.is_zero()
}

/// Parses `p`, `-p` or `p/q`.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(BigRational::new(num, den))
}

/// Formats a scalar in the expression grammar, e.g. `3/2`, `-I`, `(1 - 2*I)`.
pub fn format_scalar(s: &Scalar) -> String {
    let mut out = String::new();
    if s.im.is_zero() {
        write!(out, "{}", s.re).unwrap();
    } else if s.re.is_zero() {
        out.push_str(&format_imag(&s.im));
    } else {
        let sign = if s.im.is_negative() { '-' } else { '+' };
        write!(out, "({} {} {})", s.re, sign, format_imag(&s.im.abs())).unwrap();
    }
    out
}

fn format_imag(im: &BigRational) -> String {
    if im.is_one() {
        "I".to_string()
    } else if (-im).is_one() {
        "-I".to_string()
    } else {
        format!("{im}*I")
    }
}
