//! Exact coefficient fields: rationals and Gaussian rationals.

use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational number. The denominator is always positive
/// and coprime to the numerator.
pub type Rational = num::BigRational;

/// Builds a rational from a small numerator and denominator.
///
/// Panics if `den` is zero.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Builds an integer-valued rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `n!` as a rational.
pub fn factorial(n: u32) -> Rational {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= k;
    }
    Rational::from_integer(acc)
}

/// `(2n-1)!!`, with `(-1)!! = 1`.
pub fn double_factorial_odd(n: u32) -> Rational {
    let mut acc = BigInt::one();
    let mut k = 1u32;
    for _ in 0..n {
        acc *= k;
        k += 2;
    }
    Rational::from_integer(acc)
}

/// Generalized binomial coefficient `C(alpha, k)` for rational `alpha`.
pub fn binomial(alpha: &Rational, k: u32) -> Rational {
    let mut acc = <Rational as One>::one();
    for j in 0..k {
        acc = acc * (alpha - int(j as i64)) / int(j as i64 + 1);
    }
    acc
}

/// Exact square root of a non-negative rational, if it exists.
pub fn rational_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let (n, d) = (r.numer(), r.denom());
    let (sn, sd) = (n.sqrt(), d.sqrt());
    if &(&sn * &sn) == n && &(&sd * &sd) == d {
        Some(Rational::new(sn, sd))
    } else {
        None
    }
}

/// Parses "p/q" or "p".
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let parsed = match s.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).ok();
            let q = BigInt::from_str(q.trim()).ok();
            match (p, q) {
                (Some(p), Some(q)) if !q.is_zero() => Some(Rational::new(p, q)),
                _ => None,
            }
        }
        None => BigInt::from_str(s).ok().map(Rational::from_integer),
    };
    parsed.ok_or_else(|| Error::Parse(format!("not a rational: {s:?}")))
}

/// Coefficient field used by [`Series`](crate::ring::Series).
///
/// Implemented by [`Rational`] and [`Gaussian`]. All operations are exact.
pub trait Scalar: Clone + fmt::Debug + PartialEq + Send + Sync + 'static {
    /// Whether values may carry an imaginary part.
    const COMPLEX: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_rational(r: Rational) -> Self;
    fn plus(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
    fn negated(&self) -> Self;
    fn scaled(&self, r: &Rational) -> Self;
    fn inverse(&self) -> Option<Self>;
    /// Exact square root, when one exists in the field.
    fn exact_sqrt(&self) -> Option<Self>;
    fn real_part(&self) -> Rational;
    fn imag_part(&self) -> Rational;
    /// Canonical text form: `p/q`, or `p/q+r/t*i` for complex values.
    fn to_canonical(&self) -> String;

    fn is_one(&self) -> bool {
        *self == Self::one()
    }

    fn add_in_place(&mut self, other: &Self) {
        *self = self.plus(other);
    }
}

impl Scalar for Rational {
    const COMPLEX: bool = false;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_rational(r: Rational) -> Self {
        r
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn negated(&self) -> Self {
        -self
    }
    fn scaled(&self, r: &Rational) -> Self {
        self * r
    }
    fn inverse(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn exact_sqrt(&self) -> Option<Self> {
        rational_sqrt(self)
    }
    fn real_part(&self) -> Rational {
        self.clone()
    }
    fn imag_part(&self) -> Rational {
        Zero::zero()
    }
    fn to_canonical(&self) -> String {
        self.to_string()
    }
    fn add_in_place(&mut self, other: &Self) {
        *self += other;
    }
}

/// Gaussian rational `re + im·i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Gaussian {
    pub re: Rational,
    pub im: Rational,
}

impl Gaussian {
    pub fn new(re: Rational, im: Rational) -> Self {
        Gaussian { re, im }
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Gaussian::new(Zero::zero(), One::one())
    }

    pub fn conj(&self) -> Self {
        Gaussian::new(self.re.clone(), -&self.im)
    }
}

impl Scalar for Gaussian {
    const COMPLEX: bool = true;

    fn zero() -> Self {
        Gaussian::new(Zero::zero(), Zero::zero())
    }
    fn one() -> Self {
        Gaussian::new(One::one(), Zero::zero())
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(&self.re) && Zero::is_zero(&self.im)
    }
    fn from_rational(r: Rational) -> Self {
        Gaussian::new(r, Zero::zero())
    }
    fn plus(&self, o: &Self) -> Self {
        Gaussian::new(&self.re + &o.re, &self.im + &o.im)
    }
    fn minus(&self, o: &Self) -> Self {
        Gaussian::new(&self.re - &o.re, &self.im - &o.im)
    }
    fn times(&self, o: &Self) -> Self {
        if Zero::is_zero(&self.im) && Zero::is_zero(&o.im) {
            return Gaussian::new(&self.re * &o.re, Zero::zero());
        }
        Gaussian::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
    fn negated(&self) -> Self {
        Gaussian::new(-&self.re, -&self.im)
    }
    fn scaled(&self, r: &Rational) -> Self {
        Gaussian::new(&self.re * r, &self.im * r)
    }
    fn inverse(&self) -> Option<Self> {
        let norm = &self.re * &self.re + &self.im * &self.im;
        if Zero::is_zero(&norm) {
            return None;
        }
        Some(Gaussian::new(&self.re / &norm, -&self.im / &norm))
    }
    fn exact_sqrt(&self) -> Option<Self> {
        // Only real non-negative radicands are needed.
        if Zero::is_zero(&self.im) {
            rational_sqrt(&self.re).map(Gaussian::from_rational)
        } else {
            None
        }
    }
    fn real_part(&self) -> Rational {
        self.re.clone()
    }
    fn imag_part(&self) -> Rational {
        self.im.clone()
    }
    fn to_canonical(&self) -> String {
        if Zero::is_zero(&self.im) {
            return self.re.to_string();
        }
        let sign = if self.im.is_negative() { "-" } else { "+" };
        format!("{}{}{}*i", self.re, sign, self.im.abs())
    }
    fn add_in_place(&mut self, o: &Self) {
        self.re += &o.re;
        self.im += &o.im;
    }
}

/// Parses the canonical text form of a [`Gaussian`].
pub fn parse_gaussian(s: &str) -> Result<Gaussian> {
    let s = s.trim();
    let Some(body) = s.strip_suffix("*i") else {
        return Ok(Gaussian::from_rational(parse_rational(s)?));
    };
    // split at the last sign that is not the leading one
    let idx = body
        .char_indices()
        .skip(1)
        .filter(|&(_, c)| c == '+' || c == '-')
        .map(|(i, _)| i)
        .last()
        .ok_or_else(|| Error::Parse(format!("not a Gaussian rational: {s:?}")))?;
    let (re, im) = body.split_at(idx);
    let im = im.strip_prefix('+').unwrap_or(im);
    Ok(Gaussian::new(parse_rational(re)?, parse_rational(im)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_canonical_round_trip() {
        let r = rat(10, -4);
        assert_eq!(r.to_canonical(), "-5/2");
        assert_eq!(parse_rational("-5/2").unwrap(), r);
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn gaussian_canonical_round_trip() {
        let g = Gaussian::new(rat(1, 2), rat(-3, 4));
        assert_eq!(g.to_canonical(), "1/2-3/4*i");
        assert_eq!(parse_gaussian("1/2-3/4*i").unwrap(), g);
        let h = Gaussian::new(rat(-1, 3), rat(2, 1));
        assert_eq!(parse_gaussian(&h.to_canonical()).unwrap(), h);
    }

    #[test]
    fn gaussian_arithmetic() {
        let i = Gaussian::i();
        assert_eq!(i.times(&i), Gaussian::from_rational(int(-1)));
        let z = Gaussian::new(int(3), int(4));
        assert_eq!(z.times(&z.inverse().unwrap()), Gaussian::one());
    }

    #[test]
    fn sqrt_and_combinatorics() {
        assert_eq!(rational_sqrt(&rat(9, 4)), Some(rat(3, 2)));
        assert_eq!(rational_sqrt(&rat(2, 1)), None);
        assert_eq!(double_factorial_odd(3), int(15));
        assert_eq!(factorial(5), int(120));
        assert_eq!(binomial(&rat(1, 2), 2), rat(-1, 8));
    }
}
