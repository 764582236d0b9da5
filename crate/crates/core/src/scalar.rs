//! The scalar abstraction every coordinate and slope is expressed in.
//!
//! All geometry in this crate is exact, so a scalar must be an ordered field
//! with decidable equality. Floating point types are deliberately not
//! implementors: canonical forms and map equality would be meaningless.

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, Zero};

/// An exact ordered field.
pub trait Scalar:
    Clone
    + Ord
    + Hash
    + Debug
    + Display
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// `numer / denom`. Panics when `denom == 0`.
    fn from_ratio(numer: i64, denom: i64) -> Self;

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    /// Parses `"p/q"` or `"p"`. Returns `None` for anything else, including a
    /// zero denominator.
    fn parse_exact(s: &str) -> Option<Self>;

    /// Decimal rendering rounded half away from zero to `digits` places.
    /// Display only; never fed back into computation.
    fn to_fixed(&self, digits: u32) -> String;

    fn to_big_rational(&self) -> BigRational;

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }

    fn midpoint(a: &Self, b: &Self) -> Self {
        (a.clone() + b.clone()) / Self::from_int(2)
    }

    /// Integer power; negative exponents invert.
    fn powi(&self, exp: i64) -> Self {
        let mut base = if exp < 0 {
            Self::one() / self.clone()
        } else {
            self.clone()
        };
        let mut e = exp.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
}

pub(crate) fn fixed_from_big(value: &BigRational, digits: u32) -> String {
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = (value * BigRational::from_integer(scale)).round().to_integer();
    let negative = scaled.is_negative();
    let mut body = scaled.abs().to_string();
    if digits == 0 {
        return if negative { format!("-{body}") } else { body };
    }
    let width = digits as usize + 1;
    if body.len() < width {
        body = format!("{}{}", "0".repeat(width - body.len()), body);
    }
    let split = body.len() - digits as usize;
    let sign = if negative { "-" } else { "" };
    format!("{sign}{}.{}", &body[..split], &body[split..])
}

impl<T> Scalar for Ratio<T>
where
    T: Clone
        + Integer
        + Signed
        + Hash
        + Debug
        + Display
        + FromStr
        + From<i64>
        + Into<BigInt>
        + Send
        + Sync
        + 'static,
{
    fn from_ratio(numer: i64, denom: i64) -> Self {
        Ratio::new(T::from(numer), T::from(denom))
    }

    fn parse_exact(s: &str) -> Option<Self> {
        if s.is_empty() || s.chars().any(char::is_whitespace) {
            return None;
        }
        Ratio::<T>::from_str(s).ok()
    }

    fn to_fixed(&self, digits: u32) -> String {
        fixed_from_big(&self.to_big_rational(), digits)
    }

    fn to_big_rational(&self) -> BigRational {
        BigRational::new(self.numer().clone().into(), self.denom().clone().into())
    }
}
