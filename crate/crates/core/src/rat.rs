//! `Rat`: an arbitrary-precision rational with a machine-word fast path.
//!
//! Values whose reduced numerator and denominator fit in an `i64` are kept
//! inline and combined with 128-bit intermediate arithmetic; anything larger
//! falls back to [`BigRational`]. The representation is canonical (a value
//! fitting the small form is never stored big), so derived equality and
//! hashing agree with value equality.

use std::cmp::Ordering;
use std::fmt;
use std::hash::Hash;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::scalar::{fixed_from_big, Scalar};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rat(Repr);

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    // den > 0, gcd(num, den) = 1, num != i64::MIN
    Small(i64, i64),
    Big(Box<BigRational>),
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rat {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Self::from_i128(numer as i128, denom as i128)
    }

    pub fn from_integer(n: i64) -> Self {
        Self::new(n, 1)
    }

    fn from_i128(mut n: i128, mut d: i128) -> Self {
        if d < 0 {
            n = -n;
            d = -d;
        }
        let g = gcd_u128(n.unsigned_abs(), d as u128) as i128;
        if g > 1 {
            n /= g;
            d /= g;
        }
        Self::from_reduced_i128(n, d)
    }

    fn from_reduced_i128(n: i128, d: i128) -> Self {
        if n > i64::MIN as i128 && n <= i64::MAX as i128 && d <= i64::MAX as i128 {
            Rat(Repr::Small(n as i64, d as i64))
        } else {
            Rat(Repr::Big(Box::new(BigRational::new_raw(
                BigInt::from(n),
                BigInt::from(d),
            ))))
        }
    }

    pub fn from_big(r: BigRational) -> Self {
        // BigRational arithmetic keeps values reduced with a positive denominator.
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) if n != i64::MIN => Rat(Repr::Small(n, d)),
            _ => Rat(Repr::Big(Box::new(r))),
        }
    }

    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(b) => (**b).clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, _) => BigInt::from(*n),
            Repr::Big(b) => b.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(_, d) => BigInt::from(*d),
            Repr::Big(b) => b.denom().clone(),
        }
    }

    /// True when the value is stored in the inline form.
    pub fn is_small(&self) -> bool {
        matches!(self.0, Repr::Small(..))
    }

    fn signum_i32(&self) -> i32 {
        match &self.0 {
            Repr::Small(n, _) => n.signum() as i32,
            Repr::Big(b) => {
                if Signed::is_positive(b.as_ref()) {
                    1
                } else if Signed::is_negative(b.as_ref()) {
                    -1
                } else {
                    0
                }
            }
        }
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, 1) => write!(f, "{n}"),
            Repr::Small(n, d) => write!(f, "{n}/{d}"),
            Repr::Big(b) => write!(f, "{b}"),
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseRatError(String);

impl fmt::Display for ParseRatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "not a rational: {:?}", self.0)
    }
}

impl std::error::Error for ParseRatError {}

impl FromStr for Rat {
    type Err = ParseRatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseRatError(s.to_string());
        let digits_ok = |t: &str| {
            let t = t.strip_prefix('-').unwrap_or(t);
            !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit())
        };
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        if !digits_ok(num) || !digits_ok(den) {
            return Err(err());
        }
        let n = BigInt::from_str(num).map_err(|_| err())?;
        let d = BigInt::from_str(den).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        Ok(Rat::from_big(BigRational::new(n, d)))
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                if b == d {
                    a.cmp(c)
                } else {
                    (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
                }
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

fn add_ref(x: &Rat, y: &Rat) -> Rat {
    match (&x.0, &y.0) {
        (Repr::Small(a, b), Repr::Small(c, d)) => {
            if b == d {
                Rat::from_i128(*a as i128 + *c as i128, *b as i128)
            } else {
                Rat::from_i128(
                    *a as i128 * *d as i128 + *c as i128 * *b as i128,
                    *b as i128 * *d as i128,
                )
            }
        }
        _ => Rat::from_big(x.to_big() + y.to_big()),
    }
}

fn neg_ref(x: &Rat) -> Rat {
    match &x.0 {
        Repr::Small(a, b) => Rat(Repr::Small(-a, *b)),
        Repr::Big(r) => Rat::from_big(-(**r).clone()),
    }
}

fn mul_ref(x: &Rat, y: &Rat) -> Rat {
    match (&x.0, &y.0) {
        (Repr::Small(a, b), Repr::Small(c, d)) => {
            if *a == 0 || *c == 0 {
                return Rat::zero();
            }
            let g1 = a.unsigned_abs().gcd(&d.unsigned_abs()) as i64;
            let g2 = c.unsigned_abs().gcd(&b.unsigned_abs()) as i64;
            let n = (*a / g1) as i128 * (*c / g2) as i128;
            let m = (*b / g2) as i128 * (*d / g1) as i128;
            Rat::from_reduced_i128(n, m)
        }
        _ => Rat::from_big(x.to_big() * y.to_big()),
    }
}

fn recip_ref(x: &Rat) -> Rat {
    match &x.0 {
        Repr::Small(0, _) => panic!("division by zero"),
        Repr::Small(a, b) => {
            let s = a.signum();
            Rat(Repr::Small(s * *b, a.abs()))
        }
        Repr::Big(r) => Rat::from_big(r.recip()),
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                $body(&self, &rhs)
            }
        }
        impl<'a> $trait<&'a Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &'a Rat) -> Rat {
                $body(&self, rhs)
            }
        }
        impl<'a, 'b> $trait<&'b Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: &'b Rat) -> Rat {
                $body(self, rhs)
            }
        }
    };
}

forward_binop!(Add, add, add_ref);
forward_binop!(Sub, sub, |x: &Rat, y: &Rat| add_ref(x, &neg_ref(y)));
forward_binop!(Mul, mul, mul_ref);
forward_binop!(Div, div, |x: &Rat, y: &Rat| mul_ref(x, &recip_ref(y)));

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        neg_ref(&self)
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        neg_ref(self)
    }
}

impl Zero for Rat {
    fn zero() -> Self {
        Rat(Repr::Small(0, 1))
    }
    fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }
}

impl One for Rat {
    fn one() -> Self {
        Rat(Repr::Small(1, 1))
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Self {
        Rat::from_integer(n)
    }
}

impl Scalar for Rat {
    fn from_ratio(numer: i64, denom: i64) -> Self {
        Rat::new(numer, denom)
    }

    fn parse_exact(s: &str) -> Option<Self> {
        s.parse().ok()
    }

    fn to_fixed(&self, digits: u32) -> String {
        fixed_from_big(&self.to_big(), digits)
    }

    fn to_big_rational(&self) -> BigRational {
        self.to_big()
    }

    fn is_positive(&self) -> bool {
        self.signum_i32() > 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn display_lowest_terms() {
        assert_eq!(Rat::new(2, 4).to_string(), "1/2");
        assert_eq!(Rat::new(-3, -9).to_string(), "1/3");
        assert_eq!(Rat::new(4, -2).to_string(), "-2");
        assert_eq!(Rat::zero().to_string(), "0");
    }

    #[test]
    fn parse_forms() {
        assert_eq!("3/4".parse::<Rat>().unwrap(), Rat::new(3, 4));
        assert_eq!("-6/8".parse::<Rat>().unwrap(), Rat::new(-3, 4));
        assert_eq!("7".parse::<Rat>().unwrap(), Rat::from_integer(7));
        for bad in ["", "1/", "/2", "1/0", "a/b", "1.5", " 1/2", "1/2/3", "+1/2"] {
            assert!(bad.parse::<Rat>().is_err(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn promotes_and_demotes() {
        let huge = Rat::new(i64::MAX, 1);
        let sum = &huge + &huge;
        assert!(!sum.is_small());
        let back = &sum - &huge;
        assert!(back.is_small());
        assert_eq!(back, huge);
        let tiny = Rat::new(1, i64::MAX);
        let sq = &tiny * &tiny;
        assert!(!sq.is_small());
        assert_eq!(&sq / &tiny, tiny);
    }

    #[test]
    fn i64_min_numerator_is_big() {
        let m = Rat::from_big(BigRational::from_integer(BigInt::from(i64::MIN)));
        assert!(!m.is_small());
        assert_eq!(-(-m.clone()), m);
    }

    proptest! {
        #[test]
        fn agrees_with_bigrational(a in -1_000_000_000_000i64..1_000_000_000_000,
                                   b in 1i64..1_000_000_000_000,
                                   c in -1_000_000_000_000i64..1_000_000_000_000,
                                   d in 1i64..1_000_000_000_000) {
            let (x, y) = (Rat::new(a, b), Rat::new(c, d));
            let (bx, by) = (big(a, b), big(c, d));
            prop_assert_eq!((&x + &y).to_big(), &bx + &by);
            prop_assert_eq!((&x - &y).to_big(), &bx - &by);
            prop_assert_eq!((&x * &y).to_big(), &bx * &by);
            if c != 0 {
                prop_assert_eq!((&x / &y).to_big(), &bx / &by);
            }
            prop_assert_eq!(x.cmp(&y), bx.cmp(&by));
            prop_assert_eq!(x.to_string(), bx.to_string());
        }

        #[test]
        fn canonical_repr_after_roundtrip(a in any::<i64>(), b in 1i64..i64::MAX) {
            let x = Rat::from_big(big(a, b));
            let y = Rat::from_big(x.to_big() * big(3, 1) / big(3, 1));
            prop_assert_eq!(x.is_small(), y.is_small());
            prop_assert_eq!(x, y);
        }
    }
}
