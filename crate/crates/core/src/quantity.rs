//! Exact rational quantities.
//!
//! Every capacity, demand, strategy value, price and flow value in the crate
//! is a [`Quantity`]. Values are kept reduced with a positive denominator and
//! never touch floating point.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Quantity(Rational64);

impl Quantity {
    pub const ZERO: Quantity = Quantity(Rational64::new_raw(0, 1));
    pub const ONE: Quantity = Quantity(Rational64::new_raw(1, 1));

    /// Builds `numer / denom`, reducing. Panics when `denom == 0`.
    pub fn new(numer: i64, denom: i64) -> Self {
        Quantity(Rational64::new(numer, denom))
    }

    pub fn from_integer(value: i64) -> Self {
        Quantity(Rational64::from_integer(value))
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Quantity(self.0.abs())
    }

    /// -1, 0 or 1.
    pub fn signum(&self) -> i32 {
        match self.0.numer().cmp(&0) {
            Ordering::Less => -1,
            Ordering::Equal => 0,
            Ordering::Greater => 1,
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// Largest integer `n` with `n * step <= self`. `step` must be positive.
    pub fn floor_div(&self, step: Quantity) -> i64 {
        let q = self.0 / step.0;
        q.floor().to_integer()
    }

    /// True when `self` is an integer multiple of `step`.
    pub fn is_multiple_of(&self, step: Quantity) -> bool {
        (self.0 / step.0).is_integer()
    }

    /// Greatest quantity `h` such that both values are integer multiples of `h`.
    /// `gcd(0, 0)` is zero.
    pub fn gcd(&self, other: &Quantity) -> Quantity {
        let (a, b) = (self.abs(), other.abs());
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        let numer = a.numer().gcd(&b.numer());
        let denom = a.denom().lcm(&b.denom());
        Quantity::new(numer, denom)
    }

    /// Scales the value to an integer given a common denominator `scale`.
    /// Panics if `scale` is not a multiple of the denominator.
    pub(crate) fn scaled_integer(&self, scale: i64) -> i64 {
        debug_assert_eq!(scale % self.denom(), 0);
        self.numer() * (scale / self.denom())
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{text}` is not an exact rational (expected an integer or `num/den`)")]
pub struct ParseQuantityError {
    pub text: String,
}

impl FromStr for Quantity {
    type Err = ParseQuantityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseQuantityError { text: s.to_string() };
        let trimmed = s.trim();
        match trimmed.split_once('/') {
            Some((n, d)) => {
                let n: i64 = n.trim().parse().map_err(|_| err())?;
                let d: i64 = d.trim().parse().map_err(|_| err())?;
                if d == 0 {
                    return Err(err());
                }
                Ok(Quantity::new(n, d))
            }
            None => trimmed.parse::<i64>().map(Quantity::from_integer).map_err(|_| err()),
        }
    }
}

impl PartialOrd for Quantity {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Quantity {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl From<i64> for Quantity {
    fn from(value: i64) -> Self {
        Quantity::from_integer(value)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Quantity {
            type Output = Quantity;
            fn $method(self, rhs: Quantity) -> Quantity {
                Quantity(self.0.$method(rhs.0))
            }
        }
        impl $trait<&Quantity> for Quantity {
            type Output = Quantity;
            fn $method(self, rhs: &Quantity) -> Quantity {
                Quantity(self.0.$method(rhs.0))
            }
        }
        impl $trait<i64> for Quantity {
            type Output = Quantity;
            fn $method(self, rhs: i64) -> Quantity {
                Quantity(self.0.$method(Rational64::from_integer(rhs)))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl AddAssign for Quantity {
    fn add_assign(&mut self, rhs: Quantity) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Quantity {
    fn sub_assign(&mut self, rhs: Quantity) {
        self.0 -= rhs.0;
    }
}

impl Neg for Quantity {
    type Output = Quantity;
    fn neg(self) -> Quantity {
        Quantity(-self.0)
    }
}

impl Sum for Quantity {
    fn sum<I: Iterator<Item = Quantity>>(iter: I) -> Quantity {
        iter.fold(Quantity::ZERO, |a, b| a + b)
    }
}

impl<'a> Sum<&'a Quantity> for Quantity {
    fn sum<I: Iterator<Item = &'a Quantity>>(iter: I) -> Quantity {
        iter.fold(Quantity::ZERO, |a, b| a + *b)
    }
}

/// Machine output always carries exact text: `"3"` or `"3/2"`.
impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Accepts JSON integers and `"num/den"` (or integer) strings.
impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl serde::de::Visitor<'_> for Visitor {
            type Value = Quantity;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer or an exact rational string \"num/den\"")
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Quantity, E> {
                Ok(Quantity::from_integer(v))
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Quantity, E> {
                i64::try_from(v).map(Quantity::from_integer).map_err(|_| E::custom(format!("integer {v} out of range")))
            }

            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Quantity, E> {
                Err(E::custom(format!("floating-point value {v} is not allowed; write it as \"num/den\"")))
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Quantity, E> {
                v.parse().map_err(E::custom)
            }
        }
        deserializer.deserialize_any(Visitor)
    }
}

/// Least common multiple of the denominators of `values` (1 for an empty input).
pub fn common_denominator<'a, I>(values: I) -> i64
where
    I: IntoIterator<Item = &'a Quantity>,
{
    values.into_iter().fold(1i64, |acc, q| acc.lcm(&q.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Quantity {
        Quantity::new(n, d)
    }

    #[test]
    fn reduced_with_positive_denominator() {
        let v = q(4, -6);
        assert_eq!(v.numer(), -2);
        assert_eq!(v.denom(), 3);
    }

    #[test]
    fn parses_integers_and_fractions() {
        assert_eq!("3/2".parse::<Quantity>().unwrap(), q(3, 2));
        assert_eq!("-7".parse::<Quantity>().unwrap(), q(-7, 1));
        assert_eq!(" 6/4 ".parse::<Quantity>().unwrap(), q(3, 2));
        assert!("1/0".parse::<Quantity>().is_err());
        assert!("1.5".parse::<Quantity>().is_err());
        assert!("abc".parse::<Quantity>().is_err());
    }

    #[test]
    fn display_is_exact() {
        assert_eq!(q(3, 2).to_string(), "3/2");
        assert_eq!(q(-4, 2).to_string(), "-2");
        assert_eq!(Quantity::ZERO.to_string(), "0");
    }

    #[test]
    fn gcd_of_rationals() {
        assert_eq!(q(1, 2).gcd(&q(1, 3)), q(1, 6));
        assert_eq!(q(2, 1).gcd(&q(3, 2)), q(1, 2));
        assert_eq!(Quantity::ZERO.gcd(&q(3, 4)), q(3, 4));
    }

    #[test]
    fn floor_div_and_multiples() {
        assert_eq!(q(5, 2).floor_div(q(1, 2)), 5);
        assert_eq!(q(5, 2).floor_div(Quantity::ONE), 2);
        assert!(q(3, 2).is_multiple_of(q(1, 2)));
        assert!(!q(3, 2).is_multiple_of(Quantity::ONE));
    }

    #[test]
    fn serde_round_trip() {
        let v: Vec<Quantity> = serde_json::from_str(r#"[1, "3/2", "-2", -4]"#).unwrap();
        assert_eq!(v, vec![q(1, 1), q(3, 2), q(-2, 1), q(-4, 1)]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"["1","3/2","-2","-4"]"#);
        assert!(serde_json::from_str::<Quantity>("1.5").is_err());
    }

    #[test]
    fn common_denominator_is_lcm() {
        assert_eq!(common_denominator(&[q(1, 2), q(1, 3), q(5, 1)]), 6);
        assert_eq!(common_denominator(&[]), 1);
    }
}
