//! Exact rationals and the extended line with two infinities.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ArithError;

/// Arbitrary-precision rational in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Rational {
        Rational(BigRational::new(num.into(), den.into()))
    }

    pub fn from_int(n: i64) -> Rational {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Rational {
        Rational(BigRational::zero())
    }

    pub fn one() -> Rational {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn abs(&self) -> Rational {
        Rational(self.0.abs())
    }

    pub fn floor(&self) -> Rational {
        Rational(self.0.floor())
    }

    pub fn ceil(&self) -> Rational {
        Rational(self.0.ceil())
    }

    pub fn signum(&self) -> i32 {
        if self.0.is_zero() {
            0
        } else if self.0.is_positive() {
            1
        } else {
            -1
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn to_i64(&self) -> Option<i64> {
        if self.is_integer() {
            self.0.numer().to_i64()
        } else {
            None
        }
    }

    pub fn min(self, other: Rational) -> Rational {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Rational) -> Rational {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn midpoint(&self, other: &Rational) -> Rational {
        (self + other) / Rational::from_int(2)
    }

    /// The rational with the smallest denominator in `[lo, hi]` (Stern-Brocot descent).
    pub fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
        assert!(lo <= hi, "empty interval");
        if lo.is_negative() && !hi.is_negative() {
            return Rational::zero();
        }
        if hi.is_negative() {
            return -Rational::simplest_between(&-hi, &-lo);
        }
        simplest_nonneg(&lo.0, &hi.0)
    }
}

fn simplest_nonneg(lo: &BigRational, hi: &BigRational) -> Rational {
    let fl = lo.floor();
    if &fl == lo {
        return Rational(fl);
    }
    if fl.clone() + BigRational::one() <= *hi {
        return Rational(fl + BigRational::one());
    }
    // lo and hi share the integer part; recurse on reciprocals of the fractional parts.
    let lo_frac = lo - &fl;
    let hi_frac = hi - &fl;
    let inner = simplest_nonneg(&hi_frac.recip(), &lo_frac.recip());
    Rational(fl + inner.0.recip())
}

pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    let mut acc = BigInt::one();
    for v in values {
        acc = acc.lcm(v.denom());
    }
    acc
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Rational(r)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&Rational> for &Rational {
            type Output = Rational;
            fn $m(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$m(&rhs.0))
            }
        }
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational(self.0.$m(rhs.0))
            }
        }
        impl $tr<&Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: &Rational) -> Rational {
                Rational(self.0.$m(&rhs.0))
            }
        }
        impl $tr<Rational> for &Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational((&self.0).$m(rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = ArithError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ArithError::Parse(s.to_string());
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(Rational(BigRational::new(n, d)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        rational_from_json(&v).map_err(serde::de::Error::custom)
    }
}

/// Accepts JSON integers or strings of the form `p/q`.
pub fn rational_from_json(v: &serde_json::Value) -> Result<Rational, ArithError> {
    match v {
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Rational::from_int(i))
            } else {
                Err(ArithError::Parse(n.to_string()))
            }
        }
        serde_json::Value::String(s) => s.parse(),
        other => Err(ArithError::Parse(other.to_string())),
    }
}

/// A rational or one of the two infinities, ordered `-inf < finite < +inf`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtValue {
    NegInf,
    Finite(Rational),
    PosInf,
}

/// Sign of an infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Inf {
    Pos,
    Neg,
}

impl Inf {
    pub fn value(self) -> ExtValue {
        match self {
            Inf::Pos => ExtValue::PosInf,
            Inf::Neg => ExtValue::NegInf,
        }
    }

    pub fn flip(self) -> Inf {
        match self {
            Inf::Pos => Inf::Neg,
            Inf::Neg => Inf::Pos,
        }
    }
}

impl ExtValue {
    pub fn finite(r: Rational) -> ExtValue {
        ExtValue::Finite(r)
    }

    pub fn int(n: i64) -> ExtValue {
        ExtValue::Finite(Rational::from_int(n))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtValue::Finite(_))
    }

    pub fn as_finite(&self) -> Option<&Rational> {
        match self {
            ExtValue::Finite(r) => Some(r),
            _ => None,
        }
    }

    pub fn infinity(&self) -> Option<Inf> {
        match self {
            ExtValue::PosInf => Some(Inf::Pos),
            ExtValue::NegInf => Some(Inf::Neg),
            ExtValue::Finite(_) => None,
        }
    }

    pub fn add(&self, other: &ExtValue) -> Result<ExtValue, ArithError> {
        use ExtValue::*;
        match (self, other) {
            (PosInf, NegInf) | (NegInf, PosInf) => Err(ArithError::IndeterminateSum),
            (PosInf, _) | (_, PosInf) => Ok(PosInf),
            (NegInf, _) | (_, NegInf) => Ok(NegInf),
            (Finite(a), Finite(b)) => Ok(Finite(a + b)),
        }
    }

    pub fn add_rational(&self, r: &Rational) -> ExtValue {
        match self {
            ExtValue::Finite(a) => ExtValue::Finite(a + r),
            inf => inf.clone(),
        }
    }

    /// `c * self`, with `0 * (+-inf) = 0`.
    pub fn scale(&self, c: &Rational) -> ExtValue {
        use ExtValue::*;
        match self {
            Finite(a) => Finite(a * c),
            _ if c.is_zero() => Finite(Rational::zero()),
            PosInf if c.is_positive() => PosInf,
            NegInf if c.is_negative() => PosInf,
            _ => NegInf,
        }
    }

    pub fn neg(&self) -> ExtValue {
        match self {
            ExtValue::NegInf => ExtValue::PosInf,
            ExtValue::PosInf => ExtValue::NegInf,
            ExtValue::Finite(a) => ExtValue::Finite(-a),
        }
    }

    pub fn compare(&self, other: &ExtValue) -> Ordering {
        self.cmp(other)
    }
}

impl From<Rational> for ExtValue {
    fn from(r: Rational) -> Self {
        ExtValue::Finite(r)
    }
}

impl fmt::Display for ExtValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtValue::NegInf => f.write_str("-inf"),
            ExtValue::PosInf => f.write_str("+inf"),
            ExtValue::Finite(r) => write!(f, "{r}"),
        }
    }
}

impl fmt::Debug for ExtValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for ExtValue {
    type Err = ArithError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "+inf" | "inf" => Ok(ExtValue::PosInf),
            "-inf" => Ok(ExtValue::NegInf),
            other => other.parse().map(ExtValue::Finite),
        }
    }
}

impl Serialize for ExtValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match &v {
            serde_json::Value::String(s) => s.parse().map_err(serde::de::Error::custom),
            other => rational_from_json(other)
                .map(ExtValue::Finite)
                .map_err(serde::de::Error::custom),
        }
    }
}

/// Shorthand for tests and golden data: `q("3/4")`.
pub fn q(s: &str) -> Rational {
    s.parse().expect("rational literal")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_and_print() {
        assert_eq!((q("1/2") + q("1/3")).to_string(), "5/6");
        assert_eq!(q("4/2").to_string(), "2");
        assert_eq!(q("-6/4").to_string(), "-3/2");
    }

    #[test]
    fn infinities() {
        let p = ExtValue::PosInf;
        assert_eq!(p.add(&ExtValue::int(-5)).unwrap(), ExtValue::PosInf);
        assert!(matches!(
            p.add(&ExtValue::NegInf),
            Err(ArithError::IndeterminateSum)
        ));
        assert_eq!(p.scale(&Rational::zero()), ExtValue::int(0));
        assert_eq!(p.scale(&q("-2")), ExtValue::NegInf);
        assert!(ExtValue::NegInf < ExtValue::int(-1000));
        assert!(ExtValue::int(1000) < ExtValue::PosInf);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
        assert_eq!("+inf".parse::<ExtValue>().unwrap(), ExtValue::PosInf);
    }

    #[test]
    fn simplest_fraction() {
        assert_eq!(Rational::simplest_between(&q("49/100"), &q("51/100")), q("1/2"));
        assert_eq!(Rational::simplest_between(&q("3/10"), &q("34/100")), q("1/3"));
        assert_eq!(Rational::simplest_between(&q("-51/100"), &q("-49/100")), q("-1/2"));
        assert_eq!(Rational::simplest_between(&q("-1/7"), &q("1/9")), q("0"));
        assert_eq!(Rational::simplest_between(&q("7/3"), &q("7/3")), q("7/3"));
    }
}
