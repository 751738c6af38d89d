//! Exact rationals, finite bit strings and dyadic cylinders.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::interval::Interval;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        let den = den.into();
        assert!(!den.is_zero(), "zero denominator");
        Rational(BigRational::new(num.into(), den))
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// `2^-k` for any integer `k`.
    pub fn pow2(k: i64) -> Self {
        let p = BigInt::one() << k.unsigned_abs();
        if k >= 0 {
            Rational::from_int(p).recip()
        } else {
            Rational::from_int(p)
        }
    }

    pub fn dyadic(num: impl Into<BigInt>, k: u32) -> Self {
        Rational(BigRational::new(num.into(), BigInt::one() << k))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        Rational(self.0.recip())
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    pub fn min(self, other: Self) -> Self {
        std::cmp::min(self, other)
    }

    pub fn max(self, other: Self) -> Self {
        std::cmp::max(self, other)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Rational::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// True when the denominator is a power of two.
    pub fn is_dyadic(&self) -> bool {
        let d = self.denom();
        (d & (d - BigInt::one())).is_zero()
    }

    /// Exponent `b` with denominator `2^b`, if dyadic.
    pub fn dyadic_exponent(&self) -> Option<u64> {
        self.is_dyadic().then(|| self.denom().bits() - 1)
    }

    /// `floor(self * 2^k) / 2^k`.
    pub fn floor_dyadic(&self, k: u32) -> Self {
        Rational::dyadic((self * &Rational::pow2(-(k as i64))).floor(), k)
    }

    /// `ceil(self * 2^k) / 2^k`.
    pub fn ceil_dyadic(&self, k: u32) -> Self {
        Rational::dyadic((self * &Rational::pow2(-(k as i64))).ceil(), k)
    }

    pub fn in_unit(&self) -> bool {
        !self.is_negative() && *self <= Rational::one()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn midpoint(&self, other: &Self) -> Self {
        (self + other) * Rational::new(1, 2)
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
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ParseRational(s.to_string());
        let t = s.trim();
        let (n, d) = match t.split_once('/') {
            Some((n, d)) => (n, d),
            None => (t, "1"),
        };
        let valid = |x: &str, signed: bool| {
            let digits = if signed {
                x.strip_prefix('-').unwrap_or(x)
            } else {
                x
            };
            !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
        };
        if !valid(n, true) || !valid(d, false) {
            return Err(bad());
        }
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(Rational(BigRational::new(n, d)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", self.0.numer(), self.0.denom()))
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
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
            fn $m(self, o: &Rational) -> Rational {
                Rational((&self.0).$m(&o.0))
            }
        }
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $m(self, o: Rational) -> Rational {
                Rational(self.0.$m(o.0))
            }
        }
        impl $tr<&Rational> for Rational {
            type Output = Rational;
            fn $m(self, o: &Rational) -> Rational {
                Rational(self.0.$m(&o.0))
            }
        }
        impl $tr<Rational> for &Rational {
            type Output = Rational;
            fn $m(self, o: Rational) -> Rational {
                Rational((&self.0).$m(o.0))
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

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, o: &Rational) {
        self.0 += &o.0;
    }
}

impl AddAssign for Rational {
    fn add_assign(&mut self, o: Rational) {
        self.0 += o.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, o: &Rational) {
        self.0 -= &o.0;
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

impl<'a> std::iter::Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

/// Shorthand constructor used throughout tests and generators.
pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

/// Finite binary string.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn empty() -> Self {
        BitString(Vec::new())
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, b: bool) -> Self {
        let mut v = self.0.clone();
        v.push(b);
        BitString(v)
    }

    pub fn push(&mut self, b: bool) {
        self.0.push(b);
    }

    pub fn prefix(&self, n: usize) -> Self {
        BitString(self.0[..n.min(self.len())].to_vec())
    }

    pub fn parent(&self) -> Option<Self> {
        (!self.is_empty()).then(|| self.prefix(self.len() - 1))
    }

    pub fn concat(&self, other: &BitString) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        BitString(v)
    }

    /// `self ⪯ other`.
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn comparable(&self, other: &BitString) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// The integer whose binary numeral is this string.
    pub fn index(&self) -> BigInt {
        self.0
            .iter()
            .fold(BigInt::zero(), |acc, &b| (acc << 1) + if b { 1 } else { 0 })
    }

    /// `index()` of the first `n` bits as a machine word; `n` must be below 64.
    pub fn prefix_index(&self, n: usize) -> u64 {
        debug_assert!(n < 64 && n <= self.len());
        self.0[..n]
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    /// String of length `len` spelling `index` in binary.
    pub fn from_index(index: &BigInt, len: usize) -> Self {
        BitString(
            (0..len)
                .rev()
                .map(|i| ((index >> i) & BigInt::one()).is_one())
                .collect(),
        )
    }

    /// `0.σ`.
    pub fn left_endpoint(&self) -> Rational {
        Rational::dyadic(self.index(), self.len() as u32)
    }

    /// `[0.σ, 0.σ + 2^-|σ|]`.
    pub fn cylinder(&self) -> Interval {
        let lo = self.left_endpoint();
        let hi = &lo + Rational::pow2(self.len() as i64);
        Interval::new_unchecked(lo, hi)
    }

    /// `2^-|σ|`.
    pub fn weight(&self) -> Rational {
        Rational::pow2(self.len() as i64)
    }

    /// All strings of length `n` in lexicographic order.
    pub fn all_of_length(n: usize) -> impl Iterator<Item = BitString> {
        let count: u64 = 1 << n;
        (0..count).map(move |i| BitString::from_index(&BigInt::from(i), n))
    }

    /// Strings extending `self` of total length `≤ depth`, in breadth-first order.
    pub fn extensions_up_to(&self, depth: usize) -> Vec<BitString> {
        let mut out = vec![self.clone()];
        let mut i = 0;
        while i < out.len() {
            if out[i].len() < depth {
                let s = out[i].clone();
                out.push(s.child(false));
                out.push(s.child(true));
            }
            i += 1;
        }
        out
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.bytes()
            .map(|b| match b {
                b'0' => Ok(false),
                b'1' => Ok(true),
                _ => Err(Error::ParseBitString(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which binary expansion to use at a dyadic rational.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expansion {
    #[default]
    Reject,
    Lower,
    Upper,
}

pub fn cylinder_interval(sigma: &BitString) -> Interval {
    sigma.cylinder()
}

/// First `n` bits of a binary expansion of `x`.
pub fn binary_prefix(x: &Rational, n: usize, expansion: Expansion) -> Result<BitString> {
    if !x.in_unit() {
        return Err(Error::OutOfUnitInterval { value: x.clone() });
    }
    let scaled = x * Rational::pow2(-(n as i64));
    let exact = scaled.denom().is_one();
    let dyadic = x.is_dyadic();
    if dyadic && expansion == Expansion::Reject {
        return Err(Error::AmbiguousExpansion { value: x.clone() });
    }
    let mut idx = scaled.floor();
    let top = BigInt::one() << n;
    // On an exact grid point the lower expansion ends in 1s, so step left.
    if exact && (expansion == Expansion::Lower || idx == top) && !idx.is_zero() {
        idx -= 1;
    }
    if idx == top {
        idx -= 1;
    }
    Ok(BitString::from_index(&idx, n))
}

/// A point as a dyadic rational `a·2^-b`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicPoint(Rational);

impl DyadicPoint {
    pub fn new(value: Rational) -> Option<Self> {
        value.is_dyadic().then_some(DyadicPoint(value))
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }
}

/// Least common multiple of the denominators.
pub fn lcm_denominators<'a>(vals: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    vals.into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}
