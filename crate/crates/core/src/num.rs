//! Exact rational scalar used for every allocation, credit and utility.
//!
//! `Num` is kept in canonical reduced form, so equality and ordering are
//! exact. Values whose numerator and denominator fit in an `i64` are stored
//! inline and combined with 128-bit intermediates; anything larger falls back
//! to an arbitrary-precision rational. The only lossy path is
//! [`Num::to_f64`], which is reserved for metric output.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseNumError {
    #[error("empty number literal")]
    Empty,
    #[error("invalid number literal `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

// Invariant: `Small` has `d > 0`, `gcd(n, d) = 1` and `n != i64::MIN`;
// `Big` only holds values that do not fit `Small`.
#[derive(Clone, PartialEq, Eq)]
enum Repr {
    Small { n: i64, d: i64 },
    Big(Box<BigRational>),
}

/// Exact rational number.
#[derive(Clone, PartialEq, Eq)]
pub struct Num(Repr);

fn fits(v: i128) -> bool {
    v > i64::MIN as i128 && v <= i64::MAX as i128
}

impl Num {
    fn small(n: i128, d: i128) -> Num {
        assert!(d != 0, "zero denominator");
        let (mut n, mut d) = if d < 0 { (-n, -d) } else { (n, d) };
        let g = n.gcd(&d);
        if g > 1 {
            n /= g;
            d /= g;
        }
        if fits(n) && fits(d) {
            Num(Repr::Small {
                n: n as i64,
                d: d as i64,
            })
        } else {
            Num(Repr::Big(Box::new(BigRational::new_raw(
                BigInt::from(n),
                BigInt::from(d),
            ))))
        }
    }

    fn from_big(r: BigRational) -> Num {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) if n != i64::MIN => Num(Repr::Small { n, d }),
            _ => Num(Repr::Big(Box::new(r))),
        }
    }

    fn big(&self) -> BigRational {
        match &self.0 {
            Repr::Small { n, d } => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(r) => (**r).clone(),
        }
    }

    pub fn zero() -> Self {
        Num(Repr::Small { n: 0, d: 1 })
    }

    pub fn one() -> Self {
        Num(Repr::Small { n: 1, d: 1 })
    }

    pub fn from_int(v: i64) -> Self {
        Num::small(v as i128, 1)
    }

    /// `numer / denom`. Panics on a zero denominator.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        Num::small(numer as i128, denom as i128)
    }

    /// Exact value of a finite `f64` (every finite double is a dyadic rational).
    pub fn from_f64_exact(v: f64) -> Option<Self> {
        BigRational::from_float(v).map(Num::from_big)
    }

    fn signum(&self) -> Ordering {
        match &self.0 {
            Repr::Small { n, .. } => n.cmp(&0),
            Repr::Big(r) => {
                if r.is_positive() {
                    Ordering::Greater
                } else if r.is_negative() {
                    Ordering::Less
                } else {
                    Ordering::Equal
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.signum() == Ordering::Equal
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small { d, .. } => *d == 1,
            Repr::Big(r) => r.is_integer(),
        }
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// Panics on zero.
    pub fn recip(&self) -> Self {
        match &self.0 {
            Repr::Small { n, d } => Num::small(*d as i128, *n as i128),
            Repr::Big(r) => Num::from_big(r.recip()),
        }
    }

    /// Smallest integer `>= self`.
    pub fn ceil(&self) -> Self {
        match &self.0 {
            Repr::Small { n, d } => Num::from_int(n.div_ceil(d)),
            Repr::Big(r) => Num::from_big(r.ceil()),
        }
    }

    /// Largest integer `<= self`.
    pub fn floor(&self) -> Self {
        match &self.0 {
            Repr::Small { n, d } => Num::from_int(n.div_floor(d)),
            Repr::Big(r) => Num::from_big(r.floor()),
        }
    }

    pub fn min_of(a: &Num, b: &Num) -> Num {
        if a <= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    pub fn max_of(a: &Num, b: &Num) -> Num {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    /// `min(max(self, lo), hi)`; `hi = None` means no upper limit.
    pub fn clamp_to(&self, lo: &Num, hi: Option<&Num>) -> Num {
        let v = if self < lo { lo } else { self };
        match hi {
            Some(h) if v > h => h.clone(),
            _ => v.clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small { n, .. } => BigInt::from(*n),
            Repr::Big(r) => r.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small { d, .. } => BigInt::from(*d),
            Repr::Big(r) => r.denom().clone(),
        }
    }

    /// Lossy conversion; metrics and CSV output only.
    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small { n, d } => {
                if n.unsigned_abs() < (1 << 53) && *d < (1 << 53) {
                    *n as f64 / *d as f64
                } else {
                    self.big().to_f64().unwrap_or(f64::NAN)
                }
            }
            Repr::Big(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn to_rational(&self) -> BigRational {
        self.big()
    }
}

impl Default for Num {
    fn default() -> Self {
        Num::zero()
    }
}

impl Hash for Num {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match &self.0 {
            Repr::Small { n, d } => {
                n.hash(state);
                d.hash(state);
            }
            Repr::Big(r) => r.hash(state),
        }
    }
}

impl Ord for Num {
    fn cmp(&self, other: &Num) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small { n: a, d: b }, Repr::Small { n: c, d: e }) => {
                if b == e {
                    a.cmp(c)
                } else {
                    (*a as i128 * *e as i128).cmp(&(*c as i128 * *b as i128))
                }
            }
            _ => self.big().cmp(&other.big()),
        }
    }
}

impl PartialOrd for Num {
    fn partial_cmp(&self, other: &Num) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<i64> for Num {
    fn from(v: i64) -> Self {
        Num::from_int(v)
    }
}

impl From<BigRational> for Num {
    fn from(v: BigRational) -> Self {
        Num::from_big(v)
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small { n, d: 1 } => write!(f, "{n}"),
            Repr::Small { n, d } => write!(f, "{n}/{d}"),
            Repr::Big(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Repr::Big(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

impl fmt::Debug for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_int(s: &str, whole: &str) -> Result<BigInt, ParseNumError> {
    let digits = s.strip_prefix('+').unwrap_or(s);
    if digits.is_empty() || !digits.trim_start_matches('-').bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseNumError::Invalid(whole.to_string()));
    }
    digits
        .parse::<BigInt>()
        .map_err(|_| ParseNumError::Invalid(whole.to_string()))
}

impl FromStr for Num {
    type Err = ParseNumError;

    /// Accepts `p/q`, integers and plain decimals (`0.25`, `-1.5`).
    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        let s = raw.trim();
        if s.is_empty() {
            return Err(ParseNumError::Empty);
        }
        if let Some((n, d)) = s.split_once('/') {
            let n = parse_int(n.trim(), s)?;
            let d = parse_int(d.trim(), s)?;
            if d.is_zero() {
                return Err(ParseNumError::ZeroDenominator(s.to_string()));
            }
            return Ok(Num::from_big(BigRational::new(n, d)));
        }
        if let Some((int_part, frac_part)) = s.split_once('.') {
            let negative = int_part.starts_with('-');
            let int_digits = int_part.trim_start_matches(['-', '+']);
            if frac_part.is_empty() && int_digits.is_empty() {
                return Err(ParseNumError::Invalid(s.to_string()));
            }
            if !int_digits.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(ParseNumError::Invalid(s.to_string()));
            }
            let joined = format!("{int_digits}{frac_part}");
            let mut numer: BigInt = joined.parse().map_err(|_| ParseNumError::Invalid(s.to_string()))?;
            if negative {
                numer = -numer;
            }
            let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
            return Ok(Num::from_big(BigRational::new(numer, denom)));
        }
        Ok(Num::from_big(BigRational::from_integer(parse_int(s, s)?)))
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

struct NumVisitor;

impl<'de> Visitor<'de> for NumVisitor {
    type Value = Num;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a rational string such as \"3/2\" or an integer")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
        v.parse().map_err(E::custom)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
        Ok(Num::from_int(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
        Ok(Num::small(v as i128, 1))
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Num, D::Error> {
        deserializer.deserialize_any(NumVisitor)
    }
}

fn add(a: &Num, b: &Num) -> Num {
    match (&a.0, &b.0) {
        (Repr::Small { n: p, d: q }, Repr::Small { n: r, d: s }) => {
            if q == s {
                Num::small(*p as i128 + *r as i128, *q as i128)
            } else {
                let (p, q, r, s) = (*p as i128, *q as i128, *r as i128, *s as i128);
                Num::small(p * s + r * q, q * s)
            }
        }
        _ => Num::from_big(a.big() + b.big()),
    }
}

fn sub(a: &Num, b: &Num) -> Num {
    add(a, &-b)
}

fn mul(a: &Num, b: &Num) -> Num {
    match (&a.0, &b.0) {
        (Repr::Small { n: p, d: q }, Repr::Small { n: r, d: s }) => {
            Num::small(*p as i128 * *r as i128, *q as i128 * *s as i128)
        }
        _ => Num::from_big(a.big() * b.big()),
    }
}

fn div(a: &Num, b: &Num) -> Num {
    mul(a, &b.recip())
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $f:ident) => {
        impl $trait<Num> for Num {
            type Output = Num;
            fn $method(self, rhs: Num) -> Num {
                $f(&self, &rhs)
            }
        }
        impl<'a> $trait<&'a Num> for Num {
            type Output = Num;
            fn $method(self, rhs: &'a Num) -> Num {
                $f(&self, rhs)
            }
        }
        impl<'a> $trait<Num> for &'a Num {
            type Output = Num;
            fn $method(self, rhs: Num) -> Num {
                $f(self, &rhs)
            }
        }
        impl<'a, 'b> $trait<&'b Num> for &'a Num {
            type Output = Num;
            fn $method(self, rhs: &'b Num) -> Num {
                $f(self, rhs)
            }
        }
    };
}

forward_binop!(Add, add, add);
forward_binop!(Sub, sub, sub);
forward_binop!(Mul, mul, mul);
forward_binop!(Div, div, div);

impl Neg for &Num {
    type Output = Num;
    fn neg(self) -> Num {
        match &self.0 {
            Repr::Small { n, d } => Num(Repr::Small { n: -n, d: *d }),
            Repr::Big(r) => Num(Repr::Big(Box::new(-&**r))),
        }
    }
}

impl Neg for Num {
    type Output = Num;
    fn neg(self) -> Num {
        -&self
    }
}

impl AddAssign<&Num> for Num {
    fn add_assign(&mut self, rhs: &Num) {
        *self = add(self, rhs);
    }
}

impl AddAssign<Num> for Num {
    fn add_assign(&mut self, rhs: Num) {
        *self = add(self, &rhs);
    }
}

impl SubAssign<&Num> for Num {
    fn sub_assign(&mut self, rhs: &Num) {
        *self = sub(self, rhs);
    }
}

impl SubAssign<Num> for Num {
    fn sub_assign(&mut self, rhs: Num) {
        *self = sub(self, &rhs);
    }
}

impl Sum for Num {
    fn sum<I: Iterator<Item = Num>>(iter: I) -> Num {
        iter.fold(Num::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Num> for Num {
    fn sum<I: Iterator<Item = &'a Num>>(iter: I) -> Num {
        let mut acc = Num::zero();
        for x in iter {
            acc += x;
        }
        acc
    }
}

impl PartialEq<i64> for Num {
    fn eq(&self, other: &i64) -> bool {
        matches!(self.0, Repr::Small { n, d: 1 } if n == *other)
    }
}

impl PartialOrd<i64> for Num {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        Some(self.cmp(&Num::from_int(*other)))
    }
}

/// Shorthand used throughout tests and fixtures: `q("3/2")`.
///
/// Panics on malformed input.
pub fn q(s: &str) -> Num {
    s.parse().unwrap_or_else(|e| panic!("bad rational literal {s:?}: {e}"))
}

/// Parse a list of rationals.
pub fn qs(items: &[&str]) -> Vec<Num> {
    items.iter().map(|s| q(s)).collect()
}

/// Vector of integers as `Num`s.
pub fn ints(items: &[i64]) -> Vec<Num> {
    items.iter().map(|&v| Num::from_int(v)).collect()
}
