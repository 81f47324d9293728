//! Exact scalars over a prime field GF(p) or the rationals.
//!
//! Every [`Scalar`] carries its field, so mixing fields is detected at the
//! point of use. The checked operations (`try_add`, `try_div`, ...) are the
//! public contract; the operator impls on `&Scalar` assume both operands come
//! from the same field and panic otherwise. Vector-level code checks fields
//! once per vector and then uses the operators.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Largest admissible prime modulus (exclusive).
pub const MAX_PRIME: u32 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldSpec {
    Prime(u32),
    Rationals,
}

fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl FieldSpec {
    pub fn prime(p: u32) -> Result<Self> {
        if !(2..MAX_PRIME).contains(&p) {
            return Err(Error::InvalidField(format!(
                "modulus {p} outside [2, {MAX_PRIME})"
            )));
        }
        if !is_prime(p) {
            return Err(Error::InvalidField(format!("{p} is not prime")));
        }
        Ok(FieldSpec::Prime(p))
    }

    pub fn gf2() -> Self {
        FieldSpec::Prime(2)
    }

    pub fn zero(self) -> Scalar {
        match self {
            FieldSpec::Prime(p) => Scalar::Residue { p, r: 0 },
            FieldSpec::Rationals => Scalar::Rational(BigRational::zero()),
        }
    }

    pub fn one(self) -> Scalar {
        match self {
            FieldSpec::Prime(p) => Scalar::Residue { p, r: 1 },
            FieldSpec::Rationals => Scalar::Rational(BigRational::one()),
        }
    }

    /// Image of an integer in the field.
    pub fn from_int(self, n: i64) -> Scalar {
        match self {
            FieldSpec::Prime(p) => Scalar::Residue {
                p,
                r: n.rem_euclid(p as i64) as u32,
            },
            FieldSpec::Rationals => Scalar::Rational(BigRational::from_integer(BigInt::from(n))),
        }
    }

    pub fn ratio(self, num: i64, den: i64) -> Result<Scalar> {
        self.from_int(num).try_div(&self.from_int(den))
    }

    /// Parses the text encoding: a residue for GF(p) (any integer is reduced),
    /// `a` or `a/b` for the rationals.
    pub fn parse_scalar(self, text: &str) -> Result<Scalar> {
        let bad = || Error::MalformedScalar {
            text: text.to_string(),
            field: self.to_string(),
        };
        let t = text.trim();
        match self {
            FieldSpec::Prime(p) => {
                let n: i64 = t.parse().map_err(|_| bad())?;
                Ok(Scalar::Residue {
                    p,
                    r: n.rem_euclid(p as i64) as u32,
                })
            }
            FieldSpec::Rationals => {
                let (num, den) = match t.split_once('/') {
                    Some((a, b)) => (a, b),
                    None => (t, "1"),
                };
                let num: BigInt = num.trim().parse().map_err(|_| bad())?;
                let den: BigInt = den.trim().parse().map_err(|_| bad())?;
                if den.is_zero() {
                    return Err(bad());
                }
                Ok(Scalar::Rational(BigRational::new(num, den)))
            }
        }
    }

    /// All elements, for finite fields.
    pub fn elements(self) -> Option<Vec<Scalar>> {
        match self {
            FieldSpec::Prime(p) => Some((0..p).map(|r| Scalar::Residue { p, r }).collect()),
            FieldSpec::Rationals => None,
        }
    }

    pub fn characteristic(self) -> u32 {
        match self {
            FieldSpec::Prime(p) => p,
            FieldSpec::Rationals => 0,
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Prime(p) => write!(f, "gf{p}"),
            FieldSpec::Rationals => f.write_str("q"),
        }
    }
}

impl FromStr for FieldSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "q" || s == "Q" {
            return Ok(FieldSpec::Rationals);
        }
        let digits = s
            .strip_prefix("gf")
            .or_else(|| s.strip_prefix("GF"))
            .ok_or_else(|| Error::InvalidField(s.to_string()))?;
        let p: u32 = digits
            .parse()
            .map_err(|_| Error::InvalidField(s.to_string()))?;
        FieldSpec::prime(p)
    }
}

impl serde::Serialize for FieldSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for FieldSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An exact field element in canonical form: residues in `0..p`, fractions in
/// lowest terms with positive denominator.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Scalar {
    Residue { p: u32, r: u32 },
    Rational(BigRational),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Checked binary arithmetic.
pub fn scalar_arith(a: &Scalar, b: &Scalar, op: ArithOp) -> Result<Scalar> {
    match op {
        ArithOp::Add => a.try_add(b),
        ArithOp::Sub => a.try_sub(b),
        ArithOp::Mul => a.try_mul(b),
        ArithOp::Div => a.try_div(b),
    }
}

pub fn scalar_inv(a: &Scalar) -> Result<Scalar> {
    a.inv()
}

fn mod_inv(a: u32, p: u32) -> u32 {
    // extended Euclid on i64; p < 2^16 so nothing overflows
    let (mut t, mut new_t) = (0i64, 1i64);
    let (mut r, mut new_r) = (p as i64, a as i64);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    t.rem_euclid(p as i64) as u32
}

impl Scalar {
    pub fn spec(&self) -> FieldSpec {
        match self {
            Scalar::Residue { p, .. } => FieldSpec::Prime(*p),
            Scalar::Rational(_) => FieldSpec::Rationals,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Residue { r, .. } => *r == 0,
            Scalar::Rational(q) => q.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Residue { r, .. } => *r == 1,
            Scalar::Rational(q) => q.is_one(),
        }
    }

    fn check(&self, other: &Scalar) -> Result<()> {
        if self.spec() != other.spec() {
            return Err(Error::mismatch(self.spec(), other.spec()));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Scalar) -> Result<Scalar> {
        self.check(other)?;
        Ok(self + other)
    }

    pub fn try_sub(&self, other: &Scalar) -> Result<Scalar> {
        self.check(other)?;
        Ok(self - other)
    }

    pub fn try_mul(&self, other: &Scalar) -> Result<Scalar> {
        self.check(other)?;
        Ok(self * other)
    }

    pub fn try_div(&self, other: &Scalar) -> Result<Scalar> {
        self.check(other)?;
        Ok(self * &other.inv()?)
    }

    pub fn inv(&self) -> Result<Scalar> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(match self {
            Scalar::Residue { p, r } => Scalar::Residue {
                p: *p,
                r: mod_inv(*r, *p),
            },
            Scalar::Rational(q) => Scalar::Rational(q.recip()),
        })
    }

    /// Text encoding: decimal residue, or `a/b` with `b` omitted when 1.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Residue { r, .. } => write!(f, "{r}"),
            Scalar::Rational(q) => {
                if q.denom().is_one() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
        }
    }
}

macro_rules! same_field_op {
    ($trait:ident, $method:ident, $res:expr, $rat:expr) => {
        impl<'a> $trait<&'a Scalar> for &'a Scalar {
            type Output = Scalar;

            fn $method(self, rhs: &'a Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Residue { p, r: a }, Scalar::Residue { p: q, r: b }) if p == q => {
                        let f: fn(u64, u64, u64) -> u64 = $res;
                        Scalar::Residue {
                            p: *p,
                            r: f(*a as u64, *b as u64, *p as u64) as u32,
                        }
                    }
                    (Scalar::Rational(a), Scalar::Rational(b)) => {
                        let f: fn(&BigRational, &BigRational) -> BigRational = $rat;
                        Scalar::Rational(f(a, b))
                    }
                    _ => panic!("field mismatch: {} vs {}", self.spec(), rhs.spec()),
                }
            }
        }
    };
}

same_field_op!(Add, add, |a, b, p| (a + b) % p, |a, b| a + b);
same_field_op!(Sub, sub, |a, b, p| (a + p - b) % p, |a, b| a - b);
same_field_op!(Mul, mul, |a, b, p| (a * b) % p, |a, b| a * b);

impl Neg for &Scalar {
    type Output = Scalar;

    fn neg(self) -> Scalar {
        match self {
            Scalar::Residue { p, r } => Scalar::Residue {
                p: *p,
                r: (*p - *r) % *p,
            },
            Scalar::Rational(q) => Scalar::Rational(-q),
        }
    }
}

impl Scalar {
    /// Sign of a rational, `1` for nonzero residues; used only for display ordering.
    pub fn is_negative(&self) -> bool {
        match self {
            Scalar::Residue { .. } => false,
            Scalar::Rational(q) => q.is_negative(),
        }
    }
}
