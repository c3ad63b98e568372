//! Exact field arithmetic over Q and F_p, plus integer binomials.
//!
//! A [`Scalar`] carries its field with it. Mixing fields is an error for the
//! `checked_*` methods and a panic for the operator impls, in the same way
//! that integer division by zero panics.

mod rational;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub use rational::Rational;

/// Coefficient field descriptor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    Rational,
    Prime(u64),
}

impl Field {
    /// The prime field F_p; rejects composite moduli.
    pub fn prime(p: u64) -> Result<Field> {
        if is_prime(p) {
            Ok(Field::Prime(p))
        } else {
            Err(Error::NotPrime(p))
        }
    }

    pub fn characteristic(&self) -> u64 {
        match self {
            Field::Rational => 0,
            Field::Prime(p) => *p,
        }
    }

    /// Parses `q`, `Q`, `p5`, `F5`, `F_5` or a bare prime.
    pub fn parse(text: &str) -> Result<Field> {
        let t = text.trim();
        if t.eq_ignore_ascii_case("q") {
            return Ok(Field::Rational);
        }
        let digits = t
            .trim_start_matches(['p', 'P', 'f', 'F'])
            .trim_start_matches('_');
        let p: u64 = digits
            .parse()
            .map_err(|_| Error::Input(format!("unrecognized field `{text}`")))?;
        Field::prime(p)
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Rational => write!(f, "Q"),
            Field::Prime(p) => write!(f, "F_{p}"),
        }
    }
}

/// Deterministic Miller-Rabin for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &w in &WITNESSES {
        if n.is_multiple_of(w) {
            return n == w;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'outer: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// An exact element of Q or F_p in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Scalar(Repr);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Repr {
    Q(Rational),
    /// Residue in `[0, modulus)`; modulus checked prime via [`Field::prime`].
    Fp { value: u64, modulus: u64 },
}

impl Scalar {
    pub fn zero(field: Field) -> Self {
        Self::from_i64(field, 0)
    }

    pub fn one(field: Field) -> Self {
        Self::from_i64(field, 1)
    }

    pub fn from_i64(field: Field, n: i64) -> Self {
        match field {
            Field::Rational => Scalar(Repr::Q(Rational::from_integer(n))),
            Field::Prime(p) => Scalar(Repr::Fp {
                value: (n as i128).rem_euclid(p as i128) as u64,
                modulus: p,
            }),
        }
    }

    /// Image of an integer in the field.
    pub fn from_bigint(field: Field, n: &BigInt) -> Self {
        match field {
            Field::Rational => Scalar(Repr::Q(Rational::from_bigint(n.clone()))),
            Field::Prime(p) => {
                let m = BigInt::from(p);
                let mut r = n % &m;
                if r.sign() == Sign::Minus {
                    r += &m;
                }
                Scalar(Repr::Fp {
                    value: r.to_u64().expect("residue below modulus"),
                    modulus: p,
                })
            }
        }
    }

    pub fn from_biguint(field: Field, n: &BigUint) -> Self {
        Self::from_bigint(field, &BigInt::from(n.clone()))
    }

    /// `numer / denom` in the given field.
    pub fn fraction(field: Field, numer: &BigInt, denom: &BigInt) -> Result<Self> {
        match field {
            Field::Rational => Rational::new(numer.clone(), denom.clone())
                .map(|r| Scalar(Repr::Q(r)))
                .ok_or(Error::DivisionByZero),
            Field::Prime(_) => {
                Self::from_bigint(field, numer).checked_div(&Self::from_bigint(field, denom))
            }
        }
    }

    pub fn from_rational(r: Rational) -> Self {
        Scalar(Repr::Q(r))
    }

    pub fn field(&self) -> Field {
        match &self.0 {
            Repr::Q(_) => Field::Rational,
            Repr::Fp { modulus, .. } => Field::Prime(*modulus),
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match &self.0 {
            Repr::Q(r) => Some(r),
            Repr::Fp { .. } => None,
        }
    }

    /// The residue, for prime-field scalars.
    pub fn residue(&self) -> Option<u64> {
        match &self.0 {
            Repr::Q(_) => None,
            Repr::Fp { value, .. } => Some(*value),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.0 {
            Repr::Q(r) => r.is_zero(),
            Repr::Fp { value, .. } => *value == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match &self.0 {
            Repr::Q(r) => r.is_one(),
            Repr::Fp { value, .. } => *value == 1,
        }
    }

    fn same_field(&self, other: &Self) -> Result<()> {
        let (a, b) = (self.field(), other.field());
        if a == b {
            Ok(())
        } else {
            Err(Error::FieldMismatch(a, b))
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self.add_unchecked(other))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self.add_unchecked(&other.negate()))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self.mul_unchecked(&other.inverse()?))
    }

    pub fn negate(&self) -> Self {
        match &self.0 {
            Repr::Q(r) => Scalar(Repr::Q(r.neg())),
            Repr::Fp { value, modulus } => Scalar(Repr::Fp {
                value: if *value == 0 { 0 } else { modulus - value },
                modulus: *modulus,
            }),
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(match &self.0 {
            Repr::Q(r) => Scalar(Repr::Q(r.recip().expect("nonzero"))),
            Repr::Fp { value, modulus } => Scalar(Repr::Fp {
                value: pow_mod(*value, modulus - 2, *modulus),
                modulus: *modulus,
            }),
        })
    }

    pub fn pow(&self, mut exp: u64) -> Self {
        let mut acc = Self::one(self.field());
        let mut base = self.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul_unchecked(&base);
            }
            base = base.mul_unchecked(&base);
            exp >>= 1;
        }
        acc
    }

    fn add_unchecked(&self, other: &Self) -> Self {
        match (&self.0, &other.0) {
            (Repr::Q(a), Repr::Q(b)) => Scalar(Repr::Q(a.add(b))),
            (Repr::Fp { value: a, modulus }, Repr::Fp { value: b, .. }) => {
                let s = *a as u128 + *b as u128;
                Scalar(Repr::Fp {
                    value: (s % *modulus as u128) as u64,
                    modulus: *modulus,
                })
            }
            _ => panic!("{}", Error::FieldMismatch(self.field(), other.field())),
        }
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        match (&self.0, &other.0) {
            (Repr::Q(a), Repr::Q(b)) => Scalar(Repr::Q(a.mul(b))),
            (Repr::Fp { value: a, modulus }, Repr::Fp { value: b, .. }) => Scalar(Repr::Fp {
                value: mul_mod(*a, *b, *modulus),
                modulus: *modulus,
            }),
            _ => panic!("{}", Error::FieldMismatch(self.field(), other.field())),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Q(r) => write!(f, "{r}"),
            Repr::Fp { value, modulus } => write!(f, "{value} mod {modulus}"),
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                self.$checked(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);
forward_binop!(Div, div, checked_div);

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        self.negate()
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        self.negate()
    }
}

/// Exact `C(n, j)`, zero when `j > n`.
pub fn binomial(n: u64, j: u64) -> BigUint {
    if j > n {
        return BigUint::zero();
    }
    let j = j.min(n - j);
    let mut acc = BigUint::one();
    for i in 0..j {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// `C(n, j)` as an element of `field` (reduced mod p for prime fields).
pub fn binomial_scalar(field: Field, n: u64, j: u64) -> Scalar {
    Scalar::from_biguint(field, &binomial(n, j))
}
