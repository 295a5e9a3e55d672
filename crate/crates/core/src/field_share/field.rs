//! Arithmetic in the Mersenne prime field GF(2^61 - 1).

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// The field modulus, `2^61 - 1`.
pub const MODULUS: u64 = (1 << 61) - 1;

/// An element of GF(2^61 - 1), always held in canonical form `[0, p)`.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct FieldElement(u64);

#[inline]
fn fold(x: u64) -> u64 {
    // x < 2^64; one fold brings it below 2^61 + 8.
    let r = (x & MODULUS) + (x >> 61);
    if r >= MODULUS {
        r - MODULUS
    } else {
        r
    }
}

#[inline]
fn reduce_wide(x: u128) -> u64 {
    let lo = (x as u64) & MODULUS;
    let hi = (x >> 61) as u64;
    fold(lo + hi)
}

impl FieldElement {
    pub const ZERO: Self = FieldElement(0);
    pub const ONE: Self = FieldElement(1);

    /// Embeds an arbitrary `u64`, reducing it modulo p.
    #[inline]
    pub fn new(value: u64) -> Self {
        FieldElement(fold(value))
    }

    /// Builds an element from a value already known to be canonical.
    pub fn from_canonical(value: u64) -> Option<Self> {
        (value < MODULUS).then_some(FieldElement(value))
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Uniform sample from `[0, p)`.
    #[inline]
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v = rng.next_u64() >> 3;
            if v < MODULUS {
                return FieldElement(v);
            }
        }
    }

    /// Uniform sample from `[1, p)`.
    pub fn random_nonzero<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v = Self::random(rng);
            if !v.is_zero() {
                return v;
            }
        }
    }

    pub fn pow(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = Self::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc *= base;
            }
            base *= base;
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inverse(self) -> Option<Self> {
        (!self.is_zero()).then(|| self.pow(MODULUS - 2))
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F({})", self.0)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Error returned when parsing a decimal field element.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseFieldError {
    #[error("not a decimal integer: {0:?}")]
    NotANumber(String),
    #[error("value {0} is not below the field modulus")]
    OutOfRange(u64),
}

impl FromStr for FieldElement {
    type Err = ParseFieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: u64 = s
            .trim()
            .parse()
            .map_err(|_| ParseFieldError::NotANumber(s.to_string()))?;
        FieldElement::from_canonical(v).ok_or(ParseFieldError::OutOfRange(v))
    }
}

impl TryFrom<u64> for FieldElement {
    type Error = ParseFieldError;

    fn try_from(v: u64) -> Result<Self, Self::Error> {
        FieldElement::from_canonical(v).ok_or(ParseFieldError::OutOfRange(v))
    }
}

impl From<FieldElement> for u64 {
    fn from(v: FieldElement) -> u64 {
        v.0
    }
}

impl From<u32> for FieldElement {
    fn from(v: u32) -> Self {
        FieldElement(u64::from(v))
    }
}

impl From<bool> for FieldElement {
    fn from(v: bool) -> Self {
        FieldElement(u64::from(v))
    }
}

impl From<usize> for FieldElement {
    fn from(v: usize) -> Self {
        FieldElement::new(v as u64)
    }
}

impl Add for FieldElement {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        // Both operands < 2^61, so the sum cannot overflow.
        let s = self.0 + rhs.0;
        FieldElement(if s >= MODULUS { s - MODULUS } else { s })
    }
}

impl Sub for FieldElement {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        if self.0 >= rhs.0 {
            FieldElement(self.0 - rhs.0)
        } else {
            FieldElement(self.0 + MODULUS - rhs.0)
        }
    }
}

impl Neg for FieldElement {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        FieldElement::ZERO - self
    }
}

impl Mul for FieldElement {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        FieldElement(reduce_wide(u128::from(self.0) * u128::from(rhs.0)))
    }
}

impl AddAssign for FieldElement {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for FieldElement {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl MulAssign for FieldElement {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl Sum for FieldElement {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(FieldElement::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a FieldElement> for FieldElement {
    fn sum<I: Iterator<Item = &'a Self>>(iter: I) -> Self {
        iter.fold(FieldElement::ZERO, |acc, x| acc + *x)
    }
}
