//! Additive commitments over `Z_M`.
//!
//! A commitment `r·G + v·H` is represented by its coordinates `(r, v)`.
//! Both generators are implicit, so the group law is componentwise addition
//! modulo the Mersenne prime `2^61 - 1`.

use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub};

/// The prime modulus `2^61 - 1`.
pub const MODULUS: u64 = (1 << 61) - 1;

/// An element of `Z_M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Scalar(u64);

impl Scalar {
    pub const ZERO: Scalar = Scalar(0);

    /// Reduces an arbitrary `u64` into the field.
    pub fn new(x: u64) -> Self {
        Scalar(reduce(x))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

#[inline]
fn reduce(x: u64) -> u64 {
    // x = hi·2^61 + lo ≡ hi + lo (mod 2^61 - 1)
    let folded = (x & MODULUS) + (x >> 61);
    if folded >= MODULUS {
        folded - MODULUS
    } else {
        folded
    }
}

impl Add for Scalar {
    type Output = Scalar;

    fn add(self, rhs: Scalar) -> Scalar {
        // both operands < 2^61, so the sum fits in 62 bits
        Scalar(reduce(self.0 + rhs.0))
    }
}

impl Neg for Scalar {
    type Output = Scalar;

    fn neg(self) -> Scalar {
        if self.0 == 0 {
            self
        } else {
            Scalar(MODULUS - self.0)
        }
    }
}

impl Sub for Scalar {
    type Output = Scalar;

    fn sub(self, rhs: Scalar) -> Scalar {
        self + (-rhs)
    }
}

impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::ZERO, Add::add)
    }
}

impl From<u64> for Scalar {
    fn from(x: u64) -> Self {
        Scalar::new(x)
    }
}

/// A commitment to `value` under `blinding`.
///
/// Equality compares the group element only; `is_dummy` is bookkeeping for
/// padding outputs and does not take part in the algebra.
#[derive(Debug, Clone, Copy, Default)]
pub struct Commitment {
    pub blinding: Scalar,
    pub value: Scalar,
    pub is_dummy: bool,
}

impl Commitment {
    pub const ZERO: Commitment = Commitment {
        blinding: Scalar::ZERO,
        value: Scalar::ZERO,
        is_dummy: false,
    };

    pub fn new(blinding: impl Into<Scalar>, value: impl Into<Scalar>) -> Self {
        Commitment {
            blinding: blinding.into(),
            value: value.into(),
            is_dummy: false,
        }
    }

    /// The zero commitment flagged as padding.
    pub fn dummy() -> Self {
        Commitment {
            is_dummy: true,
            ..Commitment::ZERO
        }
    }

    /// Commitment to an explicit amount such as a fee (blinding zero).
    pub fn explicit(value: u64) -> Self {
        Commitment::new(Scalar::ZERO, value)
    }

    pub fn is_zero(&self) -> bool {
        self.blinding.is_zero() && self.value.is_zero()
    }

    /// Coordinates as a plain pair, for hashing and matching.
    pub fn coords(&self) -> (u64, u64) {
        (self.blinding.get(), self.value.get())
    }
}

impl PartialEq for Commitment {
    fn eq(&self, other: &Self) -> bool {
        self.blinding == other.blinding && self.value == other.value
    }
}

impl Eq for Commitment {}

impl Add for Commitment {
    type Output = Commitment;

    fn add(self, rhs: Commitment) -> Commitment {
        Commitment::new(self.blinding + rhs.blinding, self.value + rhs.value)
    }
}

impl AddAssign for Commitment {
    fn add_assign(&mut self, rhs: Commitment) {
        *self = *self + rhs;
    }
}

impl Neg for Commitment {
    type Output = Commitment;

    fn neg(self) -> Commitment {
        Commitment {
            blinding: -self.blinding,
            value: -self.value,
            is_dummy: self.is_dummy,
        }
    }
}

impl Sum for Commitment {
    fn sum<I: Iterator<Item = Commitment>>(iter: I) -> Commitment {
        iter.fold(Commitment::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Commitment> for Commitment {
    fn sum<I: Iterator<Item = &'a Commitment>>(iter: I) -> Commitment {
        iter.copied().sum()
    }
}
