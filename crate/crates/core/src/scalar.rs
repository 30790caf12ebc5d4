//! Numeric back ends for fractional matchings.
//!
//! Fractional algorithms run either on exact arbitrary-precision rationals or
//! on binary64 floats. Exact mode is the default for instances with at most
//! [`EXACT_MAX_N`] vertices per side.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};

/// Largest instance size for which exact rationals are used by default.
pub const EXACT_MAX_N: usize = 64;

/// Comparison tolerance used by the float back end.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

/// The exact back end.
pub type Exact = BigRational;

pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Signed + Send + Sync + 'static
{
    /// `true` for the exact rational back end.
    const EXACT: bool;

    /// Slack allowed when comparing values; zero for exact arithmetic.
    fn tolerance() -> Self;

    fn ratio(num: u64, den: u64) -> Self;

    fn from_usize(n: usize) -> Self {
        Self::ratio(n as u64, 1)
    }

    fn to_f64(&self) -> f64;

    /// `self > other` beyond tolerance.
    fn exceeds(&self, other: &Self) -> bool {
        self.clone() - other.clone() > Self::tolerance()
    }

    /// `|self - other| <= tolerance`.
    fn close_to(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= Self::tolerance()
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn tolerance() -> Self {
        BigRational::zero()
    }

    fn ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        // `BigRational::to_f64` rounds correctly even for huge parts.
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn tolerance() -> Self {
        FLOAT_TOLERANCE
    }

    fn ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

/// Sum of a sequence of scalars.
pub fn sum<'a, S: Scalar>(values: impl IntoIterator<Item = &'a S>) -> S {
    values.into_iter().fold(S::zero(), |acc, v| acc + v.clone())
}
