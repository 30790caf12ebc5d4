//! Rigorous high-precision evaluation with rational intervals.
//!
//! Constants involving `e` are enclosed in intervals with rational endpoints,
//! so comparisons against tiny bounds such as `1/n!` are decided exactly
//! rather than at binary64 resolution.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Terms of the series for `1/e`; the enclosure width is below `1/61!`,
/// roughly `2e-84`.
pub const INV_E_TERMS: usize = 60;

/// A closed interval `[lo, hi]` with rational endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Interval {
    pub fn point(value: BigRational) -> Self {
        Self {
            lo: value.clone(),
            hi: value,
        }
    }

    pub fn integer(value: i64) -> Self {
        Self::point(BigRational::from_integer(value.into()))
    }

    /// Enclosure of `1/e` from the alternating series `Σ (-1)^k / k!`;
    /// consecutive partial sums bracket the limit.
    pub fn inv_e() -> Self {
        let mut partial = BigRational::zero();
        let mut factorial = BigInt::one();
        let mut previous = partial.clone();
        for k in 0..=INV_E_TERMS {
            if k > 0 {
                factorial *= BigInt::from(k);
            }
            let term = BigRational::new(BigInt::one(), factorial.clone());
            previous = partial.clone();
            if k % 2 == 0 {
                partial += term;
            } else {
                partial -= term;
            }
        }
        if previous <= partial {
            Self {
                lo: previous,
                hi: partial,
            }
        } else {
            Self {
                lo: partial,
                hi: previous,
            }
        }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        Interval {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
    }

    /// Multiplication by an exact rational.
    pub fn scale(&self, factor: &BigRational) -> Interval {
        let a = &self.lo * factor;
        let b = &self.hi * factor;
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(2.into())
    }

    /// Upper bound on `|x|` over the interval.
    pub fn abs_upper(&self) -> BigRational {
        let a = self.lo.abs();
        let b = self.hi.abs();
        if a >= b {
            a
        } else {
            b
        }
    }

    /// `true` iff every point has `|x| < bound`.
    pub fn abs_strictly_below(&self, bound: &BigRational) -> bool {
        self.abs_upper() < *bound
    }

    /// `true` iff every point lies in `(value - radius, value + radius)`.
    pub fn within(&self, value: &BigRational, radius: &BigRational) -> bool {
        self.sub(&Interval::point(value.clone()))
            .abs_strictly_below(radius)
    }

    pub fn contains(&self, value: &BigRational) -> bool {
        self.lo <= *value && *value <= self.hi
    }

    pub fn to_f64(&self) -> f64 {
        crate::scalar::Scalar::to_f64(&self.midpoint())
    }

    /// Midpoint as a decimal string truncated to `digits` fractional digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        decimal(&self.midpoint(), digits)
    }
}

/// `value` as a decimal string truncated toward zero after `digits` places.
pub fn decimal(value: &BigRational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = (value.abs() * BigRational::from_integer(scale.clone())).to_integer();
    let (whole, frac) = scaled.div_rem(&scale);
    let sign = if value.is_negative() && !scaled.is_zero() {
        "-"
    } else {
        ""
    };
    if digits == 0 {
        return format!("{sign}{whole}");
    }
    format!("{sign}{whole}.{frac:0>digits$}")
}

/// Parses a plain decimal literal such as `"-0.125"` into an exact rational.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits: BigInt = format!("{whole}{frac}").parse().ok()?;
    let value = BigRational::new(digits, BigInt::from(10u32).pow(frac.len() as u32));
    Some(if negative { -value } else { value })
}

pub fn ratio(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(num.clone().into(), den.clone().into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inv_e_enclosure_is_tight_and_correct() {
        let e = Interval::inv_e();
        let tiny = BigRational::new(BigInt::one(), BigInt::from(10u32).pow(80));
        assert!(e.width() < tiny);
        assert_eq!(
            e.to_decimal(50),
            "0.36787944117144232159552377016146086744581113103176"
        );
        assert!((e.to_f64() - (-1f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn decimal_formatting() {
        let q = BigRational::new((-1).into(), 8.into());
        assert_eq!(decimal(&q, 5), "-0.12500");
        assert_eq!(decimal(&BigRational::from_integer(3.into()), 2), "3.00");
        assert_eq!(parse_decimal("-0.125"), Some(q));
        assert_eq!(
            parse_decimal("12"),
            Some(BigRational::from_integer(12.into()))
        );
        assert_eq!(parse_decimal("x"), None);
    }

    #[test]
    fn interval_arithmetic() {
        let a = Interval {
            lo: BigRational::from_integer(1.into()),
            hi: BigRational::from_integer(2.into()),
        };
        let neg = a.scale(&BigRational::from_integer((-3).into()));
        assert_eq!(neg.lo, BigRational::from_integer((-6).into()));
        assert_eq!(neg.hi, BigRational::from_integer((-3).into()));
        let d = a.sub(&a);
        assert_eq!(d.lo, BigRational::from_integer((-1).into()));
        assert!(d.abs_strictly_below(&BigRational::from_integer(2.into())));
        assert!(!d.abs_strictly_below(&BigRational::from_integer(1.into())));
    }
}
