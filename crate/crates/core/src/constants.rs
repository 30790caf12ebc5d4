//! Constants built from `e`.
//!
//! Each constant is carried both as a binary64 value and as a 50-digit
//! decimal literal (truncated). [`self_test`] checks both against the
//! rigorous enclosure of `1/e`.

use num_rational::BigRational;
use num_traits::One;

use crate::precision::{parse_decimal, Interval};

pub const INV_E: f64 = 0.367_879_441_171_442_3;
/// `1 - 1/e`, Ranking's per-vertex guarantee.
pub const ONE_MINUS_INV_E: f64 = 0.632_120_558_828_557_7;
/// `1 - 2/e`, the additive constant of Ranking on MonotoneG.
pub const ONE_MINUS_TWO_INV_E: f64 = 0.264_241_117_657_115_4;
/// `1/2 - 1/(2e)`, the additive constant of Balance on MonotoneG.
pub const HALF_MINUS_HALF_INV_E: f64 = 0.316_060_279_414_278_8;

pub const INV_E_50: &str = "0.36787944117144232159552377016146086744581113103176";
pub const ONE_MINUS_INV_E_50: &str = "0.63212055882855767840447622983853913255418886896823";
pub const ONE_MINUS_TWO_INV_E_50: &str = "0.26424111765711535680895245967707826510837773793646";
pub const HALF_MINUS_HALF_INV_E_50: &str = "0.31606027941427883920223811491926956627709443448411";

/// Name, float value, 50-digit literal, and exact enclosure of each constant.
pub fn table() -> Vec<(&'static str, f64, &'static str, Interval)> {
    let inv_e = Interval::inv_e();
    let one = Interval::point(BigRational::one());
    let half = BigRational::new(1.into(), 2.into());
    vec![
        ("1/e", INV_E, INV_E_50, inv_e.clone()),
        (
            "1 - 1/e",
            ONE_MINUS_INV_E,
            ONE_MINUS_INV_E_50,
            one.sub(&inv_e),
        ),
        (
            "1 - 2/e",
            ONE_MINUS_TWO_INV_E,
            ONE_MINUS_TWO_INV_E_50,
            one.sub(&inv_e.scale(&BigRational::from_integer(2.into()))),
        ),
        (
            "1/2 - 1/(2e)",
            HALF_MINUS_HALF_INV_E,
            HALF_MINUS_HALF_INV_E_50,
            Interval::point(half.clone()).sub(&inv_e.scale(&half)),
        ),
    ]
}

/// Verifies every literal is within `1e-50` of the true constant and every
/// float within `1e-15`. Returns the names of failing constants.
pub fn self_test() -> Vec<&'static str> {
    let radius = BigRational::new(1.into(), num_bigint::BigInt::from(10u32).pow(50));
    table()
        .into_iter()
        .filter(|(_, float, literal, exact)| {
            let digits_ok = parse_decimal(literal).is_some_and(|q| exact.within(&q, &radius));
            let float_ok = (exact.to_f64() - float).abs() < 1e-15;
            !(digits_ok && float_ok)
        })
        .map(|(name, ..)| name)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_pass_self_test() {
        assert!(self_test().is_empty(), "{:?}", self_test());
    }

    #[test]
    fn float_values_match_libm() {
        let inv_e = (-1f64).exp();
        assert!((INV_E - inv_e).abs() < 1e-16);
        assert!((ONE_MINUS_INV_E - (1.0 - inv_e)).abs() < 1e-15);
        assert!((ONE_MINUS_TWO_INV_E - (1.0 - 2.0 * inv_e)).abs() < 1e-15);
        assert!((HALF_MINUS_HALF_INV_E - (0.5 - 0.5 * inv_e)).abs() < 1e-15);
    }
}
