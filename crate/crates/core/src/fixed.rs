//! Q1.15 fixed point, the CNN engine's native number format.

use std::fmt;

/// Signed 16-bit fixed point with 15 fractional bits: value = bits / 2^15.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Q15(pub i16);

impl Q15 {
    pub const ZERO: Q15 = Q15(0);
    pub const MAX: Q15 = Q15(i16::MAX);
    pub const MIN: Q15 = Q15(i16::MIN);
    pub const SCALE: f64 = 32768.0;

    /// Round to nearest (ties away from zero) and saturate.
    pub fn from_f64(x: f64) -> Q15 {
        if x.is_nan() {
            return Q15::ZERO;
        }
        Q15::saturate((x * Self::SCALE).round() as i64)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / Self::SCALE
    }

    pub fn saturate(v: i64) -> Q15 {
        Q15(v.clamp(i16::MIN as i64, i16::MAX as i64) as i16)
    }

    /// Product rescaled to Q15 with round-half-up on the dropped 15 bits,
    /// left unsaturated so it can feed a wide accumulator.
    #[inline]
    pub fn mul_wide(self, rhs: Q15) -> i64 {
        ((self.0 as i64) * (rhs.0 as i64) + (1 << 14)) >> 15
    }

    pub fn saturating_add(self, rhs: Q15) -> Q15 {
        Q15(self.0.saturating_add(rhs.0))
    }

    pub fn relu(self) -> Q15 {
        Q15(self.0.max(0))
    }
}

impl fmt::Debug for Q15 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q15({:#06x} = {})", self.0 as u16, self.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_and_saturate() {
        assert_eq!(Q15::from_f64(0.5).0 as u16, 0x4000);
        assert_eq!(Q15::from_f64(-0.5).0 as u16, 0xC000);
        assert_eq!(Q15::from_f64(2.0), Q15::MAX);
        assert_eq!(Q15::from_f64(-1.0), Q15::MIN);
        assert_eq!(Q15::from_f64(-3.0), Q15::MIN);
        assert_eq!(Q15::from_f64(1.0 / 65536.0).0, 1);
    }

    #[test]
    fn product_rounding() {
        let half = Q15(0x4000);
        assert_eq!(half.mul_wide(half), 0x2000);
        assert_eq!(Q15(1).mul_wide(Q15(1)), 0);
        assert_eq!(Q15::MIN.mul_wide(Q15::MIN), 32768);
    }
}
