//! Bit-exact bfloat16 arithmetic.
//!
//! `Bf16` is the upper half of an IEEE-754 binary32. Conversion down from
//! binary32 truncates; arithmetic results are computed exactly and rounded
//! once to nearest-even, which is bit-identical to doing the operation in
//! binary32 and rounding that result (binary32 carries more than twice the
//! bfloat16 precision, so the double rounding is innocuous).
//!
//! Every arithmetic output is post-processed the same way:
//!
//! * subnormal results are flushed to a zero of the same sign,
//! * NaN results are replaced by the single canonical NaN `0x7FC0`,
//! * overflow produces a signed infinity.

use std::fmt;

/// A bfloat16 value stored as its raw bit pattern.
///
/// Equality is bitwise: `NaN == NaN` and `+0 != -0`. That is what the
/// simulator needs for bit-exact comparisons.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bf16(u16);

const SIGN: u16 = 0x8000;
const EXP_MASK: u16 = 0x7F80;
const FRAC_MASK: u16 = 0x007F;
const BIAS: i32 = 127;
const FRAC_BITS: i32 = 7;

// Named methods rather than operator traits, so every rounding point is
// spelled out at the call site.
#[allow(clippy::should_implement_trait)]
impl Bf16 {
    pub const ZERO: Bf16 = Bf16(0x0000);
    pub const NEG_ZERO: Bf16 = Bf16(0x8000);
    pub const ONE: Bf16 = Bf16(0x3F80);
    pub const NEG_ONE: Bf16 = Bf16(0xBF80);
    pub const INFINITY: Bf16 = Bf16(0x7F80);
    pub const NEG_INFINITY: Bf16 = Bf16(0xFF80);
    /// The canonical NaN: sign 0, fraction MSB set, everything else clear.
    pub const NAN: Bf16 = Bf16(0x7FC0);
    pub const MAX: Bf16 = Bf16(0x7F7F);
    pub const MIN_POSITIVE: Bf16 = Bf16(0x0080);

    #[inline]
    pub const fn from_bits(bits: u16) -> Bf16 {
        Bf16(bits)
    }

    #[inline]
    pub const fn to_bits(self) -> u16 {
        self.0
    }

    /// Down-conversion by dropping the low 16 bits. NaN inputs map to the
    /// canonical NaN (plain truncation could otherwise turn a NaN whose
    /// payload lives in the low half into an infinity).
    pub fn from_f32(x: f32) -> Bf16 {
        if x.is_nan() {
            return Bf16::NAN;
        }
        Bf16((x.to_bits() >> 16) as u16)
    }

    /// Up-conversion by appending 16 zero bits.
    #[inline]
    pub fn to_f32(self) -> f32 {
        f32::from_bits((self.0 as u32) << 16)
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.to_f32() as f64
    }

    /// Nearest bfloat16 to a binary64 value (round to nearest, ties to even),
    /// with the usual flush/NaN/overflow output rules. Used to quantize host
    /// data such as channel matrices and DFT twiddles.
    pub fn from_f64(x: f64) -> Bf16 {
        if x.is_nan() {
            return Bf16::NAN;
        }
        let sign = x.is_sign_negative();
        let a = x.abs();
        if a == 0.0 {
            return signed_zero(sign);
        }
        if a.is_infinite() {
            return signed_inf(sign);
        }
        let bits = a.to_bits();
        let exp = ((bits >> 52) & 0x7FF) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        // value = sig * 2^lsb_exp exactly
        let (sig, lsb_exp) = if exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp - 1075)
        };
        round_pack(sign, lsb_exp, sig as u128)
    }

    #[inline]
    pub fn is_nan(self) -> bool {
        (self.0 & EXP_MASK) == EXP_MASK && (self.0 & FRAC_MASK) != 0
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        (self.0 & !SIGN) == EXP_MASK
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        (self.0 & EXP_MASK) != EXP_MASK
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        (self.0 & !SIGN) == 0
    }

    #[inline]
    pub fn is_subnormal(self) -> bool {
        (self.0 & EXP_MASK) == 0 && (self.0 & FRAC_MASK) != 0
    }

    #[inline]
    pub fn is_sign_negative(self) -> bool {
        self.0 & SIGN != 0
    }

    /// Sign flip. Not an arithmetic operation: NaN payloads are kept.
    #[inline]
    pub fn neg(self) -> Bf16 {
        Bf16(self.0 ^ SIGN)
    }

    #[inline]
    pub fn abs(self) -> Bf16 {
        Bf16(self.0 & !SIGN)
    }

    pub fn add(self, rhs: Bf16) -> Bf16 {
        add_signed(self, rhs, false)
    }

    pub fn sub(self, rhs: Bf16) -> Bf16 {
        add_signed(self, rhs, true)
    }

    pub fn mul(self, rhs: Bf16) -> Bf16 {
        if self.is_nan() || rhs.is_nan() {
            return Bf16::NAN;
        }
        let sign = self.is_sign_negative() != rhs.is_sign_negative();
        if self.is_infinite() || rhs.is_infinite() {
            if self.is_zero() || rhs.is_zero() {
                return Bf16::NAN;
            }
            return signed_inf(sign);
        }
        let (sa, ea) = unpack(self);
        let (sb, eb) = unpack(rhs);
        if sa == 0 || sb == 0 {
            return signed_zero(sign);
        }
        round_pack(sign, ea + eb, (sa as u128) * (sb as u128))
    }

    /// Inverse square root as computed by the scalar core's bfloat16 unit.
    ///
    /// The operand is reduced to `t * 4^k` with `t` in `[1, 4)` and `1/sqrt(t)`
    /// is evaluated by one of two parabolic segments (`[1, 2)` and `[2, 4)`),
    /// then scaled by `2^-k` and rounded. The first segment passes through
    /// `(1, 1)`, so powers of four come out exact. Maximum relative error over
    /// all positive bfloat16 inputs is below `2^-7`.
    ///
    /// Non-positive, NaN and infinite operands return the canonical NaN and
    /// raise the sticky domain flag.
    pub fn inv_sqrt(self, flags: &mut FpFlags) -> Bf16 {
        if self.is_nan() || self.is_sign_negative() || self.is_zero() || self.is_infinite() {
            flags.domain = true;
            return Bf16::NAN;
        }
        let (mut sig, mut lsb_exp) = unpack(self);
        while sig & 0x80 == 0 {
            sig <<= 1;
            lsb_exp -= 1;
        }
        // x = (sig / 128) * 2^e with sig/128 in [1, 2)
        let e = lsb_exp + FRAC_BITS;
        let m = sig as f64 / 128.0;
        let (t, k) = if e.rem_euclid(2) == 0 {
            (m, e / 2)
        } else {
            (2.0 * m, (e - 1).div_euclid(2))
        };
        let r = if t < 2.0 {
            let d = t - 1.0;
            1.0 + d * (ISQRT_SEG0[0] + d * ISQRT_SEG0[1])
        } else {
            ISQRT_SEG1[0] + t * (ISQRT_SEG1[1] + t * ISQRT_SEG1[2])
        };
        Bf16::from_f64(r * (-(k as f64)).exp2())
    }
}

/// Segment `[1, 2)`: `1 + c1 (t-1) + c2 (t-1)^2`.
const ISQRT_SEG0: [f64; 2] = [-0.448_383_41, 0.158_450_34];
/// Segment `[2, 4)`: `c0 + c1 t + c2 t^2`.
const ISQRT_SEG1: [f64; 3] = [1.116_972_6, -0.258_275_97, 0.026_107_87];

/// Sticky floating-point status bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FpFlags {
    /// Set by `inv.sqrt` on a non-positive, NaN or infinite operand.
    pub domain: bool,
}

#[inline]
fn signed_zero(neg: bool) -> Bf16 {
    if neg {
        Bf16::NEG_ZERO
    } else {
        Bf16::ZERO
    }
}

#[inline]
fn signed_inf(neg: bool) -> Bf16 {
    if neg {
        Bf16::NEG_INFINITY
    } else {
        Bf16::INFINITY
    }
}

/// Integer significand and exponent of its least significant bit, so that
/// `|x| = sig * 2^lsb_exp`. Only meaningful for finite `x`.
#[inline]
fn unpack(x: Bf16) -> (u32, i32) {
    let exp = ((x.0 & EXP_MASK) >> 7) as i32;
    let frac = (x.0 & FRAC_MASK) as u32;
    if exp == 0 {
        (frac, 1 - BIAS - FRAC_BITS)
    } else {
        (frac | 0x80, exp - BIAS - FRAC_BITS)
    }
}

/// Round `sig * 2^lsb_exp` (with `sig != 0`) to bfloat16: nearest-even,
/// subnormal results flushed to signed zero, overflow to infinity.
fn round_pack(neg: bool, lsb_exp: i32, sig: u128) -> Bf16 {
    debug_assert!(sig != 0);
    let msb = 127 - sig.leading_zeros() as i32;
    let unbiased = msb + lsb_exp;
    let mut biased = unbiased + BIAS;

    // Quantum of the destination grid: one ulp of the result's binade, or the
    // subnormal quantum when the value is below the normal range.
    let quantum_exp = if biased >= 1 {
        unbiased - FRAC_BITS
    } else {
        1 - BIAS - FRAC_BITS
    };
    let shift = quantum_exp - lsb_exp;
    let q: u128 = if shift <= 0 {
        sig << (-shift) as u32
    } else if shift >= 128 {
        // Far below half a quantum.
        0
    } else {
        let shift = shift as u32;
        let q = sig >> shift;
        let rem = sig & ((1u128 << shift) - 1);
        let half = 1u128 << (shift - 1);
        if rem > half || (rem == half && q & 1 == 1) {
            q + 1
        } else {
            q
        }
    };

    if biased < 1 {
        // Only the carry into the smallest normal survives the flush.
        if q >= 0x80 {
            return Bf16((if neg { SIGN } else { 0 }) | 0x0080);
        }
        return signed_zero(neg);
    }
    let mut q = q as u32;
    if q >= 0x100 {
        q >>= 1;
        biased += 1;
    }
    if biased >= 0xFF {
        return signed_inf(neg);
    }
    let bits = ((biased as u16) << 7) | (q as u16 & FRAC_MASK);
    Bf16(if neg { bits | SIGN } else { bits })
}

fn add_signed(a: Bf16, b: Bf16, negate_b: bool) -> Bf16 {
    if a.is_nan() || b.is_nan() {
        return Bf16::NAN;
    }
    let b = if negate_b { b.neg() } else { b };
    let (na, nb) = (a.is_sign_negative(), b.is_sign_negative());
    if a.is_infinite() || b.is_infinite() {
        if a.is_infinite() && b.is_infinite() && na != nb {
            return Bf16::NAN;
        }
        return if a.is_infinite() { a } else { b };
    }
    let (sa, ea) = unpack(a);
    let (sb, eb) = unpack(b);
    if sa == 0 && sb == 0 {
        // -0 + -0 = -0, every other zero sum is +0 under nearest-even.
        return signed_zero(na && nb);
    }
    // Bring both onto the smaller exponent. The exponent span of bfloat16 is
    // below 280 bits, which fits a u128 only after capping: anything shifted
    // further than 100 bits is pure sticky.
    let base = ea.min(eb);
    let widen = |s: u32, e: i32| -> (u128, bool) {
        let d = e - base;
        if d > 100 {
            // Value dominates by far; keep it scaled into the window so the
            // other operand only contributes a sticky bit.
            (s as u128, true)
        } else {
            ((s as u128) << d as u32, false)
        }
    };
    let (wa, fa) = widen(sa, ea);
    let (wb, fb) = widen(sb, eb);
    if fa || fb {
        // One operand is at least 2^93 times larger than the other: the
        // smaller one can only nudge the sticky bit.
        let (big_sig, big_exp, big_neg, small_sig, small_neg) = if fa {
            (sa, ea, na, sb, nb)
        } else {
            (sb, eb, nb, sa, na)
        };
        if small_sig == 0 {
            return round_pack(big_neg, big_exp, big_sig as u128);
        }
        let wide = (big_sig as u128) << 8;
        let v = if big_neg == small_neg { wide + 1 } else { wide - 1 };
        return round_pack(big_neg, big_exp - 8, v);
    }
    let (mag, neg) = if na == nb {
        (wa + wb, na)
    } else if wa >= wb {
        (wa - wb, na)
    } else {
        (wb - wa, nb)
    };
    if mag == 0 {
        return Bf16::ZERO;
    }
    round_pack(neg, base, mag)
}

impl fmt::Debug for Bf16 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bf16({:#06x} = {})", self.0, self.to_f32())
    }
}

impl fmt::Display for Bf16 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_f32(), f)
    }
}

/// Complex bfloat16: the lane element of the vector datapath.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct CBf16 {
    pub re: Bf16,
    pub im: Bf16,
}

#[allow(clippy::should_implement_trait)]
impl CBf16 {
    pub const ZERO: CBf16 = CBf16 {
        re: Bf16::ZERO,
        im: Bf16::ZERO,
    };
    pub const ONE: CBf16 = CBf16 {
        re: Bf16::ONE,
        im: Bf16::ZERO,
    };

    #[inline]
    pub const fn new(re: Bf16, im: Bf16) -> CBf16 {
        CBf16 { re, im }
    }

    pub fn from_f64(re: f64, im: f64) -> CBf16 {
        CBf16::new(Bf16::from_f64(re), Bf16::from_f64(im))
    }

    pub fn real(re: f64) -> CBf16 {
        CBf16::new(Bf16::from_f64(re), Bf16::ZERO)
    }

    /// `re` in the low half, `im` in the high half. This is how a lane is
    /// moved through a 32-bit scalar register.
    #[inline]
    pub fn to_bits(self) -> u32 {
        (self.re.to_bits() as u32) | ((self.im.to_bits() as u32) << 16)
    }

    #[inline]
    pub fn from_bits(bits: u32) -> CBf16 {
        CBf16::new(
            Bf16::from_bits(bits as u16),
            Bf16::from_bits((bits >> 16) as u16),
        )
    }

    #[inline]
    pub fn conj(self) -> CBf16 {
        CBf16::new(self.re, self.im.neg())
    }

    pub fn add(self, rhs: CBf16) -> CBf16 {
        CBf16::new(self.re.add(rhs.re), self.im.add(rhs.im))
    }

    pub fn sub(self, rhs: CBf16) -> CBf16 {
        CBf16::new(self.re.sub(rhs.re), self.im.sub(rhs.im))
    }

    /// `(a.re b.re - a.im b.im, a.re b.im + a.im b.re)`, rounding after
    /// every product and every sum.
    pub fn mul(self, rhs: CBf16) -> CBf16 {
        let re = self.re.mul(rhs.re).sub(self.im.mul(rhs.im));
        let im = self.re.mul(rhs.im).add(self.im.mul(rhs.re));
        CBf16::new(re, im)
    }

    /// `self + a * b` with the product rounded as in [`CBf16::mul`].
    #[inline]
    pub fn mac(self, a: CBf16, b: CBf16) -> CBf16 {
        self.add(a.mul(b))
    }

    /// `self - a * b`.
    #[inline]
    pub fn msub(self, a: CBf16, b: CBf16) -> CBf16 {
        self.sub(a.mul(b))
    }

    pub fn to_c64(self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn from_c64(z: num_complex::Complex64) -> CBf16 {
        CBf16::from_f64(z.re, z.im)
    }

    pub fn is_nan(self) -> bool {
        self.re.is_nan() || self.im.is_nan()
    }
}

impl fmt::Debug for CBf16 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}{:+}j)", self.re.to_f32(), self.im.to_f32())
    }
}

impl fmt::Display for CBf16 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
