//! Gray-coded square 64-QAM with unit average power.

use num_complex::Complex64;

pub const BITS_PER_SYMBOL: usize = 6;
pub const ORDER: usize = 64;

/// Amplitude of axis level `i` in `0..8`: `(2i - 7) / sqrt(42)`.
pub fn level(i: usize) -> f64 {
    (2.0 * i as f64 - 7.0) / 42f64.sqrt()
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Constellation point for a 6-bit symbol: high 3 bits choose the in-phase
/// level, low 3 bits the quadrature level, each Gray coded.
pub fn modulate(bits: u8) -> Complex64 {
    let bits = bits as usize & 0x3F;
    let ii = (0..8).find(|&i| gray(i) == bits >> 3).unwrap();
    let qi = (0..8).find(|&i| gray(i) == bits & 7).unwrap();
    Complex64::new(level(ii), level(qi))
}

/// Nearest constellation point. Ties go to the lowest symbol value.
pub fn demodulate(y: Complex64) -> u8 {
    demodulate_with_gain(y, 1.0)
}

/// Nearest point of the constellation scaled by `gain`.
pub fn demodulate_with_gain(y: Complex64, gain: f64) -> u8 {
    let mut best = 0u8;
    let mut best_d = f64::INFINITY;
    for s in 0..ORDER as u8 {
        let d = (y - modulate(s) * gain).norm_sqr();
        if d < best_d {
            best_d = d;
            best = s;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_average_power() {
        let p: f64 = (0..64).map(|s| modulate(s).norm_sqr()).sum::<f64>() / 64.0;
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_and_gray_neighbours() {
        for s in 0..64u8 {
            assert_eq!(demodulate(modulate(s)), s);
        }
        // horizontally adjacent points differ in one bit
        for s in 0..64u8 {
            for t in 0..64u8 {
                let d = (modulate(s) - modulate(t)).norm();
                if (d - 2.0 / 42f64.sqrt()).abs() < 1e-9 {
                    assert_eq!((s ^ t).count_ones(), 1);
                }
            }
        }
    }

    #[test]
    fn origin_tie_break() {
        // the four innermost points are equidistant from 0
        let s = demodulate(Complex64::new(0.0, 0.0));
        let inner: Vec<u8> = (0..64u8)
            .filter(|&t| (modulate(t).norm_sqr() - 2.0 / 42.0).abs() < 1e-12)
            .collect();
        assert_eq!(s, *inner.iter().min().unwrap());
    }

    #[test]
    fn scaling_preserves_decisions() {
        for s in 0..64u8 {
            let y = modulate(s) * 1.07 + Complex64::new(0.03, -0.02);
            for gain in [0.25, 3.0, 1000.0] {
                assert_eq!(demodulate_with_gain(y * gain, gain), demodulate(y));
            }
        }
    }
}
