//! Seeded synthetic channels and symbol streams.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::bf16::CBf16;
use crate::matrix::CMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Row-major `rows x cols` matrix of i.i.d. CN(0, 1) entries.
pub fn complex_gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> Vec<Complex64> {
    let n = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
    (0..rows * cols)
        .map(|_| Complex64::new(n.sample(rng), n.sample(rng)))
        .collect()
}

/// A CN(0, 1) channel rounded to bfloat16.
pub fn gaussian_channel(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    let v = complex_gaussian(rng, rows, cols);
    CMatrix::from_vec(rows, cols, v.iter().map(|&z| CBf16::from_c64(z)).collect())
}

/// Uniform random 6-bit symbols.
pub fn random_symbols(rng: &mut impl Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..64u8)).collect()
}
