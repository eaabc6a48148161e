//! Host-side dense matrices.

use num_complex::Complex64;

use crate::bf16::CBf16;

/// Row-major complex bfloat16 matrix held by the host (not in simulated memory).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<CBf16>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> CMatrix {
        CMatrix {
            rows,
            cols,
            data: vec![CBf16::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |r, c| if r == c { CBf16::ONE } else { CBf16::ZERO })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> CBf16) -> CMatrix {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<CBf16>) -> CMatrix {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        CMatrix { rows, cols, data }
    }

    /// Round a binary64 matrix element-wise to bfloat16.
    pub fn from_c64(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64) -> CMatrix {
        CMatrix::from_fn(rows, cols, |r, c| CBf16::from_c64(f(r, c)))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> CBf16 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: CBf16) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[CBf16] {
        &self.data
    }

    pub fn conj_transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn map(&self, f: impl Fn(CBf16) -> CBf16) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn to_c64(&self) -> Vec<Complex64> {
        self.data.iter().map(|z| z.to_c64()).collect()
    }
}

/// Binary64 reference product of two row-major complex matrices.
pub fn matmul_c64(a: &[Complex64], b: &[Complex64], m: usize, n: usize, p: usize) -> Vec<Complex64> {
    assert_eq!(a.len(), m * n);
    assert_eq!(b.len(), n * p);
    let mut c = vec![Complex64::new(0.0, 0.0); m * p];
    for i in 0..m {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..p {
                c[i * p + j] += aik * b[k * p + j];
            }
        }
    }
    c
}
