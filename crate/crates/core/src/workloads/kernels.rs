//! Assembly generators for the vector-core and systolic kernels.
//!
//! Each generator returns a program fragment (no trailing `halt`) whose
//! labels start with `prefix`, so fragments can be concatenated into one
//! program. Addresses are baked in as immediates.

use std::fmt::Write as _;

use crate::memory::{MatrixHandle, LANES};

fn push(s: &mut String, line: impl AsRef<str>) {
    s.push_str("    ");
    s.push_str(line.as_ref());
    s.push('\n');
}

fn label(s: &mut String, name: impl AsRef<str>) {
    let _ = writeln!(s, "{}:", name.as_ref());
}

/// `C = A B` on the vector core, one 16-element row segment of C at a time.
///
/// For every row segment the A row is fetched with shuffled-row loads and
/// the matching block column of B is streamed linearly, one B row per
/// multiply-accumulate with the A element broadcast by lane index.
pub fn vector_gemm(prefix: &str, a: &MatrixHandle, b: &MatrixHandle, c: &MatrixHandle) -> String {
    let (m, n, p) = (a.row_blocks(), a.col_blocks(), b.col_blocks());
    assert_eq!(b.row_blocks(), n, "inner dimensions");
    assert_eq!((c.row_blocks(), c.col_blocks()), (m, p), "output shape");
    let mut s = String::new();
    let _ = writeln!(s, "# vector GEMM {}x{} * {}x{}", a.rows, a.cols, b.rows, b.cols);
    push(&mut s, format!("li x1, {}", c.base));
    push(&mut s, "mv.va va2, x1");
    push(&mut s, "li x3, 0");
    push(&mut s, format!("li x4, {}", b.base));
    push(&mut s, format!("li x20, {p}"));
    push(&mut s, format!("li x21, {}", m * LANES));
    push(&mut s, format!("li x22, {n}"));
    push(&mut s, "li x5, 1");
    push(&mut s, "cvt.vs vs1, x5");
    label(&mut s, format!("{prefix}_col"));
    push(&mut s, format!("li x6, {}", a.base));
    push(&mut s, "li x7, 0");
    label(&mut s, format!("{prefix}_row"));
    push(&mut s, "mv.va va0, x6");
    push(&mut s, "mv.va va1, x4");
    push(&mut s, "addv v0, zero, zero");
    push(&mut s, "li x8, 0");
    label(&mut s, format!("{prefix}_k"));
    push(&mut s, "mv.vs vs0, x0");
    push(&mut s, "ldv v2, (va1++)");
    push(&mut s, "ldv v1, (va0++) [mode0]");
    for l in 0..LANES {
        let cur = 2 + l % 2;
        if l + 1 < LANES {
            push(&mut s, format!("ldv v{}, (va1++)", 2 + (l + 1) % 2));
        }
        push(&mut s, format!("vmac v0, v{cur}, v1[vs0]"));
        push(&mut s, "adds vs0, vs0, vs1");
    }
    push(&mut s, "addi x8, x8, 1");
    push(&mut s, format!("bne x8, x22, {prefix}_k"));
    push(&mut s, "stv v0, (va2++)");
    push(&mut s, "addi x6, x6, 1");
    push(&mut s, "addi x7, x7, 1");
    push(&mut s, format!("bne x7, x21, {prefix}_row"));
    push(&mut s, format!("addi x4, x4, {}", n * LANES));
    push(&mut s, "addi x3, x3, 1");
    push(&mut s, format!("bne x3, x20, {prefix}_col"));
    s
}

/// `G = B^H B` on the vector core for an `N x 16` matrix `B` stored at `b`.
///
/// Row k of B holds the conjugated column k of `A = B^H`, so one linear load
/// per k feeds eight broadcast multiply-accumulates, one per row of G. Two
/// passes cover the 16 rows with eight accumulators each.
pub fn vector_gramian(prefix: &str, b: &MatrixHandle, g: &MatrixHandle) -> String {
    assert_eq!((b.cols, g.rows, g.cols), (16, 16, 16));
    let mut s = String::new();
    let _ = writeln!(s, "# vector Gramian, {} samples", b.rows);
    for pass in 0..2 {
        let p = format!("{prefix}_p{pass}");
        for l in 0..8 {
            push(&mut s, format!("li x5, {}", 8 * pass + l));
            push(&mut s, format!("cvt.vs vs{l}, x5"));
        }
        for l in 1..=8 {
            push(&mut s, format!("addv v{l}, zero, zero"));
        }
        push(&mut s, format!("li x10, {}", b.base));
        push(&mut s, "mv.va va0, x10");
        push(&mut s, "li x12, 0");
        push(&mut s, format!("li x13, {}", b.row_blocks()));
        label(&mut s, format!("{p}_chunk"));
        push(&mut s, "ldv v0, (va0++)");
        for k in 0..LANES {
            let cur = if k % 2 == 0 { 0 } else { 9 };
            if k + 1 < LANES {
                push(&mut s, format!("ldv v{}, (va0++)", 9 - cur));
            }
            for l in 0..8 {
                push(&mut s, format!("vmac v{}, v{cur}, conj(v{cur}[vs{l}])", l + 1));
            }
        }
        push(&mut s, "addi x12, x12, 1");
        push(&mut s, format!("bne x12, x13, {p}_chunk"));
        push(&mut s, format!("li x11, {}", g.base + 8 * pass));
        push(&mut s, "mv.va va1, x11");
        for l in 1..=8 {
            push(&mut s, format!("stv v{l}, (va1++)"));
        }
    }
    s
}

/// One systolic job: `dst = a * b` (or `a a^H` when `gramian`).
pub fn systolic(a: usize, b: usize, dst: usize, m: usize, n: usize, p: usize, gramian: bool) -> String {
    let mut s = String::new();
    push(&mut s, format!("li x10, {a}"));
    push(&mut s, format!("li x11, {b}"));
    push(&mut s, format!("li x12, {dst}"));
    push(&mut s, format!("sys.sz {m}, {n}, {p}, {}", gramian as u8));
    push(&mut s, "sys.des (x12)");
    push(&mut s, "sys.mul (x10), (x11)");
    s
}

/// Cholesky factorization `G = L L^H` of a 16x16 Hermitian matrix.
///
/// Column `j` of L is written to word `j` of `lt` (so `lt` holds the plain
/// transpose of L), lanes below the diagonal masked off. The reciprocal
/// square roots of the pivots are stored as one vector at `dinv`. A
/// non-positive pivot produces NaN and raises the domain flag.
pub fn cholesky16(prefix: &str, g: &MatrixHandle, lt: &MatrixHandle, dinv: usize) -> String {
    assert_eq!((g.rows, g.cols, lt.rows, lt.cols), (16, 16, 16, 16));
    let mut s = String::new();
    s.push_str("# Cholesky 16x16, left-looking by column\n");
    push(&mut s, format!("li x10, {}", g.base));
    push(&mut s, format!("li x11, {}", lt.base));
    push(&mut s, "li x12, 0");
    push(&mut s, "li x13, 16");
    push(&mut s, "li x14, 65535");
    push(&mut s, "li x5, 1");
    push(&mut s, "cvt.vs vs1, x5");
    push(&mut s, "addv v15, zero, zero");
    label(&mut s, format!("{prefix}_col"));
    push(&mut s, "mv.va va0, x10");
    push(&mut s, "ldv v0, (va0) [mode1]");
    push(&mut s, "mv.va va1, x11");
    push(&mut s, "ldv v1, (va1) [mode1]");
    push(&mut s, format!("li x15, {}", lt.base));
    push(&mut s, "mv.va va2, x15");
    push(&mut s, "vdot vs2, v1, conj(v1)");
    push(&mut s, "idxv x16, v0, x12");
    push(&mut s, "mv.vs vs4, x16");
    push(&mut s, "subs vs4, vs4, vs2");
    push(&mut s, "inv.sqrt vs5, vs4");
    push(&mut s, format!("beq x12, x0, {prefix}_scale"));
    push(&mut s, "li x17, 0");
    push(&mut s, "mv.vs vs6, x0");
    label(&mut s, format!("{prefix}_upd"));
    push(&mut s, "ldv v2, (va2++)");
    push(&mut s, "addi x17, x17, 1");
    push(&mut s, "vmsub v0, v2, conj(v1[vs6])");
    push(&mut s, "adds vs6, vs6, vs1");
    push(&mut s, format!("bne x17, x12, {prefix}_upd"));
    label(&mut s, format!("{prefix}_scale"));
    push(&mut s, "mulv v0, v0, vs5");
    push(&mut s, "muls vs7, vs4, vs5");
    push(&mut s, "idxvm v0, vs7, x12");
    push(&mut s, "idxvm v15, vs5, x12");
    push(&mut s, "mv.vs vs0, x14");
    push(&mut s, "stv v0, (va1) [mask vs0]");
    push(&mut s, "slli x14, x14, 1");
    push(&mut s, "addi x10, x10, 1");
    push(&mut s, "addi x11, x11, 1");
    push(&mut s, "addi x12, x12, 1");
    push(&mut s, format!("bne x12, x13, {prefix}_col"));
    push(&mut s, format!("li x15, {dinv}"));
    push(&mut s, "mv.va va3, x15");
    push(&mut s, "stv v15, (va3)");
    s
}

/// Invert the Cholesky factor by forward substitution, `X = L^-1`, one row
/// at a time, and store `U = X^H` (upper triangular) so that
/// `U U^H = G^-1`. Row `i` of X goes to scratch word `scratch + i`.
pub fn tri_inverse16(
    prefix: &str,
    lt: &MatrixHandle,
    dinv: usize,
    scratch: usize,
    u: &MatrixHandle,
) -> String {
    assert_eq!((lt.rows, lt.cols, u.rows, u.cols), (16, 16, 16, 16));
    let mut s = String::new();
    s.push_str("# forward substitution for the inverse of L, stored conjugate-transposed\n");
    push(&mut s, format!("li x10, {}", lt.base));
    push(&mut s, format!("li x11, {scratch}"));
    push(&mut s, format!("li x12, {}", u.base));
    push(&mut s, "li x13, 0");
    push(&mut s, "li x14, 16");
    push(&mut s, "li x5, 1");
    push(&mut s, "cvt.vs vs1, x5");
    push(&mut s, format!("li x15, {dinv}"));
    push(&mut s, "mv.va va3, x15");
    push(&mut s, "ldv v15, (va3)");
    label(&mut s, format!("{prefix}_row"));
    push(&mut s, "mv.va va0, x10");
    push(&mut s, "ldv v1, (va0) [mode1]");
    push(&mut s, "addv v0, zero, zero");
    push(&mut s, "idxvm v0, vs1, x13");
    push(&mut s, format!("li x15, {scratch}"));
    push(&mut s, "mv.va va1, x15");
    push(&mut s, format!("beq x13, x0, {prefix}_scale"));
    push(&mut s, "li x17, 0");
    push(&mut s, "mv.vs vs6, x0");
    label(&mut s, format!("{prefix}_acc"));
    push(&mut s, "ldv v2, (va1++)");
    push(&mut s, "addi x17, x17, 1");
    push(&mut s, "vmsub v0, v2, v1[vs6]");
    push(&mut s, "adds vs6, vs6, vs1");
    push(&mut s, format!("bne x17, x13, {prefix}_acc"));
    label(&mut s, format!("{prefix}_scale"));
    push(&mut s, "cvt.vs vs3, x13");
    push(&mut s, "mulv v0, v0, v15[vs3]");
    push(&mut s, "mv.va va1, x11");
    push(&mut s, "stv v0, (va1)");
    push(&mut s, "addv v3, conj(v0), zero");
    push(&mut s, "mv.va va2, x12");
    push(&mut s, "stv v3, (va2) [mode1]");
    push(&mut s, "addi x10, x10, 1");
    push(&mut s, "addi x11, x11, 1");
    push(&mut s, "addi x12, x12, 1");
    push(&mut s, "addi x13, x13, 1");
    push(&mut s, format!("bne x13, x14, {prefix}_row"));
    s
}

/// `y = W r` on the vector core for a 16-row `w`. `r` is `w.cols / 16`
/// linear words, `y` one linear word. Lanes of y are users.
pub fn detect_vector(prefix: &str, w: &MatrixHandle, r: usize, y: usize) -> String {
    assert_eq!(w.rows, 16);
    let mut s = String::new();
    s.push_str("# y = W r, one column of W per multiply-accumulate\n");
    push(&mut s, format!("li x10, {}", w.base));
    push(&mut s, format!("li x11, {r}"));
    push(&mut s, "mv.va va1, x11");
    push(&mut s, "li x12, 0");
    push(&mut s, format!("li x13, {}", w.col_blocks()));
    push(&mut s, "li x5, 1");
    push(&mut s, "cvt.vs vs1, x5");
    push(&mut s, "addv v0, zero, zero");
    label(&mut s, format!("{prefix}_chunk"));
    push(&mut s, "ldv v1, (va1++)");
    push(&mut s, "mv.vs vs0, x0");
    for _ in 0..LANES {
        push(&mut s, "mv.va va0, x10");
        push(&mut s, "ldv v2, (va0) [mode1]");
        push(&mut s, "addi x10, x10, 1");
        push(&mut s, "vmac v0, v2, v1[vs0]");
        push(&mut s, "adds vs0, vs0, vs1");
    }
    push(&mut s, "addi x12, x12, 1");
    push(&mut s, format!("bne x12, x13, {prefix}_chunk"));
    push(&mut s, format!("li x11, {y}"));
    push(&mut s, "mv.va va1, x11");
    push(&mut s, "stv v0, (va1)");
    s
}
