//! Zero-forcing detection for K = 16 users.
//!
//! The host places the channel estimate in vector memory in conjugate
//! transposed form, `Hh = H^H` (K x M). The simulated program then runs
//!
//! 1. `G = Hh Hh^H = H^H H` on the systolic array (Gramian mode),
//! 2. `G = L L^H` on the vector core,
//! 3. `X = L^-1` by forward substitution on the vector core, stored as
//!    `U = X^H`,
//! 4. `G^-1 = U U^H` on the systolic array (Gramian mode),
//! 5. `W = G^-1 Hh` on the systolic array,
//!
//! and, for a whole coherence block, `Y = W R` on the systolic array.

use num_complex::Complex64;

use super::kernels;
use super::qam;
use super::{run_source, WorkloadError};
use crate::bf16::CBf16;
use crate::matrix::{matmul_c64, CMatrix};
use crate::memory::{MatrixHandle, VectorMemory, VectorWord, LANES, WORD_BYTES};
use crate::sim::{ExecutionReport, Machine, MachineConfig};

pub const USERS: usize = 16;

/// Bound on `max |W H - I|` for i.i.d. Gaussian channels, frozen from the
/// worst case over 100 seeds at 64x16 and 128x16 (0.055).
pub const IDENTITY_ERROR_BOUND: f64 = 0.08;

/// Bound on the Cholesky reconstruction error `max |L L^H - G| / max |G|`,
/// frozen from the worst case over 100 seeds (0.021).
pub const CHOLESKY_ERROR_BOUND: f64 = 1.0 / 32.0;

struct Layout {
    hh: MatrixHandle,
    g: MatrixHandle,
    lt: MatrixHandle,
    u: MatrixHandle,
    ginv: MatrixHandle,
    w: MatrixHandle,
    dinv: usize,
    scratch: usize,
}

const LAYOUT_FIXED_WORDS: usize = 4 * 16 + 1 + 16;

fn layout(mem: &mut VectorMemory, antennas: usize) -> Result<Layout, WorkloadError> {
    Ok(Layout {
        hh: mem.alloc(USERS, antennas)?,
        g: mem.alloc(USERS, USERS)?,
        lt: mem.alloc(USERS, USERS)?,
        u: mem.alloc(USERS, USERS)?,
        ginv: mem.alloc(USERS, USERS)?,
        w: mem.alloc(USERS, antennas)?,
        dinv: mem.alloc_words(1)?,
        scratch: mem.alloc_words(LANES)?,
    })
}

/// A machine whose vector memory holds at least `words` words.
fn machine_for(cfg: &MachineConfig, words: usize) -> Machine {
    let mut cfg = cfg.clone();
    cfg.vector_memory_bytes = cfg.vector_memory_bytes.max(words * WORD_BYTES);
    Machine::new(cfg)
}

fn check_channel(h: &CMatrix) -> Result<usize, WorkloadError> {
    let (m, k) = (h.rows(), h.cols());
    if k != USERS || m == 0 || m % LANES != 0 || m / LANES > 255 {
        return Err(WorkloadError::Shape(format!(
            "channel must be M x {USERS} with M a multiple of 16 up to 4080, got {m}x{k}"
        )));
    }
    Ok(m)
}

fn zf_program(l: &Layout) -> String {
    let nb = l.hh.col_blocks();
    let mut s = String::new();
    s += &kernels::systolic(l.hh.base, l.hh.base, l.g.base, 1, nb, 1, true);
    s += &kernels::cholesky16("chol", &l.g, &l.lt, l.dinv);
    s += &kernels::tri_inverse16("tinv", &l.lt, l.dinv, l.scratch, &l.u);
    s += &kernels::systolic(l.u.base, l.u.base, l.ginv.base, 1, 1, 1, true);
    s += &kernels::systolic(l.ginv.base, l.hh.base, l.w.base, 1, 1, nb, false);
    s
}

/// First column whose pivot came out NaN, after a domain error.
fn singular_column(m: &Machine, lt: &MatrixHandle) -> Result<Option<usize>, WorkloadError> {
    if !m.flags.domain {
        return Ok(None);
    }
    let l = m.mem.read_matrix(lt)?;
    Ok(Some((0..USERS).find(|&j| l.get(j, j).is_nan()).unwrap_or(0)))
}

#[derive(Clone, Debug)]
pub struct ZfOutput {
    /// Detection matrix, K x M.
    pub w: CMatrix,
    /// Cholesky factor of the Gramian.
    pub l: CMatrix,
    pub report: ExecutionReport,
}

fn load_channel(m: &mut Machine, l: &Layout, h: &CMatrix) -> Result<(), WorkloadError> {
    m.mem.write_matrix(&l.hh, &h.conj_transpose())?;
    Ok(())
}

/// Compute the zero-forcing detection matrix `W = (H^H H)^-1 H^H` for an
/// `M x 16` channel on the simulated machine.
pub fn zf_detection_matrix(h: &CMatrix, cfg: &MachineConfig) -> Result<ZfOutput, WorkloadError> {
    let antennas = check_channel(h)?;
    let mut m = machine_for(cfg, 2 * antennas + LAYOUT_FIXED_WORDS);
    let l = layout(&mut m.mem, antennas)?;
    load_channel(&mut m, &l, h)?;
    let report = run_source(&mut m, &zf_program(&l))?;
    if let Some(column) = singular_column(&m, &l.lt)? {
        return Err(WorkloadError::Singular { column });
    }
    Ok(ZfOutput {
        w: m.mem.read_matrix(&l.w)?,
        l: m.mem.read_matrix(&l.lt)?.conj_transpose().map(|z| z.conj()),
        report,
    })
}

/// Cholesky factor of a 16x16 Hermitian positive definite matrix,
/// computed by the vector-core kernel.
pub fn cholesky(g: &CMatrix, cfg: &MachineConfig) -> Result<(CMatrix, ExecutionReport), WorkloadError> {
    if (g.rows(), g.cols()) != (USERS, USERS) {
        return Err(WorkloadError::Shape(format!(
            "Cholesky kernel takes a 16x16 matrix, got {}x{}",
            g.rows(),
            g.cols()
        )));
    }
    let mut m = Machine::new(cfg.clone());
    let gh = m.mem.alloc(USERS, USERS)?;
    let lt = m.mem.alloc(USERS, USERS)?;
    let dinv = m.mem.alloc_words(1)?;
    m.mem.write_matrix(&gh, g)?;
    let report = run_source(&mut m, &kernels::cholesky16("chol", &gh, &lt, dinv))?;
    if let Some(column) = singular_column(&m, &lt)? {
        return Err(WorkloadError::Singular { column });
    }
    // lt holds the plain transpose of L
    let t = m.mem.read_matrix(&lt)?;
    Ok((CMatrix::from_fn(USERS, USERS, |r, c| t.get(c, r)), report))
}

#[derive(Clone, Debug)]
pub struct Detection {
    /// Equalized symbols, one per user.
    pub y: Vec<CBf16>,
    /// Hard 64-QAM decisions.
    pub symbols: Vec<u8>,
    pub report: ExecutionReport,
}

/// `y = W r` on the vector core, then hard demapping.
pub fn detect(w: &CMatrix, r: &[CBf16], cfg: &MachineConfig) -> Result<Detection, WorkloadError> {
    let antennas = w.cols();
    if w.rows() != USERS || !antennas.is_multiple_of(LANES) || r.len() != antennas {
        return Err(WorkloadError::Shape(format!(
            "detect needs a 16 x M matrix and M samples, got {}x{} and {}",
            w.rows(),
            antennas,
            r.len()
        )));
    }
    let mut m = machine_for(cfg, antennas + antennas / LANES + 1);
    let wh = m.mem.alloc(USERS, antennas)?;
    m.mem.write_matrix(&wh, w)?;
    let rr = m.mem.alloc_words(antennas / LANES)?;
    for (i, chunk) in r.chunks(LANES).enumerate() {
        m.mem.set_word(rr + i, VectorWord::from_fn(|l| chunk[l]))?;
    }
    let y_addr = m.mem.alloc_words(1)?;
    let report = run_source(&mut m, &kernels::detect_vector("det", &wh, rr, y_addr))?;
    let y = m.mem.word(y_addr)?.0.to_vec();
    Ok(Detection {
        symbols: y.iter().map(|z| qam::demodulate(z.to_c64())).collect(),
        y,
        report,
    })
}

#[derive(Clone, Debug)]
pub struct BlockDetection {
    /// `K x n` equalized symbols, one column per resource element.
    pub y: CMatrix,
    /// Hard decisions, `symbols[s * K + k]` for resource element `s`, user `k`.
    pub symbols: Vec<u8>,
    pub report: ExecutionReport,
}

/// Full coherence block as one program: detection matrix once, then
/// `Y = W R` for all `n` received vectors (the columns of `r`).
pub fn detect_coherence_block(h: &CMatrix, r: &CMatrix, cfg: &MachineConfig) -> Result<BlockDetection, WorkloadError> {
    let antennas = check_channel(h)?;
    let n = r.cols();
    if r.rows() != antennas || n == 0 || !n.is_multiple_of(LANES) || n / LANES > 255 {
        return Err(WorkloadError::Shape(format!(
            "received block must be {antennas} x n with n a multiple of 16, got {}x{n}",
            r.rows()
        )));
    }
    let words = 2 * antennas + LAYOUT_FIXED_WORDS + antennas * n / LANES + n;
    let mut m = machine_for(cfg, words);
    let l = layout(&mut m.mem, antennas)?;
    let rh = m.mem.alloc(antennas, n)?;
    let yh = m.mem.alloc(USERS, n)?;
    load_channel(&mut m, &l, h)?;
    m.mem.write_matrix(&rh, r)?;
    let mut src = zf_program(&l);
    src += &kernels::systolic(l.w.base, rh.base, yh.base, 1, antennas / LANES, n / LANES, false);
    let report = run_source(&mut m, &src)?;
    if let Some(column) = singular_column(&m, &l.lt)? {
        return Err(WorkloadError::Singular { column });
    }
    let y = m.mem.read_matrix(&yh)?;
    let mut symbols = Vec::with_capacity(n * USERS);
    for s in 0..n {
        for k in 0..USERS {
            symbols.push(qam::demodulate(y.get(k, s).to_c64()));
        }
    }
    Ok(BlockDetection { y, symbols, report })
}

/// Noiseless received block `R = H S` for symbols `s[col * K + k]`,
/// computed in binary64 and rounded to bfloat16.
pub fn received(h: &CMatrix, symbols: &[u8]) -> CMatrix {
    let (m, k) = (h.rows(), h.cols());
    let n = symbols.len() / k;
    let s: Vec<Complex64> = (0..k * n)
        .map(|i| qam::modulate(symbols[(i % n) * k + i / n]))
        .collect();
    let r = matmul_c64(&h.to_c64(), &s, m, k, n);
    CMatrix::from_c64(m, n, |i, j| r[i * n + j])
}

/// `max |(W H - I)_ij|` evaluated in binary64.
pub fn identity_error(w: &CMatrix, h: &CMatrix) -> f64 {
    let k = w.rows();
    let p = matmul_c64(&w.to_c64(), &h.to_c64(), k, w.cols(), h.cols());
    let mut worst = 0f64;
    for i in 0..k {
        for j in 0..h.cols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((p[i * h.cols() + j] - target).norm());
        }
    }
    worst
}
