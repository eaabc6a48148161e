//! Matrix products on the vector core and on the systolic array, with the
//! operands placed in a fresh machine.

use super::kernels;
use super::{run_source, WorkloadError};
use crate::matrix::CMatrix;
use crate::memory::{LANES, WORD_BYTES};
use crate::sim::{ExecutionReport, Machine, MachineConfig};

#[derive(Clone, Debug)]
pub struct GemmOutput {
    pub c: CMatrix,
    pub report: ExecutionReport,
}

fn shape_ok(m: &CMatrix) -> bool {
    let ok = |n: usize| n > 0 && n.is_multiple_of(LANES) && n / LANES <= 255;
    ok(m.rows()) && ok(m.cols())
}

fn check(a: &CMatrix, b: &CMatrix) -> Result<(), WorkloadError> {
    if !shape_ok(a) || !shape_ok(b) || a.cols() != b.rows() {
        return Err(WorkloadError::Shape(format!(
            "cannot multiply {}x{} by {}x{} (dimensions must agree and be multiples of 16)",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

fn machine(cfg: &MachineConfig, elems: usize) -> Machine {
    let mut cfg = cfg.clone();
    cfg.vector_memory_bytes = cfg.vector_memory_bytes.max(elems / LANES * WORD_BYTES);
    Machine::new(cfg)
}

/// `C = A B` with the vector-core kernel.
pub fn vector(a: &CMatrix, b: &CMatrix, cfg: &MachineConfig) -> Result<GemmOutput, WorkloadError> {
    check(a, b)?;
    let mut m = machine(cfg, a.rows() * a.cols() + b.rows() * b.cols() + a.rows() * b.cols());
    let ah = m.mem.alloc(a.rows(), a.cols())?;
    let bh = m.mem.alloc(b.rows(), b.cols())?;
    let ch = m.mem.alloc(a.rows(), b.cols())?;
    m.mem.write_matrix(&ah, a)?;
    m.mem.write_matrix(&bh, b)?;
    let report = run_source(&mut m, &kernels::vector_gemm("gemm", &ah, &bh, &ch))?;
    Ok(GemmOutput { c: m.mem.read_matrix(&ch)?, report })
}

/// `C = A B` as one systolic job.
pub fn systolic(a: &CMatrix, b: &CMatrix, cfg: &MachineConfig) -> Result<GemmOutput, WorkloadError> {
    check(a, b)?;
    let mut m = machine(cfg, a.rows() * a.cols() + b.rows() * b.cols() + a.rows() * b.cols());
    let ah = m.mem.alloc(a.rows(), a.cols())?;
    let bh = m.mem.alloc(b.rows(), b.cols())?;
    let ch = m.mem.alloc(a.rows(), b.cols())?;
    m.mem.write_matrix(&ah, a)?;
    m.mem.write_matrix(&bh, b)?;
    let (mb, nb, pb) = (a.rows() / LANES, a.cols() / LANES, b.cols() / LANES);
    let report = run_source(&mut m, &kernels::systolic(ah.base, bh.base, ch.base, mb, nb, pb, false))?;
    Ok(GemmOutput { c: m.mem.read_matrix(&ch)?, report })
}

/// `C = A A^H` on the vector core for a 16-row `A`. The operand is stored
/// as `A^H`, the layout the kernel streams.
pub fn vector_gramian(a: &CMatrix, cfg: &MachineConfig) -> Result<GemmOutput, WorkloadError> {
    check(a, &a.conj_transpose())?;
    if a.rows() != LANES {
        return Err(WorkloadError::Shape(format!("vector Gramian takes 16 rows, got {}", a.rows())));
    }
    let mut m = machine(cfg, a.rows() * a.cols() + LANES * LANES);
    let bh = m.mem.alloc(a.cols(), LANES)?;
    let gh = m.mem.alloc(LANES, LANES)?;
    m.mem.write_matrix(&bh, &a.conj_transpose())?;
    let report = run_source(&mut m, &kernels::vector_gramian("gram", &bh, &gh))?;
    Ok(GemmOutput { c: m.mem.read_matrix(&gh)?, report })
}

/// `C = A A^H` as one Gramian-mode systolic job.
pub fn gramian(a: &CMatrix, cfg: &MachineConfig) -> Result<GemmOutput, WorkloadError> {
    check(a, &a.conj_transpose())?;
    let mut m = machine(cfg, a.rows() * a.cols() + a.rows() * a.rows());
    let ah = m.mem.alloc(a.rows(), a.cols())?;
    let ch = m.mem.alloc(a.rows(), a.rows())?;
    m.mem.write_matrix(&ah, a)?;
    let (mb, nb) = (a.rows() / LANES, a.cols() / LANES);
    let report = run_source(&mut m, &kernels::systolic(ah.base, ah.base, ch.base, mb, nb, mb, true))?;
    Ok(GemmOutput { c: m.mem.read_matrix(&ch)?, report })
}
