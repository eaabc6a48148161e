//! The 16x16 systolic GEMM accelerator.
//!
//! A job walks the output in 16x16 blocks. For each block it streams the
//! 16n rows of A it needs with shuffled-row reads and the 16n columns of B
//! with shuffled-column reads, then writes the 16 finished rows back. Each
//! block also pays a fixed drain overhead and each job a pipeline fill.
//!
//! In Gramian mode (`C = A A^H`) the columns of B are conjugated rows of A,
//! so a diagonal block only streams one operand, and blocks above the
//! diagonal are produced by mirroring the block below it.

use thiserror::Error;

use crate::bf16::{Bf16, CBf16};
use crate::isa::SystolicMode;
use crate::memory::{AccessMode, MatrixHandle, MemError, VectorMemory, VectorWord, LANES};

/// Drain overhead per output block.
pub const BLOCK_OVERHEAD_CYCLES: u64 = 16;
/// One-time pipeline fill per job.
pub const FILL_CYCLES: u64 = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Accumulator {
    /// Every partial sum rounded to bfloat16.
    #[default]
    Bf16,
    /// Partial sums kept in binary32, rounded to bfloat16 once at the end.
    F32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct SystolicConfig {
    pub accumulator: Accumulator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SystolicJob {
    pub a_addr: usize,
    pub b_addr: usize,
    pub dst_addr: usize,
    pub m_blocks: usize,
    pub n_blocks: usize,
    pub p_blocks: usize,
    pub mode: SystolicMode,
}

impl SystolicJob {
    /// Output column blocks; Gramian jobs are square.
    pub fn out_col_blocks(&self) -> usize {
        match self.mode {
            SystolicMode::Normal => self.p_blocks,
            SystolicMode::Gramian => self.m_blocks,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SystolicReport {
    pub read_cycles: u64,
    pub write_cycles: u64,
    /// Per-block drain plus the pipeline fill.
    pub overhead_cycles: u64,
    pub total_cycles: u64,
}

impl SystolicReport {
    pub fn memory_cycles(&self) -> u64 {
        self.read_cycles + self.write_cycles
    }

    /// `m,n,p,mode,reads,writes,overhead,total`
    pub fn csv_row(&self, job: &SystolicJob) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            job.m_blocks * LANES,
            job.n_blocks * LANES,
            job.out_col_blocks() * LANES,
            match job.mode {
                SystolicMode::Normal => "normal",
                SystolicMode::Gramian => "gramian",
            },
            self.read_cycles,
            self.write_cycles,
            self.overhead_cycles,
            self.total_cycles
        )
    }
}

pub const CSV_HEADER: &str = "m,n,p,mode,reads,writes,overhead,total";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SystolicError {
    #[error("block counts must be at least 1")]
    EmptyJob,
    #[error("no registered {what} matrix at address {addr}")]
    NoOperand { what: &'static str, addr: usize },
    #[error("{what} matrix is {rows}x{cols}, job needs {want_rows}x{want_cols}")]
    Dimension {
        what: &'static str,
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("destination overlaps a source operand")]
    Overlap,
    #[error(transparent)]
    Memory(#[from] MemError),
}

/// Closed-form cycle count, excluding the pipeline fill.
pub fn predict_cycles(m: usize, n: usize, p: usize, mode: SystolicMode) -> u64 {
    let (m, n, p) = (m as u64, n as u64, p as u64);
    let per_block_reads = match mode {
        SystolicMode::Normal => 32 * n,
        SystolicMode::Gramian => 16 * n,
    };
    m * p * (per_block_reads + 16 + BLOCK_OVERHEAD_CYCLES)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Throughput {
    pub cycles: u64,
    pub mm_per_s: f64,
    pub gflops: f64,
}

/// Square `dim x dim` products per second. A complex multiply-accumulate
/// is counted as two floating-point operations.
pub fn gemm_throughput(dim: usize, clock_hz: f64) -> Throughput {
    let b = dim / LANES;
    let cycles = predict_cycles(b, b, b, SystolicMode::Normal) + FILL_CYCLES;
    let mm_per_s = clock_hz / cycles as f64;
    let macs = (dim as f64).powi(3);
    Throughput {
        cycles,
        mm_per_s,
        gflops: 2.0 * macs * mm_per_s / 1e9,
    }
}

fn operand(
    mem: &VectorMemory,
    what: &'static str,
    addr: usize,
    rows: usize,
    cols: usize,
) -> Result<MatrixHandle, SystolicError> {
    let h = mem
        .handle_based_at(addr)
        .ok_or(SystolicError::NoOperand { what, addr })?;
    if h.rows != rows || h.cols != cols {
        return Err(SystolicError::Dimension {
            what,
            rows: h.rows,
            cols: h.cols,
            want_rows: rows,
            want_cols: cols,
        });
    }
    Ok(h)
}

struct Dot {
    acc: Accumulator,
}

impl Dot {
    /// `sum_k a[k] * b[k]` in ascending `k`.
    fn run(&self, a: &[CBf16], b: &[CBf16]) -> CBf16 {
        match self.acc {
            Accumulator::Bf16 => a
                .iter()
                .zip(b)
                .fold(CBf16::ZERO, |acc, (&x, &y)| acc.mac(x, y)),
            Accumulator::F32 => {
                let (mut re, mut im) = (0f32, 0f32);
                for (x, y) in a.iter().zip(b) {
                    let p = x.mul(*y);
                    re += p.re.to_f32();
                    im += p.im.to_f32();
                }
                CBf16::from_f64(re as f64, im as f64)
            }
        }
    }
}

/// Run one job against memory: compute the product into the destination
/// matrix and account the memory traffic it needs.
pub fn execute(
    job: &SystolicJob,
    mem: &mut VectorMemory,
    cfg: &SystolicConfig,
) -> Result<SystolicReport, SystolicError> {
    let (m, n) = (job.m_blocks, job.n_blocks);
    let p = job.out_col_blocks();
    if m == 0 || n == 0 || p == 0 {
        return Err(SystolicError::EmptyJob);
    }
    let a = operand(mem, "A", job.a_addr, m * LANES, n * LANES)?;
    let b = match job.mode {
        SystolicMode::Normal => Some(operand(mem, "B", job.b_addr, n * LANES, p * LANES)?),
        SystolicMode::Gramian => None,
    };
    let dst = operand(mem, "destination", job.dst_addr, m * LANES, p * LANES)?;
    if dst.base == a.base || b.is_some_and(|b| b.base == dst.base) {
        return Err(SystolicError::Overlap);
    }

    let dot = Dot { acc: cfg.accumulator };
    let depth = n * LANES;
    let mut report = SystolicReport::default();

    // Stream the 16 rows of A in block-row `br`: rows[r][k] = A[16br + r][k].
    let load_rows = |mem: &VectorMemory, h: &MatrixHandle, br: usize, reads: &mut u64| {
        let mut rows = vec![vec![CBf16::ZERO; depth]; LANES];
        for bc in 0..n {
            for (r, row) in rows.iter_mut().enumerate() {
                let (w, c) = mem.read(h.row_addr(br * LANES + r, bc), AccessMode::ShuffledRow)?;
                *reads += c;
                row[bc * LANES..][..LANES].copy_from_slice(&w.0);
            }
        }
        Ok::<_, MemError>(rows)
    };
    let load_cols = |mem: &VectorMemory, h: &MatrixHandle, bc: usize, reads: &mut u64| {
        let mut cols = vec![vec![CBf16::ZERO; depth]; LANES];
        for br in 0..n {
            for (c, col) in cols.iter_mut().enumerate() {
                let (w, cy) = mem.read(h.col_addr(bc * LANES + c, br), AccessMode::ShuffledColumn)?;
                *reads += cy;
                col[br * LANES..][..LANES].copy_from_slice(&w.0);
            }
        }
        Ok::<_, MemError>(cols)
    };

    let mut out: Vec<Option<[VectorWord; LANES]>> = vec![None; m * p];
    match b {
        Some(b) => {
            for j in 0..p {
                for i in 0..m {
                    let rows = load_rows(mem, &a, i, &mut report.read_cycles)?;
                    let cols = load_cols(mem, &b, j, &mut report.read_cycles)?;
                    let block = std::array::from_fn(|r| {
                        VectorWord::from_fn(|c| dot.run(&rows[r], &cols[c]))
                    });
                    out[j * m + i] = Some(block);
                }
            }
        }
        None => {
            for j in 0..m {
                for i in j..m {
                    let rows = load_rows(mem, &a, i, &mut report.read_cycles)?;
                    let conj_cols = if i == j {
                        rows.clone()
                    } else {
                        load_rows(mem, &a, j, &mut report.read_cycles)?
                    };
                    let cols: Vec<Vec<CBf16>> = conj_cols
                        .iter()
                        .map(|row| row.iter().map(|z| z.conj()).collect())
                        .collect();
                    let block: [VectorWord; LANES] = std::array::from_fn(|r| {
                        VectorWord::from_fn(|c| {
                            let gr = i * LANES + r;
                            let gc = j * LANES + c;
                            if gr < gc {
                                // above the diagonal inside a diagonal block
                                CBf16::ZERO
                            } else {
                                let z = dot.run(&rows[r], &cols[c]);
                                if gr == gc {
                                    CBf16::new(z.re, Bf16::ZERO)
                                } else {
                                    z
                                }
                            }
                        })
                    });
                    out[j * m + i] = Some(block);
                }
            }
            // mirror the strict lower triangle into the upper one
            for j in 0..m {
                for i in 0..=j {
                    let mut block = if i == j {
                        out[j * m + i].unwrap()
                    } else {
                        [VectorWord::ZERO; LANES]
                    };
                    let lower = out[i * m + j].unwrap();
                    for (r, row) in block.iter_mut().enumerate() {
                        for (c, src) in lower.iter().enumerate() {
                            if i * LANES + r < j * LANES + c {
                                row.0[c] = src.0[r].conj();
                            }
                        }
                    }
                    out[j * m + i] = Some(block);
                }
            }
        }
    }

    for j in 0..p {
        for i in 0..m {
            let block = out[j * m + i].as_ref().unwrap();
            for (r, row) in block.iter().enumerate() {
                report.write_cycles +=
                    mem.write(dst.row_addr(i * LANES + r, j), AccessMode::ShuffledRow, row, 0xFFFF)?;
            }
        }
    }
    report.overhead_cycles = (m * p) as u64 * BLOCK_OVERHEAD_CYCLES + FILL_CYCLES;
    report.total_cycles = report.read_cycles + report.write_cycles + report.overhead_cycles;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::CMatrix;

    fn setup(rows: usize, n: usize, cols: usize) -> (VectorMemory, MatrixHandle, MatrixHandle, MatrixHandle) {
        let mut mem = VectorMemory::with_words(4096);
        let a = mem.alloc(rows, n).unwrap();
        let b = mem.alloc(n, cols).unwrap();
        let c = mem.alloc(rows, cols).unwrap();
        (mem, a, b, c)
    }

    fn job(a: &MatrixHandle, b: &MatrixHandle, c: &MatrixHandle, mode: SystolicMode) -> SystolicJob {
        SystolicJob {
            a_addr: a.base,
            b_addr: b.base,
            dst_addr: c.base,
            m_blocks: a.rows / LANES,
            n_blocks: a.cols / LANES,
            p_blocks: c.cols / LANES,
            mode,
        }
    }

    #[test]
    fn smallest_job_costs_73() {
        let (mut mem, a, b, c) = setup(16, 16, 16);
        let r = execute(&job(&a, &b, &c, SystolicMode::Normal), &mut mem, &Default::default()).unwrap();
        assert_eq!((r.read_cycles, r.write_cycles, r.total_cycles), (32, 16, 73));
        assert_eq!(predict_cycles(1, 1, 1, SystolicMode::Normal), 64);
        assert_eq!(r.csv_row(&job(&a, &b, &c, SystolicMode::Normal)), "16,16,16,normal,32,16,25,73");
    }

    #[test]
    fn identity_passes_b_through() {
        let (mut mem, a, b, c) = setup(16, 16, 16);
        mem.write_matrix(&a, &CMatrix::identity(16)).unwrap();
        let bm = CMatrix::from_fn(16, 16, |r, c| CBf16::from_f64(r as f64 - 3.5, c as f64 * 0.25));
        mem.write_matrix(&b, &bm).unwrap();
        execute(&job(&a, &b, &c, SystolicMode::Normal), &mut mem, &Default::default()).unwrap();
        assert_eq!(mem.read_matrix(&c).unwrap(), bm);
    }

    #[test]
    fn predictions() {
        assert_eq!(predict_cycles(1, 8, 1, SystolicMode::Normal), 288);
        assert_eq!(predict_cycles(1, 8, 1, SystolicMode::Gramian), 160);
        assert_eq!(predict_cycles(2, 2, 2, SystolicMode::Normal), 384);
    }

    #[test]
    fn rejects_bad_jobs() {
        let (mut mem, a, b, c) = setup(32, 16, 16);
        let cfg = SystolicConfig::default();
        let mut j = job(&a, &b, &c, SystolicMode::Normal);
        j.n_blocks = 2;
        assert!(matches!(execute(&j, &mut mem, &cfg), Err(SystolicError::Dimension { .. })));
        let mut j = job(&a, &b, &c, SystolicMode::Normal);
        j.dst_addr = a.base;
        assert!(execute(&j, &mut mem, &cfg).is_err());
        let mut j = job(&a, &b, &c, SystolicMode::Normal);
        j.a_addr += 1;
        assert!(matches!(execute(&j, &mut mem, &cfg), Err(SystolicError::NoOperand { .. })));
    }
}
