//! Parallel vector memory, CNN memory and the copy-and-split DMA.
//!
//! Matrices live in the parallel vector memory as a flat array of 16-lane
//! words. A matrix is cut into 16x16 blocks; blocks are laid out one after
//! the other in column-major block order, and inside a block word `r` holds
//! row `r` of that block. A 32x32 matrix therefore occupies 64 words in the
//! order B(0,0), B(1,0), B(0,1), B(1,1).
//!
//! The shuffled access modes address registered matrices logically:
//!
//! * `ShuffledRow`: the word at the address is the 16-element row segment of
//!   one block. Post-increment moves to the same row of the next block
//!   column, so consecutive accesses walk a full matrix row.
//! * `ShuffledColumn`: the address names block `b` and column `c` (the word
//!   offset inside the block). The access gathers column `c` of block `b`
//!   across its 16 words. Post-increment moves to the next block row.
//!
//! Every access touches exactly one block and costs one cycle.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::bf16::{Bf16, CBf16};
use crate::fixed::Q15;
use crate::matrix::CMatrix;

pub const LANES: usize = 16;
/// Bytes in one parallel-vector-memory word (16 lanes x 2 x 16 bits).
pub const WORD_BYTES: usize = LANES * 4;
/// Bytes in one CNN-memory word (16 lanes of Q1.15).
pub const CNN_WORD_BYTES: usize = LANES * 2;
pub const DEFAULT_VECTOR_MEMORY_BYTES: usize = 512 * 1024;
pub const DEFAULT_CNN_MEMORY_BYTES: usize = 614 * 1024;
/// Fixed setup cost of one DMA transfer.
pub const DMA_SETUP_CYCLES: u64 = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MemError {
    #[error("vector address {addr} out of bounds (capacity {capacity} words)")]
    OutOfBounds { addr: usize, capacity: usize },
    #[error("element ({row}, {col}) outside {rows}x{cols} matrix")]
    ElementOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("{mode:?} access at address {addr} is not inside a registered matrix")]
    NoHandle { addr: usize, mode: AccessMode },
    #[error("invalid matrix shape {rows}x{cols}: dimensions must be positive multiples of 16")]
    BadShape { rows: usize, cols: usize },
    #[error("matrix at {base} ({rows}x{cols}) overlaps an existing matrix or exceeds memory")]
    HandleConflict { base: usize, rows: usize, cols: usize },
    #[error("matrix data is {got_rows}x{got_cols}, handle is {rows}x{cols}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("DMA fault: {0}")]
    Dma(String),
}

/// One 512-bit word: 16 complex bfloat16 lanes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct VectorWord(pub [CBf16; LANES]);

impl VectorWord {
    pub const ZERO: VectorWord = VectorWord([CBf16::ZERO; LANES]);

    pub fn splat(z: CBf16) -> VectorWord {
        VectorWord([z; LANES])
    }

    pub fn from_fn(f: impl FnMut(usize) -> CBf16) -> VectorWord {
        VectorWord(std::array::from_fn(f))
    }

    #[inline]
    pub fn lane(&self, i: usize) -> CBf16 {
        self.0[i]
    }

    #[inline]
    pub fn set_lane(&mut self, i: usize, z: CBf16) {
        self.0[i] = z;
    }

    pub fn conj(&self) -> VectorWord {
        VectorWord(self.0.map(|z| z.conj()))
    }

    pub fn zip_map(&self, other: &VectorWord, f: impl Fn(CBf16, CBf16) -> CBf16) -> VectorWord {
        VectorWord(std::array::from_fn(|i| f(self.0[i], other.0[i])))
    }
}

impl std::fmt::Debug for VectorWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// A matrix stored in block-wise column-major layout starting at `base`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MatrixHandle {
    pub base: usize,
    pub rows: usize,
    pub cols: usize,
}

impl MatrixHandle {
    pub fn new(base: usize, rows: usize, cols: usize) -> Result<MatrixHandle, MemError> {
        if rows == 0 || cols == 0 || !rows.is_multiple_of(LANES) || !cols.is_multiple_of(LANES) {
            return Err(MemError::BadShape { rows, cols });
        }
        Ok(MatrixHandle { base, rows, cols })
    }

    #[inline]
    pub fn row_blocks(&self) -> usize {
        self.rows / LANES
    }

    #[inline]
    pub fn col_blocks(&self) -> usize {
        self.cols / LANES
    }

    /// Number of vector words the matrix occupies.
    #[inline]
    pub fn words(&self) -> usize {
        self.row_blocks() * self.col_blocks() * LANES
    }

    #[inline]
    pub fn end(&self) -> usize {
        self.base + self.words()
    }

    #[inline]
    pub fn contains(&self, addr: usize) -> bool {
        addr >= self.base && addr < self.end()
    }

    /// First word of block `(br, bc)`.
    #[inline]
    pub fn block_addr(&self, br: usize, bc: usize) -> usize {
        self.base + (bc * self.row_blocks() + br) * LANES
    }

    /// Word and lane holding element `(row, col)`.
    pub fn position(&self, row: usize, col: usize) -> Result<(usize, usize), MemError> {
        if row >= self.rows || col >= self.cols {
            return Err(MemError::ElementOutOfRange {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        let addr = self.block_addr(row / LANES, col / LANES) + row % LANES;
        Ok((addr, col % LANES))
    }

    /// Address of the shuffled-row access that returns elements
    /// `(row, 16*bc .. 16*bc+16)`.
    pub fn row_addr(&self, row: usize, bc: usize) -> usize {
        self.block_addr(row / LANES, bc) + row % LANES
    }

    /// Address of the shuffled-column access that returns elements
    /// `(16*br .. 16*br+16, col)`.
    pub fn col_addr(&self, col: usize, br: usize) -> usize {
        self.block_addr(br, col / LANES) + col % LANES
    }

    fn overlaps(&self, other: &MatrixHandle) -> bool {
        self.base < other.end() && other.base < self.end()
    }
}

/// How a vector load or store interprets its address.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum AccessMode {
    #[default]
    Linear,
    /// `[mode0]`
    ShuffledRow,
    /// `[mode1]`
    ShuffledColumn,
}

/// The parallel vector memory shared by the vector core and the systolic array.
#[derive(Clone, Debug)]
pub struct VectorMemory {
    words: Vec<VectorWord>,
    handles: Vec<MatrixHandle>,
    next_free: usize,
}

impl Default for VectorMemory {
    fn default() -> Self {
        VectorMemory::with_bytes(DEFAULT_VECTOR_MEMORY_BYTES)
    }
}

impl VectorMemory {
    pub fn with_words(words: usize) -> VectorMemory {
        VectorMemory {
            words: vec![VectorWord::ZERO; words],
            handles: Vec::new(),
            next_free: 0,
        }
    }

    pub fn with_bytes(bytes: usize) -> VectorMemory {
        VectorMemory::with_words(bytes / WORD_BYTES)
    }

    #[inline]
    pub fn capacity(&self) -> usize {
        self.words.len()
    }

    pub fn handles(&self) -> &[MatrixHandle] {
        &self.handles
    }

    /// Register a matrix so shuffled accesses and the systolic array can
    /// address it. Matrices may not overlap.
    pub fn register(&mut self, h: MatrixHandle) -> Result<(), MemError> {
        if h.end() > self.capacity() || self.handles.iter().any(|o| o.overlaps(&h)) {
            return Err(MemError::HandleConflict {
                base: h.base,
                rows: h.rows,
                cols: h.cols,
            });
        }
        self.handles.push(h);
        self.next_free = self.next_free.max(h.end());
        Ok(())
    }

    /// Bump-allocate and register a zero-filled `rows x cols` matrix.
    pub fn alloc(&mut self, rows: usize, cols: usize) -> Result<MatrixHandle, MemError> {
        let h = MatrixHandle::new(self.next_free, rows, cols)?;
        self.register(h)?;
        for w in &mut self.words[h.base..h.end()] {
            *w = VectorWord::ZERO;
        }
        Ok(h)
    }

    /// Bump-allocate `n` unregistered linear words (vectors, scratch).
    pub fn alloc_words(&mut self, n: usize) -> Result<usize, MemError> {
        let base = self.next_free;
        if base + n > self.capacity() {
            return Err(MemError::OutOfBounds {
                addr: base + n,
                capacity: self.capacity(),
            });
        }
        self.next_free += n;
        Ok(base)
    }

    pub fn handle_at(&self, addr: usize) -> Option<&MatrixHandle> {
        self.handles.iter().find(|h| h.contains(addr))
    }

    /// Registered handle whose base is exactly `addr`.
    pub fn handle_based_at(&self, addr: usize) -> Option<MatrixHandle> {
        self.handles.iter().copied().find(|h| h.base == addr)
    }

    fn check(&self, addr: usize) -> Result<(), MemError> {
        if addr >= self.capacity() {
            return Err(MemError::OutOfBounds {
                addr,
                capacity: self.capacity(),
            });
        }
        Ok(())
    }

    fn shuffled(&self, addr: usize, mode: AccessMode) -> Result<MatrixHandle, MemError> {
        self.check(addr)?;
        self.handle_at(addr)
            .copied()
            .ok_or(MemError::NoHandle { addr, mode })
    }

    /// Direct word access without timing or mode checks (host side).
    pub fn word(&self, addr: usize) -> Result<VectorWord, MemError> {
        self.check(addr)?;
        Ok(self.words[addr])
    }

    pub fn set_word(&mut self, addr: usize, w: VectorWord) -> Result<(), MemError> {
        self.check(addr)?;
        self.words[addr] = w;
        Ok(())
    }

    /// Read one vector. Returns the word and the cycles spent.
    pub fn read(&self, addr: usize, mode: AccessMode) -> Result<(VectorWord, u64), MemError> {
        match mode {
            AccessMode::Linear => {
                self.check(addr)?;
                Ok((self.words[addr], 1))
            }
            AccessMode::ShuffledRow => {
                self.shuffled(addr, mode)?;
                Ok((self.words[addr], 1))
            }
            AccessMode::ShuffledColumn => {
                let h = self.shuffled(addr, mode)?;
                let off = addr - h.base;
                let block = h.base + off / LANES * LANES;
                let c = off % LANES;
                Ok((VectorWord::from_fn(|r| self.words[block + r].lane(c)), 1))
            }
        }
    }

    /// Write the lanes of `w` selected by `mask` (bit i = lane i).
    pub fn write(
        &mut self,
        addr: usize,
        mode: AccessMode,
        w: &VectorWord,
        mask: u16,
    ) -> Result<u64, MemError> {
        match mode {
            AccessMode::Linear | AccessMode::ShuffledRow => {
                if mode == AccessMode::Linear {
                    self.check(addr)?;
                } else {
                    self.shuffled(addr, mode)?;
                }
                let dst = &mut self.words[addr];
                for i in 0..LANES {
                    if mask & (1 << i) != 0 {
                        dst.0[i] = w.0[i];
                    }
                }
            }
            AccessMode::ShuffledColumn => {
                let h = self.shuffled(addr, mode)?;
                let off = addr - h.base;
                let block = h.base + off / LANES * LANES;
                let c = off % LANES;
                for r in 0..LANES {
                    if mask & (1 << r) != 0 {
                        self.words[block + r].0[c] = w.0[r];
                    }
                }
            }
        }
        Ok(1)
    }

    /// Address step applied by a post-incrementing access.
    pub fn post_increment(&self, addr: usize, mode: AccessMode) -> Result<usize, MemError> {
        match mode {
            AccessMode::Linear => Ok(1),
            AccessMode::ShuffledRow => Ok(self.shuffled(addr, mode)?.rows),
            AccessMode::ShuffledColumn => {
                self.shuffled(addr, mode)?;
                Ok(LANES)
            }
        }
    }

    /// Store a host matrix into the block layout of `h`.
    pub fn write_matrix(&mut self, h: &MatrixHandle, m: &CMatrix) -> Result<(), MemError> {
        if m.rows() != h.rows || m.cols() != h.cols {
            return Err(MemError::ShapeMismatch {
                rows: h.rows,
                cols: h.cols,
                got_rows: m.rows(),
                got_cols: m.cols(),
            });
        }
        if h.end() > self.capacity() {
            return Err(MemError::OutOfBounds {
                addr: h.end(),
                capacity: self.capacity(),
            });
        }
        for r in 0..h.rows {
            for c in 0..h.cols {
                let (a, l) = h.position(r, c)?;
                self.words[a].0[l] = m.get(r, c);
            }
        }
        Ok(())
    }

    pub fn read_matrix(&self, h: &MatrixHandle) -> Result<CMatrix, MemError> {
        if h.end() > self.capacity() {
            return Err(MemError::OutOfBounds {
                addr: h.end(),
                capacity: self.capacity(),
            });
        }
        let mut m = CMatrix::zeros(h.rows, h.cols);
        for r in 0..h.rows {
            for c in 0..h.cols {
                let (a, l) = h.position(r, c)?;
                m.set(r, c, self.words[a].0[l]);
            }
        }
        Ok(m)
    }
}

/// The CNN accelerator's private memory: words of 16 Q1.15 lanes, flat.
#[derive(Clone, Debug)]
pub struct CnnMemory {
    data: Vec<Q15>,
}

impl Default for CnnMemory {
    fn default() -> Self {
        CnnMemory::with_bytes(DEFAULT_CNN_MEMORY_BYTES)
    }
}

impl CnnMemory {
    pub fn with_words(words: usize) -> CnnMemory {
        CnnMemory {
            data: vec![Q15::ZERO; words * LANES],
        }
    }

    pub fn with_bytes(bytes: usize) -> CnnMemory {
        CnnMemory::with_words(bytes / CNN_WORD_BYTES)
    }

    /// Capacity in words.
    pub fn capacity(&self) -> usize {
        self.data.len() / LANES
    }

    /// `len` elements starting at word `addr`.
    pub fn region(&self, addr: usize, len: usize) -> Result<&[Q15], MemError> {
        let start = addr * LANES;
        self.data.get(start..start + len).ok_or(MemError::OutOfBounds {
            addr: addr + len.div_ceil(LANES),
            capacity: self.capacity(),
        })
    }

    pub fn region_mut(&mut self, addr: usize, len: usize) -> Result<&mut [Q15], MemError> {
        let cap = self.capacity();
        let start = addr * LANES;
        self.data
            .get_mut(start..start + len)
            .ok_or(MemError::OutOfBounds {
                addr: addr + len.div_ceil(LANES),
                capacity: cap,
            })
    }

    pub fn read_word(&self, addr: usize) -> Result<[Q15; LANES], MemError> {
        let s = self.region(addr, LANES)?;
        Ok(std::array::from_fn(|i| s[i]))
    }
}

/// Copy a complex matrix out of the parallel vector memory into the CNN
/// memory as two row-major planes (real at `dst_re`, imaginary at `dst_im`).
/// Each part is scaled, rounded to nearest and saturated into Q1.15.
///
/// Returns the transfer time: two cycles per source word plus a fixed setup.
pub fn dma_copy_split(
    src_mem: &VectorMemory,
    src: &MatrixHandle,
    dst: &mut CnnMemory,
    dst_re: usize,
    dst_im: usize,
    scale: f32,
) -> Result<u64, MemError> {
    let elems = src.rows * src.cols;
    let plane_words = elems.div_ceil(LANES);
    let (lo, hi) = if dst_re <= dst_im { (dst_re, dst_im) } else { (dst_im, dst_re) };
    if lo + plane_words > hi {
        return Err(MemError::Dma(format!(
            "destination planes at {dst_re} and {dst_im} overlap ({plane_words} words each)"
        )));
    }
    if hi + plane_words > dst.capacity() {
        return Err(MemError::Dma(format!(
            "destination plane at {hi} exceeds CNN memory ({} words)",
            dst.capacity()
        )));
    }
    let m = src_mem
        .read_matrix(src)
        .map_err(|e| MemError::Dma(e.to_string()))?;
    let scale = scale as f64;
    let convert = |x: Bf16| Q15::from_f64(scale * x.to_f64());
    {
        let re = dst.region_mut(dst_re, elems)?;
        for (i, z) in m.as_slice().iter().enumerate() {
            re[i] = convert(z.re);
        }
    }
    let im = dst.region_mut(dst_im, elems)?;
    for (i, z) in m.as_slice().iter().enumerate() {
        im[i] = convert(z.im);
    }
    Ok(2 * src.words() as u64 + DMA_SETUP_CYCLES)
}

const MATRIX_MAGIC: &[u8; 4] = b"PVMM";
/// Element kind tag for complex bfloat16 pairs.
pub const ELEMENT_CBF16: u32 = 1;

/// Write a matrix file: 16-byte header (`PVMM`, rows, cols, element kind as
/// little-endian u32) followed by row-major `(re, im)` bfloat16 pairs.
pub fn write_matrix_file<W: Write>(mut w: W, m: &CMatrix) -> io::Result<()> {
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&(m.rows() as u32).to_le_bytes())?;
    w.write_all(&(m.cols() as u32).to_le_bytes())?;
    w.write_all(&ELEMENT_CBF16.to_le_bytes())?;
    for z in m.as_slice() {
        w.write_all(&z.re.to_bits().to_le_bytes())?;
        w.write_all(&z.im.to_bits().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_matrix_file<R: Read>(mut r: R) -> io::Result<CMatrix> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
    if &header[0..4] != MATRIX_MAGIC {
        return Err(bad("bad matrix magic"));
    }
    let u = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap()) as usize;
    let (rows, cols, kind) = (u(4), u(8), u(12) as u32);
    if kind != ELEMENT_CBF16 {
        return Err(bad("unsupported element kind"));
    }
    let mut buf = vec![0u8; rows * cols * 4];
    r.read_exact(&mut buf)?;
    let data = buf
        .chunks_exact(4)
        .map(|c| {
            CBf16::new(
                Bf16::from_bits(u16::from_le_bytes([c[0], c[1]])),
                Bf16::from_bits(u16::from_le_bytes([c[2], c[3]])),
            )
        })
        .collect();
    Ok(CMatrix::from_vec(rows, cols, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tagged(rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |r, c| CBf16::from_f64(r as f64, c as f64))
    }

    #[test]
    fn block_layout_examples() {
        let h = MatrixHandle::new(100, 16, 16).unwrap();
        assert_eq!(h.position(3, 7).unwrap(), (103, 7));
        let h = MatrixHandle::new(0, 32, 32).unwrap();
        assert_eq!(h.position(5, 20).unwrap(), (37, 4));
        assert_eq!(h.words(), 64);
        assert!(h.position(32, 0).is_err());
        assert!(MatrixHandle::new(0, 20, 16).is_err());
    }

    #[test]
    fn shuffled_column_gathers_a_column() {
        let mut mem = VectorMemory::with_words(64);
        let h = mem.alloc(16, 16).unwrap();
        mem.write_matrix(&h, &tagged(16, 16)).unwrap();
        let (w, cycles) = mem.read(h.col_addr(0, 0), AccessMode::ShuffledColumn).unwrap();
        assert_eq!(cycles, 1);
        for r in 0..16 {
            assert_eq!(w.lane(r), CBf16::from_f64(r as f64, 0.0));
        }
    }

    #[test]
    fn full_row_of_32x32_takes_two_accesses() {
        let mut mem = VectorMemory::with_words(128);
        let h = mem.alloc(32, 32).unwrap();
        mem.write_matrix(&h, &tagged(32, 32)).unwrap();
        let mut addr = h.row_addr(21, 0);
        let mut row = Vec::new();
        let mut cycles = 0;
        for _ in 0..h.col_blocks() {
            let (w, c) = mem.read(addr, AccessMode::ShuffledRow).unwrap();
            cycles += c;
            row.extend_from_slice(&w.0);
            addr += mem.post_increment(addr, AccessMode::ShuffledRow).unwrap();
        }
        assert_eq!(cycles, 2);
        for (c, z) in row.iter().enumerate() {
            assert_eq!(*z, CBf16::from_f64(21.0, c as f64));
        }
    }

    #[test]
    fn shuffled_access_needs_a_handle() {
        let mem = VectorMemory::with_words(64);
        assert!(matches!(
            mem.read(3, AccessMode::ShuffledColumn),
            Err(MemError::NoHandle { .. })
        ));
        assert!(mem.read(3, AccessMode::Linear).is_ok());
        assert!(mem.read(64, AccessMode::Linear).is_err());
    }

    #[test]
    fn masked_writes() {
        let mut mem = VectorMemory::with_words(32);
        let h = mem.alloc(16, 16).unwrap();
        let ones = VectorWord::splat(CBf16::ONE);
        mem.write(5, AccessMode::Linear, &ones, 0xFFFF).unwrap();
        assert_eq!(mem.word(5).unwrap(), ones);
        let before = mem.read_matrix(&h).unwrap();
        mem.write(6, AccessMode::Linear, &ones, 0).unwrap();
        assert_eq!(mem.read_matrix(&h).unwrap(), before);

        let addr = h.col_addr(9, 0);
        mem.write(addr, AccessMode::ShuffledColumn, &VectorWord::splat(CBf16::real(7.0)), 0x0001)
            .unwrap();
        let after = mem.read_matrix(&h).unwrap();
        let mut changed = Vec::new();
        for r in 0..16 {
            for c in 0..16 {
                if after.get(r, c) != before.get(r, c) {
                    changed.push((r, c));
                }
            }
        }
        assert_eq!(changed, vec![(0, 9)]);
        let (a, l) = h.position(0, 9).unwrap();
        assert_eq!(mem.word(a).unwrap().lane(l), CBf16::real(7.0));
    }

    #[test]
    fn handles_do_not_overlap() {
        let mut mem = VectorMemory::with_words(64);
        mem.register(MatrixHandle::new(0, 16, 16).unwrap()).unwrap();
        assert!(mem.register(MatrixHandle::new(8, 16, 16).unwrap()).is_err());
        assert!(mem.register(MatrixHandle::new(48, 32, 16).unwrap()).is_err());
    }

    #[test]
    fn dma_examples() {
        let mut mem = VectorMemory::with_words(1024);
        let h = mem.alloc(16, 16).unwrap();
        let mut m = CMatrix::zeros(16, 16);
        m.set(0, 0, CBf16::from_f64(1.0, -1.0));
        m.set(0, 1, CBf16::from_f64(2.0, 0.0));
        mem.write_matrix(&h, &m).unwrap();
        let mut cnn = CnnMemory::with_words(64);
        let cycles = dma_copy_split(&mem, &h, &mut cnn, 0, 16, 0.5).unwrap();
        assert_eq!(cycles, 2 * 16 + 8);
        assert_eq!(cnn.region(0, 1).unwrap()[0].0 as u16, 0x4000);
        assert_eq!(cnn.region(16, 1).unwrap()[0].0 as u16, 0xC000);
        dma_copy_split(&mem, &h, &mut cnn, 0, 16, 1.0).unwrap();
        assert_eq!(cnn.region(0, 2).unwrap()[1], Q15::MAX);

        let big = mem.alloc(64, 128).unwrap();
        let mut cnn = CnnMemory::with_words(2048);
        assert_eq!(dma_copy_split(&mem, &big, &mut cnn, 0, 512, 1.0).unwrap(), 1032);
    }

    #[test]
    fn dma_faults() {
        let mut mem = VectorMemory::with_words(64);
        let h = mem.alloc(16, 16).unwrap();
        let mut cnn = CnnMemory::with_words(40);
        assert!(matches!(dma_copy_split(&mem, &h, &mut cnn, 0, 8, 1.0), Err(MemError::Dma(_))));
        assert!(matches!(dma_copy_split(&mem, &h, &mut cnn, 0, 30, 1.0), Err(MemError::Dma(_))));
    }

    #[test]
    fn matrix_file_round_trip() {
        let m = tagged(16, 32);
        let mut buf = Vec::new();
        write_matrix_file(&mut buf, &m).unwrap();
        assert_eq!(&buf[0..4], b"PVMM");
        assert_eq!(buf.len(), 16 + 16 * 32 * 4);
        assert_eq!(read_matrix_file(&buf[..]).unwrap(), m);
        assert!(read_matrix_file(&b"XXXX\0\0\0\0\0\0\0\0\0\0\0\0"[..]).is_err());
    }
}
