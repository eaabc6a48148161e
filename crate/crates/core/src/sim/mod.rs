//! Instruction-level simulator of the scalar core and the 16-lane vector
//! core, with the systolic array attached.
//!
//! The timing model is single-issue and in-order: every instruction pays
//! its issue cost, plus a load-use stall when it reads a register written
//! by the immediately preceding load, plus a penalty on taken control
//! transfers. `vdot` and `inv.sqrt` carry one extra cycle each. `sys.mul`
//! stalls the core for the whole systolic job.

mod trace;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bf16::{Bf16, CBf16, FpFlags};
use crate::isa::*;
use crate::memory::{MemError, VectorMemory, VectorWord, DEFAULT_VECTOR_MEMORY_BYTES, LANES};
use crate::systolic::{self, Accumulator, SystolicConfig, SystolicError, SystolicJob, SystolicReport};

pub use trace::TRACE_FORMAT;

/// Cycle costs. Plain data so experiments can swap it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostModel {
    pub issue: u64,
    pub load_use_stall: u64,
    pub taken_branch_penalty: u64,
    pub vdot_extra: u64,
    pub inv_sqrt_extra: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            issue: 1,
            load_use_stall: 1,
            taken_branch_penalty: 2,
            vdot_extra: 1,
            inv_sqrt_extra: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineConfig {
    pub cost: CostModel,
    pub vector_memory_bytes: usize,
    /// Scalar data memory, in 32-bit words.
    pub data_memory_words: usize,
    /// Accumulator used by the `vdot` reduction tree.
    pub vdot_accumulator: Accumulator,
    pub systolic: SystolicConfig,
    pub trace: bool,
}

impl Default for MachineConfig {
    fn default() -> Self {
        MachineConfig {
            cost: CostModel::default(),
            vector_memory_bytes: DEFAULT_VECTOR_MEMORY_BYTES,
            data_memory_words: 1024,
            vdot_accumulator: Accumulator::Bf16,
            systolic: SystolicConfig::default(),
            trace: false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Fault {
    #[error("pc {pc}: trap instruction")]
    Trap { pc: usize },
    #[error("pc {pc} outside program of {len} instructions")]
    PcOutOfBounds { pc: usize, len: usize },
    #[error("pc {pc}: {err}")]
    Memory { pc: usize, err: MemError },
    #[error("pc {pc}: data memory address {addr} out of range")]
    DataMemory { pc: usize, addr: i64 },
    #[error("pc {pc}: lane index {index} out of range")]
    LaneIndex { pc: usize, index: i64 },
    #[error("pc {pc}: systolic array not configured ({missing} not set)")]
    SystolicConfig { pc: usize, missing: &'static str },
    #[error("pc {pc}: systolic job rejected: {err}")]
    Systolic { pc: usize, err: SystolicError },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Halted,
    Timeout,
    Fault(Fault),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionReport {
    pub status: RunStatus,
    pub cycles: u64,
    /// Cycles spent on vector memory accesses, by the core and the array.
    pub memory_cycles: u64,
    /// Cycles the core spent stalled on the systolic array.
    pub systolic_cycles: u64,
    /// Breakdown of the systolic work, summed over all jobs.
    pub systolic: SystolicReport,
    pub retired: u64,
    pub instruction_counts: BTreeMap<&'static str, u64>,
    pub flags: FpFlags,
}

impl ExecutionReport {
    pub fn halted(&self) -> bool {
        self.status == RunStatus::Halted
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Reg {
    X(XReg),
    V(VReg),
    Va(VaReg),
    Vs(VsReg),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct SysConfig {
    size: Option<(u8, u8, u8, SystolicMode)>,
    dest: Option<u32>,
}

/// Architectural state plus the attached memories and counters.
#[derive(Clone, Debug)]
pub struct Machine {
    pub x: [u32; NUM_X as usize],
    pub v: [VectorWord; NUM_V as usize],
    pub va: [u32; NUM_VA as usize],
    pub vs: [CBf16; NUM_VS as usize],
    pub pc: usize,
    pub cycles: u64,
    pub memory_cycles: u64,
    pub systolic_cycles: u64,
    pub systolic: SystolicReport,
    pub retired: u64,
    pub flags: FpFlags,
    pub mem: VectorMemory,
    pub data: Vec<u32>,
    pub instruction_counts: BTreeMap<&'static str, u64>,
    config: MachineConfig,
    sys: SysConfig,
    pending_load: Option<Reg>,
    trace: Vec<String>,
}

impl Machine {
    pub fn new(config: MachineConfig) -> Machine {
        Machine {
            x: [0; NUM_X as usize],
            v: [VectorWord::ZERO; NUM_V as usize],
            va: [0; NUM_VA as usize],
            vs: [CBf16::ZERO; NUM_VS as usize],
            pc: 0,
            cycles: 0,
            memory_cycles: 0,
            systolic_cycles: 0,
            systolic: SystolicReport::default(),
            retired: 0,
            flags: FpFlags::default(),
            mem: VectorMemory::with_bytes(config.vector_memory_bytes),
            data: vec![0; config.data_memory_words],
            instruction_counts: BTreeMap::new(),
            sys: SysConfig::default(),
            pending_load: None,
            trace: Vec::new(),
            config,
        }
    }

    pub fn config(&self) -> &MachineConfig {
        &self.config
    }

    /// Trace lines collected so far (empty unless tracing is enabled).
    pub fn trace(&self) -> &[String] {
        &self.trace
    }

    pub fn take_trace(&mut self) -> Vec<String> {
        std::mem::take(&mut self.trace)
    }

    pub fn set_x(&mut self, r: usize, value: u32) {
        if r != 0 {
            self.x[r] = value;
        }
    }

    fn write_x(&mut self, r: XReg, value: u32) {
        self.set_x(r.idx(), value);
    }

    /// Run `program` from its entry point until it halts, faults or the
    /// cycle counter reaches `max_cycles`.
    pub fn run(&mut self, program: &Program, max_cycles: u64) -> ExecutionReport {
        self.pc = program.entry;
        let status = loop {
            if self.cycles >= max_cycles {
                break RunStatus::Timeout;
            }
            match self.step(program) {
                Ok(true) => break RunStatus::Halted,
                Ok(false) => {}
                Err(f) => break RunStatus::Fault(f),
            }
        };
        self.report(status)
    }

    pub fn report(&self, status: RunStatus) -> ExecutionReport {
        ExecutionReport {
            status,
            cycles: self.cycles,
            memory_cycles: self.memory_cycles,
            systolic_cycles: self.systolic_cycles,
            systolic: self.systolic,
            retired: self.retired,
            instruction_counts: self.instruction_counts.clone(),
            flags: self.flags,
        }
    }

    fn operand1(&self, a: Operand1) -> VectorWord {
        match a {
            Operand1::Reg(r) => self.v[r.idx()],
            Operand1::Conj(r) => self.v[r.idx()].conj(),
            Operand1::Zero => VectorWord::ZERO,
        }
    }

    fn lane_index(&self, s: VsReg, pc: usize) -> Result<usize, Fault> {
        let re = self.vs[s.idx()].re.to_f64();
        if re.fract() == 0.0 && (0.0..LANES as f64).contains(&re) {
            Ok(re as usize)
        } else {
            Err(Fault::LaneIndex {
                pc,
                index: if re.is_finite() { re as i64 } else { i64::MIN },
            })
        }
    }

    fn operand2(&self, b: Operand2, pc: usize) -> Result<VectorWord, Fault> {
        Ok(match b {
            Operand2::Reg(r) => self.v[r.idx()],
            Operand2::Conj(r) => self.v[r.idx()].conj(),
            Operand2::Indexed(r, s) => VectorWord::splat(self.v[r.idx()].lane(self.lane_index(s, pc)?)),
            Operand2::IndexedConj(r, s) => {
                VectorWord::splat(self.v[r.idx()].lane(self.lane_index(s, pc)?).conj())
            }
            Operand2::Scalar(s) => VectorWord::splat(self.vs[s.idx()]),
            Operand2::Zero => VectorWord::ZERO,
        })
    }

    fn xlane(&self, r: XReg, pc: usize) -> Result<usize, Fault> {
        let i = self.x[r.idx()] as i32;
        if (0..LANES as i32).contains(&i) {
            Ok(i as usize)
        } else {
            Err(Fault::LaneIndex { pc, index: i as i64 })
        }
    }

    fn data_addr(&self, base: XReg, offset: i32, pc: usize) -> Result<usize, Fault> {
        let addr = self.x[base.idx()] as i32 as i64 + offset as i64;
        if addr < 0 || addr as usize >= self.data.len() {
            return Err(Fault::DataMemory { pc, addr });
        }
        Ok(addr as usize)
    }

    fn vdot(&self, a: &VectorWord, b: &VectorWord) -> CBf16 {
        let products: Vec<CBf16> = (0..LANES).map(|i| a.lane(i).mul(b.lane(i))).collect();
        match self.config.vdot_accumulator {
            Accumulator::Bf16 => tree_sum(&products, CBf16::add),
            Accumulator::F32 => {
                let wide: Vec<(f32, f32)> =
                    products.iter().map(|z| (z.re.to_f32(), z.im.to_f32())).collect();
                let (re, im) = tree_sum(&wide, |p, q| (p.0 + q.0, p.1 + q.1));
                CBf16::from_f64(re as f64, im as f64)
            }
        }
    }

    /// Execute one instruction. Returns `Ok(true)` once `halt` retires.
    pub fn step(&mut self, program: &Program) -> Result<bool, Fault> {
        use Instruction as I;
        let pc = self.pc;
        let inst = *program.instructions.get(pc).ok_or(Fault::PcOutOfBounds {
            pc,
            len: program.len(),
        })?;
        let cost = self.config.cost;
        let start_cycles = self.cycles;

        if let Some(r) = self.pending_load.take() {
            if reads(&inst).contains(&r) {
                self.cycles += cost.load_use_stall;
            }
        }
        self.cycles += cost.issue;
        let mut next = pc + 1;
        let mut halted = false;
        let mut written: Vec<Reg> = Vec::new();
        let mem_fault = |err: MemError| Fault::Memory { pc, err };

        match inst {
            I::Trap => return Err(Fault::Trap { pc }),
            I::Halt => halted = true,
            I::Alu { op, rd, rs1, rs2 } => {
                let (a, b) = (self.x[rs1.idx()], self.x[rs2.idx()]);
                let r = match op {
                    AluOp::Add => a.wrapping_add(b),
                    AluOp::Sub => a.wrapping_sub(b),
                    AluOp::And => a & b,
                    AluOp::Or => a | b,
                    AluOp::Xor => a ^ b,
                };
                self.write_x(rd, r);
                written.push(Reg::X(rd));
            }
            I::Addi { rd, rs1, imm } => {
                self.write_x(rd, self.x[rs1.idx()].wrapping_add(imm as u32));
                written.push(Reg::X(rd));
            }
            I::Shift { op, rd, rs1, shamt } => {
                let a = self.x[rs1.idx()];
                self.write_x(rd, if op == ShiftOp::Sll { a << shamt } else { a >> shamt });
                written.push(Reg::X(rd));
            }
            I::Li { rd, imm } => {
                self.write_x(rd, imm as u32);
                written.push(Reg::X(rd));
            }
            I::Lw { rd, rs1, offset } => {
                let addr = self.data_addr(rs1, offset, pc)?;
                self.write_x(rd, self.data[addr]);
                written.push(Reg::X(rd));
                self.pending_load = Some(Reg::X(rd));
            }
            I::Sw { rs2, rs1, offset } => {
                let addr = self.data_addr(rs1, offset, pc)?;
                self.data[addr] = self.x[rs2.idx()];
            }
            I::Branch { cond, rs1, rs2, target } => {
                let (a, b) = (self.x[rs1.idx()], self.x[rs2.idx()]);
                let taken = match cond {
                    BranchCond::Eq => a == b,
                    BranchCond::Ne => a != b,
                    BranchCond::Lt => (a as i32) < (b as i32),
                };
                if taken {
                    next = target as usize;
                    self.cycles += cost.taken_branch_penalty;
                }
            }
            I::Jal { rd, target } => {
                self.write_x(rd, (pc + 1) as u32);
                written.push(Reg::X(rd));
                next = target as usize;
                self.cycles += cost.taken_branch_penalty;
            }
            I::Jalr { rd, rs1, offset } => {
                let t = self.x[rs1.idx()].wrapping_add(offset as u32);
                self.write_x(rd, (pc + 1) as u32);
                written.push(Reg::X(rd));
                next = t as usize;
                self.cycles += cost.taken_branch_penalty;
            }
            I::Ldv { vd, va, post_inc, mode } => {
                let addr = self.va[va.idx()] as usize;
                let (w, c) = self.mem.read(addr, mode).map_err(mem_fault)?;
                self.memory_cycles += c;
                self.cycles += c.saturating_sub(cost.issue);
                if post_inc {
                    let inc = self.mem.post_increment(addr, mode).map_err(mem_fault)?;
                    self.va[va.idx()] = (addr + inc) as u32;
                    written.push(Reg::Va(va));
                }
                self.v[vd.idx()] = w;
                written.push(Reg::V(vd));
                self.pending_load = Some(Reg::V(vd));
            }
            I::Stv { vs, va, post_inc, mode, mask } => {
                let addr = self.va[va.idx()] as usize;
                let bits = mask.map_or(0xFFFF, |k| self.vs[k.idx()].re.to_bits());
                let c = self
                    .mem
                    .write(addr, mode, &self.v[vs.idx()], bits)
                    .map_err(mem_fault)?;
                self.memory_cycles += c;
                self.cycles += c.saturating_sub(cost.issue);
                if post_inc {
                    let inc = self.mem.post_increment(addr, mode).map_err(mem_fault)?;
                    self.va[va.idx()] = (addr + inc) as u32;
                    written.push(Reg::Va(va));
                }
            }
            I::Vec { op, vd, a, b } => {
                let a = self.operand1(a);
                let b = self.operand2(b, pc)?;
                let d = self.v[vd.idx()];
                self.v[vd.idx()] = match op {
                    VecOp::Add => a.zip_map(&b, CBf16::add),
                    VecOp::Sub => a.zip_map(&b, CBf16::sub),
                    VecOp::Mul => a.zip_map(&b, CBf16::mul),
                    VecOp::Mac => VectorWord::from_fn(|i| d.lane(i).mac(a.lane(i), b.lane(i))),
                    VecOp::Msub => VectorWord::from_fn(|i| d.lane(i).msub(a.lane(i), b.lane(i))),
                };
                written.push(Reg::V(vd));
            }
            I::Vdot { vsd, a, b } => {
                let a = self.operand1(a);
                let b = self.operand2(b, pc)?;
                self.vs[vsd.idx()] = self.vdot(&a, &b);
                self.cycles += cost.vdot_extra;
                written.push(Reg::Vs(vsd));
            }
            I::Idxv { rd, v, ridx } => {
                let lane = self.xlane(ridx, pc)?;
                self.write_x(rd, self.v[v.idx()].lane(lane).to_bits());
                written.push(Reg::X(rd));
            }
            I::Idxvm { v, src, ridx } => {
                let lane = self.xlane(ridx, pc)?;
                let z = self.vs[src.idx()];
                self.v[v.idx()].set_lane(lane, z);
                written.push(Reg::V(v));
            }
            I::InvSqrt { vsd, vss } => {
                let r = self.vs[vss.idx()].re.inv_sqrt(&mut self.flags);
                self.vs[vsd.idx()] = CBf16::new(r, Bf16::ZERO);
                self.cycles += cost.inv_sqrt_extra;
                written.push(Reg::Vs(vsd));
            }
            I::Scalar { op, vsd, a, b } => {
                let (a, b) = (self.vs[a.idx()], self.vs[b.idx()]);
                self.vs[vsd.idx()] = match op {
                    ScalarOp::Add => a.add(b),
                    ScalarOp::Sub => a.sub(b),
                    ScalarOp::Mul => a.mul(b),
                };
                written.push(Reg::Vs(vsd));
            }
            I::MvVs { vsd, rs } => {
                self.vs[vsd.idx()] = CBf16::from_bits(self.x[rs.idx()]);
                written.push(Reg::Vs(vsd));
            }
            I::MvXs { rd, vss } => {
                self.write_x(rd, self.vs[vss.idx()].to_bits());
                written.push(Reg::X(rd));
            }
            I::CvtVs { vsd, rs } => {
                self.vs[vsd.idx()] = CBf16::real(self.x[rs.idx()] as i32 as f64);
                written.push(Reg::Vs(vsd));
            }
            I::CvtXs { rd, vss } => {
                // `as` truncates toward zero, saturates, and maps NaN to 0
                self.write_x(rd, self.vs[vss.idx()].re.to_f64() as i32 as u32);
                written.push(Reg::X(rd));
            }
            I::MvVa { va, rs } => {
                self.va[va.idx()] = self.x[rs.idx()];
                written.push(Reg::Va(va));
            }
            I::SysSz { m, n, p, mode } => self.sys.size = Some((m, n, p, mode)),
            I::SysDes { rd } => self.sys.dest = Some(self.x[rd.idx()]),
            I::SysMul { ra, rb } => {
                let (m, n, p, mode) = self
                    .sys
                    .size
                    .ok_or(Fault::SystolicConfig { pc, missing: "size" })?;
                let dst = self
                    .sys
                    .dest
                    .ok_or(Fault::SystolicConfig { pc, missing: "destination" })?;
                let job = SystolicJob {
                    a_addr: self.x[ra.idx()] as usize,
                    b_addr: self.x[rb.idx()] as usize,
                    dst_addr: dst as usize,
                    m_blocks: m as usize,
                    n_blocks: n as usize,
                    p_blocks: p as usize,
                    mode,
                };
                let r = systolic::execute(&job, &mut self.mem, &self.config.systolic)
                    .map_err(|err| Fault::Systolic { pc, err })?;
                self.cycles += r.total_cycles;
                self.systolic_cycles += r.total_cycles;
                self.memory_cycles += r.memory_cycles();
                self.systolic.read_cycles += r.read_cycles;
                self.systolic.write_cycles += r.write_cycles;
                self.systolic.overhead_cycles += r.overhead_cycles;
                self.systolic.total_cycles += r.total_cycles;
            }
        }

        self.retired += 1;
        *self.instruction_counts.entry(inst.mnemonic()).or_insert(0) += 1;
        if self.config.trace {
            let line = trace::line(self, start_cycles, pc, &inst, &written);
            self.trace.push(line);
        }
        self.pc = next;
        Ok(halted)
    }
}

/// Pairwise reduction `((0+1)+(2+3))+((4+5)+(6+7))...`.
fn tree_sum<T: Copy>(xs: &[T], add: impl Fn(T, T) -> T + Copy) -> T {
    if xs.len() == 1 {
        return xs[0];
    }
    let mid = xs.len() / 2;
    add(tree_sum(&xs[..mid], add), tree_sum(&xs[mid..], add))
}

fn op1_reads(a: Operand1, out: &mut Vec<Reg>) {
    if let Operand1::Reg(r) | Operand1::Conj(r) = a {
        out.push(Reg::V(r));
    }
}

fn op2_reads(b: Operand2, out: &mut Vec<Reg>) {
    match b {
        Operand2::Reg(r) | Operand2::Conj(r) => out.push(Reg::V(r)),
        Operand2::Indexed(r, s) | Operand2::IndexedConj(r, s) => {
            out.push(Reg::V(r));
            out.push(Reg::Vs(s));
        }
        Operand2::Scalar(s) => out.push(Reg::Vs(s)),
        Operand2::Zero => {}
    }
}

/// Registers an instruction reads, for hazard detection.
fn reads(i: &Instruction) -> Vec<Reg> {
    use Instruction as I;
    let mut out = Vec::new();
    match *i {
        I::Alu { rs1, rs2, .. } | I::Branch { rs1, rs2, .. } => {
            out.extend([Reg::X(rs1), Reg::X(rs2)]);
        }
        I::Sw { rs1, rs2, .. } => out.extend([Reg::X(rs1), Reg::X(rs2)]),
        I::Addi { rs1, .. } | I::Shift { rs1, .. } | I::Lw { rs1, .. } | I::Jalr { rs1, .. } => {
            out.push(Reg::X(rs1))
        }
        I::Ldv { va, .. } => out.push(Reg::Va(va)),
        I::Stv { vs, va, mask, .. } => {
            out.extend([Reg::V(vs), Reg::Va(va)]);
            out.extend(mask.map(Reg::Vs));
        }
        I::Vec { op, vd, a, b } => {
            if matches!(op, VecOp::Mac | VecOp::Msub) {
                out.push(Reg::V(vd));
            }
            op1_reads(a, &mut out);
            op2_reads(b, &mut out);
        }
        I::Vdot { a, b, .. } => {
            op1_reads(a, &mut out);
            op2_reads(b, &mut out);
        }
        I::Idxv { v, ridx, .. } => out.extend([Reg::V(v), Reg::X(ridx)]),
        I::Idxvm { v, src, ridx } => out.extend([Reg::V(v), Reg::Vs(src), Reg::X(ridx)]),
        I::InvSqrt { vss, .. } => out.push(Reg::Vs(vss)),
        I::Scalar { a, b, .. } => out.extend([Reg::Vs(a), Reg::Vs(b)]),
        I::MvVs { rs, .. } | I::CvtVs { rs, .. } | I::MvVa { rs, .. } => out.push(Reg::X(rs)),
        I::MvXs { vss, .. } | I::CvtXs { vss, .. } => out.push(Reg::Vs(vss)),
        I::SysMul { ra, rb } => out.extend([Reg::X(ra), Reg::X(rb)]),
        I::SysDes { rd } => out.push(Reg::X(rd)),
        I::Li { .. } | I::Jal { .. } | I::Halt | I::Trap | I::SysSz { .. } => {}
    }
    out
}

#[cfg(test)]
mod tests;
