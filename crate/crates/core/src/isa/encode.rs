//! Fixed 32-bit binary encoding.
//!
//! Bits 0..7 hold the opcode, operand fields are packed upward from bit 7.
//! Opcode 0 is reserved, so an all-zero word decodes to [`Instruction::Trap`].
//! Any word with an unknown opcode, an out-of-range field or stray bits set
//! above the used fields also decodes to `Trap`, which keeps decoding total
//! and the encoding injective.

use thiserror::Error;

use super::*;

pub(crate) const IMM15: (i64, i64) = (-(1 << 14), (1 << 14) - 1);
pub(crate) const IMM20: (i64, i64) = (-(1 << 19), (1 << 19) - 1);
pub(crate) const TARGET15: i64 = (1 << 15) - 1;
pub(crate) const TARGET20: i64 = (1 << 20) - 1;

mod op {
    pub const TRAP: u32 = 0;
    pub const ADD: u32 = 1;
    pub const SUB: u32 = 2;
    pub const AND: u32 = 3;
    pub const OR: u32 = 4;
    pub const XOR: u32 = 5;
    pub const ADDI: u32 = 6;
    pub const SLLI: u32 = 7;
    pub const SRLI: u32 = 8;
    pub const LI: u32 = 9;
    pub const LW: u32 = 10;
    pub const SW: u32 = 11;
    pub const BEQ: u32 = 12;
    pub const BNE: u32 = 13;
    pub const BLT: u32 = 14;
    pub const JAL: u32 = 15;
    pub const JALR: u32 = 16;
    pub const HALT: u32 = 17;
    pub const LDV: u32 = 32;
    pub const STV: u32 = 33;
    pub const ADDV: u32 = 34;
    pub const SUBV: u32 = 35;
    pub const MULV: u32 = 36;
    pub const VMAC: u32 = 37;
    pub const VMSUB: u32 = 38;
    pub const VDOT: u32 = 39;
    pub const IDXV: u32 = 40;
    pub const IDXVM: u32 = 41;
    pub const INV_SQRT: u32 = 42;
    pub const ADDS: u32 = 43;
    pub const SUBS: u32 = 44;
    pub const MULS: u32 = 45;
    pub const MV_VS: u32 = 46;
    pub const MV_XS: u32 = 47;
    pub const CVT_VS: u32 = 48;
    pub const CVT_XS: u32 = 49;
    pub const MV_VA: u32 = 50;
    pub const SYS_MUL: u32 = 56;
    pub const SYS_SZ: u32 = 57;
    pub const SYS_DES: u32 = 58;
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BinError {
    #[error("binary length {0} is not a multiple of 4 bytes")]
    Truncated(usize),
}

struct Packer {
    word: u32,
    pos: u32,
}

impl Packer {
    fn new(opcode: u32) -> Packer {
        Packer { word: opcode, pos: 7 }
    }

    fn put(mut self, value: u32, bits: u32) -> Packer {
        debug_assert!(value < (1 << bits), "field overflow");
        self.word |= (value & ((1 << bits) - 1)) << self.pos;
        self.pos += bits;
        self
    }

    fn put_signed(self, value: i32, bits: u32) -> Packer {
        let mask = (1u32 << bits) - 1;
        self.put(value as u32 & mask, bits)
    }
}

struct Unpacker {
    word: u32,
    pos: u32,
}

impl Unpacker {
    fn take(&mut self, bits: u32) -> u32 {
        let v = (self.word >> self.pos) & ((1 << bits) - 1);
        self.pos += bits;
        v
    }

    fn take_signed(&mut self, bits: u32) -> i32 {
        let v = self.take(bits);
        ((v << (32 - bits)) as i32) >> (32 - bits)
    }

    /// True if no bits are set above the consumed fields.
    fn clean(&self) -> bool {
        self.pos >= 32 || self.word >> self.pos == 0
    }
}

fn enc_mode(mode: AccessMode) -> u32 {
    match mode {
        AccessMode::Linear => 0,
        AccessMode::ShuffledRow => 1,
        AccessMode::ShuffledColumn => 2,
    }
}

fn enc_op1(a: Operand1) -> (u32, u32) {
    match a {
        Operand1::Reg(r) => (0, r.0 as u32),
        Operand1::Conj(r) => (1, r.0 as u32),
        Operand1::Zero => (2, 0),
    }
}

fn enc_op2(b: Operand2) -> (u32, u32, u32) {
    match b {
        Operand2::Reg(r) => (0, r.0 as u32, 0),
        Operand2::Conj(r) => (1, r.0 as u32, 0),
        Operand2::Indexed(r, s) => (2, r.0 as u32, s.0 as u32),
        Operand2::IndexedConj(r, s) => (3, r.0 as u32, s.0 as u32),
        Operand2::Scalar(s) => (4, 0, s.0 as u32),
        Operand2::Zero => (5, 0, 0),
    }
}

fn put_operands(p: Packer, a: Operand1, b: Operand2) -> Packer {
    let (am, ar) = enc_op1(a);
    let (bm, br, bi) = enc_op2(b);
    p.put(am, 2).put(ar, 4).put(bm, 3).put(br, 4).put(bi, 3)
}

fn take_operands(u: &mut Unpacker) -> Option<(Operand1, Operand2)> {
    let (am, ar) = (u.take(2), VReg(u.take(4) as u8));
    let (bm, br, bi) = (u.take(3), VReg(u.take(4) as u8), VsReg(u.take(3) as u8));
    let a = match am {
        0 => Operand1::Reg(ar),
        1 => Operand1::Conj(ar),
        2 if ar.0 == 0 => Operand1::Zero,
        _ => return None,
    };
    let b = match bm {
        0 if bi.0 == 0 => Operand2::Reg(br),
        1 if bi.0 == 0 => Operand2::Conj(br),
        2 => Operand2::Indexed(br, bi),
        3 => Operand2::IndexedConj(br, bi),
        4 if br.0 == 0 => Operand2::Scalar(bi),
        5 if br.0 == 0 && bi.0 == 0 => Operand2::Zero,
        _ => return None,
    };
    Some((a, b))
}

/// Encode one instruction.
///
/// Panics if an immediate or target lies outside its field; the assembler
/// rejects such values before they reach here.
pub fn encode(i: &Instruction) -> u32 {
    use Instruction as I;
    let x = |r: XReg| r.0 as u32;
    let v = |r: VReg| r.0 as u32;
    let s = |r: VsReg| r.0 as u32;
    let check = |val: i64, (lo, hi): (i64, i64)| {
        assert!((lo..=hi).contains(&val), "immediate {val} does not fit its field");
    };
    let p = match *i {
        I::Trap => return op::TRAP,
        I::Halt => Packer::new(op::HALT),
        I::Alu { op: o, rd, rs1, rs2 } => {
            let code = match o {
                AluOp::Add => op::ADD,
                AluOp::Sub => op::SUB,
                AluOp::And => op::AND,
                AluOp::Or => op::OR,
                AluOp::Xor => op::XOR,
            };
            Packer::new(code).put(x(rd), 5).put(x(rs1), 5).put(x(rs2), 5)
        }
        I::Addi { rd, rs1, imm } => {
            check(imm as i64, IMM15);
            Packer::new(op::ADDI).put(x(rd), 5).put(x(rs1), 5).put_signed(imm, 15)
        }
        I::Shift { op: o, rd, rs1, shamt } => {
            let code = if o == ShiftOp::Sll { op::SLLI } else { op::SRLI };
            Packer::new(code).put(x(rd), 5).put(x(rs1), 5).put(shamt as u32, 5)
        }
        I::Li { rd, imm } => {
            check(imm as i64, IMM20);
            Packer::new(op::LI).put(x(rd), 5).put_signed(imm, 20)
        }
        I::Lw { rd, rs1, offset } => {
            check(offset as i64, IMM15);
            Packer::new(op::LW).put(x(rd), 5).put(x(rs1), 5).put_signed(offset, 15)
        }
        I::Sw { rs2, rs1, offset } => {
            check(offset as i64, IMM15);
            Packer::new(op::SW).put(x(rs2), 5).put(x(rs1), 5).put_signed(offset, 15)
        }
        I::Branch { cond, rs1, rs2, target } => {
            check(target as i64, (0, TARGET15));
            let code = match cond {
                BranchCond::Eq => op::BEQ,
                BranchCond::Ne => op::BNE,
                BranchCond::Lt => op::BLT,
            };
            Packer::new(code).put(x(rs1), 5).put(x(rs2), 5).put(target, 15)
        }
        I::Jal { rd, target } => {
            check(target as i64, (0, TARGET20));
            Packer::new(op::JAL).put(x(rd), 5).put(target, 20)
        }
        I::Jalr { rd, rs1, offset } => {
            check(offset as i64, IMM15);
            Packer::new(op::JALR).put(x(rd), 5).put(x(rs1), 5).put_signed(offset, 15)
        }
        I::Ldv { vd, va, post_inc, mode } => Packer::new(op::LDV)
            .put(v(vd), 4)
            .put(va.0 as u32, 3)
            .put(post_inc as u32, 1)
            .put(enc_mode(mode), 2),
        I::Stv { vs, va, post_inc, mode, mask } => Packer::new(op::STV)
            .put(v(vs), 4)
            .put(va.0 as u32, 3)
            .put(post_inc as u32, 1)
            .put(enc_mode(mode), 2)
            .put(mask.is_some() as u32, 1)
            .put(mask.map_or(0, s), 3),
        I::Vec { op: o, vd, a, b } => {
            let code = match o {
                VecOp::Add => op::ADDV,
                VecOp::Sub => op::SUBV,
                VecOp::Mul => op::MULV,
                VecOp::Mac => op::VMAC,
                VecOp::Msub => op::VMSUB,
            };
            put_operands(Packer::new(code).put(v(vd), 4), a, b)
        }
        I::Vdot { vsd, a, b } => put_operands(Packer::new(op::VDOT).put(s(vsd), 3), a, b),
        I::Idxv { rd, v: vr, ridx } => {
            Packer::new(op::IDXV).put(x(rd), 5).put(v(vr), 4).put(x(ridx), 5)
        }
        I::Idxvm { v: vr, src, ridx } => {
            Packer::new(op::IDXVM).put(v(vr), 4).put(s(src), 3).put(x(ridx), 5)
        }
        I::InvSqrt { vsd, vss } => Packer::new(op::INV_SQRT).put(s(vsd), 3).put(s(vss), 3),
        I::Scalar { op: o, vsd, a, b } => {
            let code = match o {
                ScalarOp::Add => op::ADDS,
                ScalarOp::Sub => op::SUBS,
                ScalarOp::Mul => op::MULS,
            };
            Packer::new(code).put(s(vsd), 3).put(s(a), 3).put(s(b), 3)
        }
        I::MvVs { vsd, rs } => Packer::new(op::MV_VS).put(s(vsd), 3).put(x(rs), 5),
        I::MvXs { rd, vss } => Packer::new(op::MV_XS).put(x(rd), 5).put(s(vss), 3),
        I::CvtVs { vsd, rs } => Packer::new(op::CVT_VS).put(s(vsd), 3).put(x(rs), 5),
        I::CvtXs { rd, vss } => Packer::new(op::CVT_XS).put(x(rd), 5).put(s(vss), 3),
        I::MvVa { va, rs } => Packer::new(op::MV_VA).put(va.0 as u32, 3).put(x(rs), 5),
        I::SysMul { ra, rb } => Packer::new(op::SYS_MUL).put(x(ra), 5).put(x(rb), 5),
        I::SysSz { m, n, p, mode } => {
            assert!(m > 0 && n > 0 && p > 0, "systolic dimensions must be nonzero");
            Packer::new(op::SYS_SZ)
                .put(m as u32, 8)
                .put(n as u32, 8)
                .put(p as u32, 8)
                .put((mode == SystolicMode::Gramian) as u32, 1)
        }
        I::SysDes { rd } => Packer::new(op::SYS_DES).put(x(rd), 5),
    };
    p.word
}

/// Decode one word. Never fails: malformed words become [`Instruction::Trap`].
pub fn decode(word: u32) -> Instruction {
    decode_checked(word).unwrap_or(Instruction::Trap)
}

fn decode_checked(word: u32) -> Option<Instruction> {
    use Instruction as I;
    let mut u = Unpacker { word, pos: 7 };
    let opcode = word & 0x7F;
    let xr = |u: &mut Unpacker| XReg(u.take(5) as u8);
    let vr = |u: &mut Unpacker| VReg(u.take(4) as u8);
    let sr = |u: &mut Unpacker| VsReg(u.take(3) as u8);
    let ar = |u: &mut Unpacker| VaReg(u.take(3) as u8);
    let mode = |u: &mut Unpacker| match u.take(2) {
        0 => Some(AccessMode::Linear),
        1 => Some(AccessMode::ShuffledRow),
        2 => Some(AccessMode::ShuffledColumn),
        _ => None,
    };
    let alu = |u: &mut Unpacker, o| I::Alu { op: o, rd: xr(u), rs1: xr(u), rs2: xr(u) };
    let branch = |u: &mut Unpacker, cond| I::Branch {
        cond,
        rs1: xr(u),
        rs2: xr(u),
        target: u.take(15),
    };
    let vec = |u: &mut Unpacker, o| -> Option<Instruction> {
        let vd = vr(u);
        let (a, b) = take_operands(u)?;
        Some(I::Vec { op: o, vd, a, b })
    };
    let scalar = |u: &mut Unpacker, o| I::Scalar { op: o, vsd: sr(u), a: sr(u), b: sr(u) };

    let inst = match opcode {
        op::ADD => alu(&mut u, AluOp::Add),
        op::SUB => alu(&mut u, AluOp::Sub),
        op::AND => alu(&mut u, AluOp::And),
        op::OR => alu(&mut u, AluOp::Or),
        op::XOR => alu(&mut u, AluOp::Xor),
        op::ADDI => I::Addi { rd: xr(&mut u), rs1: xr(&mut u), imm: u.take_signed(15) },
        op::SLLI | op::SRLI => I::Shift {
            op: if opcode == op::SLLI { ShiftOp::Sll } else { ShiftOp::Srl },
            rd: xr(&mut u),
            rs1: xr(&mut u),
            shamt: u.take(5) as u8,
        },
        op::LI => I::Li { rd: xr(&mut u), imm: u.take_signed(20) },
        op::LW => I::Lw { rd: xr(&mut u), rs1: xr(&mut u), offset: u.take_signed(15) },
        op::SW => I::Sw { rs2: xr(&mut u), rs1: xr(&mut u), offset: u.take_signed(15) },
        op::BEQ => branch(&mut u, BranchCond::Eq),
        op::BNE => branch(&mut u, BranchCond::Ne),
        op::BLT => branch(&mut u, BranchCond::Lt),
        op::JAL => I::Jal { rd: xr(&mut u), target: u.take(20) },
        op::JALR => I::Jalr { rd: xr(&mut u), rs1: xr(&mut u), offset: u.take_signed(15) },
        op::HALT => I::Halt,
        op::LDV => I::Ldv {
            vd: vr(&mut u),
            va: ar(&mut u),
            post_inc: u.take(1) == 1,
            mode: mode(&mut u)?,
        },
        op::STV => {
            let (vs, va, post_inc, m) = (vr(&mut u), ar(&mut u), u.take(1) == 1, mode(&mut u)?);
            let (en, k) = (u.take(1), sr(&mut u));
            let mask = match en {
                1 => Some(k),
                _ if k.0 == 0 => None,
                _ => return None,
            };
            I::Stv { vs, va, post_inc, mode: m, mask }
        }
        op::ADDV => vec(&mut u, VecOp::Add)?,
        op::SUBV => vec(&mut u, VecOp::Sub)?,
        op::MULV => vec(&mut u, VecOp::Mul)?,
        op::VMAC => vec(&mut u, VecOp::Mac)?,
        op::VMSUB => vec(&mut u, VecOp::Msub)?,
        op::VDOT => {
            let vsd = sr(&mut u);
            let (a, b) = take_operands(&mut u)?;
            I::Vdot { vsd, a, b }
        }
        op::IDXV => I::Idxv { rd: xr(&mut u), v: vr(&mut u), ridx: xr(&mut u) },
        op::IDXVM => I::Idxvm { v: vr(&mut u), src: sr(&mut u), ridx: xr(&mut u) },
        op::INV_SQRT => I::InvSqrt { vsd: sr(&mut u), vss: sr(&mut u) },
        op::ADDS => scalar(&mut u, ScalarOp::Add),
        op::SUBS => scalar(&mut u, ScalarOp::Sub),
        op::MULS => scalar(&mut u, ScalarOp::Mul),
        op::MV_VS => I::MvVs { vsd: sr(&mut u), rs: xr(&mut u) },
        op::MV_XS => I::MvXs { rd: xr(&mut u), vss: sr(&mut u) },
        op::CVT_VS => I::CvtVs { vsd: sr(&mut u), rs: xr(&mut u) },
        op::CVT_XS => I::CvtXs { rd: xr(&mut u), vss: sr(&mut u) },
        op::MV_VA => I::MvVa { va: ar(&mut u), rs: xr(&mut u) },
        op::SYS_MUL => I::SysMul { ra: xr(&mut u), rb: xr(&mut u) },
        op::SYS_SZ => {
            let (m, n, p) = (u.take(8) as u8, u.take(8) as u8, u.take(8) as u8);
            if m == 0 || n == 0 || p == 0 {
                return None;
            }
            let mode = if u.take(1) == 1 { SystolicMode::Gramian } else { SystolicMode::Normal };
            I::SysSz { m, n, p, mode }
        }
        op::SYS_DES => I::SysDes { rd: xr(&mut u) },
        _ => return None,
    };
    u.clean().then_some(inst)
}

/// Flat little-endian image, one word per instruction.
pub fn encode_program(p: &Program) -> Vec<u8> {
    p.instructions.iter().flat_map(|i| encode(i).to_le_bytes()).collect()
}

/// Inverse of [`encode_program`]. Labels are not stored in the image and
/// the entry point is index 0.
pub fn decode_program(bytes: &[u8]) -> Result<Program, BinError> {
    if !bytes.len().is_multiple_of(4) {
        return Err(BinError::Truncated(bytes.len()));
    }
    let instructions = bytes
        .chunks_exact(4)
        .map(|c| decode(u32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    Ok(Program::new(instructions))
}
