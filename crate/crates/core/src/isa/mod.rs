//! Instruction set: a small integer scalar base plus the vector, scalar
//! bfloat16 and systolic extensions.

mod asm;
mod encode;

use std::collections::BTreeMap;
use std::fmt;

pub use asm::{assemble, disassemble, AsmError};
pub use encode::{decode, decode_program, encode, encode_program, BinError};

use crate::memory::AccessMode;

pub const NUM_X: u8 = 32;
pub const NUM_V: u8 = 16;
pub const NUM_VA: u8 = 8;
pub const NUM_VS: u8 = 8;

macro_rules! reg {
    ($name:ident, $prefix:literal, $count:ident) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u8);

        impl $name {
            pub fn new(i: u8) -> Option<Self> {
                (i < $count).then_some($name(i))
            }

            #[inline]
            pub fn idx(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

reg!(XReg, "x", NUM_X);
reg!(VReg, "v", NUM_V);
reg!(VaReg, "va", NUM_VA);
reg!(VsReg, "vs", NUM_VS);

/// First vector operand after the decode-stage transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Operand1 {
    Reg(VReg),
    Conj(VReg),
    Zero,
}

/// Second vector operand after the decode-stage transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Operand2 {
    Reg(VReg),
    Conj(VReg),
    /// Lane `vs` of the register, broadcast to all lanes.
    Indexed(VReg, VsReg),
    /// Lane `vs` of the register, conjugated and broadcast.
    IndexedConj(VReg, VsReg),
    /// A vector-scalar register broadcast to all lanes.
    Scalar(VsReg),
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AluOp {
    Add,
    Sub,
    And,
    Or,
    Xor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ShiftOp {
    Sll,
    Srl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BranchCond {
    Eq,
    Ne,
    Lt,
}

/// Lane-wise vector operations. `Mac` and `Msub` accumulate into the
/// destination: `vd = vd +/- a * b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VecOp {
    Add,
    Sub,
    Mul,
    Mac,
    Msub,
}

/// Complex bfloat16 scalar operations on vector-scalar registers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScalarOp {
    Add,
    Sub,
    Mul,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SystolicMode {
    Normal,
    /// `C = A * A^H`; the B operand is ignored and `p` is taken to be `m`.
    Gramian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instruction {
    Alu { op: AluOp, rd: XReg, rs1: XReg, rs2: XReg },
    Addi { rd: XReg, rs1: XReg, imm: i32 },
    Shift { op: ShiftOp, rd: XReg, rs1: XReg, shamt: u8 },
    Li { rd: XReg, imm: i32 },
    /// Word-addressed scalar data memory.
    Lw { rd: XReg, rs1: XReg, offset: i32 },
    Sw { rs2: XReg, rs1: XReg, offset: i32 },
    Branch { cond: BranchCond, rs1: XReg, rs2: XReg, target: u32 },
    Jal { rd: XReg, target: u32 },
    Jalr { rd: XReg, rs1: XReg, offset: i32 },
    Halt,
    /// Reserved/illegal encoding. Executing it faults.
    Trap,

    Ldv { vd: VReg, va: VaReg, post_inc: bool, mode: AccessMode },
    Stv { vs: VReg, va: VaReg, post_inc: bool, mode: AccessMode, mask: Option<VsReg> },
    Vec { op: VecOp, vd: VReg, a: Operand1, b: Operand2 },
    Vdot { vsd: VsReg, a: Operand1, b: Operand2 },
    /// `rd = lane x[ridx] of v`, packed as `re | im << 16`.
    Idxv { rd: XReg, v: VReg, ridx: XReg },
    /// `lane x[ridx] of v = vs`.
    Idxvm { v: VReg, src: VsReg, ridx: XReg },
    InvSqrt { vsd: VsReg, vss: VsReg },
    Scalar { op: ScalarOp, vsd: VsReg, a: VsReg, b: VsReg },
    /// Bit move `x -> vs`.
    MvVs { vsd: VsReg, rs: XReg },
    /// Bit move `vs -> x`.
    MvXs { rd: XReg, vss: VsReg },
    /// Signed integer to bfloat16 real part.
    CvtVs { vsd: VsReg, rs: XReg },
    /// Real part truncated to a signed integer.
    CvtXs { rd: XReg, vss: VsReg },
    MvVa { va: VaReg, rs: XReg },

    SysMul { ra: XReg, rb: XReg },
    SysSz { m: u8, n: u8, p: u8, mode: SystolicMode },
    SysDes { rd: XReg },
}

impl Instruction {
    pub fn mnemonic(&self) -> &'static str {
        use Instruction::*;
        match self {
            Alu { op, .. } => match op {
                AluOp::Add => "add",
                AluOp::Sub => "sub",
                AluOp::And => "and",
                AluOp::Or => "or",
                AluOp::Xor => "xor",
            },
            Addi { .. } => "addi",
            Shift { op: ShiftOp::Sll, .. } => "slli",
            Shift { op: ShiftOp::Srl, .. } => "srli",
            Li { .. } => "li",
            Lw { .. } => "lw",
            Sw { .. } => "sw",
            Branch { cond, .. } => match cond {
                BranchCond::Eq => "beq",
                BranchCond::Ne => "bne",
                BranchCond::Lt => "blt",
            },
            Jal { .. } => "jal",
            Jalr { .. } => "jalr",
            Halt => "halt",
            Trap => "trap",
            Ldv { .. } => "ldv",
            Stv { .. } => "stv",
            Vec { op, .. } => match op {
                VecOp::Add => "addv",
                VecOp::Sub => "subv",
                VecOp::Mul => "mulv",
                VecOp::Mac => "vmac",
                VecOp::Msub => "vmsub",
            },
            Vdot { .. } => "vdot",
            Idxv { .. } => "idxv",
            Idxvm { .. } => "idxvm",
            InvSqrt { .. } => "inv.sqrt",
            Scalar { op, .. } => match op {
                ScalarOp::Add => "adds",
                ScalarOp::Sub => "subs",
                ScalarOp::Mul => "muls",
            },
            MvVs { .. } => "mv.vs",
            MvXs { .. } => "mv.xs",
            CvtVs { .. } => "cvt.vs",
            CvtXs { .. } => "cvt.xs",
            MvVa { .. } => "mv.va",
            SysMul { .. } => "sys.mul",
            SysSz { .. } => "sys.sz",
            SysDes { .. } => "sys.des",
        }
    }

    /// Absolute branch/jump target, if any.
    pub fn target(&self) -> Option<u32> {
        match *self {
            Instruction::Branch { target, .. } | Instruction::Jal { target, .. } => Some(target),
            _ => None,
        }
    }
}

impl fmt::Display for Operand1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand1::Reg(v) => write!(f, "{v}"),
            Operand1::Conj(v) => write!(f, "conj({v})"),
            Operand1::Zero => write!(f, "zero"),
        }
    }
}

impl fmt::Display for Operand2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand2::Reg(v) => write!(f, "{v}"),
            Operand2::Conj(v) => write!(f, "conj({v})"),
            Operand2::Indexed(v, s) => write!(f, "{v}[{s}]"),
            Operand2::IndexedConj(v, s) => write!(f, "conj({v}[{s}])"),
            Operand2::Scalar(s) => write!(f, "{s}"),
            Operand2::Zero => write!(f, "zero"),
        }
    }
}

/// An assembled program. Branch targets inside instructions are absolute
/// instruction indices; `labels` only carries names for printing.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub instructions: Vec<Instruction>,
    pub labels: BTreeMap<String, usize>,
    pub entry: usize,
}

impl Program {
    pub fn new(instructions: Vec<Instruction>) -> Program {
        Program {
            instructions,
            labels: BTreeMap::new(),
            entry: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }
}
