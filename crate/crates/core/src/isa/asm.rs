//! Textual assembler and disassembler.
//!
//! One instruction or label per line, `#` starts a comment. Labels are
//! `name:` and may share a line with an instruction. Branch and jump
//! operands take a label or an absolute instruction index written `@N`.
//! `.entry <label>` sets the entry point.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use super::encode::{IMM15, IMM20, TARGET15, TARGET20};
use super::*;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct AsmError {
    pub line: usize,
    pub msg: String,
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, AsmError> {
    Err(AsmError {
        line,
        msg: msg.into(),
    })
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '.')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// Split `text` at commas that are not nested in parentheses or brackets.
fn split_operands(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in text.chars() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    if !cur.trim().is_empty() || !out.is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

struct Line<'a> {
    no: usize,
    mnemonic: &'a str,
    operands: Vec<String>,
}

/// Assemble source text into a [`Program`].
pub fn assemble(source: &str) -> Result<Program, AsmError> {
    let mut labels = BTreeMap::new();
    let mut lines = Vec::new();
    let mut entry: Option<(usize, String)> = None;

    for (i, raw) in source.lines().enumerate() {
        let no = i + 1;
        let mut text = raw.split('#').next().unwrap_or("").trim();
        while let Some(colon) = text.find(':') {
            let name = text[..colon].trim();
            if !is_ident(name) {
                break;
            }
            if labels.insert(name.to_string(), lines.len()).is_some() {
                return err(no, format!("duplicate label `{name}`"));
            }
            text = text[colon + 1..].trim();
        }
        if text.is_empty() {
            continue;
        }
        let (mnemonic, rest) = match text.find(char::is_whitespace) {
            Some(p) => (&text[..p], text[p..].trim()),
            None => (text, ""),
        };
        if mnemonic == ".entry" {
            entry = Some((no, rest.to_string()));
            continue;
        }
        lines.push(Line {
            no,
            mnemonic,
            operands: split_operands(rest),
        });
    }

    let mut instructions = Vec::with_capacity(lines.len());
    for line in &lines {
        instructions.push(parse_line(line, &labels)?);
    }
    let entry = match entry {
        None => 0,
        Some((no, name)) => resolve_target(&name, &labels, no, TARGET20)? as usize,
    };
    if entry > instructions.len() {
        return err(0, format!("entry point {entry} past end of program"));
    }
    Ok(Program {
        instructions,
        labels,
        entry,
    })
}

fn resolve_target(
    s: &str,
    labels: &BTreeMap<String, usize>,
    line: usize,
    limit: i64,
) -> Result<u32, AsmError> {
    let idx = if let Some(n) = s.strip_prefix('@') {
        parse_int(n, line)?
    } else if let Some(&i) = labels.get(s) {
        i as i64
    } else if is_ident(s) {
        return err(line, format!("unresolved label `{s}`"));
    } else {
        return err(line, format!("malformed branch target `{s}`"));
    };
    if idx < 0 || idx > limit {
        return err(line, format!("branch target {idx} out of range"));
    }
    Ok(idx as u32)
}

fn parse_int(s: &str, line: usize) -> Result<i64, AsmError> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let v = if let Some(h) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        i64::from_str_radix(h, 16)
    } else {
        body.parse::<i64>()
    };
    match v {
        Ok(v) => Ok(if neg { -v } else { v }),
        Err(_) => err(line, format!("malformed immediate `{s}`")),
    }
}

fn parse_imm(s: &str, line: usize, (lo, hi): (i64, i64)) -> Result<i32, AsmError> {
    let v = parse_int(s, line)?;
    if v < lo || v > hi {
        return err(line, format!("immediate {v} outside [{lo}, {hi}]"));
    }
    Ok(v as i32)
}

fn parse_reg(s: &str, prefix: &str, count: u8, line: usize) -> Result<u8, AsmError> {
    let s = s.trim();
    let bad = || err(line, format!("malformed operand `{s}`, expected {prefix}N"));
    let Some(n) = s.strip_prefix(prefix) else {
        return bad();
    };
    if n.is_empty() || !n.bytes().all(|b| b.is_ascii_digit()) {
        return bad();
    }
    match n.parse::<u8>() {
        Ok(i) if i < count => Ok(i),
        _ => err(line, format!("register `{s}` out of range")),
    }
}

fn x(s: &str, line: usize) -> Result<XReg, AsmError> {
    parse_reg(s, "x", NUM_X, line).map(XReg)
}

fn v(s: &str, line: usize) -> Result<VReg, AsmError> {
    // "va"/"vs" share the prefix; reject them explicitly
    if s.trim().starts_with("va") || s.trim().starts_with("vs") {
        return err(line, format!("malformed operand `{s}`, expected vN"));
    }
    parse_reg(s, "v", NUM_V, line).map(VReg)
}

fn va(s: &str, line: usize) -> Result<VaReg, AsmError> {
    parse_reg(s, "va", NUM_VA, line).map(VaReg)
}

fn vs(s: &str, line: usize) -> Result<VsReg, AsmError> {
    parse_reg(s, "vs", NUM_VS, line).map(VsReg)
}

fn paren_x(s: &str, line: usize) -> Result<XReg, AsmError> {
    let s = s.trim();
    match s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        Some(inner) => x(inner, line),
        None => err(line, format!("malformed operand `{s}`, expected (xN)")),
    }
}

fn unwrap_conj(s: &str) -> Option<&str> {
    s.trim()
        .strip_prefix("conj(")
        .and_then(|r| r.strip_suffix(')'))
        .map(str::trim)
}

fn operand1(s: &str, line: usize) -> Result<Operand1, AsmError> {
    if s.trim() == "zero" {
        return Ok(Operand1::Zero);
    }
    if let Some(inner) = unwrap_conj(s) {
        return Ok(Operand1::Conj(v(inner, line)?));
    }
    Ok(Operand1::Reg(v(s, line)?))
}

fn indexed(s: &str, line: usize) -> Result<Option<(VReg, VsReg)>, AsmError> {
    let s = s.trim();
    match s.find('[') {
        Some(open) if s.ends_with(']') => {
            Ok(Some((v(&s[..open], line)?, vs(&s[open + 1..s.len() - 1], line)?)))
        }
        Some(_) => err(line, format!("malformed indexed operand `{s}`")),
        None => Ok(None),
    }
}

fn operand2(s: &str, line: usize) -> Result<Operand2, AsmError> {
    let t = s.trim();
    if t == "zero" {
        return Ok(Operand2::Zero);
    }
    if let Some(inner) = unwrap_conj(t) {
        return Ok(match indexed(inner, line)? {
            Some((r, i)) => Operand2::IndexedConj(r, i),
            None => Operand2::Conj(v(inner, line)?),
        });
    }
    if let Some((r, i)) = indexed(t, line)? {
        return Ok(Operand2::Indexed(r, i));
    }
    if t.starts_with("vs") {
        return Ok(Operand2::Scalar(vs(t, line)?));
    }
    Ok(Operand2::Reg(v(t, line)?))
}

/// `offset(xN)`
fn mem_operand(s: &str, line: usize) -> Result<(i32, XReg), AsmError> {
    let s = s.trim();
    let (Some(open), true) = (s.find('('), s.ends_with(')')) else {
        return err(line, format!("malformed memory operand `{s}`"));
    };
    let off = if open == 0 { 0 } else { parse_imm(&s[..open], line, IMM15)? };
    Ok((off, x(&s[open + 1..s.len() - 1], line)?))
}

/// `(vaN[++]) [modeK] [mask vsM]`
fn vmem_operand(
    s: &str,
    line: usize,
    allow_mask: bool,
) -> Result<(VaReg, bool, AccessMode, Option<VsReg>), AsmError> {
    let s = s.trim();
    let Some(close) = s.find(')').filter(|_| s.starts_with('(')) else {
        return err(line, format!("malformed vector memory operand `{s}`"));
    };
    let inner = s[1..close].trim();
    let (reg, post_inc) = match inner.strip_suffix("++") {
        Some(r) => (r, true),
        None => (inner, false),
    };
    let reg = va(reg, line)?;
    let mut mode = AccessMode::Linear;
    let mut mask = None;
    let mut rest = s[close + 1..].trim();
    while !rest.is_empty() {
        let Some(end) = rest.find(']').filter(|_| rest.starts_with('[')) else {
            return err(line, format!("malformed modifier `{rest}`"));
        };
        let m = rest[1..end].trim();
        match m {
            "mode0" => mode = AccessMode::ShuffledRow,
            "mode1" => mode = AccessMode::ShuffledColumn,
            _ => match m.strip_prefix("mask") {
                Some(r) if allow_mask && r.starts_with(char::is_whitespace) => {
                    mask = Some(vs(r, line)?)
                }
                _ => return err(line, format!("unknown modifier `[{m}]`")),
            },
        }
        rest = rest[end + 1..].trim();
    }
    Ok((reg, post_inc, mode, mask))
}

fn parse_line(l: &Line<'_>, labels: &BTreeMap<String, usize>) -> Result<Instruction, AsmError> {
    use Instruction as I;
    let n = l.no;
    let ops = &l.operands;
    let want = |k: usize| -> Result<(), AsmError> {
        if ops.len() != k {
            err(n, format!("`{}` expects {k} operand(s), got {}", l.mnemonic, ops.len()))
        } else {
            Ok(())
        }
    };
    let alu = |op| -> Result<Instruction, AsmError> {
        want(3)?;
        Ok(I::Alu { op, rd: x(&ops[0], n)?, rs1: x(&ops[1], n)?, rs2: x(&ops[2], n)? })
    };
    let branch = |cond| -> Result<Instruction, AsmError> {
        want(3)?;
        Ok(I::Branch {
            cond,
            rs1: x(&ops[0], n)?,
            rs2: x(&ops[1], n)?,
            target: resolve_target(&ops[2], labels, n, TARGET15)?,
        })
    };
    let vec = |op| -> Result<Instruction, AsmError> {
        want(3)?;
        Ok(I::Vec { op, vd: v(&ops[0], n)?, a: operand1(&ops[1], n)?, b: operand2(&ops[2], n)? })
    };
    let scalar = |op| -> Result<Instruction, AsmError> {
        want(3)?;
        Ok(I::Scalar { op, vsd: vs(&ops[0], n)?, a: vs(&ops[1], n)?, b: vs(&ops[2], n)? })
    };
    let shift = |op| -> Result<Instruction, AsmError> {
        want(3)?;
        Ok(I::Shift {
            op,
            rd: x(&ops[0], n)?,
            rs1: x(&ops[1], n)?,
            shamt: parse_imm(&ops[2], n, (0, 31))? as u8,
        })
    };

    match l.mnemonic {
        "add" => alu(AluOp::Add),
        "sub" => alu(AluOp::Sub),
        "and" => alu(AluOp::And),
        "or" => alu(AluOp::Or),
        "xor" => alu(AluOp::Xor),
        "addi" => {
            want(3)?;
            Ok(I::Addi { rd: x(&ops[0], n)?, rs1: x(&ops[1], n)?, imm: parse_imm(&ops[2], n, IMM15)? })
        }
        "mv" => {
            want(2)?;
            Ok(I::Addi { rd: x(&ops[0], n)?, rs1: x(&ops[1], n)?, imm: 0 })
        }
        "nop" => {
            want(0)?;
            Ok(I::Addi { rd: XReg(0), rs1: XReg(0), imm: 0 })
        }
        "slli" => shift(ShiftOp::Sll),
        "srli" => shift(ShiftOp::Srl),
        "li" => {
            want(2)?;
            Ok(I::Li { rd: x(&ops[0], n)?, imm: parse_imm(&ops[1], n, IMM20)? })
        }
        "lw" => {
            want(2)?;
            let (offset, rs1) = mem_operand(&ops[1], n)?;
            Ok(I::Lw { rd: x(&ops[0], n)?, rs1, offset })
        }
        "sw" => {
            want(2)?;
            let (offset, rs1) = mem_operand(&ops[1], n)?;
            Ok(I::Sw { rs2: x(&ops[0], n)?, rs1, offset })
        }
        "beq" => branch(BranchCond::Eq),
        "bne" => branch(BranchCond::Ne),
        "blt" => branch(BranchCond::Lt),
        "jal" => {
            want(2)?;
            Ok(I::Jal { rd: x(&ops[0], n)?, target: resolve_target(&ops[1], labels, n, TARGET20)? })
        }
        "j" => {
            want(1)?;
            Ok(I::Jal { rd: XReg(0), target: resolve_target(&ops[0], labels, n, TARGET20)? })
        }
        "jalr" => {
            want(2)?;
            let (offset, rs1) = mem_operand(&ops[1], n)?;
            Ok(I::Jalr { rd: x(&ops[0], n)?, rs1, offset })
        }
        "halt" => want(0).map(|_| I::Halt),
        "trap" => want(0).map(|_| I::Trap),
        "ldv" => {
            want(2)?;
            let (va, post_inc, mode, _) = vmem_operand(&ops[1], n, false)?;
            Ok(I::Ldv { vd: v(&ops[0], n)?, va, post_inc, mode })
        }
        "stv" => {
            want(2)?;
            let (va, post_inc, mode, mask) = vmem_operand(&ops[1], n, true)?;
            Ok(I::Stv { vs: v(&ops[0], n)?, va, post_inc, mode, mask })
        }
        "addv" => vec(VecOp::Add),
        "subv" => vec(VecOp::Sub),
        "mulv" => vec(VecOp::Mul),
        "vmac" => vec(VecOp::Mac),
        "vmsub" => vec(VecOp::Msub),
        "vdot" => {
            want(3)?;
            Ok(I::Vdot { vsd: vs(&ops[0], n)?, a: operand1(&ops[1], n)?, b: operand2(&ops[2], n)? })
        }
        "idxv" => {
            want(3)?;
            Ok(I::Idxv { rd: x(&ops[0], n)?, v: v(&ops[1], n)?, ridx: x(&ops[2], n)? })
        }
        "idxvm" => {
            want(3)?;
            Ok(I::Idxvm { v: v(&ops[0], n)?, src: vs(&ops[1], n)?, ridx: x(&ops[2], n)? })
        }
        "inv.sqrt" => {
            want(2)?;
            Ok(I::InvSqrt { vsd: vs(&ops[0], n)?, vss: vs(&ops[1], n)? })
        }
        "adds" => scalar(ScalarOp::Add),
        "subs" => scalar(ScalarOp::Sub),
        "muls" => scalar(ScalarOp::Mul),
        "mv.vs" => {
            want(2)?;
            Ok(I::MvVs { vsd: vs(&ops[0], n)?, rs: x(&ops[1], n)? })
        }
        "mv.xs" => {
            want(2)?;
            Ok(I::MvXs { rd: x(&ops[0], n)?, vss: vs(&ops[1], n)? })
        }
        "cvt.vs" => {
            want(2)?;
            Ok(I::CvtVs { vsd: vs(&ops[0], n)?, rs: x(&ops[1], n)? })
        }
        "cvt.xs" => {
            want(2)?;
            Ok(I::CvtXs { rd: x(&ops[0], n)?, vss: vs(&ops[1], n)? })
        }
        "mv.va" => {
            want(2)?;
            Ok(I::MvVa { va: va(&ops[0], n)?, rs: x(&ops[1], n)? })
        }
        "sys.mul" => {
            want(2)?;
            Ok(I::SysMul { ra: paren_x(&ops[0], n)?, rb: paren_x(&ops[1], n)? })
        }
        "sys.des" => {
            want(1)?;
            Ok(I::SysDes { rd: paren_x(&ops[0], n)? })
        }
        "sys.sz" => {
            want(4)?;
            let dim = |s: &str| parse_imm(s, n, (1, 255)).map(|v| v as u8);
            let mode = match parse_imm(&ops[3], n, (0, 1))? {
                0 => SystolicMode::Normal,
                _ => SystolicMode::Gramian,
            };
            Ok(I::SysSz { m: dim(&ops[0])?, n: dim(&ops[1])?, p: dim(&ops[2])?, mode })
        }
        other => err(n, format!("unknown mnemonic `{other}`")),
    }
}

fn mode_suffix(mode: AccessMode) -> &'static str {
    match mode {
        AccessMode::Linear => "",
        AccessMode::ShuffledRow => " [mode0]",
        AccessMode::ShuffledColumn => " [mode1]",
    }
}

/// Render one instruction. `target_name` maps branch targets to label text.
pub(crate) fn format_instruction(i: &Instruction, target_name: &dyn Fn(u32) -> String) -> String {
    use Instruction as I;
    let m = i.mnemonic();
    match *i {
        I::Alu { rd, rs1, rs2, .. } => format!("{m} {rd}, {rs1}, {rs2}"),
        I::Addi { rd, rs1, imm } => format!("{m} {rd}, {rs1}, {imm}"),
        I::Shift { rd, rs1, shamt, .. } => format!("{m} {rd}, {rs1}, {shamt}"),
        I::Li { rd, imm } => format!("{m} {rd}, {imm}"),
        I::Lw { rd, rs1, offset } => format!("{m} {rd}, {offset}({rs1})"),
        I::Sw { rs2, rs1, offset } => format!("{m} {rs2}, {offset}({rs1})"),
        I::Branch { rs1, rs2, target, .. } => format!("{m} {rs1}, {rs2}, {}", target_name(target)),
        I::Jal { rd, target } => format!("{m} {rd}, {}", target_name(target)),
        I::Jalr { rd, rs1, offset } => format!("{m} {rd}, {offset}({rs1})"),
        I::Halt | I::Trap => m.to_string(),
        I::Ldv { vd, va, post_inc, mode } => format!(
            "{m} {vd}, ({va}{}){}",
            if post_inc { "++" } else { "" },
            mode_suffix(mode)
        ),
        I::Stv { vs, va, post_inc, mode, mask } => {
            let mut s = format!(
                "{m} {vs}, ({va}{}){}",
                if post_inc { "++" } else { "" },
                mode_suffix(mode)
            );
            if let Some(k) = mask {
                let _ = write!(s, " [mask {k}]");
            }
            s
        }
        I::Vec { vd, a, b, .. } => format!("{m} {vd}, {a}, {b}"),
        I::Vdot { vsd, a, b } => format!("{m} {vsd}, {a}, {b}"),
        I::Idxv { rd, v, ridx } => format!("{m} {rd}, {v}, {ridx}"),
        I::Idxvm { v, src, ridx } => format!("{m} {v}, {src}, {ridx}"),
        I::InvSqrt { vsd, vss } => format!("{m} {vsd}, {vss}"),
        I::Scalar { vsd, a, b, .. } => format!("{m} {vsd}, {a}, {b}"),
        I::MvVs { vsd, rs } | I::CvtVs { vsd, rs } => format!("{m} {vsd}, {rs}"),
        I::MvXs { rd, vss } | I::CvtXs { rd, vss } => format!("{m} {rd}, {vss}"),
        I::MvVa { va, rs } => format!("{m} {va}, {rs}"),
        I::SysMul { ra, rb } => format!("{m} ({ra}), ({rb})"),
        I::SysSz { m: bm, n, p, mode } => format!(
            "{m} {bm}, {n}, {p}, {}",
            match mode {
                SystolicMode::Normal => 0,
                SystolicMode::Gramian => 1,
            }
        ),
        I::SysDes { rd } => format!("{m} ({rd})"),
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&format_instruction(self, &|t| format!("@{t}")))
    }
}

/// Render a program as assembly text that [`assemble`] maps back to an
/// identical [`Program`].
pub fn disassemble(p: &Program) -> String {
    let mut by_index: HashMap<usize, Vec<&str>> = HashMap::new();
    for (name, &idx) in &p.labels {
        by_index.entry(idx).or_default().push(name);
    }
    let name_of = |t: u32| -> String {
        match by_index.get(&(t as usize)) {
            Some(names) => names[0].to_string(),
            None => format!("@{t}"),
        }
    };
    let mut out = String::new();
    if p.entry != 0 {
        let _ = writeln!(out, ".entry {}", name_of(p.entry as u32));
    }
    for idx in 0..=p.instructions.len() {
        if let Some(names) = by_index.get(&idx) {
            for name in names {
                let _ = writeln!(out, "{name}:");
            }
        }
        if let Some(i) = p.instructions.get(idx) {
            let _ = writeln!(out, "    {}", format_instruction(i, &name_of));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_examples_assemble() {
        let p = assemble("addv v1, v2, v3").unwrap();
        assert_eq!(
            p.instructions,
            vec![Instruction::Vec {
                op: VecOp::Add,
                vd: VReg(1),
                a: Operand1::Reg(VReg(2)),
                b: Operand2::Reg(VReg(3))
            }]
        );
        let p = assemble("ldv v0, (va1++) [mode0]").unwrap();
        assert_eq!(
            p.instructions[0],
            Instruction::Ldv { vd: VReg(0), va: VaReg(1), post_inc: true, mode: AccessMode::ShuffledRow }
        );
        let p = assemble("stv v1, (va4) [mode1] [mask vs1]").unwrap();
        assert_eq!(
            p.instructions[0],
            Instruction::Stv {
                vs: VReg(1),
                va: VaReg(4),
                post_inc: false,
                mode: AccessMode::ShuffledColumn,
                mask: Some(VsReg(1))
            }
        );
        let p = assemble("vmac v1, v3, v2[vs0]\nvdot vs0, v2, conj(v2)").unwrap();
        assert_eq!(
            p.instructions[1],
            Instruction::Vdot { vsd: VsReg(0), a: Operand1::Reg(VReg(2)), b: Operand2::Conj(VReg(2)) }
        );
        assert!(assemble("sys.sz 1, 4, 4, 1").is_ok());
    }

    #[test]
    fn empty_program() {
        let p = assemble("").unwrap();
        assert!(p.is_empty());
        assert_eq!(assemble("# only a comment\n\n").unwrap(), Program::default());
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let e = assemble("halt\nfrob x1, x2\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.msg.contains("unknown mnemonic"));
        let e = assemble("\n\nbeq x1, x2, nowhere").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.msg.contains("unresolved"));
        assert_eq!(assemble("addv v1, v2").unwrap_err().line, 1);
        assert!(assemble("addv v1, v2, va3").is_err());
        assert!(assemble("ldv v0, (va9)").is_err());
        assert!(assemble("addi x1, x1, 99999").is_err());
        assert!(assemble("a:\na:\nhalt").is_err());
    }

    #[test]
    fn labels_and_disassembly() {
        let src = "start:\n    li x1, 3\nloop: addi x1, x1, -1\n    bne x1, x0, loop\n    halt\n";
        let p = assemble(src).unwrap();
        assert_eq!(p.labels["loop"], 1);
        assert_eq!(p.instructions[2].target(), Some(1));
        let text = disassemble(&p);
        assert!(text.contains("bne x1, x0, loop"));
        assert_eq!(assemble(&text).unwrap(), p);
        assert_eq!(disassemble(&assemble("halt").unwrap()).trim(), "halt");
    }

    #[test]
    fn unlabelled_targets_print_as_indices() {
        let p = Program::new(vec![
            Instruction::Jal { rd: XReg(0), target: 1 },
            Instruction::Halt,
        ]);
        let text = disassemble(&p);
        assert!(text.contains("jal x0, @1"));
        assert_eq!(assemble(&text).unwrap(), p);
    }

    #[test]
    fn entry_directive() {
        let p = assemble(".entry main\nhalt\nmain:\n li x1, 1\n halt").unwrap();
        assert_eq!(p.entry, 1);
        assert_eq!(assemble(&disassemble(&p)).unwrap(), p);
    }
}
