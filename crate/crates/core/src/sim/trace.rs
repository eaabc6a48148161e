//! Text trace of retired instructions.

use std::fmt::Write as _;

use super::{Machine, Reg};
use crate::isa::Instruction;

/// Description of the trace line format, for `--help` output and docs.
pub const TRACE_FORMAT: &str = "\
one line per retired instruction, space separated:
  <cycle at issue> <pc> | <disassembly> | <reg>=<value> ...
scalar and vector-scalar registers print as 8 hex digits (vs: im<<16 | re),
va registers in decimal, vector registers as 16 lanes of 8 hex digits";

pub(super) fn line(m: &Machine, cycle: u64, pc: usize, inst: &Instruction, written: &[Reg]) -> String {
    let mut s = format!("{cycle:>10} {pc:>6} | {inst:<40} |");
    for r in written {
        match *r {
            Reg::X(x) => {
                let _ = write!(s, " {x}={:08x}", m.x[x.idx()]);
            }
            Reg::Va(a) => {
                let _ = write!(s, " {a}={}", m.va[a.idx()]);
            }
            Reg::Vs(v) => {
                let _ = write!(s, " {v}={:08x}", m.vs[v.idx()].to_bits());
            }
            Reg::V(v) => {
                let _ = write!(s, " {v}=[");
                for (i, z) in m.v[v.idx()].0.iter().enumerate() {
                    let sep = if i == 0 { "" } else { " " };
                    let _ = write!(s, "{sep}{:08x}", z.to_bits());
                }
                s.push(']');
            }
        }
    }
    s
}
