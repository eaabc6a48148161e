use super::*;
use crate::matrix::CMatrix;
use crate::memory::MatrixHandle;

fn machine() -> Machine {
    Machine::new(MachineConfig::default())
}

fn run_src(m: &mut Machine, src: &str) -> ExecutionReport {
    let p = assemble(src).unwrap();
    m.run(&p, 1_000_000)
}

fn c(re: f64, im: f64) -> CBf16 {
    CBf16::from_f64(re, im)
}

#[test]
fn addv_example() {
    let mut m = machine();
    m.v[2] = VectorWord::splat(c(1.0, 0.0));
    m.v[3] = VectorWord::splat(c(2.0, 0.0));
    let r = run_src(&mut m, "addv v1, v2, v3\nhalt");
    assert!(r.halted());
    assert_eq!(m.v[1], VectorWord::splat(c(3.0, 0.0)));
    assert_eq!(r.cycles, 2);
}

#[test]
fn halt_only_costs_one_issue() {
    let mut m = machine();
    let r = run_src(&mut m, "halt");
    assert_eq!((r.retired, r.cycles), (1, 1));
    assert_eq!(r.instruction_counts["halt"], 1);
}

#[test]
fn empty_program_faults() {
    let r = machine().run(&Program::default(), 100);
    assert!(matches!(r.status, RunStatus::Fault(Fault::PcOutOfBounds { .. })));
}

#[test]
fn vdot_examples() {
    let mut m = machine();
    for k in [0, 7, 15] {
        m.v[2] = VectorWord::ZERO;
        m.v[2].set_lane(k, CBf16::ONE);
        run_src(&mut m, "vdot vs0, v2, conj(v2)\nhalt");
        assert_eq!(m.vs[0], CBf16::ONE);
    }
    m.v[2] = VectorWord::splat(c(1.0, 1.0));
    run_src(&mut m, "vdot vs0, v2, conj(v2)\nhalt");
    assert_eq!(m.vs[0], c(32.0, 0.0));
}

#[test]
fn vdot_uses_tree_order() {
    // Left to right: 256 + 1 rounds back to 256 fifteen times. In the tree
    // the ones pair up first and survive.
    let mut m = machine();
    m.v[1] = VectorWord::from_fn(|i| if i == 0 { c(256.0, 0.0) } else { CBf16::ONE });
    m.v[2] = VectorWord::splat(CBf16::ONE);
    run_src(&mut m, "vdot vs0, v1, v2\nhalt");
    let fold = m.v[1].0.iter().fold(CBf16::ZERO, |acc, z| acc.add(*z));
    assert_eq!(fold, c(256.0, 0.0));
    assert_eq!(m.vs[0], c(270.0, 0.0));
    assert_ne!(m.vs[0], fold);
}

#[test]
fn indexed_broadcast_and_mac() {
    let mut m = machine();
    m.v[2] = VectorWord::from_fn(|i| c(i as f64, -(i as f64)));
    m.v[3] = VectorWord::from_fn(|i| c(0.5, i as f64 / 4.0));
    m.v[1] = VectorWord::splat(c(1.0, 2.0));
    m.vs[0] = c(5.0, 0.0);
    let before = m.v[1];
    run_src(&mut m, "vmac v1, v3, v2[vs0]\nmulv v4, v3, v2[vs0]\naddv v5, v6, v4\nhalt");
    let b = c(5.0, -5.0);
    for i in 0..LANES {
        assert_eq!(m.v[1].lane(i), before.lane(i).mac(m.v[3].lane(i), b));
        assert_eq!(m.v[4].lane(i), m.v[3].lane(i).mul(b));
    }
    // conj(v2[vs0]) broadcasts the conjugate
    run_src(&mut m, "mulv v7, v3, conj(v2[vs0])\nhalt");
    assert_eq!(m.v[7].lane(3), m.v[3].lane(3).mul(b.conj()));
}

#[test]
fn bad_lane_index_faults() {
    let mut m = machine();
    m.vs[0] = c(16.0, 0.0);
    let r = run_src(&mut m, "addv v1, v2, v3[vs0]\nhalt");
    assert!(matches!(r.status, RunStatus::Fault(Fault::LaneIndex { .. })));
    let mut m = machine();
    m.vs[0] = c(1.5, 0.0);
    let r = run_src(&mut m, "addv v1, v2, v3[vs0]\nhalt");
    assert!(matches!(r.status, RunStatus::Fault(Fault::LaneIndex { .. })));
}

#[test]
fn idxvm_changes_one_lane() {
    let mut m = machine();
    m.v[0] = VectorWord::from_fn(|i| c(i as f64, 1.0));
    m.vs[0] = c(-9.0, 9.0);
    let before = m.v[0];
    run_src(&mut m, "li x1, 6\nidxvm v0, vs0, x1\nidxv x5, v0, x1\nhalt");
    for i in 0..LANES {
        if i == 6 {
            assert_eq!(m.v[0].lane(i), m.vs[0]);
        } else {
            assert_eq!(m.v[0].lane(i), before.lane(i));
        }
    }
    assert_eq!(m.x[5], m.vs[0].to_bits());
}

#[test]
fn scalar_core_and_x0() {
    let mut m = machine();
    let r = run_src(
        &mut m,
        "li x1, 10
         li x2, 0
    loop: add x2, x2, x1
         addi x1, x1, -1
         bne x1, x0, loop
         addi x0, x0, 5
         sw x2, 3(x0)
         lw x3, 3(x0)
         halt",
    );
    assert!(r.halted());
    assert_eq!(m.x[2], 55);
    assert_eq!(m.x[3], 55);
    assert_eq!(m.x[0], 0);
    // 2 li + 10 iterations of 3 + 9 taken branches * 2 + 4 tail
    assert_eq!(r.cycles, 2 + 30 + 18 + 4);
}

#[test]
fn load_use_stall() {
    let mut m = machine();
    m.mem.set_word(0, VectorWord::splat(CBf16::ONE)).unwrap();
    let r = run_src(&mut m, "ldv v0, (va0)\naddv v1, v0, v0\nhalt");
    assert_eq!(r.cycles, 4);
    let mut m = machine();
    let r = run_src(&mut m, "ldv v0, (va0)\naddv v1, v2, v2\nhalt");
    assert_eq!(r.cycles, 3);
    assert_eq!(r.memory_cycles, 1);
}

#[test]
fn extra_latencies() {
    let mut m = machine();
    m.vs[0] = c(4.0, 0.0);
    let r = run_src(&mut m, "inv.sqrt vs1, vs0\nvdot vs2, v0, v0\nhalt");
    assert_eq!(r.cycles, 5);
    assert_eq!(m.vs[1], c(0.5, 0.0));
    let mut m = machine();
    m.vs[0] = c(-1.0, 0.0);
    run_src(&mut m, "inv.sqrt vs1, vs0\nhalt");
    assert!(m.flags.domain);
    assert!(m.vs[1].re.is_nan());
}

#[test]
fn post_increment_and_masked_store() {
    let mut m = machine();
    let h = m.mem.alloc(32, 32).unwrap();
    let a = CMatrix::from_fn(32, 32, |r, cc| c(r as f64, cc as f64));
    m.mem.write_matrix(&h, &a).unwrap();
    m.va[1] = h.row_addr(3, 0) as u32;
    run_src(&mut m, "ldv v0, (va1++) [mode0]\nldv v1, (va1++) [mode0]\nhalt");
    for i in 0..LANES {
        assert_eq!(m.v[0].lane(i), a.get(3, i));
        assert_eq!(m.v[1].lane(i), a.get(3, 16 + i));
    }
    m.va[2] = h.col_addr(5, 0) as u32;
    run_src(&mut m, "ldv v2, (va2++) [mode1]\nldv v3, (va2) [mode1]\nhalt");
    for i in 0..LANES {
        assert_eq!(m.v[2].lane(i), a.get(i, 5));
        assert_eq!(m.v[3].lane(i), a.get(16 + i, 5));
    }
    m.va[4] = h.row_addr(0, 0) as u32;
    m.v[4] = VectorWord::splat(c(-1.0, 0.0));
    m.x[7] = 0b101;
    run_src(&mut m, "mv.vs vs1, x7\nstv v4, (va4) [mode0] [mask vs1]\nhalt");
    let back = m.mem.read_matrix(&h).unwrap();
    assert_eq!(back.get(0, 0), c(-1.0, 0.0));
    assert_eq!(back.get(0, 1), a.get(0, 1));
    assert_eq!(back.get(0, 2), c(-1.0, 0.0));
}

fn systolic_program(h: &[MatrixHandle; 3]) -> (Machine, Program) {
    let mut m = machine();
    for hh in h {
        m.mem.register(*hh).unwrap();
    }
    m.x[10] = h[0].base as u32;
    m.x[11] = h[1].base as u32;
    m.x[12] = h[2].base as u32;
    let p = assemble("sys.sz 1, 1, 1, 0\nsys.des (x12)\nsys.mul (x10), (x11)\nhalt").unwrap();
    (m, p)
}

#[test]
fn systolic_from_the_core() {
    let hs = [
        MatrixHandle::new(0, 16, 16).unwrap(),
        MatrixHandle::new(16, 16, 16).unwrap(),
        MatrixHandle::new(32, 16, 16).unwrap(),
    ];
    let (mut m, p) = systolic_program(&hs);
    let r = m.run(&p, 10_000);
    assert!(r.halted());
    assert_eq!(r.systolic_cycles, 73);
    assert_eq!(r.memory_cycles, 48);
    assert_eq!(r.cycles, 73 + 4);
}

#[test]
fn systolic_jobs_add_up() {
    let hs = [
        MatrixHandle::new(0, 16, 16).unwrap(),
        MatrixHandle::new(16, 16, 16).unwrap(),
        MatrixHandle::new(32, 16, 16).unwrap(),
    ];
    let (mut m, _) = systolic_program(&hs);
    let p = assemble("sys.sz 1, 1, 1, 0\nsys.des (x12)\nsys.mul (x10), (x11)\nsys.mul (x11), (x10)\nhalt").unwrap();
    let r = m.run(&p, 10_000);
    assert_eq!(r.systolic_cycles, 2 * 73);
}

#[test]
fn systolic_needs_configuration() {
    let mut m = machine();
    let r = run_src(&mut m, "sys.mul (x1), (x2)\nhalt");
    assert!(matches!(r.status, RunStatus::Fault(Fault::SystolicConfig { missing: "size", .. })));
    let mut m = machine();
    let r = run_src(&mut m, "sys.sz 1, 1, 1, 0\nsys.mul (x1), (x2)\nhalt");
    assert!(matches!(r.status, RunStatus::Fault(Fault::SystolicConfig { missing: "destination", .. })));
}

#[test]
fn timeout_and_trap() {
    let mut m = machine();
    let r = run_src(&mut m, "l: j l");
    assert_eq!(r.status, RunStatus::Timeout);
    assert!(r.cycles >= 1_000_000);
    let r = machine().run(&assemble("halt").unwrap(), 0);
    assert_eq!((r.status, r.retired), (RunStatus::Timeout, 0));
    let r = machine().run(&assemble("trap").unwrap(), 10);
    assert_eq!(r.status, RunStatus::Fault(Fault::Trap { pc: 0 }));
}

#[test]
fn trace_lines() {
    let mut m = Machine::new(MachineConfig {
        trace: true,
        ..MachineConfig::default()
    });
    run_src(&mut m, "li x1, 3\nhalt");
    let t = m.trace();
    assert_eq!(t.len(), 2);
    assert!(t[0].contains("li x1, 3"));
    assert!(t[0].ends_with("x1=00000003"));
}

#[test]
fn deterministic() {
    let src = "li x1, 5\nl: vmac v1, v1, v1\naddi x1, x1, -1\nbne x1, x0, l\nhalt";
    let go = || {
        let mut m = machine();
        m.v[1] = VectorWord::from_fn(|i| c(0.1 * i as f64, 0.3));
        let r = run_src(&mut m, src);
        (r, m.v[1])
    };
    assert_eq!(go(), go());
}
