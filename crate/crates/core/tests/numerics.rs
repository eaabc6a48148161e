//! Invariants of the number formats, the memory layout and the encoder.

use proptest::prelude::*;

use asip_core::bf16::{Bf16, CBf16};
use asip_core::fixed::Q15;
use asip_core::isa::{assemble, decode, disassemble, encode, Program};
use asip_core::matrix::CMatrix;
use asip_core::memory::{AccessMode, VectorMemory, LANES};
use asip_core::report::{self, BenchSpec, References, Suite};
use asip_core::sim::MachineConfig;

fn finite() -> impl Strategy<Value = Bf16> {
    any::<u16>().prop_map(Bf16::from_bits).prop_filter("finite", |x| x.is_finite())
}

proptest! {
    #[test]
    fn add_and_mul_commute(a in any::<u16>(), b in any::<u16>()) {
        let (a, b) = (Bf16::from_bits(a), Bf16::from_bits(b));
        prop_assert_eq!(a.add(b), b.add(a));
        prop_assert_eq!(a.mul(b), b.mul(a));
    }

    #[test]
    fn sub_is_add_of_negation(a in any::<u16>(), b in any::<u16>()) {
        let (a, b) = (Bf16::from_bits(a), Bf16::from_bits(b));
        prop_assert_eq!(a.sub(b), a.add(b.neg()));
    }

    #[test]
    fn negation_is_symmetric(a in finite(), b in finite()) {
        prop_assert_eq!(a.neg().mul(b), a.mul(b).neg());
        let s = a.add(b);
        if !s.is_zero() {
            prop_assert_eq!(a.neg().add(b.neg()), s.neg());
        }
    }

    #[test]
    fn results_are_never_subnormal(a in any::<u16>(), b in any::<u16>()) {
        let (a, b) = (Bf16::from_bits(a), Bf16::from_bits(b));
        for r in [a.add(b), a.sub(b), a.mul(b)] {
            prop_assert!(!r.is_subnormal());
            if r.is_nan() {
                prop_assert_eq!(r, Bf16::NAN);
            }
        }
    }

    #[test]
    fn rounding_is_monotone(x in -1e30f64..1e30, y in -1e30f64..1e30) {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        prop_assert!(Bf16::from_f64(lo).to_f64() <= Bf16::from_f64(hi).to_f64());
    }

    #[test]
    fn nearest_rounding_error_is_half_an_ulp(x in 1e-30f64..1e30) {
        let r = Bf16::from_f64(x).to_f64();
        prop_assert!((r - x).abs() <= x * 2f64.powi(-8));
    }

    #[test]
    fn complex_conjugate_distributes(re in -1e3f64..1e3, im in -1e3f64..1e3, re2 in -1e3f64..1e3, im2 in -1e3f64..1e3) {
        let (a, b) = (CBf16::from_f64(re, im), CBf16::from_f64(re2, im2));
        prop_assert_eq!(a.mul(b).conj().to_c64(), a.conj().mul(b.conj()).to_c64());
        prop_assert_eq!(a.add(b).conj().to_c64(), a.conj().add(b.conj()).to_c64());
    }

    #[test]
    fn q15_product_is_rounded_and_bounded(a in any::<i16>(), b in any::<i16>()) {
        let p = Q15(a).mul_wide(Q15(b));
        let exact = a as f64 * b as f64 / 32768.0;
        prop_assert!((p as f64 - exact).abs() <= 0.5);
        prop_assert!(p.abs() <= 32768);
    }

    #[test]
    fn q15_conversion_saturates(x in -4.0f64..4.0) {
        let q = Q15::from_f64(x);
        if x >= 1.0 {
            prop_assert_eq!(q, Q15::MAX);
        } else if x < -1.0 {
            prop_assert_eq!(q, Q15::MIN);
        } else {
            prop_assert!((q.to_f64() - x).abs() <= 0.5 / 32768.0 + 1e-12);
        }
    }
}

fn numbered(rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |r, c| CBf16::from_f64(r as f64, c as f64))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shuffled_accesses_walk_rows_and_columns(rb in 1usize..=4, cb in 1usize..=4, pad in 0usize..40, pick in any::<(usize, usize)>()) {
        let (rows, cols) = (16 * rb, 16 * cb);
        let mut mem = VectorMemory::with_words(pad + rows * cols / LANES + 8);
        mem.alloc_words(pad.max(1)).unwrap();
        let h = mem.alloc(rows, cols).unwrap();
        let m = numbered(rows, cols);
        mem.write_matrix(&h, &m).unwrap();
        prop_assert_eq!(mem.read_matrix(&h).unwrap(), m.clone());

        let (row, col) = (pick.0 % rows, pick.1 % cols);
        // a full row, one shuffled-row access per column block
        let mut addr = h.row_addr(row, 0);
        for bc in 0..cb {
            let (w, cycles) = mem.read(addr, AccessMode::ShuffledRow).unwrap();
            prop_assert_eq!(cycles, 1);
            for l in 0..LANES {
                prop_assert_eq!(w.lane(l), m.get(row, 16 * bc + l));
            }
            addr += mem.post_increment(addr, AccessMode::ShuffledRow).unwrap();
        }
        // a full column, one shuffled-column access per row block
        let mut addr = h.col_addr(col, 0);
        for br in 0..rb {
            let (w, _) = mem.read(addr, AccessMode::ShuffledColumn).unwrap();
            for l in 0..LANES {
                prop_assert_eq!(w.lane(l), m.get(16 * br + l, col));
            }
            addr += mem.post_increment(addr, AccessMode::ShuffledColumn).unwrap();
        }
    }

    #[test]
    fn masked_column_store_touches_only_selected_rows(mask in any::<u16>(), col in 0usize..32) {
        let mut mem = VectorMemory::with_words(64);
        let h = mem.alloc(16, 32).unwrap();
        let m = numbered(16, 32);
        mem.write_matrix(&h, &m).unwrap();
        let w = asip_core::VectorWord::splat(CBf16::from_f64(-1.0, -1.0));
        mem.write(h.col_addr(col, 0), AccessMode::ShuffledColumn, &w, mask).unwrap();
        let after = mem.read_matrix(&h).unwrap();
        for r in 0..16 {
            for c in 0..32 {
                let hit = c == col && mask & (1 << r) != 0;
                prop_assert_eq!(after.get(r, c), if hit { w.lane(0) } else { m.get(r, c) });
            }
        }
    }

    #[test]
    fn decoded_words_survive_text_and_binary(words in prop::collection::vec(any::<u32>(), 1..40)) {
        let p = Program::new(words.into_iter().map(decode).collect());
        for i in &p.instructions {
            prop_assert_eq!(decode(encode(i)), *i);
        }
        let text = disassemble(&p);
        let back = assemble(&text).unwrap();
        prop_assert_eq!(back.instructions, p.instructions);
    }
}

#[test]
fn reference_deltas_follow_the_cost_model() {
    let refs = References::builtin();
    let run = |cost_branch: u64| {
        let mut spec = BenchSpec::new(Suite::Gemm);
        spec.dims = Some("16".into());
        spec.machine = MachineConfig::default();
        spec.machine.cost.taken_branch_penalty = cost_branch;
        let r = report::run(&spec, &refs).unwrap();
        let cell = r.table("gemm_cycles").unwrap().cell("16x16*16x16", "vector_cycles").unwrap().clone();
        (cell.value, cell.delta_pct().unwrap())
    };
    let (base, base_delta) = run(2);
    let (slow, slow_delta) = run(6);
    assert!(slow > base);
    assert!(slow_delta > base_delta);
    let published = refs.get("gemm_cycles", "16x16*16x16", "vector_cycles").unwrap();
    assert!((published.delta_pct(base) - base_delta).abs() < 1e-9);
}
