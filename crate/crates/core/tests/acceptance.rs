//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed; the
//! process exits nonzero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;

use asip_core::bf16::{Bf16, FpFlags};
use asip_core::cnn::{conv2d, ConvLayer, NetworkConfig, Tensor, Weights, KERNEL};
use asip_core::fixed::Q15;
use asip_core::matrix::CMatrix;
use asip_core::report::{self, BenchSpec, Format, Reference, References, Suite};
use asip_core::sim::MachineConfig;
use asip_core::systolic::gemm_throughput;
use asip_core::workloads::{channel, fft, gemm, grid, positioning, zf};
use asip_core::CBf16;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn reference(refs: &References, table: &str, row: &str, metric: &str) -> Result<Reference, String> {
    refs.get(table, row, metric)
        .cloned()
        .ok_or_else(|| format!("no reference for {table}/{row}/{metric}"))
}

fn within_pct(x: f64, r: &Reference, pct: f64) -> bool {
    r.delta_pct(x).abs() <= pct
}

// ---------------------------------------------------------------------------
// bfloat16 oracle: binary64 arithmetic (at least 2p+2 bits, so rounding the
// binary64 result again is innocuous), then an independent scaling-based
// round to the bfloat16 grid with flush-to-zero.

fn oracle_value(bits: u16) -> f64 {
    f32::from_bits((bits as u32) << 16) as f64
}

fn oracle_round(x: f64) -> u16 {
    if x.is_nan() {
        return 0x7FC0;
    }
    let sign: u16 = if x.is_sign_negative() { 0x8000 } else { 0 };
    let a = x.abs();
    if a == 0.0 {
        return sign;
    }
    if a.is_infinite() {
        return sign | 0x7F80;
    }
    let e = ((a.to_bits() >> 52) & 0x7FF) as i32 - 1023;
    let q = (e - 7).max(-133);
    let v = (a * 2f64.powi(-q)).round_ties_even() * 2f64.powi(q);
    if v < 2f64.powi(-126) {
        return sign;
    }
    if v >= 2f64.powi(128) {
        return sign | 0x7F80;
    }
    sign | ((v as f32).to_bits() >> 16) as u16
}

fn softfloat() -> Outcome {
    for p in 0..=u16::MAX {
        let x = Bf16::from_bits(p);
        ensure(x.to_bits() == p, || format!("{p:#06x}: bit pattern changed"))?;
        ensure(x.to_f32().to_bits() == (p as u32) << 16, || format!("{p:#06x}: widening not exact"))?;
        let back = Bf16::from_f32(x.to_f32()).to_bits();
        let want = if x.is_nan() { 0x7FC0 } else { p };
        ensure(back == want, || format!("{p:#06x}: round trip gave {back:#06x}"))?;
        let v = oracle_value(p);
        let r = Bf16::from_f64(v).to_bits();
        ensure(r == oracle_round(v), || format!("{p:#06x}: from_f64 gave {r:#06x}"))?;
    }
    let mut rng = channel::rng(0xBF16);
    const PAIRS: usize = 1_000_000;
    for _ in 0..PAIRS {
        let (pa, pb): (u16, u16) = (rng.random(), rng.random());
        let (a, b) = (Bf16::from_bits(pa), Bf16::from_bits(pb));
        let (va, vb) = (oracle_value(pa), oracle_value(pb));
        for (op, got, want) in [
            ("add", a.add(b), oracle_round(va + vb)),
            ("sub", a.sub(b), oracle_round(va - vb)),
            ("mul", a.mul(b), oracle_round(va * vb)),
        ] {
            ensure(got.to_bits() == want, || {
                format!("{op}({pa:#06x}, {pb:#06x}) = {:#06x}, oracle {want:#06x}", got.to_bits())
            })?;
        }
    }
    let mut worst = 0f64;
    for p in 0x0080..=0x7F7Fu16 {
        let x = oracle_value(p);
        let mut flags = FpFlags::default();
        let r = Bf16::from_bits(p).inv_sqrt(&mut flags).to_f64();
        ensure(!flags.domain, || format!("inv_sqrt({p:#06x}) raised the domain flag"))?;
        worst = worst.max((r * x.sqrt() - 1.0).abs());
    }
    ensure(worst <= 2f64.powi(-7), || format!("inv_sqrt max relative error {worst:.5} > 2^-7"))?;
    Ok(format!(
        "65536 patterns round-trip, {PAIRS} add/sub/mul pairs bit-exact, inv_sqrt max rel error {worst:.5}"
    ))
}

// ---------------------------------------------------------------------------

const SQUARE: [usize; 5] = [16, 32, 64, 128, 256];

fn random(seed: u64, rows: usize, cols: usize) -> CMatrix {
    channel::gaussian_channel(&mut channel::rng(seed), rows, cols)
}

fn systolic_run(m: usize, n: usize, p: usize) -> Result<asip_core::systolic::SystolicReport, String> {
    let cfg = MachineConfig::default();
    let out = gemm::systolic(&random(1, m, n), &random(2, n, p), &cfg).map_err(|e| e.to_string())?;
    Ok(out.report.systolic)
}

fn label(m: usize, n: usize, p: usize) -> String {
    format!("{m}x{n}*{n}x{p}")
}

fn systolic_traffic() -> Outcome {
    let refs = References::builtin();
    let shapes: Vec<(usize, usize, usize)> = SQUARE.iter().map(|&d| (d, d, d)).chain([(16, 128, 16)]).collect();
    for (m, n, p) in shapes {
        let row = label(m, n, p);
        let r = systolic_run(m, n, p)?;
        let reads = reference(&refs, "memory_profile", &row, "systolic_reads")?;
        let writes = reference(&refs, "memory_profile", &row, "systolic_writes")?;
        ensure(reads.matches_rounded(r.read_cycles as f64), || {
            format!("{row}: {} read cycles, published {}", r.read_cycles, reads.text)
        })?;
        ensure(writes.matches_rounded(r.write_cycles as f64), || {
            format!("{row}: {} write cycles, published {}", r.write_cycles, writes.text)
        })?;
    }
    Ok("read/write cycles match all six shapes".into())
}

fn systolic_cycles() -> Outcome {
    let refs = References::builtin();
    let mut rows: Vec<(String, u64)> = Vec::new();
    for (m, n, p) in SQUARE.iter().map(|&d| (d, d, d)).chain([(16, 128, 16), (16, 256, 16)]) {
        rows.push((label(m, n, p), systolic_run(m, n, p)?.total_cycles));
    }
    let a = random(3, 16, 128);
    let g = gemm::gramian(&a, &MachineConfig::default()).map_err(|e| e.to_string())?;
    rows.push(("16x128*16x128^H".into(), g.report.systolic.total_cycles));
    let mut worst = 0f64;
    for (row, cycles) in &rows {
        let r = reference(&refs, "gemm_cycles", row, "systolic_cycles")?;
        worst = worst.max(r.delta_pct(*cycles as f64).abs());
        ensure(within_pct(*cycles as f64, &r, 15.0), || {
            format!("{row}: {cycles} cycles vs {} ({:+.1}%)", r.text, r.delta_pct(*cycles as f64))
        })?;
    }
    ensure(rows[0].1 == 73, || format!("16x16 took {} cycles, want exactly 73", rows[0].1))?;
    Ok(format!("8 rows within 15% (worst {worst:.1}%), 16x16 = 73"))
}

fn throughput() -> Outcome {
    let refs = References::builtin();
    let mut worst = 0f64;
    for d in SQUARE {
        let row = label(d, d, d);
        let t = gemm_throughput(d, 800e6);
        for (metric, x) in [("mm_per_s", t.mm_per_s), ("gflops", t.gflops)] {
            let r = reference(&refs, "gemm_throughput", &row, metric)?;
            worst = worst.max(r.delta_pct(x).abs());
            ensure(within_pct(x, &r, 10.0), || format!("{row} {metric}: {x:.4e} vs {}", r.text))?;
        }
    }
    let t16 = gemm_throughput(16, 800e6);
    Ok(format!(
        "5 sizes within 10% (worst {worst:.1}%); 16x16 {:.2}M MM/s {:.1} GFLOP",
        t16.mm_per_s / 1e6,
        t16.gflops
    ))
}

fn vector_gemm() -> Outcome {
    let refs = References::builtin();
    let out = gemm::vector(&random(4, 16, 16), &random(5, 16, 16), &MachineConfig::default())
        .map_err(|e| e.to_string())?;
    let (mem, total) = (out.report.memory_cycles, out.report.cycles);
    let ratio = 100.0 * mem as f64 / total as f64;
    ensure(mem == 288, || format!("{mem} memory cycles, want 288"))?;
    let r = reference(&refs, "gemm_cycles", "16x16*16x16", "vector_cycles")?;
    ensure(within_pct(total as f64, &r, 15.0), || format!("{total} cycles vs {}", r.text))?;
    ensure((ratio - 30.0).abs() <= 5.0, || format!("memory ratio {ratio:.1}%"))?;
    Ok(format!("288 memory cycles, {total} total ({:+.1}%), ratio {ratio:.1}%", r.delta_pct(total as f64)))
}

fn resource_grid() -> Outcome {
    let refs = References::builtin();
    let mut got = Vec::new();
    for g in &grid::TABLE_GRIDS {
        let row = format!("{}kHz/{}MHz", g.subcarrier_spacing_hz / 1e3, g.bandwidth_hz / 1e6);
        let n = grid::inversions_per_second(g, &grid::INVERSION_BLOCK);
        let r = reference(&refs, "grid", &row, "inversions")?;
        ensure(r.matches_rounded(n as f64), || format!("{row}: {n} inversions/s vs {}", r.text))?;
        got.push(r.text);
    }
    Ok(format!("all four rows match ({})", got.join(", ")))
}

fn zf_end_to_end() -> Outcome {
    const TRIALS: u64 = 50;
    let cfg = MachineConfig::default();
    let mut worst = 0f64;
    let mut symbols_checked = 0usize;
    for antennas in [64, 128] {
        for seed in 0..TRIALS {
            let mut rng = channel::rng(1000 * antennas as u64 + seed);
            let h = channel::gaussian_channel(&mut rng, antennas, zf::USERS);
            let sent = channel::random_symbols(&mut rng, 16 * zf::USERS);
            let r = zf::received(&h, &sent);
            let out = zf::detect_coherence_block(&h, &r, &cfg).map_err(|e| format!("{antennas}x16 seed {seed}: {e}"))?;
            let errors = out.symbols.iter().zip(&sent).filter(|(a, b)| a != b).count();
            ensure(errors == 0, || format!("{antennas}x16 seed {seed}: {errors} symbol errors"))?;
            symbols_checked += sent.len();
            let w = zf::zf_detection_matrix(&h, &cfg).map_err(|e| e.to_string())?.w;
            worst = worst.max(zf::identity_error(&w, &h));
        }
    }
    ensure(worst <= zf::IDENTITY_ERROR_BOUND, || {
        format!("max |WH - I| = {worst:.4} > {}", zf::IDENTITY_ERROR_BOUND)
    })?;
    Ok(format!(
        "SER 0 over {symbols_checked} symbols ({TRIALS} trials each at 64x16, 128x16), max |WH-I| {worst:.4} <= {}",
        zf::IDENTITY_ERROR_BOUND
    ))
}

fn detection_throughput() -> Outcome {
    let refs = References::builtin();
    let block = grid::CoherenceBlock::new(16, 10);
    let mut rng = channel::rng(77);
    let h = channel::gaussian_channel(&mut rng, 128, zf::USERS);
    let sent = channel::random_symbols(&mut rng, block.resource_elements() as usize * zf::USERS);
    let out = zf::detect_coherence_block(&h, &zf::received(&h, &sent), &MachineConfig::default())
        .map_err(|e| e.to_string())?;
    ensure(out.symbols == sent, || "symbol errors in the throughput block".into())?;
    let cycles = out.report.cycles;
    let ours = grid::throughput_report(zf::USERS as u64, &block, cycles, 800e6, None, None);
    ensure(ours.gbps >= 1.0, || format!("{cycles} cycles give {:.2} Gb/s", ours.gbps))?;
    let published_cycles = reference(&refs, "zf", "128x16 n_t=10", "cycles")?;
    let published_gbps = reference(&refs, "zf", "128x16 n_t=10", "gbps")?;
    let theirs = grid::throughput_report(zf::USERS as u64, &block, published_cycles.value as u64, 800e6, None, None);
    ensure(published_gbps.matches_rounded(theirs.gbps), || {
        format!("{} cycles give {:.3} Gb/s, published {}", published_cycles.text, theirs.gbps, published_gbps.text)
    })?;
    Ok(format!(
        "{cycles} cycles -> {:.2} Gb/s ({:+.1}% cycles vs {}); {} cycles -> {:.2} Gb/s",
        ours.gbps,
        published_cycles.delta_pct(cycles as f64),
        published_cycles.text,
        published_cycles.text,
        theirs.gbps
    ))
}

// ---------------------------------------------------------------------------
// Direct convolution oracle: plain nested sum over the zero-padded window.

fn conv_oracle(input: &Tensor, layer: &ConvLayer) -> Vec<i16> {
    let (h, w) = (input.h, input.w);
    let mut out = Vec::with_capacity(layer.filters * h * w);
    for f in 0..layer.filters {
        for y in 0..h {
            for x in 0..w {
                let mut acc = layer.bias[f].0 as i64;
                for c in 0..layer.in_ch {
                    for dy in 0..KERNEL {
                        for dx in 0..KERNEL {
                            let (iy, ix) = (y + dy, x + dx);
                            if iy < 1 || ix < 1 || iy > h || ix > w {
                                continue;
                            }
                            let v = input.data[(c * h + iy - 1) * w + ix - 1].0 as i64;
                            let k = layer.weights[((f * layer.in_ch + c) * KERNEL + dy) * KERNEL + dx].0 as i64;
                            acc += (v * k + 16384) >> 15;
                        }
                    }
                }
                out.push(acc.clamp(-32768, 32767) as i16);
            }
        }
    }
    out
}

fn cnn_engine() -> Outcome {
    let mut rng = channel::rng(0xC0);
    for case in 0..200 {
        let (h, w) = (rng.random_range(1..=9), rng.random_range(1..=9));
        let (c, filters) = (rng.random_range(1..=4), rng.random_range(1..=4));
        // mix of small values and full-range values that saturate
        let amp: i16 = if case % 3 == 0 { i16::MAX } else { 4096 };
        let q = |rng: &mut rand_chacha::ChaCha8Rng| Q15(rng.random_range(-amp..=amp));
        let input = Tensor::from_fn(h, w, c, |_, _, _| q(&mut rng));
        let layer = ConvLayer {
            filters,
            in_ch: c,
            weights: (0..filters * c * 9).map(|_| q(&mut rng)).collect(),
            bias: (0..filters).map(|_| q(&mut rng)).collect(),
        };
        let (out, macs) = conv2d(&input, &layer).map_err(|e| e.to_string())?;
        let got: Vec<i16> = out.data.iter().map(|v| v.0).collect();
        ensure(got == conv_oracle(&input, &layer), || format!("case {case} ({h}x{w}x{c}, {filters} filters) differs"))?;
        ensure(macs == (h * w * c * filters * 9) as u64, || format!("case {case}: {macs} MACs"))?;
    }
    let net = NetworkConfig::default();
    let analytic = net.layer_macs();
    ensure(analytic[0] == 2_359_296, || format!("layer 1 analytic MACs {}", analytic[0]))?;
    let mut rng = channel::rng(0xC1);
    let csi = channel::gaussian_channel(&mut rng, net.height, net.width);
    let weights = Weights::random(&net, 1);
    let out = positioning::localize(&csi, &net, weights, &MachineConfig::default()).map_err(|e| e.to_string())?;
    ensure(out.macs == net.total_macs(), || format!("simulated {} MACs, analytic {}", out.macs, net.total_macs()))?;
    let total = out.total_cycles();
    ensure((1_500_000..=2_600_000).contains(&total), || format!("localization takes {total} cycles"))?;
    Ok(format!(
        "200 random convs bit-exact; {} MACs (layer 1 {}); {total} cycles, {:.0} positionings/s",
        out.macs,
        analytic[0],
        out.rate(800e6)
    ))
}

fn fft2d() -> Outcome {
    let cfg = MachineConfig::default();
    let (rows, cols) = (64, 128);
    let mut imp = CMatrix::zeros(rows, cols);
    imp.set(0, 0, CBf16::ONE);
    let f = fft::fft2d(&imp, &cfg).map_err(|e| e.to_string())?.f;
    ensure(f.as_slice().iter().all(|&z| z == CBf16::ONE), || "impulse does not give all ones".into())?;
    let ones = CMatrix::from_fn(rows, cols, |_, _| CBf16::ONE);
    let f = fft::fft2d(&ones, &cfg).map_err(|e| e.to_string())?.f;
    let dc = (rows * cols) as f64;
    ensure(f.get(0, 0) == CBf16::real(dc), || format!("DC bin is {:?}", f.get(0, 0)))?;
    let leak = f.as_slice()[1..].iter().map(|z| z.to_c64().norm()).fold(0.0, f64::max) / dc;
    ensure(leak <= fft::RELATIVE_ERROR_BOUND, || format!("DC leakage {leak:.4}"))?;
    let mut worst = 0f64;
    for seed in 0..3 {
        let a = random(500 + seed, rows, cols);
        let input: Vec<Complex64> = a.as_slice().iter().map(|z| z.to_c64()).collect();
        let reference = fft::dft2d_reference(&input, rows, cols);
        let out = fft::fft2d(&a, &cfg).map_err(|e| e.to_string())?;
        worst = worst.max(fft::relative_error(&out.f, &reference));
    }
    ensure(worst <= fft::RELATIVE_ERROR_BOUND, || format!("relative error {worst:.4}"))?;
    Ok(format!(
        "impulse and DC identities hold (leakage {leak:.2e}); random 64x128 error {worst:.4} <= {}",
        fft::RELATIVE_ERROR_BOUND
    ))
}

fn determinism() -> Outcome {
    let refs = References::builtin();
    for suite in Suite::ALL {
        let mut spec = BenchSpec::new(suite);
        spec.seeds = vec![3, 11];
        let render = |spec: &BenchSpec| -> Result<(String, String), String> {
            let r = report::run(spec, &refs).map_err(|e| e.to_string())?;
            Ok((r.render(Format::Csv), r.render(Format::Markdown)))
        };
        let first = render(&spec)?;
        let second = render(&spec)?;
        ensure(first == second, || format!("{} differs between runs", suite.name()))?;
    }
    Ok(format!("{} suites byte-identical across reruns", Suite::ALL.len()))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("softfloat conformance", softfloat),
        ("systolic memory traffic", systolic_traffic),
        ("systolic total cycles", systolic_cycles),
        ("GEMM throughput table", throughput),
        ("vector-core GEMM profile", vector_gemm),
        ("resource-grid calculator", resource_grid),
        ("zero-forcing end to end", zf_end_to_end),
        ("detection throughput", detection_throughput),
        ("CNN engine", cnn_engine),
        ("2-D DFT", fft2d),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().map(String::as_str).or(e.downcast_ref::<&str>().copied());
            Err(format!("panicked: {}", msg.unwrap_or("unknown payload")))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail} ({secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {why} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
