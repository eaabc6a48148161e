//! The benchmark suites.

use std::str::FromStr;

use super::{Cell, Limit, Report, ReportError, References, Table};
use crate::bf16::CBf16;
use crate::cnn::{NetworkConfig, Weights};
use crate::matrix::{matmul_c64, CMatrix};
use crate::memory::LANES;
use crate::sim::MachineConfig;
use crate::systolic::gemm_throughput;
use crate::workloads::grid::{self, inversions_per_second, throughput_report, INVERSION_BLOCK, SPEED_BLOCKS, TABLE_GRIDS};
use crate::workloads::{channel, fft, gemm, positioning, zf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Gemm,
    Gramian,
    Zf,
    Fft2d,
    Position,
    Grid,
}

impl Suite {
    pub const ALL: [Suite; 6] = [Suite::Gemm, Suite::Gramian, Suite::Zf, Suite::Fft2d, Suite::Position, Suite::Grid];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Gemm => "gemm",
            Suite::Gramian => "gramian",
            Suite::Zf => "zf",
            Suite::Fft2d => "fft2d",
            Suite::Position => "position",
            Suite::Grid => "grid",
        }
    }
}

impl FromStr for Suite {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Suite, ReportError> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| ReportError::Usage(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct BenchSpec {
    pub suite: Suite,
    /// Comma-separated dimension list in the suite's syntax; `None` runs
    /// the published cases.
    pub dims: Option<String>,
    pub seeds: Vec<u64>,
    pub clock_hz: f64,
    pub machine: MachineConfig,
}

impl BenchSpec {
    pub fn new(suite: Suite) -> BenchSpec {
        BenchSpec { suite, dims: None, seeds: vec![1], clock_hz: 800e6, machine: MachineConfig::default() }
    }
}

/// Run one suite.
pub fn run(spec: &BenchSpec, refs: &References) -> Result<Report, ReportError> {
    if spec.seeds.is_empty() {
        return Err(ReportError::Usage("at least one seed is required".into()));
    }
    if !(spec.clock_hz > 0.0 && spec.clock_hz.is_finite()) {
        return Err(ReportError::Usage(format!("invalid clock frequency {}", spec.clock_hz)));
    }
    let tables = match spec.suite {
        Suite::Gemm => gemm_suite(spec, refs)?,
        Suite::Gramian => vec![gramian_suite(spec, refs)?],
        Suite::Zf => vec![zf_suite(spec, refs)?],
        Suite::Fft2d => vec![fft_suite(spec, refs)?],
        Suite::Position => vec![position_suite(spec, refs)?],
        Suite::Grid => vec![grid_suite(spec, refs)?],
    };
    Ok(Report { suite: spec.suite, tables })
}

fn usage(msg: String) -> ReportError {
    ReportError::Usage(msg)
}

fn dim(s: &str) -> Result<usize, ReportError> {
    let n: usize = s.trim().parse().map_err(|_| usage(format!("bad dimension {s:?}")))?;
    if n == 0 || !n.is_multiple_of(LANES) || n / LANES > 255 {
        return Err(usage(format!("dimension {n} must be a positive multiple of 16 up to 4080")));
    }
    Ok(n)
}

fn dims_list<'a>(spec: &'a BenchSpec, default: &'a str) -> Vec<&'a str> {
    spec.dims.as_deref().unwrap_or(default).split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn pair(s: &str) -> Result<(usize, usize), ReportError> {
    match s.split('x').collect::<Vec<_>>()[..] {
        [a, b] => Ok((dim(a)?, dim(b)?)),
        _ => Err(usage(format!("expected RxC, got {s:?}"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum GemmCase {
    Product(usize, usize, usize),
    Gramian(usize, usize),
}

impl GemmCase {
    fn parse(s: &str) -> Result<GemmCase, ReportError> {
        if let Some(rest) = s.strip_prefix('g') {
            let (r, c) = pair(rest)?;
            return Ok(GemmCase::Gramian(r, c));
        }
        match s.split('x').collect::<Vec<_>>()[..] {
            [n] => {
                let n = dim(n)?;
                Ok(GemmCase::Product(n, n, n))
            }
            [m, n, p] => Ok(GemmCase::Product(dim(m)?, dim(n)?, dim(p)?)),
            _ => Err(usage(format!("expected N, MxNxP or gRxC, got {s:?}"))),
        }
    }

    fn label(self) -> String {
        match self {
            GemmCase::Product(m, n, p) => format!("{m}x{n}*{n}x{p}"),
            GemmCase::Gramian(r, c) => format!("{r}x{c}*{r}x{c}^H"),
        }
    }
}

const GEMM_DEFAULT: &str = "16,32,64,128,256,16x128x16,16x256x16,g16x128";
const ANCHOR: &str = "16x16*16x16";

fn has_ref(refs: &References, table: &str, row: &str, metric: &str) -> bool {
    refs.get(table, row, metric).is_some()
}

fn gemm_suite(spec: &BenchSpec, refs: &References) -> Result<Vec<Table>, ReportError> {
    let cases = dims_list(spec, GEMM_DEFAULT)
        .into_iter()
        .map(GemmCase::parse)
        .collect::<Result<Vec<_>, _>>()?;
    let mut cycles = Table::new(
        "gemm_cycles",
        "Matrix multiplication cycles, vector core vs systolic array",
        "product",
        &["vector_cycles", "systolic_cycles", "speedup"],
    );
    let mut throughput = Table::new(
        "gemm_throughput",
        &format!("Systolic GEMM throughput at {} MHz", spec.clock_hz / 1e6),
        "product",
        &["cycles", "mm_per_s", "gflops"],
    );
    let mut profile = Table::new(
        "memory_profile",
        "GEMM memory access profile",
        "product",
        &[
            "systolic_reads",
            "systolic_writes",
            "systolic_memory",
            "systolic_ratio",
            "vector_reads",
            "vector_writes",
            "vector_memory",
            "vector_ratio",
        ],
    );
    let cfg = &spec.machine;
    for case in cases {
        let label = case.label();
        let mut rng = channel::rng(spec.seeds[0]);
        let (v, s) = match case {
            GemmCase::Product(m, n, p) => {
                let a = channel::gaussian_channel(&mut rng, m, n);
                let b = channel::gaussian_channel(&mut rng, n, p);
                (gemm::vector(&a, &b, cfg)?, gemm::systolic(&a, &b, cfg)?)
            }
            GemmCase::Gramian(r, c) => {
                let h = channel::gaussian_channel(&mut rng, r, c);
                let v = if r == LANES {
                    gemm::vector_gramian(&h, cfg)?
                } else {
                    gemm::vector(&h, &h.conj_transpose(), cfg)?
                };
                (v, gemm::gramian(&h, cfg)?)
            }
        };
        let (vr, sr) = (&v.report, &s.report);
        let anchor = label == ANCHOR;
        let sys_limit = if anchor { Limit::Exact(73.0) } else { Limit::RelRef(15.0) };
        cycles.push(
            refs,
            label.clone(),
            vec![
                Cell::int(vr.cycles).limit_if(anchor, Limit::RelRef(15.0)),
                Cell::int(sr.systolic_cycles).limit_if(has_ref(refs, "gemm_cycles", &label, "systolic_cycles"), sys_limit),
                Cell::float(vr.cycles as f64 / sr.systolic_cycles as f64, 1),
            ],
        );
        let GemmCase::Product(m, n, p) = case else { continue };
        if m == n && n == p {
            let t = gemm_throughput(m, spec.clock_hz);
            let r = has_ref(refs, "gemm_throughput", &label, "gflops");
            throughput.push(
                refs,
                label.clone(),
                vec![
                    Cell::int(t.cycles),
                    Cell::float(t.mm_per_s, 0).limit_if(r, Limit::RelRef(10.0)),
                    Cell::float(t.gflops, 1).limit_if(r, Limit::RelRef(10.0)),
                ],
            );
        }
        let count = |k: &str| vr.instruction_counts.get(k).copied().unwrap_or(0);
        let sys = sr.systolic;
        let sys_ref = has_ref(refs, "memory_profile", &label, "systolic_reads");
        profile.push(
            refs,
            label,
            vec![
                Cell::int(sys.read_cycles).limit_if(sys_ref, Limit::RoundedRef),
                Cell::int(sys.write_cycles).limit_if(sys_ref, Limit::RoundedRef),
                Cell::int(sys.memory_cycles()),
                Cell::float(100.0 * sys.memory_cycles() as f64 / sys.total_cycles as f64, 0),
                Cell::int(count("ldv")),
                Cell::int(count("stv")),
                Cell::int(vr.memory_cycles).limit_if(anchor, Limit::RoundedRef),
                Cell::float(100.0 * vr.memory_cycles as f64 / vr.cycles as f64, 1).limit_if(anchor, Limit::PointsRef(5.0)),
            ],
        );
    }
    let mut out = vec![cycles];
    for t in [throughput, profile] {
        if !t.rows.is_empty() {
            out.push(t);
        }
    }
    Ok(out)
}

fn max_rel_error(m: &CMatrix, reference: &[num_complex::Complex64]) -> f64 {
    fft::relative_error(m, reference)
}

/// Exact Hermitian symmetry by value, with a `+0` imaginary diagonal.
fn is_hermitian(g: &CMatrix) -> bool {
    let same = |a: CBf16, b: CBf16| a.re.to_f64() == b.re.to_f64() && a.im.to_f64() == b.im.to_f64();
    (0..g.rows()).all(|i| {
        g.get(i, i).im.to_bits() == 0 && (0..g.cols()).all(|j| same(g.get(i, j), g.get(j, i).conj()))
    })
}

fn gramian_suite(spec: &BenchSpec, refs: &References) -> Result<Table, ReportError> {
    let mut t = Table::new(
        "gramian",
        "Gramian A A^H on the systolic array",
        "a",
        &["systolic_cycles", "normal_cycles", "saving_pct", "reads", "hermitian", "max_rel_error"],
    );
    for d in dims_list(spec, "16x64,16x128,16x256,32x128") {
        let (r, c) = pair(d)?;
        let label = format!("{r}x{c}");
        let mut hermitian = true;
        let mut worst = 0f64;
        let mut first = None;
        for &seed in &spec.seeds {
            let h = channel::gaussian_channel(&mut channel::rng(seed), r, c);
            let g = gemm::gramian(&h, &spec.machine)?;
            let n = gemm::systolic(&h, &h.conj_transpose(), &spec.machine)?;
            hermitian &= is_hermitian(&g.c);
            let oracle = matmul_c64(&h.to_c64(), &h.conj_transpose().to_c64(), r, c, r);
            worst = worst.max(max_rel_error(&g.c, &oracle));
            first.get_or_insert((g.report, n.report));
        }
        let (g, n) = first.expect("seeds are non-empty");
        let r_ref = has_ref(refs, "gramian", &label, "systolic_cycles");
        t.push(
            refs,
            label,
            vec![
                Cell::int(g.systolic_cycles).limit_if(r_ref, Limit::RelRef(15.0)),
                Cell::int(n.systolic_cycles),
                Cell::float(100.0 * (1.0 - g.systolic_cycles as f64 / n.systolic_cycles as f64), 1),
                Cell::int(g.systolic.read_cycles),
                Cell::flag(hermitian).limit(Limit::Exact(1.0)),
                Cell::sci(worst),
            ],
        );
    }
    Ok(t)
}

fn zf_suite(spec: &BenchSpec, refs: &References) -> Result<Table, ReportError> {
    let mut t = Table::new(
        "zf",
        &format!("Zero-forcing detection per coherence block at {} MHz", spec.clock_hz / 1e6),
        "system",
        &["cycles", "microseconds", "gbps", "gbps_at_reference_cycles", "symbol_errors", "w_error"],
    );
    for d in dims_list(spec, "64x16,128x16,256x16") {
        let (m, k) = pair(d)?;
        if k != zf::USERS {
            return Err(usage(format!("zero-forcing runs with {} users, got {d}", zf::USERS)));
        }
        let mut w_error = 0f64;
        for &seed in &spec.seeds {
            let h = channel::gaussian_channel(&mut channel::rng(seed), m, k);
            let out = zf::zf_detection_matrix(&h, &spec.machine)?;
            w_error = w_error.max(zf::identity_error(&out.w, &h));
        }
        for block in SPEED_BLOCKS {
            let label = format!("{m}x{k} n_t={}", block.n_t);
            let n = block.resource_elements() as usize;
            let mut errors = 0u64;
            let mut cycles = None;
            for &seed in &spec.seeds {
                let mut rng = channel::rng(seed);
                let h = channel::gaussian_channel(&mut rng, m, k);
                let syms = channel::random_symbols(&mut rng, n * k);
                let r = zf::received(&h, &syms);
                let b = zf::detect_coherence_block(&h, &r, &spec.machine)?;
                errors += b.symbols.iter().zip(&syms).filter(|(a, b)| a != b).count() as u64;
                cycles.get_or_insert(b.report.cycles);
            }
            let cycles = cycles.expect("seeds are non-empty");
            let tp = throughput_report(k as u64, &block, cycles, spec.clock_hz, None, None);
            // the throughput formula applied to the published cycle count
            let at_ref = refs.get("zf", &label, "cycles").map(|c| {
                let g = throughput_report(k as u64, &block, c.value.round() as u64, spec.clock_hz, None, None).gbps;
                let mut cell = Cell::float(g, 2);
                cell.reference = refs.get("zf", &label, "gbps").cloned();
                cell
            });
            let gated = label == "128x16 n_t=10";
            t.push(
                refs,
                label,
                vec![
                    Cell::int(cycles),
                    Cell::float(tp.seconds * 1e6, 1),
                    Cell::float(tp.gbps, 2).limit_if(gated, Limit::AtLeast(1.0)),
                    at_ref.map(|c| c.limit_if(gated, Limit::RoundedRef)).unwrap_or_else(|| Cell { text: String::new(), ..Cell::float(f64::NAN, 0) }),
                    Cell::int(errors).limit(Limit::Exact(0.0)),
                    Cell::float(w_error, 4).limit(Limit::AtMost(zf::IDENTITY_ERROR_BOUND)),
                ],
            );
        }
    }
    Ok(t)
}

fn fft_suite(spec: &BenchSpec, refs: &References) -> Result<Table, ReportError> {
    let mut t = Table::new(
        "fft2d",
        "2-D DFT as two systolic products",
        "input",
        &["cycles", "memory_cycles", "impulse_exact", "dc_peak_exact", "dc_leakage", "relative_error"],
    );
    for d in dims_list(spec, "64x128") {
        let (r, c) = pair(d)?;
        let cfg = &spec.machine;
        let mut impulse = CMatrix::zeros(r, c);
        impulse.set(0, 0, CBf16::ONE);
        let imp = fft::fft2d(&impulse, cfg)?;
        let impulse_exact = imp.f.as_slice().iter().all(|&z| z == CBf16::ONE);
        let dc = fft::fft2d(&CMatrix::from_fn(r, c, |_, _| CBf16::ONE), cfg)?.f;
        let peak = (r * c) as f64;
        let dc_peak_exact = dc.get(0, 0) == CBf16::from_f64(peak, 0.0);
        let leak = dc.as_slice()[1..].iter().map(|z| z.to_c64().norm()).fold(0.0, f64::max) / peak;
        let mut worst = 0f64;
        for &seed in &spec.seeds {
            let a = channel::gaussian_channel(&mut channel::rng(seed), r, c);
            let f = fft::fft2d(&a, cfg)?.f;
            worst = worst.max(fft::relative_error(&f, &fft::dft2d_reference(&fft::to_c64(&a), r, c)));
        }
        t.push(
            refs,
            format!("{r}x{c}"),
            vec![
                Cell::int(imp.report.cycles),
                Cell::int(imp.report.memory_cycles),
                Cell::flag(impulse_exact).limit(Limit::Exact(1.0)),
                Cell::flag(dc_peak_exact).limit(Limit::Exact(1.0)),
                Cell::sci(leak).limit(Limit::AtMost(fft::RELATIVE_ERROR_BOUND)),
                Cell::sci(worst).limit(Limit::AtMost(fft::RELATIVE_ERROR_BOUND)),
            ],
        );
    }
    Ok(t)
}

fn position_suite(spec: &BenchSpec, refs: &References) -> Result<Table, ReportError> {
    let mut t = Table::new(
        "position",
        &format!("CSI positioning: 2-D DFT, DMA and CNN at {} MHz", spec.clock_hz / 1e6),
        "csi",
        &["fft_cycles", "dma_cycles", "cnn_cycles", "total_cycles", "macs", "rate"],
    );
    for d in dims_list(spec, "64x128") {
        let (h, w) = pair(d)?;
        let net = NetworkConfig { height: h, width: w, ..NetworkConfig::default() };
        let seed = spec.seeds[0];
        let csi = channel::gaussian_channel(&mut channel::rng(seed), h, w);
        let out = positioning::localize(&csi, &net, Weights::random(&net, seed), &spec.machine)?;
        let label = format!("{h}x{w}");
        let published = has_ref(refs, "position", &label, "total_cycles");
        t.push(
            refs,
            label,
            vec![
                Cell::int(out.fft_cycles),
                Cell::int(out.dma_cycles),
                Cell::int(out.cnn_cycles),
                Cell::int(out.total_cycles()).limit_if(published, Limit::Range(1.5e6, 2.6e6)),
                Cell::int(out.macs).limit(Limit::Exact(net.total_macs() as f64)),
                Cell::float(out.rate(spec.clock_hz), 0),
            ],
        );
    }
    Ok(t)
}

fn grid_label(g: &grid::GridConfig) -> String {
    format!("{}kHz/{}MHz", g.subcarrier_spacing_hz / 1e3, g.bandwidth_hz / 1e6)
}

fn grid_suite(spec: &BenchSpec, refs: &References) -> Result<Table, ReportError> {
    if spec.dims.is_some() {
        return Err(usage("the grid suite takes no dimensions".into()));
    }
    let mut t = Table::new(
        "grid",
        &format!("Channel inversions per second, {}x{} coherence block", INVERSION_BLOCK.n_b, INVERSION_BLOCK.n_t),
        "numerology",
        &["subcarriers", "symbols_per_second", "resource_elements", "inversions"],
    );
    for g in TABLE_GRIDS {
        t.push(
            refs,
            grid_label(&g),
            vec![
                Cell::int(g.subcarriers),
                Cell::int(g.symbols_per_second),
                Cell::int(g.resource_elements_per_second()).limit(Limit::RoundedRef),
                Cell::int(inversions_per_second(&g, &INVERSION_BLOCK)).limit(Limit::RoundedRef),
            ],
        );
    }
    Ok(t)
}
