use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use asip_core::isa::{assemble, decode_program, disassemble, encode_program, Program};
use asip_core::memory::{read_matrix_file, MatrixHandle};
use asip_core::report::{self, BenchSpec, Format, References, ReportError, Suite};
use asip_core::sim::{ExecutionReport, Machine, MachineConfig, RunStatus};

const EXIT_USAGE: u8 = 1;
const EXIT_FAULT: u8 = 2;
const EXIT_TOLERANCE: u8 = 3;
const EXIT_TIMEOUT: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "asip", version, about = "Assembler, simulator and benchmarks for the bfloat16 MIMO ASIP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Assemble a source file into a binary image.
    Asm {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Disassemble a binary image.
    Disasm {
        input: PathBuf,
        /// Write to a file instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a program (source, or a `.bin` image) and print the execution report.
    Run {
        program: PathBuf,
        /// Print one line per retired instruction.
        #[arg(long)]
        trace: bool,
        #[arg(long, default_value_t = 100_000_000)]
        max_cycles: u64,
        /// Place a matrix file in vector memory at a word address, as ADDR:PATH.
        #[arg(long, value_name = "ADDR:PATH")]
        load: Vec<String>,
    },
    /// Run a benchmark suite and print its table.
    Bench {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        /// Comma-separated dimensions. gemm: N, MxNxP or gRxC (Gramian of
        /// an RxC matrix); zf: MxK; gramian, fft2d, position: RxC.
        #[arg(long)]
        dims: Option<String>,
        /// Data seed; repeat for several trials.
        #[arg(long = "seed", default_values_t = [1u64])]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 800e6)]
        clock_hz: f64,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// Also write the table to `<suite>.<csv|md>` in this directory.
        #[arg(long, env = "ASIP_OUT_DIR")]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    Gemm,
    Gramian,
    Zf,
    Fft2d,
    Position,
    Grid,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Suite {
        match s {
            SuiteArg::Gemm => Suite::Gemm,
            SuiteArg::Gramian => Suite::Gramian,
            SuiteArg::Zf => Suite::Zf,
            SuiteArg::Fft2d => Suite::Fft2d,
            SuiteArg::Position => Suite::Position,
            SuiteArg::Grid => Suite::Grid,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
}

/// A failure carrying its exit status.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Failure {
        Failure { code: EXIT_USAGE, msg: msg.into() }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn assemble_file(path: &Path) -> Result<Program, Failure> {
    let src = String::from_utf8(read(path)?).map_err(|_| Failure::usage(format!("{}: not UTF-8", path.display())))?;
    assemble(&src).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    if path.extension().is_some_and(|e| e == "bin") {
        decode_program(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    } else {
        assemble_file(path)
    }
}

fn load_matrix(m: &mut Machine, arg: &str) -> Result<(), Failure> {
    let (addr, path) = arg
        .split_once(':')
        .ok_or_else(|| Failure::usage(format!("--load expects ADDR:PATH, got {arg:?}")))?;
    let addr: usize = addr.parse().map_err(|_| Failure::usage(format!("bad address {addr:?}")))?;
    let matrix = read_matrix_file(read(Path::new(path))?.as_slice())
        .map_err(|e| Failure::usage(format!("{path}: {e}")))?;
    let h = MatrixHandle::new(addr, matrix.rows(), matrix.cols()).map_err(|e| Failure::usage(format!("{path}: {e}")))?;
    m.mem.register(h).map_err(|e| Failure::usage(format!("{path}: {e}")))?;
    m.mem.write_matrix(&h, &matrix).map_err(|e| Failure::usage(format!("{path}: {e}")))
}

fn render_report(r: &ExecutionReport) -> String {
    let mut s = String::new();
    let status = match &r.status {
        RunStatus::Halted => "halted".to_string(),
        RunStatus::Timeout => "timeout".to_string(),
        RunStatus::Fault(f) => format!("fault: {f}"),
    };
    let _ = writeln!(s, "status: {status}");
    let _ = writeln!(s, "cycles: {}", r.cycles);
    let _ = writeln!(s, "memory_cycles: {}", r.memory_cycles);
    let _ = writeln!(s, "systolic_cycles: {}", r.systolic_cycles);
    let _ = writeln!(s, "retired: {}", r.retired);
    let _ = writeln!(s, "domain_flag: {}", r.flags.domain);
    for (name, n) in &r.instruction_counts {
        let _ = writeln!(s, "count.{name}: {n}");
    }
    s
}

fn cmd_run(program: &Path, trace: bool, max_cycles: u64, load: &[String]) -> Result<(), Failure> {
    let p = load_program(program)?;
    let mut m = Machine::new(MachineConfig { trace, ..MachineConfig::default() });
    for arg in load {
        load_matrix(&mut m, arg)?;
    }
    let r = m.run(&p, max_cycles);
    for line in m.trace() {
        println!("{line}");
    }
    print!("{}", render_report(&r));
    match r.status {
        RunStatus::Halted => Ok(()),
        RunStatus::Timeout => Err(Failure { code: EXIT_TIMEOUT, msg: format!("timeout after {} cycles", r.cycles) }),
        RunStatus::Fault(f) => Err(Failure { code: EXIT_FAULT, msg: f.to_string() }),
    }
}

fn cmd_bench(spec: &BenchSpec, format: Format, out_dir: Option<&Path>) -> Result<(), Failure> {
    let report = report::run(spec, &References::builtin()).map_err(|e| match e {
        ReportError::Usage(msg) => Failure::usage(msg),
        other => Failure { code: EXIT_FAULT, msg: other.to_string() },
    })?;
    let text = report.render(format);
    print!("{text}");
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
        let ext = match format {
            Format::Csv => "csv",
            Format::Markdown => "md",
        };
        write(&dir.join(format!("{}.{ext}", spec.suite.name())), text.as_bytes())?;
    }
    let failures = report.failures();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure { code: EXIT_TOLERANCE, msg: format!("tolerance exceeded: {}", failures.join(", ")) })
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Asm { input, output } => write(&output, &encode_program(&assemble_file(&input)?)),
        Command::Disasm { input, output } => {
            let p = decode_program(&read(&input)?).map_err(|e| Failure::usage(format!("{}: {e}", input.display())))?;
            let text = disassemble(&p);
            match output {
                Some(path) => write(&path, text.as_bytes()),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Run { program, trace, max_cycles, load } => cmd_run(&program, trace, max_cycles, &load),
        Command::Bench { suite, dims, seeds, clock_hz, format, out_dir } => {
            let spec = BenchSpec { suite: suite.into(), dims, seeds, clock_hz, machine: MachineConfig::default() };
            let format = match format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Markdown => Format::Markdown,
            };
            cmd_bench(&spec, format, out_dir.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("asip: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
