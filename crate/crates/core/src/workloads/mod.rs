//! Algorithms run on the simulated machine, with host-side helpers.

pub mod channel;
pub mod fft;
pub mod gemm;
pub mod grid;
pub mod kernels;
pub mod positioning;
pub mod qam;
pub mod zf;

use thiserror::Error;

use crate::cnn::CnnError;
use crate::isa::{assemble, AsmError};
use crate::memory::MemError;
use crate::sim::{ExecutionReport, Fault, Machine, RunStatus};

/// Cycle budget for generated workload programs.
pub const WORKLOAD_MAX_CYCLES: u64 = 1 << 40;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("generated kernel does not assemble: {0}")]
    Asm(#[from] AsmError),
    #[error(transparent)]
    Memory(#[from] MemError),
    #[error("simulation fault: {0}")]
    Fault(Fault),
    #[error("cycle budget exhausted after {0} cycles")]
    Timeout(u64),
    #[error("matrix is not positive definite: pivot {column} is not positive")]
    Singular { column: usize },
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Cnn(#[from] CnnError),
}

/// Assemble `body`, append `halt`, and run it to completion.
pub fn run_source(m: &mut Machine, body: &str) -> Result<ExecutionReport, WorkloadError> {
    let src = format!("{body}    halt\n");
    let program = assemble(&src)?;
    let report = m.run(&program, WORKLOAD_MAX_CYCLES);
    match &report.status {
        RunStatus::Halted => Ok(report),
        RunStatus::Timeout => Err(WorkloadError::Timeout(report.cycles)),
        RunStatus::Fault(f) => Err(WorkloadError::Fault(f.clone())),
    }
}
