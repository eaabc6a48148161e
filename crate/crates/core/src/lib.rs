pub mod bf16;
pub mod cnn;
pub mod fixed;
pub mod isa;
pub mod matrix;
pub mod memory;
pub mod report;
pub mod sim;
pub mod systolic;
pub mod workloads;

pub use bf16::{Bf16, CBf16, FpFlags};
pub use fixed::Q15;
pub use matrix::CMatrix;
pub use memory::{MatrixHandle, VectorMemory, VectorWord};
pub use report::{BenchSpec, Format, Report, Suite};
pub use sim::{ExecutionReport, Machine, MachineConfig, RunStatus};
