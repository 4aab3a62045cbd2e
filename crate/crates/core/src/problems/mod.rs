//! Benchmark problems, their discretizations and derivative providers.

pub mod costs;
pub mod euler;
pub mod fd;
pub mod liao;
pub mod linear;
pub mod spec;
pub mod start;
pub mod systems;

pub use fd::{fd_derivatives, FdBlocks, FdOrder};
pub use spec::{build_benchmark, BenchmarkName, BenchmarkSpec, StageWeight};
pub use start::{random_controls, starting_controls};
