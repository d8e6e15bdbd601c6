//! Front end for the `pkind` verifier: job descriptions, reports and the
//! manifest-driven benchmark harness.

pub mod bench;
pub mod job;
pub mod report;

pub use bench::{run_manifest, BenchOptions, Manifest, Row, RowResult};
pub use job::{run, JobSpec, OutputFormat};
pub use report::{Report, VerdictKind};
