//! SMT-LIB2 backend: the solver client, term printing and the solver-backed
//! verification domains.

use std::path::PathBuf;

use crate::error::Result;
use crate::lattice::{verify_parallel, Limits, Outcome, Role};
use crate::pgcl::State;

pub mod client;
pub mod domain;
pub mod encoding;
pub mod oracle;
pub mod paths;
pub mod term;

pub use client::{SatResult, Solver, SolverConfig};
pub use domain::{entails, SmtDomain, SymbolicDomain};
pub use encoding::{Chain, Encoding, EncodingOptions, EncodingState, FunId, Probe, Problem};
pub use oracle::SolverOracle;

/// File a worker tees its session to when emission into `dir` is requested.
pub fn emit_path(dir: &std::path::Path, role: Role) -> PathBuf {
    dir.join(match role {
        Role::Induction => "induction.smt2",
        Role::Bmc => "bmc.smt2",
    })
}

/// Runs k-induction and BMC in parallel on the function encoding.
/// `emit_dir` receives one script per worker.
pub fn verify(
    problem: &Problem,
    options: &EncodingOptions,
    emit_dir: Option<&std::path::Path>,
    limits: &Limits,
) -> Result<Outcome<State>> {
    verify_parallel(
        |role, cancel| {
            let mut opts = options.clone();
            if let Some(dir) = emit_dir {
                opts.emit = Some(emit_path(dir, role));
            }
            SmtDomain::new(problem, &opts, Some(cancel))
        },
        limits,
    )
}
