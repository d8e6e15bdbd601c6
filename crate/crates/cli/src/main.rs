use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use pkind::expectations::Mode;
use pkind::smt::SolverConfig;
use pkind_cli::bench::render_table;
use pkind_cli::{run, run_manifest, BenchOptions, JobSpec, OutputFormat};

#[derive(Parser)]
#[command(name = "pkind", version, about = "Proves or refutes upper bounds on expected outcomes and runtimes of probabilistic loops")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct SolverArgs {
    /// Solver executable (defaults to $PKIND_SOLVER, then `z3`).
    #[arg(long)]
    solver: Option<PathBuf>,
    /// Extra solver argument; repeatable. Replaces the default arguments.
    #[arg(long = "solver-arg", allow_hyphen_values = true)]
    solver_args: Vec<String>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let mut c = match &self.solver {
            Some(p) => SolverConfig::new(p, Vec::new()),
            None => SolverConfig::from_env(),
        };
        if self.solver.is_some() && self.solver_args.is_empty() && c.path.file_name().is_some_and(|n| n.to_string_lossy().starts_with("z3")) {
            c.args = vec!["-in".into()];
        }
        if !self.solver_args.is_empty() {
            c.args = self.solver_args.clone();
        }
        c
    }
}

#[derive(Subcommand)]
enum Command {
    /// Verify one candidate upper bound.
    Verify {
        program: PathBuf,
        /// Postexpectation (not allowed with --ert). `@file` reads it from a file.
        #[arg(long)]
        post: Option<String>,
        /// Candidate upper bound. `@file` reads it from a file.
        #[arg(long)]
        pre: String,
        /// Bound the expected runtime instead of the weakest preexpectation.
        #[arg(long)]
        ert: bool,
        #[arg(long = "max-k")]
        max_k: Option<u64>,
        #[arg(long = "max-n")]
        max_n: Option<u64>,
        /// Deadline in seconds.
        #[arg(long, default_value_t = 900)]
        timeout: u64,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write each worker's solver session to this directory.
        #[arg(long = "emit-smt2")]
        emit_smt2: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run every row of a benchmark manifest.
    Bench {
        manifest: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also run rows marked as expected timeouts.
        #[arg(long = "include-timeouts")]
        include_timeouts: bool,
        /// Per-row deadline in seconds, overriding the manifest.
        #[arg(long)]
        timeout: Option<u64>,
        /// Machine-readable results.
        #[arg(long, default_value = "bench-results.json")]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify { program, post, pre, ert, max_k, max_n, timeout, solver, emit_smt2, json } => {
            let mut job = JobSpec::new(program, pre);
            job.post = post;
            job.mode = if ert { Mode::Ert } else { Mode::Wp };
            job.max_k = max_k;
            job.max_n = max_n;
            job.deadline = Duration::from_secs(timeout);
            job.solver = solver.config();
            job.emit_smt2 = emit_smt2;
            job.format = if json { OutputFormat::Json } else { OutputFormat::Human };
            let report = run(&job);
            match job.format {
                OutputFormat::Json => println!("{}", report.to_json()),
                OutputFormat::Human => println!("{report}"),
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Command::Bench { manifest, jobs, include_timeouts, timeout, out, solver } => {
            let options = BenchOptions { jobs, include_timeouts, timeout: timeout.map(Duration::from_secs), solver: solver.config() };
            let results = match run_manifest(&manifest, &options) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(3);
                }
            };
            println!("{}", render_table(&results));
            let json = serde_json::to_string_pretty(&results).expect("results serialize");
            if let Err(e) = std::fs::write(&out, json) {
                eprintln!("error: cannot write {}: {e}", out.display());
                return ExitCode::from(3);
            }
            if results.iter().all(|r| r.matches) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
