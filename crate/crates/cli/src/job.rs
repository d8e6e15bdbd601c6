use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use pkind::error::Error;
use pkind::expectations::{parse_expectation, LinExp, Mode};
use pkind::lattice::Limits;
use pkind::pgcl::{parse_program, Program};
use pkind::smt::{verify, EncodingOptions, Problem, SolverConfig};

use crate::report::Report;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Human,
    Json,
}

/// Everything needed to run one verification.
#[derive(Clone, Debug)]
pub struct JobSpec {
    pub program: PathBuf,
    /// Expectation text, or `@path` to read it from a file.
    pub post: Option<String>,
    pub pre: String,
    pub mode: Mode,
    pub max_k: Option<u64>,
    pub max_n: Option<u64>,
    pub deadline: Duration,
    pub solver: SolverConfig,
    pub emit_smt2: Option<PathBuf>,
    pub format: OutputFormat,
}

impl JobSpec {
    pub fn new(program: impl Into<PathBuf>, pre: impl Into<String>) -> Self {
        JobSpec {
            program: program.into(),
            post: None,
            pre: pre.into(),
            mode: Mode::Wp,
            max_k: None,
            max_n: None,
            deadline: pkind::lattice::DEFAULT_DEADLINE,
            solver: SolverConfig::from_env(),
            emit_smt2: None,
            format: OutputFormat::Human,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.deadline.is_zero() {
            return Err("the deadline must be positive".into());
        }
        match (self.mode, &self.post) {
            (Mode::Ert, Some(_)) => Err("runtime mode fixes the postexpectation to 0; drop --post".into()),
            (Mode::Wp, None) => Err("--post is required unless --ert is given".into()),
            _ => Ok(()),
        }
    }
}

fn read_text(arg: &str, base: Option<&Path>) -> Result<String, String> {
    match arg.strip_prefix('@') {
        Some(path) => {
            let p = match base {
                Some(b) if Path::new(path).is_relative() => b.join(path),
                _ => PathBuf::from(path),
            };
            std::fs::read_to_string(&p).map_err(|e| format!("cannot read {}: {e}", p.display()))
        }
        None => Ok(arg.to_string()),
    }
}

fn expectation(text: &str, program: &Program, what: &str) -> Result<LinExp, String> {
    parse_expectation(text.trim(), Some(&program.vars)).map_err(|e| format!("{what}: {e}"))
}

pub fn load_problem(job: &JobSpec) -> Result<Problem, String> {
    job.validate()?;
    let src = std::fs::read_to_string(&job.program).map_err(|e| format!("cannot read {}: {e}", job.program.display()))?;
    let program = parse_program(&src).map_err(|e| format!("{}: {e}", job.program.display()))?;
    let pre = expectation(&read_text(&job.pre, None)?, &program, "candidate")?;
    let post = match &job.post {
        Some(p) => expectation(&read_text(p, None)?, &program, "postexpectation")?,
        None => LinExp::zero(),
    };
    Ok(Problem::new(program, post, pre, job.mode))
}

/// Parses the job's inputs and runs both engines in parallel.
pub fn run(job: &JobSpec) -> Report {
    let start = Instant::now();
    let problem = match load_problem(job) {
        Ok(p) => p,
        Err(e) => return Report::error(e, start.elapsed()),
    };
    if let Some(dir) = &job.emit_smt2 {
        if let Err(e) = std::fs::create_dir_all(dir) {
            return Report::error(format!("cannot create {}: {e}", dir.display()), start.elapsed());
        }
    }
    let options = EncodingOptions { solver: job.solver.clone(), ..EncodingOptions::default() };
    let limits = Limits { max_k: job.max_k, max_n: job.max_n, deadline: Some(job.deadline), ..Limits::default() };
    match verify(&problem, &options, job.emit_smt2.as_deref(), &limits) {
        Ok(outcome) => Report::from_outcome(&outcome, &problem.program.vars),
        Err(Error::Cancelled) => Report::error("cancelled", start.elapsed()),
        Err(e) => Report::error(e.to_string(), start.elapsed()),
    }
}
