//! A minimal SMT-LIB2 client speaking to a solver process over its standard streams.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::value::{parse_rational, Rational};

pub const SOLVER_ENV: &str = "PKIND_SOLVER";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub path: PathBuf,
    pub args: Vec<String>,
}

impl SolverConfig {
    pub fn new(path: impl Into<PathBuf>, args: Vec<String>) -> Self {
        SolverConfig { path: path.into(), args }
    }

    /// `$PKIND_SOLVER` if set, otherwise `z3` from the search path, reading from stdin.
    pub fn from_env() -> Self {
        let path = std::env::var_os(SOLVER_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("z3"));
        let args = if path.file_name().is_some_and(|n| n.to_string_lossy().starts_with("z3")) {
            vec!["-in".to_string()]
        } else {
            Vec::new()
        };
        SolverConfig { path, args }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::from_env()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a) => f.write_str(a),
            Sexp::List(items) => {
                f.write_str("(")?;
                for (i, s) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{s}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Parses a single s-expression from text.
pub fn parse_sexp(text: &str) -> Result<Sexp> {
    let mut chars = text.chars().peekable();
    let s = read_sexp(&mut || chars.next())?;
    Ok(s)
}

fn read_sexp(next: &mut dyn FnMut() -> Option<char>) -> Result<Sexp> {
    let mut stack: Vec<Vec<Sexp>> = Vec::new();
    let mut atom = String::new();
    loop {
        let Some(c) = next() else {
            return Err(Error::Solver("solver closed its output".into()));
        };
        match c {
            '(' => stack.push(Vec::new()),
            ')' => {
                if !atom.is_empty() {
                    let a = std::mem::take(&mut atom);
                    match stack.last_mut() {
                        Some(top) => top.push(Sexp::Atom(a)),
                        None => return Err(Error::Protocol(format!("unbalanced response near `{a}`"))),
                    }
                }
                let Some(done) = stack.pop() else {
                    return Err(Error::Protocol("unbalanced `)` in response".into()));
                };
                let node = Sexp::List(done);
                match stack.last_mut() {
                    Some(top) => top.push(node),
                    None => return Ok(node),
                }
            }
            '"' | '|' => {
                atom.push(c);
                loop {
                    let Some(d) = next() else {
                        return Err(Error::Solver("solver closed its output".into()));
                    };
                    atom.push(d);
                    if d == c {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {
                if !atom.is_empty() {
                    let a = std::mem::take(&mut atom);
                    match stack.last_mut() {
                        Some(top) => top.push(Sexp::Atom(a)),
                        None => return Ok(Sexp::Atom(a)),
                    }
                }
            }
            c => atom.push(c),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat,
    Unsat,
    Unknown,
}

/// A running solver process.
pub struct Solver {
    child: Arc<Mutex<Child>>,
    stdin: BufWriter<ChildStdin>,
    stdout: BufReader<ChildStdout>,
    tee: Option<BufWriter<File>>,
    frames: Vec<u64>,
    asserted: u64,
    pub max_asserted: u64,
    pub sat_time: Duration,
    pub checks: u64,
}

impl Solver {
    pub fn start(config: &SolverConfig) -> Result<Solver> {
        let mut child = Command::new(&config.path)
            .args(&config.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::Solver(format!("cannot start solver `{}`: {e}", config.path.display())))?;
        let stdin = child.stdin.take().ok_or_else(|| Error::Solver("no solver stdin".into()))?;
        let stdout = child.stdout.take().ok_or_else(|| Error::Solver("no solver stdout".into()))?;
        let mut s = Solver {
            child: Arc::new(Mutex::new(child)),
            stdin: BufWriter::new(stdin),
            stdout: BufReader::new(stdout),
            tee: None,
            frames: Vec::new(),
            asserted: 0,
            max_asserted: 0,
            sat_time: Duration::ZERO,
            checks: 0,
        };
        s.command("(set-option :print-success true)")?;
        Ok(s)
    }

    /// Copies every subsequent command to `path`.
    pub fn tee_to(&mut self, path: impl Into<PathBuf>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path.into())?);
        writeln!(w, "(set-option :print-success true)")?;
        self.tee = Some(w);
        Ok(())
    }

    /// Returns a closure that kills the solver process from any thread.
    pub fn kill_handle(&self) -> impl Fn() + Send + 'static {
        let child = Arc::clone(&self.child);
        move || {
            if let Ok(mut c) = child.lock() {
                let _ = c.kill();
            }
        }
    }

    pub fn comment(&mut self, text: &str) -> Result<()> {
        if let Some(t) = &mut self.tee {
            writeln!(t, "; {text}")?;
        }
        Ok(())
    }

    fn send(&mut self, cmd: &str) -> Result<()> {
        if let Some(t) = &mut self.tee {
            writeln!(t, "{cmd}")?;
        }
        let io = |e: std::io::Error| Error::Solver(format!("solver pipe closed: {e}"));
        self.stdin.write_all(cmd.as_bytes()).map_err(io)?;
        self.stdin.write_all(b"\n").map_err(io)?;
        self.stdin.flush().map_err(io)
    }

    fn read_response(&mut self) -> Result<Sexp> {
        let stdout = &mut self.stdout;
        let mut err = None;
        let mut next = || {
            let mut buf = [0u8; 1];
            match stdout.read(&mut buf) {
                Ok(1) => Some(buf[0] as char),
                Ok(_) => None,
                Err(e) => {
                    err = Some(e);
                    None
                }
            }
        };
        let r = read_sexp(&mut next);
        if let Some(e) = err {
            return Err(Error::Solver(format!("reading solver output failed: {e}")));
        }
        let r = r?;
        if let Sexp::List(items) = &r {
            if items.first() == Some(&Sexp::Atom("error".into())) {
                let msg = items.get(1).map(|m| m.to_string()).unwrap_or_default();
                return Err(Error::Protocol(msg.trim_matches('"').to_string()));
            }
        }
        Ok(r)
    }

    /// Sends a command that must be acknowledged with `success`.
    pub fn command(&mut self, cmd: &str) -> Result<()> {
        self.send(cmd)?;
        match self.read_response()? {
            Sexp::Atom(a) if a == "success" => Ok(()),
            other => Err(Error::Protocol(format!("expected success for `{cmd}`, got `{other}`"))),
        }
    }

    pub fn set_logic(&mut self, logic: &str) -> Result<()> {
        self.command(&format!("(set-logic {logic})"))
    }

    pub fn declare_const(&mut self, name: &str, sort: &str) -> Result<()> {
        self.command(&format!("(declare-fun {name} () {sort})"))
    }

    pub fn declare_fun(&mut self, name: &str, args: &[&str], sort: &str) -> Result<()> {
        self.command(&format!("(declare-fun {name} ({}) {sort})", args.join(" ")))
    }

    pub fn assert(&mut self, term: &str) -> Result<()> {
        self.command(&format!("(assert {term})"))?;
        self.asserted += 1;
        self.max_asserted = self.max_asserted.max(self.asserted);
        Ok(())
    }

    pub fn push(&mut self) -> Result<()> {
        self.command("(push 1)")?;
        self.frames.push(self.asserted);
        Ok(())
    }

    pub fn pop(&mut self) -> Result<()> {
        let Some(n) = self.frames.pop() else {
            return Err(Error::Protocol("pop without matching push".into()));
        };
        self.command("(pop 1)")?;
        self.asserted = n;
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    pub fn asserted(&self) -> u64 {
        self.asserted
    }

    pub fn check_sat(&mut self) -> Result<SatResult> {
        let t = Instant::now();
        self.send("(check-sat)")?;
        let r = self.read_response();
        self.sat_time += t.elapsed();
        self.checks += 1;
        match r? {
            Sexp::Atom(a) if a == "sat" => Ok(SatResult::Sat),
            Sexp::Atom(a) if a == "unsat" => Ok(SatResult::Unsat),
            Sexp::Atom(a) if a == "unknown" => Ok(SatResult::Unknown),
            other => Err(Error::Protocol(format!("unexpected check-sat answer `{other}`"))),
        }
    }

    /// `check-sat` where `unknown` is an error.
    pub fn check_decided(&mut self) -> Result<bool> {
        match self.check_sat()? {
            SatResult::Sat => Ok(true),
            SatResult::Unsat => Ok(false),
            SatResult::Unknown => Err(Error::Unknown),
        }
    }

    /// Reads model values of the given terms, in order.
    pub fn get_value(&mut self, terms: &[String]) -> Result<Vec<Rational>> {
        if terms.is_empty() {
            return Ok(Vec::new());
        }
        self.send(&format!("(get-value ({}))", terms.join(" ")))?;
        let r = self.read_response()?;
        let Sexp::List(pairs) = r else {
            return Err(Error::Protocol(format!("malformed get-value answer `{r}`")));
        };
        if pairs.len() != terms.len() {
            return Err(Error::Protocol(format!("get-value returned {} values for {} terms", pairs.len(), terms.len())));
        }
        pairs
            .iter()
            .map(|p| match p {
                Sexp::List(kv) if kv.len() == 2 => sexp_value(&kv[1]),
                other => Err(Error::Protocol(format!("malformed get-value entry `{other}`"))),
            })
            .collect()
    }

    pub fn stop(mut self) -> Result<()> {
        let _ = self.send("(exit)");
        let mut c = self.child.lock().map_err(|_| Error::Solver("poisoned solver handle".into()))?;
        let _ = c.wait();
        Ok(())
    }
}

impl Drop for Solver {
    fn drop(&mut self) {
        if let Some(t) = &mut self.tee {
            let _ = t.flush();
        }
        if let Ok(mut c) = self.child.lock() {
            if let Ok(None) = c.try_wait() {
                let _ = c.kill();
            }
            let _ = c.wait();
        }
    }
}

/// Decodes numerals, decimals, `(- x)` and `(/ x y)` model values.
pub fn sexp_value(s: &Sexp) -> Result<Rational> {
    match s {
        Sexp::Atom(a) => parse_rational(a).ok_or_else(|| Error::Protocol(format!("cannot read value `{a}`"))),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(op), x] if op == "-" => Ok(-sexp_value(x)?),
            [Sexp::Atom(op), x, y] if op == "/" => {
                let d = sexp_value(y)?;
                if d.is_zero() {
                    return Err(Error::Protocol("division by zero in model".into()));
                }
                Ok(sexp_value(x)? / d)
            }
            [Sexp::Atom(op), x] if op == "to_real" => sexp_value(x),
            _ => Err(Error::Protocol(format!("cannot read value `{s}`"))),
        },
    }
}

pub fn rational_to_int(r: &Rational) -> Option<BigInt> {
    r.is_integer().then(|| r.to_integer())
}
