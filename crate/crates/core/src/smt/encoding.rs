//! Incremental encoding of the iterates of the characteristic functional as
//! uninterpreted real functions over the program variables.
//!
//! Every iterate is a function symbol defined pointwise: for an argument tuple
//! `t` the defining formulas of `F(t)` mention other symbols only at argument
//! tuples obtained by running the loop body once from `t`. Definitions are
//! generated on demand for the tuples reachable from the identity, so each
//! query is a finite quantifier-free formula.

use std::collections::{HashSet, VecDeque};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::expectations::{gnf, ExtLin, GuardOracle, LinExp, Mode, Syntactic};
use crate::lattice::{CancelToken, SolverStats};
use crate::pgcl::ast::{BoolExpr, Program, Var};
use crate::pgcl::linear::{negate, simplify_bool, LinForm};
use crate::pgcl::state::State;
use crate::smt::client::{Solver, SolverConfig};
use crate::smt::oracle::SolverOracle;
use crate::smt::paths::{summarize, Path};
use crate::smt::term::{and_terms, bool_term, lin_term, numeral, or_terms, value_term, var_symbol, Sort, INFINITY};
use crate::value::Rational;

pub const MAX_INSTANCES: usize = 2_000_000;

/// A loop, its postexpectation and the candidate upper bound.
#[derive(Clone, Debug)]
pub struct Problem {
    pub program: Program,
    pub post: LinExp,
    pub candidate: LinExp,
    pub mode: Mode,
}

impl Problem {
    /// In runtime mode the postexpectation is ignored and taken to be zero.
    pub fn new(program: Program, post: LinExp, candidate: LinExp, mode: Mode) -> Self {
        let post = if mode == Mode::Ert { LinExp::zero() } else { post };
        Problem { program, post, candidate, mode }
    }
}

#[derive(Clone, Debug)]
pub struct EncodingOptions {
    pub solver: SolverConfig,
    /// Define every function at every argument tuple reachable through the
    /// body. When off, only the identity tuple is defined and the remaining
    /// applications stay unconstrained.
    pub closure: bool,
    /// Decide guard feasibility with a solver instead of the simplifier alone.
    pub solver_pruning: bool,
    /// Assert instance definitions inside each query's scope, so a query
    /// carries only the instances it reaches instead of every earlier one.
    pub scoped: bool,
    pub emit: Option<PathBuf>,
}

impl Default for EncodingOptions {
    fn default() -> Self {
        EncodingOptions { solver: SolverConfig::from_env(), closure: true, solver_pruning: true, scoped: true, emit: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FunId(usize);

#[derive(Clone, Copy, Debug)]
enum Def {
    Zero,
    Candidate,
    Phi(FunId),
    Meet(FunId),
}

struct Fun {
    def: Def,
    name: String,
}

pub struct Encoding {
    solver: Solver,
    oracle: Box<dyn GuardOracle + Send>,
    vars: Vec<Var>,
    identity: Vec<LinForm>,
    guard: BoolExpr,
    paths: Vec<Path>,
    post: Vec<(BoolExpr, ExtLin)>,
    bound: Vec<(BoolExpr, ExtLin)>,
    funs: Vec<Fun>,
    defined: HashSet<(FunId, Vec<LinForm>)>,
    pending: VecDeque<(FunId, Vec<LinForm>)>,
    closure: bool,
    scoped: bool,
    phis: usize,
    meets: usize,
    zero: Option<FunId>,
    candidate: Option<FunId>,
    cancel: Option<CancelToken>,
    formulae_time: Duration,
}

impl Encoding {
    pub fn new(problem: &Problem, options: &EncodingOptions, cancel: Option<&CancelToken>) -> Result<Self> {
        let started = Instant::now();
        let mut solver = Solver::start(&options.solver)?;
        if let Some(c) = cancel {
            c.on_cancel(solver.kill_handle());
        }
        if let Some(path) = &options.emit {
            solver.tee_to(path)?;
        }
        let vars = problem.program.vars.clone();
        let mut oracle: Box<dyn GuardOracle + Send> = if options.solver_pruning {
            let mut o = SolverOracle::start(&options.solver, cancel)?;
            o.declare(&vars)?;
            Box::new(o)
        } else {
            Box::new(Syntactic)
        };
        solver.set_logic("UFLIRA")?;
        for v in &vars {
            let s = var_symbol(v);
            solver.declare_const(&s, "Int")?;
            solver.assert(&format!("(>= {s} 0)"))?;
        }
        solver.declare_const(INFINITY, "Real")?;
        solver.assert(&format!("(>= {INFINITY} 0.0)"))?;
        let post = gnf(&problem.post, oracle.as_mut())?.cells;
        let bound = gnf(&problem.candidate, oracle.as_mut())?.cells;
        let mut enc = Encoding {
            solver,
            oracle,
            identity: vars.iter().map(|v| LinForm::var(v.clone())).collect(),
            vars,
            guard: simplify_bool(&problem.program.guard),
            paths: summarize(&problem.program, problem.mode),
            post,
            bound,
            funs: Vec::new(),
            defined: HashSet::new(),
            pending: VecDeque::new(),
            closure: options.closure,
            scoped: options.scoped,
            phis: 0,
            meets: 0,
            zero: None,
            candidate: None,
            cancel: cancel.cloned(),
            formulae_time: Duration::ZERO,
        };
        enc.formulae_time += started.elapsed();
        Ok(enc)
    }

    pub fn stats(&self) -> SolverStats {
        SolverStats {
            formula_count: self.solver.max_asserted,
            formulae_time: self.formulae_time,
            sat_time: self.solver.sat_time,
        }
    }

    pub fn instances(&self) -> usize {
        self.defined.len()
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn name(&self, f: FunId) -> &str {
        &self.funs[f.0].name
    }

    pub fn comment(&mut self, text: &str) -> Result<()> {
        self.solver.comment(text)
    }

    fn add_fun(&mut self, def: Def, name: String) -> Result<FunId> {
        if !matches!(def, Def::Zero) {
            let sorts = vec!["Int"; self.vars.len()];
            self.solver.declare_fun(&name, &sorts, "Real")?;
        }
        self.funs.push(Fun { def, name });
        Ok(FunId(self.funs.len() - 1))
    }

    pub fn zero(&mut self) -> Result<FunId> {
        if let Some(z) = self.zero {
            return Ok(z);
        }
        let z = self.add_fun(Def::Zero, "zero".into())?;
        self.zero = Some(z);
        Ok(z)
    }

    pub fn candidate(&mut self) -> Result<FunId> {
        if let Some(c) = self.candidate {
            return Ok(c);
        }
        let c = self.add_fun(Def::Candidate, "F".into())?;
        self.candidate = Some(c);
        Ok(c)
    }

    pub fn is_candidate(&self, f: FunId) -> bool {
        self.candidate == Some(f)
    }

    /// A fresh symbol for the functional applied to `of`.
    pub fn phi(&mut self, of: FunId) -> Result<FunId> {
        let name = format!("P.{}", self.phis);
        self.phis += 1;
        self.add_fun(Def::Phi(of), name)
    }

    /// A fresh symbol for the pointwise minimum of `of` and the candidate.
    pub fn meet(&mut self, of: FunId) -> Result<FunId> {
        self.meets += 1;
        let name = format!("Q.{}", self.meets);
        self.add_fun(Def::Meet(of), name)
    }

    fn app(&mut self, f: FunId, args: &[LinForm]) -> Result<String> {
        if matches!(self.funs[f.0].def, Def::Zero) {
            return Ok(numeral(&Rational::zero(), Sort::Real));
        }
        if (self.closure || args == self.identity.as_slice()) && !self.defined.contains(&(f, args.to_vec())) {
            self.defined.insert((f, args.to_vec()));
            self.pending.push_back((f, args.to_vec()));
        }
        let name = &self.funs[f.0].name;
        if args.is_empty() {
            return Ok(name.clone());
        }
        let args: Vec<String> = args.iter().map(|a| lin_term(a, Sort::Int)).collect();
        Ok(format!("({name} {})", args.join(" ")))
    }

    fn feasible(&mut self, g: &BoolExpr) -> Result<bool> {
        match g {
            BoolExpr::True => Ok(true),
            BoolExpr::False => Ok(false),
            _ => self.oracle.satisfiable(g),
        }
    }

    fn at(&self, b: &BoolExpr, args: &[LinForm]) -> BoolExpr {
        if args == self.identity.as_slice() {
            return b.clone();
        }
        let vars = &self.vars;
        simplify_bool(&b.substitute_with(&|v| vars.iter().position(|w| w == v).map(|i| args[i].to_expr())))
    }

    fn value_at(&self, v: &ExtLin, args: &[LinForm]) -> ExtLin {
        match v {
            ExtLin::Infinity => ExtLin::Infinity,
            ExtLin::Finite(l) => {
                let vars = &self.vars;
                ExtLin::Finite(l.substitute_with(&|x| vars.iter().position(|w| w == x).map(|i| args[i].clone())))
            }
        }
    }

    fn define_guarded(&mut self, premise: &BoolExpr, head: &str, value: &str) -> Result<()> {
        let eq = format!("(= {head} {value})");
        match premise {
            BoolExpr::True => self.solver.assert(&eq),
            p => self.solver.assert(&format!("(=> {} {eq})", bool_term(p))),
        }
    }

    fn define(&mut self, f: FunId, args: Vec<LinForm>) -> Result<()> {
        let head = {
            let name = &self.funs[f.0].name;
            if args.is_empty() {
                name.clone()
            } else {
                format!("({name} {})", args.iter().map(|a| lin_term(a, Sort::Int)).collect::<Vec<_>>().join(" "))
            }
        };
        match self.funs[f.0].def {
            Def::Zero => {}
            Def::Candidate => {
                for (psi, a) in self.bound.clone() {
                    let pt = self.at(&psi, &args);
                    if self.feasible(&pt)? {
                        let v = value_term(&self.value_at(&a, &args));
                        self.define_guarded(&pt, &head, &v)?;
                    }
                }
            }
            Def::Phi(of) => {
                let inside = self.at(&self.guard, &args);
                let outside = negate(&inside);
                if self.feasible(&outside)? {
                    for (psi, g) in self.post.clone() {
                        let premise = simplify_bool(&BoolExpr::and(outside.clone(), self.at(&psi, &args)));
                        if self.feasible(&premise)? {
                            let v = value_term(&self.value_at(&g, &args));
                            self.define_guarded(&premise, &head, &v)?;
                        }
                    }
                }
                if self.feasible(&inside)? {
                    let mut terms = Vec::new();
                    for path in self.paths.clone() {
                        let (cond, update) = path.instantiate(&self.vars, &args);
                        let reach = simplify_bool(&BoolExpr::and(inside.clone(), cond.clone()));
                        if !self.feasible(&reach)? {
                            continue;
                        }
                        let mut inner = self.app(of, &update)?;
                        if !path.cost.is_zero() {
                            inner = format!("(+ {inner} {})", numeral(&path.cost, Sort::Real));
                        }
                        if !path.prob.is_one() {
                            inner = format!("(* {} {inner})", numeral(&path.prob, Sort::Real));
                        }
                        if cond != BoolExpr::True {
                            inner = format!("(ite {} {inner} 0.0)", bool_term(&cond));
                        }
                        terms.push(inner);
                    }
                    let body = match terms.len() {
                        0 => numeral(&Rational::zero(), Sort::Real),
                        1 => terms.pop().unwrap(),
                        _ => format!("(+ {})", terms.join(" ")),
                    };
                    self.define_guarded(&inside, &head, &body)?;
                }
            }
            Def::Meet(of) => {
                let inner = self.app(of, &args)?;
                for (psi, a) in self.bound.clone() {
                    let pt = self.at(&psi, &args);
                    if !self.feasible(&pt)? {
                        continue;
                    }
                    let v = match self.value_at(&a, &args) {
                        ExtLin::Infinity => inner.clone(),
                        ExtLin::Finite(l) => {
                            let b = lin_term(&l, Sort::Real);
                            format!("(ite (<= {inner} {b}) {inner} {b})")
                        }
                    };
                    self.define_guarded(&pt, &head, &v)?;
                }
            }
        }
        Ok(())
    }

    fn close(&mut self) -> Result<()> {
        while let Some((f, args)) = self.pending.pop_front() {
            if self.cancel.as_ref().is_some_and(CancelToken::is_cancelled) {
                return Err(Error::Cancelled);
            }
            if self.defined.len() > MAX_INSTANCES {
                return Err(Error::Resource(format!("more than {MAX_INSTANCES} function instances")));
            }
            self.define(f, args)?;
        }
        Ok(())
    }

    /// Searches for a state where `f` exceeds a finite value of the candidate.
    fn open_scope(&mut self) -> Result<()> {
        if self.scoped {
            self.solver.push()?;
        }
        Ok(())
    }

    fn close_scope(&mut self) -> Result<()> {
        if self.scoped {
            self.defined.clear();
            self.pending.clear();
            self.solver.pop()?;
        }
        Ok(())
    }

    /// Searches for a state where `f` exceeds a finite value of the candidate.
    pub fn exceeds(&mut self, f: FunId) -> Result<Option<State>> {
        self.open_scope()?;
        let r = self.exceeds_in_scope(f);
        let closed = self.close_scope();
        let r = r?;
        closed?;
        Ok(r)
    }

    fn exceeds_in_scope(&mut self, f: FunId) -> Result<Option<State>> {
        let started = Instant::now();
        let head = self.app(f, &self.identity.clone())?;
        let built = self.close().and_then(|_| {
            let mut disjuncts = Vec::new();
            for (psi, a) in self.bound.clone() {
                let ExtLin::Finite(l) = a else { continue };
                if !self.feasible(&psi)? {
                    continue;
                }
                let above = format!("(> {head} {})", lin_term(&l, Sort::Real));
                disjuncts.push(match psi {
                    BoolExpr::True => above,
                    p => and_terms(vec![bool_term(&p), above]),
                });
            }
            Ok(disjuncts)
        });
        self.formulae_time += started.elapsed();
        let disjuncts = built?;
        if disjuncts.is_empty() {
            return Ok(None);
        }
        self.solver.push()?;
        let r = self.solver.assert(&or_terms(disjuncts)).and_then(|_| self.solver.check_decided());
        let r = match r {
            Ok(true) => self.model_state().map(Some),
            Ok(false) => Ok(None),
            Err(e) => Err(e),
        };
        self.solver.pop()?;
        r
    }

    /// Searches for a state where `lhs` exceeds `rhs` while `infty` exceeds
    /// `floor * (1 + sum of the variables)`. Values that are infinite in the
    /// semantics are only bounded below by multiples of `infty`, so a
    /// returned state is a candidate to be confirmed, while unsat means no
    /// violation between finite values exists.
    pub fn exceeds_fun(&mut self, lhs: FunId, rhs: FunId, floor: &Rational) -> Result<Option<State>> {
        self.open_scope()?;
        let r = self.exceeds_fun_in_scope(lhs, rhs, floor);
        let closed = self.close_scope();
        let r = r?;
        closed?;
        Ok(r)
    }

    fn exceeds_fun_in_scope(&mut self, lhs: FunId, rhs: FunId, floor: &Rational) -> Result<Option<State>> {
        let id = self.identity.clone();
        let l = self.app(lhs, &id)?;
        let r = self.app(rhs, &id)?;
        self.close()?;
        self.solver.push()?;
        let result = (|| {
            let size: Vec<String> = self.vars.iter().map(|v| format!("(to_real {})", var_symbol(v))).collect();
            let size = format!("(+ 1.0 {})", size.join(" "));
            self.solver.assert(&format!("(> {INFINITY} (* {} {size}))", numeral(floor, Sort::Real)))?;
            self.solver.assert(&format!("(> {l} {r})"))?;
            if self.solver.check_decided()? {
                self.model_state().map(Some)
            } else {
                Ok(None)
            }
        })();
        self.solver.pop()?;
        result
    }

    fn model_state(&mut self) -> Result<State> {
        let symbols: Vec<String> = self.vars.iter().map(var_symbol).collect();
        let values = self.solver.get_value(&symbols)?;
        let mut s = State::new();
        for (v, x) in self.vars.iter().zip(values) {
            let n = x.to_integer().to_biguint().ok_or_else(|| Error::Protocol(format!("negative model value for {v}")))?;
            s.set(v.clone(), n);
        }
        Ok(s)
    }

    /// What the encoding determines about `f` at `state` once `infty` exceeds `floor`.
    pub fn probe(&mut self, f: FunId, state: &State, floor: &Rational, threshold: &Rational) -> Result<Probe> {
        self.open_scope()?;
        let r = self.probe_in_scope(f, state, floor, threshold);
        let closed = self.close_scope();
        let r = r?;
        closed?;
        Ok(r)
    }

    fn probe_in_scope(&mut self, f: FunId, state: &State, floor: &Rational, threshold: &Rational) -> Result<Probe> {
        let head = self.app(f, &self.identity.clone())?;
        self.close()?;
        self.solver.push()?;
        let pin: Vec<String> = self
            .vars
            .iter()
            .map(|v| format!("(= {} {})", var_symbol(v), state.get(v)))
            .collect();
        let result = (|| {
            self.solver.assert(&and_terms(pin))?;
            self.solver.assert(&format!("(> {INFINITY} {})", numeral(floor, Sort::Real)))?;
            if !self.solver.check_decided()? {
                return Err(Error::Invariant("encoding is unsatisfiable at a concrete state".into()));
            }
            let value = self.solver.get_value(std::slice::from_ref(&head))?.remove(0);
            self.solver.push()?;
            self.solver.assert(&format!("(not (= {head} {}))", numeral(&value, Sort::Real)))?;
            let other = self.solver.check_decided();
            self.solver.pop()?;
            if !other? {
                return Ok(Probe::Exactly(value));
            }
            self.solver.push()?;
            self.solver.assert(&format!("(<= {head} {})", numeral(threshold, Sort::Real)))?;
            let small = self.solver.check_decided();
            self.solver.pop()?;
            Ok(if small? { Probe::Unpinned } else { Probe::Above })
        })();
        self.solver.pop()?;
        result
    }
}

/// What the encoding says about a value at one state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Probe {
    Exactly(Rational),
    /// Forced above the probe threshold.
    Above,
    Unpinned,
}

/// The two encodings a verifier steps through: Kleene iterates from zero for
/// refutation and candidate-clipped iterates for k-induction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chain {
    Induction,
    Bmc,
}

/// A frame-by-frame view of an [`Encoding`].
pub struct EncodingState {
    pub encoding: Encoding,
    chain: Chain,
    current: FunId,
    last_phi: Option<FunId>,
    pub k: u64,
}

impl EncodingState {
    pub fn init_encoding(problem: &Problem, chain: Chain, options: &EncodingOptions) -> Result<Self> {
        let mut encoding = Encoding::new(problem, options, None)?;
        let current = match chain {
            Chain::Induction => encoding.candidate()?,
            Chain::Bmc => encoding.zero()?,
        };
        encoding.candidate()?;
        Ok(EncodingState { encoding, chain, current, last_phi: None, k: 0 })
    }

    /// Adds the next application of the functional.
    pub fn push_frame(&mut self) -> Result<FunId> {
        self.k += 1;
        self.encoding.comment(&format!("frame {}", self.k))?;
        let p = self.encoding.phi(self.current)?;
        self.current = match self.chain {
            Chain::Induction => self.encoding.meet(p)?,
            Chain::Bmc => p,
        };
        self.last_phi = Some(p);
        Ok(p)
    }

    fn last(&mut self) -> Result<FunId> {
        match self.last_phi {
            Some(p) => Ok(p),
            None => self.push_frame(),
        }
    }

    /// Whether the newest frame lies below the candidate.
    pub fn check_inductive(&mut self) -> Result<bool> {
        let p = self.last()?;
        Ok(self.encoding.exceeds(p)?.is_none())
    }

    /// A state where the newest frame exceeds the candidate, if any.
    pub fn check_exceeds(&mut self) -> Result<Option<State>> {
        let p = self.last()?;
        self.encoding.exceeds(p)
    }
}
