use crate::error::{Error, Result};
use crate::expectations::{characteristic_functional, gnf, min_expectation, ExtLin, LinExp, Phi};
use crate::lattice::{CancelToken, Entailment, SolverStats, VerificationDomain};
use crate::pgcl::ast::BoolExpr;
use crate::pgcl::linear::simplify_bool;
use crate::pgcl::state::State;
use crate::smt::client::SolverConfig;
use crate::smt::encoding::{Encoding, EncodingOptions, FunId, Problem};
use crate::smt::oracle::SolverOracle;
use crate::smt::term::{and_terms, bool_term, or_terms, value_term, var_symbol};

fn cancelled_or(cancel: &Option<CancelToken>, e: Error) -> Error {
    if cancel.as_ref().is_some_and(CancelToken::is_cancelled) {
        Error::Cancelled
    } else {
        e
    }
}

/// Iterates as uninterpreted functions in one incremental solver session.
/// Entailments are decided only against the candidate.
pub struct SmtDomain {
    encoding: Encoding,
    cancel: Option<CancelToken>,
    frames: u64,
}

impl SmtDomain {
    pub fn new(problem: &Problem, options: &EncodingOptions, cancel: Option<&CancelToken>) -> Result<Self> {
        let encoding = Encoding::new(problem, options, cancel)?;
        Ok(SmtDomain { encoding, cancel: cancel.cloned(), frames: 0 })
    }

    pub fn encoding(&mut self) -> &mut Encoding {
        &mut self.encoding
    }

    fn wrap<T>(&self, r: Result<T>) -> Result<T> {
        r.map_err(|e| cancelled_or(&self.cancel, e))
    }
}

impl VerificationDomain for SmtDomain {
    type Element = FunId;
    type Witness = State;

    fn bottom(&mut self) -> Result<FunId> {
        let r = self.encoding.zero();
        self.wrap(r)
    }

    fn candidate(&mut self) -> Result<FunId> {
        let r = self.encoding.candidate();
        self.wrap(r)
    }

    fn apply_phi(&mut self, e: &FunId) -> Result<FunId> {
        self.frames += 1;
        let frames = self.frames;
        let r = self.encoding.comment(&format!("frame {frames}")).and_then(|_| self.encoding.phi(*e));
        self.wrap(r)
    }

    fn meet_with_bound(&mut self, e: &FunId) -> Result<FunId> {
        let r = self.encoding.meet(*e);
        self.wrap(r)
    }

    fn entails(&mut self, lhs: &FunId, rhs: &FunId) -> Result<Entailment<State>> {
        if !self.encoding.is_candidate(*rhs) {
            return Err(Error::Unsupported("the function encoding only decides entailments against the candidate".into()));
        }
        let r = self.encoding.exceeds(*lhs);
        Ok(match self.wrap(r)? {
            Some(s) => Entailment::Violated(s),
            None => Entailment::Holds,
        })
    }

    fn solver_stats(&self) -> SolverStats {
        self.encoding.stats()
    }
}

/// Decides `lhs <= rhs` pointwise; a violation comes with a state where it fails.
pub fn entails(lhs: &LinExp, rhs: &LinExp, session: &mut SolverOracle) -> Result<Entailment<State>> {
    let a = gnf(lhs, session)?;
    let b = gnf(rhs, session)?;
    let mut vars = Vec::new();
    lhs.collect_vars(&mut vars);
    rhs.collect_vars(&mut vars);
    vars.sort_by(|x, y| x.name().cmp(y.name()));
    vars.dedup();
    session.declare(&vars)?;
    let mut disjuncts = Vec::new();
    for (phi, e) in &a.cells {
        for (psi, v) in &b.cells {
            if v.is_infinite() || e.is_zero() {
                continue;
            }
            let base = simplify_bool(&BoolExpr::and(phi.clone(), psi.clone()));
            if base == BoolExpr::False {
                continue;
            }
            let mut parts = vec![bool_term(&base)];
            if let ExtLin::Finite(_) = e {
                parts.push(format!("(> {} {})", value_term(e), value_term(v)));
            }
            disjuncts.push(and_terms(parts));
        }
    }
    if disjuncts.is_empty() {
        return Ok(Entailment::Holds);
    }
    let solver = session.solver();
    solver.push()?;
    let r = solver.assert(&or_terms(disjuncts)).and_then(|_| solver.check_decided()).and_then(|sat| {
        if !sat {
            return Ok(Entailment::Holds);
        }
        let symbols: Vec<String> = vars.iter().map(var_symbol).collect();
        let values = solver.get_value(&symbols)?;
        let mut s = State::new();
        for (v, x) in vars.iter().zip(values) {
            let n = x.to_integer().to_biguint().ok_or_else(|| Error::Protocol(format!("negative model value for {v}")))?;
            s.set(v.clone(), n);
        }
        Ok(Entailment::Violated(s))
    });
    solver.pop()?;
    r
}

/// Iterates as explicit expectations. Slower, but decides entailments between
/// arbitrary elements, so it supports the lemma cross-checks.
pub struct SymbolicDomain {
    phi: Phi,
    candidate: LinExp,
    session: SolverOracle,
    cancel: Option<CancelToken>,
}

impl SymbolicDomain {
    pub fn new(problem: &Problem, solver: &SolverConfig, cancel: Option<&CancelToken>) -> Result<Self> {
        let mut session = SolverOracle::start(solver, cancel)?;
        session.declare(&problem.program.vars)?;
        Ok(SymbolicDomain {
            phi: characteristic_functional(&problem.program, &problem.post, problem.mode),
            candidate: problem.candidate.clone(),
            session,
            cancel: cancel.cloned(),
        })
    }
}

impl VerificationDomain for SymbolicDomain {
    type Element = LinExp;
    type Witness = State;

    fn bottom(&mut self) -> Result<LinExp> {
        Ok(LinExp::zero())
    }

    fn candidate(&mut self) -> Result<LinExp> {
        Ok(self.candidate.clone())
    }

    fn apply_phi(&mut self, e: &LinExp) -> Result<LinExp> {
        Ok(self.phi.apply(e))
    }

    fn meet_with_bound(&mut self, e: &LinExp) -> Result<LinExp> {
        let r = min_expectation(e, &self.candidate, &mut self.session);
        r.map_err(|e| cancelled_or(&self.cancel, e))
    }

    fn entails(&mut self, lhs: &LinExp, rhs: &LinExp) -> Result<Entailment<State>> {
        let r = entails(lhs, rhs, &mut self.session);
        r.map_err(|e| cancelled_or(&self.cancel, e))
    }

    fn solver_stats(&self) -> SolverStats {
        self.session.stats()
    }
}
