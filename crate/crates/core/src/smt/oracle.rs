use std::collections::{HashMap, HashSet};

use crate::error::Result;
use crate::expectations::GuardOracle;
use crate::lattice::{CancelToken, SolverStats};
use crate::pgcl::ast::{BoolExpr, Var};
use crate::pgcl::linear::simplify_bool;
use crate::smt::client::{Solver, SolverConfig};
use crate::smt::term::{bool_term, var_symbol};

/// Guard satisfiability over natural-valued variables, decided by a dedicated
/// solver session and memoized by the printed guard.
pub struct SolverOracle {
    solver: Solver,
    declared: HashSet<Var>,
    memo: HashMap<String, bool>,
    pub queries: u64,
}

impl SolverOracle {
    pub fn start(config: &SolverConfig, cancel: Option<&CancelToken>) -> Result<Self> {
        let mut solver = Solver::start(config)?;
        if let Some(c) = cancel {
            c.on_cancel(solver.kill_handle());
        }
        solver.set_logic("UFLIRA")?;
        Ok(SolverOracle { solver, declared: HashSet::new(), memo: HashMap::new(), queries: 0 })
    }

    pub fn declare(&mut self, vars: &[Var]) -> Result<()> {
        for v in vars {
            if self.declared.insert(v.clone()) {
                let s = var_symbol(v);
                self.solver.declare_const(&s, "Int")?;
                self.solver.assert(&format!("(>= {s} 0)"))?;
            }
        }
        Ok(())
    }
}

impl SolverOracle {
    pub fn solver(&mut self) -> &mut Solver {
        &mut self.solver
    }

    pub fn stats(&self) -> SolverStats {
        SolverStats { formula_count: self.solver.max_asserted, formulae_time: Default::default(), sat_time: self.solver.sat_time }
    }
}

impl GuardOracle for SolverOracle {
    fn satisfiable(&mut self, guard: &BoolExpr) -> Result<bool> {
        let g = simplify_bool(guard);
        match g {
            BoolExpr::True => return Ok(true),
            BoolExpr::False => return Ok(false),
            _ => {}
        }
        let term = bool_term(&g);
        if let Some(&r) = self.memo.get(&term) {
            return Ok(r);
        }
        let mut vars = Vec::new();
        g.collect_vars(&mut vars);
        self.declare(&vars)?;
        self.queries += 1;
        self.solver.push()?;
        self.solver.assert(&term)?;
        let r = self.solver.check_decided();
        self.solver.pop()?;
        let r = r?;
        self.memo.insert(term, r);
        Ok(r)
    }
}
