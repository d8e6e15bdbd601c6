use std::fmt;

use crate::error::{Error, Result};
use crate::expectations::linexp::{ExtLin, LinExp};
use crate::pgcl::ast::BoolExpr;
use crate::pgcl::linear::{negate, simplify_bool};
use crate::pgcl::state::State;
use crate::value::ExtValue;

/// Decides satisfiability of guards over natural-valued states.
pub trait GuardOracle {
    fn satisfiable(&mut self, guard: &BoolExpr) -> Result<bool>;
}

/// Prunes only guards the simplifier already refutes.
#[derive(Clone, Copy, Debug, Default)]
pub struct Syntactic;

impl GuardOracle for Syntactic {
    fn satisfiable(&mut self, guard: &BoolExpr) -> Result<bool> {
        Ok(simplify_bool(guard) != BoolExpr::False)
    }
}

pub const MAX_CELLS: usize = 1 << 16;

/// Guarded normal form: mutually exclusive, exhaustive guard/value cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gnf {
    pub cells: Vec<(BoolExpr, ExtLin)>,
}

impl Gnf {
    pub fn evaluate(&self, state: &State) -> ExtValue {
        self.cells
            .iter()
            .find(|(g, _)| g.eval(state))
            .map(|(_, v)| v.eval(state))
            .unwrap_or_else(ExtValue::zero)
    }

    pub fn to_linexp(&self) -> LinExp {
        LinExp::from_summands(self.cells.iter().filter(|(_, v)| !v.is_zero()).cloned().collect())
    }
}

impl fmt::Display for Gnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (g, v)) in self.cells.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "[{g}]*({v})")?;
        }
        Ok(())
    }
}

fn conj(a: &BoolExpr, b: &BoolExpr) -> BoolExpr {
    simplify_bool(&BoolExpr::and(a.clone(), b.clone()))
}

fn feasible(oracle: &mut dyn GuardOracle, g: &BoolExpr) -> Result<bool> {
    match g {
        BoolExpr::False => Ok(false),
        BoolExpr::True => Ok(true),
        _ => oracle.satisfiable(g),
    }
}

pub fn gnf(h: &LinExp, oracle: &mut dyn GuardOracle) -> Result<Gnf> {
    let mut cells: Vec<(BoolExpr, ExtLin)> = vec![(BoolExpr::True, ExtLin::zero())];
    for (psi, a) in h.summands() {
        let not_psi = negate(&psi);
        let mut next = Vec::with_capacity(cells.len() * 2);
        for (gamma, v) in &cells {
            let with = conj(gamma, &psi);
            if feasible(oracle, &with)? {
                next.push((with, v.add(&a)));
            }
            let without = conj(gamma, &not_psi);
            if feasible(oracle, &without)? {
                next.push((without, v.clone()));
            }
        }
        if next.len() > MAX_CELLS {
            return Err(Error::Resource(format!("normal form exceeds {MAX_CELLS} cells")));
        }
        cells = next;
    }
    Ok(Gnf { cells: merge_equal_values(cells) })
}

fn merge_equal_values(cells: Vec<(BoolExpr, ExtLin)>) -> Vec<(BoolExpr, ExtLin)> {
    let mut out: Vec<(Vec<BoolExpr>, ExtLin)> = Vec::new();
    for (g, v) in cells {
        match out.iter_mut().find(|(_, w)| *w == v) {
            Some(slot) => slot.0.push(g),
            None => out.push((vec![g], v)),
        }
    }
    out.into_iter()
        .map(|(mut gs, v)| {
            let g = if gs.len() == 1 { gs.pop().unwrap() } else { simplify_bool(&BoolExpr::Or(gs)) };
            (g, v)
        })
        .collect()
}

/// Pointwise minimum via the product of both normal forms.
pub fn min_expectation(h: &LinExp, h2: &LinExp, oracle: &mut dyn GuardOracle) -> Result<LinExp> {
    let a = gnf(h, oracle)?;
    let b = gnf(h2, oracle)?;
    let mut cells = Vec::new();
    for (phi, e) in &a.cells {
        for (psi, v) in &b.cells {
            let base = conj(phi, psi);
            if !feasible(oracle, &base)? {
                continue;
            }
            match (e, v) {
                (ExtLin::Infinity, _) => cells.push((base, v.clone())),
                (_, ExtLin::Infinity) => cells.push((base, e.clone())),
                (ExtLin::Finite(x), ExtLin::Finite(y)) => {
                    let le = conj(&base, &BoolExpr::Le(x.to_expr(), y.to_expr()));
                    if feasible(oracle, &le)? {
                        cells.push((le, e.clone()));
                    }
                    let gt = conj(&base, &BoolExpr::Lt(y.to_expr(), x.to_expr()));
                    if feasible(oracle, &gt)? {
                        cells.push((gt, v.clone()));
                    }
                }
            }
        }
    }
    cells.retain(|(_, v)| !v.is_zero());
    Ok(LinExp::from_summands(cells))
}
