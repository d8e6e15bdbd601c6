//! Symbolic execution of a loop-free body into guarded probabilistic updates.

use num_traits::{One, Zero};

use crate::expectations::Mode;
use crate::pgcl::ast::{BoolExpr, Program, Stmt, Var};
use crate::pgcl::linear::{negate, simplify_bool, LinForm};
use crate::value::Rational;

/// One execution path: taken with `prob` whenever `cond` holds of the initial
/// state, ending in the state given by `update` (one form per program variable).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub cond: BoolExpr,
    pub prob: Rational,
    pub update: Vec<LinForm>,
    pub cost: Rational,
}

impl Path {
    /// `cond` and `update` with every variable replaced by the given forms.
    pub fn instantiate(&self, vars: &[Var], args: &[LinForm]) -> (BoolExpr, Vec<LinForm>) {
        let lookup = |v: &Var| vars.iter().position(|w| w == v).map(|i| args[i].clone());
        let cond = simplify_bool(&self.cond.substitute_with(&|v| lookup(v).map(|l| l.to_expr())));
        let update = self.update.iter().map(|u| u.substitute_with(&lookup)).collect();
        (cond, update)
    }
}

pub fn summarize(program: &Program, mode: Mode) -> Vec<Path> {
    let identity = Path {
        cond: BoolExpr::True,
        prob: Rational::one(),
        update: program.vars.iter().map(|v| LinForm::var(v.clone())).collect(),
        cost: Rational::zero(),
    };
    let paths = exec(&program.body, vec![identity], &program.vars, mode);
    let mut merged: Vec<Path> = Vec::new();
    for p in paths {
        match merged.iter_mut().find(|q| q.cond == p.cond && q.update == p.update && q.cost == p.cost) {
            Some(q) => q.prob += p.prob,
            None => merged.push(p),
        }
    }
    merged
}

fn guard_at(b: &BoolExpr, p: &Path, vars: &[Var]) -> BoolExpr {
    let b = b.substitute_with(&|v| vars.iter().position(|w| w == v).map(|i| p.update[i].to_expr()));
    simplify_bool(&BoolExpr::and(p.cond.clone(), b))
}

fn exec(s: &Stmt, paths: Vec<Path>, vars: &[Var], mode: Mode) -> Vec<Path> {
    match s {
        Stmt::Skip => paths,
        Stmt::Tick(n) => {
            if mode == Mode::Ert {
                paths.into_iter().map(|p| Path { cost: p.cost + Rational::from_integer((*n).into()), ..p }).collect()
            } else {
                paths
            }
        }
        Stmt::Assign(x, e) => paths.into_iter().map(|p| assign(p, x, &LinForm::from_expr(e), vars)).collect(),
        Stmt::Seq(ss) => ss.iter().fold(paths, |acc, s| exec(s, acc, vars, mode)),
        Stmt::Ite(b, t, e) => {
            let mut out = Vec::new();
            for p in paths {
                let yes = guard_at(b, &p, vars);
                let no = guard_at(&negate(b), &p, vars);
                if yes != BoolExpr::False {
                    out.extend(exec(t, vec![Path { cond: yes, ..p.clone() }], vars, mode));
                }
                if no != BoolExpr::False {
                    out.extend(exec(e, vec![Path { cond: no, ..p }], vars, mode));
                }
            }
            out
        }
        Stmt::Choice(l, q, r) => {
            let mut out = Vec::new();
            let rest = Rational::one() - q;
            for p in paths {
                if !q.is_zero() {
                    out.extend(exec(l, vec![Path { prob: &p.prob * q, ..p.clone() }], vars, mode));
                }
                if !rest.is_zero() {
                    out.extend(exec(r, vec![Path { prob: &p.prob * &rest, ..p }], vars, mode));
                }
            }
            out
        }
        Stmt::CatAssign(x, branches) => {
            let mut out = Vec::new();
            for p in paths {
                for (e, w) in branches {
                    if w.is_zero() {
                        continue;
                    }
                    let q = Path { prob: &p.prob * w, ..p.clone() };
                    out.push(assign(q, x, &LinForm::from_expr(e), vars));
                }
            }
            out
        }
    }
}

fn assign(mut p: Path, x: &Var, e: &LinForm, vars: &[Var]) -> Path {
    let value = e.substitute_with(&|v| vars.iter().position(|w| w == v).map(|i| p.update[i].clone()));
    if let Some(i) = vars.iter().position(|w| w == x) {
        p.update[i] = value;
    }
    p
}
