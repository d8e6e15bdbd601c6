//! Printing of guards, linear forms and values as SMT-LIB terms.

use num_traits::{One, Signed, Zero};

use crate::expectations::ExtLin;
use crate::pgcl::ast::{BoolExpr, Var};
use crate::pgcl::linear::{Atom, LinForm};
use crate::value::Rational;

pub const INFINITY: &str = "infty";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sort {
    Int,
    Real,
}

impl Sort {
    pub fn name(self) -> &'static str {
        match self {
            Sort::Int => "Int",
            Sort::Real => "Real",
        }
    }
}

/// Program variables live in their own namespace so they never clash with
/// auxiliary function symbols.
pub fn var_symbol(v: &Var) -> String {
    format!("v.{}", v.name())
}

pub fn numeral(c: &Rational, sort: Sort) -> String {
    let abs = c.abs();
    let body = match sort {
        Sort::Int => {
            debug_assert!(abs.is_integer());
            abs.to_integer().to_string()
        }
        Sort::Real if abs.is_integer() => format!("{}.0", abs.to_integer()),
        Sort::Real => format!("(/ {}.0 {}.0)", abs.numer(), abs.denom()),
    };
    if c.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

fn atom_term(a: &Atom, sort: Sort) -> String {
    match a {
        Atom::Var(v) => match sort {
            Sort::Int => var_symbol(v),
            Sort::Real => format!("(to_real {})", var_symbol(v)),
        },
        Atom::Monus(p, n) => {
            let (p, n) = (lin_term(p, sort), lin_term(n, sort));
            format!("(ite (>= {p} {n}) (- {p} {n}) {})", numeral(&Rational::zero(), sort))
        }
    }
}

pub fn lin_term(l: &LinForm, sort: Sort) -> String {
    let mut parts: Vec<String> = l
        .terms()
        .map(|(a, c)| {
            let t = atom_term(a, sort);
            if c.is_one() {
                t
            } else {
                format!("(* {} {t})", numeral(c, sort))
            }
        })
        .collect();
    if !l.constant_part().is_zero() || parts.is_empty() {
        parts.push(numeral(l.constant_part(), sort));
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

/// Integer-sorted when every coefficient is integral.
pub fn sort_of(forms: &[&LinForm]) -> Sort {
    if forms.iter().all(|l| l.is_integral()) {
        Sort::Int
    } else {
        Sort::Real
    }
}

pub fn bool_term(b: &BoolExpr) -> String {
    let cmp = |op: &str, x: &crate::pgcl::ast::Expr, y: &crate::pgcl::ast::Expr| {
        let (x, y) = (LinForm::from_expr(x), LinForm::from_expr(y));
        let sort = sort_of(&[&x, &y]);
        format!("({op} {} {})", lin_term(&x, sort), lin_term(&y, sort))
    };
    let nary = |op: &str, items: &[BoolExpr], unit: &str| match items.len() {
        0 => unit.to_string(),
        1 => bool_term(&items[0]),
        _ => format!("({op} {})", items.iter().map(bool_term).collect::<Vec<_>>().join(" ")),
    };
    match b {
        BoolExpr::True => "true".into(),
        BoolExpr::False => "false".into(),
        BoolExpr::Lt(x, y) => cmp("<", x, y),
        BoolExpr::Le(x, y) => cmp("<=", x, y),
        BoolExpr::Eq(x, y) => cmp("=", x, y),
        BoolExpr::Not(x) => format!("(not {})", bool_term(x)),
        BoolExpr::And(xs) => nary("and", xs, "true"),
        BoolExpr::Or(xs) => nary("or", xs, "false"),
        BoolExpr::Implies(x, y) => format!("(=> {} {})", bool_term(x), bool_term(y)),
    }
}

/// A real-valued term; infinity becomes the shared `infty` constant.
pub fn value_term(v: &ExtLin) -> String {
    match v {
        ExtLin::Finite(l) => lin_term(l, Sort::Real),
        ExtLin::Infinity => INFINITY.to_string(),
    }
}

pub fn and_terms(items: Vec<String>) -> String {
    match items.len() {
        0 => "true".into(),
        1 => items.into_iter().next().unwrap(),
        _ => format!("(and {})", items.join(" ")),
    }
}

pub fn or_terms(items: Vec<String>) -> String {
    match items.len() {
        0 => "false".into(),
        1 => items.into_iter().next().unwrap(),
        _ => format!("(or {})", items.join(" ")),
    }
}
