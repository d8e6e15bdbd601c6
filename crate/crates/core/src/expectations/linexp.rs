use std::fmt;

use num_traits::{One, Zero};

use crate::pgcl::ast::{BoolExpr, Expr, Var};
use crate::pgcl::linear::{simplify_bool, LinForm};
use crate::pgcl::state::State;
use crate::value::{ExtValue, Rational};

/// Extended linear arithmetic: a linear expression or the atom `inf`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExtExpr {
    Finite(Expr),
    Infinity,
}

impl ExtExpr {
    pub fn eval(&self, state: &State) -> ExtValue {
        match self {
            ExtExpr::Finite(e) => ExtValue::Finite(e.eval(state)),
            ExtExpr::Infinity => ExtValue::Infinity,
        }
    }
}

impl fmt::Display for ExtExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtExpr::Finite(e) => write!(f, "{e}"),
            ExtExpr::Infinity => f.write_str("inf"),
        }
    }
}

/// Canonical counterpart of [`ExtExpr`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtLin {
    Finite(LinForm),
    Infinity,
}

impl ExtLin {
    pub fn zero() -> Self {
        ExtLin::Finite(LinForm::zero())
    }

    pub fn from_ext(e: &ExtExpr) -> Self {
        match e {
            ExtExpr::Finite(e) => ExtLin::Finite(LinForm::from_expr(e)),
            ExtExpr::Infinity => ExtLin::Infinity,
        }
    }

    pub fn to_ext(&self) -> ExtExpr {
        match self {
            ExtLin::Finite(l) => ExtExpr::Finite(l.to_expr()),
            ExtLin::Infinity => ExtExpr::Infinity,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtLin::Finite(l) if l.is_zero())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtLin::Infinity)
    }

    pub fn add(&self, other: &ExtLin) -> ExtLin {
        match (self, other) {
            (ExtLin::Finite(a), ExtLin::Finite(b)) => ExtLin::Finite(a.add(b)),
            _ => ExtLin::Infinity,
        }
    }

    pub fn scale(&self, c: &Rational) -> ExtLin {
        if c.is_zero() {
            return ExtLin::zero();
        }
        match self {
            ExtLin::Finite(a) => ExtLin::Finite(a.scale(c)),
            ExtLin::Infinity => ExtLin::Infinity,
        }
    }

    pub fn eval(&self, state: &State) -> ExtValue {
        match self {
            ExtLin::Finite(l) => ExtValue::Finite(l.eval(state)),
            ExtLin::Infinity => ExtValue::Infinity,
        }
    }
}

impl fmt::Display for ExtLin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_ext())
    }
}

/// Linear expectations: Iverson-guarded sums of extended linear terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LinExp {
    Term(ExtExpr),
    Guard(BoolExpr, Box<LinExp>),
    Sum(Vec<LinExp>),
}

impl LinExp {
    pub fn zero() -> Self {
        LinExp::Term(ExtExpr::Finite(Expr::nat(0)))
    }

    pub fn infinity() -> Self {
        LinExp::Term(ExtExpr::Infinity)
    }

    pub fn constant(c: Rational) -> Self {
        LinExp::Term(ExtExpr::Finite(Expr::Const(c)))
    }

    pub fn expr(e: Expr) -> Self {
        LinExp::Term(ExtExpr::Finite(e))
    }

    pub fn guard(b: BoolExpr, h: LinExp) -> Self {
        LinExp::Guard(b, Box::new(h))
    }

    /// `[b]`, i.e. one where `b` holds and zero elsewhere.
    pub fn iverson(b: BoolExpr) -> Self {
        LinExp::guard(b, LinExp::constant(Rational::one()))
    }

    pub fn sum(items: Vec<LinExp>) -> Self {
        LinExp::Sum(items)
    }

    pub fn evaluate(&self, state: &State) -> ExtValue {
        match self {
            LinExp::Term(e) => e.eval(state),
            LinExp::Guard(b, h) => {
                if b.eval(state) {
                    h.evaluate(state)
                } else {
                    ExtValue::zero()
                }
            }
            LinExp::Sum(hs) => hs.iter().fold(ExtValue::zero(), |acc, h| acc + h.evaluate(state)),
        }
    }

    pub fn substitute_with(&self, f: &impl Fn(&Var) -> Option<Expr>) -> LinExp {
        match self {
            LinExp::Term(ExtExpr::Finite(e)) => LinExp::expr(e.substitute_with(f)),
            LinExp::Term(ExtExpr::Infinity) => self.clone(),
            LinExp::Guard(b, h) => LinExp::guard(b.substitute_with(f), h.substitute_with(f)),
            LinExp::Sum(hs) => LinExp::Sum(hs.iter().map(|h| h.substitute_with(f)).collect()),
        }
    }

    pub fn substitute(&self, x: &Var, e: &Expr) -> LinExp {
        self.substitute_with(&|v| (v == x).then(|| e.clone()))
    }

    /// Scalar multiple with `0 * inf = 0`.
    pub fn rescale(&self, c: &Rational) -> LinExp {
        if c.is_zero() {
            return LinExp::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        match self {
            LinExp::Term(ExtExpr::Finite(e)) => LinExp::expr(Expr::scale(c.clone(), e.clone())),
            LinExp::Term(ExtExpr::Infinity) => self.clone(),
            LinExp::Guard(b, h) => LinExp::guard(b.clone(), h.rescale(c)),
            LinExp::Sum(hs) => LinExp::Sum(hs.iter().map(|h| h.rescale(c)).collect()),
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            LinExp::Term(ExtExpr::Finite(e)) => e.collect_vars(out),
            LinExp::Term(ExtExpr::Infinity) => {}
            LinExp::Guard(b, h) => {
                b.collect_vars(out);
                h.collect_vars(out);
            }
            LinExp::Sum(hs) => hs.iter().for_each(|h| h.collect_vars(out)),
        }
    }

    /// Flattens into guarded summands `[guard] * value` with simplified guards,
    /// no zero values, and summands sharing a guard merged.
    pub fn summands(&self) -> Vec<(BoolExpr, ExtLin)> {
        let mut raw = Vec::new();
        flatten(self, &BoolExpr::True, &mut raw);
        let mut out: Vec<(BoolExpr, ExtLin)> = Vec::new();
        for (g, v) in raw {
            let g = simplify_bool(&g);
            if g == BoolExpr::False || v.is_zero() {
                continue;
            }
            if let Some(slot) = out.iter_mut().find(|(h, _)| *h == g) {
                slot.1 = slot.1.add(&v);
            } else {
                out.push((g, v));
            }
        }
        out.retain(|(_, v)| !v.is_zero());
        out
    }

    /// Best-effort syntactic simplification; always pointwise equal to `self`.
    pub fn simplify(&self) -> LinExp {
        LinExp::from_summands(self.summands())
    }

    pub fn from_summands(summands: Vec<(BoolExpr, ExtLin)>) -> LinExp {
        if summands.iter().any(|(g, v)| *g == BoolExpr::True && v.is_infinite()) {
            return LinExp::infinity();
        }
        let mut items: Vec<LinExp> = summands
            .into_iter()
            .map(|(g, v)| {
                let t = LinExp::Term(v.to_ext());
                if g == BoolExpr::True {
                    t
                } else {
                    LinExp::guard(g, t)
                }
            })
            .collect();
        match items.len() {
            0 => LinExp::zero(),
            1 => items.pop().unwrap(),
            _ => LinExp::Sum(items),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            LinExp::Term(_) => 1,
            LinExp::Guard(_, h) => 1 + h.size(),
            LinExp::Sum(hs) => 1 + hs.iter().map(LinExp::size).sum::<usize>(),
        }
    }
}

fn flatten(h: &LinExp, ctx: &BoolExpr, out: &mut Vec<(BoolExpr, ExtLin)>) {
    match h {
        LinExp::Term(e) => out.push((ctx.clone(), ExtLin::from_ext(e))),
        LinExp::Guard(b, inner) => {
            let g = match ctx {
                BoolExpr::True => b.clone(),
                _ => BoolExpr::and(ctx.clone(), b.clone()),
            };
            flatten(inner, &g, out)
        }
        LinExp::Sum(hs) => hs.iter().for_each(|h| flatten(h, ctx, out)),
    }
}

impl fmt::Display for LinExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinExp::Term(e) => write!(f, "{e}"),
            LinExp::Guard(b, h) => {
                write!(f, "[{b}]")?;
                match &**h {
                    LinExp::Term(ExtExpr::Finite(Expr::Const(c))) if c.is_one() => Ok(()),
                    LinExp::Sum(_) | LinExp::Term(ExtExpr::Finite(Expr::Add(..) | Expr::Monus(..))) => {
                        write!(f, "*({h})")
                    }
                    _ => write!(f, "*{h}"),
                }
            }
            LinExp::Sum(hs) => {
                if hs.is_empty() {
                    return f.write_str("0");
                }
                for (i, h) in hs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    match h {
                        LinExp::Term(ExtExpr::Finite(Expr::Monus(..))) => write!(f, "({h})")?,
                        _ => write!(f, "{h}")?,
                    }
                }
                Ok(())
            }
        }
    }
}
