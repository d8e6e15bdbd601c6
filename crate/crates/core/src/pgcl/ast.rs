use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::pgcl::state::State;
use crate::value::{format_rational, Rational};

/// A program variable. All variables range over the naturals.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: &str) -> Self {
        Var(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var::new(s)
    }
}

/// Linear arithmetic over naturals (programs) or nonnegative rationals (expectations).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Const(Rational),
    Var(Var),
    Scale(Rational, Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    /// Truncated subtraction `max(0, a - b)`.
    Monus(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(r: Rational) -> Self {
        Expr::Const(r)
    }

    pub fn nat(n: u64) -> Self {
        Expr::Const(Rational::from_integer(n.into()))
    }

    pub fn var(name: &str) -> Self {
        Expr::Var(Var::new(name))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expr, b: Expr) -> Self {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn monus(a: Expr, b: Expr) -> Self {
        Expr::Monus(Box::new(a), Box::new(b))
    }

    pub fn scale(c: Rational, e: Expr) -> Self {
        Expr::Scale(c, Box::new(e))
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn eval(&self, state: &State) -> Rational {
        match self {
            Expr::Const(c) => c.clone(),
            Expr::Var(v) => Rational::from_integer(state.get(v).into()),
            Expr::Scale(c, e) => c * e.eval(state),
            Expr::Add(a, b) => a.eval(state) + b.eval(state),
            Expr::Monus(a, b) => {
                let d = a.eval(state) - b.eval(state);
                if d < Rational::zero() {
                    Rational::zero()
                } else {
                    d
                }
            }
        }
    }

    /// Simultaneous substitution of variables.
    pub fn substitute_with(&self, f: &impl Fn(&Var) -> Option<Expr>) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) => f(v).unwrap_or_else(|| self.clone()),
            Expr::Scale(c, e) => Expr::Scale(c.clone(), Box::new(e.substitute_with(f))),
            Expr::Add(a, b) => Expr::add(a.substitute_with(f), b.substitute_with(f)),
            Expr::Monus(a, b) => Expr::monus(a.substitute_with(f), b.substitute_with(f)),
        }
    }

    pub fn substitute(&self, x: &Var, e: &Expr) -> Expr {
        self.substitute_with(&|v| (v == x).then(|| e.clone()))
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone())
                }
            }
            Expr::Scale(_, e) => e.collect_vars(out),
            Expr::Add(a, b) | Expr::Monus(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// True if every constant is an integer, so the expression denotes a natural.
    pub fn is_integral(&self) -> bool {
        match self {
            Expr::Const(c) => c.is_integer(),
            Expr::Var(_) => true,
            Expr::Scale(c, e) => c.is_integer() && e.is_integral(),
            Expr::Add(a, b) | Expr::Monus(a, b) => a.is_integral() && b.is_integral(),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Expr::Const(c) => f.write_str(&format_rational(c)),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Scale(c, e) => {
                if prec > 2 {
                    f.write_str("(")?;
                }
                write!(f, "{}*", format_rational(c))?;
                e.fmt_prec(f, 3)?;
                if prec > 2 {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Expr::Add(a, b) | Expr::Monus(a, b) => {
                if prec > 1 {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, 1)?;
                f.write_str(if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                b.fmt_prec(f, 2)?;
                if prec > 1 {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Linear guards. `Gt`/`Ge`/`Ne` from the surface syntax are expressed with
/// `Lt`/`Le`/`Not`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoolExpr {
    True,
    False,
    Lt(Expr, Expr),
    Le(Expr, Expr),
    Eq(Expr, Expr),
    Not(Box<BoolExpr>),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
    Implies(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    #[allow(clippy::should_implement_trait)]
    pub fn not(b: BoolExpr) -> Self {
        BoolExpr::Not(Box::new(b))
    }

    pub fn and(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::And(vec![a, b])
    }

    pub fn or(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::Or(vec![a, b])
    }

    pub fn eval(&self, state: &State) -> bool {
        match self {
            BoolExpr::True => true,
            BoolExpr::False => false,
            BoolExpr::Lt(a, b) => a.eval(state) < b.eval(state),
            BoolExpr::Le(a, b) => a.eval(state) <= b.eval(state),
            BoolExpr::Eq(a, b) => a.eval(state) == b.eval(state),
            BoolExpr::Not(b) => !b.eval(state),
            BoolExpr::And(bs) => bs.iter().all(|b| b.eval(state)),
            BoolExpr::Or(bs) => bs.iter().any(|b| b.eval(state)),
            BoolExpr::Implies(a, b) => !a.eval(state) || b.eval(state),
        }
    }

    pub fn substitute_with(&self, f: &impl Fn(&Var) -> Option<Expr>) -> BoolExpr {
        match self {
            BoolExpr::True | BoolExpr::False => self.clone(),
            BoolExpr::Lt(a, b) => BoolExpr::Lt(a.substitute_with(f), b.substitute_with(f)),
            BoolExpr::Le(a, b) => BoolExpr::Le(a.substitute_with(f), b.substitute_with(f)),
            BoolExpr::Eq(a, b) => BoolExpr::Eq(a.substitute_with(f), b.substitute_with(f)),
            BoolExpr::Not(b) => BoolExpr::not(b.substitute_with(f)),
            BoolExpr::And(bs) => BoolExpr::And(bs.iter().map(|b| b.substitute_with(f)).collect()),
            BoolExpr::Or(bs) => BoolExpr::Or(bs.iter().map(|b| b.substitute_with(f)).collect()),
            BoolExpr::Implies(a, b) => {
                BoolExpr::Implies(Box::new(a.substitute_with(f)), Box::new(b.substitute_with(f)))
            }
        }
    }

    pub fn substitute(&self, x: &Var, e: &Expr) -> BoolExpr {
        self.substitute_with(&|v| (v == x).then(|| e.clone()))
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            BoolExpr::True | BoolExpr::False => {}
            BoolExpr::Lt(a, b) | BoolExpr::Le(a, b) | BoolExpr::Eq(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            BoolExpr::Not(b) => b.collect_vars(out),
            BoolExpr::And(bs) | BoolExpr::Or(bs) => bs.iter().for_each(|b| b.collect_vars(out)),
            BoolExpr::Implies(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        let paren = |f: &mut fmt::Formatter<'_>, level: u8, body: &dyn Fn(&mut fmt::Formatter<'_>) -> fmt::Result| {
            if prec > level {
                f.write_str("(")?;
                body(f)?;
                f.write_str(")")
            } else {
                body(f)
            }
        };
        match self {
            BoolExpr::True => f.write_str("true"),
            BoolExpr::False => f.write_str("false"),
            BoolExpr::Lt(a, b) => write!(f, "{a} < {b}"),
            BoolExpr::Le(a, b) => write!(f, "{a} <= {b}"),
            BoolExpr::Eq(a, b) => write!(f, "{a} = {b}"),
            BoolExpr::Not(b) => {
                f.write_str("not (")?;
                b.fmt_prec(f, 0)?;
                f.write_str(")")
            }
            BoolExpr::Implies(a, b) => paren(f, 0, &|f| {
                a.fmt_prec(f, 1)?;
                f.write_str(" ==> ")?;
                b.fmt_prec(f, 1)
            }),
            BoolExpr::Or(bs) => paren(f, 1, &|f| {
                if bs.is_empty() {
                    return f.write_str("false");
                }
                for (i, b) in bs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" || ")?;
                    }
                    b.fmt_prec(f, 2)?;
                }
                Ok(())
            }),
            BoolExpr::And(bs) => paren(f, 2, &|f| {
                if bs.is_empty() {
                    return f.write_str("true");
                }
                for (i, b) in bs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    b.fmt_prec(f, 3)?;
                }
                Ok(())
            }),
        }
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Loop-free statements.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    Skip,
    Assign(Var, Expr),
    /// At least two statements, none of them a `Seq`.
    Seq(Vec<Stmt>),
    /// `{ left } [p] { right }`: runs `left` with probability `p`.
    Choice(Box<Stmt>, Rational, Box<Stmt>),
    Ite(BoolExpr, Box<Stmt>, Box<Stmt>),
    Tick(u64),
    /// `x := e1 : p1 + ... + en : pn` with positive weights summing to one.
    CatAssign(Var, Vec<(Expr, Rational)>),
}

impl Stmt {
    /// Builds a sequence, flattening nested sequences and collapsing trivial ones.
    pub fn seq(stmts: Vec<Stmt>) -> Stmt {
        let mut flat = Vec::new();
        for s in stmts {
            match s {
                Stmt::Seq(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Stmt::Skip,
            1 => flat.pop().unwrap(),
            _ => Stmt::Seq(flat),
        }
    }

    pub fn choice(left: Stmt, p: Rational, right: Stmt) -> Stmt {
        Stmt::Choice(Box::new(left), p, Box::new(right))
    }

    pub fn ite(guard: BoolExpr, then: Stmt, otherwise: Stmt) -> Stmt {
        Stmt::Ite(guard, Box::new(then), Box::new(otherwise))
    }

    /// Rewrites categorical assignments into right-nested binary choices with
    /// renormalized conditional probabilities.
    pub fn desugar(&self) -> Stmt {
        match self {
            Stmt::Skip | Stmt::Assign(..) | Stmt::Tick(_) => self.clone(),
            Stmt::Seq(ss) => Stmt::seq(ss.iter().map(Stmt::desugar).collect()),
            Stmt::Choice(l, p, r) => Stmt::choice(l.desugar(), p.clone(), r.desugar()),
            Stmt::Ite(b, t, e) => Stmt::ite(b.clone(), t.desugar(), e.desugar()),
            Stmt::CatAssign(x, branches) => {
                let mut remaining = Rational::one();
                let mut stmts: Vec<(Stmt, Rational)> = Vec::new();
                for (e, w) in branches {
                    stmts.push((Stmt::Assign(x.clone(), e.clone()), w.clone()));
                }
                fn build(items: &[(Stmt, Rational)], mass: Rational) -> Stmt {
                    if items.len() == 1 {
                        return items[0].0.clone();
                    }
                    let (first, w) = &items[0];
                    let p = w / &mass;
                    Stmt::choice(first.clone(), p, build(&items[1..], mass - w))
                }
                if stmts.is_empty() {
                    return Stmt::Skip;
                }
                let result = build(&stmts, remaining.clone());
                remaining.set_zero();
                result
            }
        }
    }

    pub fn contains_tick(&self) -> bool {
        match self {
            Stmt::Tick(_) => true,
            Stmt::Skip | Stmt::Assign(..) | Stmt::CatAssign(..) => false,
            Stmt::Seq(ss) => ss.iter().any(Stmt::contains_tick),
            Stmt::Choice(l, _, r) | Stmt::Ite(_, l, r) => l.contains_tick() || r.contains_tick(),
        }
    }

    fn fmt_block(&self, f: &mut fmt::Formatter<'_>, indent: usize) -> fmt::Result {
        match self {
            Stmt::Seq(ss) => {
                for s in ss {
                    s.fmt_indented(f, indent)?;
                }
                Ok(())
            }
            other => other.fmt_indented(f, indent),
        }
    }

    fn fmt_indented(&self, f: &mut fmt::Formatter<'_>, indent: usize) -> fmt::Result {
        let pad = "    ".repeat(indent);
        match self {
            Stmt::Skip => writeln!(f, "{pad}skip;"),
            Stmt::Assign(x, e) => writeln!(f, "{pad}{x} := {e};"),
            Stmt::Tick(n) => writeln!(f, "{pad}tick({n});"),
            Stmt::CatAssign(x, branches) => {
                write!(f, "{pad}{x} := ")?;
                for (i, (e, w)) in branches.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{} : {}", ExprArg(e), format_rational(w))?;
                }
                writeln!(f, ";")
            }
            Stmt::Seq(_) => self.fmt_block(f, indent),
            Stmt::Choice(l, p, r) => {
                writeln!(f, "{pad}{{")?;
                l.fmt_block(f, indent + 1)?;
                writeln!(f, "{pad}}} [{}] {{", format_rational(p))?;
                r.fmt_block(f, indent + 1)?;
                writeln!(f, "{pad}}}")
            }
            Stmt::Ite(b, t, e) => {
                writeln!(f, "{pad}if ({b}) {{")?;
                t.fmt_block(f, indent + 1)?;
                writeln!(f, "{pad}}} else {{")?;
                e.fmt_block(f, indent + 1)?;
                writeln!(f, "{pad}}}")
            }
        }
    }
}

/// Prints a categorical branch value, parenthesized when it contains `+` or `-`.
struct ExprArg<'a>(&'a Expr);

impl fmt::Display for ExprArg<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Expr::Add(..) | Expr::Monus(..) => write!(f, "({})", self.0),
            e => write!(f, "{e}"),
        }
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_indented(f, 0)
    }
}

/// A single-loop program `while (guard) { body }` over declared natural variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub vars: Vec<Var>,
    pub guard: BoolExpr,
    pub body: Stmt,
}

impl Program {
    pub fn var_index(&self, v: &Var) -> Option<usize> {
        self.vars.iter().position(|w| w == v)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.vars {
            writeln!(f, "nat {v};")?;
        }
        writeln!(f, "while ({}) {{", self.guard)?;
        self.body.fmt_block(f, 1)?;
        writeln!(f, "}}")
    }
}
