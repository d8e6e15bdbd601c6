//! Canonical linear forms over naturals with truncated subtraction, and a guard
//! simplifier built on them.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Signed, Zero};

use crate::pgcl::ast::{BoolExpr, Expr, Var};
use crate::pgcl::state::State;
use crate::value::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Var(Var),
    /// `max(0, p - n)` where `p` and `n` have nonnegative coefficients and share no atom.
    Monus(Box<LinForm>, Box<LinForm>),
}

/// `sum(coeff * atom) + constant`. Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinForm {
    terms: BTreeMap<Atom, Rational>,
    constant: Rational,
}

impl LinForm {
    pub fn zero() -> Self {
        LinForm::default()
    }

    pub fn constant(c: Rational) -> Self {
        LinForm { terms: BTreeMap::new(), constant: c }
    }

    pub fn var(v: Var) -> Self {
        LinForm::atom(Atom::Var(v))
    }

    fn atom(a: Atom) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(a, Rational::one());
        LinForm { terms, constant: Rational::zero() }
    }

    pub fn constant_part(&self) -> &Rational {
        &self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Atom, &Rational)> {
        self.terms.iter()
    }

    pub fn as_constant(&self) -> Option<&Rational> {
        self.terms.is_empty().then_some(&self.constant)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.constant.is_zero()
    }

    pub fn from_expr(e: &Expr) -> Self {
        match e {
            Expr::Const(c) => LinForm::constant(c.clone()),
            Expr::Var(v) => LinForm::var(v.clone()),
            Expr::Scale(c, e) => LinForm::from_expr(e).scale(c),
            Expr::Add(a, b) => LinForm::from_expr(a).add(&LinForm::from_expr(b)),
            Expr::Monus(a, b) => LinForm::monus(&LinForm::from_expr(a), &LinForm::from_expr(b)),
        }
    }

    pub fn add(&self, other: &LinForm) -> LinForm {
        let mut out = self.clone();
        for (a, c) in &other.terms {
            out.add_term(a.clone(), c.clone());
        }
        out.constant += &other.constant;
        out
    }

    pub fn add_constant(&self, c: &Rational) -> LinForm {
        let mut out = self.clone();
        out.constant += c;
        out
    }

    fn add_term(&mut self, a: Atom, c: Rational) {
        let entry = self.terms.entry(a.clone()).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&a);
        }
    }

    pub fn scale(&self, c: &Rational) -> LinForm {
        if c.is_zero() {
            return LinForm::zero();
        }
        LinForm {
            terms: self.terms.iter().map(|(a, k)| (a.clone(), k * c)).collect(),
            constant: &self.constant * c,
        }
    }

    /// Plain difference; may have negative coefficients.
    pub fn sub(&self, other: &LinForm) -> LinForm {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn all_nonneg(&self) -> bool {
        !self.constant.is_negative() && self.terms.values().all(|c| c.is_positive())
    }

    pub fn all_nonpos(&self) -> bool {
        !self.constant.is_positive() && self.terms.values().all(|c| c.is_negative())
    }

    /// Splits into `(p, n)` with nonnegative coefficients and `self = p - n`.
    pub fn split(&self) -> (LinForm, LinForm) {
        let mut p = LinForm::zero();
        let mut n = LinForm::zero();
        for (a, c) in &self.terms {
            if c.is_positive() {
                p.terms.insert(a.clone(), c.clone());
            } else {
                n.terms.insert(a.clone(), -c);
            }
        }
        if self.constant.is_positive() {
            p.constant = self.constant.clone();
        } else {
            n.constant = -&self.constant;
        }
        (p, n)
    }

    /// Canonical form of `max(0, a - b)`.
    pub fn monus(a: &LinForm, b: &LinForm) -> LinForm {
        LinForm::truncate(a.sub(b))
    }

    fn truncate(d: LinForm) -> LinForm {
        if d.all_nonneg() {
            return d;
        }
        if d.all_nonpos() {
            return LinForm::zero();
        }
        let positive: Vec<_> = d.terms.iter().filter(|(_, c)| c.is_positive()).collect();
        if positive.len() == 1 && !d.constant.is_positive() {
            if let (Atom::Monus(p, n), c) = positive[0] {
                let c = c.clone();
                let mut rest = d.clone();
                rest.terms.remove(positive[0].0);
                return LinForm::monus(&p.scale(&c), &n.scale(&c).sub(&rest));
            }
        }
        let (p, n) = d.split();
        LinForm::atom(Atom::Monus(Box::new(p), Box::new(n)))
    }

    pub fn substitute_with(&self, f: &impl Fn(&Var) -> Option<LinForm>) -> LinForm {
        let mut out = LinForm::constant(self.constant.clone());
        for (a, c) in &self.terms {
            let replaced = match a {
                Atom::Var(v) => f(v).unwrap_or_else(|| LinForm::var(v.clone())),
                Atom::Monus(p, n) => LinForm::monus(&p.substitute_with(f), &n.substitute_with(f)),
            };
            out = out.add(&replaced.scale(c));
        }
        out
    }

    pub fn eval(&self, state: &State) -> Rational {
        let mut acc = self.constant.clone();
        for (a, c) in &self.terms {
            let v = match a {
                Atom::Var(v) => Rational::from_integer(state.get(v).into()),
                Atom::Monus(p, n) => {
                    let d = p.eval(state) - n.eval(state);
                    if d.is_negative() {
                        Rational::zero()
                    } else {
                        d
                    }
                }
            };
            acc += c * v;
        }
        acc
    }

    pub fn is_integral(&self) -> bool {
        self.constant.is_integer()
            && self.terms.iter().all(|(a, c)| {
                c.is_integer()
                    && match a {
                        Atom::Var(_) => true,
                        Atom::Monus(p, n) => p.is_integral() && n.is_integral(),
                    }
            })
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        for a in self.terms.keys() {
            match a {
                Atom::Var(v) => {
                    if !out.contains(v) {
                        out.push(v.clone())
                    }
                }
                Atom::Monus(p, n) => {
                    p.collect_vars(out);
                    n.collect_vars(out);
                }
            }
        }
    }

    pub fn to_expr(&self) -> Expr {
        let mut acc: Option<Expr> = None;
        for (a, c) in &self.terms {
            let base = match a {
                Atom::Var(v) => Expr::Var(v.clone()),
                Atom::Monus(p, n) => Expr::monus(p.to_expr(), n.to_expr()),
            };
            let t = if c.is_one() { base } else { Expr::scale(c.clone(), base) };
            acc = Some(match acc {
                None => t,
                Some(e) => Expr::add(e, t),
            });
        }
        match acc {
            None => Expr::Const(self.constant.clone()),
            Some(e) if self.constant.is_zero() => e,
            Some(e) => Expr::add(e, Expr::Const(self.constant.clone())),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rel {
    Lt,
    Le,
    Eq,
}

fn compare(rel: Rel, lhs: &Expr, rhs: &Expr) -> BoolExpr {
    let d = LinForm::from_expr(rhs).sub(&LinForm::from_expr(lhs));
    if let Some(c) = d.as_constant() {
        let holds = match rel {
            Rel::Lt => c.is_positive(),
            Rel::Le => !c.is_negative(),
            Rel::Eq => c.is_zero(),
        };
        return if holds { BoolExpr::True } else { BoolExpr::False };
    }
    let k = d.constant_part();
    match rel {
        Rel::Lt if d.all_nonneg() && k.is_positive() => return BoolExpr::True,
        Rel::Lt if d.all_nonpos() => return BoolExpr::False,
        Rel::Le if d.all_nonneg() => return BoolExpr::True,
        Rel::Le if d.all_nonpos() && k.is_negative() => return BoolExpr::False,
        Rel::Eq if (d.all_nonneg() && k.is_positive()) || (d.all_nonpos() && k.is_negative()) => {
            return BoolExpr::False
        }
        _ => {}
    }
    let (p, n) = d.split();
    match rel {
        Rel::Lt => BoolExpr::Lt(n.to_expr(), p.to_expr()),
        Rel::Le => BoolExpr::Le(n.to_expr(), p.to_expr()),
        Rel::Eq => {
            let (a, b) = if n <= p { (n, p) } else { (p, n) };
            BoolExpr::Eq(a.to_expr(), b.to_expr())
        }
    }
}

/// Logical complement of an already simplified guard.
pub fn negate(b: &BoolExpr) -> BoolExpr {
    match b {
        BoolExpr::True => BoolExpr::False,
        BoolExpr::False => BoolExpr::True,
        BoolExpr::Lt(a, c) => BoolExpr::Le(c.clone(), a.clone()),
        BoolExpr::Le(a, c) => BoolExpr::Lt(c.clone(), a.clone()),
        BoolExpr::Not(inner) => (**inner).clone(),
        other => BoolExpr::not(other.clone()),
    }
}

/// Canonicalizes comparisons, folds constants and detects simple contradictions.
/// The result is equivalent to the input on every state.
pub fn simplify_bool(b: &BoolExpr) -> BoolExpr {
    match b {
        BoolExpr::True | BoolExpr::False => b.clone(),
        BoolExpr::Lt(x, y) => compare(Rel::Lt, x, y),
        BoolExpr::Le(x, y) => compare(Rel::Le, x, y),
        BoolExpr::Eq(x, y) => compare(Rel::Eq, x, y),
        BoolExpr::Not(inner) => negate(&simplify_bool(inner)),
        BoolExpr::Implies(x, y) => simplify_bool(&BoolExpr::Or(vec![BoolExpr::not((**x).clone()), (**y).clone()])),
        BoolExpr::And(bs) => {
            let mut out: Vec<BoolExpr> = Vec::new();
            for b in bs {
                match simplify_bool(b) {
                    BoolExpr::True => {}
                    BoolExpr::False => return BoolExpr::False,
                    BoolExpr::And(inner) => out.extend(inner),
                    other => out.push(other),
                }
            }
            let out = dedup(out);
            if out.iter().any(|l| out.contains(&negate(l))) || !bounds_feasible(&out) {
                return BoolExpr::False;
            }
            match out.len() {
                0 => BoolExpr::True,
                1 => out.into_iter().next().unwrap(),
                _ => BoolExpr::And(out),
            }
        }
        BoolExpr::Or(bs) => {
            let mut out: Vec<BoolExpr> = Vec::new();
            for b in bs {
                match simplify_bool(b) {
                    BoolExpr::False => {}
                    BoolExpr::True => return BoolExpr::True,
                    BoolExpr::Or(inner) => out.extend(inner),
                    other => out.push(other),
                }
            }
            let out = dedup(out);
            if out.iter().any(|l| out.contains(&negate(l))) {
                return BoolExpr::True;
            }
            match out.len() {
                0 => BoolExpr::False,
                1 => out.into_iter().next().unwrap(),
                _ => BoolExpr::Or(out),
            }
        }
    }
}

fn dedup(items: Vec<BoolExpr>) -> Vec<BoolExpr> {
    let mut out: Vec<BoolExpr> = Vec::with_capacity(items.len());
    for b in items {
        if !out.contains(&b) {
            out.push(b);
        }
    }
    out
}

/// Interval reasoning over literals that constrain a single natural variable.
fn bounds_feasible(lits: &[BoolExpr]) -> bool {
    let mut lo: HashMap<Var, Rational> = HashMap::new();
    let mut hi: HashMap<Var, Rational> = HashMap::new();
    let mut exclude: Vec<(Var, Rational)> = Vec::new();
    for l in lits {
        let (rel, a, b, negated) = match l {
            BoolExpr::Lt(a, b) => (Rel::Lt, a, b, false),
            BoolExpr::Le(a, b) => (Rel::Le, a, b, false),
            BoolExpr::Eq(a, b) => (Rel::Eq, a, b, false),
            BoolExpr::Not(inner) => match &**inner {
                BoolExpr::Eq(a, b) => (Rel::Eq, a, b, true),
                _ => continue,
            },
            _ => continue,
        };
        // canonical comparisons keep the variable and the constant on opposite sides
        let (var_side, const_side, var_on_left) = match (single_var(a), single_var(b)) {
            (Some(v), None) => (v, b, true),
            (None, Some(v)) => (v, a, false),
            _ => continue,
        };
        let Some(c) = const_side.as_const() else { continue };
        let (v, k) = var_side;
        let bound = c / &k;
        if negated {
            exclude.push((v, bound));
            continue;
        }
        let up = |m: &mut HashMap<Var, Rational>, v: &Var, x: Rational| {
            let e = m.entry(v.clone()).or_insert_with(|| x.clone());
            if x < *e {
                *e = x;
            }
        };
        let down = |m: &mut HashMap<Var, Rational>, v: &Var, x: Rational| {
            let e = m.entry(v.clone()).or_insert_with(|| x.clone());
            if x > *e {
                *e = x;
            }
        };
        match (rel, var_on_left) {
            (Rel::Eq, _) => {
                if !bound.is_integer() {
                    return false;
                }
                up(&mut hi, &v, bound.clone());
                down(&mut lo, &v, bound);
            }
            (Rel::Lt, true) => up(&mut hi, &v, bound.ceil() - Rational::one()),
            (Rel::Le, true) => up(&mut hi, &v, bound.floor()),
            (Rel::Lt, false) => down(&mut lo, &v, bound.floor() + Rational::one()),
            (Rel::Le, false) => down(&mut lo, &v, bound.ceil()),
        }
    }
    for (v, h) in &hi {
        let l = lo.get(v).cloned().unwrap_or_else(Rational::zero);
        if *h < l || h.is_negative() {
            return false;
        }
        if *h == l && exclude.iter().any(|(w, x)| w == v && *x == l) {
            return false;
        }
    }
    true
}

fn single_var(e: &Expr) -> Option<(Var, Rational)> {
    match e {
        Expr::Var(v) => Some((v.clone(), Rational::one())),
        Expr::Scale(c, inner) => match &**inner {
            Expr::Var(v) => Some((v.clone(), c.clone())),
            _ => None,
        },
        _ => None,
    }
}
