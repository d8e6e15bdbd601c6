use num_traits::One;

use crate::error::Result;
use crate::expectations::gnf::{min_expectation, GuardOracle};
use crate::expectations::linexp::LinExp;
use crate::pgcl::ast::{BoolExpr, Expr, Program, Stmt};
use crate::value::Rational;

/// Which transformer `tick` feeds: plain weakest preexpectations ignore it,
/// expected runtimes add it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    #[default]
    Wp,
    Ert,
}

pub fn wp_loopfree(c: &Stmt, h: &LinExp, mode: Mode) -> LinExp {
    wp(c, h, mode).simplify()
}

fn wp(c: &Stmt, h: &LinExp, mode: Mode) -> LinExp {
    match c {
        Stmt::Skip => h.clone(),
        Stmt::Assign(x, e) => h.substitute(x, e),
        Stmt::Seq(ss) => ss.iter().rev().fold(h.clone(), |acc, s| wp(s, &acc, mode).simplify()),
        Stmt::Choice(l, p, r) => LinExp::Sum(vec![
            wp(l, h, mode).rescale(p),
            wp(r, h, mode).rescale(&(Rational::one() - p)),
        ]),
        Stmt::Ite(b, t, e) => LinExp::Sum(vec![
            LinExp::guard(b.clone(), wp(t, h, mode)),
            LinExp::guard(BoolExpr::not(b.clone()), wp(e, h, mode)),
        ]),
        Stmt::Tick(n) => match mode {
            Mode::Wp => h.clone(),
            Mode::Ert => LinExp::Sum(vec![h.clone(), LinExp::expr(Expr::nat(*n))]),
        },
        Stmt::CatAssign(x, branches) => {
            LinExp::Sum(branches.iter().map(|(e, w)| h.substitute(x, e).rescale(w)).collect())
        }
    }
}

/// The characteristic functional `h -> [!guard]*g + [guard]*wp(body)(h)` of a loop.
#[derive(Clone, Debug)]
pub struct Phi {
    pub program: Program,
    pub post: LinExp,
    pub mode: Mode,
}

impl Phi {
    pub fn apply(&self, h: &LinExp) -> LinExp {
        let g = &self.program.guard;
        LinExp::Sum(vec![
            LinExp::guard(BoolExpr::not(g.clone()), self.post.clone()),
            LinExp::guard(g.clone(), wp(&self.program.body, h, self.mode)),
        ])
        .simplify()
    }

    /// `Phi^n(0)`.
    pub fn iterate_from_zero(&self, n: usize) -> LinExp {
        (0..n).fold(LinExp::zero(), |acc, _| self.apply(&acc))
    }
}

pub fn characteristic_functional(program: &Program, post: &LinExp, mode: Mode) -> Phi {
    let post = if mode == Mode::Ert { LinExp::zero() } else { post.clone() };
    Phi { program: program.clone(), post, mode }
}

/// `Psi_f(h) = min(Phi(h), f)`.
pub fn kind_step(f: &LinExp, phi: &Phi, h: &LinExp, oracle: &mut dyn GuardOracle) -> Result<LinExp> {
    min_expectation(&phi.apply(h), f, oracle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectations::parse::parse_expectation;
    use crate::pgcl::{parse_program, State};
    use crate::value::{int, rat, ExtValue};

    const GEO: &str = "nat c; nat f; while(f=1){ {f := 0}[0.5]{c := c+1} }";

    #[test]
    fn wp_of_assignment_and_tick() {
        let p = parse_program("nat x; nat c; while (x < 1) { x := 0; tick(3) }").unwrap();
        let c = parse_expectation("c", None).unwrap();
        let Stmt::Seq(ss) = &p.body else { panic!() };
        assert_eq!(wp_loopfree(&ss[0], &c, Mode::Wp), c);
        let r = wp_loopfree(&ss[1], &LinExp::zero(), Mode::Ert);
        assert_eq!(r.evaluate(&State::new()), ExtValue::Finite(int(3)));
    }

    #[test]
    fn geo_functional_on_zero() {
        let p = parse_program(GEO).unwrap();
        let phi = characteristic_functional(&p, &parse_expectation("c", None).unwrap(), Mode::Wp);
        let h = phi.apply(&LinExp::zero());
        for (c, f) in [(0, 0), (3, 0), (3, 1), (0, 2)] {
            let s = State::from_pairs([("c", c), ("f", f)]);
            let expected = if f == 1 { 0 } else { c };
            assert_eq!(h.evaluate(&s), ExtValue::Finite(int(expected as i64)));
        }
    }

    #[test]
    fn geo_c_plus_one_is_not_park_inductive() {
        let p = parse_program(GEO).unwrap();
        let phi = characteristic_functional(&p, &parse_expectation("c", None).unwrap(), Mode::Wp);
        let f = parse_expectation("c+1", None).unwrap();
        let s = State::from_pairs([("c", 4), ("f", 1)]);
        assert_eq!(phi.apply(&f).evaluate(&s), ExtValue::Finite(rat(11, 2)));
    }
}
