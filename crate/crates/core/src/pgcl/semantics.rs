//! Concrete distribution semantics of loop-free statements.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::pgcl::ast::{Expr, Stmt};
use crate::pgcl::state::State;
use crate::value::Rational;

/// One branch of a finite output distribution together with its accumulated ticks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub state: State,
    pub prob: Rational,
    pub cost: Rational,
}

fn to_nat(e: &Expr, state: &State) -> BigUint {
    let v = e.eval(state);
    debug_assert!(v.is_integer(), "non-integral program value {v}");
    v.to_integer().to_biguint().unwrap_or_default()
}

/// Enumerates the output distribution of `stmt` from `state`. Zero-probability
/// branches are dropped.
pub fn execute(stmt: &Stmt, state: &State) -> Vec<Branch> {
    let start = Branch { state: state.clone(), prob: Rational::one(), cost: Rational::zero() };
    let mut out = Vec::new();
    run(stmt, start, &mut |b| out.push(b));
    out
}

fn run(stmt: &Stmt, b: Branch, k: &mut dyn FnMut(Branch)) {
    match stmt {
        Stmt::Skip => k(b),
        Stmt::Assign(x, e) => {
            let v = to_nat(e, &b.state);
            k(Branch { state: b.state.with(x, v), ..b })
        }
        Stmt::Tick(n) => k(Branch { cost: b.cost + Rational::from_integer((*n).into()), ..b }),
        Stmt::Seq(ss) => run_seq(ss, b, k),
        Stmt::Choice(l, p, r) => {
            let q = Rational::one() - p;
            if !p.is_zero() {
                run(l, Branch { prob: &b.prob * p, ..b.clone() }, k);
            }
            if !q.is_zero() {
                run(r, Branch { prob: &b.prob * q, ..b }, k);
            }
        }
        Stmt::Ite(g, t, e) => {
            if g.eval(&b.state) {
                run(t, b, k)
            } else {
                run(e, b, k)
            }
        }
        Stmt::CatAssign(x, branches) => {
            for (e, w) in branches {
                let v = to_nat(e, &b.state);
                k(Branch { state: b.state.with(x, v), prob: &b.prob * w, cost: b.cost.clone() });
            }
        }
    }
}

fn run_seq(ss: &[Stmt], b: Branch, k: &mut dyn FnMut(Branch)) {
    match ss.split_first() {
        None => k(b),
        Some((first, rest)) => run(first, b, &mut |b2| run_seq(rest, b2, k)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pgcl::parse_program;
    use crate::value::rat;

    #[test]
    fn chain_body_distribution() {
        let p = parse_program(
            "nat count; nat f; while (count < 5 & f = 0) { {count := count + 1}[0.8]{f := 1} }",
        )
        .unwrap();
        let out = execute(&p.body, &State::new());
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].prob, rat(4, 5));
        assert_eq!(out[0].state, State::from_pairs([("count", 1)]));
        assert_eq!(out[1].state, State::from_pairs([("f", 1)]));
    }

    #[test]
    fn ticks_accumulate() {
        let p = parse_program("nat x; while (x < 1) { tick(2); x := 1 : 1/2 + 2 : 1/2; tick(1) }").unwrap();
        let out = execute(&p.body, &State::new());
        assert!(out.iter().all(|b| b.cost == rat(3, 1)));
        assert_eq!(out.iter().map(|b| b.prob.clone()).sum::<Rational>(), rat(1, 1));
    }
}
