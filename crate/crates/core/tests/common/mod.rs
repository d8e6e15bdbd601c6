#![allow(dead_code)]

use proptest::prelude::*;

use pkind::expectations::{ExtExpr, LinExp};
use pkind::pgcl::{BoolExpr, Expr, Program, State, Stmt, Var};
use pkind::value::{int, rat, Rational};

pub const VARS: [&str; 3] = ["x", "y", "z"];

pub fn var() -> impl Strategy<Value = Var> {
    prop::sample::select(VARS.to_vec()).prop_map(Var::new)
}

/// Natural-valued arithmetic.
pub fn nat_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(0i64..4).prop_map(|n| Expr::Const(int(n))), var().prop_map(Expr::Var)];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (1i64..4, inner.clone()).prop_map(|(c, e)| Expr::scale(int(c), e)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::monus(a, b)),
        ]
    })
}

pub fn weight() -> impl Strategy<Value = Rational> {
    prop::sample::select(vec![rat(1, 2), rat(1, 3), rat(4, 5), rat(1, 10), rat(3, 4)])
}

/// Nonnegative rational arithmetic for expectations.
pub fn rat_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0i64..4).prop_map(|n| Expr::Const(int(n))),
        weight().prop_map(Expr::Const),
        var().prop_map(Expr::Var)
    ];
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (weight(), inner.clone()).prop_map(|(c, e)| Expr::scale(c, e)),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::add(a, b)),
        ]
    })
}

pub fn guard() -> impl Strategy<Value = BoolExpr> {
    let atom = prop_oneof![
        Just(BoolExpr::True),
        Just(BoolExpr::False),
        (nat_expr(), nat_expr()).prop_map(|(a, b)| BoolExpr::Lt(a, b)),
        (nat_expr(), nat_expr()).prop_map(|(a, b)| BoolExpr::Le(a, b)),
        (nat_expr(), nat_expr()).prop_map(|(a, b)| BoolExpr::Eq(a, b)),
    ];
    atom.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(BoolExpr::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| BoolExpr::And(vec![a, b])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| BoolExpr::Or(vec![a, b])),
            (inner.clone(), inner).prop_map(|(a, b)| BoolExpr::Implies(Box::new(a), Box::new(b))),
        ]
    })
}

pub fn stmt() -> impl Strategy<Value = Stmt> {
    let leaf = prop_oneof![
        Just(Stmt::Skip),
        (var(), nat_expr()).prop_map(|(x, e)| Stmt::Assign(x, e)),
        (1u64..3).prop_map(Stmt::Tick),
        (var(), nat_expr(), nat_expr(), nat_expr())
            .prop_map(|(x, a, b, c)| Stmt::CatAssign(x, vec![(a, rat(1, 2)), (b, rat(1, 3)), (c, rat(1, 6))])),
    ];
    leaf.prop_recursive(3, 10, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Stmt::seq(vec![a, b])),
            (inner.clone(), weight(), inner.clone()).prop_map(|(a, p, b)| Stmt::choice(a, p, b)),
            (guard(), inner.clone(), inner).prop_map(|(g, a, b)| Stmt::ite(g, a, b)),
        ]
    })
}

pub fn program() -> impl Strategy<Value = Program> {
    (guard(), stmt()).prop_map(|(guard, body)| Program { vars: VARS.iter().map(|v| Var::new(v)).collect(), guard, body })
}

pub fn linexp() -> impl Strategy<Value = LinExp> {
    let leaf = prop_oneof![
        4 => rat_expr().prop_map(LinExp::expr),
        1 => Just(LinExp::Term(ExtExpr::Infinity)),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            (guard(), inner.clone()).prop_map(|(b, h)| LinExp::guard(b, h)),
            prop::collection::vec(inner, 2..4).prop_map(LinExp::sum),
        ]
    })
}

pub fn state() -> impl Strategy<Value = State> {
    (0u64..6, 0u64..6, 0u64..6).prop_map(|(x, y, z)| State::from_pairs([("x", x), ("y", y), ("z", z)]))
}

pub fn states(n: usize) -> impl Strategy<Value = Vec<State>> {
    prop::collection::vec(state(), n)
}
