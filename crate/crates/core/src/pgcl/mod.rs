//! Single-loop probabilistic guarded command language.

pub mod ast;
pub mod linear;
pub mod parser;
pub mod semantics;
pub mod state;

pub use ast::{BoolExpr, Expr, Program, Stmt, Var};
pub use parser::{parse_bool, parse_expr, parse_program, ParseError};
pub use state::State;

pub fn eval_arith(e: &Expr, state: &State) -> crate::value::Rational {
    e.eval(state)
}

pub fn eval_bool(b: &BoolExpr, state: &State) -> bool {
    b.eval(state)
}

pub fn desugar(s: &Stmt) -> Stmt {
    s.desugar()
}
