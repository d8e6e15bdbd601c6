//! Linear expectations and their transformers.

pub mod gnf;
pub mod linexp;
pub mod parse;
pub mod transform;

pub use gnf::{gnf, min_expectation, Gnf, GuardOracle, Syntactic};
pub use linexp::{ExtExpr, ExtLin, LinExp};
pub use parse::parse_expectation;
pub use transform::{characteristic_functional, kind_step, wp_loopfree, Mode, Phi};

pub fn evaluate(h: &LinExp, state: &crate::pgcl::State) -> crate::value::ExtValue {
    h.evaluate(state)
}

pub fn substitute(h: &LinExp, x: &crate::pgcl::Var, e: &crate::pgcl::Expr) -> LinExp {
    h.substitute(x, e)
}

pub fn rescale(c: &crate::value::Rational, h: &LinExp) -> LinExp {
    h.rescale(c)
}
