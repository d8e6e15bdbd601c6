use crate::expectations::linexp::LinExp;
use crate::pgcl::ast::{BoolExpr, Expr, Var};
use crate::pgcl::parser::{ParseError, Parser, Tok};
use crate::value::Rational;

enum Node {
    Arith(Expr),
    Inf,
    Iverson(BoolExpr),
    Guard(BoolExpr, Box<Node>),
    Scale(Rational, Box<Node>),
    Sum(Vec<Node>),
}

impl Node {
    fn into_linexp(self) -> LinExp {
        match self {
            Node::Arith(e) => LinExp::expr(e),
            Node::Inf => LinExp::infinity(),
            Node::Iverson(b) => LinExp::iverson(b),
            Node::Guard(b, n) => LinExp::guard(b, n.into_linexp()),
            Node::Scale(c, n) => n.into_linexp().rescale(&c),
            Node::Sum(ns) => LinExp::Sum(ns.into_iter().map(Node::into_linexp).collect()),
        }
    }
}

/// Parses expectations such as `[toSend<=4]*(totalFail+1) + [toSend>4]*inf`.
/// `-` is truncated subtraction and is only allowed between arithmetic terms.
pub fn parse_expectation(src: &str, vars: Option<&[Var]>) -> Result<LinExp, ParseError> {
    let mut p = Parser::new(src, vars.map(|vs| vs.iter().cloned().collect()))?;
    let n = sum(&mut p)?;
    p.expect_eof()?;
    Ok(n.into_linexp())
}

fn sum(p: &mut Parser) -> Result<Node, ParseError> {
    let mut lhs = product(p)?;
    loop {
        if p.eat(&Tok::Plus) {
            let rhs = product(p)?;
            lhs = match (lhs, rhs) {
                (Node::Arith(a), Node::Arith(b)) => Node::Arith(Expr::add(a, b)),
                (Node::Sum(mut items), r) => {
                    items.push(r);
                    Node::Sum(items)
                }
                (l, r) => Node::Sum(vec![l, r]),
            };
        } else if *p.peek() == Tok::Minus {
            let err = p.error("`-` is only allowed between arithmetic terms");
            p.bump();
            let rhs = product(p)?;
            lhs = match (lhs, rhs) {
                (Node::Arith(a), Node::Arith(b)) => Node::Arith(Expr::monus(a, b)),
                _ => return Err(err),
            };
        } else {
            return Ok(lhs);
        }
    }
}

fn product(p: &mut Parser) -> Result<Node, ParseError> {
    let mut lhs = atom(p)?;
    while *p.peek() == Tok::Star {
        let err = p.error("product of two non-constant terms is not linear");
        p.bump();
        let rhs = atom(p)?;
        lhs = multiply(lhs, rhs).ok_or(err)?;
    }
    Ok(lhs)
}

fn multiply(a: Node, b: Node) -> Option<Node> {
    Some(match (a, b) {
        (Node::Arith(Expr::Const(c)), Node::Arith(e)) | (Node::Arith(e), Node::Arith(Expr::Const(c))) => {
            Node::Arith(Expr::scale(c, e))
        }
        (Node::Arith(Expr::Const(c)), n) | (n, Node::Arith(Expr::Const(c))) => Node::Scale(c, Box::new(n)),
        (Node::Iverson(b), n) | (n, Node::Iverson(b)) => Node::Guard(b, Box::new(n)),
        (Node::Guard(b, inner), n) | (n, Node::Guard(b, inner)) => Node::Guard(b, Box::new(multiply(*inner, n)?)),
        (Node::Scale(c, inner), n) | (n, Node::Scale(c, inner)) => Node::Scale(c, Box::new(multiply(*inner, n)?)),
        _ => return None,
    })
}

fn atom(p: &mut Parser) -> Result<Node, ParseError> {
    match p.peek().clone() {
        Tok::Number(_) => Ok(Node::Arith(Expr::Const(p.number()?))),
        Tok::Ident(w) if w == "inf" => {
            p.bump();
            Ok(Node::Inf)
        }
        Tok::Ident(name) if !Parser::is_reserved(&name) => {
            let v = p.variable(&name)?;
            p.bump();
            Ok(Node::Arith(Expr::Var(v)))
        }
        Tok::LBracket => {
            p.bump();
            let b = p.boolean()?;
            p.expect(&Tok::RBracket)?;
            Ok(Node::Iverson(b))
        }
        Tok::LParen => {
            p.bump();
            let n = sum(p)?;
            p.expect(&Tok::RParen)?;
            Ok(n)
        }
        t => Err(p.error(format!("expected an expectation, found {t}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pgcl::state::State;
    use crate::value::{int, ExtValue};

    #[test]
    fn parses_brp_bound() {
        let h = parse_expectation("[toSend<=4]*(totalFail+1) + [toSend>4]*inf", None).unwrap();
        let s = State::from_pairs([("toSend", 9)]);
        assert_eq!(h.evaluate(&s), ExtValue::Infinity);
        let s = State::from_pairs([("toSend", 3), ("totalFail", 2)]);
        assert_eq!(h.evaluate(&s), ExtValue::Finite(int(3)));
    }

    #[test]
    fn parses_scaled_monus_and_latex_infinity() {
        let h = parse_expectation("1.14286*(n+4-x)", None).unwrap();
        let s = State::from_pairs([("n", 1), ("x", 9)]);
        assert_eq!(h.evaluate(&s), ExtValue::zero());
        let h = parse_expectation("[a = 1]*\\infty + 2*[a=0]", None).unwrap();
        assert_eq!(h.evaluate(&State::new()), ExtValue::Finite(int(2)));
    }

    #[test]
    fn rejects_nonlinear_and_monus_of_guards() {
        assert!(parse_expectation("x*y", None).is_err());
        assert!(parse_expectation("[x=1]*2 - x", None).is_err());
        assert!(parse_expectation("x + z", Some(&[Var::new("x")])).is_err());
    }
}
