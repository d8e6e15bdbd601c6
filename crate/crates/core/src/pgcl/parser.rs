use std::collections::HashSet;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::pgcl::ast::{BoolExpr, Expr, Program, Stmt, Var};
use crate::value::{parse_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Number(String),
    Assign,
    Colon,
    Semi,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    Bang,
    And,
    Or,
    Implies,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) | Tok::Number(s) => return write!(f, "`{s}`"),
            Tok::Assign => ":=",
            Tok::Colon => ":",
            Tok::Semi => ";",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Bang => "!",
            Tok::And => "&",
            Tok::Or => "||",
            Tok::Implies => "==>",
            Tok::Eof => return f.write_str("end of input"),
        };
        write!(f, "`{s}`")
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub(crate) fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut advance = |n: usize, i: &mut usize| {
            *i += n;
            col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let next = chars.get(i + 1).copied();
        let next2 = chars.get(i + 2).copied();
        let tok = if c.is_ascii_alphabetic() || c == '_' || c == '\\' {
            let start = i;
            advance(1, &mut i);
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(1, &mut i);
            }
            let word: String = chars[start..i].iter().collect();
            match word.as_str() {
                "\\infty" => Tok::Ident("inf".into()),
                w if w.starts_with('\\') => {
                    return Err(ParseError { line: l0, col: c0, message: format!("unknown command `{w}`") })
                }
                _ => Tok::Ident(word),
            }
        } else if c.is_ascii_digit() || (c == '.' && next.is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(1, &mut i);
            }
            if i < chars.len() && chars[i] == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                advance(1, &mut i);
                while i < chars.len() && chars[i].is_ascii_digit() {
                    advance(1, &mut i);
                }
            }
            Tok::Number(chars[start..i].iter().collect())
        } else {
            let (tok, len) = match (c, next, next2) {
                (':', Some('='), _) => (Tok::Assign, 2),
                (':', _, _) => (Tok::Colon, 1),
                (';', _, _) => (Tok::Semi, 1),
                ('(', _, _) => (Tok::LParen, 1),
                (')', _, _) => (Tok::RParen, 1),
                ('{', _, _) => (Tok::LBrace, 1),
                ('}', _, _) => (Tok::RBrace, 1),
                ('[', _, _) => (Tok::LBracket, 1),
                (']', _, _) => (Tok::RBracket, 1),
                ('+', _, _) => (Tok::Plus, 1),
                ('-', _, _) => (Tok::Minus, 1),
                ('*', _, _) => (Tok::Star, 1),
                ('/', _, _) => (Tok::Slash, 1),
                ('<', Some('='), _) => (Tok::Le, 2),
                ('<', _, _) => (Tok::Lt, 1),
                ('>', Some('='), _) => (Tok::Ge, 2),
                ('>', _, _) => (Tok::Gt, 1),
                ('=', Some('='), Some('>')) => (Tok::Implies, 3),
                ('=', Some('>'), _) => (Tok::Implies, 2),
                ('=', Some('='), _) => (Tok::Eq, 2),
                ('=', _, _) => (Tok::Eq, 1),
                ('!', Some('='), _) => (Tok::Ne, 2),
                ('!', _, _) => (Tok::Bang, 1),
                ('&', Some('&'), _) => (Tok::And, 2),
                ('&', _, _) => (Tok::And, 1),
                ('|', Some('|'), _) => (Tok::Or, 2),
                _ => {
                    return Err(ParseError { line: l0, col: c0, message: format!("unexpected character `{c}`") })
                }
            };
            advance(len, &mut i);
            tok
        };
        out.push(Spanned { tok, line: l0, col: c0 });
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

pub(crate) struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    /// Declared variables; `None` accepts any identifier.
    scope: Option<HashSet<Var>>,
}

impl Parser {
    pub fn new(src: &str, scope: Option<HashSet<Var>>) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(src)?, pos: 0, scope })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn reset(&mut self, pos: usize) {
        self.pos = pos;
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError { line: s.line, col: s.col, message: message.into() }
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, t: &Tok) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.error(format!("expected {t}, found {}", self.peek())))
        }
    }

    pub fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn expect_eof(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(format!("unexpected {} after end", self.peek())))
        }
    }

    /// A nonnegative rational literal: `3`, `0.25` or `1/3`.
    pub fn number(&mut self) -> Result<Rational, ParseError> {
        let Tok::Number(n) = self.peek().clone() else {
            return Err(self.error(format!("expected a number, found {}", self.peek())));
        };
        self.bump();
        let mut value = parse_rational(&n).ok_or_else(|| self.error("malformed number"))?;
        if *self.peek() == Tok::Slash {
            if let Tok::Number(d) = self.peek_at(1).clone() {
                self.bump();
                self.bump();
                let d = parse_rational(&d).ok_or_else(|| self.error("malformed number"))?;
                if d.is_zero() {
                    return Err(self.error("division by zero"));
                }
                value /= d;
            }
        }
        Ok(value)
    }

    pub(crate) fn variable(&mut self, name: &str) -> Result<Var, ParseError> {
        let v = Var::new(name);
        if let Some(scope) = &self.scope {
            if !scope.contains(&v) {
                return Err(self.error(format!("undeclared variable `{name}`")));
            }
        }
        Ok(v)
    }

    pub fn is_reserved(word: &str) -> bool {
        matches!(
            word,
            "nat" | "while" | "if" | "else" | "skip" | "tick" | "true" | "false" | "not" | "inf"
        )
    }

    pub fn arith(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.arith_term()?;
        loop {
            if self.eat(&Tok::Plus) {
                lhs = Expr::add(lhs, self.arith_term()?);
            } else if self.eat(&Tok::Minus) {
                lhs = Expr::monus(lhs, self.arith_term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn arith_term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.arith_factor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.arith_factor()?;
            lhs = match (lhs, rhs) {
                (Expr::Const(c), e) => Expr::scale(c, e),
                (e, Expr::Const(c)) => Expr::scale(c, e),
                _ => return Err(self.error("product of two non-constant terms is not linear")),
            };
        }
        Ok(lhs)
    }

    fn arith_factor(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Number(_) => Ok(Expr::Const(self.number()?)),
            Tok::Ident(name) if !Parser::is_reserved(&name) => {
                let v = self.variable(&name)?;
                self.bump();
                Ok(Expr::Var(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.arith()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            t => Err(self.error(format!("expected an arithmetic expression, found {t}"))),
        }
    }

    pub fn boolean(&mut self) -> Result<BoolExpr, ParseError> {
        let lhs = self.bool_or()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.boolean()?;
            return Ok(BoolExpr::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn bool_or(&mut self) -> Result<BoolExpr, ParseError> {
        let first = self.bool_and()?;
        if *self.peek() != Tok::Or {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat(&Tok::Or) {
            items.push(self.bool_and()?);
        }
        Ok(BoolExpr::Or(items))
    }

    fn bool_and(&mut self) -> Result<BoolExpr, ParseError> {
        let first = self.bool_unary()?;
        if *self.peek() != Tok::And {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat(&Tok::And) {
            items.push(self.bool_unary()?);
        }
        Ok(BoolExpr::And(items))
    }

    fn bool_unary(&mut self) -> Result<BoolExpr, ParseError> {
        if self.eat(&Tok::Bang) || (self.at_keyword("not") && {
            self.bump();
            true
        }) {
            return Ok(BoolExpr::not(self.bool_unary()?));
        }
        if self.at_keyword("true") {
            self.bump();
            return Ok(BoolExpr::True);
        }
        if self.at_keyword("false") {
            self.bump();
            return Ok(BoolExpr::False);
        }
        if *self.peek() == Tok::LParen {
            let save = self.pos;
            self.bump();
            if let Ok(b) = self.boolean() {
                if self.eat(&Tok::RParen) && !self.continues_arith() {
                    return Ok(b);
                }
            }
            self.reset(save);
        }
        self.comparison()
    }

    fn continues_arith(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Plus | Tok::Minus | Tok::Star | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge | Tok::Eq | Tok::Ne
        )
    }

    fn comparison(&mut self) -> Result<BoolExpr, ParseError> {
        let lhs = self.arith()?;
        let op = self.peek().clone();
        let rel = match op {
            Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge | Tok::Eq | Tok::Ne => {
                self.bump();
                op
            }
            t => return Err(self.error(format!("expected a comparison operator, found {t}"))),
        };
        let rhs = self.arith()?;
        Ok(match rel {
            Tok::Lt => BoolExpr::Lt(lhs, rhs),
            Tok::Le => BoolExpr::Le(lhs, rhs),
            Tok::Gt => BoolExpr::Lt(rhs, lhs),
            Tok::Ge => BoolExpr::Le(rhs, lhs),
            Tok::Eq => BoolExpr::Eq(lhs, rhs),
            _ => BoolExpr::not(BoolExpr::Eq(lhs, rhs)),
        })
    }

    fn natural_expr(&mut self) -> Result<Expr, ParseError> {
        let at = self.pos;
        let e = self.arith()?;
        if !e.is_integral() {
            let s = &self.toks[at];
            return Err(ParseError {
                line: s.line,
                col: s.col,
                message: "program expressions may only use natural constants".into(),
            });
        }
        Ok(e)
    }

    fn natural_guard(&mut self) -> Result<BoolExpr, ParseError> {
        let at = self.pos;
        let b = self.boolean()?;
        let mut ok = true;
        check_guard_integral(&b, &mut ok);
        if !ok {
            let s = &self.toks[at];
            return Err(ParseError {
                line: s.line,
                col: s.col,
                message: "program guards may only use natural constants".into(),
            });
        }
        Ok(b)
    }

    fn probability(&mut self) -> Result<Rational, ParseError> {
        let p = self.number()?;
        if p > Rational::one() || p.is_negative() {
            return Err(self.error("probability must lie in [0, 1]"));
        }
        Ok(p)
    }

    fn block(&mut self) -> Result<Stmt, ParseError> {
        self.expect(&Tok::LBrace)?;
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return Err(self.error("unterminated block"));
            }
            if self.eat(&Tok::Semi) {
                continue;
            }
            stmts.push(self.statement()?);
        }
        self.bump();
        Ok(Stmt::seq(stmts))
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        match self.peek().clone() {
            Tok::LBrace => {
                let left = self.block()?;
                if self.eat(&Tok::LBracket) {
                    let p = self.probability()?;
                    self.expect(&Tok::RBracket)?;
                    let right = self.block()?;
                    return Ok(Stmt::choice(left, p, right));
                }
                Ok(left)
            }
            Tok::Ident(w) if w == "skip" => {
                self.bump();
                self.eat(&Tok::Semi);
                Ok(Stmt::Skip)
            }
            Tok::Ident(w) if w == "tick" => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let n = self.number()?;
                if !n.is_integer() {
                    return Err(self.error("tick expects a natural number"));
                }
                let n: u64 = n
                    .to_integer()
                    .try_into()
                    .map_err(|_| self.error("tick amount out of range"))?;
                self.expect(&Tok::RParen)?;
                self.eat(&Tok::Semi);
                Ok(Stmt::Tick(n))
            }
            Tok::Ident(w) if w == "if" => {
                self.bump();
                let guard = self.natural_guard()?;
                let then = self.block()?;
                let otherwise = if self.at_keyword("else") {
                    self.bump();
                    if self.at_keyword("if") {
                        self.statement()?
                    } else {
                        self.block()?
                    }
                } else if *self.peek() == Tok::LBrace {
                    self.block()?
                } else {
                    Stmt::Skip
                };
                Ok(Stmt::ite(guard, then, otherwise))
            }
            Tok::Ident(w) if w == "while" => Err(self.error("nested loops are not supported")),
            Tok::Ident(name) if !Parser::is_reserved(&name) => {
                let x = self.variable(&name)?;
                self.bump();
                self.expect(&Tok::Assign)?;
                let e = self.natural_expr()?;
                if *self.peek() != Tok::Colon {
                    self.eat(&Tok::Semi);
                    return Ok(Stmt::Assign(x, e));
                }
                let mut branches = Vec::new();
                let mut e = e;
                loop {
                    self.expect(&Tok::Colon)?;
                    let w = self.number()?;
                    if !w.is_positive() {
                        return Err(self.error("categorical weights must be positive"));
                    }
                    branches.push((e, w));
                    if !self.eat(&Tok::Plus) {
                        break;
                    }
                    e = self.natural_expr()?;
                }
                let total: Rational = branches.iter().map(|(_, w)| w.clone()).sum();
                if !total.is_one() {
                    return Err(self.error(format!(
                        "categorical weights sum to {} instead of 1",
                        crate::value::format_rational(&total)
                    )));
                }
                self.eat(&Tok::Semi);
                Ok(Stmt::CatAssign(x, branches))
            }
            t => Err(self.error(format!("expected a statement, found {t}"))),
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut vars = Vec::new();
        while self.at_keyword("nat") {
            self.bump();
            let Tok::Ident(name) = self.peek().clone() else {
                return Err(self.error("expected a variable name"));
            };
            if Parser::is_reserved(&name) {
                return Err(self.error(format!("`{name}` is a reserved word")));
            }
            let v = Var::new(&name);
            if vars.contains(&v) {
                return Err(self.error(format!("variable `{name}` declared twice")));
            }
            self.bump();
            self.expect(&Tok::Semi)?;
            vars.push(v);
        }
        self.scope = Some(vars.iter().cloned().collect());
        if !self.at_keyword("while") {
            return Err(self.error(format!(
                "expected `while`, found {}; statements before the loop are not supported",
                self.peek()
            )));
        }
        self.bump();
        let guard = self.natural_guard()?;
        let body = self.block()?;
        if self.at_keyword("while") {
            return Err(self.error("only a single loop is supported"));
        }
        self.expect_eof()?;
        Ok(Program { vars, guard, body })
    }
}

fn check_guard_integral(b: &BoolExpr, ok: &mut bool) {
    match b {
        BoolExpr::True | BoolExpr::False => {}
        BoolExpr::Lt(x, y) | BoolExpr::Le(x, y) | BoolExpr::Eq(x, y) => {
            *ok &= x.is_integral() && y.is_integral();
        }
        BoolExpr::Not(x) => check_guard_integral(x, ok),
        BoolExpr::And(xs) | BoolExpr::Or(xs) => xs.iter().for_each(|x| check_guard_integral(x, ok)),
        BoolExpr::Implies(x, y) => {
            check_guard_integral(x, ok);
            check_guard_integral(y, ok);
        }
    }
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    Parser::new(src, None)?.program()
}

/// Parses a standalone guard. With `vars`, identifiers must be among them.
pub fn parse_bool(src: &str, vars: Option<&[Var]>) -> Result<BoolExpr, ParseError> {
    let mut p = Parser::new(src, vars.map(|vs| vs.iter().cloned().collect()))?;
    let b = p.boolean()?;
    p.expect_eof()?;
    Ok(b)
}

pub fn parse_expr(src: &str, vars: Option<&[Var]>) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src, vars.map(|vs| vs.iter().cloned().collect()))?;
    let e = p.arith()?;
    p.expect_eof()?;
    Ok(e)
}
