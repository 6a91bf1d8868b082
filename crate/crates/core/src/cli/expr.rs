//! A small arithmetic language for the functions in problem files.
//!
//! Precedence from tightest: unary minus, `^` (right-associative), `* /`,
//! `+ -`. Displaying an expression parenthesizes every operation, so the
//! printed form parses back to the same tree.

use std::fmt;

use crate::error::Error;

/// Tolerance for the integer exponent accepted by `intpow`.
pub const INTPOW_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    T,
    /// `x1..xn`, stored zero-based.
    X(usize),
    /// `u1..un`, stored zero-based.
    U(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sign,
    Pow,
    IntPow,
}

impl Func {
    const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Abs,
        Func::Sign,
        Func::Pow,
        Func::IntPow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Pow => "pow",
            Func::IntPow => "intpow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow | Func::IntPow => 2,
            _ => 1,
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Const(Constant),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExprErrorKind {
    Syntax,
    UnknownIdentifier,
    Arity,
    Domain,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExprError {
    pub kind: ExprErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ExprErrorKind::Syntax => "syntax error",
            ExprErrorKind::UnknownIdentifier => "unknown identifier",
            ExprErrorKind::Arity => "arity error",
            ExprErrorKind::Domain => "domain error",
        };
        write!(f, "{}:{}: {kind}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ExprError {}

impl From<ExprError> for Error {
    fn from(e: ExprError) -> Self {
        match e.kind {
            ExprErrorKind::Domain => Error::Evaluation(e.message),
            _ => Error::Parse(e.to_string()),
        }
    }
}

fn domain(message: String) -> ExprError {
    ExprError {
        kind: ExprErrorKind::Domain,
        line: 0,
        column: 0,
        message,
        expected: Vec::new(),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Sym(c) => format!("'{c}'"),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let (start_line, start_col) = (line, col);
        let start = i;
        let tok = if c.is_ascii_digit() || c == '.' {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => Tok::Num(v),
                _ => {
                    return Err(ExprError {
                        kind: ExprErrorKind::Syntax,
                        line: start_line,
                        column: start_col,
                        message: format!("malformed number '{text}'"),
                        expected: vec!["number".into()],
                    })
                }
            }
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if "+-*/^(),".contains(c) {
            i += 1;
            Tok::Sym(c)
        } else {
            return Err(ExprError {
                kind: ExprErrorKind::Syntax,
                line,
                column: col,
                message: format!("unexpected character '{c}'"),
                expected: Vec::new(),
            });
        };
        col += i - start;
        out.push(Spanned {
            tok,
            line: start_line,
            column: start_col,
        });
    }
    out.push(Spanned { tok: Tok::End, line, column: col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

const OPERAND: [&str; 4] = ["number", "identifier", "'('", "'-'"];

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, kind: ExprErrorKind, message: String, expected: &[&str]) -> ExprError {
        let t = self.peek();
        ExprError {
            kind,
            line: t.line,
            column: t.column,
            message,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ExprError {
        let found = self.peek().tok.describe();
        self.error_here(ExprErrorKind::Syntax, format!("unexpected {found}"), expected)
    }

    fn expect_sym(&mut self, c: char, expected: &[&str]) -> Result<(), ExprError> {
        if self.peek().tok == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.product()?));
        }
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.power()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.power()?));
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.unary()?;
        if self.peek().tok == Tok::Sym('^') {
            self.bump();
            let exp = self.power()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek().tok == Tok::Sym('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek().tok.clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.sum()?;
                self.expect_sym(')', &["operator", "')'"])?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let here = self.peek().clone();
                self.bump();
                if self.peek().tok == Tok::Sym('(') {
                    let f = Func::from_name(&name).ok_or_else(|| ExprError {
                        kind: ExprErrorKind::UnknownIdentifier,
                        line: here.line,
                        column: here.column,
                        message: format!("unknown function '{name}'"),
                        expected: Func::ALL.iter().map(|f| f.name().to_string()).collect(),
                    })?;
                    self.bump();
                    let mut args = Vec::new();
                    if self.peek().tok != Tok::Sym(')') {
                        loop {
                            args.push(self.sum()?);
                            if self.peek().tok == Tok::Sym(',') {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect_sym(')', &["operator", "','", "')'"])?;
                    if args.len() != f.arity() {
                        return Err(ExprError {
                            kind: ExprErrorKind::Arity,
                            line: here.line,
                            column: here.column,
                            message: format!("{} takes {} argument(s), got {}", f.name(), f.arity(), args.len()),
                            expected: Vec::new(),
                        });
                    }
                    return Ok(Expr::Call(f, args));
                }
                ident_atom(&name).ok_or_else(|| ExprError {
                    kind: ExprErrorKind::UnknownIdentifier,
                    line: here.line,
                    column: here.column,
                    message: format!("unknown identifier '{name}'"),
                    expected: vec!["t".into(), "x<k>".into(), "u<k>".into(), "pi".into(), "e".into()],
                })
            }
            _ => Err(self.unexpected(&OPERAND)),
        }
    }
}

fn ident_atom(name: &str) -> Option<Expr> {
    match name {
        "t" => return Some(Expr::Var(Var::T)),
        "pi" => return Some(Expr::Const(Constant::Pi)),
        "e" => return Some(Expr::Const(Constant::E)),
        _ => {}
    }
    let mut chars = name.chars();
    let head = chars.next()?;
    let digits = chars.as_str();
    if digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let k: usize = digits.parse().ok()?;
    match head {
        'x' => Some(Expr::Var(Var::X(k - 1))),
        'u' => Some(Expr::Var(Var::U(k - 1))),
        _ => None,
    }
}

/// Parses a complete expression.
pub fn parse_expression(src: &str) -> Result<Expr, ExprError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let e = p.sum()?;
    if p.peek().tok != Tok::End {
        return Err(p.unexpected(&["operator", "end of input"]));
    }
    Ok(e)
}

/// Which variables an expression may use.
#[derive(Clone, Copy, Debug)]
pub struct Scope {
    pub t: bool,
    pub x: bool,
    pub u: bool,
    pub dim: usize,
}

impl Scope {
    pub fn constant() -> Self {
        Scope { t: false, x: false, u: false, dim: 0 }
    }
}

/// Values of the variables at one evaluation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Env<'a> {
    pub t: f64,
    pub x: &'a [f64],
    pub u: &'a [f64],
}

impl Expr {
    /// Rejects variables outside `scope`.
    pub fn check_scope(&self, scope: &Scope) -> Result<(), ExprError> {
        let bad = |name: String| ExprError {
            kind: ExprErrorKind::UnknownIdentifier,
            line: 1,
            column: 1,
            message: format!("'{name}' is not available here"),
            expected: Vec::new(),
        };
        match self {
            Expr::Num(_) | Expr::Const(_) => Ok(()),
            Expr::Var(Var::T) if scope.t => Ok(()),
            Expr::Var(Var::X(k)) if scope.x && *k < scope.dim => Ok(()),
            Expr::Var(Var::U(k)) if scope.u && *k < scope.dim => Ok(()),
            Expr::Var(v) => Err(bad(Expr::Var(*v).to_string())),
            Expr::Neg(a) => a.check_scope(scope),
            Expr::Bin(_, a, b) => {
                a.check_scope(scope)?;
                b.check_scope(scope)
            }
            Expr::Call(_, args) => args.iter().try_for_each(|a| a.check_scope(scope)),
        }
    }

    pub fn eval(&self, env: &Env) -> Result<f64, ExprError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Const(Constant::Pi) => std::f64::consts::PI,
            Expr::Const(Constant::E) => std::f64::consts::E,
            Expr::Var(Var::T) => env.t,
            Expr::Var(Var::X(k)) => *env.x.get(*k).ok_or_else(|| domain(format!("x{} is unbound", k + 1)))?,
            Expr::Var(Var::U(k)) => *env.u.get(*k).ok_or_else(|| domain(format!("u{} is unbound", k + 1)))?,
            Expr::Neg(a) => -a.eval(env)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(env)?, b.eval(env)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div if b == 0.0 => return Err(domain(format!("division by zero at t = {}", env.t))),
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval(env)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Ln if a <= 0.0 => return Err(domain(format!("ln({a}) at t = {}", env.t))),
                    Func::Ln => a.ln(),
                    Func::Sqrt if a < 0.0 => return Err(domain(format!("sqrt({a}) at t = {}", env.t))),
                    Func::Sqrt => a.sqrt(),
                    Func::Abs => a.abs(),
                    Func::Sign => {
                        if a == 0.0 {
                            0.0
                        } else {
                            a.signum()
                        }
                    }
                    Func::Pow => a.powf(args[1].eval(env)?),
                    Func::IntPow => {
                        let k = args[1].eval(env)?;
                        let r = k.round();
                        if !((k - r).abs() <= INTPOW_TOL) || r.abs() > i32::MAX as f64 {
                            return Err(domain(format!("intpow exponent {k} is not an integer at t = {}", env.t)));
                        }
                        a.powi(r as i32)
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(domain(format!("{self} is not finite at t = {}", env.t)))
        }
    }

    /// Value of an expression with no variables.
    pub fn eval_constant(&self) -> Result<f64, ExprError> {
        self.check_scope(&Scope::constant())?;
        self.eval(&Env::default())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(Var::T) => write!(f, "t"),
            Expr::Var(Var::X(k)) => write!(f, "x{}", k + 1),
            Expr::Var(Var::U(k)) => write!(f, "u{}", k + 1),
            Expr::Const(Constant::Pi) => write!(f, "pi"),
            Expr::Const(Constant::E) => write!(f, "e"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, t: f64) -> f64 {
        parse_expression(src).unwrap().eval(&Env { t, x: &[], u: &[] }).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("-2^2", 0.0), 4.0);
        assert_eq!(ev("1 - 2 - 3", 0.0), -4.0);
        assert_eq!(ev("8 / 4 / 2", 0.0), 1.0);
        assert_eq!(ev("2 + 3 * 4", 0.0), 14.0);
        assert_eq!(ev("2^-1", 0.0), 0.5);
        assert_eq!(ev("--3", 0.0), 3.0);
    }

    #[test]
    fn example_expressions() {
        let q = parse_expression("(1/8)*( intpow(-1, ln(t)/ln(sqrt(2))) + u1 )").unwrap();
        for k in 0..6 {
            let t = 2f64.powi(k);
            let v = q.eval(&Env { t, x: &[], u: &[0.5] }).unwrap();
            assert_eq!(v, 1.5 / 8.0);
        }
        let q = parse_expression("intpow(-1, ln(t)/ln(2))").unwrap();
        assert_eq!(q.eval(&Env { t: 8.0, ..Env::default() }).unwrap(), -1.0);
        let g = parse_expression("1/(8*t) * sin( (ln(t)/ln(sqrt(2))) * pi ) * x1").unwrap();
        assert_eq!(g.eval(&Env { t: 1.0, x: &[3.0], u: &[] }).unwrap(), 0.0);
        assert!(g.eval(&Env { t: 4.0, x: &[3.0], u: &[] }).unwrap().abs() < 1e-15);
        assert_eq!(parse_expression("t").unwrap(), Expr::Var(Var::T));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_expression("1 +\n  * 2").unwrap_err();
        assert_eq!((e.kind, e.line, e.column), (ExprErrorKind::Syntax, 2, 3));
        assert!(e.expected.contains(&"number".to_string()));
        let e = parse_expression("foo(1)").unwrap_err();
        assert_eq!(e.kind, ExprErrorKind::UnknownIdentifier);
        let e = parse_expression("y + 1").unwrap_err();
        assert_eq!((e.kind, e.column), (ExprErrorKind::UnknownIdentifier, 1));
        let e = parse_expression("pow(1)").unwrap_err();
        assert_eq!(e.kind, ExprErrorKind::Arity);
        let e = parse_expression("(1 + 2").unwrap_err();
        assert_eq!(e.expected, vec!["operator", "')'"]);
        assert!(parse_expression("1 2").is_err());
        assert!(parse_expression("x0").is_err());
    }

    #[test]
    fn domain_errors() {
        let env = Env { t: 0.0, ..Env::default() };
        for src in ["ln(t)", "1/t", "sqrt(t - 1)", "intpow(2, 0.5)", "(-1)^0.5"] {
            let e = parse_expression(src).unwrap().eval(&env).unwrap_err();
            assert_eq!(e.kind, ExprErrorKind::Domain, "{src}");
        }
    }

    #[test]
    fn scope_is_enforced() {
        let e = parse_expression("x3 + u1").unwrap();
        assert!(e.check_scope(&Scope { t: true, x: true, u: true, dim: 3 }).is_ok());
        assert!(e.check_scope(&Scope { t: true, x: true, u: true, dim: 2 }).is_err());
        assert!(e.check_scope(&Scope { t: true, x: true, u: false, dim: 3 }).is_err());
        assert_eq!(parse_expression("1/8").unwrap().eval_constant().unwrap(), 0.125);
        assert!(parse_expression("t").unwrap().eval_constant().is_err());
    }

    #[test]
    fn display_is_fully_parenthesized() {
        let e = parse_expression("-2^x1*3 + sin(t)").unwrap();
        assert_eq!(e.to_string(), "((((-2.0) ^ x1) * 3.0) + sin(t))");
        assert_eq!(parse_expression(&e.to_string()).unwrap(), e);
    }
}
