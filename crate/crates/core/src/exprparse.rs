//! Arithmetic expression language for boundary data, inhomogeneities, and
//! defining functions. Variables are the real coordinates x1..xn, y1..yn
//! (interleaved as x1, y1, x2, y2, ... when evaluated).
//!
//! Grammar:
//!   expr   := term (("+" | "-") term)*
//!   term   := factor (("*" | "/") factor)*
//!   factor := unary ("^" factor)?          -- power is right-associative
//!   unary  := "-" unary | atom
//!   atom   := number | ident | ident "(" expr ("," expr)* ")" | "(" expr ")"
//! Precedence: ^ above unary minus above * / above + -.

use crate::error::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    /// index into the interleaved point: x_k at 2(k-1), y_k at 2(k-1)+1.
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::SyntaxError {
            offset: self.pos,
            msg: msg.to_string(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn accept(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.accept(c) {
            Ok(())
        } else {
            self.err(&format!("expected '{}'", c as char))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.accept(b'+') {
                lhs = Expr::Bin(BinOp::Add, Box::new(lhs), Box::new(self.term()?));
            } else if self.accept(b'-') {
                lhs = Expr::Bin(BinOp::Sub, Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.accept(b'*') {
                lhs = Expr::Bin(BinOp::Mul, Box::new(lhs), Box::new(self.factor()?));
            } else if self.accept(b'/') {
                lhs = Expr::Bin(BinOp::Div, Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    // power binds above unary minus: -2^2 parses as -(2^2)
    fn factor(&mut self) -> Result<Expr> {
        if self.accept(b'-') {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if self.accept(b'^') {
            // right-associative; the exponent may itself carry a unary minus
            let exp = self.factor()?;
            Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) => self.err(&format!("unexpected character '{}'", c as char)),
            None => self.err("unexpected end of input"),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
        {
            self.pos += 1;
        }
        // exponent suffix like 1e-3
        if self.pos < self.src.len() && (self.src[self.pos] | 0x20) == b'e' {
            let mut p = self.pos + 1;
            if p < self.src.len() && (self.src[p] == b'+' || self.src[p] == b'-') {
                p += 1;
            }
            if p < self.src.len() && self.src[p].is_ascii_digit() {
                self.pos = p;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) => Ok(Expr::Number(v)),
            Err(_) => {
                self.pos = start;
                self.err(&format!("bad number literal '{text}'"))
            }
        }
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if self.peek() == Some(b'(') {
            let func = match Func::lookup(name) {
                Some(f) => f,
                None => {
                    return Err(Error::UnknownIdentifier {
                        name: name.to_string(),
                        offset: start,
                    })
                }
            };
            self.pos += 1;
            let mut args = vec![self.expr()?];
            while self.accept(b',') {
                args.push(self.expr()?);
            }
            self.expect(b')')?;
            if args.len() != func.arity() {
                return Err(Error::ArityError {
                    name: func.name().to_string(),
                    expected: func.arity(),
                    got: args.len(),
                });
            }
            return Ok(Expr::Call(func, args));
        }
        // coordinate variable x<k> or y<k>, 1-based, k <= n
        let var = name.strip_prefix('x').map(|k| (k, 0)).or_else(|| name.strip_prefix('y').map(|k| (k, 1)));
        if let Some((k_text, parity)) = var {
            if let Ok(k) = k_text.parse::<usize>() {
                if k >= 1 && k <= self.n {
                    return Ok(Expr::Var(2 * (k - 1) + parity));
                }
            }
        }
        Err(Error::UnknownIdentifier {
            name: name.to_string(),
            offset: start,
        })
    }
}

/// Parse `src` over n complex coordinates (2n real variables).
pub fn parse(src: &str, n: usize) -> Result<Expr> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        n,
    };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(e)
}

/// Evaluate at an interleaved point (x1, y1, ..., xn, yn). Domain errors
/// (log/sqrt of a negative number, division by zero) are reported, never
/// silently propagated as NaN.
pub fn eval(e: &Expr, point: &[f64]) -> Result<f64> {
    let fail = |node: &Expr, msg: String| -> Result<f64> {
        Err(Error::EvaluationError {
            node: format!("{node}"),
            msg,
        })
    };
    match e {
        Expr::Number(v) => Ok(*v),
        Expr::Var(i) => {
            if *i < point.len() {
                Ok(point[*i])
            } else {
                fail(e, format!("point has only {} coordinates", point.len()))
            }
        }
        Expr::Neg(inner) => Ok(-eval(inner, point)?),
        Expr::Bin(op, a, b) => {
            let x = eval(a, point)?;
            let y = eval(b, point)?;
            match op {
                BinOp::Add => Ok(x + y),
                BinOp::Sub => Ok(x - y),
                BinOp::Mul => Ok(x * y),
                BinOp::Div => {
                    if y == 0.0 {
                        fail(e, "division by zero".to_string())
                    } else {
                        Ok(x / y)
                    }
                }
                BinOp::Pow => {
                    let v = x.powf(y);
                    if v.is_nan() {
                        fail(e, format!("{x}^{y} is not real"))
                    } else {
                        Ok(v)
                    }
                }
            }
        }
        Expr::Call(f, args) => {
            let a = eval(&args[0], point)?;
            match f {
                Func::Sin => Ok(a.sin()),
                Func::Cos => Ok(a.cos()),
                Func::Exp => Ok(a.exp()),
                Func::Abs => Ok(a.abs()),
                Func::Log => {
                    if a <= 0.0 {
                        fail(e, format!("log of non-positive value {a}"))
                    } else {
                        Ok(a.ln())
                    }
                }
                Func::Sqrt => {
                    if a < 0.0 {
                        fail(e, format!("sqrt of negative value {a}"))
                    } else {
                        Ok(a.sqrt())
                    }
                }
                Func::Min => Ok(a.min(eval(&args[1], point)?)),
                Func::Max => Ok(a.max(eval(&args[1], point)?)),
            }
        }
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized pretty-printer; re-parses to an identical tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) => write!(f, "{v}"),
            Expr::Var(i) => {
                let axis = if i % 2 == 0 { 'x' } else { 'y' };
                write!(f, "{axis}{}", i / 2 + 1)
            }
            Expr::Neg(inner) => write!(f, "(-{inner})"),
            Expr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {sym} {b})")
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
