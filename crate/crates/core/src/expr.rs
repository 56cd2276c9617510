//! Tiny arithmetic expressions over a point on the surface, used for custom
//! initial conditions: variables `x1 x2 x3` (aliases `x y z`), literals,
//! `+ - * / ^`, parentheses, and a fixed set of math functions.

use std::fmt;

use thiserror::Error;

use crate::geom::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("unexpected character `{0}`")]
    BadChar(char),
    #[error("malformed number `{0}`")]
    BadNumber(String),
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("`{name}` takes {want} argument(s), got {got}")]
    WrongArity { name: String, want: usize, got: usize },
    #[error("expected {0}")]
    Expected(&'static str),
    #[error("trailing input after expression")]
    TrailingInput,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    Var(u8),
    Func(Func),
    Const(f64),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Tanh,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Var(u8),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call1(Func, Box<Node>),
    Call2(Func, Box<Node>, Box<Node>),
}

/// A parsed, evaluable expression.
#[derive(Debug, Clone)]
pub struct Expr {
    root: Node,
    src: String,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let toks = lex(src)?;
        let mut p = Parser { toks, pos: 0 };
        let root = p.sum()?;
        if p.pos != p.toks.len() {
            return Err(ExprError::TrailingInput);
        }
        Ok(Expr { root, src: src.trim().to_string() })
    }

    pub fn eval(&self, p: Vec3) -> f64 {
        eval(&self.root, p)
    }
}

fn lex(src: &str) -> Result<Vec<Tok>, ExprError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                // exponent part, e.g. 1e-3
                if i < bytes.len() && matches!(bytes[i] as char, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && matches!(bytes[j] as char, '+' | '-') {
                        j += 1;
                    }
                    if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| ExprError::BadNumber(text.to_string()))?;
                out.push(Tok::Num(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push(name_token(&src[start..i])?);
            }
            other => return Err(ExprError::BadChar(other)),
        }
    }
    Ok(out)
}

fn name_token(name: &str) -> Result<Tok, ExprError> {
    Ok(match name {
        "x1" | "x" => Tok::Var(0),
        "x2" | "y" => Tok::Var(1),
        "x3" | "z" => Tok::Var(2),
        "pi" => Tok::Const(std::f64::consts::PI),
        "e" => Tok::Const(std::f64::consts::E),
        "sin" => Tok::Func(Func::Sin),
        "cos" => Tok::Func(Func::Cos),
        "tan" => Tok::Func(Func::Tan),
        "tanh" => Tok::Func(Func::Tanh),
        "exp" => Tok::Func(Func::Exp),
        "ln" | "log" => Tok::Func(Func::Ln),
        "sqrt" => Tok::Func(Func::Sqrt),
        "abs" => Tok::Func(Func::Abs),
        "min" => Tok::Func(Func::Min),
        "max" => Tok::Func(Func::Max),
        other => return Err(ExprError::UnknownName(other.to_string())),
    })
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<Tok> {
        self.toks.get(self.pos).copied()
    }

    fn eat(&mut self, t: Tok, what: &'static str) -> Result<(), ExprError> {
        if self.peek() == Some(t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ExprError::Expected(what))
        }
    }

    fn sum(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.product()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.product()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.product()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // `-x^2` is `-(x^2)`: the power binds tighter than the sign.
    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.peek() == Some(Tok::Minus) {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(Tok::Caret) {
            self.pos += 1;
            // right associative; the exponent may carry its own sign
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            Some(Tok::Num(v)) | Some(Tok::Const(v)) => {
                self.pos += 1;
                Ok(Node::Const(v))
            }
            Some(Tok::Var(k)) => {
                self.pos += 1;
                Ok(Node::Var(k))
            }
            Some(Tok::Func(f)) => {
                self.pos += 1;
                self.eat(Tok::LParen, "`(` after function name")?;
                let mut args = vec![self.sum()?];
                while self.peek() == Some(Tok::Comma) {
                    self.pos += 1;
                    args.push(self.sum()?);
                }
                self.eat(Tok::RParen, "closing `)`")?;
                if args.len() != f.arity() {
                    return Err(ExprError::WrongArity {
                        name: f.name().to_string(),
                        want: f.arity(),
                        got: args.len(),
                    });
                }
                let mut it = args.into_iter();
                Ok(if f.arity() == 1 {
                    Node::Call1(f, Box::new(it.next().unwrap()))
                } else {
                    Node::Call2(f, Box::new(it.next().unwrap()), Box::new(it.next().unwrap()))
                })
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.sum()?;
                self.eat(Tok::RParen, "closing `)`")?;
                Ok(inner)
            }
            _ => Err(ExprError::Expected("a value")),
        }
    }
}

fn eval(n: &Node, p: Vec3) -> f64 {
    match n {
        Node::Const(v) => *v,
        Node::Var(k) => p[*k as usize],
        Node::Neg(a) => -eval(a, p),
        Node::Add(a, b) => eval(a, p) + eval(b, p),
        Node::Sub(a, b) => eval(a, p) - eval(b, p),
        Node::Mul(a, b) => eval(a, p) * eval(b, p),
        Node::Div(a, b) => eval(a, p) / eval(b, p),
        Node::Pow(a, b) => eval(a, p).powf(eval(b, p)),
        Node::Call1(f, a) => {
            let x = eval(a, p);
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => x.tan(),
                Func::Tanh => x.tanh(),
                Func::Exp => x.exp(),
                Func::Ln => x.ln(),
                Func::Sqrt => x.sqrt(),
                Func::Abs => x.abs(),
                _ => unreachable!(),
            }
        }
        Node::Call2(f, a, b) => {
            let x = eval(a, p);
            let y = eval(b, p);
            match f {
                Func::Min => x.min(y),
                Func::Max => x.max(y),
                _ => unreachable!(),
            }
        }
    }
}
