//! Small closed-form expression evaluator for user-defined dynamics.
//!
//! Grammar (version 1):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' factor)?          // right-associative
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers are either one of the caller-declared variables (`x1..xn`,
//! `t`, `tau`, or `s` for gauges) or one of the functions `sin`, `cos`,
//! `tanh`, `atan`, `exp`, `ln`, `abs`. Unary minus binds looser than `^`,
//! so `-x1^2` reads as `-(x1^2)`.

use std::fmt;

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Clone, Debug)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "expression error at byte {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ParseError {}

fn err<T>(position: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { position, message: message.into() })
}

fn lex(src: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => { out.push((i, Token::Plus)); i += 1; }
            '-' => { out.push((i, Token::Minus)); i += 1; }
            '*' => { out.push((i, Token::Star)); i += 1; }
            '/' => { out.push((i, Token::Slash)); i += 1; }
            '^' => { out.push((i, Token::Caret)); i += 1; }
            '(' => { out.push((i, Token::LParen)); i += 1; }
            ')' => { out.push((i, Token::RParen)); i += 1; }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_digit() || d == '.' {
                        i += 1;
                    } else if (d == 'e' || d == 'E')
                        && i + 1 < bytes.len()
                        && ((bytes[i + 1] as char).is_ascii_digit()
                            || bytes[i + 1] == b'+'
                            || bytes[i + 1] == b'-')
                    {
                        i += 2;
                    } else {
                        break;
                    }
                }
                let text = &src[start..i];
                match text.parse::<f64>() {
                    Ok(v) => out.push((start, Token::Num(v))),
                    Err(_) => return err(start, format!("bad number literal '{text}'")),
                }
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_alphanumeric() || d == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push((start, Token::Ident(src[start..i].to_string())));
            }
            _ => return err(i, format!("unexpected character '{c}'")),
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Tanh,
    Atan,
    Exp,
    Ln,
    Abs,
}

impl Func {
    fn parse(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "tanh" => Some(Func::Tanh),
            "atan" => Some(Func::Atan),
            "exp" => Some(Func::Exp),
            "ln" => Some(Func::Ln),
            "abs" => Some(Func::Abs),
            _ => None,
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tanh => v.tanh(),
            Func::Atan => v.atan(),
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Abs => v.abs(),
        }
    }
}

#[derive(Clone, Debug)]
enum Node {
    Num(f64),
    Var(usize),
    Call(Func, Box<Node>),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
}

/// A parsed expression over a fixed variable list.
#[derive(Clone, Debug)]
pub struct Expression {
    root: Node,
    arity: usize,
}

impl Expression {
    /// Parse `src` over the declared variables (`vars[i]` binds slot `i` of
    /// the evaluation argument).
    pub fn parse(src: &str, vars: &[&str]) -> Result<Expression, ParseError> {
        let tokens = lex(src)?;
        let mut parser = Parser { tokens, pos: 0, vars, len: src.len() };
        let root = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            let (at, _) = parser.tokens[parser.pos].clone();
            return err(at, "trailing input after expression");
        }
        Ok(Expression { root, arity: vars.len() })
    }

    pub fn eval(&self, vals: &[f64]) -> f64 {
        assert_eq!(vals.len(), self.arity, "expression arity mismatch");
        eval_node(&self.root, vals)
    }
}

fn eval_node(node: &Node, vals: &[f64]) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::Var(i) => vals[*i],
        Node::Call(f, a) => f.apply(eval_node(a, vals)),
        Node::Neg(a) => -eval_node(a, vals),
        Node::Add(a, b) => eval_node(a, vals) + eval_node(b, vals),
        Node::Sub(a, b) => eval_node(a, vals) - eval_node(b, vals),
        Node::Mul(a, b) => eval_node(a, vals) * eval_node(b, vals),
        Node::Div(a, b) => eval_node(a, vals) / eval_node(b, vals),
        Node::Pow(a, b) => eval_node(a, vals).powf(eval_node(b, vals)),
    }
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    vars: &'a [&'a str],
    len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn next(&mut self) -> Option<(usize, Token)> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut node = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    node = Node::Add(Box::new(node), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    node = Node::Sub(Box::new(node), Box::new(self.term()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut node = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    node = Node::Mul(Box::new(node), Box::new(self.factor()?));
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    node = Node::Div(Box::new(node), Box::new(self.factor()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.pos += 1;
            let exponent = self.factor()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        match self.next() {
            Some((_, Token::Num(v))) => Ok(Node::Num(v)),
            Some((at, Token::Ident(name))) => {
                if matches!(self.peek(), Some(Token::LParen)) {
                    let func = match Func::parse(&name) {
                        Some(f) => f,
                        None => return err(at, format!("unknown function '{name}'")),
                    };
                    self.pos += 1;
                    let arg = self.expr()?;
                    match self.next() {
                        Some((_, Token::RParen)) => Ok(Node::Call(func, Box::new(arg))),
                        _ => err(at, "missing ')' after function argument"),
                    }
                } else if let Some(slot) = self.vars.iter().position(|v| *v == name) {
                    Ok(Node::Var(slot))
                } else {
                    err(at, format!("unknown identifier '{name}'"))
                }
            }
            Some((_, Token::LParen)) => {
                let node = self.expr()?;
                match self.next() {
                    Some((_, Token::RParen)) => Ok(node),
                    other => err(
                        other.map(|(at, _)| at).unwrap_or(self.len),
                        "missing closing ')'",
                    ),
                }
            }
            Some((at, tok)) => err(at, format!("unexpected token {tok:?}")),
            None => err(self.len, "unexpected end of expression"),
        }
    }
}
