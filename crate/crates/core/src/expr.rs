//! Small arithmetic expression language for user-defined potentials.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := ("+" | "-") unary | power
//! power   := atom ("^" unary)?
//! atom    := number | name | func "(" expr ")" | "(" expr ")"
//! func    := "abs" | "sqrt" | "sin" | "cos" | "exp"
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-y1^2`
//! is `-(y1^2)`. Names are resolved against the variable list supplied when
//! compiling; `pi` is predefined.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Abs,
    Sqrt,
    Sin,
    Cos,
    Exp,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Abs => x.abs(),
            Func::Sqrt => x.sqrt(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Var(i) => x[*i],
            Node::Neg(a) => -a.eval(x),
            Node::Add(a, b) => a.eval(x) + b.eval(x),
            Node::Sub(a, b) => a.eval(x) - b.eval(x),
            Node::Mul(a, b) => a.eval(x) * b.eval(x),
            Node::Div(a, b) => a.eval(x) / b.eval(x),
            Node::Pow(a, b) => {
                let base = a.eval(x);
                match **b {
                    Node::Num(e) if e.fract() == 0.0 && e.abs() <= 64.0 => base.powi(e as i32),
                    _ => base.powf(b.eval(x)),
                }
            }
            Node::Call(f, a) => f.apply(a.eval(x)),
        }
    }
}

/// A compiled expression over a fixed list of variables.
#[derive(Clone, PartialEq)]
pub struct Expr {
    source: String,
    vars: Vec<String>,
    root: Node,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl Expr {
    pub fn parse(source: &str, vars: &[&str]) -> Result<Expr> {
        let mut p = Parser { src: source, chars: source.char_indices().collect(), pos: 0, vars };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Expr { source: source.to_string(), vars: vars.iter().map(|s| s.to_string()).collect(), root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Evaluates at `x`, whose entries follow the variable order given to `parse`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.vars.len());
        self.root.eval(x)
    }
}

struct Parser<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        let col = self.pos + 1;
        Error::Expression(format!("{msg} at column {col} in {:?}", self.src))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Node::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.name(),
            Some(c) => Err(self.error(&format!("unexpected character {c:?}"))),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let mut end = start;
        let n = self.chars.len();
        while end < n && (self.chars[end].1.is_ascii_digit() || self.chars[end].1 == '.') {
            end += 1;
        }
        if end < n && matches!(self.chars[end].1, 'e' | 'E') {
            let mut k = end + 1;
            if k < n && matches!(self.chars[k].1, '+' | '-') {
                k += 1;
            }
            if k < n && self.chars[k].1.is_ascii_digit() {
                while k < n && self.chars[k].1.is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let text: String = self.chars[start..end].iter().map(|c| c.1).collect();
        let value = text.parse::<f64>().map_err(|_| self.error(&format!("malformed number {text:?}")))?;
        self.pos = end;
        Ok(Node::Num(value))
    }

    fn name(&mut self) -> Result<Node> {
        let start = self.pos;
        let mut end = start;
        while end < self.chars.len() && (self.chars[end].1.is_ascii_alphanumeric() || self.chars[end].1 == '_') {
            end += 1;
        }
        let name: String = self.chars[start..end].iter().map(|c| c.1).collect();
        self.pos = end;
        if let Some(f) = Func::from_name(&name) {
            if !self.eat('(') {
                return Err(self.error(&format!("expected '(' after {}", f.name())));
            }
            let arg = self.expr()?;
            if !self.eat(')') {
                return Err(self.error("expected ')'"));
            }
            return Ok(Node::Call(f, Box::new(arg)));
        }
        if let Some(i) = self.vars.iter().position(|v| *v == name) {
            return Ok(Node::Var(i));
        }
        if name == "pi" {
            return Ok(Node::Num(std::f64::consts::PI));
        }
        self.pos = start;
        Err(self.error(&format!("unknown name {name:?}")))
    }
}

/// Standard variable names: `y1..yn` followed by `z1..zp`.
pub fn yz_names(n: usize, p: usize) -> Vec<String> {
    (1..=n).map(|i| format!("y{i}")).chain((1..=p).map(|i| format!("z{i}"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_functions() {
        let e = Expr::parse("1 + y1^2*3 - -z1", &["y1", "z1"]).unwrap();
        assert_eq!(e.eval(&[2.0, 5.0]), 1.0 + 12.0 + 5.0);
        let e = Expr::parse("-y1^2", &["y1"]).unwrap();
        assert_eq!(e.eval(&[3.0]), -9.0);
        let e = Expr::parse("2^3^2", &[]).unwrap();
        assert_eq!(e.eval(&[]), 512.0);
        let e = Expr::parse("abs(z1)^1.5 + sqrt(4) + exp(0) + cos(0) + sin(0)", &["z1"]).unwrap();
        assert!((e.eval(&[-4.0]) - (8.0 + 2.0 + 1.0 + 1.0)).abs() < 1e-15);
        let e = Expr::parse("1e-1*y1 + 2.5E+1", &["y1"]).unwrap();
        assert!((e.eval(&[10.0]) - 26.0).abs() < 1e-14);
    }

    #[test]
    fn errors_carry_columns() {
        let err = Expr::parse("1 + q", &["y1"]).unwrap_err().to_string();
        assert!(err.contains("column 5"), "{err}");
        assert!(Expr::parse("(1 + y1", &["y1"]).is_err());
        assert!(Expr::parse("sqrt 2", &[]).is_err());
        assert!(Expr::parse("1 2", &[]).is_err());
    }
}
