//! A small expression language for scenario files.
//!
//! Numeric expressions support `+ - * / ^`, unary minus, the constants
//! `pi` and `e`, and the functions `abs sqrt exp ln log sin cos tan tanh
//! sign min max`. Predicates combine comparisons (`< <= > >= == !=`, with
//! chaining such as `-2 <= x1 <= 0`) using `and`/`&&`, `or`/`||` and
//! `not`/`!`. Variables are resolved against a [`VarTable`] at parse time
//! and evaluated from a slot slice.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{message} at offset {offset} in '{source_text}'")]
pub struct ExprError {
    pub message: String,
    pub offset: usize,
    pub source_text: String,
}

/// Names visible to an expression, mapped to evaluation slots.
#[derive(Clone, Debug)]
pub struct VarTable {
    names: Vec<(String, usize)>,
    slots: usize,
}

impl VarTable {
    /// State variables `x1..xn` (slots `0..n`), plus `x` for `x1` when `n == 1`.
    pub fn state(dim: usize) -> Self {
        let mut names: Vec<(String, usize)> =
            (0..dim).map(|i| (format!("x{}", i + 1), i)).collect();
        if dim == 1 {
            names.push(("x".into(), 0));
        }
        Self { names, slots: dim }
    }

    /// State variables followed by extra named parameters.
    pub fn with_params(dim: usize, params: &[&str]) -> Self {
        let mut t = Self::state(dim);
        for p in params {
            t.names.push(((*p).to_string(), t.slots));
            t.slots += 1;
        }
        t
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    fn lookup(&self, name: &str) -> Option<usize> {
        self.names.iter().find(|(n, _)| n == name).map(|(_, i)| *i)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Abs,
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Tanh,
    Sign,
    Min,
    Max,
}

impl Func {
    fn from_name(s: &str) -> Option<(Func, usize)> {
        Some(match s {
            "abs" => (Func::Abs, 1),
            "sqrt" => (Func::Sqrt, 1),
            "exp" => (Func::Exp, 1),
            "ln" | "log" => (Func::Ln, 1),
            "sin" => (Func::Sin, 1),
            "cos" => (Func::Cos, 1),
            "tan" => (Func::Tan, 1),
            "tanh" => (Func::Tanh, 1),
            "sign" => (Func::Sign, 1),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl Node {
    fn eval(&self, v: &[f64]) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Var(i) => v[*i],
            Node::Neg(a) => -a.eval(v),
            Node::Add(a, b) => a.eval(v) + b.eval(v),
            Node::Sub(a, b) => a.eval(v) - b.eval(v),
            Node::Mul(a, b) => a.eval(v) * b.eval(v),
            Node::Div(a, b) => a.eval(v) / b.eval(v),
            Node::Pow(a, b) => {
                let base = a.eval(v);
                match **b {
                    Node::Const(c) if c == c.trunc() && c.abs() <= 64.0 => base.powi(c as i32),
                    _ => base.powf(b.eval(v)),
                }
            }
            Node::Call(f, args) => {
                let x = args[0].eval(v);
                match f {
                    Func::Abs => x.abs(),
                    Func::Sqrt => x.sqrt(),
                    Func::Exp => x.exp(),
                    Func::Ln => x.ln(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Tanh => x.tanh(),
                    Func::Sign => {
                        if x > 0.0 {
                            1.0
                        } else if x < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                    Func::Min => x.min(args[1].eval(v)),
                    Func::Max => x.max(args[1].eval(v)),
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Rel {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

#[derive(Clone, Debug, PartialEq)]
enum PNode {
    Const(bool),
    Cmp(Rel, Node, Node),
    And(Box<PNode>, Box<PNode>),
    Or(Box<PNode>, Box<PNode>),
    Not(Box<PNode>),
}

impl PNode {
    fn eval(&self, v: &[f64]) -> bool {
        match self {
            PNode::Const(b) => *b,
            PNode::Cmp(r, a, b) => {
                let (a, b) = (a.eval(v), b.eval(v));
                match r {
                    Rel::Lt => a < b,
                    Rel::Le => a <= b,
                    Rel::Gt => a > b,
                    Rel::Ge => a >= b,
                    Rel::Eq => a == b,
                    Rel::Ne => a != b,
                }
            }
            PNode::And(a, b) => a.eval(v) && b.eval(v),
            PNode::Or(a, b) => a.eval(v) || b.eval(v),
            PNode::Not(a) => !a.eval(v),
        }
    }
}

/// Compiled numeric expression.
#[derive(Clone, Debug)]
pub struct Expr {
    src: String,
    root: Node,
    slots: usize,
}

impl Expr {
    pub fn parse(src: &str, vars: &VarTable) -> Result<Self, ExprError> {
        let mut p = Parser::new(src, vars)?;
        let root = p.expr()?;
        p.finish()?;
        Ok(Self {
            src: src.to_string(),
            root,
            slots: vars.slots(),
        })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            src: format!("{c}"),
            root: Node::Const(c),
            slots: 0,
        }
    }

    /// Evaluate with slot values (state first, then parameters).
    #[inline]
    pub fn eval(&self, slots: &[f64]) -> f64 {
        debug_assert!(slots.len() >= self.slots);
        self.root.eval(slots)
    }

    pub fn source(&self) -> &str {
        &self.src
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

/// Compiled boolean predicate over the state.
#[derive(Clone, Debug)]
pub struct Predicate {
    src: String,
    root: PNode,
}

impl Predicate {
    pub fn parse(src: &str, vars: &VarTable) -> Result<Self, ExprError> {
        let mut p = Parser::new(src, vars)?;
        let root = p.pred()?;
        p.finish()?;
        Ok(Self {
            src: src.to_string(),
            root,
        })
    }

    pub fn always() -> Self {
        Self {
            src: "true".into(),
            root: PNode::Const(true),
        }
    }

    #[inline]
    pub fn holds(&self, slots: &[f64]) -> bool {
        self.root.eval(slots)
    }

    pub fn source(&self) -> &str {
        &self.src
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a VarTable,
}

const OPS: [&str; 17] = [
    "<=", ">=", "==", "!=", "&&", "||", "**", "<", ">", "+", "-", "*", "/", "^", "!", "=", "|",
];

impl<'a> Parser<'a> {
    fn new(src: &'a str, vars: &'a VarTable) -> Result<Self, ExprError> {
        let mut toks = Vec::new();
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || c == '.' {
                let start = i;
                while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let save = i;
                    i += 1;
                    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                        i += 1;
                    }
                    if i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                    } else {
                        i = save;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ExprError {
                    message: format!("invalid number '{text}'"),
                    offset: start,
                    source_text: src.to_string(),
                })?;
                toks.push((Tok::Num(v), start));
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start));
            } else if c == '(' {
                toks.push((Tok::LParen, i));
                i += 1;
            } else if c == ')' {
                toks.push((Tok::RParen, i));
                i += 1;
            } else if c == ',' {
                toks.push((Tok::Comma, i));
                i += 1;
            } else if let Some(op) = OPS.iter().find(|op| src[i..].starts_with(**op)) {
                let op = match *op {
                    "**" => "^",
                    "=" => "==",
                    "|" => {
                        return Err(ExprError {
                            message: "unexpected '|' (use '||' or 'or')".into(),
                            offset: i,
                            source_text: src.to_string(),
                        })
                    }
                    o => o,
                };
                let len = if src[i..].starts_with("**") || (op.len() == 2 && src[i..].starts_with(op)) {
                    2
                } else {
                    1
                };
                toks.push((Tok::Op(op), i));
                i += len;
            } else {
                return Err(ExprError {
                    message: format!("unexpected character '{c}'"),
                    offset: i,
                    source_text: src.to_string(),
                });
            }
        }
        Ok(Self {
            src,
            toks,
            pos: 0,
            vars,
        })
    }

    fn err(&self, message: impl Into<String>) -> ExprError {
        let offset = self
            .toks
            .get(self.pos)
            .map(|t| t.1)
            .unwrap_or(self.src.len());
        ExprError {
            message: message.into(),
            offset,
            source_text: self.src.to_string(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), Some(Tok::Op(o)) if *o == op)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == w)
    }

    fn finish(&self) -> Result<(), ExprError> {
        if self.pos < self.toks.len() {
            Err(self.err("unexpected trailing input"))
        } else {
            Ok(())
        }
    }

    fn pred(&mut self) -> Result<PNode, ExprError> {
        let mut lhs = self.pred_and()?;
        while self.is_op("||") || self.is_word("or") {
            self.bump();
            let rhs = self.pred_and()?;
            lhs = PNode::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn pred_and(&mut self) -> Result<PNode, ExprError> {
        let mut lhs = self.pred_not()?;
        while self.is_op("&&") || self.is_word("and") {
            self.bump();
            let rhs = self.pred_not()?;
            lhs = PNode::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn pred_not(&mut self) -> Result<PNode, ExprError> {
        if self.is_op("!") || self.is_word("not") {
            self.bump();
            return Ok(PNode::Not(Box::new(self.pred_not()?)));
        }
        if self.is_word("true") {
            self.bump();
            return Ok(PNode::Const(true));
        }
        if self.is_word("false") {
            self.bump();
            return Ok(PNode::Const(false));
        }
        if matches!(self.peek(), Some(Tok::LParen)) {
            // Either a parenthesized predicate or the start of arithmetic.
            let save = self.pos;
            self.bump();
            if let Ok(inner) = self.pred() {
                if matches!(self.peek(), Some(Tok::RParen)) {
                    self.bump();
                    let continues_arith = matches!(
                        self.peek(),
                        Some(Tok::Op(o)) if ["+", "-", "*", "/", "^", "<", "<=", ">", ">=", "==", "!="].contains(o)
                    );
                    if !continues_arith {
                        return Ok(inner);
                    }
                }
            }
            self.pos = save;
        }
        self.comparison()
    }

    fn rel(&self) -> Option<Rel> {
        match self.peek() {
            Some(Tok::Op("<")) => Some(Rel::Lt),
            Some(Tok::Op("<=")) => Some(Rel::Le),
            Some(Tok::Op(">")) => Some(Rel::Gt),
            Some(Tok::Op(">=")) => Some(Rel::Ge),
            Some(Tok::Op("==")) => Some(Rel::Eq),
            Some(Tok::Op("!=")) => Some(Rel::Ne),
            _ => None,
        }
    }

    fn comparison(&mut self) -> Result<PNode, ExprError> {
        let first = self.expr()?;
        let Some(r) = self.rel() else {
            return Err(self.err("expected a comparison operator"));
        };
        self.bump();
        let mut rhs = self.expr()?;
        let mut out = PNode::Cmp(r, first, rhs.clone());
        while let Some(r) = self.rel() {
            self.bump();
            let next = self.expr()?;
            out = PNode::And(Box::new(out), Box::new(PNode::Cmp(r, rhs, next.clone())));
            rhs = next;
        }
        Ok(out)
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.is_op("+") {
                self.bump();
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.is_op("-") {
                self.bump();
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.is_op("*") {
                self.bump();
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.is_op("/") {
                self.bump();
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.is_op("-") {
            self.bump();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.is_op("+") {
            self.bump();
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.is_op("^") {
            self.bump();
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Node::Const(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(e),
                    _ => {
                        self.pos -= 1;
                        Err(self.err("expected ')'"))
                    }
                }
            }
            Some(Tok::Ident(name)) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    let Some((f, arity)) = Func::from_name(&name) else {
                        self.pos -= 1;
                        return Err(self.err(format!("unknown function '{name}'")));
                    };
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while matches!(self.peek(), Some(Tok::Comma)) {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    if !matches!(self.bump(), Some(Tok::RParen)) {
                        self.pos -= 1;
                        return Err(self.err("expected ')' after function arguments"));
                    }
                    if args.len() != arity {
                        return Err(self.err(format!(
                            "function '{name}' takes {arity} argument(s), got {}",
                            args.len()
                        )));
                    }
                    return Ok(Node::Call(f, args));
                }
                match name.as_str() {
                    "pi" => Ok(Node::Const(std::f64::consts::PI)),
                    "e" => Ok(Node::Const(std::f64::consts::E)),
                    _ => match self.vars.lookup(&name) {
                        Some(i) => Ok(Node::Var(i)),
                        None => {
                            self.pos -= 1;
                            Err(self.err(format!("unknown variable '{name}'")))
                        }
                    },
                }
            }
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err("expected a number, variable, function or '('"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: &[f64]) -> f64 {
        Expr::parse(src, &VarTable::state(x.len())).unwrap().eval(x)
    }

    fn holds(src: &str, x: &[f64]) -> bool {
        Predicate::parse(src, &VarTable::state(x.len()))
            .unwrap()
            .holds(x)
    }

    #[test]
    fn arithmetic() {
        assert_eq!(ev("x1*(x1+2)", &[3.0]), 15.0);
        assert_eq!(ev("-x^2", &[3.0]), -9.0);
        assert_eq!(ev("2^3^2", &[0.0]), 512.0);
        assert_eq!(ev("-1 + x1^2*x2", &[2.0, 3.0]), 11.0);
        assert_eq!(ev("max(x1, x2) - min(x1, x2)", &[2.0, -1.0]), 3.0);
        assert_eq!(ev("abs(x) - 1", &[-3.0]), 2.0);
        assert_eq!(ev("1e-3 * 2", &[0.0]), 2e-3);
        assert_eq!(ev("x1**2", &[4.0]), 16.0);
    }

    #[test]
    fn params() {
        let vars = VarTable::with_params(2, &["eps"]);
        let e = Expr::parse("1/sqrt(eps)", &vars).unwrap();
        assert!((e.eval(&[0.0, 0.0, 0.04]) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn predicates() {
        assert!(holds("x1 <= 0", &[0.0]));
        assert!(!holds("x1 < 0", &[0.0]));
        assert!(holds("-2 <= x1 <= 0", &[-1.0]));
        assert!(!holds("-2 <= x1 <= 0", &[0.5]));
        assert!(holds("x1 < -2 or x1 > 0", &[0.5]));
        assert!(holds("(x1 > 0) and not (x2 > 0)", &[1.0, -1.0]));
        assert!(holds("(x1 + 1) * 2 > 3", &[1.0]));
        assert!(holds("x1 == 0", &[0.0]));
        assert!(holds("true", &[0.0]));
        assert!(holds("x1^2 + x2^2 <= 1 && x1 >= 0", &[0.5, 0.5]));
    }

    #[test]
    fn errors_carry_offsets() {
        let vars = VarTable::state(1);
        let e = Expr::parse("x1 + y", &vars).unwrap_err();
        assert_eq!(e.offset, 5);
        assert!(Expr::parse("foo(x1)", &vars).is_err());
        assert!(Expr::parse("(x1", &vars).is_err());
        assert!(Expr::parse("x1 x1", &vars).is_err());
        assert!(Predicate::parse("x1 + 1", &vars).is_err());
        assert!(Expr::parse("max(x1)", &vars).is_err());
    }
}
