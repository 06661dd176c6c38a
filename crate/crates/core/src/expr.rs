//! Real-valued arithmetic expressions over named variables.
//!
//! Used for analytic pulse envelopes (`0.5*cos(0.1*t)`), control functions
//! with free parameters, and parametric frame-change phases in cmd-defs.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('+' | '-') unary | power
//! power  := atom ('^' unary)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right associative and binds tighter than unary minus, so `-2^2`
//! is `-4`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("parse error at offset {position}: {message}")]
    Parse { message: String, position: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("expression evaluated to a non-finite value at {0:?}")]
    NonFinite(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "tanh" => Func::Tanh,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Tanh => x.tanh(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
        }
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
pub enum Node {
    Num(f64),
    Var(String),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression. Variable names stay symbolic until [`bind`] maps
/// them to argument slots.
///
/// [`bind`]: TimeExpression::bind
#[derive(Debug, Clone, PartialEq)]
pub struct TimeExpression {
    root: Node,
    source: String,
}

/// An expression whose variables have been resolved to positions in an
/// argument slice, for repeated evaluation in inner loops.
#[derive(Debug, Clone)]
pub struct BoundExpression {
    ops: Vec<Op>,
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Arg(usize),
    Neg,
    Bin(BinOp),
    Call(Func),
}

impl TimeExpression {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let mut p = Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Self {
            root,
            source: src.to_string(),
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            root: Node::Num(value),
            source: format!("{value}"),
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Free variable names, in first-occurrence order, excluding the
    /// built-in constants `pi` and `e`.
    pub fn variables(&self) -> Vec<String> {
        fn walk(n: &Node, out: &mut Vec<String>) {
            match n {
                Node::Num(_) => {}
                Node::Var(v) => {
                    if builtin_constant(v).is_none() && !out.contains(v) {
                        out.push(v.clone());
                    }
                }
                Node::Neg(a) | Node::Call(_, a) => walk(a, out),
                Node::Bin(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    /// Resolves variables against `names`; argument `i` of the bound
    /// expression is `names[i]`. Names shadow the built-in constants.
    pub fn bind(&self, names: &[&str]) -> Result<BoundExpression, ExprError> {
        fn emit(n: &Node, names: &[&str], ops: &mut Vec<Op>) -> Result<(), ExprError> {
            match n {
                Node::Num(v) => ops.push(Op::Const(*v)),
                Node::Var(v) => {
                    if let Some(i) = names.iter().position(|n| n == v) {
                        ops.push(Op::Arg(i));
                    } else if let Some(c) = builtin_constant(v) {
                        ops.push(Op::Const(c));
                    } else {
                        return Err(ExprError::UnknownVariable(v.clone()));
                    }
                }
                Node::Neg(a) => {
                    emit(a, names, ops)?;
                    ops.push(Op::Neg);
                }
                Node::Bin(op, a, b) => {
                    emit(a, names, ops)?;
                    emit(b, names, ops)?;
                    ops.push(Op::Bin(*op));
                }
                Node::Call(f, a) => {
                    emit(a, names, ops)?;
                    ops.push(Op::Call(*f));
                }
            }
            Ok(())
        }
        let mut ops = Vec::new();
        emit(&self.root, names, &mut ops)?;
        Ok(BoundExpression { ops })
    }

    /// Replaces the named variables by numeric literals.
    pub fn substitute(&self, values: &[(&str, f64)]) -> Self {
        fn walk(n: &Node, values: &[(&str, f64)]) -> Node {
            match n {
                Node::Num(v) => Node::Num(*v),
                Node::Var(v) => match values.iter().find(|(name, _)| name == v) {
                    Some((_, x)) => Node::Num(*x),
                    None => Node::Var(v.clone()),
                },
                Node::Neg(a) => Node::Neg(Box::new(walk(a, values))),
                Node::Bin(op, a, b) => Node::Bin(*op, Box::new(walk(a, values)), Box::new(walk(b, values))),
                Node::Call(f, a) => Node::Call(*f, Box::new(walk(a, values))),
            }
        }
        let root = walk(&self.root, values);
        let source = root.to_string();
        Self { root, source }
    }

    /// Evaluates an expression whose only free variable is `t`.
    pub fn eval_t(&self, t: f64) -> Result<f64, ExprError> {
        self.bind(&["t"])?.eval_checked(&[t])
    }
}

impl BoundExpression {
    pub fn eval(&self, args: &[f64]) -> f64 {
        let mut stack: Vec<f64> = Vec::with_capacity(8);
        for op in &self.ops {
            match *op {
                Op::Const(v) => stack.push(v),
                Op::Arg(i) => stack.push(args[i]),
                Op::Neg => {
                    let a = stack.pop().unwrap();
                    stack.push(-a);
                }
                Op::Call(f) => {
                    let a = stack.pop().unwrap();
                    stack.push(f.apply(a));
                }
                Op::Bin(op) => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    stack.push(match op {
                        BinOp::Add => a + b,
                        BinOp::Sub => a - b,
                        BinOp::Mul => a * b,
                        BinOp::Div => a / b,
                        BinOp::Pow => a.powf(b),
                    });
                }
            }
        }
        stack.pop().unwrap()
    }

    pub fn eval_checked(&self, args: &[f64]) -> Result<f64, ExprError> {
        let v = self.eval(args);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite(args.to_vec()))
        }
    }
}

fn builtin_constant(name: &str) -> Option<f64> {
    match name {
        "pi" => Some(std::f64::consts::PI),
        "e" => Some(std::f64::consts::E),
        _ => None,
    }
}

/// Fully parenthesized rendering; parsing it back yields the same tree.
impl fmt::Display for TimeExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) if *v < 0.0 => write!(f, "({v:?})"),
            Node::Num(v) => write!(f, "{v:?}"),
            Node::Var(v) => write!(f, "{v}"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
            Node::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {sym} {b})")
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> ExprError {
        ExprError::Parse {
            message: message.to_string(),
            position: self.pos,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                if self.peek() == Some(b'(') {
                    let func = Func::from_name(name).ok_or_else(|| ExprError::Parse {
                        message: format!("unknown function `{name}`"),
                        position: start,
                    })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    if !self.eat(b')') {
                        return Err(self.error("expected `)` after function argument"));
                    }
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                Ok(Node::Var(name.to_string()))
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        let b = self.bytes;
        while self.pos < b.len() && (b[self.pos].is_ascii_digit() || b[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < b.len() && (b[self.pos] == b'e' || b[self.pos] == b'E') {
            let mut look = self.pos + 1;
            if look < b.len() && (b[look] == b'+' || b[look] == b'-') {
                look += 1;
            }
            if look < b.len() && b[look].is_ascii_digit() {
                self.pos = look;
                while self.pos < b.len() && b[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map(Node::Num)
            .map_err(|_| ExprError::Parse {
                message: format!("malformed number `{}`", &self.src[start..self.pos]),
                position: start,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn substitute_binds_parameters() {
        let e = TimeExpression::parse("a0 + a1*cos(0.1*t)").unwrap();
        let s = e.substitute(&[("a0", 0.5), ("a1", -0.25)]);
        assert_eq!(s.variables(), vec!["t".to_string()]);
        let direct = e.bind(&["t", "a0", "a1"]).unwrap().eval(&[3.0, 0.5, -0.25]);
        assert_eq!(s.eval_t(3.0).unwrap(), direct);
        assert_eq!(TimeExpression::parse(s.source()).unwrap().eval_t(3.0).unwrap(), direct);
    }

    fn eval(src: &str) -> f64 {
        TimeExpression::parse(src).unwrap().eval_t(0.0).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("1 + 2*3"), 7.0);
        assert_eq!(eval("(1 + 2)*3"), 9.0);
        assert_eq!(eval("8/4/2"), 1.0);
        assert_eq!(eval("2^3^2"), 512.0);
        assert_eq!(eval("-2^2"), -4.0);
        assert_eq!(eval("2^-1"), 0.5);
        assert_eq!(eval("1 - -1"), 2.0);
        assert_eq!(eval("1.5e2 + 2E-1"), 150.2);
    }

    #[test]
    fn functions_and_constants() {
        assert!((eval("cos(pi)") + 1.0).abs() < 1e-15);
        assert!((eval("exp(1) - e")).abs() < 1e-15);
        assert_eq!(eval("sqrt(abs(-16))"), 4.0);
        assert_eq!(eval("tanh(0)"), 0.0);
        let expr = TimeExpression::parse("cos(0.1*t)").unwrap();
        assert_eq!(expr.eval_t(0.0).unwrap(), 1.0);
    }

    #[test]
    fn errors_carry_positions() {
        match TimeExpression::parse("1 + * 2") {
            Err(ExprError::Parse { position, .. }) => assert_eq!(position, 4),
            other => panic!("{other:?}"),
        }
        match TimeExpression::parse("foo(1)") {
            Err(ExprError::Parse { position, message }) => {
                assert_eq!(position, 0);
                assert!(message.contains("foo"));
            }
            other => panic!("{other:?}"),
        }
        assert!(TimeExpression::parse("(1 + 2").is_err());
        assert!(TimeExpression::parse("1 2").is_err());
        assert!(matches!(
            TimeExpression::parse("a*t").unwrap().eval_t(1.0),
            Err(ExprError::UnknownVariable(v)) if v == "a"
        ));
        assert!(matches!(
            TimeExpression::parse("1/t").unwrap().eval_t(0.0),
            Err(ExprError::NonFinite(_))
        ));
    }

    #[test]
    fn binding_orders_arguments() {
        let expr = TimeExpression::parse("a0 + a1*t").unwrap();
        assert_eq!(expr.variables(), vec!["a0", "a1", "t"]);
        let bound = expr.bind(&["t", "a0", "a1"]).unwrap();
        assert_eq!(bound.eval(&[2.0, 1.0, 3.0]), 7.0);
    }

    fn arb_expr() -> impl Strategy<Value = String> {
        let leaf = prop_oneof![
            (-5.0f64..5.0).prop_map(|v| format!("{v}")),
            Just("t".to_string()),
            Just("pi".to_string()),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone(), prop_oneof![Just("+"), Just("-"), Just("*")])
                    .prop_map(|(a, b, op)| format!("({a}) {op} ({b})")),
                (inner.clone(), prop_oneof![Just("sin"), Just("cos"), Just("tanh")]).prop_map(|(a, f)| format!("{f}({a})")),
                inner.prop_map(|a| format!("-({a})")),
            ]
        })
    }

    proptest! {
        #[test]
        fn pretty_print_round_trips(src in arb_expr(), ts in proptest::collection::vec(-10.0f64..10.0, 100)) {
            let first = TimeExpression::parse(&src).unwrap();
            let second = TimeExpression::parse(&first.to_string()).unwrap();
            prop_assert_eq!(first.root(), second.root());
            for t in ts {
                let a = first.eval_t(t).unwrap();
                let b = second.eval_t(t).unwrap();
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
