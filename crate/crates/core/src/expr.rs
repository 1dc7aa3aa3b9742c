//! A small arithmetic-expression language for user-supplied `F` and `b`.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr    := product (("+" | "-") product)*
//! product := unary (("*" | "/") unary)*
//! unary   := ("-" | "+") unary | power
//! power   := atom ("^" unary)?              right-associative
//! atom    := number | name | name "(" expr ")" | "(" expr ")"
//! ```
//!
//! Names are either variables declared by the caller, the constants `pi`
//! and `e`, or one of the functions `sin cos tan sinh cosh tanh exp log
//! sqrt abs`. Expressions can be differentiated symbolically.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sign,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            "tan" => Self::Tan,
            "sinh" => Self::Sinh,
            "cosh" => Self::Cosh,
            "tanh" => Self::Tanh,
            "exp" => Self::Exp,
            "log" | "ln" => Self::Log,
            "sqrt" => Self::Sqrt,
            "abs" => Self::Abs,
            "sign" => Self::Sign,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Self::Sin => "sin",
            Self::Cos => "cos",
            Self::Tan => "tan",
            Self::Sinh => "sinh",
            Self::Cosh => "cosh",
            Self::Tanh => "tanh",
            Self::Exp => "exp",
            Self::Log => "log",
            Self::Sqrt => "sqrt",
            Self::Abs => "abs",
            Self::Sign => "sign",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Self::Sin => x.sin(),
            Self::Cos => x.cos(),
            Self::Tan => x.tan(),
            Self::Sinh => x.sinh(),
            Self::Cosh => x.cosh(),
            Self::Tanh => x.tanh(),
            Self::Exp => x.exp(),
            Self::Log => x.ln(),
            Self::Sqrt => x.sqrt(),
            Self::Abs => x.abs(),
            Self::Sign => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
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
    Call(Func, Box<Node>),
}

use Node::*;

fn c(v: f64) -> Node {
    Const(v)
}

// Constructors with constant folding; keeps derivatives readable.
fn add(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Const(x), Const(y)) => c(x + y),
        (Const(z), _) if *z == 0.0 => b,
        (_, Const(z)) if *z == 0.0 => a,
        _ => Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Const(x), Const(y)) => c(x - y),
        (_, Const(z)) if *z == 0.0 => a,
        (Const(z), _) if *z == 0.0 => neg(b),
        _ => Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Const(x), Const(y)) => c(x * y),
        (Const(z), _) | (_, Const(z)) if *z == 0.0 => c(0.0),
        (Const(o), _) if *o == 1.0 => b,
        (_, Const(o)) if *o == 1.0 => a,
        _ => Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Const(z), _) if *z == 0.0 => c(0.0),
        (_, Const(o)) if *o == 1.0 => a,
        _ => Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Node) -> Node {
    match a {
        Const(x) => c(-x),
        Neg(inner) => *inner,
        other => Neg(Box::new(other)),
    }
}

fn pow(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (_, Const(o)) if *o == 1.0 => a,
        (_, Const(z)) if *z == 0.0 => c(1.0),
        _ => Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Node) -> Node {
    match a {
        Const(x) => c(f.apply(x)),
        other => Call(f, Box::new(other)),
    }
}

impl Node {
    fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Const(v) => *v,
            Var(i) => vars[*i],
            Neg(a) => -a.eval(vars),
            Add(a, b) => a.eval(vars) + b.eval(vars),
            Sub(a, b) => a.eval(vars) - b.eval(vars),
            Mul(a, b) => a.eval(vars) * b.eval(vars),
            Div(a, b) => a.eval(vars) / b.eval(vars),
            Pow(a, b) => {
                let base = a.eval(vars);
                match **b {
                    Const(e) if e.fract() == 0.0 && e.abs() < 64.0 => base.powi(e as i32),
                    _ => base.powf(b.eval(vars)),
                }
            }
            Call(f, a) => f.apply(a.eval(vars)),
        }
    }

    fn depends_on(&self, var: usize) -> bool {
        match self {
            Const(_) => false,
            Var(i) => *i == var,
            Neg(a) | Call(_, a) => a.depends_on(var),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    fn diff(&self, var: usize) -> Node {
        match self {
            Const(_) => c(0.0),
            Var(i) => c(if *i == var { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.diff(var)),
            Add(a, b) => add(a.diff(var), b.diff(var)),
            Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Mul(a, b) => add(mul(a.diff(var), (**b).clone()), mul((**a).clone(), b.diff(var))),
            Div(a, b) => div(
                sub(mul(a.diff(var), (**b).clone()), mul((**a).clone(), b.diff(var))),
                pow((**b).clone(), c(2.0)),
            ),
            Pow(a, b) => {
                if !b.depends_on(var) {
                    // d(u^k) = k u^(k-1) u'
                    let k = (**b).clone();
                    let km1 = sub(k.clone(), c(1.0));
                    mul(mul(k, pow((**a).clone(), km1)), a.diff(var))
                } else {
                    // d(u^v) = u^v (v' ln u + v u'/u)
                    let whole = self.clone();
                    let term = add(
                        mul(b.diff(var), call(Func::Log, (**a).clone())),
                        div(mul((**b).clone(), a.diff(var)), (**a).clone()),
                    );
                    mul(whole, term)
                }
            }
            Call(f, a) => {
                let u = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, u),
                    Func::Cos => neg(call(Func::Sin, u)),
                    Func::Tan => div(c(1.0), pow(call(Func::Cos, u), c(2.0))),
                    Func::Sinh => call(Func::Cosh, u),
                    Func::Cosh => call(Func::Sinh, u),
                    Func::Tanh => sub(c(1.0), pow(call(Func::Tanh, u), c(2.0))),
                    Func::Exp => call(Func::Exp, u),
                    Func::Log => div(c(1.0), u),
                    Func::Sqrt => div(c(0.5), call(Func::Sqrt, u)),
                    Func::Abs => call(Func::Sign, u),
                    Func::Sign => c(0.0),
                };
                mul(outer, a.diff(var))
            }
        }
    }

    fn write(&self, out: &mut fmt::Formatter<'_>, names: &[String]) -> fmt::Result {
        match self {
            Const(v) => write!(out, "{v:?}"),
            Var(i) => write!(out, "{}", names[*i]),
            Neg(a) => {
                write!(out, "(-")?;
                a.write(out, names)?;
                write!(out, ")")
            }
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => {
                let op = match self {
                    Add(..) => "+",
                    Sub(..) => "-",
                    Mul(..) => "*",
                    Div(..) => "/",
                    _ => "^",
                };
                write!(out, "(")?;
                a.write(out, names)?;
                write!(out, " {op} ")?;
                b.write(out, names)?;
                write!(out, ")")
            }
            Call(f, a) => {
                write!(out, "{}(", f.name())?;
                a.write(out, names)?;
                write!(out, ")")
            }
        }
    }
}

/// Parsed expression over a fixed list of variable names.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    root: Node,
    vars: Vec<String>,
    source: String,
}

impl Expr {
    pub fn parse(source: &str, vars: &[&str]) -> Result<Self> {
        let mut p = Parser { src: source.as_bytes(), pos: 0, vars };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Self { root, vars: vars.iter().map(|s| s.to_string()).collect(), source: source.to_string() })
    }

    pub fn eval(&self, args: &[f64]) -> f64 {
        debug_assert_eq!(args.len(), self.vars.len());
        self.root.eval(args)
    }

    /// Symbolic partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Expr {
        let root = self.root.diff(var);
        Expr { source: format!("d/d{}[{}]", self.vars[var], self.source), root, vars: self.vars.clone() }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(f, &self.vars)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Expression(format!("{msg} at byte {}", self.pos))
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

    fn expect(&mut self, ch: u8) -> Result<()> {
        if self.peek() == Some(ch) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", ch as char)))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.product()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.product()?;
            lhs = if op == b'+' { Add(Box::new(lhs), Box::new(rhs)) } else { Sub(Box::new(lhs), Box::new(rhs)) };
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == b'*' { Mul(Box::new(lhs), Box::new(rhs)) } else { Div(Box::new(lhs), Box::new(rhs)) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(ch) if ch.is_ascii_digit() || ch == b'.' => self.number(),
            Some(ch) if ch.is_ascii_alphabetic() || ch == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Var(i));
                }
                if let Some(f) = Func::from_name(name) {
                    self.expect(b'(')?;
                    let arg = self.expr()?;
                    self.expect(b')')?;
                    return Ok(Call(f, Box::new(arg)));
                }
                match name {
                    "pi" => Ok(c(std::f64::consts::PI)),
                    "e" => Ok(c(std::f64::consts::E)),
                    _ => {
                        self.pos = start;
                        Err(self.error(&format!("unknown name '{name}'")))
                    }
                }
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let s = self.src;
        while self.pos < s.len() && (s[self.pos].is_ascii_digit() || s[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < s.len() && (s[self.pos] == b'+' || s[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < s.len() && s[self.pos].is_ascii_digit() {
                while self.pos < s.len() && s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(c).map_err(|_| {
            self.pos = start;
            self.error(&format!("malformed number '{text}'"))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("1 + 2*3^2^0.5 - -4/2", &[]).unwrap();
        let expected = 1.0 + 2.0 * 3f64.powf(2f64.powf(0.5)) + 2.0;
        assert!((e.eval(&[]) - expected).abs() < 1e-12);
        let e = Expr::parse("-x^2", &["x"]).unwrap();
        assert_eq!(e.eval(&[3.0]), -9.0);
    }

    #[test]
    fn variables_functions_constants() {
        let e = Expr::parse("sqrt(1 + x^2 + y^2) - 1 + sin(pi*t)", &["x", "y", "t"]).unwrap();
        let v = e.eval(&[3.0, 4.0, 0.5]);
        assert!((v - ((26f64).sqrt() - 1.0 + 1.0)).abs() < 1e-12);
        assert!((Expr::parse("2.5e-1 + e", &[]).unwrap().eval(&[]) - (0.25 + std::f64::consts::E)).abs() < 1e-15);
    }

    #[test]
    fn malformed_inputs() {
        for bad in ["", "1 +", "foo(2)", "sin 2", "(1", "x y", "3..2", "z"] {
            assert!(Expr::parse(bad, &["x", "y"]).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let cases = ["x^3 - 2*x", "sqrt(1 + x^2) - 1", "sin(x)*exp(-x/3)", "x^x", "tanh(2*x)/(1+x^2)", "log(2 + cos(x))"];
        for src in cases {
            let e = Expr::parse(src, &["x"]).unwrap();
            let d = e.derivative(0);
            for x in [0.3, 0.9, 1.7] {
                let h = 1e-6;
                let fd = (e.eval(&[x + h]) - e.eval(&[x - h])) / (2.0 * h);
                let an = d.eval(&[x]);
                assert!((fd - an).abs() <= 1e-6 * (1.0 + an.abs()), "{src} at {x}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn display_reparses_to_same_values() {
        let e = Expr::parse("x^2*sin(y) - 3/(1+x)", &["x", "y"]).unwrap();
        let printed = e.to_string();
        let back = Expr::parse(&printed, &["x", "y"]).unwrap();
        assert_eq!(back.eval(&[0.7, -0.2]), e.eval(&[0.7, -0.2]));
    }
}
