//! Closed-form scalar expressions of chart coordinates with exact 2-jet
//! evaluation (value, gradient, Hessian) by second-order forward-mode
//! differentiation. No truncation error: finite differences exist in this
//! crate only as test oracles.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' factor)?
//! base   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')' | '-' base
//! ```
//!
//! `IDENT` is `x1..xN`, `pi`, `e`, or one of `exp log sin cos tanh sqrt`.
//! Note that per this grammar unary minus binds tighter than `^`, so
//! `-x1^2` is `(-x1)^2`. Non-smooth functions (`abs`, ...) are not part of
//! the grammar. A power `f^g` with a constant integer exponent is evaluated
//! by repeated multiplication (so negative bases work); all other powers are
//! evaluated as `exp(g*log f)` and require a positive base at evaluation
//! time, not at parse time.

mod jet;
mod parse;

pub use jet::Jet2;
pub use parse::ParseError;

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum FuncKind {
    Exp,
    Log,
    Sin,
    Cos,
    Tanh,
    Sqrt,
}

impl FuncKind {
    pub(crate) fn name(self) -> &'static str {
        match self {
            FuncKind::Exp => "exp",
            FuncKind::Log => "log",
            FuncKind::Sin => "sin",
            FuncKind::Cos => "cos",
            FuncKind::Tanh => "tanh",
            FuncKind::Sqrt => "sqrt",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => FuncKind::Exp,
            "log" => FuncKind::Log,
            "sin" => FuncKind::Sin,
            "cos" => FuncKind::Cos,
            "tanh" => FuncKind::Tanh,
            "sqrt" => FuncKind::Sqrt,
            _ => return None,
        })
    }
}

/// Expression tree node; children are arena indices.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Number(f64),
    Pi,
    E,
    /// 0-based coordinate index (rendered as `x{i+1}`).
    Var(usize),
    Neg(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    /// Power with a constant integer exponent, evaluated via `powi`.
    PowInt(usize, i32),
    /// General power, evaluated as `exp(rhs * log lhs)`.
    Pow(usize, usize),
    Func(FuncKind, usize),
}

/// A parsed closed-form function of `arity` chart coordinates.
///
/// Immutable after construction; evaluation is a pure function, so values may
/// be shared and evaluated from any number of threads concurrently.
#[derive(Debug, Clone)]
pub struct ScalarExpression {
    source: String,
    arity: usize,
    nodes: Vec<Node>,
    root: usize,
}

/// Evaluation failure: the expression is not defined (or not differentiable)
/// at the requested point.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("log of non-positive value {0}")]
    LogNonPositive(f64),
    #[error("sqrt domain error at value {0}")]
    SqrtDomain(f64),
    #[error("zero raised to a negative power")]
    ZeroToNegativePower,
    #[error("point dimension {got} does not match expression arity {expected}")]
    ArityMismatch { expected: usize, got: usize },
}

/// Numeric carrier for generic tree evaluation: plain `f64` for values,
/// [`Jet2`] for exact second-order forward-mode derivatives.
pub(crate) trait EvalNum: Copy {
    /// Whether `sqrt` must reject 0 (derivative singular there).
    const NEEDS_DERIVATIVES: bool;
    fn from_const(c: f64) -> Self;
    fn primal(&self) -> f64;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn div(self, o: Self) -> Self;
    fn neg(self) -> Self;
    fn exp(self) -> Self;
    fn log(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, k: i32) -> Self;
}

impl EvalNum for f64 {
    const NEEDS_DERIVATIVES: bool = false;
    fn from_const(c: f64) -> Self {
        c
    }
    fn primal(&self) -> f64 {
        *self
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn div(self, o: Self) -> Self {
        self / o
    }
    fn neg(self) -> Self {
        -self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn log(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
}

/// Parse `text` as a function of coordinates `x1..x{arity}`.
pub fn parse(text: &str, arity: usize) -> Result<ScalarExpression, ParseError> {
    parse::parse(text, arity)
}

/// Exact value, gradient, and Hessian of `expr` at `point`.
pub fn jet2(expr: &ScalarExpression, point: &[f64]) -> Result<Jet2, EvalError> {
    expr.jet2(point)
}

impl ScalarExpression {
    pub(crate) fn from_parts(source: String, arity: usize, nodes: Vec<Node>, root: usize) -> Self {
        ScalarExpression {
            source,
            arity,
            nodes,
            root,
        }
    }

    /// The text this expression was parsed from (or its canonical rendering,
    /// for expressions built programmatically).
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Evaluate the value at `point`.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64, EvalError> {
        self.check_point(point)?;
        self.eval_node::<f64>(self.root, point)
    }

    /// Evaluate the full 2-jet at `point`.
    pub fn jet2(&self, point: &[f64]) -> Result<Jet2, EvalError> {
        self.check_point(point)?;
        let n = self.arity;
        let mut vars = [Jet2::constant(0.0); crate::linalg::MAX_DIM];
        for (i, &x) in point.iter().enumerate() {
            vars[i] = Jet2::variable(n, i, x);
        }
        self.eval_node::<Jet2>(self.root, &vars[..n])
            .map(|jet| jet.promoted(n))
    }

    fn check_point(&self, point: &[f64]) -> Result<(), EvalError> {
        if point.len() != self.arity {
            return Err(EvalError::ArityMismatch {
                expected: self.arity,
                got: point.len(),
            });
        }
        Ok(())
    }

    fn eval_node<T: EvalNum>(&self, idx: usize, vars: &[T]) -> Result<T, EvalError> {
        Ok(match self.nodes[idx] {
            Node::Number(c) => T::from_const(c),
            Node::Pi => T::from_const(std::f64::consts::PI),
            Node::E => T::from_const(std::f64::consts::E),
            Node::Var(i) => vars[i],
            Node::Neg(a) => self.eval_node::<T>(a, vars)?.neg(),
            Node::Add(a, b) => {
                let (a, b) = (self.eval_node::<T>(a, vars)?, self.eval_node::<T>(b, vars)?);
                a.add(b)
            }
            Node::Sub(a, b) => {
                let (a, b) = (self.eval_node::<T>(a, vars)?, self.eval_node::<T>(b, vars)?);
                a.sub(b)
            }
            Node::Mul(a, b) => {
                let (a, b) = (self.eval_node::<T>(a, vars)?, self.eval_node::<T>(b, vars)?);
                a.mul(b)
            }
            Node::Div(a, b) => {
                let (a, b) = (self.eval_node::<T>(a, vars)?, self.eval_node::<T>(b, vars)?);
                if b.primal() == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                a.div(b)
            }
            Node::PowInt(a, k) => {
                let a = self.eval_node::<T>(a, vars)?;
                if k < 0 && a.primal() == 0.0 {
                    return Err(EvalError::ZeroToNegativePower);
                }
                a.powi(k)
            }
            Node::Pow(a, b) => {
                let (a, b) = (self.eval_node::<T>(a, vars)?, self.eval_node::<T>(b, vars)?);
                if a.primal() <= 0.0 {
                    return Err(EvalError::LogNonPositive(a.primal()));
                }
                b.mul(a.log()).exp()
            }
            Node::Func(kind, a) => {
                let a = self.eval_node::<T>(a, vars)?;
                match kind {
                    FuncKind::Exp => a.exp(),
                    FuncKind::Log => {
                        if a.primal() <= 0.0 {
                            return Err(EvalError::LogNonPositive(a.primal()));
                        }
                        a.log()
                    }
                    FuncKind::Sin => a.sin(),
                    FuncKind::Cos => a.cos(),
                    FuncKind::Tanh => a.tanh(),
                    FuncKind::Sqrt => {
                        let v = a.primal();
                        if v < 0.0 || (T::NEEDS_DERIVATIVES && v == 0.0) {
                            return Err(EvalError::SqrtDomain(v));
                        }
                        a.sqrt()
                    }
                }
            }
        })
    }

    // ---- programmatic constructors ------------------------------------

    /// Constant expression. Negative values are stored as a negated positive
    /// literal so the rendering stays inside the grammar.
    pub fn constant(arity: usize, value: f64) -> Self {
        assert!(value.is_finite(), "constant must be finite");
        let (nodes, root) = if value < 0.0 || (value == 0.0 && value.is_sign_negative()) {
            (vec![Node::Number(-value), Node::Neg(0)], 1)
        } else {
            (vec![Node::Number(value)], 0)
        };
        let mut e = ScalarExpression::from_parts(String::new(), arity, nodes, root);
        e.source = e.render();
        e
    }

    /// Coordinate `x{index}` with a 1-based index.
    pub fn coordinate(arity: usize, index: usize) -> Self {
        assert!(
            index >= 1 && index <= arity,
            "coordinate index out of range"
        );
        let mut e =
            ScalarExpression::from_parts(String::new(), arity, vec![Node::Var(index - 1)], 0);
        e.source = e.render();
        e
    }

    fn unary(&self, build: impl FnOnce(usize) -> Node) -> Self {
        let mut nodes = self.nodes.clone();
        nodes.push(build(self.root));
        let root = nodes.len() - 1;
        let mut e = ScalarExpression::from_parts(String::new(), self.arity, nodes, root);
        e.source = e.render();
        e
    }

    fn binary(&self, other: &Self, build: impl FnOnce(usize, usize) -> Node) -> Self {
        assert_eq!(
            self.arity, other.arity,
            "arity mismatch in expression combinator"
        );
        let mut nodes = self.nodes.clone();
        let offset = nodes.len();
        nodes.extend(
            other
                .nodes
                .iter()
                .cloned()
                .map(|node| shift_node(node, offset)),
        );
        nodes.push(build(self.root, other.root + offset));
        let root = nodes.len() - 1;
        let mut e = ScalarExpression::from_parts(String::new(), self.arity, nodes, root);
        e.source = e.render();
        e
    }

    pub fn neg(&self) -> Self {
        self.unary(Node::Neg)
    }
    pub fn add(&self, other: &Self) -> Self {
        self.binary(other, Node::Add)
    }
    pub fn sub(&self, other: &Self) -> Self {
        self.binary(other, Node::Sub)
    }
    pub fn mul(&self, other: &Self) -> Self {
        self.binary(other, Node::Mul)
    }
    pub fn div(&self, other: &Self) -> Self {
        self.binary(other, Node::Div)
    }
    /// `c * self`.
    pub fn scaled(&self, c: f64) -> Self {
        ScalarExpression::constant(self.arity, c).mul(self)
    }
    pub fn pow_int(&self, k: i32) -> Self {
        self.unary(|root| Node::PowInt(root, k))
    }
    /// `self^c`, taking the integer fast path when `c` is integral.
    pub fn pow_const(&self, c: f64) -> Self {
        if c.fract() == 0.0 && c.abs() <= 1e6 {
            self.pow_int(c as i32)
        } else {
            self.binary(&ScalarExpression::constant(self.arity, c), Node::Pow)
        }
    }
    pub fn exp(&self) -> Self {
        self.unary(|root| Node::Func(FuncKind::Exp, root))
    }
    pub fn log(&self) -> Self {
        self.unary(|root| Node::Func(FuncKind::Log, root))
    }
    pub fn sqrt(&self) -> Self {
        self.unary(|root| Node::Func(FuncKind::Sqrt, root))
    }
    pub fn sin(&self) -> Self {
        self.unary(|root| Node::Func(FuncKind::Sin, root))
    }
    pub fn cos(&self) -> Self {
        self.unary(|root| Node::Func(FuncKind::Cos, root))
    }

    // ---- rendering -----------------------------------------------------

    /// Canonical text form; reparsing it reproduces the same tree.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_node(&mut out, self.root, 0);
        out
    }

    /// Precedence levels: 0 expr, 1 term, 2 factor, 3 base.
    fn node_level(&self, idx: usize) -> u8 {
        match self.nodes[idx] {
            Node::Add(..) | Node::Sub(..) => 0,
            Node::Mul(..) | Node::Div(..) => 1,
            Node::PowInt(..) | Node::Pow(..) => 2,
            _ => 3,
        }
    }

    fn render_node(&self, out: &mut String, idx: usize, min_level: u8) {
        let level = self.node_level(idx);
        let parens = level < min_level;
        if parens {
            out.push('(');
        }
        match &self.nodes[idx] {
            Node::Number(c) => out.push_str(&format!("{c}")),
            Node::Pi => out.push_str("pi"),
            Node::E => out.push('e'),
            Node::Var(i) => out.push_str(&format!("x{}", i + 1)),
            Node::Neg(a) => {
                out.push('-');
                self.render_node(out, *a, 3);
            }
            Node::Add(a, b) => {
                self.render_node(out, *a, 0);
                out.push_str(" + ");
                self.render_node(out, *b, 1);
            }
            Node::Sub(a, b) => {
                self.render_node(out, *a, 0);
                out.push_str(" - ");
                self.render_node(out, *b, 1);
            }
            Node::Mul(a, b) => {
                self.render_node(out, *a, 1);
                out.push('*');
                self.render_node(out, *b, 2);
            }
            Node::Div(a, b) => {
                self.render_node(out, *a, 1);
                out.push('/');
                self.render_node(out, *b, 2);
            }
            Node::PowInt(a, k) => {
                self.render_node(out, *a, 3);
                out.push('^');
                if *k < 0 {
                    out.push_str(&format!("-{}", k.unsigned_abs()));
                } else {
                    out.push_str(&format!("{k}"));
                }
            }
            Node::Pow(a, b) => {
                self.render_node(out, *a, 3);
                out.push('^');
                self.render_node(out, *b, 2);
            }
            Node::Func(kind, a) => {
                out.push_str(kind.name());
                out.push('(');
                self.render_node(out, *a, 0);
                out.push(')');
            }
        }
        if parens {
            out.push(')');
        }
    }

    fn node_eq(&self, idx: usize, other: &Self, odx: usize) -> bool {
        match (&self.nodes[idx], &other.nodes[odx]) {
            (Node::Number(a), Node::Number(b)) => a == b,
            (Node::Pi, Node::Pi) | (Node::E, Node::E) => true,
            (Node::Var(a), Node::Var(b)) => a == b,
            (Node::Neg(a), Node::Neg(b)) => self.node_eq(*a, other, *b),
            (Node::Add(a1, a2), Node::Add(b1, b2))
            | (Node::Sub(a1, a2), Node::Sub(b1, b2))
            | (Node::Mul(a1, a2), Node::Mul(b1, b2))
            | (Node::Div(a1, a2), Node::Div(b1, b2))
            | (Node::Pow(a1, a2), Node::Pow(b1, b2)) => {
                self.node_eq(*a1, other, *b1) && self.node_eq(*a2, other, *b2)
            }
            (Node::PowInt(a, j), Node::PowInt(b, k)) => j == k && self.node_eq(*a, other, *b),
            (Node::Func(fa, a), Node::Func(fb, b)) => fa == fb && self.node_eq(*a, other, *b),
            _ => false,
        }
    }
}

fn shift_node(node: Node, offset: usize) -> Node {
    match node {
        Node::Neg(a) => Node::Neg(a + offset),
        Node::Add(a, b) => Node::Add(a + offset, b + offset),
        Node::Sub(a, b) => Node::Sub(a + offset, b + offset),
        Node::Mul(a, b) => Node::Mul(a + offset, b + offset),
        Node::Div(a, b) => Node::Div(a + offset, b + offset),
        Node::Pow(a, b) => Node::Pow(a + offset, b + offset),
        Node::PowInt(a, k) => Node::PowInt(a + offset, k),
        Node::Func(f, a) => Node::Func(f, a + offset),
        leaf => leaf,
    }
}

/// Structural tree equality (arena layout and source text are ignored).
impl PartialEq for ScalarExpression {
    fn eq(&self, other: &Self) -> bool {
        self.arity == other.arity && self.node_eq(self.root, other, other.root)
    }
}

impl fmt::Display for ScalarExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}
