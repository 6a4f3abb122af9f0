//! Expression trees for vector-field coefficients.
//!
//! Expressions are immutable, reference-counted DAGs. Subtrees are shared
//! freely, so differentiation and evaluation memoize on node identity and
//! stay linear in the number of distinct nodes.

mod diff;
mod eval;
mod field;
mod parse;
mod taylor;

use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, Zero};

pub use diff::Differentiator;
pub use eval::{EvalError, Evaluator};
pub use field::{lie_bracket, FieldError, VectorField};
pub(crate) use field::DiffContext;
pub use parse::{parse_expression, ParseError};
pub use taylor::{MonomialTable, Poly, TaylorEvaluator};

/// Exact rational constant.
pub type Rational = Ratio<i64>;

/// Variable names of the 7-dimensional extended space: base coordinates
/// followed by the two fiber coordinates.
pub const STANDARD_VARS: [&str; 7] = ["x1", "x2", "x3", "x4", "x5", "u4", "u5"];

/// Index of `u4` in [`STANDARD_VARS`].
pub const U4: usize = 5;
/// Index of `u5` in [`STANDARD_VARS`].
pub const U5: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            _ => None,
        }
    }
}

#[derive(Debug, PartialEq)]
pub enum Node {
    Const(Rational),
    Var(usize),
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, i32),
    Func(Func, Expr),
}

/// A closed-form scalar expression.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Expr {
    fn new(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn constant(value: Rational) -> Expr {
        Expr::new(Node::Const(value))
    }

    pub fn int(value: i64) -> Expr {
        Expr::constant(Rational::from_integer(value))
    }

    pub fn ratio(num: i64, den: i64) -> Expr {
        Expr::constant(Rational::new(num, den))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(index: usize) -> Expr {
        Expr::new(Node::Var(index))
    }

    pub fn as_const(&self) -> Option<Rational> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_one())
    }

    pub fn neg(&self) -> Expr {
        match &*self.0 {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::new(Node::Neg(self.clone())),
        }
    }

    pub fn add(&self, rhs: &Expr) -> Expr {
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            if let Some(c) = a.checked_add(&b) {
                return Expr::constant(c);
            }
        }
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        Expr::new(Node::Add(self.clone(), rhs.clone()))
    }

    pub fn sub(&self, rhs: &Expr) -> Expr {
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            if let Some(c) = a.checked_sub(&b) {
                return Expr::constant(c);
            }
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.neg();
        }
        if self.ptr_eq(rhs) {
            return Expr::zero();
        }
        Expr::new(Node::Sub(self.clone(), rhs.clone()))
    }

    pub fn mul(&self, rhs: &Expr) -> Expr {
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            if let Some(c) = a.checked_mul(&b) {
                return Expr::constant(c);
            }
        }
        for (k, other) in [(self, rhs), (rhs, self)] {
            if let Some(c) = k.as_const() {
                if c.is_zero() {
                    return Expr::zero();
                }
                if c.is_one() {
                    return other.clone();
                }
                if c == -Rational::one() {
                    return other.neg();
                }
                if let Node::Mul(k, x) = &*other.0 {
                    if let Some(c2) = k.as_const().and_then(|d| d.checked_mul(&c)) {
                        return Expr::constant(c2).mul(x);
                    }
                }
            }
        }
        Expr::new(Node::Mul(self.clone(), rhs.clone()))
    }

    pub fn div(&self, rhs: &Expr) -> Expr {
        if let Some(b) = rhs.as_const() {
            if !b.is_zero() {
                if let Some(a) = self.as_const() {
                    if let Some(c) = a.checked_div(&b) {
                        return Expr::constant(c);
                    }
                }
                if b.is_one() {
                    return self.clone();
                }
                if let Node::Mul(k, x) = &*self.0 {
                    if let Some(c) = k.as_const().and_then(|a| a.checked_div(&b)) {
                        return Expr::constant(c).mul(x);
                    }
                }
                return Expr::constant(b.recip()).mul(self);
            }
        }
        if self.is_zero() {
            return Expr::zero();
        }
        Expr::new(Node::Div(self.clone(), rhs.clone()))
    }

    pub fn powi(&self, n: i32) -> Expr {
        if n == 0 {
            return Expr::one();
        }
        if n == 1 {
            return self.clone();
        }
        if let Some(c) = self.as_const() {
            if let Some(v) = checked_pow(c, n) {
                return Expr::constant(v);
            }
        }
        Expr::new(Node::Pow(self.clone(), n))
    }

    pub fn apply(func: Func, arg: &Expr) -> Expr {
        if arg.is_zero() {
            return match func {
                Func::Sin => Expr::zero(),
                Func::Cos | Func::Exp => Expr::one(),
            };
        }
        Expr::new(Node::Func(func, arg.clone()))
    }

    pub fn sin(&self) -> Expr {
        Expr::apply(Func::Sin, self)
    }

    pub fn cos(&self) -> Expr {
        Expr::apply(Func::Cos, self)
    }

    pub fn exp(&self) -> Expr {
        Expr::apply(Func::Exp, self)
    }

    /// Scales by an exact rational.
    pub fn scale(&self, c: Rational) -> Expr {
        Expr::constant(c).mul(self)
    }

    /// Sum of a sequence; the empty sum is zero.
    pub fn sum<'a>(terms: impl IntoIterator<Item = &'a Expr>) -> Expr {
        terms.into_iter().fold(Expr::zero(), |acc, t| acc.add(t))
    }

    /// Exact partial derivative with respect to variable `var`.
    pub fn diff(&self, var: usize) -> Expr {
        Differentiator::new(var).diff(self)
    }

    /// Evaluates at `point` (indexed by variable).
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        Evaluator::new(point).eval(self)
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        let mut best = None;
        while let Some(e) = stack.pop() {
            if !seen.insert(e.id()) {
                continue;
            }
            match e.node() {
                Node::Const(_) => {}
                Node::Var(i) => best = best.max(Some(*i)),
                Node::Neg(a) | Node::Pow(a, _) | Node::Func(_, a) => stack.push(a.clone()),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
            }
        }
        best
    }

    /// Replaces variables by expressions; `values[i]` of `None` keeps
    /// variable `i`.
    pub fn substitute(&self, values: &[Option<Expr>]) -> Expr {
        fn go(e: &Expr, values: &[Option<Expr>], memo: &mut std::collections::HashMap<usize, Expr>) -> Expr {
            if let Some(r) = memo.get(&e.id()) {
                return r.clone();
            }
            let r = match e.node() {
                Node::Const(_) => e.clone(),
                Node::Var(i) => match values.get(*i) {
                    Some(Some(v)) => v.clone(),
                    _ => e.clone(),
                },
                Node::Neg(a) => go(a, values, memo).neg(),
                Node::Add(a, b) => go(a, values, memo).add(&go(b, values, memo)),
                Node::Sub(a, b) => go(a, values, memo).sub(&go(b, values, memo)),
                Node::Mul(a, b) => go(a, values, memo).mul(&go(b, values, memo)),
                Node::Div(a, b) => go(a, values, memo).div(&go(b, values, memo)),
                Node::Pow(a, n) => go(a, values, memo).powi(*n),
                Node::Func(f, a) => Expr::apply(*f, &go(a, values, memo)),
            };
            // the input DAG outlives the memo, so ids stay unique
            memo.insert(e.id(), r.clone());
            r
        }
        go(self, values, &mut std::collections::HashMap::new())
    }

    /// Number of distinct nodes in the DAG.
    pub fn node_count(&self) -> usize {
        count_nodes(std::slice::from_ref(self))
    }

    /// Renders with the given variable names.
    pub fn display_with<'a>(&'a self, names: &'a [&'a str]) -> Display<'a> {
        Display { expr: self, names }
    }
}

/// Distinct nodes across several roots.
pub fn count_nodes(roots: &[Expr]) -> usize {
    let mut seen = std::collections::HashSet::new();
    let mut stack: Vec<Expr> = roots.to_vec();
    while let Some(e) = stack.pop() {
        if !seen.insert(e.id()) {
            continue;
        }
        match e.node() {
            Node::Const(_) | Node::Var(_) => {}
            Node::Neg(a) | Node::Pow(a, _) | Node::Func(_, a) => stack.push(a.clone()),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                stack.push(a.clone());
                stack.push(b.clone());
            }
        }
    }
    seen.len()
}

fn checked_pow(base: Rational, n: i32) -> Option<Rational> {
    if n < 0 {
        if base.is_zero() {
            return None;
        }
        return checked_pow(base.recip(), -n);
    }
    let mut acc = Rational::one();
    for _ in 0..n {
        acc = acc.checked_mul(&base)?;
    }
    Some(acc)
}

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(node: &Node) -> u8 {
    match node {
        Node::Add(..) | Node::Sub(..) => PREC_SUM,
        Node::Mul(..) | Node::Div(..) => PREC_PRODUCT,
        Node::Neg(_) => PREC_UNARY,
        Node::Pow(..) => PREC_POWER,
        Node::Const(c) if !c.is_integer() || c.is_negative() => PREC_ATOM,
        Node::Const(_) | Node::Var(_) | Node::Func(..) => PREC_ATOM,
    }
}

/// Printer whose output re-parses to the same tree.
pub struct Display<'a> {
    expr: &'a Expr,
    names: &'a [&'a str],
}

impl Display<'_> {
    fn write(&self, f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
        let prec = precedence(e.node());
        let paren = prec < min_prec;
        if paren {
            f.write_str("(")?;
        }
        match e.node() {
            Node::Const(c) => {
                if c.is_integer() && !c.is_negative() {
                    write!(f, "{}", c.numer())?;
                } else if c.is_integer() {
                    write!(f, "({})", c.numer())?;
                } else {
                    write!(f, "({}/{})", c.numer(), c.denom())?;
                }
            }
            Node::Var(i) => match self.names.get(*i) {
                Some(name) => f.write_str(name)?,
                None => write!(f, "v{i}")?,
            },
            Node::Neg(a) => {
                f.write_str("-")?;
                self.write(f, a, PREC_UNARY)?;
            }
            Node::Add(a, b) | Node::Sub(a, b) => {
                self.write(f, a, PREC_SUM)?;
                f.write_str(if matches!(e.node(), Node::Add(..)) { " + " } else { " - " })?;
                self.write(f, b, PREC_SUM + 1)?;
            }
            Node::Mul(a, b) | Node::Div(a, b) => {
                self.write(f, a, PREC_PRODUCT)?;
                f.write_str(if matches!(e.node(), Node::Mul(..)) { "*" } else { "/" })?;
                self.write(f, b, PREC_PRODUCT + 1)?;
            }
            Node::Pow(a, n) => {
                self.write(f, a, PREC_ATOM)?;
                if *n < 0 {
                    write!(f, "^({n})")?;
                } else {
                    write!(f, "^{n}")?;
                }
            }
            Node::Func(func, a) => {
                write!(f, "{}(", func.name())?;
                self.write(f, a, 0)?;
                f.write_str(")")?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, self.expr, 0)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Display { expr: self, names: &STANDARD_VARS }.fmt(f)
    }
}
