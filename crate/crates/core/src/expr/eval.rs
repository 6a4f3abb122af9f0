use std::collections::HashMap;

use num_traits::ToPrimitive;
use thiserror::Error;

use super::{Expr, Func, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero in `{subtree}`")]
    DivisionByZero { subtree: String },
    #[error("non-finite value in `{subtree}`")]
    NonFinite { subtree: String },
    #[error("variable index {index} outside point of length {len}")]
    MissingVariable { index: usize, len: usize },
}

/// Numeric evaluation at a fixed point, memoized per node.
pub struct Evaluator<'p> {
    point: &'p [f64],
    cache: HashMap<usize, f64>,
    pinned: Vec<Expr>,
}

impl<'p> Evaluator<'p> {
    pub fn new(point: &'p [f64]) -> Self {
        Evaluator { point, cache: HashMap::new(), pinned: Vec::new() }
    }

    pub fn eval(&mut self, e: &Expr) -> Result<f64, EvalError> {
        if let Some(v) = self.cache.get(&e.id()) {
            return Ok(*v);
        }
        let v = match e.node() {
            Node::Const(c) => c.to_f64().unwrap_or(f64::NAN),
            Node::Var(i) => *self
                .point
                .get(*i)
                .ok_or(EvalError::MissingVariable { index: *i, len: self.point.len() })?,
            Node::Neg(a) => -self.eval(a)?,
            Node::Add(a, b) => self.eval(a)? + self.eval(b)?,
            Node::Sub(a, b) => self.eval(a)? - self.eval(b)?,
            Node::Mul(a, b) => self.eval(a)? * self.eval(b)?,
            Node::Div(a, b) => {
                let num = self.eval(a)?;
                let den = self.eval(b)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero { subtree: e.to_string() });
                }
                num / den
            }
            Node::Pow(a, n) => {
                let base = self.eval(a)?;
                if base == 0.0 && *n < 0 {
                    return Err(EvalError::DivisionByZero { subtree: e.to_string() });
                }
                base.powi(*n)
            }
            Node::Func(func, a) => {
                let x = self.eval(a)?;
                match func {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                }
            }
        };
        if !v.is_finite() {
            return Err(EvalError::NonFinite { subtree: e.to_string() });
        }
        self.pinned.push(e.clone());
        self.cache.insert(e.id(), v);
        Ok(v)
    }

    pub fn eval_all(&mut self, exprs: &[Expr]) -> Result<Vec<f64>, EvalError> {
        exprs.iter().map(|e| self.eval(e)).collect()
    }
}
