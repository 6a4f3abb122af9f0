use std::collections::HashMap;

use super::{Expr, Func, Node, Rational};

/// Symbolic partial derivative with respect to one variable, memoized on
/// node identity so shared subtrees are differentiated once.
pub struct Differentiator {
    var: usize,
    cache: HashMap<usize, Expr>,
    // keeps cached keys alive so their addresses cannot be reused
    pinned: Vec<Expr>,
}

impl Differentiator {
    pub fn new(var: usize) -> Self {
        Differentiator { var, cache: HashMap::new(), pinned: Vec::new() }
    }

    pub fn var(&self) -> usize {
        self.var
    }

    pub fn diff(&mut self, e: &Expr) -> Expr {
        if let Some(d) = self.cache.get(&e.id()) {
            return d.clone();
        }
        let d = match e.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(i) => {
                if *i == self.var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Neg(a) => self.diff(a).neg(),
            Node::Add(a, b) => self.diff(a).add(&self.diff(b)),
            Node::Sub(a, b) => self.diff(a).sub(&self.diff(b)),
            Node::Mul(a, b) => {
                let da = self.diff(a);
                let db = self.diff(b);
                da.mul(b).add(&a.mul(&db))
            }
            Node::Div(a, b) => {
                let da = self.diff(a);
                let db = self.diff(b);
                let first = da.div(b);
                if db.is_zero() {
                    first
                } else {
                    first.sub(&a.mul(&db).div(&b.powi(2)))
                }
            }
            Node::Pow(a, n) => {
                let da = self.diff(a);
                if da.is_zero() {
                    Expr::zero()
                } else {
                    Expr::constant(Rational::from_integer(i64::from(*n)))
                        .mul(&a.powi(n - 1))
                        .mul(&da)
                }
            }
            Node::Func(func, a) => {
                let da = self.diff(a);
                if da.is_zero() {
                    Expr::zero()
                } else {
                    let outer = match func {
                        Func::Sin => a.cos(),
                        Func::Cos => a.sin().neg(),
                        Func::Exp => e.clone(),
                    };
                    outer.mul(&da)
                }
            }
        };
        self.pinned.push(e.clone());
        self.cache.insert(e.id(), d.clone());
        d
    }
}
