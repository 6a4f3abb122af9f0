use thiserror::Error;

use super::{Differentiator, EvalError, Evaluator, Expr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("vector field dimension must be 5 or 7, got {0}")]
    BadDimension(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// A vector field `Σ Vⁱ ∂ᵢ` with expression components. Component `i`
/// is the coefficient of the partial derivative along variable `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    comps: Vec<Expr>,
}

impl VectorField {
    pub fn new(comps: Vec<Expr>) -> Result<Self, FieldError> {
        match comps.len() {
            5 | 7 => Ok(VectorField { comps }),
            n => Err(FieldError::BadDimension(n)),
        }
    }

    pub fn zero(dim: usize) -> Result<Self, FieldError> {
        VectorField::new(vec![Expr::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.comps[i]
    }

    /// Pads a 5-dimensional field with zero fiber components.
    pub fn extend_to(&self, dim: usize) -> VectorField {
        let mut comps = self.comps.clone();
        comps.resize(dim.max(comps.len()), Expr::zero());
        VectorField { comps }
    }

    pub fn scale(&self, by: &Expr) -> VectorField {
        VectorField { comps: self.comps.iter().map(|c| by.mul(c)).collect() }
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField, FieldError> {
        self.check_dim(other)?;
        Ok(VectorField { comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect() })
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField, FieldError> {
        self.check_dim(other)?;
        Ok(VectorField { comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.sub(b)).collect() })
    }

    fn check_dim(&self, other: &VectorField) -> Result<(), FieldError> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(FieldError::DimensionMismatch(self.dim(), other.dim()))
        }
    }

    /// The derivation `f ↦ Σ Vʲ ∂ⱼ f`.
    pub fn apply(&self, f: &Expr) -> Expr {
        let mut ctx = DiffContext::new(self.dim());
        ctx.apply(self, f)
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>, EvalError> {
        Evaluator::new(point).eval_all(&self.comps)
    }
}

/// One memoizing differentiator per variable, shared across many
/// derivations of related expressions.
pub(crate) struct DiffContext {
    ds: Vec<Differentiator>,
}

impl DiffContext {
    pub(crate) fn new(dim: usize) -> Self {
        DiffContext { ds: (0..dim).map(Differentiator::new).collect() }
    }

    pub(crate) fn diff(&mut self, e: &Expr, var: usize) -> Expr {
        self.ds[var].diff(e)
    }

    pub(crate) fn apply(&mut self, v: &VectorField, f: &Expr) -> Expr {
        let mut acc = Expr::zero();
        for (j, vj) in v.comps.iter().enumerate() {
            if vj.is_zero() {
                continue;
            }
            let d = self.diff(f, j);
            if !d.is_zero() {
                acc = acc.add(&vj.mul(&d));
            }
        }
        acc
    }

    pub(crate) fn bracket(&mut self, v: &VectorField, w: &VectorField) -> VectorField {
        let comps = (0..v.dim())
            .map(|i| {
                let a = self.apply(v, &w.comps[i]);
                let b = self.apply(w, &v.comps[i]);
                a.sub(&b)
            })
            .collect();
        VectorField { comps }
    }
}

/// Lie bracket `[V, W]ⁱ = V(Wⁱ) − W(Vⁱ)`.
pub fn lie_bracket(v: &VectorField, w: &VectorField) -> Result<VectorField, FieldError> {
    v.check_dim(w)?;
    Ok(DiffContext::new(v.dim()).bracket(v, w))
}

impl VectorField {
    pub fn bracket(&self, other: &VectorField) -> Result<VectorField, FieldError> {
        lie_bracket(self, other)
    }
}
