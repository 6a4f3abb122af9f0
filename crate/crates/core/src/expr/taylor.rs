//! Truncated multivariate Taylor polynomials, used to evaluate iterated
//! brackets at a point without building their closed forms.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::ToPrimitive;

use super::{EvalError, Expr, Func, Node};

/// Coefficients over the monomials of a [`MonomialTable`].
pub type Poly = Vec<f64>;

/// Monomials in `nvars` variables of total degree `≤ degree`, ordered by
/// degree, with product and derivative index tables.
pub struct MonomialTable {
    nvars: usize,
    degree: usize,
    degs: Vec<usize>,
    // products[i] lists (j, k) with mᵢ·mⱼ = mₖ
    products: Vec<Vec<(u32, u32)>>,
    // derivs[v] lists (k, target, exponent) with ∂ᵥ mₖ = exponent·m_target
    derivs: Vec<Vec<(u32, u32, f64)>>,
    linear: Vec<usize>,
}

fn exponents(nvars: usize, degree: usize) -> Vec<Vec<u8>> {
    fn fill(prefix: &mut Vec<u8>, nvars: usize, remaining: usize, out: &mut Vec<Vec<u8>>) {
        if prefix.len() + 1 == nvars {
            prefix.push(remaining as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=remaining).rev() {
            prefix.push(e as u8);
            fill(prefix, nvars, remaining - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for d in 0..=degree {
        fill(&mut Vec::with_capacity(nvars), nvars, d, &mut out);
    }
    out
}

impl MonomialTable {
    /// Shared table for `(nvars, degree)`.
    pub fn get(nvars: usize, degree: usize) -> Arc<MonomialTable> {
        static TABLES: OnceLock<Mutex<HashMap<(usize, usize), Arc<MonomialTable>>>> = OnceLock::new();
        let tables = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = tables.lock().unwrap_or_else(|p| p.into_inner());
        guard
            .entry((nvars, degree))
            .or_insert_with(|| Arc::new(MonomialTable::build(nvars, degree)))
            .clone()
    }

    fn build(nvars: usize, degree: usize) -> MonomialTable {
        assert!(nvars > 0, "polynomials need at least one variable");
        let exps = exponents(nvars, degree);
        let index: HashMap<&[u8], usize> = exps.iter().enumerate().map(|(i, e)| (e.as_slice(), i)).collect();
        let degs: Vec<usize> = exps.iter().map(|e| e.iter().map(|&x| x as usize).sum()).collect();
        let products = exps
            .iter()
            .enumerate()
            .map(|(i, ei)| {
                let room = degree - degs[i];
                // monomials are sorted by degree, so candidates form a prefix
                let end = degs.partition_point(|&d| d <= room);
                (0..end)
                    .map(|j| {
                        let sum: Vec<u8> = ei.iter().zip(&exps[j]).map(|(a, b)| a + b).collect();
                        (j as u32, index[sum.as_slice()] as u32)
                    })
                    .collect()
            })
            .collect();
        let derivs = (0..nvars)
            .map(|v| {
                exps.iter()
                    .enumerate()
                    .filter(|(_, e)| e[v] > 0)
                    .map(|(k, e)| {
                        let mut lower = e.clone();
                        lower[v] -= 1;
                        (k as u32, index[lower.as_slice()] as u32, e[v] as f64)
                    })
                    .collect()
            })
            .collect();
        let linear = (0..nvars)
            .map(|v| {
                let mut e = vec![0u8; nvars];
                e[v] = 1;
                index.get(e.as_slice()).copied().unwrap_or(usize::MAX)
            })
            .collect();
        MonomialTable { nvars, degree, degs, products, derivs, linear }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.degs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degs.is_empty()
    }

    pub fn constant(&self, v: f64) -> Poly {
        let mut p = vec![0.0; self.len()];
        p[0] = v;
        p
    }

    /// The coordinate `x_var = value + δ_var`.
    pub fn variable(&self, var: usize, value: f64) -> Poly {
        let mut p = self.constant(value);
        if self.degree > 0 {
            p[self.linear[var]] = 1.0;
        }
        p
    }

    pub fn mul(&self, a: &Poly, b: &Poly) -> Poly {
        let mut out = vec![0.0; self.len()];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            for &(j, k) in &self.products[i] {
                out[k as usize] += ai * b[j as usize];
            }
        }
        out
    }

    pub fn deriv(&self, a: &Poly, var: usize) -> Poly {
        let mut out = vec![0.0; self.len()];
        for &(k, target, e) in &self.derivs[var] {
            out[target as usize] += e * a[k as usize];
        }
        out
    }

    /// Drops every term of degree above `degree`.
    pub fn truncate(&self, a: &mut Poly, degree: usize) {
        let end = self.degs.partition_point(|&d| d <= degree);
        for v in &mut a[end..] {
            *v = 0.0;
        }
    }

    /// `Σ coeffs[m] xᵐ` for `x` without constant term.
    fn nilpotent_series(&self, x: &Poly, coeffs: &[f64]) -> Poly {
        let mut acc = self.constant(coeffs.get(self.degree).copied().unwrap_or(0.0));
        for m in (0..self.degree).rev() {
            acc = self.mul(&acc, x);
            acc[0] += coeffs.get(m).copied().unwrap_or(0.0);
        }
        acc
    }

    fn split(&self, a: &Poly) -> (f64, Poly) {
        let mut x = a.clone();
        let c0 = x[0];
        x[0] = 0.0;
        (c0, x)
    }

    pub fn recip(&self, a: &Poly) -> Option<Poly> {
        let (c0, x) = self.split(a);
        if c0 == 0.0 {
            return None;
        }
        // 1/(c₀ + x) = (1/c₀) Σ (−x/c₀)ᵐ
        let coeffs: Vec<f64> = (0..=self.degree).map(|m| (-1.0 / c0).powi(m as i32) / c0).collect();
        Some(self.nilpotent_series(&x, &coeffs))
    }

    pub fn powi(&self, a: &Poly, n: i32) -> Option<Poly> {
        let base = if n < 0 { self.recip(a)? } else { a.clone() };
        let mut e = n.unsigned_abs();
        let mut out = self.constant(1.0);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                out = self.mul(&out, &sq);
            }
            e >>= 1;
            if e > 0 {
                sq = self.mul(&sq, &sq);
            }
        }
        Some(out)
    }

    pub fn func(&self, f: Func, a: &Poly) -> Poly {
        let (c0, x) = self.split(a);
        let fact = |m: usize| (1..=m).fold(1.0, |p, k| p * k as f64);
        // derivatives of f at c₀, divided by m!
        let coeffs: Vec<f64> = (0..=self.degree)
            .map(|m| {
                let d = match f {
                    Func::Exp => c0.exp(),
                    Func::Sin => [c0.sin(), c0.cos(), -c0.sin(), -c0.cos()][m % 4],
                    Func::Cos => [c0.cos(), -c0.sin(), -c0.cos(), c0.sin()][m % 4],
                };
                d / fact(m)
            })
            .collect();
        self.nilpotent_series(&x, &coeffs)
    }

    /// `[V, W]ⁱ = Σⱼ Vʲ∂ⱼWⁱ − Wʲ∂ⱼVⁱ`.
    pub fn bracket(&self, v: &[Poly], w: &[Poly]) -> Vec<Poly> {
        let nonzero = |p: &Poly| p.iter().any(|c| *c != 0.0);
        let v_live: Vec<bool> = v.iter().map(nonzero).collect();
        let w_live: Vec<bool> = w.iter().map(nonzero).collect();
        (0..v.len())
            .map(|i| {
                let mut acc = vec![0.0; self.len()];
                for j in 0..v.len() {
                    if v_live[j] && w_live[i] {
                        let t = self.mul(&v[j], &self.deriv(&w[i], j));
                        acc.iter_mut().zip(&t).for_each(|(a, b)| *a += b);
                    }
                    if w_live[j] && v_live[i] {
                        let t = self.mul(&w[j], &self.deriv(&v[i], j));
                        acc.iter_mut().zip(&t).for_each(|(a, b)| *a -= b);
                    }
                }
                acc
            })
            .collect()
    }
}

/// Taylor expansion of expressions at a fixed point, memoized per node.
pub struct TaylorEvaluator<'p> {
    table: Arc<MonomialTable>,
    point: &'p [f64],
    cache: HashMap<usize, Arc<Poly>>,
    pinned: Vec<Expr>,
}

impl<'p> TaylorEvaluator<'p> {
    pub fn new(table: Arc<MonomialTable>, point: &'p [f64]) -> Self {
        TaylorEvaluator { table, point, cache: HashMap::new(), pinned: Vec::new() }
    }

    pub fn table(&self) -> &MonomialTable {
        &self.table
    }

    pub fn eval(&mut self, e: &Expr) -> Result<Arc<Poly>, EvalError> {
        if let Some(p) = self.cache.get(&e.id()) {
            return Ok(p.clone());
        }
        let t = self.table.clone();
        let div_zero = || EvalError::DivisionByZero { subtree: e.to_string() };
        let p = match e.node() {
            Node::Const(c) => t.constant(c.to_f64().unwrap_or(f64::NAN)),
            Node::Var(i) => {
                let v = *self
                    .point
                    .get(*i)
                    .ok_or(EvalError::MissingVariable { index: *i, len: self.point.len() })?;
                if *i < t.nvars() {
                    t.variable(*i, v)
                } else {
                    t.constant(v)
                }
            }
            Node::Neg(a) => self.eval(a)?.iter().map(|v| -v).collect(),
            Node::Add(a, b) => {
                let (a, b) = (self.eval(a)?, self.eval(b)?);
                a.iter().zip(b.iter()).map(|(x, y)| x + y).collect()
            }
            Node::Sub(a, b) => {
                let (a, b) = (self.eval(a)?, self.eval(b)?);
                a.iter().zip(b.iter()).map(|(x, y)| x - y).collect()
            }
            Node::Mul(a, b) => {
                let (a, b) = (self.eval(a)?, self.eval(b)?);
                t.mul(&a, &b)
            }
            Node::Div(a, b) => {
                let (a, b) = (self.eval(a)?, self.eval(b)?);
                let r = t.recip(&b).ok_or_else(div_zero)?;
                t.mul(&a, &r)
            }
            Node::Pow(a, n) => {
                let a = self.eval(a)?;
                t.powi(&a, *n).ok_or_else(div_zero)?
            }
            Node::Func(f, a) => {
                let a = self.eval(a)?;
                t.func(*f, &a)
            }
        };
        if p.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::NonFinite { subtree: e.to_string() });
        }
        let p = Arc::new(p);
        self.pinned.push(e.clone());
        self.cache.insert(e.id(), p.clone());
        Ok(p)
    }

    pub fn eval_all(&mut self, exprs: &[Expr]) -> Result<Vec<Poly>, EvalError> {
        exprs.iter().map(|e| Ok((*self.eval(e)?).clone())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, STANDARD_VARS};

    #[test]
    fn table_sizes() {
        assert_eq!(MonomialTable::get(7, 7).len(), 3432);
        assert_eq!(MonomialTable::get(2, 3).len(), 10);
    }

    #[test]
    fn expansion_matches_derivatives() {
        let e = parse_expression("sin(x1*x2)/(2 + x3^2) + exp(x1)*x2^(-1)", &STANDARD_VARS).unwrap();
        let pt = [0.3, 1.2, -0.5];
        let t = MonomialTable::get(3, 3);
        let p = TaylorEvaluator::new(t.clone(), &pt).eval(&e).unwrap();
        assert!((p[0] - e.eval(&pt).unwrap()).abs() < 1e-14);
        for v in 0..3 {
            let d = e.diff(v).eval(&pt).unwrap();
            assert!((t.deriv(&p, v)[0] - d).abs() < 1e-12);
        }
        // second mixed derivative
        let d12 = e.diff(0).diff(1).eval(&pt).unwrap();
        assert!((t.deriv(&t.deriv(&p, 0), 1)[0] - d12).abs() < 1e-12);
    }

    #[test]
    fn bracket_of_linear_fields() {
        // [x₂∂₁, x₁∂₂] = x₂∂₂ − x₁∂₁
        let t = MonomialTable::get(2, 2);
        let pt = [0.5, -2.0];
        let v = vec![t.variable(1, pt[1]), t.constant(0.0)];
        let w = vec![t.constant(0.0), t.variable(0, pt[0])];
        let b = t.bracket(&v, &w);
        assert_eq!(b[0][0], -0.5);
        assert_eq!(b[1][0], -2.0);
    }
}
