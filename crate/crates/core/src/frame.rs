//! Adapted frames of (2,5)-distributions and their structural functions.
//!
//! Given `X₁, X₂` spanning the distribution, the adapted frame is
//! `X₃ = [X₁,X₂]`, `X₄ = [X₁,X₃]`, `X₅ = [X₂,X₃]`, and the structural
//! functions are defined by `[Xᵢ, Xⱼ] = Σₖ c_{ji}^k Xₖ` (reversed pair
//! first). All indices in this module's public API are 1-based.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::{parse_expression, DiffContext, Expr, VectorField};
use crate::linalg;

/// Relative singular-value tolerance for rank decisions.
pub const RANK_TOL: f64 = 1e-9;

/// A rank-2 distribution on a 5-dimensional chart.
#[derive(Clone, Debug)]
pub struct Distribution {
    x1: VectorField,
    x2: VectorField,
}

impl Distribution {
    pub fn new(x1: VectorField, x2: VectorField) -> Result<Self> {
        for f in [&x1, &x2] {
            if f.dim() != 5 {
                return Err(Error::Invalid(format!("distribution fields must be 5-dimensional, got {}", f.dim())));
            }
            if f.components().iter().any(|c| c.max_var().is_some_and(|v| v >= 5)) {
                return Err(Error::Invalid("distribution fields may only use base coordinates".into()));
            }
        }
        Ok(Distribution { x1, x2 })
    }

    /// Parses component strings over the given coordinate names.
    pub fn parse(coordinates: &[&str], x1: &[&str], x2: &[&str]) -> Result<Self> {
        if coordinates.len() != 5 {
            return Err(Error::Invalid(format!("expected 5 coordinate names, got {}", coordinates.len())));
        }
        let field = |src: &[&str]| -> Result<VectorField> {
            if src.len() != 5 {
                return Err(Error::Invalid(format!("expected 5 components, got {}", src.len())));
            }
            let comps = src
                .iter()
                .map(|s| parse_expression(s, coordinates))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(VectorField::new(comps)?)
        };
        Distribution::new(field(x1)?, field(x2)?)
    }

    pub fn x1(&self) -> &VectorField {
        &self.x1
    }

    pub fn x2(&self) -> &VectorField {
        &self.x2
    }
}

/// `(dim D, dim D², dim D³)` at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GrowthVector(pub [usize; 3]);

impl GrowthVector {
    pub fn is_generic(&self) -> bool {
        self.0 == [2, 3, 5]
    }
}

impl fmt::Display for GrowthVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

/// Adapted frame `X₁..X₅` with structural functions as expressions.
#[derive(Clone, Debug)]
pub struct AdaptedFrame {
    fields: Vec<VectorField>,
    det: Expr,
    // c[j][i][k], 0-based storage
    c: Vec<Expr>,
}

fn c_index(j: usize, i: usize, k: usize) -> usize {
    ((j - 1) * 5 + (i - 1)) * 5 + (k - 1)
}

impl AdaptedFrame {
    pub fn build(d: &Distribution) -> AdaptedFrame {
        let mut ctx = DiffContext::new(5);
        let x1 = d.x1.clone();
        let x2 = d.x2.clone();
        let x3 = ctx.bracket(&x1, &x2);
        let x4 = ctx.bracket(&x1, &x3);
        let x5 = ctx.bracket(&x2, &x3);
        let fields = vec![x1, x2, x3, x4, x5];

        let matrix: Vec<Vec<Expr>> = (0..5)
            .map(|r| (0..5).map(|k| fields[k].component(r).clone()).collect())
            .collect();
        let det = symbolic_det(&matrix);

        let mut c = vec![Expr::zero(); 125];
        for i in 1..=5 {
            for j in (i + 1)..=5 {
                let coeffs: Vec<Expr> = match (i, j) {
                    // brackets that define X₃, X₄, X₅
                    (1, 2) => unit(3),
                    (1, 3) => unit(4),
                    (2, 3) => unit(5),
                    _ => {
                        let br = ctx.bracket(&fields[i - 1], &fields[j - 1]);
                        (0..5)
                            .map(|k| {
                                let mut replaced = matrix.clone();
                                for (r, row) in replaced.iter_mut().enumerate() {
                                    row[k] = br.component(r).clone();
                                }
                                symbolic_det(&replaced).div(&det)
                            })
                            .collect()
                    }
                };
                for k in 1..=5 {
                    c[c_index(j, i, k)] = coeffs[k - 1].clone();
                    c[c_index(i, j, k)] = coeffs[k - 1].neg();
                }
            }
        }
        AdaptedFrame { fields, det, c }
    }

    /// `X_k`, 1-based.
    pub fn field(&self, k: usize) -> &VectorField {
        &self.fields[k - 1]
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    /// Determinant of the frame matrix.
    pub fn determinant(&self) -> &Expr {
        &self.det
    }

    /// Structural function `c_{ji}^k`, the `X_k`-coefficient of `[Xᵢ, Xⱼ]`.
    pub fn c(&self, j: usize, i: usize, k: usize) -> &Expr {
        &self.c[c_index(j, i, k)]
    }

    /// Frame matrix at `q`; column `k` holds `X_{k+1}(q)`.
    pub fn matrix_at(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(5, 5);
        for (k, f) in self.fields.iter().enumerate() {
            let v = f.eval(q)?;
            m.set_column(k, &DVector::from_vec(v));
        }
        Ok(m)
    }

    /// Numeric structural functions at `q`, indexed `[j-1][i-1][k-1]`.
    pub fn structure_at(&self, q: &[f64]) -> Result<[[[f64; 5]; 5]; 5]> {
        let mut ev = crate::expr::Evaluator::new(q);
        let mut out = [[[0.0; 5]; 5]; 5];
        for j in 1..=5 {
            for i in 1..=5 {
                for k in 1..=5 {
                    out[j - 1][i - 1][k - 1] = ev.eval(self.c(j, i, k))?;
                }
            }
        }
        Ok(out)
    }

    /// Coordinates of an ambient tangent vector in the frame basis.
    pub fn frame_coordinates(&self, q: &[f64], v: &DVector<f64>) -> Result<DVector<f64>> {
        let m = self.matrix_at(q)?;
        m.lu()
            .solve(v)
            .ok_or_else(|| Error::Degenerate(format!("frame matrix singular at {q:?}")))
    }

    /// Errors unless the growth vector at `q` is (2,3,5).
    pub fn require_generic(&self, q: &[f64]) -> Result<()> {
        let g = growth_vector(self, q)?;
        if g.is_generic() {
            Ok(())
        } else {
            Err(Error::GrowthVector { point: q.to_vec(), growth: g })
        }
    }
}

fn unit(k: usize) -> Vec<Expr> {
    (1..=5).map(|m| if m == k { Expr::one() } else { Expr::zero() }).collect()
}

/// Laplace expansion along rows with memoized minors; zero entries prune
/// whole branches.
fn symbolic_det(m: &[Vec<Expr>]) -> Expr {
    fn minor(m: &[Vec<Expr>], row: usize, used: u32, memo: &mut HashMap<(usize, u32), Expr>) -> Expr {
        let n = m.len();
        if row == n {
            return Expr::one();
        }
        if let Some(e) = memo.get(&(row, used)) {
            return e.clone();
        }
        let mut acc = Expr::zero();
        let mut sign_pos = true;
        for col in 0..n {
            if used & (1 << col) != 0 {
                continue;
            }
            let entry = &m[row][col];
            if !entry.is_zero() {
                let sub = minor(m, row + 1, used | (1 << col), memo);
                if !sub.is_zero() {
                    let term = entry.mul(&sub);
                    acc = if sign_pos { acc.add(&term) } else { acc.sub(&term) };
                }
            }
            sign_pos = !sign_pos;
        }
        memo.insert((row, used), acc.clone());
        acc
    }
    minor(m, 0, 0, &mut HashMap::new())
}

/// Small growth vector at `q`.
pub fn growth_vector(frame: &AdaptedFrame, q: &[f64]) -> Result<GrowthVector> {
    let m = frame.matrix_at(q)?;
    let r = |n: usize| linalg::rank(&m.columns(0, n).into_owned(), RANK_TOL);
    Ok(GrowthVector([r(2), r(3), r(5)]))
}

/// Whether the structural functions at `q` satisfy the Cartan-frame
/// identities `b₁ = b` and `Π = −(4/3)α₃`, compared coefficient-wise.
pub fn is_cartan_frame_at(frame: &AdaptedFrame, q: &[f64], tol: f64) -> Result<bool> {
    let ff = crate::cone::FiberFunctions::new(frame);
    let v = ff.values_at(q)?;
    let lin_ok = v.b1.iter().zip(&v.b).all(|(a, b)| (a - b).abs() <= tol);
    let quad_ok = v
        .pi
        .iter()
        .zip(&v.alpha3)
        .all(|(p, a)| (p + 4.0 / 3.0 * a).abs() <= tol);
    Ok(lin_ok && quad_ok)
}
