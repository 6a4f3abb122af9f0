//! The conformal cone `Ξ_q ⊂ T_qM`, assembled from osculating cones over the
//! fiber and, independently, from the structural functions of the frame.
//!
//! Fiber functions are forms in `(u₄, u₅)`: linear forms are stored as
//! `[a₄, a₅]` meaning `a₄u₄ + a₅u₅`, quadratic forms as `[a₄₄, a₄₅, a₅₅]`
//! meaning `a₄₄u₄² + a₄₅u₄u₅ + a₅₅u₅²`.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix5};

use crate::abnormal::{self, CotangentPoint, Dynamics};
use crate::error::{Error, Result};
use crate::expr::{DiffContext, Evaluator, Expr, U4, U5};
use crate::frame::AdaptedFrame;
use crate::linalg;
use crate::projcurve::{osculating_cone_from_b, QuadricCoeffs};

/// Relative eigenvalue threshold for [`signature`].
pub const SIGNATURE_TOL: f64 = 1e-9;

/// Minimum ratio between the last two singular values of the cone fit.
pub const FIT_GAP: f64 = 1e6;

pub type Linear<T> = [T; 2];
pub type Quadratic<T> = [T; 3];

fn lin_mul(a: &Linear<Expr>, b: &Linear<Expr>) -> Quadratic<Expr> {
    [a[0].mul(&b[0]), a[0].mul(&b[1]).add(&a[1].mul(&b[0])), a[1].mul(&b[1])]
}

fn quad_comb(terms: &[(i64, i64, &Quadratic<Expr>)]) -> Quadratic<Expr> {
    let mut out = [Expr::zero(), Expr::zero(), Expr::zero()];
    for (num, den, q) in terms {
        for (o, c) in out.iter_mut().zip(q.iter()) {
            *o = o.add(&Expr::ratio(*num, *den).mul(c));
        }
    }
    out
}

/// Evaluates a linear form at `(u₄, u₅)`.
pub fn linear_at(f: &Linear<f64>, u4: f64, u5: f64) -> f64 {
    f[0] * u4 + f[1] * u5
}

/// Evaluates a quadratic form at `(u₄, u₅)`.
pub fn quadratic_at(f: &Quadratic<f64>, u4: f64, u5: f64) -> f64 {
    f[0] * u4 * u4 + f[1] * u4 * u5 + f[2] * u5 * u5
}

/// Fiber functions of an adapted frame with coefficients as expressions in
/// the base point.
#[derive(Clone, Debug)]
pub struct FiberFunctions {
    pub b: Linear<Expr>,
    pub b1: Linear<Expr>,
    pub alpha3: Quadratic<Expr>,
    pub pi: Quadratic<Expr>,
    /// `h⃗(b)` and `h⃗(b₁)`.
    pub h_b: Quadratic<Expr>,
    pub h_b1: Quadratic<Expr>,
    pub q: Quadratic<Expr>,
    /// Coefficient `ℬ₂` of the canonical decomposition, as a fiber form.
    pub b2: Quadratic<Expr>,
}

impl FiberFunctions {
    pub fn new(frame: &AdaptedFrame) -> Self {
        let c = |j, i, k| frame.c(j, i, k).clone();
        let third = Expr::ratio(1, 3);
        let b = [
            third.mul(&c(4, 2, 4).add(&c(5, 2, 5))),
            third.mul(&c(4, 1, 4).add(&c(5, 1, 5))).neg(),
        ];
        let b1 = [c(3, 2, 3), c(3, 1, 3).neg()];
        let alpha3 = [c(5, 2, 3), c(4, 2, 3).add(&c(5, 1, 3)).neg(), c(4, 1, 3)];
        let pi = [
            c(3, 2, 1).add(&c(5, 3, 4)),
            c(3, 2, 2).sub(&c(3, 1, 1)).sub(&c(4, 3, 4)).add(&c(5, 3, 5)),
            c(3, 1, 2).add(&c(4, 3, 5)).neg(),
        ];

        let h = abnormal::build_h_field(frame);
        let mut ctx = DiffContext::new(7);
        let mut along_h = |f: &Linear<Expr>| {
            let on_fiber = f[0].mul(&Expr::var(U4)).add(&f[1].mul(&Expr::var(U5)));
            quadratic_coefficients(&ctx.apply(&h, &on_fiber))
        };
        let h_b = along_h(&b);
        let h_b1 = along_h(&b1);

        let b1b1 = lin_mul(&b1, &b1);
        let bb1 = lin_mul(&b, &b1);
        let bb = lin_mul(&b, &b);
        let q = quad_comb(&[(6, 1, &h_b), (1, 1, &h_b1), (1, 1, &pi), (-1, 1, &alpha3), (-1, 1, &b1b1), (-3, 1, &bb1), (-9, 1, &bb)]);
        let b2 = quad_comb(&[(2, 1, &alpha3), (-1, 1, &pi), (-1, 1, &h_b1), (-9, 1, &h_b), (1, 1, &b1b1), (9, 1, &bb)]);
        FiberFunctions { b, b1, alpha3, pi, h_b, h_b1, q, b2 }
    }

    pub fn values_at(&self, q: &[f64]) -> Result<FiberValues> {
        let mut ev = Evaluator::new(q);
        let mut lin = |f: &Linear<Expr>| -> Result<Linear<f64>> { Ok([ev.eval(&f[0])?, ev.eval(&f[1])?]) };
        let (b, b1) = (lin(&self.b)?, lin(&self.b1)?);
        let mut ev = Evaluator::new(q);
        let mut quad = |f: &Quadratic<Expr>| -> Result<Quadratic<f64>> {
            Ok([ev.eval(&f[0])?, ev.eval(&f[1])?, ev.eval(&f[2])?])
        };
        Ok(FiberValues {
            b,
            b1,
            alpha3: quad(&self.alpha3)?,
            pi: quad(&self.pi)?,
            h_b: quad(&self.h_b)?,
            h_b1: quad(&self.h_b1)?,
            q: quad(&self.q)?,
            b2: quad(&self.b2)?,
        })
    }
}

/// Coefficients of a polynomial that is quadratic in `(u₄, u₅)`.
fn quadratic_coefficients(f: &Expr) -> Quadratic<Expr> {
    let at = |u4: i64, u5: i64| {
        let mut values = vec![None; 7];
        values[U4] = Some(Expr::int(u4));
        values[U5] = Some(Expr::int(u5));
        f.substitute(&values)
    };
    let (a, c) = (at(1, 0), at(0, 1));
    let mixed = at(1, 1).sub(&a).sub(&c);
    [a, mixed, c]
}

/// Fiber functions evaluated at a base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberValues {
    pub b: Linear<f64>,
    pub b1: Linear<f64>,
    pub alpha3: Quadratic<f64>,
    pub pi: Quadratic<f64>,
    pub h_b: Quadratic<f64>,
    pub h_b1: Quadratic<f64>,
    pub q: Quadratic<f64>,
    pub b2: Quadratic<f64>,
}

impl FiberValues {
    /// `l₁ = b₁ + 3b`.
    pub fn l1(&self) -> Linear<f64> {
        [self.b1[0] + 3.0 * self.b[0], self.b1[1] + 3.0 * self.b[1]]
    }

    /// `l₂ = −3b`.
    pub fn l2(&self) -> Linear<f64> {
        [-3.0 * self.b[0], -3.0 * self.b[1]]
    }
}

fn lin_mul_f(a: &Linear<f64>, b: &Linear<f64>) -> Quadratic<f64> {
    [a[0] * b[0], a[0] * b[1] + a[1] * b[0], a[1] * b[1]]
}

/// Which basis a [`QuadraticForm5`] is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormBasis {
    /// Coordinates `x₁..x₅` with respect to `X₁(q)..X₅(q)`.
    AdaptedFrame,
    /// Coordinates of the chart.
    Ambient,
}

/// Symmetric form on `T_qM`, meaningful up to a nonzero factor.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm5 {
    pub m: Matrix5<f64>,
    pub basis: FormBasis,
}

impl QuadraticForm5 {
    pub fn new(m: Matrix5<f64>, basis: FormBasis) -> Result<Self> {
        if m.iter().all(|v| *v == 0.0) {
            return Err(Error::Invalid("quadratic form is zero".into()));
        }
        Ok(QuadraticForm5 { m: (m + m.transpose()) * 0.5, basis })
    }

    /// `x₁x₅ − x₂x₄ + (2/3)x₃²`.
    pub fn flat() -> Self {
        let mut m = Matrix5::zeros();
        m[(0, 4)] = 0.5;
        m[(4, 0)] = 0.5;
        m[(1, 3)] = -0.5;
        m[(3, 1)] = -0.5;
        m[(2, 2)] = 2.0 / 3.0;
        QuadraticForm5 { m, basis: FormBasis::AdaptedFrame }
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        let v = nalgebra::Vector5::from_iterator(x.iter().copied());
        v.dot(&(self.m * v))
    }

    /// Frobenius-normalized matrix with the sign of the largest entry fixed.
    pub fn normalized(&self) -> Matrix5<f64> {
        let mut n = self.m / self.m.norm();
        let pivot = n.iter().copied().fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a });
        if pivot < 0.0 {
            n = -n;
        }
        n
    }

    /// The same form in chart coordinates, `x = F⁻¹ y` with `F` the frame
    /// matrix at `q`.
    pub fn to_ambient(&self, frame: &AdaptedFrame, q: &[f64]) -> Result<Self> {
        if self.basis == FormBasis::Ambient {
            return Ok(self.clone());
        }
        let f = frame.matrix_at(q)?;
        let inv = f
            .try_inverse()
            .ok_or_else(|| Error::Degenerate(format!("frame matrix singular at {q:?}")))?;
        let inv = Matrix5::from_iterator(inv.iter().copied());
        Ok(QuadraticForm5 { m: inv.transpose() * self.m * inv, basis: FormBasis::Ambient })
    }
}

/// Fiber quadratic form `f` evaluated at `(u₄, u₅) = (x₅, −x₄)`, as a matrix
/// in `x`.
fn on_tangent(f: &Quadratic<f64>) -> Matrix5<f64> {
    let mut m = Matrix5::zeros();
    m[(4, 4)] = f[0];
    m[(3, 3)] = f[2];
    m[(3, 4)] = -0.5 * f[1];
    m[(4, 3)] = -0.5 * f[1];
    m
}

/// `Ξ_q` from the structural functions:
/// `x₁x₅ − x₂x₄ + (2/3)(x₃ − (3/4)(b₁−b))² − (3/10)(Π + (4/3)α₃ + h⃗(b₁−b) + (1/4)(b₁−b)(b₁−9b))`
/// with every fiber function taken at `(x₅, −x₄)`.
///
/// The last product is what substituting `l₁, l₂, Q, ℬ₂` into the cone
/// equation gives; the `(b₁+9b)` variant disagrees with the geometric fit
/// whenever `b ≠ 0`.
pub fn xi_closed_form(frame: &AdaptedFrame, q: &[f64]) -> Result<QuadraticForm5> {
    frame.require_generic(q)?;
    let v = FiberFunctions::new(frame).values_at(q)?;
    xi_from_values(&v)
}

pub fn xi_from_values(v: &FiberValues) -> Result<QuadraticForm5> {
    let d = [v.b1[0] - v.b[0], v.b1[1] - v.b[1]];
    let mut shifted = DVector::zeros(5);
    shifted[2] = 1.0;
    // −(3/4)(d₄x₅ − d₅x₄)
    shifted[4] = -0.75 * d[0];
    shifted[3] = 0.75 * d[1];
    let sum = [v.b1[0] - 9.0 * v.b[0], v.b1[1] - 9.0 * v.b[1]];
    let prod = lin_mul_f(&d, &sum);
    let k: Vec<f64> = (0..3)
        .map(|i| v.pi[i] + 4.0 / 3.0 * v.alpha3[i] + v.h_b1[i] - v.h_b[i] + 0.25 * prod[i])
        .collect();
    let mut m = Matrix5::zeros();
    m[(0, 4)] = 0.5;
    m[(4, 0)] = 0.5;
    m[(1, 3)] = -0.5;
    m[(3, 1)] = -0.5;
    let sq = &shifted * shifted.transpose() * (2.0 / 3.0);
    m += Matrix5::from_iterator(sq.iter().copied());
    m -= on_tangent(&[k[0], k[1], k[2]]) * 0.3;
    QuadraticForm5::new(m, FormBasis::AdaptedFrame)
}

/// `Con(λ)` inside `λ^⊥`: a basis `(π_*h⃗, π_*w₁, π_*w₂, π_*w₃)` in frame
/// coordinates and the conic `(2/3)Y₁² − (7/10)B₂Y₂² − Y₀Y₂` in
/// `(Y₀, Y₁, Y₂)`; the first basis direction is degenerate.
#[derive(Clone, Debug)]
pub struct ConeSection {
    pub lambda: CotangentPoint,
    pub basis: [DVector<f64>; 4],
    pub b2: f64,
    pub quadric: QuadricCoeffs,
}

impl ConeSection {
    pub fn degenerate_direction(&self) -> &DVector<f64> {
        &self.basis[0]
    }

    /// Frame coordinates of the point `s·e₀ + Y₀e₁ + Y₁e₂ + Y₂e₃`.
    pub fn point(&self, s: f64, y: [f64; 3]) -> DVector<f64> {
        &self.basis[0] * s + &self.basis[1] * y[0] + &self.basis[2] * y[1] + &self.basis[3] * y[2]
    }

    /// A point of the cone; `(a, c)` parameterizes the conic by
    /// `(Y₀, Y₁, Y₂) = ((2/3)a² − (7/10)B₂c², ac, c²)`.
    pub fn cone_point(&self, s: f64, a: f64, c: f64) -> DVector<f64> {
        let y0 = 2.0 / 3.0 * a * a - 0.7 * self.b2 * c * c;
        self.point(s, [y0, a * c, c * c])
    }

    /// Coordinates `(s, Y₀, Y₁, Y₂)` of a vector in `λ^⊥`, with the relative
    /// residual of the projection.
    pub fn coordinates(&self, x: &DVector<f64>) -> ([f64; 4], f64) {
        let a = linalg::columns(&self.basis);
        let ls = linalg::least_squares(&a, x);
        let s = &ls.solution;
        ([s[0], s[1], s[2], s[3]], ls.residual / x.norm().max(f64::MIN_POSITIVE))
    }
}

pub fn con_lambda(frame: &AdaptedFrame, lambda: &CotangentPoint) -> Result<ConeSection> {
    con_lambda_with(&Dynamics::new(frame), lambda)
}

/// [`con_lambda`] reusing the symbolic bracket towers of `dynamics`.
pub fn con_lambda_with(dynamics: &Dynamics, lambda: &CotangentPoint) -> Result<ConeSection> {
    let chart = lambda.chart();
    let bc = dynamics.canonical_b(lambda, chart)?;
    let w = dynamics.ad_powers(lambda, 3, chart)?;
    let frame = dynamics.frame();
    let to_frame = |v: &DVector<f64>| frame.frame_coordinates(&lambda.q, &abnormal::project(v));
    let basis = [
        to_frame(&dynamics.h_at(lambda)?)?,
        to_frame(&w[1])?,
        to_frame(&w[2])?,
        to_frame(&w[3])?,
    ];
    Ok(ConeSection { lambda: *lambda, basis, b2: bc.b[2], quadric: osculating_cone_from_b(bc.b[2]) })
}

/// Diagnostics of the cone fit.
#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    /// Singular values of the design matrix, largest first.
    pub singular_values: Vec<f64>,
    /// Ratio of the 14th to the 15th singular value.
    pub gap: f64,
    pub points: usize,
    /// Largest `|Ξ(x)|` over the sample, with `x` and the form unit-normalized.
    pub max_residual: f64,
}

/// Monomials `xᵢxⱼ`, `i ≤ j`, in row-major order.
fn monomials(x: &DVector<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(15);
    for i in 0..5 {
        for j in i..5 {
            out.push(x[i] * x[j]);
        }
    }
    out
}

fn form_from_monomials(c: &DVector<f64>) -> Matrix5<f64> {
    let mut m = Matrix5::zeros();
    let mut n = 0;
    for i in 0..5 {
        for j in i..5 {
            if i == j {
                m[(i, i)] = c[n];
            } else {
                m[(i, j)] = 0.5 * c[n];
                m[(j, i)] = 0.5 * c[n];
            }
            n += 1;
        }
    }
    m
}

/// Sample on one cone: angles on the conic and a sweep of the degenerate
/// direction.
fn sample_cone(section: &ConeSection, n_cone: usize, offset: f64) -> Vec<DVector<f64>> {
    (0..n_cone)
        .map(|j| {
            let psi = std::f64::consts::PI * (j as f64 + offset) / n_cone as f64;
            let s = (2.3 * j as f64 + 1.1 * offset).cos();
            let x = section.cone_point(s, psi.cos(), psi.sin());
            let n = x.norm();
            x / n
        })
        .collect()
}

/// `Ξ_q` as the unique quadric through the cones `Con(λ)` over the fiber,
/// signed so that positive eigenvalues are in the majority.
pub fn xi_geometric(frame: &AdaptedFrame, q: &[f64], n_fiber: usize, n_cone: usize) -> Result<(QuadraticForm5, FitReport)> {
    if n_fiber < 8 || n_cone < 6 {
        return Err(Error::Invalid(format!("need n_fiber >= 8 and n_cone >= 6, got {n_fiber} and {n_cone}")));
    }
    frame.require_generic(q)?;
    let dynamics = Dynamics::new(frame);
    let mut points = Vec::with_capacity(n_fiber * n_cone);
    for i in 0..n_fiber {
        let theta = std::f64::consts::PI * (i as f64 + 0.37) / n_fiber as f64;
        let lambda = CotangentPoint::from_slice(q, theta.cos(), theta.sin())?;
        let section = con_lambda_with(&dynamics, &lambda)?;
        points.extend(sample_cone(&section, n_cone, 0.5 * (i % 2) as f64 + 0.1));
    }
    let design = DMatrix::from_fn(points.len(), 15, |r, c| monomials(&points[r])[c]);
    let (v, profile) = linalg::smallest_right_singular(&design);
    let gap = profile[13] / profile[14].max(f64::MIN_POSITIVE);
    if gap < FIT_GAP {
        return Err(Error::FitDegenerate { profile });
    }
    let mut form = QuadraticForm5::new(form_from_monomials(&v), FormBasis::AdaptedFrame)?;
    // the null vector has no sign; pick the one with more positive eigenvalues
    let (p, n, _) = signature(&form);
    if n > p {
        form.m = -form.m;
    }
    let unit = QuadraticForm5 { m: form.m / form.m.norm(), basis: form.basis };
    let max_residual = points.iter().map(|x| unit.eval(x).abs()).fold(0.0, f64::max);
    let report = FitReport { singular_values: profile, gap, points: points.len(), max_residual };
    Ok((form, report))
}

/// `(positive, negative, zero)` eigenvalue counts, zero meaning below
/// [`SIGNATURE_TOL`] times the spectral radius.
pub fn signature(form: &QuadraticForm5) -> (usize, usize, usize) {
    let eig = form.m.symmetric_eigenvalues();
    let radius = eig.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if radius == 0.0 {
        return (0, 0, 5);
    }
    let cut = SIGNATURE_TOL * radius;
    let p = eig.iter().filter(|v| **v > cut).count();
    let n = eig.iter().filter(|v| **v < -cut).count();
    (p, n, 5 - p - n)
}

/// Whether two forms agree up to a nonzero factor, after Frobenius
/// normalization.
pub fn conformal_equal(a: &QuadraticForm5, b: &QuadraticForm5, tol: f64) -> Result<bool> {
    let (na, nb) = (a.m.norm(), b.m.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Invalid("conformal comparison of a zero form".into()));
    }
    let (x, y) = (a.m / na, b.m / nb);
    Ok((x - y).norm() <= tol || (x + y).norm() <= tol)
}

/// Conic through points `(Y₀, Y₁, Y₂)`, as the null vector of the 6-column
/// monomial matrix.
pub fn fit_conic(points: &[[f64; 3]]) -> Result<QuadricCoeffs> {
    let rows: Vec<[f64; 6]> = points
        .iter()
        .map(|y| {
            let n = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
            let y = [y[0] / n, y[1] / n, y[2] / n];
            [y[0] * y[0], y[0] * y[1], y[0] * y[2], y[1] * y[1], y[1] * y[2], y[2] * y[2]]
        })
        .collect();
    let design = DMatrix::from_fn(rows.len(), 6, |r, c| rows[r][c]);
    let (v, profile) = linalg::smallest_right_singular(&design);
    if profile[4] / profile[5].max(f64::MIN_POSITIVE) < FIT_GAP {
        return Err(Error::FitDegenerate { profile });
    }
    QuadricCoeffs::new(Matrix3::new(
        v[0],
        0.5 * v[1],
        0.5 * v[2],
        0.5 * v[1],
        v[3],
        0.5 * v[4],
        0.5 * v[2],
        0.5 * v[4],
        v[5],
    ))
}
