//! The Cartan quartic on `D(q)`: for a direction `v`, the derivative of the
//! Wilczynski invariant of the plane curve obtained by reducing `ℰ_γ` at its
//! own point, scaled by `−1/5`; and an independent route through `𝒲₂` of
//! `ℰ_γ` itself.

use nalgebra::{DVector, Matrix5, Vector5};

use crate::abnormal::{Chart, CotangentPoint, Dynamics};
use crate::error::{Error, Result};
use crate::frame::AdaptedFrame;
use crate::linalg;
use crate::projcurve::{self, CurveJet};

/// Bracket order used by both routes.
pub const AD_ORDER: usize = 7;

/// Relative size of `𝒲₁` of the reduced curve above which the pipeline is
/// rejected.
pub const W1_TOL: f64 = 1e-7;

/// Relative residual allowed when expressing `wᵢ`, `i ≥ 4`, over
/// `w₀..w₃, h⃗, e⃗`.
pub const QUOTIENT_TOL: f64 = 1e-8;

/// Angles (in units of π) of the directions used to fit the quartic.
pub const FIT_ANGLES: [f64; 5] = [0.0, 0.2, 0.4, 0.6, 0.8];

/// Angles (in units of π) of the held-out check directions.
pub const HELD_OUT_ANGLES: [f64; 3] = [0.1, 0.37, 0.71];

/// `a₀v₁⁴ + a₁v₁³v₂ + a₂v₁²v₂² + a₃v₁v₂³ + a₄v₂⁴` in the basis `(X₁(q), X₂(q))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinaryQuartic {
    pub coeffs: [f64; 5],
}

impl BinaryQuartic {
    pub fn eval(&self, v: [f64; 2]) -> f64 {
        monomials(v).iter().zip(&self.coeffs).map(|(m, a)| m * a).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Coefficients of `v ↦ Q(Av)`.
    pub fn pullback(&self, a: [[f64; 2]; 2]) -> BinaryQuartic {
        // sample on the fit directions and refit; exact for quartics
        let dirs: Vec<[f64; 2]> = FIT_ANGLES.iter().map(|&t| direction(t)).collect();
        let values: Vec<f64> = dirs
            .iter()
            .map(|v| self.eval([a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]))
            .collect();
        fit(&dirs, &values).expect("fit directions are distinct")
    }
}

fn monomials(v: [f64; 2]) -> [f64; 5] {
    let [x, y] = v;
    [x.powi(4), x.powi(3) * y, x * x * y * y, x * y.powi(3), y.powi(4)]
}

fn fit(dirs: &[[f64; 2]], values: &[f64]) -> Result<BinaryQuartic> {
    let m = Matrix5::from_fn(|r, c| monomials(dirs[r])[c]);
    let b = Vector5::from_fn(|r, _| values[r]);
    let a = m.lu().solve(&b).ok_or_else(|| Error::Degenerate("quartic fit directions are not distinct".into()))?;
    Ok(BinaryQuartic { coeffs: [a[0], a[1], a[2], a[3], a[4]] })
}

/// `λ̃ = (q; u₄, u₅) = (q; v₂, −v₁)`, so that `π_*h⃗(λ̃) = v₁X₁ + v₂X₂`.
pub fn lambda_for_direction(q: &[f64], v: [f64; 2]) -> Result<CotangentPoint> {
    if !(v[0].is_finite() && v[1].is_finite()) || (v[0] == 0.0 && v[1] == 0.0) {
        return Err(Error::Invalid(format!("direction {v:?} must be a nonzero vector")));
    }
    CotangentPoint::from_slice(q, v[1], -v[0])
}

/// Both routes at one direction, with the intermediate quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct QuarticValue {
    pub lambda: CotangentPoint,
    pub chart: Chart,
    /// `𝒲₁` of the reduced plane curve (must vanish).
    pub w1: f64,
    /// Derivative of `𝒲₁` of the reduced curve on the unit flow shift.
    pub w1_derivative: f64,
    /// `𝒲₂` of `ℰ_γ` on the unit flow shift.
    pub w2: f64,
    /// `−(1/5)·w1_derivative`.
    pub value: f64,
    /// `−(1/25)·w2`.
    pub via_w2: f64,
    /// Largest relative residual of the quotient by `span{h⃗, e⃗}`.
    pub quotient_residual: f64,
}

/// Evaluates the quartic at many directions sharing one frame.
pub struct QuarticPipeline<'f> {
    dynamics: Dynamics<'f>,
}

impl<'f> QuarticPipeline<'f> {
    pub fn new(frame: &'f AdaptedFrame) -> Self {
        QuarticPipeline { dynamics: Dynamics::new(frame) }
    }

    pub fn dynamics(&self) -> &Dynamics<'f> {
        &self.dynamics
    }

    /// Jet of `ℰ_γ` at `λ̃` in the coordinates of the basis `w₀..w₃` of the
    /// quotient by `span{h⃗, e⃗}`, with the largest relative residual.
    pub fn curve_jet(&self, lambda: &CotangentPoint, chart: Chart) -> Result<(CurveJet, f64)> {
        self.dynamics.frame().require_generic(&lambda.q)?;
        let w = self.dynamics.ad_powers(lambda, AD_ORDER, chart)?;
        let mut cols: Vec<DVector<f64>> = w[..4].to_vec();
        cols.push(self.dynamics.h_at(lambda)?);
        cols.push(self.dynamics.euler_at(lambda));
        let a = linalg::columns(&cols);
        let scale = w.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut residual: f64 = 0.0;
        let mut vectors = Vec::with_capacity(w.len());
        for (i, wi) in w.iter().enumerate() {
            if i < 4 {
                vectors.push(DVector::from_fn(4, |r, _| if r == i { 1.0 } else { 0.0 }));
                continue;
            }
            let ls = linalg::least_squares(&a, wi);
            if ls.condition > crate::abnormal::MAX_CONDITION {
                return Err(Error::Degenerate(format!(
                    "quotient basis condition number {:.3e} at {lambda:?}",
                    ls.condition
                )));
            }
            residual = residual.max(ls.residual / scale);
            vectors.push(ls.solution.rows(0, 4).into_owned());
        }
        if residual > QUOTIENT_TOL {
            return Err(Error::Degenerate(format!(
                "bracket {} leaves the span of w₀..w₃, h⃗, e⃗ (relative residual {residual:.3e})",
                AD_ORDER
            )));
        }
        Ok((CurveJet::new(vectors)?, residual))
    }

    pub fn evaluate_in_chart(&self, q: &[f64], v: [f64; 2], chart: Chart) -> Result<QuarticValue> {
        let lambda = lambda_for_direction(q, v)?;
        let (jet, quotient_residual) = self.curve_jet(&lambda, chart)?;
        let reduced = projcurve::reduce_by_point(&jet)?;
        let (_, dec) = projcurve::canonicalize(&reduced)?;
        let (w1, dw1) = projcurve::w1_and_derivative_decomp(&dec)?;
        let scale = dec.coeffs().iter().fold(1.0_f64, |m, s| m.max(s.max_abs()));
        if w1.abs() > W1_TOL * scale {
            return Err(Error::Degenerate(format!(
                "𝒲₁ of the reduced curve is {w1:.3e} at {lambda:?}; it must vanish"
            )));
        }
        let w2 = projcurve::wilczynski(&jet, 2)?;
        Ok(QuarticValue {
            lambda,
            chart,
            w1,
            w1_derivative: dw1,
            w2,
            value: -dw1 / 5.0,
            via_w2: -w2 / 25.0,
            quotient_residual,
        })
    }

    /// Both routes at `v`, in the chart chosen by [`Chart::for_fiber`].
    pub fn evaluate(&self, q: &[f64], v: [f64; 2]) -> Result<QuarticValue> {
        let lambda = lambda_for_direction(q, v)?;
        self.evaluate_in_chart(q, v, lambda.chart())
    }

    pub fn quartic_at(&self, q: &[f64], v: [f64; 2]) -> Result<f64> {
        Ok(self.evaluate(q, v)?.value)
    }

    pub fn quartic_via_w2(&self, q: &[f64], v: [f64; 2]) -> Result<f64> {
        Ok(self.evaluate(q, v)?.via_w2)
    }

    pub fn polynomial(&self, q: &[f64]) -> Result<QuarticFit> {
        let sample = |angles: &[f64]| -> Result<Vec<QuarticValue>> {
            angles.iter().map(|&t| self.evaluate(q, direction(t))).collect()
        };
        let fitted = sample(&FIT_ANGLES)?;
        let held_out = sample(&HELD_OUT_ANGLES)?;
        let dirs: Vec<[f64; 2]> = FIT_ANGLES.iter().map(|&t| direction(t)).collect();
        let values: Vec<f64> = fitted.iter().map(|r| r.value).collect();
        let quartic = fit(&dirs, &values)?;
        let size = fitted.iter().chain(&held_out).fold(0.0_f64, |m, r| m.max(r.value.abs()));
        let err = held_out
            .iter()
            .zip(HELD_OUT_ANGLES)
            .fold(0.0_f64, |m, (r, t)| m.max((quartic.eval(direction(t)) - r.value).abs()));
        Ok(QuarticFit {
            quartic,
            held_out_residual: err,
            relative_residual: if size > 0.0 { err / size } else { 0.0 },
            samples: fitted.into_iter().chain(held_out).collect(),
        })
    }
}

/// A fitted quartic with its held-out check.
#[derive(Clone, Debug, PartialEq)]
pub struct QuarticFit {
    pub quartic: BinaryQuartic,
    /// Largest absolute misfit on the held-out directions.
    pub held_out_residual: f64,
    /// `held_out_residual` over the largest sampled value.
    pub relative_residual: f64,
    /// Both routes at the fit directions, then the held-out ones.
    pub samples: Vec<QuarticValue>,
}

/// Unit direction at `angle_over_pi · π` from `X₁`.
pub fn direction(angle_over_pi: f64) -> [f64; 2] {
    let t = angle_over_pi * std::f64::consts::PI;
    [t.cos(), t.sin()]
}

pub fn cartan_quartic_at(frame: &AdaptedFrame, q: &[f64], v: [f64; 2]) -> Result<f64> {
    QuarticPipeline::new(frame).quartic_at(q, v)
}

pub fn cartan_quartic_via_w2(frame: &AdaptedFrame, q: &[f64], v: [f64; 2]) -> Result<f64> {
    QuarticPipeline::new(frame).quartic_via_w2(q, v)
}

pub fn quartic_polynomial(frame: &AdaptedFrame, q: &[f64]) -> Result<QuarticFit> {
    QuarticPipeline::new(frame).polynomial(q)
}
