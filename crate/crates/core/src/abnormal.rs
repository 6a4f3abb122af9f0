//! Dynamics on the annihilator of `D²`: the characteristic field `h⃗`, the
//! vertical field `ε₁`, iterated brackets `(ad h⃗)ⁱ ε₁`, and the canonical
//! decomposition of the fourth bracket.
//!
//! Points of the annihilator are written `(x₁..x₅, u₄, u₅)`: the base point
//! and the two nonvanishing quasi-impulses `uₖ = ⟨λ, Xₖ⟩` (`u₁ = u₂ = u₃ = 0`
//! on this locus). The lift of `Xᵢ` acts on quasi-impulses by
//! `u⃗ᵢ(uⱼ) = Σₖ c_{ji}^k uₖ`.

use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::{DiffContext, Expr, MonomialTable, TaylorEvaluator, VectorField, U4, U5};
use crate::frame::AdaptedFrame;
use crate::linalg;

/// Highest bracket order available from the symbolic tower.
pub const MAX_AD_ORDER: usize = 7;

/// Condition number above which the decomposition is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Chart for the vertical field `ε₁ = γ₄∂_{u₄} + γ₅∂_{u₅}`, normalized by
/// `γ₄u₅ − γ₅u₄ = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Chart {
    /// `ε₁ = (1/u₅) ∂_{u₄}`
    U5,
    /// `ε₁ = −(1/u₄) ∂_{u₅}`
    U4,
}

impl Chart {
    /// `U5` when `|u₅| ≥ |u₄|`, else `U4`.
    pub fn for_fiber(u4: f64, u5: f64) -> Chart {
        if u5.abs() >= u4.abs() {
            Chart::U5
        } else {
            Chart::U4
        }
    }

    fn index(self) -> usize {
        match self {
            Chart::U5 => 0,
            Chart::U4 => 1,
        }
    }
}

/// A point of the annihilator of `D²` off the zero section.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CotangentPoint {
    pub q: [f64; 5],
    pub u4: f64,
    pub u5: f64,
}

impl CotangentPoint {
    pub fn new(q: [f64; 5], u4: f64, u5: f64) -> Result<Self> {
        if u4 == 0.0 && u5 == 0.0 {
            return Err(Error::Invalid("fiber point (u4, u5) = (0, 0) lies on the zero section".into()));
        }
        Ok(CotangentPoint { q, u4, u5 })
    }

    pub fn from_slice(q: &[f64], u4: f64, u5: f64) -> Result<Self> {
        let q: [f64; 5] = q
            .try_into()
            .map_err(|_| Error::Invalid(format!("base point needs 5 coordinates, got {}", q.len())))?;
        CotangentPoint::new(q, u4, u5)
    }

    pub fn coords(&self) -> [f64; 7] {
        let q = self.q;
        [q[0], q[1], q[2], q[3], q[4], self.u4, self.u5]
    }

    fn from_coords(c: &[f64]) -> Result<Self> {
        CotangentPoint::new([c[0], c[1], c[2], c[3], c[4]], c[5], c[6])
    }

    pub fn chart(&self) -> Chart {
        Chart::for_fiber(self.u4, self.u5)
    }

    fn check_chart(&self, chart: Chart) -> Result<()> {
        let pole = match chart {
            Chart::U5 => self.u5 == 0.0,
            Chart::U4 => self.u4 == 0.0,
        };
        if pole {
            return Err(Error::ChartPole(format!("{chart:?} chart undefined at u4={}, u5={}", self.u4, self.u5)));
        }
        Ok(())
    }
}

/// `h⃗ = u₄u⃗₂ − u₅u⃗₁` restricted to `u₁ = u₂ = u₃ = 0`.
pub fn build_h_field(frame: &AdaptedFrame) -> VectorField {
    let u4 = Expr::var(U4);
    let u5 = Expr::var(U5);
    let x1 = frame.field(1);
    let x2 = frame.field(2);
    let mut comps: Vec<Expr> = (0..5)
        .map(|r| u4.mul(x2.component(r)).sub(&u5.mul(x1.component(r))))
        .collect();
    // u⃗ᵢ(uⱼ) restricted to the locus keeps only k = 4, 5
    let lift = |i: usize, j: usize| frame.c(j, i, 4).mul(&u4).add(&frame.c(j, i, 5).mul(&u5));
    for j in [4, 5] {
        comps.push(u4.mul(&lift(2, j)).sub(&u5.mul(&lift(1, j))));
    }
    VectorField::new(comps).expect("7 components")
}

/// Generator of fiber homotheties, `u₄∂_{u₄} + u₅∂_{u₅}`.
pub fn euler_field() -> VectorField {
    let mut comps = vec![Expr::zero(); 5];
    comps.push(Expr::var(U4));
    comps.push(Expr::var(U5));
    VectorField::new(comps).expect("7 components")
}

pub fn eps1_field(chart: Chart) -> VectorField {
    let mut comps = vec![Expr::zero(); 7];
    match chart {
        Chart::U5 => comps[U4] = Expr::one().div(&Expr::var(U5)),
        Chart::U4 => comps[U5] = Expr::one().div(&Expr::var(U4)).neg(),
    }
    VectorField::new(comps).expect("7 components")
}

struct Tower {
    ctx: DiffContext,
    powers: Vec<VectorField>,
}

/// Symbolic fields `h⃗`, `e⃗` and the towers `(ad h⃗)ⁱ ε₁` for both charts,
/// extended on demand. Safe to share between threads.
pub struct Dynamics<'f> {
    frame: &'f AdaptedFrame,
    h: VectorField,
    euler: VectorField,
    towers: [Mutex<Tower>; 2],
}

impl<'f> Dynamics<'f> {
    pub fn new(frame: &'f AdaptedFrame) -> Self {
        let tower = |chart| Mutex::new(Tower { ctx: DiffContext::new(7), powers: vec![eps1_field(chart)] });
        Dynamics {
            frame,
            h: build_h_field(frame),
            euler: euler_field(),
            towers: [tower(Chart::U5), tower(Chart::U4)],
        }
    }

    pub fn frame(&self) -> &AdaptedFrame {
        self.frame
    }

    pub fn h(&self) -> &VectorField {
        &self.h
    }

    pub fn euler(&self) -> &VectorField {
        &self.euler
    }

    /// Symbolic `(ad h⃗)ⁱ ε₁` for `i = 0..=order`.
    pub fn ad_fields(&self, chart: Chart, order: usize) -> Result<Vec<VectorField>> {
        if order > MAX_AD_ORDER {
            return Err(Error::JetOrder { needed: order, available: MAX_AD_ORDER });
        }
        let mut guard = self.towers[chart.index()].lock().unwrap_or_else(|p| p.into_inner());
        let tower = &mut *guard;
        while tower.powers.len() <= order {
            let next = tower.ctx.bracket(&self.h, tower.powers.last().expect("non-empty"));
            tower.powers.push(next);
        }
        Ok(tower.powers[..=order].to_vec())
    }

    /// Numeric `wᵢ = ((ad h⃗)ⁱ ε₁)(λ̃)` for `i = 0..=order`.
    ///
    /// `h⃗` and `ε₁` are expanded to degree `order` at `λ̃` and bracketed as
    /// truncated polynomials; each bracket costs one degree, so the constant
    /// terms are exact up to rounding. This avoids the closed forms of
    /// [`Dynamics::ad_fields`], which grow geometrically with the order.
    pub fn ad_powers(&self, lambda: &CotangentPoint, order: usize, chart: Chart) -> Result<Vec<DVector<f64>>> {
        lambda.check_chart(chart)?;
        if order > MAX_AD_ORDER {
            return Err(Error::JetOrder { needed: order, available: MAX_AD_ORDER });
        }
        let pt = lambda.coords();
        let table = MonomialTable::get(7, order);
        let mut ev = TaylorEvaluator::new(table.clone(), &pt);
        let h = ev.eval_all(self.h.components())?;
        let mut w = ev.eval_all(eps1_field(chart).components())?;
        let value = |w: &[Vec<f64>]| DVector::from_iterator(7, w.iter().map(|p| p[0]));
        let mut out = vec![value(&w)];
        for i in 1..=order {
            w = table.bracket(&h, &w);
            for p in &mut w {
                table.truncate(p, order - i);
            }
            out.push(value(&w));
        }
        Ok(out)
    }

    pub fn h_at(&self, lambda: &CotangentPoint) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(self.h.eval(&lambda.coords())?))
    }

    pub fn euler_at(&self, lambda: &CotangentPoint) -> DVector<f64> {
        DVector::from_vec(vec![0.0, 0.0, 0.0, 0.0, 0.0, lambda.u4, lambda.u5])
    }

    /// Decomposes `w₄` over `w₀..w₃, h⃗, e⃗`.
    pub fn canonical_b(&self, lambda: &CotangentPoint, chart: Chart) -> Result<BCoefficients> {
        self.frame.require_generic(&lambda.q)?;
        let w = self.ad_powers(lambda, 4, chart)?;
        let mut cols: Vec<DVector<f64>> = w[..4].to_vec();
        cols.push(self.h_at(lambda)?);
        cols.push(self.euler_at(lambda));
        let a = linalg::columns(&cols);
        let ls = linalg::least_squares(&a, &w[4]);
        if ls.condition > MAX_CONDITION {
            return Err(Error::Degenerate(format!(
                "ad-decomposition condition number {:.3e} at {:?}",
                ls.condition, lambda
            )));
        }
        let scale = w.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let s = &ls.solution;
        Ok(BCoefficients {
            b: [s[0], s[1], s[2]],
            b3: s[3],
            h_coeff: s[4],
            euler_coeff: s[5],
            residual: ls.residual / scale.max(f64::MIN_POSITIVE),
            scale,
        })
    }

    /// Fixed-step classical Runge–Kutta integration of `h⃗` for time `t`.
    pub fn flow(&self, lambda: &CotangentPoint, t: f64, steps: usize) -> Result<CotangentPoint> {
        if steps == 0 || t == 0.0 {
            return Ok(*lambda);
        }
        let dt = t / steps as f64;
        let field = |x: &[f64]| -> Result<Vec<f64>> { Ok(self.h.eval(x)?) };
        let mut x = lambda.coords().to_vec();
        for _ in 0..steps {
            let k1 = field(&x)?;
            let x2: Vec<f64> = x.iter().zip(&k1).map(|(a, k)| a + 0.5 * dt * k).collect();
            let k2 = field(&x2)?;
            let x3: Vec<f64> = x.iter().zip(&k2).map(|(a, k)| a + 0.5 * dt * k).collect();
            let k3 = field(&x3)?;
            let x4: Vec<f64> = x.iter().zip(&k3).map(|(a, k)| a + dt * k).collect();
            let k4 = field(&x4)?;
            for i in 0..7 {
                x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Degenerate("flow state became non-finite".into()));
            }
        }
        CotangentPoint::from_coords(&x)
    }
}

/// Coefficients of `w₄ = B₀w₀ + B₁w₁ + B₂w₂ + B₃w₃ + αh⃗ + βe⃗`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BCoefficients {
    pub b: [f64; 3],
    /// Coefficient on `w₃`; vanishes for the canonical representative.
    pub b3: f64,
    pub h_coeff: f64,
    pub euler_coeff: f64,
    /// Least-squares residual divided by `scale`.
    pub residual: f64,
    /// `max ‖wᵢ‖`, `i = 0..=4`.
    pub scale: f64,
}

/// One-shot `(ad h⃗)ⁱ ε₁` evaluation; builds the symbolic tower per call.
pub fn ad_powers(frame: &AdaptedFrame, lambda: &CotangentPoint, order: usize, chart: Chart) -> Result<Vec<DVector<f64>>> {
    Dynamics::new(frame).ad_powers(lambda, order, chart)
}

pub fn canonical_b(frame: &AdaptedFrame, lambda: &CotangentPoint, chart: Chart) -> Result<BCoefficients> {
    Dynamics::new(frame).canonical_b(lambda, chart)
}

pub fn flow(frame: &AdaptedFrame, lambda: &CotangentPoint, t: f64, steps: usize) -> Result<CotangentPoint> {
    Dynamics::new(frame).flow(lambda, t, steps)
}

/// Projection `π_*` of a 7-vector to the base tangent space.
pub fn project(v: &DVector<f64>) -> DVector<f64> {
    v.rows(0, 5).into_owned()
}

/// Matrix with the given 7-vectors as columns.
pub fn as_matrix(vs: &[DVector<f64>]) -> DMatrix<f64> {
    linalg::columns(vs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn eps1_normalization() {
        for (chart, u4, u5) in [(Chart::U5, 0.3, -1.7), (Chart::U4, -2.1, 0.4)] {
            let v = eps1_field(chart).eval(&[0.0, 0.0, 0.0, 0.0, 0.0, u4, u5]).unwrap();
            assert!((v[U4] * u5 - v[U5] * u4 - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn chart_pole() {
        let f = AdaptedFrame::build(&models::flat());
        let d = Dynamics::new(&f);
        let lam = CotangentPoint::new([0.0; 5], 1.0, 0.0).unwrap();
        assert!(matches!(d.ad_powers(&lam, 0, Chart::U5), Err(Error::ChartPole(_))));
        let w = d.ad_powers(&lam, 0, Chart::U4).unwrap();
        assert_eq!(w[0][U5], -1.0);
    }

    #[test]
    fn zero_section_rejected() {
        assert!(CotangentPoint::new([0.0; 5], 0.0, 0.0).is_err());
    }

    #[test]
    fn chart_policy() {
        assert_eq!(Chart::for_fiber(1.0, 1.0), Chart::U5);
        assert_eq!(Chart::for_fiber(2.0, -1.0), Chart::U4);
    }

    #[test]
    fn budget_exceeded() {
        let f = AdaptedFrame::build(&models::flat());
        let lam = CotangentPoint::new([0.0; 5], 0.0, 1.0).unwrap();
        assert!(matches!(
            ad_powers(&f, &lam, MAX_AD_ORDER + 1, Chart::U5),
            Err(Error::JetOrder { .. })
        ));
    }

    #[test]
    fn flow_at_zero_time() {
        let f = AdaptedFrame::build(&models::flat());
        let lam = CotangentPoint::new([0.1, 0.2, 0.3, 0.4, 0.5], 0.6, 0.7).unwrap();
        assert_eq!(flow(&f, &lam, 0.0, 100).unwrap(), lam);
    }
}
