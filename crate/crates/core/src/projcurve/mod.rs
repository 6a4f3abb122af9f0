//! Curves in projective spaces, handled as finite jets at one parameter
//! value.
//!
//! A representative `ε` of a regular curve in `ℙ(ℝᵏ)` satisfies a linear
//! ODE `ε⁽ᵏ⁾ = Σ_{i<k} aᵢ(t) ε⁽ⁱ⁾`. Internally curves are carried as the
//! Taylor series of the `aᵢ` with per-coefficient precision, so rescaling
//! and reparameterization lose only the orders they genuinely consume.

mod series;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector2};

use crate::error::{Error, Result};

pub use series::{binomial, factorial, Series, EXACT, SERIES_CAP};
use series::{smat_add, smat_map, smat_mul, smat_zero, upper_solve, SMat};

/// Smallest accepted ratio of extreme singular values for a jet basis.
pub const REGULARITY_TOL: f64 = 1e-12;

/// Derivative vectors `ε(t₀), ε′(t₀), …, ε⁽ᴺ⁾(t₀)` in `ℝᵏ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveJet {
    t0: f64,
    vectors: Vec<DVector<f64>>,
}

impl CurveJet {
    pub fn new(vectors: Vec<DVector<f64>>) -> Result<CurveJet> {
        CurveJet::at(0.0, vectors)
    }

    pub fn at(t0: f64, vectors: Vec<DVector<f64>>) -> Result<CurveJet> {
        let k = vectors.first().map(|v| v.len()).unwrap_or(0);
        if k < 2 {
            return Err(Error::Invalid("curve jet needs vectors of dimension at least 2".into()));
        }
        if vectors.iter().any(|v| v.len() != k) {
            return Err(Error::Invalid("curve jet vectors differ in dimension".into()));
        }
        Ok(CurveJet { t0, vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    /// Highest derivative order present.
    pub fn order(&self) -> usize {
        self.vectors.len() - 1
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    pub fn derivative(&self, j: usize) -> &DVector<f64> {
        &self.vectors[j]
    }

    /// `[ε, ε′, …, ε⁽ᵏ⁻¹⁾]` as columns.
    pub fn basis_matrix(&self) -> Result<DMatrix<f64>> {
        let k = self.dim();
        if self.vectors.len() < k {
            return Err(Error::JetOrder { needed: k - 1, available: self.order() });
        }
        Ok(DMatrix::from_columns(&self.vectors[..k]))
    }

    /// Errors unless `ε, …, ε⁽ᵏ⁻¹⁾` span the space.
    pub fn check_regular(&self) -> Result<DMatrix<f64>> {
        let e = self.basis_matrix()?;
        let s = crate::linalg::singular_values(&e);
        let ratio = s.last().copied().unwrap_or(0.0) / s.first().copied().unwrap_or(1.0);
        if !(ratio > REGULARITY_TOL) {
            return Err(Error::Irregular(format!("jet basis singular value ratio {ratio:.3e}")));
        }
        Ok(e)
    }
}

/// Coefficient series of `ε⁽ᵏ⁾ = Σ aᵢ ε⁽ⁱ⁾`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOde {
    a: Vec<Series>,
}

impl LinearOde {
    pub fn new(a: Vec<Series>) -> LinearOde {
        LinearOde { a }
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    pub fn coeff(&self, i: usize) -> &Series {
        &self.a[i]
    }

    pub fn coeffs(&self) -> &[Series] {
        &self.a
    }

    /// Companion matrix `C` with `E′ = E C` for `E = [ε, …, ε⁽ᵏ⁻¹⁾]`.
    fn companion(&self) -> SMat {
        let k = self.k();
        let mut c = smat_zero(k);
        for j in 0..k - 1 {
            c[j + 1][j] = Series::one();
        }
        for i in 0..k {
            c[i][k - 1] = self.a[i].clone();
        }
        c
    }

    fn from_companion(c: &SMat) -> LinearOde {
        let k = c.len();
        LinearOde { a: (0..k).map(|i| c[i][k - 1].clone()).collect() }
    }

    /// ODE of the representative `f ε` with `f′/f = φ`.
    pub fn rescale(&self, phi: &Series) -> LinearOde {
        self.rescale_with_frame(phi).0
    }

    // also returns T̂ with E_{fε} = f E T̂
    fn rescale_with_frame(&self, phi: &Series) -> (LinearOde, SMat) {
        let k = self.k();
        // Yₘ = f⁽ᵐ⁾/f
        let mut y = vec![Series::one()];
        for m in 0..k - 1 {
            let next = y[m].deriv().add(&phi.mul(&y[m]));
            y.push(next);
        }
        let mut t = smat_zero(k);
        for n in 0..k {
            for j in 0..=n {
                t[j][n] = y[n - j].scale(binomial(n, j));
            }
        }
        let rhs = smat_add(
            &smat_add(&smat_mul(&self.companion(), &t), &smat_map(&t, |s| s.mul(phi))),
            &smat_map(&t, Series::deriv),
        );
        let ct = upper_solve(&t, &rhs).expect("unitriangular");
        (LinearOde::from_companion(&ct), t)
    }

    /// Canonical representative: the `ε⁽ᵏ⁻¹⁾` coefficient is removed by the
    /// rescaling `f′/f = −a_{k−1}/k`, and is then zero at every order.
    pub fn canonical(&self) -> DecompJet {
        self.canonical_with_frame().0
    }

    fn canonical_with_frame(&self) -> (DecompJet, SMat) {
        let k = self.k();
        let phi = self.a[k - 1].scale(-1.0 / k as f64);
        let (mut ode, t) = self.rescale_with_frame(&phi);
        ode.a[k - 1] = Series::zero();
        ode.a.pop();
        (DecompJet { b: ode.a }, t)
    }

    /// ODE of `τ ↦ ε(φ(τ))`.
    pub fn reparameterize(&self, phi: &ReparamJet) -> LinearOde {
        let k = self.k();
        let ph = phi.series();
        let dph = ph.deriv();
        // ε̂⁽ⁿ⁾ = Σⱼ P[j][n] ε⁽ʲ⁾(φ)
        let mut p = smat_zero(k);
        p[0][0] = Series::one();
        for n in 0..k - 1 {
            for j in 0..=n + 1 {
                let mut s = p[j][n].deriv();
                if j > 0 {
                    s = s.add(&dph.mul(&p[j - 1][n]));
                }
                p[j][n + 1] = s;
            }
        }
        let composed = LinearOde { a: self.a.iter().map(|s| s.compose(&ph)).collect() };
        let rhs = smat_add(
            &smat_map(&smat_mul(&composed.companion(), &p), |s| s.mul(&dph)),
            &smat_map(&p, Series::deriv),
        );
        let ch = upper_solve(&p, &rhs).expect("φ′(0) ≠ 0");
        LinearOde::from_companion(&ch)
    }

    /// Jet of the solution with `[ε, …, ε⁽ᵏ⁻¹⁾](0) = e0`, as far as the
    /// coefficient precision allows (at most `max_order`).
    pub fn jet(&self, e0: &DMatrix<f64>, max_order: usize) -> Result<CurveJet> {
        let k = self.k();
        let c = self.companion();
        let mut v: Vec<Series> = (0..k).map(|i| if i == 0 { Series::one() } else { Series::zero() }).collect();
        let mut out = Vec::new();
        for _ in 0..=max_order {
            let Some(vals) = v.iter().map(Series::value).collect::<Option<Vec<f64>>>() else {
                break;
            };
            out.push(e0 * DVector::from_vec(vals));
            v = (0..k)
                .map(|i| {
                    let mut s = v[i].deriv();
                    for (m, vm) in v.iter().enumerate() {
                        s = s.add(&c[i][m].mul(vm));
                    }
                    s
                })
                .collect();
        }
        CurveJet::new(out)
    }
}

/// Coefficients `B₀..B_{k−2}` of a canonical representative,
/// `ε⁽ᵏ⁾ = Σ_{i≤k−2} Bᵢ ε⁽ⁱ⁾`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecompJet {
    b: Vec<Series>,
}

impl DecompJet {
    pub fn new(b: Vec<Series>) -> DecompJet {
        DecompJet { b }
    }

    /// Dimension of the ambient space.
    pub fn k(&self) -> usize {
        self.b.len() + 1
    }

    pub fn b(&self, i: usize) -> &Series {
        &self.b[i]
    }

    pub fn coeffs(&self) -> &[Series] {
        &self.b
    }

    /// `Bᵢ⁽ⁿ⁾(0)`, or a jet-order error.
    pub fn derivative(&self, i: usize, n: usize) -> Result<f64> {
        self.b[i].derivative_at(n).ok_or(Error::JetOrder { needed: n, available: self.b[i].prec().saturating_sub(1) })
    }

    pub fn ode(&self) -> LinearOde {
        let mut a = self.b.clone();
        a.push(Series::zero());
        LinearOde { a }
    }

    /// Canonical coefficients in the parameter `τ`, `t = φ(τ)`.
    pub fn reparameterize(&self, phi: &ReparamJet) -> DecompJet {
        self.ode().reparameterize(phi).canonical()
    }

    fn scale(&self) -> f64 {
        self.b.iter().fold(1.0_f64, |m, s| m.max(s.max_abs()))
    }
}

/// Linear-ODE coefficients of a jet, by a triangular solve on its
/// derivatives.
pub fn ode_from_jet(jet: &CurveJet) -> Result<LinearOde> {
    let k = jet.dim();
    let e = jet.check_regular()?;
    if jet.order() < k {
        return Err(Error::JetOrder { needed: k, available: jet.order() });
    }
    let lu = e.lu();
    let coords: Vec<DVector<f64>> = jet
        .vectors
        .iter()
        .map(|v| lu.solve(v).ok_or_else(|| Error::Irregular("singular jet basis".into())))
        .collect::<Result<_>>()?;
    let levels = jet.order() - k + 1;
    // d[m][i] = aᵢ⁽ᵐ⁾(0)
    let mut d: Vec<Vec<f64>> = Vec::with_capacity(levels);
    for m in 0..levels {
        let mut rest = coords[k + m].clone();
        for (l, dl) in d.iter().enumerate() {
            let w = binomial(m, l);
            for (i, a) in dl.iter().enumerate() {
                rest -= &coords[i + m - l] * (w * a);
            }
        }
        d.push(rest.iter().copied().collect());
    }
    let a = (0..k)
        .map(|i| Series::from_derivatives(&d.iter().map(|row| row[i]).collect::<Vec<_>>()))
        .collect();
    Ok(LinearOde { a })
}

/// Rescales the representative to the canonical one, returning its jet
/// (with `f(t₀) = 1`) and its decomposition coefficients.
pub fn canonicalize(jet: &CurveJet) -> Result<(CurveJet, DecompJet)> {
    let ode = ode_from_jet(jet)?;
    let (dec, t) = ode.canonical_with_frame();
    let t0 = DMatrix::from_fn(t.len(), t.len(), |r, c| t[r][c].value().unwrap_or(0.0));
    let e0 = jet.basis_matrix()? * t0;
    let mut out = dec.ode().jet(&e0, jet.order())?;
    out.t0 = jet.t0;
    Ok((out, dec))
}

/// Decomposition of a jet already known to be canonical; the top
/// coefficient must vanish at every available order within `tol`
/// (relative to the largest coefficient).
pub fn decomposition_of_canonical(jet: &CurveJet, tol: f64) -> Result<DecompJet> {
    let mut ode = ode_from_jet(jet)?;
    let k = ode.k();
    let scale = ode.a.iter().fold(1.0_f64, |m, s| m.max(s.max_abs()));
    let top = ode.a[k - 1].max_abs();
    if top > tol * scale {
        return Err(Error::Degenerate(format!("jet is not canonical: top coefficient {top:.3e}")));
    }
    ode.a.pop();
    Ok(DecompJet { b: ode.a })
}

/// Jet of `φ` at `τ₀` with `φ(τ₀) = t₀` implied: `[φ′, φ″, …]`. Orders past
/// the given ones are taken as zero, so `φ` is a polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct ReparamJet {
    derivs: Vec<f64>,
}

impl ReparamJet {
    pub fn new(derivs: Vec<f64>) -> Result<ReparamJet> {
        match derivs.first() {
            Some(d) if *d != 0.0 && d.is_finite() => Ok(ReparamJet { derivs }),
            _ => Err(Error::Invalid("reparameterization needs φ′(τ₀) ≠ 0".into())),
        }
    }

    pub fn identity() -> ReparamJet {
        ReparamJet { derivs: vec![1.0] }
    }

    /// `φ⁽ⁿ⁾(τ₀)` for `n ≥ 1`.
    pub fn derivative(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.derivs.get(n - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn derivatives(&self) -> &[f64] {
        &self.derivs
    }

    /// `φ(τ) − t₀` as an exact polynomial in `τ − τ₀`.
    pub fn series(&self) -> Series {
        let mut c = vec![0.0];
        for (n, d) in self.derivs.iter().enumerate() {
            c.push(d / factorial(n + 1));
        }
        Series::exact(c)
    }
}

/// Jet of `ε∘φ` by Faà di Bruno composition.
pub fn reparameterize(jet: &CurveJet, phi: &ReparamJet) -> Result<CurveJet> {
    let ph = phi.series();
    let k = jet.dim();
    let comps: Vec<Series> = (0..k)
        .map(|r| Series::from_derivatives(&jet.vectors.iter().map(|v| v[r]).collect::<Vec<_>>()).compose(&ph))
        .collect();
    let n = jet.order();
    let vectors = (0..=n)
        .map(|j| DVector::from_iterator(k, comps.iter().map(|s| s.derivative_at(j).expect("composition keeps order"))))
        .collect();
    CurveJet::at(jet.t0, vectors)
}

/// `𝕊(φ) = (φ″/2φ′)′ − (φ″/2φ′)²`.
pub fn schwarzian(phi: &ReparamJet) -> Series {
    let d = phi.series().deriv();
    let r = d.deriv().mul(&d.recip().expect("φ′ ≠ 0")).scale(0.5);
    r.deriv().sub(&r.mul(&r))
}

/// Coefficient of `𝕊(φ)` in the transformation law of `B_{k−2}`,
/// `n(n²−1)/6` with `n = k`.
pub fn schwarzian_weight(k: usize) -> f64 {
    let n = k as f64;
    n * (n * n - 1.0) / 6.0
}

/// Right-hand side of the reparameterization rule,
/// `φ′² B_{k−2}(φ) − (n(n²−1)/6) 𝕊(φ)`.
pub fn reparameterized_top(b_top: &Series, phi: &ReparamJet, k: usize) -> Series {
    let d = phi.series().deriv();
    d.mul(&d).mul(&b_top.compose(&phi.series())).sub(&schwarzian(phi).scale(schwarzian_weight(k)))
}

/// Reduction of the curve by its point `ℓ = ℝε(t₀)`, with `Π_ℓ` realized
/// as coordinates in the basis `Πε′, …, Πε⁽ᵏ⁻¹⁾`.
pub fn reduce_by_point(jet: &CurveJet) -> Result<CurveJet> {
    let e = jet.check_regular()?;
    let complement = e.columns(1, jet.dim() - 1).into_owned();
    reduce_by_point_with(jet, &complement)
}

/// Reduction with `Π_ℓ` realized as coordinates in the given complement
/// (`k × (k−1)` matrix whose columns together with `ε(t₀)` form a basis).
pub fn reduce_by_point_with(jet: &CurveJet, complement: &DMatrix<f64>) -> Result<CurveJet> {
    let k = jet.dim();
    if complement.shape() != (k, k - 1) {
        return Err(Error::Invalid(format!("complement must be {k}×{}", k - 1)));
    }
    if jet.order() < 2 {
        return Err(Error::JetOrder { needed: 2, available: jet.order() });
    }
    let mut basis = DMatrix::zeros(k, k);
    basis.set_column(0, &jet.vectors[0]);
    basis.columns_mut(1, k - 1).copy_from(complement);
    let lu = basis.lu();
    let project = |v: &DVector<f64>| -> Result<DVector<f64>> {
        let c = lu.solve(v).ok_or_else(|| Error::Irregular("complement meets the reduction point".into()))?;
        Ok(c.rows(1, k - 1).into_owned())
    };
    let first = project(&jet.vectors[1])?;
    if first.norm() <= REGULARITY_TOL * jet.vectors[1].norm() {
        return Err(Error::Irregular("ε′(t₀) lies in the reduction point".into()));
    }
    let vectors = (1..=jet.order())
        .map(|j| Ok(project(&jet.vectors[j])? / j as f64))
        .collect::<Result<Vec<_>>>()?;
    CurveJet::at(jet.t0, vectors)
}

/// Symmetric coefficient matrix of a conic in a 3-dimensional space
/// (homogeneous coordinates `(y₀, y₁, y₂)`), up to scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadricCoeffs {
    m: Matrix3<f64>,
}

impl QuadricCoeffs {
    pub fn new(m: Matrix3<f64>) -> Result<QuadricCoeffs> {
        if (m - m.transpose()).abs().max() > 1e-12 * m.abs().max() {
            return Err(Error::Invalid("quadric matrix must be symmetric".into()));
        }
        if m.iter().all(|v| *v == 0.0) {
            return Err(Error::Invalid("quadric matrix is zero".into()));
        }
        Ok(QuadricCoeffs { m })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn eval(&self, y: &[f64; 3]) -> f64 {
        let v = nalgebra::Vector3::from_row_slice(y);
        v.dot(&(self.m * v))
    }

    /// Frobenius-normalized with the sign fixed by the largest entry.
    pub fn normalized(&self) -> Matrix3<f64> {
        let mut n = self.m / self.m.norm();
        let pivot = n.iter().copied().fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a });
        if pivot < 0.0 {
            n = -n;
        }
        n
    }

    pub fn proportional_to(&self, other: &QuadricCoeffs, tol: f64) -> bool {
        let a = self.m / self.m.norm();
        let b = other.m / other.m.norm();
        (a - b).norm() <= tol || (a + b).norm() <= tol
    }
}

/// Derivatives `1..=4` at `0` of a plane curve `t ↦ (α₁(t), α₂(t))` through
/// the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneJet {
    pub alpha1: [f64; 4],
    pub alpha2: [f64; 4],
}

impl PlaneJet {
    fn derivative(&self, n: usize) -> Vector2<f64> {
        Vector2::new(self.alpha1[n - 1], self.alpha2[n - 1])
    }

    /// Image under a constant linear change of the affine coordinates.
    pub fn transform(&self, a: &Matrix2<f64>) -> PlaneJet {
        let mut out = *self;
        for n in 1..=4 {
            let v = a * self.derivative(n);
            out.alpha1[n - 1] = v[0];
            out.alpha2[n - 1] = v[1];
        }
        out
    }

    /// Whether the normalization `α₁′ = 1/2, α₂′ = 0, α₁″ = 0, α₂″ = 1/3`
    /// holds within `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.alpha1[0] - 0.5).abs() <= tol
            && self.alpha2[0].abs() <= tol
            && self.alpha1[1].abs() <= tol
            && (self.alpha2[1] - 1.0 / 3.0).abs() <= tol
    }
}

/// Osculating conic of a normalized plane jet:
/// `(2/3)y₁² + 2α₂‴y₁y₂ − (4α₁‴ + 6(α₂‴)² − (3/2)α₂⁗)y₂² − y₀y₂ = 0`.
pub fn osculating_quadric_normalized(alpha: &PlaneJet) -> Result<QuadricCoeffs> {
    if !alpha.is_normalized(1e-12) {
        return Err(Error::Invalid("plane jet violates the osculating-conic normalization".into()));
    }
    let a13 = alpha.alpha1[2];
    let a23 = alpha.alpha2[2];
    let a24 = alpha.alpha2[3];
    let y2y2 = -(4.0 * a13 + 6.0 * a23 * a23 - 1.5 * a24);
    QuadricCoeffs::new(Matrix3::new(
        0.0, 0.0, -0.5, //
        0.0, 2.0 / 3.0, a23, //
        -0.5, a23, y2y2,
    ))
}

/// Osculating conic of any regular plane jet through the origin, via the
/// linear change of coordinates that normalizes it.
pub fn osculating_quadric(alpha: &PlaneJet) -> Result<QuadricCoeffs> {
    let frame = Matrix2::from_columns(&[alpha.derivative(1), alpha.derivative(2)]);
    let inv = frame
        .try_inverse()
        .filter(|_| frame.determinant().abs() > REGULARITY_TOL * frame.norm_squared())
        .ok_or_else(|| Error::Irregular("α′ and α″ are dependent".into()))?;
    let a = Matrix2::new(0.5, 0.0, 0.0, 1.0 / 3.0) * inv;
    let mut normalized = alpha.transform(&a);
    // remove rounding so the normalization check is exact
    normalized.alpha1[0] = 0.5;
    normalized.alpha2[0] = 0.0;
    normalized.alpha1[1] = 0.0;
    normalized.alpha2[1] = 1.0 / 3.0;
    let q = osculating_quadric_normalized(&normalized)?;
    let mut lift = Matrix3::identity();
    lift.fixed_view_mut::<2, 2>(1, 1).copy_from(&a);
    let m = lift.transpose() * q.matrix() * lift;
    QuadricCoeffs::new((m + m.transpose()) * 0.5)
}

/// Affine chart `(Y₁/Y₀, Y₂/Y₀)` of a 3-dimensional jet whose base vector
/// lies on the `Y₀` axis.
pub fn plane_jet(jet: &CurveJet) -> Result<PlaneJet> {
    if jet.dim() != 3 {
        return Err(Error::Invalid(format!("plane jet needs dimension 3, got {}", jet.dim())));
    }
    if jet.order() < 4 {
        return Err(Error::JetOrder { needed: 4, available: jet.order() });
    }
    let v0 = &jet.vectors[0];
    if v0[0] == 0.0 || v0[1].abs().max(v0[2].abs()) > 1e-12 * v0[0].abs() {
        return Err(Error::Invalid("base point of the plane jet must lie on the first axis".into()));
    }
    let comp = |r: usize| Series::from_derivatives(&jet.vectors.iter().take(5).map(|v| v[r]).collect::<Vec<_>>());
    let inv = comp(0).recip().expect("nonzero base");
    let a1 = comp(1).mul(&inv);
    let a2 = comp(2).mul(&inv);
    let d = |s: &Series, n: usize| s.derivative_at(n).expect("order 4 available");
    Ok(PlaneJet {
        alpha1: [d(&a1, 1), d(&a1, 2), d(&a1, 3), d(&a1, 4)],
        alpha2: [d(&a2, 1), d(&a2, 2), d(&a2, 3), d(&a2, 4)],
    })
}

/// Osculating cone `(2/3)Y₁² − (7/10)B₂Y₂² − Y₀Y₂ = 0` of the reduction of a
/// canonical curve in `ℝ⁴`, in the basis `(Πε′, Πε″, Πε‴)`.
pub fn osculating_cone_from_b(b2: f64) -> QuadricCoeffs {
    QuadricCoeffs::new(Matrix3::new(
        0.0, 0.0, -0.5, //
        0.0, 2.0 / 3.0, 0.0, //
        -0.5, 0.0, -0.7 * b2,
    ))
    .expect("nonzero")
}

/// Result of a projective normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveFrame {
    pub decomposition: DecompJet,
    pub phi: ReparamJet,
}

/// Finds `φ` with prescribed `φ′(0), φ″(0)` making `B̃_{k−2}` vanish at
/// orders `0..=kill_order`, solving for `φ‴, φ⁗, …` in turn.
pub fn projective_normalize_decomp(
    dec: &DecompJet,
    kill_order: usize,
    first: f64,
    second: f64,
) -> Result<ProjectiveFrame> {
    let k = dec.k();
    let top = k - 2;
    let mut derivs = vec![first, second];
    let coeff_at = |derivs: &[f64], j: usize| -> Result<f64> {
        let phi = ReparamJet::new(derivs.to_vec())?;
        dec.reparameterize(&phi)
            .b(top)
            .coeff(j)
            .ok_or(Error::JetOrder { needed: j, available: dec.b(top).prec().saturating_sub(1) })
    };
    for j in 0..=kill_order {
        let mut probe = derivs.clone();
        probe.push(0.0);
        let at0 = coeff_at(&probe, j)?;
        *probe.last_mut().expect("pushed") = 1.0;
        let slope = coeff_at(&probe, j)? - at0;
        if slope.abs() < 1e-300 {
            return Err(Error::Degenerate("projective normalization has no Schwarzian term".into()));
        }
        derivs.push(-at0 / slope);
    }
    let phi = ReparamJet::new(derivs)?;
    Ok(ProjectiveFrame { decomposition: dec.reparameterize(&phi), phi })
}

/// Projective normalization of a jet; see [`projective_normalize_decomp`].
pub fn projective_normalize(jet: &CurveJet, kill_order: usize) -> Result<(CurveJet, ReparamJet)> {
    let (canon, dec) = canonicalize(jet)?;
    let pf = projective_normalize_decomp(&dec, kill_order, 1.0, 0.0)?;
    let reparam = reparameterize(&canon, &pf.phi)?;
    let (normalized, _) = canonicalize(&reparam)?;
    Ok((normalized, pf.phi))
}

/// Orders of `B̃_{k−2}` killed before reading off invariants.
fn kill_order_for(i: usize) -> usize {
    i
}

/// `𝒲ᵢ` of a canonical decomposition, on the unit shift of its parameter.
pub fn wilczynski_decomp(dec: &DecompJet, i: usize) -> Result<f64> {
    let k = dec.k();
    if i == 0 || i > 2 || k < i + 2 {
        return Err(Error::Invalid(format!("Wilczynski invariant {i} undefined for k = {k}")));
    }
    let pf = projective_normalize_decomp(dec, kill_order_for(i), 1.0, 0.0)?;
    wilczynski_projective(&pf.decomposition, i)
}

/// `𝒲ᵢ` read off in a parameter that is already projective.
pub fn wilczynski_projective(dec: &DecompJet, i: usize) -> Result<f64> {
    let k = dec.k();
    match i {
        1 if k >= 3 => dec.derivative(k - 3, 0),
        2 if k >= 4 => Ok(dec.derivative(k - 4, 0)? - (k as f64 - 3.0) / 2.0 * dec.derivative(k - 3, 1)?),
        _ => Err(Error::Invalid(format!("Wilczynski invariant {i} undefined for k = {k}"))),
    }
}

pub fn wilczynski(jet: &CurveJet, i: usize) -> Result<f64> {
    let (_, dec) = canonicalize(jet)?;
    wilczynski_decomp(&dec, i)
}

/// `(𝒲₁, 𝒲₁′)` of a plane curve: the Wilczynski invariant and its
/// derivative in a projective parameter, on the unit shift.
pub fn w1_and_derivative_decomp(dec: &DecompJet) -> Result<(f64, f64)> {
    if dec.k() != 3 {
        return Err(Error::Invalid(format!("derivative of 𝒲₁ needs a plane curve, got k = {}", dec.k())));
    }
    let pf = projective_normalize_decomp(dec, 2, 1.0, 0.0)?;
    Ok((pf.decomposition.derivative(0, 0)?, pf.decomposition.derivative(0, 1)?))
}

/// Derivative of `𝒲₁` at a point where `𝒲₁` vanishes (relative `tol`).
pub fn w1_derivative(jet: &CurveJet, tol: f64) -> Result<f64> {
    let (_, dec) = canonicalize(jet)?;
    let (w1, dw1) = w1_and_derivative_decomp(&dec)?;
    if w1.abs() > tol * dec.scale() {
        return Err(Error::Degenerate(format!("𝒲₁ = {w1:.3e} does not vanish; its derivative is not invariant")));
    }
    Ok(dw1)
}
