//! Serializable reports. Field order is fixed by declaration, so output is
//! byte-deterministic for fixed inputs.

use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Tolerances {
    pub tol: f64,
    pub reconstruction: f64,
    pub quartic_zero: f64,
    pub held_out: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub model: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub points: Vec<PointReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<String>,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PointReport {
    pub point: [f64; 5],
    /// Columns `X₁(q), …, X₅(q)` in chart coordinates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame_basis: Option<Vec<[f64; 5]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_vector: Option<[usize; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cone: Option<ConeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quartic: Option<QuarticReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FormReport {
    /// Symmetric matrix in the adapted-frame basis.
    pub matrix: [[f64; 5]; 5],
    /// `(positive, negative, zero)`.
    pub signature: [usize; 3],
}

#[derive(Clone, Debug, Serialize)]
pub struct FitSummary {
    pub singular_values: Vec<f64>,
    pub gap: f64,
    pub sample_points: usize,
    pub max_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeReport {
    pub route: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed: Option<FormReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometric: Option<FormReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSummary>,
    /// `min ‖A ∓ B‖` of the Frobenius-normalized matrices.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conformal_residual: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuarticReport {
    pub normalization: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<[f64; 2]>,
    /// `−(1/5)` times the derivative of `𝒲₁` of the reduced curve.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// `−(1/25)·𝒲₂` of the curve itself.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_via_w2: Option<f64>,
    /// `(a₀, …, a₄)` of `a₀v₁⁴ + a₁v₁³v₂ + a₂v₁²v₂² + a₃v₁v₂³ + a₄v₂⁴`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<[f64; 5]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub held_out_residual: Option<f64>,
    /// Largest `|𝒲₁|` of the reduced curves.
    pub w1_max: f64,
    /// Relative disagreement of the two routes as printed.
    pub route_residual: f64,
    /// Relative disagreement after the factor 25/21 between the routes.
    pub route_residual_scaled: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusEntry {
    pub file: String,
    pub reports: Vec<Report>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusReport {
    pub command: String,
    pub dir: String,
    pub seed: u64,
    pub models: Vec<CorpusEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub pass: bool,
}
