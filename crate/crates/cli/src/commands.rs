use dist25::cone::{self, signature, xi_closed_form, xi_geometric, QuadraticForm5};
use dist25::frame::{growth_vector, AdaptedFrame};
use dist25::quartic::QuarticPipeline;
use dist25::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::ModelFile;
use crate::report::*;
use crate::CliError;

/// Normalization of the reported quartic.
pub const NORMALIZATION: &str =
    "-1/5 * derivative of W1 of the reduced curve on the unit flow shift, at lambda = (q; u4, u5) = (q; v2, -v1)";

/// Ratio of the two quartic routes as implemented.
const ROUTE_FACTOR: f64 = 25.0 / 21.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Route {
    Closed,
    Geometric,
    Both,
}

impl Route {
    fn name(self) -> &'static str {
        match self {
            Route::Closed => "closed",
            Route::Geometric => "geometric",
            Route::Both => "both",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Settings {
    pub n_fiber: usize,
    pub n_cone: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Settings {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances { tol: self.tol, reconstruction: 1e-9, quartic_zero: 1e-7, held_out: 1e-6 }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_fiber < 8 || self.n_cone < 6 {
            return Err(CliError::Input(format!(
                "--n-fiber must be at least 8 and --n-cone at least 6 (got {} and {})",
                self.n_fiber, self.n_cone
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::Input(format!("--tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

pub struct Context {
    pub model: ModelFile,
    pub frame: AdaptedFrame,
    pub settings: Settings,
}

impl Context {
    pub fn new(model: ModelFile, settings: Settings) -> Result<Context, CliError> {
        settings.validate()?;
        let frame = AdaptedFrame::build(&model.distribution()?);
        Ok(Context { model, frame, settings })
    }

    fn report(&self, command: &str, points: Vec<PointReport>, verdicts: Vec<String>) -> Report {
        let pass = verdicts.is_empty() && points.iter().all(|p| p.pass);
        Report {
            command: command.into(),
            model: self.model.name.clone(),
            seed: self.settings.seed,
            tolerances: self.settings.tolerances(),
            points,
            verdicts,
            pass,
        }
    }

    fn frame_basis(&self, q: &[f64; 5]) -> Option<Vec<[f64; 5]>> {
        let m = self.frame.matrix_at(q).ok()?;
        Some((0..5).map(|c| std::array::from_fn(|r| m[(r, c)])).collect())
    }

    pub fn check(&self, points: &[[f64; 5]]) -> Report {
        let brackets: Vec<_> = (1..=5)
            .flat_map(|i| ((i + 1)..=5).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, self.frame.field(i).bracket(self.frame.field(j)).expect("5-dimensional fields")))
            .collect();
        let reports = points
            .iter()
            .map(|q| {
                let mut r = PointReport { point: *q, frame_basis: self.frame_basis(q), ..Default::default() };
                let run = || -> Result<([usize; 3], f64), Error> {
                    let g = growth_vector(&self.frame, q)?;
                    let f = self.frame.matrix_at(q)?;
                    let c = self.frame.structure_at(q)?;
                    let mut worst: f64 = 0.0;
                    for (i, j, br) in &brackets {
                        let b = br.eval(q)?;
                        let mut err: f64 = 0.0;
                        let mut norm: f64 = 0.0;
                        for row in 0..5 {
                            let rebuilt: f64 = (0..5).map(|k| f[(row, k)] * c[j - 1][i - 1][k]).sum();
                            err += (rebuilt - b[row]).powi(2);
                            norm += b[row] * b[row];
                        }
                        worst = worst.max(err.sqrt() / (1.0 + norm.sqrt()));
                    }
                    Ok((g.0, worst))
                };
                match run() {
                    Ok((g, resid)) => {
                        r.growth_vector = Some(g);
                        r.reconstruction_residual = Some(resid);
                        r.pass = g == [2, 3, 5] && resid <= self.settings.tolerances().reconstruction;
                    }
                    Err(e) => r.error = Some(e.to_string()),
                }
                r
            })
            .collect();
        self.report("check", reports, Vec::new())
    }

    pub fn cone(&self, points: &[[f64; 5]], route: Route) -> Report {
        let reports = points
            .iter()
            .map(|q| {
                let mut r = PointReport { point: *q, frame_basis: self.frame_basis(q), ..Default::default() };
                match self.cone_at(q, route) {
                    Ok((c, pass)) => {
                        r.cone = Some(c);
                        r.pass = pass;
                    }
                    Err(e) => r.error = Some(e.to_string()),
                }
                r
            })
            .collect();
        self.report(if route == Route::Both { "crosscheck" } else { "cone" }, reports, Vec::new())
    }

    fn cone_at(&self, q: &[f64; 5], route: Route) -> Result<(ConeReport, bool), Error> {
        let closed = match route {
            Route::Closed | Route::Both => Some(xi_closed_form(&self.frame, q)?),
            Route::Geometric => None,
        };
        let geometric = match route {
            Route::Geometric | Route::Both => Some(xi_geometric(&self.frame, q, self.settings.n_fiber, self.settings.n_cone)?),
            Route::Closed => None,
        };
        let residual = match (&closed, &geometric) {
            (Some(a), Some((b, _))) => Some(conformal_residual(a, b)),
            _ => None,
        };
        let forms: Vec<&QuadraticForm5> = closed.iter().chain(geometric.iter().map(|(f, _)| f)).collect();
        let signatures_ok = forms.iter().all(|f| signature(f) == (3, 2, 0));
        let pass = signatures_ok && residual.is_none_or(|r| r <= self.settings.tol);
        let report = ConeReport {
            route: route.name().into(),
            closed: closed.as_ref().map(form_report),
            geometric: geometric.as_ref().map(|(f, _)| form_report(f)),
            fit: geometric.as_ref().map(|(_, fit)| FitSummary {
                singular_values: fit.singular_values.clone(),
                gap: fit.gap,
                sample_points: fit.points,
                max_residual: fit.max_residual,
            }),
            conformal_residual: residual,
        };
        Ok((report, pass))
    }

    pub fn quartic(&self, points: &[[f64; 5]], direction: Option<[f64; 2]>) -> Report {
        let pipeline = QuarticPipeline::new(&self.frame);
        let mut rng = ChaCha8Rng::seed_from_u64(self.settings.seed);
        let zero = self.settings.tolerances().quartic_zero;
        let expect_flat = self.model.expect.flat;
        let mut largest: f64 = 0.0;
        let reports: Vec<PointReport> = points
            .iter()
            .map(|q| {
                let mut r = PointReport { point: *q, frame_basis: self.frame_basis(q), ..Default::default() };
                let result = match direction {
                    Some(v) => self.quartic_direction(&pipeline, q, v),
                    None => self.quartic_full(&pipeline, q, &mut rng),
                };
                match result {
                    Ok((report, size)) => {
                        largest = largest.max(size);
                        let flat_ok = expect_flat != Some(true) || size <= zero;
                        let fit_ok = report.held_out_residual.is_none_or(|h| h <= self.settings.tolerances().held_out);
                        r.pass = flat_ok && fit_ok && report.route_residual_scaled <= self.settings.tol;
                        r.quartic = Some(report);
                    }
                    Err(e) => r.error = Some(e.to_string()),
                }
                r
            })
            .collect();
        let mut verdicts = Vec::new();
        match expect_flat {
            Some(true) if largest > zero => verdicts.push(format!("expected flat, but the quartic reaches {largest:.3e}")),
            Some(false) if reports.iter().all(|r| r.error.is_none()) && largest <= zero => {
                verdicts.push("expected non-flat, but the quartic vanishes at every point".into())
            }
            _ => {}
        }
        self.report("quartic", reports, verdicts)
    }

    fn quartic_direction(&self, p: &QuarticPipeline, q: &[f64; 5], v: [f64; 2]) -> Result<(QuarticReport, f64), Error> {
        let r = p.evaluate(q, v)?;
        let report = QuarticReport {
            normalization: NORMALIZATION.into(),
            direction: Some(v),
            value: Some(r.value),
            value_via_w2: Some(r.via_w2),
            coefficients: None,
            held_out_residual: None,
            w1_max: r.w1.abs(),
            route_residual: route_residual(r.value, r.via_w2),
            route_residual_scaled: route_residual(r.value, ROUTE_FACTOR * r.via_w2),
        };
        Ok((report, r.value.abs()))
    }

    fn quartic_full(&self, p: &QuarticPipeline, q: &[f64; 5], rng: &mut ChaCha8Rng) -> Result<(QuarticReport, f64), Error> {
        let fit = p.polynomial(q)?;
        let mut held_out = fit.relative_residual;
        let mut samples = fit.samples.clone();
        let size = samples.iter().fold(0.0_f64, |m, s| m.max(s.value.abs()));
        for _ in 0..3 {
            let v = dist25::quartic::direction(rng.random_range(0.0..1.0));
            let r = p.evaluate(q, v)?;
            if size > 0.0 {
                held_out = held_out.max((fit.quartic.eval(v) - r.value).abs() / size);
            }
            samples.push(r);
        }
        let fold = |f: &dyn Fn(&dist25::quartic::QuarticValue) -> f64| samples.iter().map(f).fold(0.0, f64::max);
        let report = QuarticReport {
            normalization: NORMALIZATION.into(),
            direction: None,
            value: None,
            value_via_w2: None,
            coefficients: Some(fit.quartic.coeffs),
            held_out_residual: Some(held_out),
            w1_max: fold(&|s| s.w1.abs()),
            route_residual: fold(&|s| route_residual(s.value, s.via_w2)),
            route_residual_scaled: fold(&|s| route_residual(s.value, ROUTE_FACTOR * s.via_w2)),
        };
        Ok((report, fit.quartic.max_abs().max(size)))
    }
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish.
fn route_residual(a: f64, b: f64) -> f64 {
    let size = a.abs().max(b.abs());
    if size == 0.0 {
        0.0
    } else {
        (a - b).abs() / size
    }
}

fn conformal_residual(a: &QuadraticForm5, b: &QuadraticForm5) -> f64 {
    let (x, y) = (a.m / a.m.norm(), b.m / b.m.norm());
    (x - y).norm().min((x + y).norm())
}

fn form_report(f: &QuadraticForm5) -> FormReport {
    let (p, n, z) = cone::signature(f);
    FormReport { matrix: std::array::from_fn(|r| std::array::from_fn(|c| f.m[(r, c)])), signature: [p, n, z] }
}
