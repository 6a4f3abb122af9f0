#![allow(dead_code)]

use dist25::abnormal::CotangentPoint;
use dist25::expr::parse_expression;
use dist25::frame::{AdaptedFrame, Distribution};
use dist25::models;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Model {
    pub name: &'static str,
    pub dist: Distribution,
    pub flat: bool,
}

impl Model {
    pub fn frame(&self) -> AdaptedFrame {
        AdaptedFrame::build(&self.dist)
    }

    /// Random base point in a region where the growth vector is (2,3,5).
    /// The Monge cubic degenerates on `q = 0`, so its `q` stays in [0.5, 1.5].
    pub fn base_point(&self, rng: &mut ChaCha8Rng) -> [f64; 5] {
        let mut p = [0.0; 5];
        for v in p.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        if self.name.starts_with("monge-q3") {
            p[3] = rng.random_range(0.5..1.5);
        }
        p
    }

    pub fn lambda(&self, rng: &mut ChaCha8Rng) -> CotangentPoint {
        let q = self.base_point(rng);
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r: f64 = rng.random_range(0.5..2.0);
        CotangentPoint::new(q, r * angle.cos(), r * angle.sin()).unwrap()
    }
}

pub fn corpus() -> Vec<Model> {
    vec![
        Model { name: "flat", dist: models::flat(), flat: true },
        Model { name: "monge-q2", dist: models::monge(2), flat: true },
        Model { name: "monge-q3", dist: models::monge(3), flat: false },
        Model { name: "monge-q3-mixed", dist: mixed_monge(), flat: false },
    ]
}

/// Monge cubic in the frame `(X₁ + (x/4)X₂, (p/3)X₁ + X₂)`.
pub fn mixed_monge() -> Distribution {
    let e = |s: &str| parse_expression(s, &models::MONGE_COORDS).unwrap();
    models::change_basis_expr(&models::monge(3), [[e("1"), e("x/4")], [e("p/3"), e("1")]])
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
